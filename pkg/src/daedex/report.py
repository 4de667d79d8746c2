"""Writing reports, CSV series and figures."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .indices import INDEX_NAMES, SCHEMA  # noqa: E402

__all__ = ["format_number", "series_to_csv", "write_run", "render_figure", "summary_table", "suite_to_json"]


def format_number(v) -> str:
    """17 significant digits for floats, plain text otherwise.

    Examples
    --------
    >>> format_number(0.1)
    '0.10000000000000001'
    >>> format_number(3)
    '3'
    """
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def series_to_csv(series) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(series.columns)
    for row in series.rows:
        w.writerow([format_number(v) for v in row])
    return buf.getvalue()


def render_figure(series, path: Path) -> Path | None:
    """Plot a series described by its ``plot`` spec; returns the file or ``None``."""
    spec = series.plot
    if not spec:
        return None
    cols = list(series.columns)
    data = np.array(series.rows, dtype=float)
    if data.size == 0:
        return None
    xi, yi = cols.index(spec["x"]), cols.index(spec["y"])
    fig, ax = plt.subplots(figsize=(6, 4))
    if "group" in spec:
        gi = cols.index(spec["group"])
        for g in np.unique(data[:, gi]):
            sel = data[:, gi] == g
            ax.plot(data[sel, xi], data[sel, yi], "o-", ms=3, label=f"{spec['group']} = {g:g}")
        ax.legend(fontsize=8)
    else:
        ax.plot(data[:, xi], data[:, yi], "o-", ms=3, label=spec["y"])
        if "model" in cols:
            ax.plot(data[:, xi], data[:, cols.index("model")], "--", label="fit")
            ax.legend(fontsize=8)
        if "lower_bound" in cols:
            ax.plot(data[:, xi], data[:, cols.index("lower_bound")], "--", label="lower bound")
            ax.legend(fontsize=8)
    if spec.get("loglog"):
        ax.set_xscale("log")
        ax.set_yscale("log")
    elif spec.get("logy"):
        ax.set_yscale("log")
    ax.set_xlabel(spec["x"])
    ax.set_ylabel(spec["y"])
    ax.set_title(spec.get("title", series.name))
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


def write_run(run, outdir, stem: str, formats=("json", "csv"), figures: bool = True) -> list[Path]:
    """Write ``<stem>.json``, ``<stem>_<series>.csv`` and matching PNG figures."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out / f"{stem}.json"
        path.write_text(run.report.to_json())
        written.append(path)
    if "csv" in formats:
        for s in run.series:
            path = out / f"{stem}_{s.name}.csv"
            path.write_text(series_to_csv(s))
            written.append(path)
            if figures:
                fig = render_figure(s, out / f"{stem}_{s.name}.png")
                if fig is not None:
                    written.append(fig)
    return written


def _cell(entry) -> str:
    if entry is None:
        return "-"
    body = str(entry.value) if entry.kind == "value" else entry.kind
    return body + ("*" if entry.method == "estimated" else "") + ("!" if entry.flags else "")


def summary_table(report) -> str:
    """One line per index: exact value and estimate (``*`` estimated, ``!`` flagged)."""
    lines = [f"{report.label}", f"{'index':<20}{'exact':>10}{'estimate':>18}"]
    for name in INDEX_NAMES:
        e, s = report.entries.get(name), report.estimates.get(name)
        if e is None and s is None:
            continue
        lines.append(f"{name:<20}{_cell(e):>10}{_cell(s):>18}")
    for n in report.notes:
        lines.append(f"note: {n}")
    return "\n".join(lines) + "\n"


def suite_to_json(results) -> str:
    rows = [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail,
             "runtime_s": round(r.runtime, 1), "runtime_limit_s": r.limit} for r in results]
    return json.dumps({"schema": SCHEMA, "criteria": rows,
                       "all_passed": all(r.passed for r in results)}, indent=2, sort_keys=True) + "\n"
