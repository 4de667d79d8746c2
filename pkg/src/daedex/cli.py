"""Command-line front end.

::

    daedex analyze pencil.json
    daedex analyze E.mtx A.mtx --format csv
    daedex example heat_hessenberg --n 50
    daedex suite --quick
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .examples import EXAMPLE_NAMES, ExampleDescriptor
from .matrixkit import RankTolerance
from .pencil import NotRegularError, PencilError, load_pencil

log = logging.getLogger("daedex")

DEFAULT_OUT = "daedex_out"


@dataclass(frozen=True)
class RunConfig:
    tol: RankTolerance
    seed: int
    out: Path
    formats: tuple
    figures: bool
    quick: bool


def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    sup = argparse.SUPPRESS
    g.add_argument("--seed", type=int, default=sup, help="random seed (default 42)")
    g.add_argument("--tol", type=float, default=sup, help="relative rank tolerance (default 1e-10)")
    g.add_argument("--atol", type=float, default=sup, help="absolute rank tolerance (default none)")
    g.add_argument("--out", default=sup, help=f"output directory (default $DAEDEX_OUT or ./{DEFAULT_OUT})")
    g.add_argument("--format", action="append", choices=("json", "csv"), default=sup,
                   help="output format; repeat for both (default both)")
    g.add_argument("--no-figures", action="store_true", default=sup, help="skip PNG figures next to CSV files")
    g.add_argument("--quick", action="store_true", default=sup, help="halve sample counts")
    g.add_argument("-v", "--verbose", action="store_true", default=sup)
    return g


def build_parser() -> argparse.ArgumentParser:
    g = _global_flags()
    ap = argparse.ArgumentParser(prog="daedex", parents=[g],
                                 description="Index analysis of linear differential-algebraic pencils.")
    ap.add_argument("--version", action="version", version=f"daedex {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[g], help="analyze a pencil file")
    a.add_argument("path", help="pencil JSON, E.mtx (with A.mtx) or a directory holding both")
    a.add_argument("a_path", nargs="?", help="A.mtx when PATH is E.mtx")
    e = sub.add_parser("example", parents=[g], help="build an example and run its battery")
    e.add_argument("name", help="one of: " + ", ".join(EXAMPLE_NAMES))
    e.add_argument("--n", type=int, help="grid size")
    e.add_argument("--K", type=int, help="truncation level (diag_l2)")
    e.add_argument("--L", type=float, help="domain length (airy, halfline)")
    s = sub.add_parser("suite", parents=[g], help="run the acceptance battery")
    s.add_argument("--only", help="comma-separated criterion numbers")
    return ap


def _config(ns) -> RunConfig:
    out = getattr(ns, "out", None) or os.environ.get("DAEDEX_OUT") or DEFAULT_OUT
    tol = RankTolerance(getattr(ns, "tol", 1e-10), getattr(ns, "atol", None))
    formats = tuple(dict.fromkeys(getattr(ns, "format", None) or ("json", "csv")))
    return RunConfig(tol, getattr(ns, "seed", 42), Path(out), formats,
                     not getattr(ns, "no_figures", False), getattr(ns, "quick", False))


def _emit(run, cfg: RunConfig, stem: str) -> None:
    from .report import summary_table, write_run

    files = write_run(run, cfg.out, stem, cfg.formats, cfg.figures)
    sys.stdout.write(summary_table(run.report))
    for f in files:
        print(f"wrote {f}")


def cmd_analyze(ns, cfg: RunConfig) -> int:
    from .battery import analyze_pencil

    try:
        p = load_pencil(ns.path, ns.a_path)
    except PencilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        run = analyze_pencil(p, cfg.tol, cfg.seed, cfg.quick)
    except NotRegularError:
        print("error: pencil not regular", file=sys.stderr)
        return 2
    stem = Path(ns.path.rstrip("/")).stem or "pencil"
    _emit(run, cfg, stem)
    return 0


def cmd_example(ns, cfg: RunConfig) -> int:
    from .battery import run_example
    from .pencil import pencil_to_json

    if ns.name not in EXAMPLE_NAMES:
        print(f"error: unknown example {ns.name!r}; choose from {', '.join(EXAMPLE_NAMES)}", file=sys.stderr)
        return 1
    try:
        desc = ExampleDescriptor(ns.name, ns.n, ns.K, ns.L)
        run = run_example(desc, cfg.tol, cfg.seed, cfg.quick)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(run, cfg, ns.name)
    if run.pencil is not None and "json" in cfg.formats:
        import json

        path = cfg.out / f"{ns.name}_pencil.json"
        path.write_text(json.dumps(pencil_to_json(run.pencil)) + "\n")
        print(f"wrote {path}")
    return 0


def cmd_suite(ns, cfg: RunConfig) -> int:
    from .acceptance import run_suite
    from .report import suite_to_json

    only = None
    if ns.only:
        try:
            only = {int(x) for x in ns.only.split(",")}
        except ValueError:
            print(f"error: bad --only list {ns.only!r}", file=sys.stderr)
            return 1
    results = run_suite(cfg.seed, cfg.quick, only, progress=lambda r: print(r.line(), flush=True))
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "suite.json"
    path.write_text(suite_to_json(results))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed; wrote {path}")
    return 0 if passed == len(results) else 1


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        # usage errors map to exit code 1; --help and --version keep 0
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = _config(ns)
    handler = {"analyze": cmd_analyze, "example": cmd_example, "suite": cmd_suite}[ns.command]
    return handler(ns, cfg)


if __name__ == "__main__":
    sys.exit(main())
