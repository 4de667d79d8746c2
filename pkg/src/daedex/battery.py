"""Analysis batteries: one call per pencil or example, returning a report and data series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import examples as ex
from .indices import IndexReport, Value, check_dissipative_structure, exact_report
from .matrixkit import DEFAULT_TOL, RankTolerance
from .pencil import NotRegularError, Pencil, is_regular, quasi_weierstrass
from .perturb import closed_form_solution, estimate_perturbation_index
from .probe import (
    PencilEvaluator,
    SamplePlan,
    default_plan,
    estimate_complex_resolvent_index,
    estimate_radiality_index,
    estimate_resolvent_index,
)

__all__ = ["Series", "AnalysisRun", "analyze_pencil", "run_example", "airy_fit", "halfline_norms",
           "diag_line_estimate",
           "EXAMPLE_DEFAULTS"]

EXAMPLE_DEFAULTS = {
    "diag_l2": {"K": 500},
    "heat_hessenberg": {"n": 50},
    "transport": {"n": 200},
    "airy": {"L": 20.0, "n": 400},
    "halfline": {"L": 50.0, "n": 2000},
    "piezo_beam": {"n": 60},
}


@dataclass
class Series:
    """A table destined for CSV, optionally with a log-log figure."""

    name: str
    columns: tuple
    rows: list
    plot: dict | None = None


@dataclass
class AnalysisRun:
    report: IndexReport
    series: list = field(default_factory=list)
    pencil: Pencil | None = None
    checks: dict = field(default_factory=dict)


def _resolvent_series(name, samples, title):
    rows = [(z.real, z.imag, v) for z, v in samples]
    return Series(name, ("lambda_re", "lambda_im", "norm"), rows,
                  {"x": "lambda_re", "y": "norm", "loglog": True, "title": title})


def _radiality_series(profiles):
    rows = [(q["p"], lam, r, l) for q in profiles for lam, r, l in q["sweep"]]
    return Series("radiality_sweep", ("p", "lambda", "scaled_right", "scaled_left"), rows,
                  {"x": "lambda", "y": "scaled_right", "group": "p", "loglog": True,
                   "title": "scaled resolvent products on the diagonal"})


def _perturbation_series(rec):
    rows = [(n, pc, r) for pc, ratios in sorted(rec["ratios"].items()) for n, r in zip(rec["n_list"], ratios)]
    return Series("perturbation_ratios", ("n", "p_candidate", "ratio"), rows,
                  {"x": "n", "y": "ratio", "group": "p_candidate", "loglog": True,
                   "title": "perturbation ratios"})


def _estimate_battery(rep, series, ev, plan, p_max_rad=6, complex_lines=True, quick=False):
    count_c = 15 if quick else 30
    rec = {}
    rep.estimates["resolvent"] = estimate_resolvent_index(ev, plan, rec)
    series.append(_resolvent_series("resolvent_real", rec["samples"], "resolvent norm on the real axis"))
    if complex_lines:
        crec = {}
        sig = [plan.omega + 1.0, plan.omega + 10.0]
        rep.estimates["complex_resolvent"] = estimate_complex_resolvent_index(
            ev, sig, plan.lam_max, count_c, plan=plan, record=crec)
        rows = [(z.real, z.imag, v) for key, (samples, _) in crec["lines"].items() if key != "real"
                for z, v in samples]
        series.append(Series("resolvent_lines", ("lambda_re", "lambda_im", "norm"), rows,
                             {"x": "lambda_im", "y": "norm", "group": "lambda_re", "loglog": True,
                              "title": "resolvent norm on vertical lines"}))
    if ev.supports_products:
        rrec = {}
        rep.estimates["radiality"] = estimate_radiality_index(ev, plan, p_max_rad, record=rrec)
        series.append(_radiality_series(rrec["profiles"]))


def analyze_pencil(p: Pencil, tol: RankTolerance = DEFAULT_TOL, seed: int = 42, quick: bool = False,
                   plan: SamplePlan | None = None, backend: str = "auto") -> AnalysisRun:
    """Regularity, exact indices, growth estimates and the perturbation estimate.

    Raises
    ------
    NotRegularError
    """
    if not is_regular(p, tol, seed).regular:
        raise NotRegularError("pencil not regular")
    rep = exact_report(p, tol, seed=seed)
    d = quasi_weierstrass(p, tol)
    count = 30 if quick else 60
    plan = plan or default_plan(p, count, seed)
    rep.tolerances["plan"] = plan.to_dict()
    series = []
    ev = PencilEvaluator(p, plan.omega, backend=backend)
    _estimate_battery(rep, series, ev, plan, quick=quick)
    prec = {}
    n_list = (4, 16, 64, 256) if quick else (4, 8, 16, 32, 64, 128, 256)
    pert = estimate_perturbation_index(d, n_list=n_list, record=prec)
    rep.entries["perturbation"] = pert
    if prec:
        series.append(_perturbation_series(prec))
    for k in ("resolvent", "radiality"):
        e, s = rep.entries.get(k), rep.estimates.get(k)
        if e is not None and s is not None and s.is_value and e.is_value and e.value != s.value:
            rep.notes.append(f"{k}: estimate {s.value} differs from exact {e.value}")
    return AnalysisRun(rep, series, p)


# --------------------------------------------------------------------------
# examples


def run_example(desc: ex.ExampleDescriptor, tol: RankTolerance = DEFAULT_TOL, seed: int = 42,
                quick: bool = False) -> AnalysisRun:
    """Build an example and run its default battery."""
    prm = dict(EXAMPLE_DEFAULTS[desc.name])
    for key in ("n", "K", "L"):
        if getattr(desc, key) is not None:
            prm[key] = getattr(desc, key)
    runner = globals()["_run_" + desc.name]
    run = runner(prm, desc, tol, seed, quick)
    run.report.tolerances["example"] = {"name": desc.name, **prm}
    return run


def _run_heat_hessenberg(prm, desc, tol, seed, quick):
    p = ex.build_heat_hessenberg(int(prm["n"]))
    run = analyze_pencil(p, tol, seed, quick)
    n = int(prm["n"])
    err = {s: abs(ex.heat_transfer(p, s) - 1 / s) for s in (1.0, 10.0)}
    run.checks["transfer_error"] = err
    run.report.notes.append("|G_h(s) - 1/s|: " + ", ".join(f"s={s:g}: {v:.3e}" for s, v in err.items())
                            + f" (5/n^2 = {5 / n ** 2:.3e})")
    return run


def _run_transport(prm, desc, tol, seed, quick):
    p = ex.build_transport(int(prm["n"]))
    plan = default_plan(p, 30 if quick else 60, seed)
    run = analyze_pencil(p, tol, seed, quick, plan=plan, backend="double")
    run.report.notes.append("the continuous transport system has no nilpotency index; "
                            "the discrete surrogate has one, so nilpotency and chain values "
                            "describe the discretization only")
    return run


def _run_piezo_beam(prm, desc, tol, seed, quick):
    n = int(prm["n"])
    p = ex.build_piezo_beam(n, desc.piezo)
    run = analyze_pencil(p, tol, seed, quick, backend="double")
    pe = ex.build_piezo_beam(n, desc.piezo, form="energy")
    run.report.notes.append("dissipative structure: physical form "
                            f"{check_dissipative_structure(p).applies}, energy form "
                            f"{check_dissipative_structure(pe).applies}")
    d = quasi_weierstrass(p, tol)
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, 101)
    tr = closed_form_solution(d, rng.standard_normal(d.d1), None, grid=t, original=True)
    H = ex.piezo_energy(tr.x.real, n, desc.piezo)
    rise = float(np.max(np.diff(H)) / H[0])
    run.checks["energy_max_relative_rise"] = rise
    run.report.notes.append(f"energy along an undisturbed trajectory: max relative rise {rise:.2e}")
    run.series.append(Series("energy", ("t", "energy"), list(zip(t, H)),
                             {"x": "t", "y": "energy", "loglog": False, "title": "beam energy"}))
    return run


def _run_diag_l2(prm, desc, tol, seed, quick):
    K = int(prm["K"])
    ev = ex.diag_evaluator(K)
    plan = ex.example_plan("diag_l2", count=30 if quick else 60, seed=seed)
    rep = IndexReport(f"diag_l2 K={K}", {}, {"plan": plan.to_dict()})
    rec = {}
    rep.estimates["resolvent"] = estimate_resolvent_index(ev, plan, rec)
    series = [_resolvent_series("transfer_real", rec["samples"], "|G(s)| on the real axis")]
    crec = {}
    rep.estimates["complex_resolvent"] = diag_line_estimate(K, crec)
    series.append(_resolvent_series("transfer_line_sigma1", crec["lines"][1.0][0], "|G(1 + i t)|, t = n^2"))
    rows, ok = [], True
    for m in range(1, 31):
        g = ex.diag_G(1 + 1j * m * m, K).real
        b = ex.diag_lower_bound(1.0, m)
        ok &= g >= b
        rows.append((m, g, b))
    series.append(Series("transfer_line", ("n", "re_G", "lower_bound"), rows,
                         {"x": "n", "y": "re_G", "loglog": True, "title": "Re G(1 + i n^2)"}))
    rep.notes.append(f"Re G(1 + i n^2) >= 2 n^(5/2) / 80 for n <= 30: {bool(ok)}")
    small = ex.build_diag_pencil(min(K, 40))
    sub = exact_report(small, tol, seed=seed)
    for k, v in sub.entries.items():
        rep.entries[k] = Value(v.value, v.method, f"truncation K={min(K, 40)}: " + v.evidence, v.flags)
    rep.notes.append(f"dissipative structure: {check_dissipative_structure(small).applies}")
    return AnalysisRun(rep, series, small, {"line_bound_holds": bool(ok)})


def diag_line_estimate(K: int, record: dict | None = None, n_lo: int = 50, n_hi: int | None = None):
    """Complex estimate from ``|G(1 + i n^2)|`` for ``n`` in ``[n_lo, K/2]``."""
    n_hi = K // 2 if n_hi is None else n_hi
    n = np.unique(np.geomspace(n_lo, n_hi, 30).round().astype(int))
    return estimate_complex_resolvent_index(ex.diag_evaluator(K), [1.0], 0.0, t_values=n.astype(float) ** 2,
                                            record=record)


def airy_fit(ev, lo=2.0, hi=8.0, count=13):
    """Slope of ``log |R(lam)|`` against ``lam^(3/2)`` on ``[lo, hi]``."""
    lam = np.linspace(lo, hi, count)
    r = np.array([ev.resolvent_norm(z) for z in lam])
    slope, icpt = np.polyfit(lam ** 1.5, np.log(r), 1)
    return float(slope), float(icpt), list(zip(lam, r))


def _run_airy(prm, desc, tol, seed, quick):
    L, n = float(prm["L"]), int(prm["n"])
    _, ev = ex.build_airy(L, n)
    plan = ex.example_plan("airy", count=30 if quick else 60, seed=seed)
    rep = IndexReport(f"airy L={L:g} n={n}", {}, {"plan": plan.to_dict()})
    rec = {}
    rep.estimates["resolvent"] = estimate_resolvent_index(ev, plan, rec)
    slope, icpt, pts = airy_fit(ev)
    rep.notes.append(f"slope of log|R| against lambda^(3/2) on [2, 8]: {slope:.4f} (model 4/3)")
    series = [_resolvent_series("resolvent_real", rec["samples"], "Airy resolvent norm"),
              Series("airy_fit", ("lambda", "norm", "model"),
                     [(z, r, math.exp(icpt + slope * z ** 1.5)) for z, r in pts],
                     {"x": "lambda", "y": "norm", "loglog": False, "logy": True,
                      "title": "Airy resolvent against exp(c lambda^(3/2))"})]
    return AnalysisRun(rep, series, None, {"slope": slope})


def halfline_norms(ev, lams=(1.0, 2.0, 4.0), ps=(0, 1, 2)):
    """``(p, lam, |((lam E - A)^{-1} E)^(p+1)|, bound)`` rows."""
    return [(p, lam, ev.product_norm([lam] * (p + 1), "right"), ex.halfline_bound(lam, p))
            for p in ps for lam in lams]


def _run_halfline(prm, desc, tol, seed, quick):
    L, n = float(prm["L"]), int(prm["n"])
    ev = ex.halfline_evaluator(L, n)
    plan = ex.example_plan("halfline", n=n, L=L, count=30 if quick else 60, seed=seed)
    rep = IndexReport(f"halfline L={L:g} n={n}", {}, {"plan": plan.to_dict()})
    series = []
    _estimate_battery(rep, series, ev, plan, p_max_rad=3, complex_lines=False, quick=quick)
    rows = halfline_norms(ev)
    series.append(Series("halfline_products", ("p", "lambda", "norm", "bound"), rows, None))
    rep.notes.append("products against (p+1)/2^(p+1) lambda^(3/2-(p+1)): "
                     + ", ".join(f"p={p} lam={lam:g}: {v / b:.3f}" for p, lam, v, b in rows))
    return AnalysisRun(rep, series, ev.pencil, {"products": rows})

