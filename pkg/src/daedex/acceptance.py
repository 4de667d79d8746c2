"""Acceptance battery: one pass/fail row per criterion, runtime limits included."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import examples as ex
from .battery import airy_fit, halfline_norms
from .generators import equality_suite, random_dissipative_pencil, random_isomorphism, random_regular_pencil
from .indices import (
    check_dissipative_structure,
    chain_index,
    differentiation_index,
    exact_report,
    nilpotency_index,
)
from .pencil import quasi_weierstrass
from .perturb import DEFAULT_N_LIST, perturbation_probe
from .probe import (
    PencilEvaluator,
    SamplePlan,
    default_plan,
    estimate_radiality_index,
    estimate_resolvent_index,
    fit_polynomial_growth,
    radiality_profile,
)

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_suite"]

EXACT_KEYS = ("nilpotency", "chain", "differentiation", "resolvent", "radiality")


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    runtime: float
    limit: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:>2} {self.name}: {self.detail} ({self.runtime:.1f}s / {self.limit:g}s)"


def _exact_values(p, seed=42):
    rep = exact_report(p, seed=seed)
    return {k: rep.entries[k].value for k in EXACT_KEYS}, rep


def c1_equality(seed, quick):
    suite = equality_suite(seed)
    bad = []
    for i, b in enumerate(suite):
        vals, rep = _exact_values(b.pencil, seed)
        want = {"nilpotency": b.nu, "chain": b.nu, "differentiation": b.nu, "resolvent": b.nu,
                "radiality": b.nu - 1}
        if vals != want:
            bad.append(f"#{i} nu={b.nu} got {vals}")
    ok = not bad
    return ok, f"{len(suite) - len(bad)}/{len(suite)} exact; " + ("; ".join(bad[:3]) or "all match")


def c2_estimators(seed, quick):
    suite = equality_suite(seed)
    count = 30 if quick else 60
    good, bad = 0, []
    for i, b in enumerate(suite):
        plan = default_plan(b.pencil, count, seed)
        ev = PencilEvaluator(b.pencil, plan.omega)
        r = estimate_resolvent_index(ev, plan)
        q = estimate_radiality_index(ev, plan, p_max=b.nu + 1)
        if r.is_value and q.is_value and r.value == b.nu and q.value == b.nu - 1:
            good += 1
        else:
            bad.append(f"#{i} nu={b.nu}: res {r}, rad {q}")
    return good >= 48, f"{good}/{len(suite)} estimates match (need >= 48)" + ("; " + "; ".join(bad[:3]) if bad else "")


def c3_perturbation(seed, quick):
    rng = np.random.default_rng(seed)
    need = (DEFAULT_N_LIST[-1] / DEFAULT_N_LIST[0]) ** 0.9
    parts, ok = [], True
    for nu in (2, 3):
        for _ in range(2):
            d = quasi_weierstrass(random_regular_pencil(rng, nu).pencil)
            low = perturbation_probe(d, nu - 1)
            top = perturbation_probe(d, nu)
            growth = low[-1] / low[0]
            spread = max(top) / min(top)
            ok &= growth >= need and spread < 10
            parts.append(f"nu={nu}: growth {growth:.1f}, spread {spread:.2f}")
    return ok, f"need growth >= {need:.1f}, spread < 10; " + "; ".join(parts)


def c4_heat(seed, quick):
    n = 50
    p = ex.build_heat_hessenberg(n)
    nil = nilpotency_index(p, seed=seed)
    plan = default_plan(p, 30 if quick else 60, seed)
    rad = estimate_radiality_index(PencilEvaluator(p, plan.omega), plan)
    err = max(abs(ex.heat_transfer(p, s) - 1 / s) for s in (1.0, 10.0))
    ok = nil.value == 2 and rad.is_value and rad.value == 1 and err <= 5 / n ** 2
    return ok, f"nilpotency {nil.value}, radiality estimate {rad}, max |G_h - 1/s| {err:.2e} (<= {5 / n ** 2:.1e})"


def c5_diag(seed, quick):
    K = 500
    s = np.geomspace(10, 1e4, 30 if quick else 60)
    fit = fit_polynomial_growth([(z, abs(ex.diag_G(z, K))) for z in s])
    slope_ok = abs(fit.exponent - 1.0) <= 0.05
    worst = min(ex.diag_G(1 + 1j * m * m, K).real / ex.diag_lower_bound(1.0, m) for m in range(1, 31))
    ok = slope_ok and worst >= 1
    return ok, f"slope {fit.exponent:.4f} (1 +- 0.05), min Re G / bound over n<=30: {worst:.3f}"


def c6_transport(seed, quick):
    p = ex.build_transport(200)
    plan = default_plan(p, 30 if quick else 60, seed)
    r = estimate_resolvent_index(PencilEvaluator(p, plan.omega, backend="double"), plan)
    diff = differentiation_index(p, mu_max=6)
    note = "continuous system has no nilpotency index; value describes the discretization"
    ok = r.is_value and r.value == 2 and diff.is_value
    return ok, f"resolvent estimate {r}, differentiation {diff} ({note})"


def c7_airy(seed, quick):
    _, ev = ex.build_airy(20, 400)
    slope, _, _ = airy_fit(ev)
    plan = ex.example_plan("airy", count=30 if quick else 60, seed=seed)
    r = estimate_resolvent_index(ev, plan)
    ok = abs(slope - 4 / 3) <= 0.1 * 4 / 3 and r.kind == "superpolynomial"
    return ok, f"slope {slope:.4f} (4/3 +- 10%), estimate {r.kind}"


def c8_halfline(seed, quick):
    L, n = 50.0, 2000
    ev = ex.halfline_evaluator(L, n)
    rows = halfline_norms(ev)
    short = [(p, lam, v / b) for p, lam, v, b in rows if v < 0.9 * b]
    plan = ex.example_plan("halfline", n=n, L=L, count=30 if quick else 60, seed=seed)
    r = estimate_resolvent_index(ev, plan)
    q = estimate_radiality_index(ev, plan, p_max=3)
    ok = not short and r.is_value and r.value == 1 and q.kind == "no_index"
    miss = ", ".join(f"(p={p}, lam={lam:g}): {x:.3f}" for p, lam, x in short)
    return ok, (f"{9 - len(short)}/9 products >= 0.9 bound" + (f" [short: {miss}]" if miss else "")
                + f"; resolvent estimate {r}; radiality {q.kind} up to p=3")


def c9_dissipative(seed, quick):
    rng = np.random.default_rng(seed)
    pencils = [random_dissipative_pencil(rng, int(rng.integers(6, 20)), hessenberg=bool(i % 2))
               for i in range(10 if quick else 20)]
    pencils += [ex.build_diag_pencil(40), ex.build_piezo_beam(20, form="energy")]
    checked, over = 0, []
    for p in pencils:
        if not check_dissipative_structure(p).applies:
            continue
        checked += 1
        nu = quasi_weierstrass(p).nilpotency_degree
        plan = default_plan(p, 30, seed)
        est = estimate_resolvent_index(PencilEvaluator(p, plan.omega), plan)
        if nu > 2 or not est.is_value or est.value > 2:
            over.append(f"{p.label}: exact {nu}, estimate {est}")
    K = 500
    big = estimate_resolvent_index(ex.diag_evaluator(K), ex.example_plan("diag_l2", seed=seed))
    if not big.is_value or big.value > 2:
        over.append(f"diag K={K}: estimate {big}")
    ok = not over and checked == len(pencils)
    return ok, f"{checked} dissipative pencils + diag K={K}; over the cap: {'; '.join(over) or 'none'}"


def c10_piezo(seed, quick):
    p = ex.build_piezo_beam(60)
    plan = default_plan(p, 30 if quick else 60, seed)
    prof = radiality_profile(PencilEvaluator(p, plan.omega, backend="double"), plan, 0)
    vals = [v for _, r, l in prof["sweep"] for v in (r, l)]
    var = max(vals) / min(vals)
    return var < 2, f"(lambda - omega)|R^E(lambda)| varies by {var:.4f} over [{prof['lam_lo']:.3g}, {prof['lam_hi']:.3g}]"


def c11_equivalence(seed, quick):
    rng = np.random.default_rng(seed)
    suite = equality_suite(seed)[:10]
    trials = 5 if quick else 10
    bad = []
    for b in suite:
        base, _ = _exact_values(b.pencil, seed)
        for _ in range(trials):
            P = random_isomorphism(rng, b.pencil.n)
            Q = random_isomorphism(rng, b.pencil.n)
            vals, _ = _exact_values(b.pencil.transformed(Q, P), seed)
            if vals != base:
                bad.append(f"nu={b.nu}: {base} -> {vals}")
    total = len(suite) * trials
    return not bad, f"{total - len(bad)}/{total} transformed pencils keep all exact indices" + (
        "; " + "; ".join(bad[:2]) if bad else "")


CRITERIA = (
    (1, "finite-dimensional equality", 30.0, c1_equality),
    (2, "estimator agreement", 120.0, c2_estimators),
    (3, "perturbation index", 10.0, c3_perturbation),
    (4, "heat Hessenberg", 5.0, c4_heat),
    (5, "diagonal l2 system", 5.0, c5_diag),
    (6, "transport", 10.0, c6_transport),
    (7, "complex Airy", 60.0, c7_airy),
    (8, "half-line", 60.0, c8_halfline),
    (9, "dissipative cap", 30.0, c9_dissipative),
    (10, "piezo beam plateau", 10.0, c10_piezo),
    (11, "equivalence invariance", 30.0, c11_equivalence),
)


def run_criterion(number: int, seed: int = 42, quick: bool = False) -> CriterionResult:
    num, name, limit, fn = next(c for c in CRITERIA if c[0] == number)
    t0 = time.perf_counter()
    try:
        ok, detail = fn(seed, quick)
    except Exception as exc:  # failures are rows, not crashes
        ok, detail = False, f"error: {type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    if dt > limit:
        ok, detail = False, detail + f"; runtime {dt:.1f}s over {limit:g}s"
    return CriterionResult(num, name, bool(ok), detail, dt, limit)


def run_suite(seed: int = 42, quick: bool = False, only=None, progress=None) -> list[CriterionResult]:
    out = []
    for num, *_ in CRITERIA:
        if only and num not in only:
            continue
        r = run_criterion(num, seed, quick)
        if progress:
            progress(r)
        out.append(r)
    return out
