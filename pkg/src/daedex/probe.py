"""Empirical index estimation from resolvent-norm samples.

Resolvent growth is fitted on a log-log scale along the real axis or along
vertical lines; radiality is probed by checking whether scaled products of
E-resolvents stay bounded across the top two decades of a sample plan.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .indices import IndexValue, NoIndex, Superpolynomial, Value
from .matrixkit import smallest_singular_value, spectral_norm
from .mp import MPPencil, PrecisionExhausted
from .pencil import Pencil, ResolventSetError, quasi_weierstrass

__all__ = [
    "SamplePlan",
    "GrowthFit",
    "NormEvaluator",
    "PencilEvaluator",
    "FunctionEvaluator",
    "fit_polynomial_growth",
    "index_from_exponent",
    "default_plan",
    "resolvent_samples",
    "estimate_resolvent_index",
    "estimate_complex_resolvent_index",
    "radiality_profile",
    "estimate_radiality_index",
    "INTEGER_SLACK",
]

log = logging.getLogger(__name__)

#: Distance from an integer within which an exponent counts as that integer.
INTEGER_SLACK = 0.15
#: Split-slope gap signalling faster-than-polynomial growth.
SUPERPOLY_GAP = 0.5
#: Required goodness of fit for a Polynomial(k) verdict.
MIN_R2 = 0.99
#: Allowed growth of B(p) between the two comparison points.
PLATEAU_FACTOR = 2.0


# --------------------------------------------------------------------------
# plans and fits


@dataclass(frozen=True)
class SamplePlan:
    """Logarithmically spaced real sample points above a shift ``omega``.

    Examples
    --------
    >>> SamplePlan.default(0.0).lambdas()[[0, -1]]
    array([     10., 1000000.])
    """

    omega: float
    lam_min: float
    lam_max: float
    count: int = 60
    seed: int = 42

    def __post_init__(self):
        if not self.lam_min > self.omega:
            raise ValueError("lam_min must exceed omega")
        if self.lam_max / self.lam_min < 100 * (1 - 1e-12):
            raise ValueError("plan must span at least two decades")
        if self.count < 10:
            raise ValueError("plan needs at least 10 points")

    @classmethod
    def default(cls, omega: float, count: int = 60, seed: int = 42) -> "SamplePlan":
        return cls(omega, 10 * (omega + 1), 1e6 * (omega + 1), count, seed)

    def lambdas(self) -> np.ndarray:
        return np.geomspace(self.lam_min, self.lam_max, self.count)

    def with_count(self, count: int) -> "SamplePlan":
        return SamplePlan(self.omega, self.lam_min, self.lam_max, count, self.seed)

    def to_dict(self) -> dict:
        return {"omega": self.omega, "lam_min": self.lam_min, "lam_max": self.lam_max,
                "count": self.count, "seed": self.seed}


def default_plan(p: Pencil, count: int = 60, seed: int = 42) -> SamplePlan:
    """``omega = max(0, max Re of finite eigenvalues) + 1``, ``lambda in [10(omega+1), 1e6(omega+1)]``."""
    d = quasi_weierstrass(p)
    ev = d.finite_eigenvalues()
    top = float(ev.real.max()) if ev.size else 0.0
    # real parts at rounding level (skew blocks) count as zero
    if ev.size and abs(top) <= 1e-8 * max(1.0, float(np.abs(ev).max())):
        top = 0.0
    return SamplePlan.default(max(0.0, top) + 1.0, count, seed)


@dataclass(frozen=True)
class GrowthFit:
    """Least-squares line through ``(log |lambda|, log norm)``.

    ``verdict`` is one of ``"polynomial"`` (with ``degree``), ``"bounded"``,
    ``"superpolynomial"`` or ``"inconclusive"``.
    """

    exponent: float
    intercept: float
    max_residual: float
    r_squared: float
    verdict: str
    degree: int | None = None
    lower_slope: float = float("nan")
    upper_slope: float = float("nan")

    def __post_init__(self):
        if self.verdict == "polynomial":
            if abs(self.exponent - self.degree) > INTEGER_SLACK or self.r_squared < MIN_R2:
                raise ValueError("polynomial verdict outside its acceptance window")

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("exponent", "intercept", "max_residual", "r_squared",
                                           "verdict", "lower_slope", "upper_slope")}
        if self.degree is not None:
            d["degree"] = self.degree
        return {k: (_finite(v) if isinstance(v, float) else v) for k, v in d.items()}


def _finite(v):
    return v if math.isfinite(v) else None


def _line(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(slope), float(icpt)


def fit_polynomial_growth(samples, log_norms: bool = False) -> GrowthFit:
    """Fit ``norm ~ C |lambda|^exponent``.

    Verdicts, in order of precedence:

    * superpolynomial: the upper half of the range has a slope larger than the
      lower half by more than 0.5 and the residuals of the global line
      increase strictly from their minimum over the upper half to the end,
      with the upper slope itself above 0.15 (the norm grows);
    * bounded: exponent below 0.15;
    * polynomial(k): ``|exponent - k| <= 0.15`` and ``r^2 >= 0.99``;
    * inconclusive otherwise.

    Parameters
    ----------
    samples : sequence of (lambda, norm)
    log_norms : bool
        Second entries are natural logarithms of the norms (for norms beyond
        the floating-point range).

    Examples
    --------
    >>> lam = np.geomspace(10, 1e4, 20)
    >>> fit_polynomial_growth(list(zip(lam, lam ** 2))).degree
    2
    """
    lam = np.abs(np.array([s[0] for s in samples], dtype=complex))
    nrm = np.array([s[1] for s in samples], dtype=float)
    if lam.size < 10:
        raise ValueError("need at least 10 samples")
    if np.any(~np.isfinite(nrm)) or (not log_norms and np.any(nrm <= 0)):
        raise ValueError("norms must be positive and finite")
    order = np.argsort(lam)
    x = np.log(lam[order])
    y = nrm[order] if log_norms else np.log(nrm[order])
    slope, icpt = _line(x, y)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-24 * max(1.0, float(np.sum(y ** 2))) else 1 - float(np.sum(resid ** 2)) / ss_tot
    half = x.size // 2
    lo_slope, _ = _line(x[:half], y[:half])
    hi_slope, _ = _line(x[half:], y[half:])
    common = dict(exponent=slope, intercept=icpt, max_residual=float(np.max(np.abs(resid))),
                  r_squared=r2, lower_slope=lo_slope, upper_slope=hi_slope)
    tail = resid[half:][int(np.argmin(resid[half:])):]
    if (hi_slope - lo_slope > SUPERPOLY_GAP and hi_slope > INTEGER_SLACK and tail.size > 1
            and np.all(np.diff(tail) > 0)):
        return GrowthFit(verdict="superpolynomial", **common)
    if slope < INTEGER_SLACK:
        return GrowthFit(verdict="bounded", **common)
    k = int(round(slope))
    if abs(slope - k) <= INTEGER_SLACK and r2 >= MIN_R2:
        return GrowthFit(verdict="polynomial", degree=k, **common)
    return GrowthFit(verdict="inconclusive", **common)


def index_from_exponent(exponent: float) -> tuple[int, tuple]:
    """Smallest ``p`` with ``|lambda|^exponent <= C |lambda|^(p-1)``, with 0.15 slack.

    Returns the index and warning flags. An exponent of ``-1`` gives 0, a
    bounded norm gives 1, linear growth gives 2; exponents away from an
    integer are rounded up and flagged.
    """
    p = max(0, math.ceil(exponent - INTEGER_SLACK) + 1)
    flags = ()
    if abs(exponent - round(exponent)) > INTEGER_SLACK:
        flags = (f"exponent {exponent:.3f} not near an integer",)
    return p, flags


# --------------------------------------------------------------------------
# evaluators


class NormEvaluator:
    """Maps ``lambda`` to resolvent norms.

    Attributes
    ----------
    omega : float
        The resolvent set contains ``(omega, inf)`` (and the half-plane
        ``Re > omega`` for complex probes).
    lam_max_valid : float or None
        Upper end of the range where the evaluator represents the intended
        operator (discretization window).
    supports_products : bool
    """

    omega: float = 0.0
    lam_max_valid: float | None = None
    supports_products: bool = False
    label: str = ""

    def resolvent_norm(self, lam: complex) -> float:
        raise NotImplementedError

    def product_norm(self, lams, side: str = "right", atol: float = 0.0) -> float:
        """Norm of ``prod_k R^E(lam_k)`` (``side="right"``) or of left-E resolvents."""
        raise NotImplementedError(f"{type(self).__name__} has no product form")

    def check_plan(self, plan: SamplePlan):
        if plan.lam_min <= self.omega:
            raise ValueError(f"plan starts at {plan.lam_min} <= omega = {self.omega}")
        if self.lam_max_valid is not None and plan.lam_max > self.lam_max_valid * (1 + 1e-12):
            raise ValueError(f"plan ends at {plan.lam_max} beyond validity {self.lam_max_valid}")


class FunctionEvaluator(NormEvaluator):
    """Evaluator backed by a closed-form norm function."""

    def __init__(self, func, omega: float = 0.0, label: str = "", lam_max_valid=None):
        self.func = func
        self.omega = omega
        self.label = label
        self.lam_max_valid = lam_max_valid

    def resolvent_norm(self, lam):
        v = float(self.func(lam))
        if not math.isfinite(v):
            raise ResolventSetError(lam)
        return v


class PencilEvaluator(NormEvaluator):
    """Norms of resolvents of a finite pencil.

    Parameters
    ----------
    pencil : Pencil
    omega : float
    backend : {"auto", "multiprecision", "double", "sparse"}
        ``auto`` picks interval arithmetic up to dimension 100, dense double
        up to 600 and sparse factorizations beyond.
    weights_x, weights_z : array_like, optional
        Diagonal inner-product weights on the state and equation spaces; norms
        are taken in the weighted spaces.
    lam_max_valid : float, optional
    """

    supports_products = True

    def __init__(self, pencil: Pencil, omega: float, backend: str = "auto",
                 weights_x=None, weights_z=None, lam_max_valid=None, label: str | None = None):
        self.pencil = pencil
        self.omega = float(omega)
        self.lam_max_valid = lam_max_valid
        self.label = pencil.label if label is None else label
        n = pencil.n
        E, A = pencil.E, pencil.A
        if weights_x is not None or weights_z is not None:
            wx = np.sqrt(np.ones(n) if weights_x is None else np.asarray(weights_x, float))
            wz = np.sqrt(np.ones(n) if weights_z is None else np.asarray(weights_z, float))
            E = (wz[:, None] * E) / wx[None, :]
            A = (wz[:, None] * A) / wx[None, :]
        self.E, self.A = E, A
        if backend == "auto":
            backend = "multiprecision" if n <= 100 else ("double" if n <= 600 else "sparse")
        if backend not in ("multiprecision", "double", "sparse"):
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self._mp = MPPencil(E, A) if backend == "multiprecision" else None
        if backend == "sparse":
            self._Es = scipy.sparse.csc_matrix(E)
            self._As = scipy.sparse.csc_matrix(A)
        self._cache = {}

    # ---- helpers
    def _dense_factor(self, lam, side):
        key = (complex(lam), side)
        if key not in self._cache:
            M = lam * self.E - self.A
            if smallest_singular_value(M) <= 100 * np.finfo(float).eps * spectral_norm(M):
                raise ResolventSetError(lam)
            X = np.linalg.inv(M)
            self._cache[key] = X @ self.E if side == "right" else self.E @ X
        return self._cache[key]

    def _lu(self, lam):
        key = ("lu", complex(lam))
        if key not in self._cache:
            M = (lam * self._Es - self._As).tocsc()
            try:
                self._cache[key] = scipy.sparse.linalg.splu(M.astype(complex))
            except RuntimeError as exc:
                raise ResolventSetError(lam) from exc
        return self._cache[key]

    def _sparse_norm(self, lams, kind):
        n = self.E.shape[0]
        lus = [self._lu(z) for z in lams]
        Es = self._Es

        def mv(v):
            v = np.asarray(v, dtype=complex).ravel()
            for lu in lus:
                if kind == "plain":
                    v = lu.solve(v)
                elif kind == "right":
                    v = lu.solve(Es @ v)
                else:
                    v = Es @ lu.solve(v)
            return v

        def rmv(v):
            v = np.asarray(v, dtype=complex).ravel()
            for lu in reversed(lus):
                if kind == "plain":
                    v = lu.solve(v, trans="H")
                elif kind == "right":
                    v = Es.conj().T @ lu.solve(v, trans="H")
                else:
                    v = lu.solve(Es.conj().T @ v, trans="H")
            return v

        op = scipy.sparse.linalg.LinearOperator((n, n), matvec=mv, rmatvec=rmv, dtype=complex)
        v0 = np.random.default_rng(0).standard_normal(n).astype(complex)
        s = scipy.sparse.linalg.svds(op, k=1, tol=1e-10, v0=v0, return_singular_vectors=False,
                                     maxiter=20 * n)
        return float(s[0])

    # ---- contract
    def resolvent_norm(self, lam):
        if self.backend == "multiprecision":
            try:
                return self._mp.resolvent_norm(lam)
            except ZeroDivisionError as exc:
                raise ResolventSetError(lam) from exc
        if self.backend == "sparse":
            return self._sparse_norm([lam], "plain")
        M = lam * self.E - self.A
        s = smallest_singular_value(M)
        if s <= 100 * np.finfo(float).eps * spectral_norm(M):
            raise ResolventSetError(lam)
        return 1.0 / s

    def product_norm(self, lams, side="right", atol=0.0):
        if side not in ("right", "left"):
            raise ValueError("side must be 'right' or 'left'")
        lams = list(lams)
        if self.backend == "multiprecision":
            try:
                return self._mp.product_norm(lams, side, atol)
            except ZeroDivisionError as exc:
                raise ResolventSetError(lams) from exc
        if self.backend == "sparse":
            return self._sparse_norm(lams, side)
        out = self._dense_factor(lams[0], side)
        for z in lams[1:]:
            out = out @ self._dense_factor(z, side)
        return spectral_norm(out)

    def clear_cache(self):
        self._cache.clear()
        if self._mp is not None:
            self._mp.clear()


# --------------------------------------------------------------------------
# resolvent index


def resolvent_samples(ev: NormEvaluator, lams) -> list[tuple[complex, float]]:
    return [(complex(z), ev.resolvent_norm(z)) for z in lams]


def _estimate_from_fit(fit: GrowthFit, where: str) -> IndexValue:
    ev = (f"{where}: exponent {fit.exponent:.4f}, r2 {fit.r_squared:.4f}, "
          f"split slopes {fit.lower_slope:.3f}/{fit.upper_slope:.3f}, verdict {fit.verdict}")
    if fit.verdict == "superpolynomial":
        return Superpolynomial("estimated", ev)
    if fit.verdict == "bounded":
        k = 0 if fit.exponent <= -1 + INTEGER_SLACK else 1
        return Value(k, "estimated", ev)
    k, flags = index_from_exponent(fit.exponent)
    if fit.verdict == "inconclusive":
        flags = flags + ("fit not polynomial at the required r2",)
    return Value(k, "estimated", ev, flags)


def estimate_resolvent_index(ev: NormEvaluator, plan: SamplePlan, record: dict | None = None) -> IndexValue:
    """Index from the real-axis growth exponent of ``|(lambda E - A)^{-1}|``.

    ``record``, when given, receives the samples and the fit.
    """
    ev.check_plan(plan)
    samples = resolvent_samples(ev, plan.lambdas())
    fit = fit_polynomial_growth(samples)
    if record is not None:
        record.update(samples=samples, fit=fit, plan=plan)
    return _estimate_from_fit(fit, f"real axis [{plan.lam_min:.4g}, {plan.lam_max:.4g}]")


def estimate_complex_resolvent_index(ev: NormEvaluator, sigmas, t_max: float, count: int = 30,
                                     t_values=None, plan: SamplePlan | None = None,
                                     record: dict | None = None) -> IndexValue:
    """Maximum of the indices fitted along vertical lines ``sigma + i t``.

    Parameters
    ----------
    sigmas : sequence of float
        Abscissae of the lines, each greater than ``ev.omega``.
    t_max : float
        Largest imaginary part; ``count`` points are log-spaced in
        ``[t_max / 1e3, t_max]`` unless ``t_values`` is supplied.
    plan : SamplePlan, optional
        Real-axis plan included in the maximum.
    """
    if t_values is None:
        t_values = np.geomspace(max(t_max / 1e3, 1e-3), t_max, count)
    t_values = np.asarray(t_values, dtype=float)
    results = []
    lines = {}
    for sigma in sigmas:
        if sigma <= ev.omega:
            raise ValueError(f"line Re = {sigma} not right of omega = {ev.omega}")
        samples = resolvent_samples(ev, sigma + 1j * t_values)
        fit = fit_polynomial_growth(samples)
        lines[float(sigma)] = (samples, fit)
        results.append(_estimate_from_fit(fit, f"line Re={sigma:g}"))
    if plan is not None:
        real_rec = {}
        results.append(estimate_resolvent_index(ev, plan, real_rec))
        lines["real"] = (real_rec["samples"], real_rec["fit"])
    if record is not None:
        record["lines"] = lines
    if any(r.kind == "superpolynomial" for r in results):
        return Superpolynomial("estimated", "; ".join(r.evidence for r in results))
    best = max(results, key=lambda r: r.value)
    flags = tuple(f for r in results for f in r.flags)
    return Value(best.value, "estimated", "; ".join(r.evidence for r in results), flags)


# --------------------------------------------------------------------------
# radiality


def _scaled(ev, lams, side, omega, atol_B):
    weight = float(np.prod([abs(z - omega) for z in lams]))
    return ev.product_norm(lams, side, atol=atol_B / weight) * weight


def radiality_profile(ev: NormEvaluator, plan: SamplePlan, p: int, count: int = 8,
                      atol: float = 1e-9) -> dict:
    """``B(p)`` at the top of the plan and two decades below, plus the diagonal sweep.

    ``B(p)(lam) = max (|prod R^E(lam_k)|, |prod L^E(lam_k)|) * prod (lam_k - omega)``
    over the diagonal tuple at ``lam`` and ``count`` seeded tuples whose
    entries are plan points within one decade below ``lam``.
    """
    if not ev.supports_products:
        raise NotImplementedError("evaluator has no product form")
    grid = plan.lambdas()
    omega = ev.omega
    rng = np.random.default_rng(plan.seed * 1000 + p)
    top = grid[-1]
    lo = grid[np.argmin(np.abs(np.log(grid / (top / 100))))]
    sweep = grid[grid >= lo * (1 - 1e-12)]

    def B(ref):
        vals = [max(_scaled(ev, [ref] * (p + 1), s, omega, atol) for s in ("right", "left"))]
        window = grid[(grid <= ref * (1 + 1e-12)) & (grid >= ref / 10 * (1 - 1e-12))]
        for _ in range(count):
            tup = list(rng.choice(window, p + 1))
            vals.append(max(_scaled(ev, tup, s, omega, atol) for s in ("right", "left")))
        return max(vals)

    diag = [(float(z), _scaled(ev, [z] * (p + 1), "right", omega, atol),
             _scaled(ev, [z] * (p + 1), "left", omega, atol)) for z in sweep]
    B_hi, B_lo = B(top), B(lo)
    return {"p": p, "lam_hi": float(top), "lam_lo": float(lo), "B_hi": B_hi, "B_lo": B_lo,
            "bounded": bool(B_hi <= PLATEAU_FACTOR * B_lo + atol), "sweep": diag}


def estimate_radiality_index(ev: NormEvaluator, plan: SamplePlan, p_max: int = 6, count: int = 8,
                             record: dict | None = None) -> IndexValue:
    """Smallest ``p <= p_max`` whose scaled products plateau over the top two decades."""
    ev.check_plan(plan)
    profiles = []
    for p in range(p_max + 1):
        try:
            prof = radiality_profile(ev, plan, p, count)
        except PrecisionExhausted as exc:
            if record is not None:
                record["profiles"] = profiles
            return NoIndex("estimated", f"p={p}: {exc}", ("precision exhausted",))
        profiles.append(prof)
        if prof["bounded"]:
            break
    if record is not None:
        record["profiles"] = profiles
    ev_text = "; ".join(f"p={q['p']}: B={q['B_lo']:.3g}->{q['B_hi']:.3g}" for q in profiles)
    if profiles[-1]["bounded"]:
        return Value(profiles[-1]["p"], "estimated", ev_text)
    return NoIndex("estimated", f"no plateau up to p={p_max}; " + ev_text)
