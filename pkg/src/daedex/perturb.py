"""Closed-form perturbed solutions in Weierstrass coordinates.

For ``x1' = A1 x1`` and ``N x2' = x2 + delta2`` the algebraic part is
``x2 = -sum_i N^i delta2^(i)``. The disturbance family

    delta_{2,n}(t) = Re(i^p e^{int}) / n^(p-1) * v2

has small low-order derivatives but an order-one ``(p-1)``-th derivative,
so a candidate index below the nilpotency degree shows ratios growing in
``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .indices import IndexValue, Value
from .matrixkit import spectral_norm
from .pencil import WeierstrassDecomposition

__all__ = [
    "PerturbationSpec",
    "PerturbationTrace",
    "Trajectory",
    "select_v2",
    "delta_derivative",
    "closed_form_solution",
    "perturbation_trace",
    "perturbation_probe",
    "estimate_perturbation_index",
    "DEFAULT_N_LIST",
]

DEFAULT_N_LIST = (4, 8, 16, 32, 64, 128, 256)


@dataclass(frozen=True)
class PerturbationSpec:
    """Oscillating disturbance ``Re(i^p e^{int}) / n^(p-1) * v2``."""

    p: int
    n: int
    v2: np.ndarray
    T: float = math.pi

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise ValueError("p and n must be positive")
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.n < math.pi / self.T * (1 - 1e-12):
            raise ValueError(f"frequency n={self.n} below pi/T")


def select_v2(d: WeierstrassDecomposition) -> np.ndarray:
    """Dominant right singular vector of ``N^(nu-1)``."""
    nu = d.nilpotency_degree
    if nu == 0:
        raise ValueError("no nilpotent block")
    Np = np.linalg.matrix_power(d.N, nu - 1)
    if spectral_norm(Np) <= 1e-10 * max(1.0, spectral_norm(d.N)) ** (nu - 1):
        raise ValueError("N^(nu-1) numerically zero")
    return np.linalg.svd(Np)[2][0].conj()


def delta_derivative(spec: PerturbationSpec, t, i: int) -> np.ndarray:
    """``i``-th time derivative of the disturbance on the grid ``t``; shape (len(t), d2)."""
    t = np.asarray(t, dtype=float)
    c = spec.n ** (i - spec.p + 1) * np.real(1j ** ((spec.p + i) % 4) * np.exp(1j * spec.n * t))
    return c[:, None] * np.asarray(spec.v2)[None, :]


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    x2_dot: np.ndarray
    delta: np.ndarray
    delta_derivs: list


def _grid(spec):
    num = int(math.ceil(32 * spec.n * spec.T / math.pi)) + 1
    return np.linspace(0.0, spec.T, num)


def closed_form_solution(d: WeierstrassDecomposition, x1_0, spec: PerturbationSpec | None, grid=None,
                         original: bool = False, derivs: int | None = None) -> Trajectory:
    """Solve ``x1' = A1 x1`` and ``N x2' = x2 + delta2`` on a uniform grid.

    Parameters
    ----------
    d : WeierstrassDecomposition
    x1_0 : array_like, shape (d1,)
    spec : PerturbationSpec or None
        ``None`` means no disturbance; ``grid`` is then required.
    grid : ndarray, optional
        Uniform grid on ``[0, T]``; by default 32 points per half period.
    original : bool
        Map states through ``P^{-1}`` and disturbances through ``Q^{-1}``.
    derivs : int, optional
        Number of disturbance derivatives to keep (default ``nu + 1``).
    """
    nu = d.nilpotency_degree
    if spec is None and grid is None:
        raise ValueError("grid required without a disturbance")
    if spec is not None and d.d2 and np.asarray(spec.v2).shape != (d.d2,):
        raise ValueError("v2 must live in the nilpotent block")
    if spec is not None and nu and spectral_norm(np.linalg.matrix_power(d.N, spec.p - 1) @ np.asarray(spec.v2)[:, None]) <= 1e-10:
        raise ValueError("N^(p-1) v2 vanishes")
    t = _grid(spec) if grid is None else np.asarray(grid, dtype=float)
    steps = np.diff(t)
    if steps.size and np.ptp(steps) > 1e-9 * steps.mean():
        raise ValueError("grid must be uniform")
    x1_0 = np.asarray(x1_0, dtype=complex).reshape(d.d1)
    x1 = np.empty((t.size, d.d1), dtype=complex)
    if d.d1:
        x1[0] = scipy.linalg.expm(d.A1 * t[0]) @ x1_0
        step = scipy.linalg.expm(d.A1 * steps[0]) if steps.size else None
        for k in range(1, t.size):
            x1[k] = step @ x1[k - 1]
    nd = (nu + 1) if derivs is None else max(derivs, nu + 1)
    dd = [delta_derivative(spec, t, i) if d.d2 and spec is not None else np.zeros((t.size, d.d2))
          for i in range(nd)]
    x2 = np.zeros((t.size, d.d2), dtype=complex)
    x2d = np.zeros((t.size, d.d2), dtype=complex)
    Npow = np.eye(d.d2, dtype=complex)
    for i in range(nu):
        x2 -= dd[i] @ Npow.T
        x2d -= dd[i + 1] @ Npow.T
        Npow = d.N @ Npow
    x = np.hstack([x1, x2])
    delta = np.hstack([np.zeros((t.size, d.d1)), dd[0]]) if d.d2 else np.zeros((t.size, d.d1))
    full = [np.hstack([np.zeros((t.size, d.d1)), a]) for a in dd]
    if original:
        x = x @ d.P_inv.T
        Qi = d.Q_inv
        delta = delta @ Qi.T
        full = [a @ Qi.T for a in full]
    return Trajectory(t, x, x2d, delta, full)


@dataclass(frozen=True)
class PerturbationTrace:
    """Maxima along one trajectory.

    ``ratio(p') = max|x| / (|x(0)| + sum_{i<p'} max|delta^(i)|)``.
    """

    n: int
    x_max: float
    x0: float
    delta_max: tuple

    def denom(self, p_candidate: int) -> float:
        return self.x0 + sum(self.delta_max[:p_candidate])

    def ratio(self, p_candidate: int) -> float:
        return self.x_max / self.denom(p_candidate)


def perturbation_trace(d: WeierstrassDecomposition, n: int, T: float = math.pi, p_max: int | None = None,
                       original: bool = False, v2=None) -> PerturbationTrace:
    nu = d.nilpotency_degree
    spec = PerturbationSpec(nu, n, select_v2(d) if v2 is None else np.asarray(v2), T)
    keep = max(nu + 1, (p_max or 0) + 1)
    tr = closed_form_solution(d, np.zeros(d.d1), spec, original=original, derivs=keep)
    xn = np.linalg.norm(tr.x, axis=1)
    dmax = tuple(float(np.max(np.linalg.norm(a, axis=1))) for a in tr.delta_derivs)
    return PerturbationTrace(n, float(xn.max()), float(xn[0]), dmax)


def perturbation_probe(d: WeierstrassDecomposition, p_candidate: int, n_list=DEFAULT_N_LIST,
                       T: float = math.pi, original: bool = False) -> list[float]:
    """Ratios for one candidate across frequencies, with ``x1(0) = 0``."""
    if d.nilpotency_degree < 1:
        raise ValueError("probe needs a nilpotent block")
    if p_candidate < 1:
        raise ValueError("p_candidate must be >= 1")
    return [perturbation_trace(d, n, T, p_candidate, original).ratio(p_candidate) for n in n_list]


def estimate_perturbation_index(d: WeierstrassDecomposition, n_list=DEFAULT_N_LIST, p_max: int | None = None,
                                divergence_factor: float = 10.0, T: float = math.pi,
                                record: dict | None = None) -> IndexValue:
    """Smallest candidate whose ratios stay within ``divergence_factor``.

    Always reported as an estimate: sampling can falsify candidates below the
    true index and corroborate the true one, not prove it.
    """
    n_list = list(n_list)
    if max(n_list) / min(n_list) < 10:
        raise ValueError("n_list should span at least a decade")
    nu = d.nilpotency_degree
    if nu == 0:
        # one-sided check: x = e^{A1 t} x0, bounded by the semigroup on [0, T]
        ts = np.linspace(0, T, 65)
        c = max(spectral_norm(scipy.linalg.expm(d.A1 * s)) for s in ts) if d.d1 else 1.0
        return Value(0, "estimated", f"no nilpotent block; sup |e^(A1 t)| on [0,T] = {c:.4g}",
                     ("p=0 integral criterion not probed; bound with p<=1 holds",))
    p_max = nu + 1 if p_max is None else p_max
    traces = [perturbation_trace(d, n, T, p_max) for n in n_list]
    table = {pc: [tr.ratio(pc) for tr in traces] for pc in range(1, p_max + 1)}
    if record is not None:
        record["ratios"] = table
        record["n_list"] = n_list
    flags = []
    parts = []
    for pc in range(1, p_max + 1):
        r = table[pc]
        spread = max(r) / min(r)
        parts.append(f"p'={pc}: spread {spread:.3g}")
        if spread < divergence_factor:
            for lower in range(1, pc):
                if not np.all(np.diff(table[lower]) > 0):
                    flags.append(f"candidate {lower} not monotonically growing")
            return Value(pc, "estimated", "; ".join(parts), flags)
    return Value(p_max, "estimated", "; ".join(parts) + f"; no candidate <= {p_max} bounded",
                 ("inconclusive",))
