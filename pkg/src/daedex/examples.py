"""Finite surrogates of the infinite-dimensional example systems.

Each builder returns a regular pencil (or an operator with a norm evaluator)
whose index behaviour can be compared with the continuous statement:

* ``diag_l2``: block-diagonal l2 system with transfer function ``G``,
* ``heat_hessenberg``: Neumann heat equation with an output constraint,
* ``transport``: transport equation coupled to an ODE through its outflow,
* ``airy``: complex Airy operator with exponentially growing resolvent,
* ``halfline``: transport on a half-line with a point evaluation,
* ``piezo_beam``: quasi-static piezoelectric beam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
from flint import acb, ctx

from .matrixkit import smallest_singular_value, spectral_norm
from .pencil import Pencil, ResolventSetError
from .probe import FunctionEvaluator, NormEvaluator, PencilEvaluator, SamplePlan

__all__ = [
    "EXAMPLE_NAMES",
    "ExampleDescriptor",
    "PiezoParams",
    "diag_G",
    "diag_lower_bound",
    "build_diag_pencil",
    "diag_evaluator",
    "build_heat_hessenberg",
    "heat_transfer",
    "build_transport",
    "build_airy",
    "AiryEvaluator",
    "airy_growth_model",
    "halfline_bound",
    "build_halfline",
    "halfline_weights",
    "halfline_evaluator",
    "build_piezo_beam",
    "piezo_energy",
    "piezo_energy_transform",
]

EXAMPLE_NAMES = ("diag_l2", "heat_hessenberg", "transport", "airy", "halfline", "piezo_beam")


@dataclass(frozen=True)
class PiezoParams:
    """Material data of the beam; ``mu = 0`` is the quasi-static case."""

    rho: float = 1.0
    alpha1: float = 1.0
    beta: float = 1.0
    gamma: float = 0.5
    mu: float = 0.0

    def __post_init__(self):
        if min(self.rho, self.alpha1, self.beta) <= 0:
            raise ValueError("rho, alpha1 and beta must be positive")
        if self.mu != 0:
            raise ValueError("only the quasi-static beam (mu = 0) is supported")

    @property
    def alpha(self) -> float:
        return self.alpha1 + self.gamma ** 2 * self.beta


@dataclass(frozen=True)
class ExampleDescriptor:
    """Name plus discretization and physical parameters."""

    name: str
    n: int | None = None
    K: int | None = None
    L: float | None = None
    piezo: PiezoParams = field(default_factory=PiezoParams)

    def __post_init__(self):
        if self.name not in EXAMPLE_NAMES:
            raise ValueError(f"unknown example {self.name!r}; choose from {', '.join(EXAMPLE_NAMES)}")
        for key in ("n", "K", "L"):
            v = getattr(self, key)
            if v is not None and v <= 0:
                raise ValueError(f"{key} must be positive")

    def to_dict(self) -> dict:
        d = {"name": self.name, "n": self.n, "K": self.K, "L": self.L}
        if self.name == "piezo_beam":
            d["piezo"] = {k: getattr(self.piezo, k) for k in ("rho", "alpha1", "beta", "gamma", "mu")}
        return d


# --------------------------------------------------------------------------
# diagonal l2 system


def diag_G(s: complex, K: int) -> complex:
    """``s + sum_{k=1}^K k^(5/2) s / (s^2 + 2 s + k^4 + 1)``.

    Examples
    --------
    >>> diag_G(0.0, 10)
    0j
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    k = np.arange(1, K + 1, dtype=float)
    s = complex(s)
    den = s * s + 2 * s + k ** 4 + 1
    if np.any(np.abs(den) < 1e-12 * k ** 4):
        raise ResolventSetError(s)
    return complex(s + np.sum(k ** 2.5 * s / den))


def diag_lower_bound(sigma: float, n: int) -> float:
    """``2 n^(5/2) / (5 (1 + sigma)^4)``, a lower bound for ``Re G(sigma + i n^2)``."""
    if sigma <= 0 or n < 1:
        raise ValueError("need sigma > 0 and n >= 1")
    return 2 * n ** 2.5 / (5 * (1 + sigma) ** 4)


def build_diag_pencil(K: int) -> Pencil:
    """Truncation with blocks ``k = 0..K`` on dimension ``2(K+1) + 2``.

    State ordering: the ``K+1`` two-dimensional blocks, then ``x2``, ``x3``.
    The ``(x3, y3)`` entry of the resolvent is ``G(s)``.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    m = 2 * (K + 1)
    E = np.zeros((m + 2, m + 2))
    A = np.zeros((m + 2, m + 2))
    E[0, 0] = 1.0
    A[0:2, 0:2] = [[0.0, -1.0], [1.0, 0.0]]
    B = np.zeros(m)
    B[1] = 1.0
    for k in range(1, K + 1):
        i = 2 * k
        a = math.sqrt(k ** 4 + 1)
        E[i, i] = E[i + 1, i + 1] = 1.0
        A[i:i + 2, i:i + 2] = [[0.0, a], [-a, -2.0]]
        B[i + 1] = k ** 1.25
    A[:m, m] = B
    A[m, :m] = -B
    A[m, m + 1] = 1.0
    A[m + 1, m] = -1.0
    return Pencil(E, A, f"diag_l2 K={K}")


def diag_evaluator(K: int) -> FunctionEvaluator:
    """``|G(s)|`` as a norm evaluator (it bounds the resolvent norm from below)."""
    return FunctionEvaluator(lambda s: abs(diag_G(s, K)), omega=0.0, label=f"|G| K={K}")


# --------------------------------------------------------------------------
# heat equation with output constraint


def build_heat_hessenberg(n: int) -> Pencil:
    """``[[A_o, B], [C, 0]]`` on ``n + 1`` unknowns.

    ``A_o`` is the Neumann Laplacian on ``n`` cells of width ``h = 1/n``
    (cell centres, mirrored ghost cells), ``B`` the vector of ones and ``C``
    the quadrature row ``h * ones``, so that ``C B = 1`` exactly.
    """
    if n < 10:
        raise ValueError("n must be >= 10")
    h = 1.0 / n
    Ao = (np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1))
    Ao[0, 0] = Ao[-1, -1] = -1.0
    Ao /= h * h
    E = scipy.linalg.block_diag(np.eye(n), 0.0)
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = Ao
    A[:n, n] = 1.0
    A[n, :n] = h
    return Pencil(E, A, f"heat_hessenberg n={n}")


def heat_transfer(p: Pencil, s: complex) -> complex:
    """``G_h(s) = C (s I - A_o)^{-1} B`` of a heat pencil."""
    n = p.n - 1
    Ao = p.A[:n, :n]
    return complex(p.A[n, :n] @ np.linalg.solve(s * np.eye(n) - Ao, p.A[:n, n]))


# --------------------------------------------------------------------------
# transport coupled to an ODE


def build_transport(n: int) -> Pencil:
    """Upwind transport on ``n`` nodes of ``[0, 1]`` plus ``x2``, ``x3``.

    Rows: inflow condition ``0 = -x1(0)`` (replacing the transport equation
    at the inflow node), upwind transport at nodes ``1..n-1``,
    ``0 = -x1(1) + x2`` and ``x2' = x3``. Dimension ``n + 2``.
    """
    if n < 20:
        raise ValueError("n must be >= 20")
    h = 1.0 / (n - 1)
    m = n + 2
    E = np.zeros((m, m))
    A = np.zeros((m, m))
    A[0, 0] = -1.0
    for j in range(1, n):
        E[j, j] = 1.0
        A[j, j] = -1.0 / h
        A[j, j - 1] = 1.0 / h
    A[n, n - 1] = -1.0
    A[n, n] = 1.0
    E[n + 1, n] = 1.0
    A[n + 1, n + 1] = 1.0
    return Pencil(E, A, f"transport n={n}")


# --------------------------------------------------------------------------
# complex Airy operator


def build_airy(L: float, n: int):
    """Dirichlet truncation of ``-d^2/dx^2 + i x`` to ``[-L, L]``.

    Returns the operator matrix and an :class:`AiryEvaluator`.
    """
    if L < 10 or n < 200:
        raise ValueError("need L >= 10 and n >= 200")
    x = np.linspace(-L, L, n + 2)[1:-1]
    h = x[1] - x[0]
    main = 2.0 / h ** 2 + 1j * x
    off = -np.ones(n - 1) / h ** 2
    Ah = np.diag(main) + np.diag(off, 1) + np.diag(off, -1)
    return Ah, AiryEvaluator(main, off, label=f"airy L={L:g} n={n}")


def airy_growth_model(lam, C: float = 1.0) -> float:
    """``C Re(lam)^(-1/4) exp(4/3 Re(lam)^(3/2))``."""
    r = complex(lam).real
    return C * r ** -0.25 * math.exp(4.0 / 3.0 * r ** 1.5)


class AiryEvaluator(NormEvaluator):
    """``1 / sigma_min(lam I - A_h)`` for the tridiagonal Airy matrix.

    Double precision is used while ``sigma_min`` stays well above the
    rounding floor ``eps |M|``; beyond that, inverse iteration on
    ``M^H M`` runs in 192-bit complex arithmetic.
    """

    def __init__(self, main, off, label="airy", extended_prec: int = 192):
        self.main = np.asarray(main, dtype=complex)
        self.off = np.asarray(off, dtype=float)
        self.omega = 0.0
        self.label = label
        self.lam_max_valid = None
        self.prec = extended_prec
        self.used_extended = []

    def matrix(self, lam):
        return np.diag(lam - self.main) + np.diag(-self.off, 1) + np.diag(-self.off, -1)

    def resolvent_norm(self, lam):
        M = self.matrix(complex(lam))
        s = smallest_singular_value(M)
        if s > 1e6 * np.finfo(float).eps * spectral_norm(M):
            return 1.0 / s
        self.used_extended.append(complex(lam))
        return 1.0 / self._sigma_min_extended(complex(lam))

    def _sigma_min_extended(self, lam, iters=60, rtol=1e-12):
        old = ctx.prec
        ctx.prec = self.prec
        try:
            n = self.main.size
            d = [acb(complex(lam - z)) for z in self.main]
            o = [acb(-float(v)) for v in self.off]
            fM = _tridiag_lu(o, d, o)
            dh = [z.conjugate() for z in d]
            fMh = _tridiag_lu(o, dh, o)
            rng = np.random.default_rng(0)
            v = [acb(complex(a, b)) for a, b in rng.standard_normal((n, 2))]
            v = _normalize(v)
            prev = None
            for _ in range(iters):
                y = _tridiag_solve(fMh, v)
                q = float(sum((abs(c) ** 2 for c in y), acb(0)).real.mid())
                v = _normalize(_tridiag_solve(fM, y))
                if prev is not None and abs(q - prev) <= rtol * q:
                    break
                prev = q
            if q <= 0:
                raise ResolventSetError(lam)
            return 1.0 / math.sqrt(q)
        finally:
            ctx.prec = old


def _normalize(v):
    nrm = sum((abs(c) ** 2 for c in v), acb(0)).real.sqrt()
    return [(c / nrm).mid() for c in v]


def _tridiag_lu(sub, diag, sup):
    """LU with partial pivoting of a tridiagonal matrix (LAPACK gttrf layout)."""
    n = len(diag)
    dl, d, du = list(sub), list(diag), list(sup)
    du2 = [acb(0)] * max(n - 2, 0)
    piv = list(range(n))
    for i in range(n - 1):
        if abs(d[i]).mid() >= abs(dl[i]).mid():
            if d[i] == 0:
                raise ZeroDivisionError
            f = (dl[i] / d[i]).mid()
            dl[i] = f
            d[i + 1] = (d[i + 1] - f * du[i]).mid()
        else:
            f = (d[i] / dl[i]).mid()
            d[i] = dl[i]
            dl[i] = f
            tmp = du[i]
            du[i] = d[i + 1]
            d[i + 1] = (tmp - f * d[i + 1]).mid()
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = (-f * du[i + 1]).mid()
            piv[i] = i + 1
    return dl, d, du, du2, piv


def _tridiag_solve(fac, b):
    dl, d, du, du2, piv = fac
    n = len(d)
    x = list(b)
    # balls are collapsed to midpoints: wrapping would otherwise inflate
    # the radii geometrically along the recursion
    for i in range(n - 1):
        if piv[i] == i:
            x[i + 1] = (x[i + 1] - dl[i] * x[i]).mid()
        else:
            x[i], x[i + 1] = x[i + 1], (x[i] - dl[i] * x[i + 1]).mid()
    x[n - 1] = (x[n - 1] / d[n - 1]).mid()
    if n > 1:
        x[n - 2] = ((x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]).mid()
    for i in range(n - 3, -1, -1):
        x[i] = ((x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]).mid()
    return x


# --------------------------------------------------------------------------
# half-line transport with point evaluation


def halfline_bound(lam: float, p: int) -> float:
    """``(p+1) / 2^(p+1) * lam^(3/2 - (p+1))``.

    Examples
    --------
    >>> halfline_bound(1.0, 0)
    0.5
    """
    if lam <= 0 or p < 0:
        raise ValueError("need lam > 0 and p >= 0")
    return (p + 1) / 2 ** (p + 1) * lam ** (1.5 - (p + 1))


def build_halfline(L: float, n: int) -> Pencil:
    """``E = diag(I, 0)``, ``A = [[d/dx, 0], [delta_0, 1]]`` on ``n + 1`` unknowns.

    ``d/dx`` is the forward (upwind) difference on nodes ``x_j = j h``,
    ``h = L / n``, with inflow value zero at ``x = L``.
    """
    if L < 20 or n < 500:
        raise ValueError("need L >= 20 and n >= 500")
    h = L / n
    D = scipy.sparse.diags([-np.ones(n), np.ones(n - 1)], [0, 1]) / h
    E = scipy.sparse.block_diag([scipy.sparse.identity(n), scipy.sparse.csr_matrix((1, 1))])
    A = scipy.sparse.lil_matrix((n + 1, n + 1))
    A[:n, :n] = D
    A[n, 0] = 1.0
    A[n, n] = 1.0
    return Pencil(E.toarray(), A.toarray(), f"halfline L={L:g} n={n}")


def halfline_weights(L: float, n: int) -> np.ndarray:
    """Quadrature weights making the Euclidean norm an ``L^2 x C`` norm."""
    w = np.full(n + 1, L / n)
    w[-1] = 1.0
    return w


def halfline_evaluator(L: float, n: int, pencil: Pencil | None = None) -> PencilEvaluator:
    """Sparse weighted evaluator, valid for ``lam h <= 0.1``."""
    p = pencil or build_halfline(L, n)
    w = halfline_weights(L, n)
    return PencilEvaluator(p, omega=0.0, backend="sparse", weights_x=w, weights_z=w,
                           lam_max_valid=0.1 * n / L)


# --------------------------------------------------------------------------
# quasi-static piezoelectric beam


def _difference(n):
    # (D v)_{j-1/2} = (v_j - v_{j-1}) / h with v_0 = 0
    return (np.eye(n) - np.eye(n, k=-1)) * n


def build_piezo_beam(n: int, params: PiezoParams | None = None, form: str = "physical") -> Pencil:
    """Staggered-grid beam on ``[0, 1]`` with three fields of ``n`` values each.

    Fields are strain ``z1`` and electric gradient ``z3`` at cell midpoints and
    scaled velocity ``z2`` at nodes. ``D`` maps nodes to midpoints with
    ``v(0) = 0``; ``-D^T`` maps midpoints to nodes with zero flux at ``x = 1``.

    ``form="physical"`` keeps the rows ``z1, z2, z4`` of ``A = P1 d/dx Q``::

        sqrt(rho) z1' = D z2
        sqrt(rho) z2' = -D^T (alpha z1 - gamma beta z3)
                    0 = -D^T (beta z3 - gamma beta z1)

    ``form="energy"`` is the equivalent pencil in the variables
    ``(sqrt(alpha1) z1, z2, z3 - gamma z1)``, which is Hermitian/dissipative.
    """
    prm = params or PiezoParams()
    if n < 20:
        raise ValueError("n must be >= 20")
    D = _difference(n)
    Z = np.zeros((n, n))
    r = math.sqrt(prm.rho)
    E = scipy.linalg.block_diag(r * np.eye(n), r * np.eye(n), Z)
    a, b, g = prm.alpha, prm.beta, prm.gamma
    if form == "physical":
        A = np.block([[Z, D, Z],
                      [-a * D.T, Z, g * b * D.T],
                      [g * b * D.T, Z, -b * D.T]])
    elif form == "energy":
        s = math.sqrt(prm.alpha1)
        A = np.block([[Z, s * D, Z],
                      [-s * D.T, Z, Z],
                      [Z, Z, -b * D.T]])
    else:
        raise ValueError("form must be 'physical' or 'energy'")
    return Pencil(E, A, f"piezo_beam n={n} {form}")


def piezo_energy_transform(n: int, params: PiezoParams | None = None):
    """``(W, S)`` with ``energy = (W E S^{-1}, W A S^{-1})`` of the physical form."""
    prm = params or PiezoParams()
    I, Z = np.eye(n), np.zeros((n, n))
    S = np.block([[math.sqrt(prm.alpha1) * I, Z, Z], [Z, I, Z], [-prm.gamma * I, Z, I]])
    W = np.block([[math.sqrt(prm.alpha1) * I, Z, Z], [Z, I, prm.gamma * I], [Z, Z, I]])
    return W, S


def piezo_energy(z, n: int, params: PiezoParams | None = None) -> np.ndarray:
    """``h/2 * sum(alpha1 z1^2 + z2^2 + beta (z3 - gamma z1)^2)`` per row of ``z`` (physical form)."""
    prm = params or PiezoParams()
    z = np.atleast_2d(z)
    z1, z2, z3 = z[:, :n], z[:, n:2 * n], z[:, 2 * n:]
    dens = prm.alpha1 * abs(z1) ** 2 + abs(z2) ** 2 + prm.beta * abs(z3 - prm.gamma * z1) ** 2
    return 0.5 / n * dens.sum(axis=1)


# --------------------------------------------------------------------------
# default plans


def example_plan(name: str, *, n=None, L=None, count: int = 60, seed: int = 42) -> SamplePlan:
    """Sample plan adapted to an example's window of validity."""
    if name == "airy":
        return SamplePlan(0.0, 0.08, 8.0, count, seed)
    if name == "halfline":
        lam_top = 0.1 * n / L
        return SamplePlan(0.0, lam_top / 100, lam_top, count, seed)
    if name == "diag_l2":
        return SamplePlan(0.0, 10.0, 1e4, count, seed)
    return SamplePlan.default(1.0, count, seed)
