"""Finite-dimensional matrix pencils ``(E, A)`` for ``d/dt E x = A x + f``.

Covers regularity testing, Wong sequences, the quasi-Weierstrass form and
the plain, right-E and left-E resolvents.
"""

from __future__ import annotations

import json
import warnings
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.linalg

from .matrixkit import (
    DEFAULT_TOL,
    RankTolerance,
    Subspace,
    as_dense,
    image_basis,
    nullspace_basis,
    numeric_rank,
    preimage,
    spectral_norm,
    subspace_equal,
)

__all__ = [
    "Pencil",
    "PencilError",
    "NotRegularError",
    "ToleranceError",
    "ResolventSetError",
    "RegularityWitness",
    "WongResult",
    "WeierstrassDecomposition",
    "is_regular",
    "wong_sequences",
    "quasi_weierstrass",
    "nilpotency_degree",
    "resolvent",
    "right_E_resolvent",
    "left_E_resolvent",
    "load_pencil",
    "save_pencil",
    "pencil_to_json",
    "pencil_from_json",
]


class PencilError(ValueError):
    """Malformed pencil data."""


class NotRegularError(RuntimeError):
    """det(lambda E - A) vanishes identically."""


class ToleranceError(RuntimeError):
    """A numerical decision could not be made at the configured tolerance."""


class ResolventSetError(ValueError):
    """lambda E - A is singular at the requested point."""

    def __init__(self, lam):
        super().__init__(f"lambda = {lam} not in resolvent set")
        self.lam = lam


@dataclass(frozen=True, eq=False)
class Pencil:
    """Square pencil ``lambda E - A``.

    Parameters
    ----------
    E, A : array_like, shape (n, n)
    label : str
    """

    E: np.ndarray
    A: np.ndarray
    label: str = ""

    def __post_init__(self):
        try:
            E = as_dense(self.E, "E")
            A = as_dense(self.A, "A")
        except ValueError as exc:
            raise PencilError(str(exc)) from exc
        if E.shape != A.shape or E.shape[0] != E.shape[1]:
            raise PencilError(f"E {E.shape} and A {A.shape} must be square and equal in shape")
        if E.shape[0] == 0:
            raise PencilError("empty pencil")
        E.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def is_real(self) -> bool:
        return not (np.any(self.E.imag) or np.any(self.A.imag))

    def matrix(self, lam: complex) -> np.ndarray:
        """``lam * E - A``."""
        return lam * self.E - self.A

    def transformed(self, Q, P) -> "Pencil":
        """Equivalent pencil ``(Q E P, Q A P)``."""
        return Pencil(Q @ self.E @ P, Q @ self.A @ P, self.label)


# --------------------------------------------------------------------------
# serialization


def pencil_to_json(p: Pencil) -> dict:
    def pairs(M):
        return [[float(z.real), float(z.imag)] for z in M.ravel()]

    return {"n": p.n, "E": pairs(p.E), "A": pairs(p.A), "label": p.label}


def pencil_from_json(obj: dict) -> Pencil:
    try:
        n = int(obj["n"])
        mats = []
        for key in ("E", "A"):
            arr = np.asarray(obj[key], dtype=float)
            if arr.shape == (n * n, 2):
                arr = arr.reshape(n, n, 2)
            if arr.shape != (n, n, 2):
                raise PencilError(f"{key} must hold n*n [re, im] pairs")
            mats.append(arr[..., 0] + 1j * arr[..., 1])
        return Pencil(mats[0], mats[1], str(obj.get("label", "")))
    except (KeyError, TypeError, ValueError) as exc:
        raise PencilError(f"invalid pencil JSON: {exc}") from exc


def save_pencil(p: Pencil, path) -> None:
    with open(path, "w") as fh:
        json.dump(pencil_to_json(p), fh, indent=1)
        fh.write("\n")


def load_pencil(path, a_path=None) -> Pencil:
    """Read a pencil from JSON or from a pair of Matrix Market files.

    Parameters
    ----------
    path : path-like
        JSON file, Matrix Market file holding ``E`` (then ``a_path`` holds
        ``A``), or a directory containing ``E.mtx`` and ``A.mtx``.
    """
    path = os.fspath(path)
    try:
        if os.path.isdir(path):
            return _load_mm(os.path.join(path, "E.mtx"), os.path.join(path, "A.mtx"),
                            os.path.basename(path.rstrip("/")))
        if a_path is not None:
            return _load_mm(path, os.fspath(a_path), os.path.splitext(os.path.basename(path))[0])
        with open(path) as fh:
            return pencil_from_json(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise PencilError(f"cannot read pencil from {path}: {exc}") from exc


def _load_mm(e_path, a_path, label):
    try:
        E = scipy.io.mmread(e_path)
        A = scipy.io.mmread(a_path)
    except (ValueError, IndexError) as exc:
        raise PencilError(f"invalid Matrix Market data: {exc}") from exc
    E = E.toarray() if hasattr(E, "toarray") else E
    A = A.toarray() if hasattr(A, "toarray") else A
    return Pencil(E, A, label)


# --------------------------------------------------------------------------
# regularity


@dataclass(frozen=True)
class RegularityWitness:
    regular: bool
    witness_lambda: complex | None
    probes: tuple = ()


def is_regular(p: Pencil, tol: RankTolerance = DEFAULT_TOL, seed: int = 42) -> RegularityWitness:
    """Decide regularity with ``n + 1`` probes on a circle.

    ``det(lambda E - A)`` has degree at most ``n``; if it vanishes at ``n + 1``
    distinct points it vanishes identically.

    Examples
    --------
    >>> is_regular(Pencil(np.eye(2), np.zeros((2, 2)))).regular
    True
    >>> is_regular(Pencil([[1, 0], [0, 0]], np.zeros((2, 2)))).regular
    False
    """
    n = p.n
    radius = 1.0 + spectral_norm(p.E) + spectral_norm(p.A)
    rng = np.random.default_rng(seed)
    # distinct angles: jittered equispaced points on the circle
    angles = 2 * np.pi * (np.arange(n + 1) + rng.uniform(0.1, 0.9, n + 1)) / (n + 1)
    probes = tuple(radius * np.exp(1j * angles))
    scale = radius * spectral_norm(p.E) + spectral_norm(p.A)
    # singular means singular to working precision: high-index pencils have
    # legitimately tiny sigma_min at the probes, far below the rank tolerance
    probe_tol = RankTolerance(relative=100 * np.finfo(float).eps, absolute=tol.absolute)
    for lam in probes:
        if numeric_rank(p.matrix(lam), probe_tol, scale=scale) == n:
            return RegularityWitness(True, complex(lam), probes)
    return RegularityWitness(False, None, probes)


def _require_regular(p, tol):
    w = is_regular(p, tol)
    if not w.regular:
        raise NotRegularError("pencil not regular")
    return w


# --------------------------------------------------------------------------
# Wong sequences


@dataclass(frozen=True)
class WongResult:
    """Limits and step dimensions of the two Wong sequences."""

    V_limit: Subspace
    W_limit: Subspace
    v_steps: list
    w_steps: list
    k_stab: int


def _iterate(step, start, n, tol):
    spaces = [start]
    for _ in range(n + 2):
        nxt = step(spaces[-1])
        if subspace_equal(nxt, spaces[-1]):
            return spaces
        spaces.append(nxt)
    raise ToleranceError(f"Wong sequence did not stabilize within {n + 1} steps")


def wong_sequences(p: Pencil, tol: RankTolerance = DEFAULT_TOL) -> WongResult:
    """Iterate ``V_{i+1} = A^{-1}(E V_i)`` and ``W_{i+1} = E^{-1}(A W_i)``.

    ``k_stab`` is the first ``i`` with ``W_i = W_{i+1}``.

    Examples
    --------
    >>> r = wong_sequences(Pencil([[0, 1], [0, 0]], np.eye(2)))
    >>> r.w_steps, r.k_stab
    ([0, 1, 2], 2)
    """
    n = p.n
    E, A = p.E, p.A
    sE, sA = spectral_norm(E), spectral_norm(A)

    def v_step(V):
        return preimage(A, image_basis(E @ V.basis, tol, scale=sE), tol)

    def w_step(W):
        return preimage(E, image_basis(A @ W.basis, tol, scale=sA), tol)

    vs = _iterate(v_step, Subspace.full(n), n, tol)
    ws = _iterate(w_step, Subspace.zero(n), n, tol)
    return WongResult(vs[-1], ws[-1], [v.dim for v in vs], [w.dim for w in ws], len(ws) - 1)


# --------------------------------------------------------------------------
# quasi-Weierstrass form


@dataclass(frozen=True, eq=False)
class WeierstrassDecomposition:
    """``Q E P^{-1} = diag(I, N)`` and ``Q A P^{-1} = diag(A1, I)``.

    Attributes
    ----------
    P, Q : ndarray
        State and equation isomorphisms.
    P_inv : ndarray
        ``[V W]`` built from the Wong limits.
    A1, N : ndarray
    d1, d2 : int
    nilpotency_degree : int
        Smallest ``k`` with ``N^k = 0``; 0 when ``d2 = 0``.
    residual : float
        Relative block-structure residual of the transformed pencil.
    """

    P: np.ndarray
    Q: np.ndarray
    P_inv: np.ndarray
    A1: np.ndarray
    N: np.ndarray
    d1: int
    d2: int
    nilpotency_degree: int
    residual: float = 0.0
    wong: WongResult | None = field(default=None, repr=False)

    @property
    def Q_inv(self) -> np.ndarray:
        return np.linalg.inv(self.Q)

    def blocks(self):
        """``(diag(I, N), diag(A1, I))``."""
        Et = scipy.linalg.block_diag(np.eye(self.d1), self.N)
        At = scipy.linalg.block_diag(self.A1, np.eye(self.d2))
        return Et.astype(complex), At.astype(complex)

    def reconstruct(self) -> Pencil:
        Et, At = self.blocks()
        Qi = self.Q_inv
        return Pencil(Qi @ Et @ self.P, Qi @ At @ self.P)

    def finite_eigenvalues(self) -> np.ndarray:
        if self.d1 == 0:
            return np.zeros(0, dtype=complex)
        return np.linalg.eigvals(self.A1)


def nilpotency_degree(N, tol: RankTolerance = DEFAULT_TOL, scale: float = 1.0) -> int:
    """Smallest ``k`` with ``N^k = 0`` at tolerance.

    Kernels ``ker N^k`` are grown by preimages, which avoids forming powers.
    Ranks are judged against ``max(scale, |N|)``; in the Weierstrass form the
    identity block sets the natural scale 1.
    Raises :class:`ToleranceError` when ``N`` is not nilpotent.
    """
    N = as_dense(N) if np.size(N) else np.zeros((0, 0), dtype=complex)
    d = N.shape[0]
    if d == 0:
        return 0
    K = Subspace.zero(d)
    for k in range(1, d + 1):
        K = preimage(N, K, tol, scale=max(scale, spectral_norm(N)))
        if K.dim == d:
            return k
    raise ToleranceError("N block is not nilpotent at tolerance")


def quasi_weierstrass(p: Pencil, tol: RankTolerance = DEFAULT_TOL,
                      structure_tol: float = 1e-8) -> WeierstrassDecomposition:
    """Quasi-Weierstrass form from the Wong limits.

    ``P^{-1} = [V W]`` and ``Q = [E V, A W]^{-1}``.

    Examples
    --------
    >>> d = quasi_weierstrass(Pencil([[0, 1], [0, 0]], np.eye(2)))
    >>> d.d1, d.d2, d.nilpotency_degree
    (0, 2, 2)
    """
    _require_regular(p, tol)
    wr = wong_sequences(p, tol)
    V, W = wr.V_limit.basis, wr.W_limit.basis
    d1, d2 = V.shape[1], W.shape[1]
    n = p.n
    if d1 + d2 != n:
        raise ToleranceError(f"Wong limits not complementary: {d1} + {d2} != {n}")
    T = np.hstack([V, W])
    S = np.hstack([p.E @ V, p.A @ W])
    for name, M in (("[V W]", T), ("[EV AW]", S)):
        c = np.linalg.cond(M)
        if not np.isfinite(c) or c > 1e12:
            raise ToleranceError(f"{name} numerically singular (condition {c:.3e})")
    P = np.linalg.inv(T)
    Q = np.linalg.inv(S)
    Et = Q @ p.E @ T
    At = Q @ p.A @ T
    A1 = At[:d1, :d1].copy()
    N = Et[d1:, d1:].copy()
    Eref, Aref = np.eye(n, dtype=complex), np.eye(n, dtype=complex)
    Eref[d1:, d1:] = N
    Aref[:d1, :d1] = A1
    res = max(
        np.linalg.norm(Et - Eref, 2) / max(np.linalg.norm(Et, 2), 1e-300),
        np.linalg.norm(At - Aref, 2) / max(np.linalg.norm(At, 2), 1e-300),
    )
    if res > structure_tol:
        raise ToleranceError(f"block structure residual {res:.2e} exceeds {structure_tol:g}")
    deg = nilpotency_degree(N, tol)
    return WeierstrassDecomposition(P, Q, T, A1, N, d1, d2, deg, float(res), wr)


# --------------------------------------------------------------------------
# resolvents


def resolvent(p: Pencil, lam: complex) -> np.ndarray:
    """``(lam E - A)^{-1}`` by LU with partial pivoting.

    Examples
    --------
    >>> resolvent(Pencil(np.eye(2), np.zeros((2, 2))), 2.0).real
    array([[0.5, 0. ],
           [0. , 0.5]])
    """
    return _solve(p, lam, np.eye(p.n, dtype=complex))


def right_E_resolvent(p: Pencil, lam: complex) -> np.ndarray:
    """``(lam E - A)^{-1} E``."""
    return _solve(p, lam, p.E)


def left_E_resolvent(p: Pencil, lam: complex) -> np.ndarray:
    """``E (lam E - A)^{-1}``."""
    return p.E @ resolvent(p, lam)


def _solve(p, lam, rhs):
    M = p.matrix(lam)
    try:
        with warnings.catch_warnings():
            # exact singularity is reported below as ResolventSetError
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(M, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ResolventSetError(lam) from exc
    diag = np.abs(np.diag(lu[0]))
    if diag.min() <= np.finfo(float).eps * max(diag.max(), 1e-300) * p.n:
        raise ResolventSetError(lam)
    return scipy.linalg.lu_solve(lu, rhs, check_finite=False)
