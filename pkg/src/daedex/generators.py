"""Random regular pencils with a prescribed nilpotency degree.

Pencils are assembled as ``E = Q0^{-1} diag(I, J) P0`` and
``A = Q0^{-1} diag(A1, I) P0``. All factors are products of elementary
matrices with dyadic entries, so ``E`` and ``A`` are exactly representable
in double precision and the nilpotent structure is not blurred by rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .pencil import Pencil, is_regular

__all__ = ["BuiltPencil", "dyadic_isomorphism", "random_nilpotent", "random_regular_pencil",
           "equality_suite", "random_isomorphism", "random_dissipative_pencil"]

_SHEAR = np.array([-1.0, -0.5, 0.5, 1.0])
_SCALE = np.array([0.5, 2.0])


@dataclass(frozen=True, eq=False)
class BuiltPencil:
    """Pencil together with the data that fixes its indices."""

    pencil: Pencil
    nu: int
    d1: int
    d2: int
    P0: np.ndarray
    Q0_inv: np.ndarray
    A1: np.ndarray
    J: np.ndarray


def dyadic_isomorphism(rng: np.random.Generator, n: int, ops: int | None = None,
                       cond_max: float = 100.0, max_tries: int = 200):
    """Random invertible matrix built from dyadic elementary operations.

    Returns the matrix and its exact inverse. Draws are rejected until the
    condition number is below ``cond_max``.
    """
    ops = n if ops is None else ops
    for _ in range(max_tries):
        M = np.eye(n)
        Minv = np.eye(n)
        perm = rng.permutation(n)
        M = M[perm]
        Minv = Minv[:, perm]
        for _ in range(ops):
            i, j = rng.choice(n, 2, replace=False) if n > 1 else (0, 0)
            if n > 1 and rng.random() < 0.85:
                c = rng.choice(_SHEAR)
                # row i += c * row j  ->  inverse subtracts
                M[i] += c * M[j]
                Minv[:, j] -= c * Minv[:, i]
            else:
                s = rng.choice(_SCALE)
                M[i] *= s
                Minv[:, i] /= s
        if np.linalg.cond(M) < cond_max:
            return M, Minv
    raise RuntimeError("could not draw a well-conditioned isomorphism")


def random_nilpotent(rng: np.random.Generator, d: int, nu: int) -> np.ndarray:
    """Jordan-structured nilpotent matrix of size ``d`` and degree exactly ``nu``."""
    if not 1 <= nu <= d:
        raise ValueError("need 1 <= nu <= d")
    sizes = [nu]
    rest = d - nu
    while rest:
        s = int(rng.integers(1, min(nu, rest) + 1))
        sizes.append(s)
        rest -= s
    J = np.zeros((d, d))
    start = 0
    for s in sizes:
        for k in range(s - 1):
            J[start + k, start + k + 1] = rng.choice([0.5, 1.0, 2.0])
        start += s
    return J


def random_regular_pencil(rng: np.random.Generator, nu: int, n: int | None = None,
                          d2: int | None = None, n_max: int = 40,
                          cond_max: float = 100.0) -> BuiltPencil:
    """Regular pencil whose nilpotent block has degree ``nu``.

    Parameters
    ----------
    rng : numpy.random.Generator
    nu : int
        Nilpotency degree, ``nu >= 0``.
    n, d2 : int, optional
        Dimension and size of the nilpotent block; drawn when omitted.
    """
    if n is None:
        n = int(rng.integers(max(nu + 2, 6), n_max + 1))
    if d2 is None:
        d2 = 0 if nu == 0 else int(rng.integers(nu, min(2 * nu + 3, n - 1) + 1))
    d1 = n - d2
    if nu and d2 < nu:
        raise ValueError("nilpotent block smaller than its degree")
    A1 = rng.choice([-1.0, -0.5, 0.0, 0.0, 0.5, 1.0], size=(d1, d1))
    J = random_nilpotent(rng, d2, nu) if d2 else np.zeros((0, 0))
    P0, _ = dyadic_isomorphism(rng, n, cond_max=cond_max)
    Q0_inv, _ = dyadic_isomorphism(rng, n, cond_max=cond_max)
    Et = scipy.linalg.block_diag(np.eye(d1), J)
    At = scipy.linalg.block_diag(A1, np.eye(d2))
    pencil = Pencil(Q0_inv @ Et @ P0, Q0_inv @ At @ P0, f"random nu={nu} n={n}")
    return BuiltPencil(pencil, nu, d1, d2, P0, Q0_inv, A1, J)


def equality_suite(seed: int = 42, count: int = 50, n_max: int = 40) -> list[BuiltPencil]:
    """Seeded family with degrees cycling through 1..5."""
    rng = np.random.default_rng(seed)
    return [random_regular_pencil(rng, 1 + k % 5, n_max=n_max) for k in range(count)]


def random_isomorphism(rng: np.random.Generator, n: int, cond_max: float = 100.0) -> np.ndarray:
    """Dense Gaussian matrix with condition number below ``cond_max``."""
    while True:
        M = np.eye(n) + rng.standard_normal((n, n)) / np.sqrt(n)
        if np.linalg.cond(M) < cond_max:
            return M


def random_dissipative_pencil(rng: np.random.Generator, n: int, hessenberg: bool = False) -> Pencil:
    """``E >= 0`` Hermitian, ``A + A^H <= 0``, regular.

    With ``hessenberg`` the algebraic variables enter only through a skew
    coupling ``[[J - R, -C^H], [C, 0]]``, which gives a degree-2 block;
    otherwise the algebraic block is strictly dissipative (degree 1).
    """
    while True:
        r = int(rng.integers(max(1, n // 2), n))
        k = n - r
        F = rng.standard_normal((r, r)) / np.sqrt(r)
        E11 = F @ F.T + 0.1 * np.eye(r)
        S = rng.standard_normal((n, n))
        J = (S - S.T) / 2
        G = rng.standard_normal((n, n)) / np.sqrt(n)
        R = G @ G.T
        A = J - R
        if hessenberg:
            k = min(k, r)
            r = n - k
            F = rng.standard_normal((r, r)) / np.sqrt(r)
            E11 = F @ F.T + 0.1 * np.eye(r)
            C = rng.standard_normal((k, r))
            A = np.zeros((n, n))
            A[:r, :r] = (J - R)[:r, :r]
            A[:r, r:] = -C.T
            A[r:, :r] = C
        E = np.zeros((n, n))
        E[:r, :r] = E11
        p = Pencil(E, A, f"dissipative n={n} r={r}{' hessenberg' if hessenberg else ''}")
        if is_regular(p).regular:
            return p
