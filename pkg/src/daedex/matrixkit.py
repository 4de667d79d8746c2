"""Dense numerical primitives with explicit rank tolerances.

Every subspace is returned as an orthonormal basis obtained from an SVD,
so downstream code can compare spans by principal angles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RankTolerance",
    "Subspace",
    "SVDError",
    "as_dense",
    "numeric_rank",
    "rank_margin",
    "nullspace_basis",
    "image_basis",
    "preimage",
    "spectral_norm",
    "smallest_singular_value",
    "contains",
    "subspace_equal",
    "ANGLE_TOL",
]

#: Principal-angle sine below which one span is considered inside another.
ANGLE_TOL = 1e-8


class SVDError(RuntimeError):
    """Raised when LAPACK fails to converge on a singular value decomposition."""


@dataclass(frozen=True)
class RankTolerance:
    """Numeric-rank threshold policy.

    Parameters
    ----------
    relative : float
        Singular values at or below ``relative * sigma_ref * max(rows, cols)``
        count as zero. ``sigma_ref`` is the largest singular value unless a
        reference scale is supplied by the caller.
    absolute : float, optional
        Fixed threshold that overrides the relative rule.
    """

    relative: float = 1e-10
    absolute: float | None = None

    def __post_init__(self):
        if self.relative < 0 or (self.absolute is not None and self.absolute < 0):
            raise ValueError("tolerances must be nonnegative")

    def threshold(self, sigma_ref: float, shape: tuple[int, int]) -> float:
        if self.absolute is not None:
            return float(self.absolute)
        return float(self.relative * sigma_ref * max(shape))


DEFAULT_TOL = RankTolerance()


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace stored as an orthonormal column basis.

    Attributes
    ----------
    basis : ndarray, shape (ambient_dim, dim)
    ambient_dim : int
    tol_used : float
        Singular-value threshold applied when the basis was extracted.
    """

    basis: np.ndarray
    ambient_dim: int
    tol_used: float = 0.0

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2 or b.shape[0] != self.ambient_dim:
            raise ValueError("basis rows must equal ambient_dim")
        if b.shape[1] > self.ambient_dim:
            raise ValueError("more basis vectors than ambient dimension")
        if b.shape[1]:
            err = np.max(np.abs(b.conj().T @ b - np.eye(b.shape[1])))
            if err > 10 * max(self.ambient_dim, 1) * np.finfo(float).eps:
                raise ValueError(f"basis not orthonormal (error {err:.2e})")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0), dtype=complex), n)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n, dtype=complex), n)

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient_dim={self.ambient_dim})"


def as_dense(M, name: str = "matrix") -> np.ndarray:
    """Return ``M`` as a 2-D complex array, rejecting NaN and Inf."""
    a = np.atleast_2d(np.asarray(M, dtype=complex))
    if a.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _svd(M, full=False):
    try:
        return np.linalg.svd(M, full_matrices=full)
    except np.linalg.LinAlgError as exc:
        raise SVDError(f"SVD did not converge: {exc}") from exc


def _singular_values(M):
    try:
        return np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SVDError(f"SVD did not converge: {exc}") from exc


def _threshold(s, shape, tol, scale):
    ref = scale if scale is not None else (s[0] if s.size else 0.0)
    return tol.threshold(ref, shape)


def numeric_rank(M, tol: RankTolerance = DEFAULT_TOL, scale: float | None = None) -> int:
    """Count singular values above the tolerance threshold.

    Parameters
    ----------
    M : array_like
        Nonempty matrix.
    tol : RankTolerance
    scale : float, optional
        Reference magnitude replacing the largest singular value.

    Examples
    --------
    >>> numeric_rank(np.diag([1.0, 1e-14]))
    1
    """
    a = as_dense(M)
    if a.size == 0:
        raise ValueError("numeric_rank needs a nonempty matrix")
    s = _singular_values(a)
    return int(np.sum(s > _threshold(s, a.shape, tol, scale)))


def rank_margin(M, tol: RankTolerance = DEFAULT_TOL, scale: float | None = None) -> float:
    """Distance (as a factor) from the threshold to the nearest singular value.

    A value below 10 means the rank decision is fragile.
    """
    a = as_dense(M)
    if a.size == 0:
        return np.inf
    s = _singular_values(a)
    thr = _threshold(s, a.shape, tol, scale)
    if thr == 0:
        return np.inf
    s = s[s > 0]
    if s.size == 0:
        return np.inf
    return float(np.min(np.maximum(s / thr, thr / s)))


def nullspace_basis(M, tol: RankTolerance = DEFAULT_TOL, scale: float | None = None) -> Subspace:
    """Orthonormal basis of the right kernel of ``M``.

    Examples
    --------
    >>> nullspace_basis([[0, 1], [0, 0]]).basis.real
    array([[1.],
           [0.]])
    """
    a = as_dense(M)
    n = a.shape[1]
    if a.shape[0] == 0:
        return Subspace(np.eye(n, dtype=complex), n)
    _, s, vh = _svd(a, full=True)
    thr = _threshold(s, a.shape, tol, scale)
    r = int(np.sum(s > thr))
    basis = vh[r:].conj().T
    return Subspace(_orthonormalize(basis), n, thr)


def image_basis(M, tol: RankTolerance = DEFAULT_TOL, scale: float | None = None) -> Subspace:
    """Orthonormal basis of the column span of ``M``."""
    a = as_dense(M) if np.size(M) else np.zeros(np.shape(M), dtype=complex)
    m = a.shape[0]
    if a.shape[1] == 0 or m == 0:
        return Subspace.zero(m)
    u, s, _ = _svd(a)
    thr = _threshold(s, a.shape, tol, scale)
    r = int(np.sum(s > thr))
    return Subspace(_orthonormalize(u[:, :r]), m, thr)


def preimage(M, S: Subspace, tol: RankTolerance = DEFAULT_TOL,
             scale: float | None = None) -> Subspace:
    """Set preimage ``{x : M x in span(S)}``.

    Computed as the kernel of ``(I - S S^H) M``. The rank threshold is taken
    relative to the norm of ``M`` itself, since the projected matrix can be
    much smaller than ``M`` when most of its range lies inside ``S``.
    ``scale`` overrides that reference norm.
    """
    a = as_dense(M)
    if S.ambient_dim != a.shape[0]:
        raise ValueError(f"subspace ambient dimension {S.ambient_dim} != rows {a.shape[0]}")
    projected = a - S.basis @ (S.basis.conj().T @ a)
    if scale is None:
        scale = spectral_norm(a) if a.size else 0.0
    return nullspace_basis(projected, tol, scale=scale)


def spectral_norm(M) -> float:
    """Largest singular value."""
    a = as_dense(M)
    if a.size == 1:
        return float(abs(a[0, 0]))
    return float(_singular_values(a)[0])


def smallest_singular_value(M) -> float:
    """Smallest singular value (``min(rows, cols)``-th)."""
    a = as_dense(M)
    if a.size == 1:
        return float(abs(a[0, 0]))
    return float(_singular_values(a)[-1])


def contains(outer: Subspace, inner: Subspace, angle_tol: float = ANGLE_TOL) -> bool:
    """True when every principal angle of ``inner`` against ``outer`` has sine below ``angle_tol``."""
    if outer.ambient_dim != inner.ambient_dim:
        raise ValueError("ambient dimensions differ")
    if inner.dim == 0:
        return True
    if inner.dim > outer.dim:
        return False
    residual = inner.basis - outer.basis @ (outer.basis.conj().T @ inner.basis)
    return spectral_norm(residual) < angle_tol


def subspace_equal(a: Subspace, b: Subspace, angle_tol: float = ANGLE_TOL) -> bool:
    """Span equality via both containments."""
    return a.dim == b.dim and contains(a, b, angle_tol) and contains(b, a, angle_tol)


def _orthonormalize(b):
    # SVD factors are orthonormal up to rounding; a QR pass removes drift
    if b.shape[1] == 0:
        return b
    q, _ = np.linalg.qr(b)
    return q
