"""Exact indices of finite-dimensional regular pencils.

Each index is computed by its own algorithm so that the results can be
cross-checked:

* nilpotency: kernel chain of the right-E resolvent at one point,
* chain: stabilization step of the second Wong sequence plus an explicit
  maximal chain verified against the defining relations,
* resolvent and radiality: read off the nilpotency degree of the
  Weierstrass block, which is where they coincide in finite dimensions,
* differentiation: single-valuedness of ``x0 -> x1`` on the kernel of the
  derivative array.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .matrixkit import (
    DEFAULT_TOL,
    RankTolerance,
    Subspace,
    nullspace_basis,
    preimage,
    rank_margin,
    smallest_singular_value,
    spectral_norm,
)
from .pencil import (
    NotRegularError,
    Pencil,
    ToleranceError,
    WeierstrassDecomposition,
    is_regular,
    quasi_weierstrass,
)

__all__ = [
    "IndexValue",
    "IndexReport",
    "INDEX_NAMES",
    "SCHEMA",
    "Value",
    "NoIndex",
    "Superpolynomial",
    "kernel_chain",
    "nilpotency_index",
    "chain_index",
    "maximal_chain",
    "resolvent_index_exact",
    "radiality_index_exact",
    "complex_resolvent_index_exact",
    "complex_radiality_index_exact",
    "build_derivative_array",
    "differentiation_index",
    "DissipativeCheck",
    "check_dissipative_structure",
    "exact_report",
]

SCHEMA = "daedex/1"
INDEX_NAMES = ("nilpotency", "chain", "resolvent", "complex_resolvent", "radiality",
               "complex_radiality", "differentiation", "perturbation")

#: Sine threshold for "this block vanishes" on orthonormal coordinates.
VANISH_TOL = 1e-7
#: Relative residual allowed in explicit chain verification.
CHAIN_TOL = 1e-8


@dataclass(frozen=True)
class IndexValue:
    """One index outcome.

    Attributes
    ----------
    kind : {"value", "no_index", "superpolynomial"}
    value : int or None
    method : {"exact", "estimated"}
    evidence : str
    flags : tuple of str
        Diagnostic warnings (fragile rank decisions, inconclusive fits, ...).
    """

    kind: str
    value: int | None = None
    method: str = "exact"
    evidence: str = ""
    flags: tuple = ()

    def __post_init__(self):
        if self.kind not in ("value", "no_index", "superpolynomial"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "value" and (self.value is None or self.value < 0):
            raise ValueError("Value(k) needs k >= 0")
        if self.method not in ("exact", "estimated"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def is_value(self) -> bool:
        return self.kind == "value"

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "method": self.method, "evidence": self.evidence}
        if self.kind == "value":
            d["value"] = int(self.value)
        if self.flags:
            d["flags"] = list(self.flags)
        return d

    def __str__(self):
        body = str(self.value) if self.kind == "value" else self.kind
        return f"{body} ({self.method})"


def Value(k: int, method: str = "exact", evidence: str = "", flags=()) -> IndexValue:
    return IndexValue("value", int(k), method, evidence, tuple(flags))


def NoIndex(method: str = "exact", evidence: str = "", flags=()) -> IndexValue:
    return IndexValue("no_index", None, method, evidence, tuple(flags))


def Superpolynomial(method: str = "estimated", evidence: str = "", flags=()) -> IndexValue:
    return IndexValue("superpolynomial", None, method, evidence, tuple(flags))


@dataclass
class IndexReport:
    """All index values for one pencil or example."""

    label: str
    entries: dict
    tolerances: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def consistency_violations(self) -> list[str]:
        """Relations that must hold when all finite-dimensional entries are exact values."""
        e = self.entries
        need = ("nilpotency", "chain", "differentiation", "resolvent", "radiality")
        if not all(k in e and e[k].is_value and e[k].method == "exact" for k in need):
            return []
        nu = e["nilpotency"].value
        out = []
        if not nu == e["chain"].value == e["differentiation"].value:
            out.append("nilpotency, chain and differentiation differ")
        if nu >= 1 and e["resolvent"].value != nu:
            out.append("resolvent differs from nilpotency")
        if nu >= 1 and e["radiality"].value != nu - 1:
            out.append("radiality differs from nilpotency - 1")
        return out

    def to_dict(self) -> dict:
        d = {"schema": SCHEMA, "label": self.label, "tolerances": self.tolerances}
        for name in INDEX_NAMES:
            if name in self.entries:
                d[name] = self.entries[name].to_dict()
        if self.estimates:
            d["estimates"] = {k: v.to_dict() for k, v in sorted(self.estimates.items())}
        if self.notes:
            d["notes"] = list(self.notes)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# nilpotency


def kernel_chain(p: Pencil, lam: complex, tol: RankTolerance = DEFAULT_TOL):
    """Kernels of powers of ``R^E(lam) = (lam E - A)^{-1} E``.

    Uses ``ker (R^E)^k = E^{-1}((lam E - A) ker (R^E)^{k-1})``, which needs no
    inverse and so stays well conditioned for high-index pencils. The spaces
    are nested, so the chain has stabilized once the dimension stops growing.

    Returns
    -------
    spaces : list of Subspace
        ``ker (R^E)^0, ker (R^E)^1, ...`` up to the first repetition.
    margin : float
        Smallest rank margin met along the way (below 10 is fragile).
    drift : float
        Principal-angle sine between the last space and its recomputation.
    """
    n = p.n
    M = p.matrix(lam)
    sE = spectral_norm(p.E)
    spaces = [Subspace.zero(n)]
    margin = np.inf
    for _ in range(n + 1):
        # M is invertible at lam, so the image keeps its dimension
        img = _orth(M @ spaces[-1].basis)
        proj = p.E - img.basis @ (img.basis.conj().T @ p.E)
        margin = min(margin, rank_margin(proj, tol, scale=sE))
        nxt = preimage(p.E, img, tol, scale=sE)
        if nxt.dim <= spaces[-1].dim:
            return spaces, margin, _drift(spaces[-1], nxt)
        spaces.append(nxt)
    raise ToleranceError("kernel chain did not stabilize")


def _drift(S, T):
    """Largest principal-angle sine between two spaces of equal dimension."""
    if S.dim == 0 or T.dim == 0:
        return 0.0
    return float(np.linalg.svd(T.basis - S.basis @ (S.basis.conj().T @ T.basis), compute_uv=False).max())


def _orth(X):
    n = X.shape[0]
    if X.shape[1] == 0:
        return Subspace.zero(n)
    U = np.linalg.svd(X, full_matrices=False)[0]
    return Subspace(U, n, 0.0)


#: Probe radii tried for the kernel chain, as powers of 1/2 of ``1 + |E| + |A|``.
CHAIN_RADII = 9


def nilpotency_index(p: Pencil, tol: RankTolerance = DEFAULT_TOL, seed: int = 42) -> IndexValue:
    """Smallest ``k`` with ``ker (R^E)^k = ker (R^E)^{k+1}``.

    The pencil is first balanced (an equivalence, which keeps every index).
    Probe points on halving radii are tried and the chain whose rank
    decisions keep the largest distance from the threshold is used; a best
    margin below 10 is flagged.

    Examples
    --------
    >>> nilpotency_index(Pencil([[0, 1], [0, 0]], np.eye(2))).value
    2
    """
    w = is_regular(p, tol, seed)
    if not w.regular:
        raise NotRegularError("pencil not regular")
    q = _equilibrate(p)
    rng = np.random.default_rng(seed)
    sE, sA = spectral_norm(q.E), spectral_norm(q.A)
    rho = 1.0 + sE + sA
    eps = np.finfo(float).eps
    best = None
    for j in range(CHAIN_RADII):
        lam = rho * 0.5 ** j * np.exp(1j * rng.uniform(0.2, 1.3))
        if smallest_singular_value(q.matrix(lam)) <= 1e3 * eps * (abs(lam) * sE + sA):
            continue
        spaces, margin, drift = kernel_chain(q, lam, tol)
        if best is None or margin > best[1]:
            best = (spaces, margin, lam, drift)
        if margin >= 1e4:
            break
    if best is None:
        raise ToleranceError("no well-conditioned probe point for the kernel chain")
    spaces, margin, lam, drift = best
    flags = [f"rank decision within factor {margin:.2g} of threshold"] if margin < 10 else []
    dims = [s.dim for s in spaces]
    k = len(spaces) - 1
    return Value(k, "exact", f"dim ker (R^E)^k for k=0..{k}: {dims}; lambda={_fmt(lam)} (balanced pencil); "
                 f"span drift at stabilization {drift:.1e}", flags)


# --------------------------------------------------------------------------
# chain


def maximal_chain(d: WeierstrassDecomposition) -> list[np.ndarray]:
    """Chain ``x_k = P^{-1} (0, N^{nu-k} z)``, ``k = 1..nu``.

    ``z`` is the dominant right singular vector of ``N^{nu-1}``.
    """
    nu = d.nilpotency_degree
    if nu == 0:
        return []
    Npow = np.linalg.matrix_power(d.N, nu - 1)
    z = np.linalg.svd(Npow)[2][0].conj()
    chain = []
    for k in range(1, nu + 1):
        y = np.linalg.matrix_power(d.N, nu - k) @ z
        chain.append(d.P_inv @ np.concatenate([np.zeros(d.d1, dtype=complex), y]))
    return chain


def _verify_chain(p, chain):
    sE, sA = spectral_norm(p.E), spectral_norm(p.A)
    worst = 0.0
    for k, x in enumerate(chain):
        nx = np.linalg.norm(x)
        if k == 0:
            worst = max(worst, np.linalg.norm(p.E @ x) / (sE * nx))
        else:
            prev = chain[k - 1]
            r = np.linalg.norm(p.E @ x - p.A @ prev)
            worst = max(worst, r / (sE * nx + sA * np.linalg.norm(prev)))
        if np.linalg.norm(p.A @ x) <= CHAIN_TOL * sA * nx:
            raise ToleranceError(f"chain vector {k + 1} lies in ker A")
    if worst > CHAIN_TOL:
        raise ToleranceError(f"chain relations violated (relative residual {worst:.2e})")
    return worst


def chain_index(p: Pencil, tol: RankTolerance = DEFAULT_TOL,
                decomposition: WeierstrassDecomposition | None = None) -> IndexValue:
    """Stabilization step of ``W_{i+1} = E^{-1}(A W_i)``, with a verified chain.

    Examples
    --------
    >>> chain_index(Pencil([[0, 1], [0, 0]], np.eye(2))).value
    2
    """
    d = decomposition or quasi_weierstrass(p, tol)
    k = d.wong.k_stab
    chain = maximal_chain(d)
    res = _verify_chain(p, chain) if chain else 0.0
    flags = []
    if len(chain) != k:
        flags.append(f"W-sequence step {k} differs from constructed chain length {len(chain)}")
    ev = f"W dims {d.wong.w_steps}; explicit chain of length {len(chain)} verified (residual {res:.1e})"
    return Value(k, "exact", ev, flags)


# --------------------------------------------------------------------------
# resolvent and radiality


def resolvent_index_exact(p: Pencil, tol: RankTolerance = DEFAULT_TOL,
                          decomposition: WeierstrassDecomposition | None = None) -> IndexValue:
    """``nu`` when the nilpotent block is present, else 0.

    With ``E`` invertible the resolvent decays like ``1/lambda``, which is the
    ``p = 0`` bound.
    """
    d = decomposition or quasi_weierstrass(p, tol)
    nu = d.nilpotency_degree
    if nu == 0:
        return Value(0, "exact", "E invertible: resolvent decays like 1/lambda")
    return Value(nu, "exact", f"(lambda N - I)^-1 grows like lambda^{nu - 1} (degree {nu} block)")


def radiality_index_exact(p: Pencil, tol: RankTolerance = DEFAULT_TOL,
                          decomposition: WeierstrassDecomposition | None = None) -> IndexValue:
    """``nu - 1`` when the nilpotent block is present; 0 with a flag otherwise."""
    d = decomposition or quasi_weierstrass(p, tol)
    nu = d.nilpotency_degree
    if nu == 0:
        return Value(0, "exact", "E invertible: p = 0 bound holds for omega above the spectrum",
                     ("relation radiality = nilpotency - 1 inapplicable without a nilpotent block",))
    return Value(nu - 1, "exact", f"products of {nu} right-E resolvents contain N^{nu} = 0")


def complex_resolvent_index_exact(p: Pencil, tol: RankTolerance = DEFAULT_TOL,
                                  decomposition=None) -> IndexValue:
    v = resolvent_index_exact(p, tol, decomposition)
    return Value(v.value, "exact", "finite dimension: half-plane bound equals real-axis bound; " + v.evidence,
                 v.flags)


def complex_radiality_index_exact(p: Pencil, tol: RankTolerance = DEFAULT_TOL,
                                  decomposition=None) -> IndexValue:
    v = radiality_index_exact(p, tol, decomposition)
    return Value(v.value, "exact", "finite dimension: half-plane bound equals real-axis bound; " + v.evidence,
                 v.flags)


# --------------------------------------------------------------------------
# differentiation


def _equilibrate(p: Pencil, sweeps: int = 20) -> Pencil:
    """Equivalent pencil with balanced rows and columns and unit-norm coefficients.

    Diagonal scalings by powers of two (exact in floating point) followed by
    a time rescaling; none of these changes any index.
    """
    E, A = p.E.copy(), p.A.copy()
    for _ in range(sweeps):
        M = np.abs(E) + np.abs(A)
        r = np.exp2(-np.round(np.log2(np.sqrt(np.maximum(M.max(axis=1), 1e-300)))))
        c = np.exp2(-np.round(np.log2(np.sqrt(np.maximum(M.max(axis=0), 1e-300)))))
        if np.all(r == 1) and np.all(c == 1):
            break
        E, A = r[:, None] * E * c[None, :], r[:, None] * A * c[None, :]
    sE, sA = spectral_norm(E), spectral_norm(A)
    return Pencil(E / max(sE, 1e-300), A / max(sA, 1e-300), p.label)


def build_derivative_array(p: Pencil, mu: int) -> np.ndarray:
    """Block bidiagonal ``(mu+1) n x (mu+2) n`` matrix with ``A`` on the
    diagonal blocks and ``-E`` on the superdiagonal blocks.

    Examples
    --------
    >>> build_derivative_array(Pencil(np.eye(1), np.zeros((1, 1))), 1).real
    array([[ 0., -1.,  0.],
           [ 0.,  0., -1.]])
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    n = p.n
    M = np.zeros(((mu + 1) * n, (mu + 2) * n), dtype=complex)
    for i in range(mu + 1):
        M[i * n:(i + 1) * n, i * n:(i + 1) * n] = p.A
        M[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = -p.E
    return M


def differentiation_index(p: Pencil, mu_max: int | None = None,
                          tol: RankTolerance = DEFAULT_TOL) -> IndexValue:
    """Smallest ``mu`` for which the kernel of ``M_mu`` determines ``x1`` from ``x0``.

    Kernel vectors whose ``x0`` block vanishes must have a vanishing ``x1``
    block.

    Examples
    --------
    >>> differentiation_index(Pencil([[0, 1], [0, 0]], np.eye(2))).value
    2
    """
    n = p.n
    mu_max = n + 1 if mu_max is None else mu_max
    p = _equilibrate(p)
    leaks = []
    for mu in range(mu_max + 1):
        M = build_derivative_array(p, mu)
        K = nullspace_basis(M, tol).basis
        K0, K1 = K[:n], K[n:2 * n]
        Z = nullspace_basis(K0, tol, scale=1.0).basis if K.shape[1] else K[:0, :0]
        leak = spectral_norm(K1 @ Z) if Z.shape[1] else 0.0
        leaks.append(leak)
        if leak <= VANISH_TOL:
            return Value(mu, "exact", f"ker M_mu leak of x1 given x0 = 0, mu=0..{mu}: "
                         + ", ".join(f"{v:.1e}" for v in leaks))
    return NoIndex("exact", f"no mu <= {mu_max} makes x1 a function of x0")


# --------------------------------------------------------------------------
# dissipative structure


@dataclass(frozen=True)
class DissipativeCheck:
    applies: bool
    asserted_bound: int = 2
    asymmetry: float = 0.0
    min_eig_E: float = 0.0
    max_eig_A: float = 0.0


def check_dissipative_structure(p: Pencil, tol: float = 1e-10) -> DissipativeCheck:
    """``E`` Hermitian nonnegative and ``A`` dissipative, up to ``tol`` times the norms.

    When it applies, the resolvent index is at most 2.
    """
    E, A = p.E, p.A
    sE, sA = max(spectral_norm(E), 1.0), max(spectral_norm(A), 1.0)
    asym = float(np.linalg.norm(E - E.conj().T, 2))
    emin = float(np.linalg.eigvalsh((E + E.conj().T) / 2).min())
    amax = float(np.linalg.eigvalsh((A + A.conj().T) / 2).max())
    ok = asym < tol * sE and emin >= -tol * sE and amax <= tol * sA
    return DissipativeCheck(bool(ok), 2, asym, emin, amax)


# --------------------------------------------------------------------------
# full exact report


def exact_report(p: Pencil, tol: RankTolerance = DEFAULT_TOL, mu_max: int | None = None,
                 seed: int = 42) -> IndexReport:
    """Exact finite-dimensional indices (perturbation is left to estimation)."""
    d = quasi_weierstrass(p, tol)
    entries = {
        "nilpotency": nilpotency_index(p, tol, seed),
        "chain": chain_index(p, tol, d),
        "resolvent": resolvent_index_exact(p, tol, d),
        "complex_resolvent": complex_resolvent_index_exact(p, tol, d),
        "radiality": radiality_index_exact(p, tol, d),
        "complex_radiality": complex_radiality_index_exact(p, tol, d),
        "differentiation": differentiation_index(p, mu_max, tol),
    }
    rep = IndexReport(p.label, entries, {"rank_relative": tol.relative, "rank_absolute": tol.absolute})
    for v in rep.consistency_violations():
        rep.notes.append("inconsistency: " + v)
    return rep


def _fmt(z: complex) -> str:
    return f"{z.real:.6g}{z.imag:+.6g}i"
