"""Ball-arithmetic evaluation of pencil resolvents with adaptive precision.

For a pencil with a degree-``nu`` nilpotent block, ``lambda E - A`` has a
condition number growing like ``lambda^nu``, and products of E-resolvents
cancel to many orders of magnitude. Double precision cannot resolve them at
the sample points used for growth fits, so these are evaluated with
``python-flint`` interval matrices, doubling the working precision until the
enclosure is tight enough.
"""

from __future__ import annotations

import contextlib

import numpy as np
from flint import acb, acb_mat, arb, arb_mat, ctx

__all__ = ["MPPencil", "PrecisionExhausted"]


class PrecisionExhausted(RuntimeError):
    """The enclosure stayed too wide at the maximum precision."""


@contextlib.contextmanager
def _precision(bits):
    old = ctx.prec
    ctx.prec = bits
    try:
        yield
    finally:
        ctx.prec = old


def _to_flint(M, real):
    if real:
        return arb_mat(np.asarray(M.real, dtype=float).tolist())
    n, m = M.shape
    return acb_mat(n, m, [acb(complex(z)) for z in M.ravel()])


def _scalar(lam, real):
    return arb(float(lam.real)) if real else acb(complex(lam))


def _to_numpy(M, real):
    """Midpoint matrix and Frobenius norm of the radius matrix."""
    ent = M.entries()
    n, m = M.nrows(), M.ncols()
    if real:
        mid = np.array([float(x.mid()) for x in ent]).reshape(n, m)
        rad = np.array([float(x.rad()) for x in ent])
    else:
        mid = np.array([complex(float(x.real.mid()), float(x.imag.mid())) for x in ent]).reshape(n, m)
        rad = np.array([float(x.real.rad()) + float(x.imag.rad()) for x in ent])
    return mid, float(np.sqrt(np.sum(rad ** 2)))


class MPPencil:
    """Adaptive-precision resolvent products for a dense pencil.

    Parameters
    ----------
    E, A : ndarray
    start_prec, max_prec : int
        Working precision range in bits.
    rel_tol : float
        Required ratio of enclosure radius to computed norm.
    """

    def __init__(self, E, A, start_prec=128, max_prec=4096, rel_tol=1e-8):
        self.E = np.asarray(E, dtype=complex)
        self.A = np.asarray(A, dtype=complex)
        self.n = self.E.shape[0]
        self.real_pencil = not (np.any(self.E.imag) or np.any(self.A.imag))
        self.start_prec = start_prec
        self.max_prec = max_prec
        self.rel_tol = rel_tol
        self._mats = {}
        self._cache = {}
        self.last_prec = start_prec

    def _real(self, lam):
        return self.real_pencil and complex(lam).imag == 0

    def _pencil(self, real):
        if real not in self._mats:
            self._mats[real] = (_to_flint(self.E, real), _to_flint(self.A, real))
        return self._mats[real]

    def _inverse(self, lam, prec):
        key = ("X", complex(lam), prec)
        if key not in self._cache:
            real = self._real(lam)
            E, A = self._pencil(real)
            with _precision(prec):
                self._cache[key] = (_scalar(complex(lam), real) * E - A).inv()
        return self._cache[key]

    def _factor(self, lam, side, prec):
        key = (side, complex(lam), prec)
        if key not in self._cache:
            X = self._inverse(lam, prec)
            E, _ = self._pencil(self._real(lam))
            if X.__class__ is not E.__class__:
                E = _to_flint(self.E, False)
            with _precision(prec):
                self._cache[key] = X * E if side == "right" else E * X
        return self._cache[key]

    def _product(self, lams, side, prec):
        lams = tuple(complex(z) for z in lams)
        if len(set(lams)) == 1:
            return self._power(lams[0], len(lams), side, prec)
        mats = [self._factor(z, side, prec) for z in lams]
        if len({type(m) for m in mats}) > 1:
            mats = [acb_mat(m) if isinstance(m, arb_mat) else m for m in mats]
        with _precision(prec):
            out = mats[0]
            for m in mats[1:]:
                out = out * m
        return out

    def _power(self, lam, k, side, prec):
        key = ("pow", side, lam, k, prec)
        if key not in self._cache:
            base = self._factor(lam, side, prec)
            if k == 1:
                self._cache[key] = base
            else:
                prev = self._power(lam, k - 1, side, prec)
                with _precision(prec):
                    self._cache[key] = prev * base
        return self._cache[key]

    def _adaptive(self, build, atol, real):
        prec = self.start_prec
        last = None
        while prec <= self.max_prec:
            try:
                M = build(prec)
            except ZeroDivisionError:
                prec *= 2
                continue
            mid, rad = _to_numpy(M, real)
            nrm = float(np.linalg.norm(mid, 2)) if mid.size > 1 else float(abs(mid.ravel()[0]))
            last = nrm
            if rad <= max(atol, self.rel_tol * nrm):
                self.last_prec = prec
                return nrm
            prec *= 2
        if last is None:
            raise ZeroDivisionError("matrix singular at every precision")
        raise PrecisionExhausted(f"enclosure too wide at {self.max_prec} bits")

    def resolvent_norm(self, lam):
        """Spectral norm of ``(lam E - A)^{-1}``."""
        return self._adaptive(lambda prec: self._inverse(lam, prec), 0.0, self._real(lam))

    def product_norm(self, lams, side="right", atol=0.0):
        """Spectral norm of a product of right- or left-E resolvents."""
        real = all(self._real(z) for z in lams)
        return self._adaptive(lambda prec: self._product(lams, side, prec), atol, real)

    def clear(self):
        self._cache.clear()
