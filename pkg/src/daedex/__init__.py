"""Index analysis for linear differential-algebraic equations ``d/dt Ex = Ax + f``."""

from .matrixkit import RankTolerance, Subspace
from .pencil import (
    Pencil,
    is_regular,
    left_E_resolvent,
    load_pencil,
    quasi_weierstrass,
    resolvent,
    right_E_resolvent,
    wong_sequences,
)

__version__ = "0.1.0"
