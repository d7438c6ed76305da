"""Critical point record shared by every solver."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

DEGENERACY_BAND = 1e-6


class CriticalClass(str, Enum):
    MAXIMUM = "maximum"
    SADDLE = "saddle"
    DEGENERATE = "degenerate"


def classify(multiplier: float, band: float = DEGENERACY_BAND) -> CriticalClass:
    """Maximum for an attracting fixed point, saddle for a repelling one.

    The Hessian of v at a critical point has determinant ``1 - |F'|**2`` and
    trace -2, so ``|F'| < 1`` means a maximum and ``|F'| > 1`` a saddle.
    """
    if multiplier < 1.0 - band:
        return CriticalClass.MAXIMUM
    if multiplier > 1.0 + band:
        return CriticalClass.SADDLE
    return CriticalClass.DEGENERATE


@dataclass(frozen=True)
class CriticalPoint:
    location: complex
    kind: CriticalClass
    multiplier: float
    residual: float
    value: float
    multiplicity: int = 1
    preimage: complex | None = None  # disk coordinate, for conformal-map solvers

    @property
    def is_maximum(self) -> bool:
        return self.kind is CriticalClass.MAXIMUM

    @property
    def is_saddle(self) -> bool:
        return self.kind is CriticalClass.SADDLE


def count_kinds(points):
    """(maxima, saddles, degenerate) counted with multiplicity."""
    m = sum(p.multiplicity for p in points if p.kind is CriticalClass.MAXIMUM)
    s = sum(p.multiplicity for p in points if p.kind is CriticalClass.SADDLE)
    d = sum(p.multiplicity for p in points if p.kind is CriticalClass.DEGENERATE)
    return m, s, d
