"""Boundary coefficients of the limiting processes and lattice walk rates.

The generator domains are cut out by homogeneous linear conditions on the
boundary data of a function.  On the line the condition is

    c1*f(0) + c2m*f'(0-) - c2p*f'(0+) + (c3/2)*f''(0+) = 0,

with nonnegative weights summing to one and c1 != 1.  On two half-lines each
origin carries its own equation

    c1p*f(0+) + ap*(f(0+) - f(0-)) - c2p*f'(0+) + (c3p/2)*f''(0+) = 0,
    c1m*f(0-) + am*(f(0-) - f(0+)) + c2m*f'(0-) + (c3m/2)*f''(0-) = 0,

each homogeneous (so independently rescalable), with max(c2, c3) > 0 on
each side.  Lattice walks carry kill rates A, escape scales B and
side-switch rates C; the diffusive limit maps (A, B, C) onto the boundary
weights with stickiness weight 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import InvalidCoefficientsError

_SUM_TOL = 1e-12


def _check_nonneg(obj) -> None:
    for f in fields(obj):
        v = getattr(obj, f.name)
        if not math.isfinite(v):
            raise InvalidCoefficientsError(f"{f.name} must be finite, got {v!r}")
        if v < 0:
            raise InvalidCoefficientsError(f"{f.name} must be >= 0, got {v!r}")


@dataclass(frozen=True)
class GeneratorCoeffsLine:
    """Boundary weights (kill, left/right reflection, stickiness) on the line.

    Normalized so c1 + c2_minus + c2_plus + c3 = 1; c1 = 1 is excluded
    because the pure-killing condition does not cut out a dense domain.
    """

    c1: float
    c2_minus: float
    c2_plus: float
    c3: float

    def __post_init__(self):
        _check_nonneg(self)
        s = self.c1 + self.c2_minus + self.c2_plus + self.c3
        if s <= 0:
            raise InvalidCoefficientsError("coefficients must not all vanish")
        if abs(s - 1.0) > _SUM_TOL:
            raise InvalidCoefficientsError(
                f"coefficients must sum to 1 (got {s!r}); use normalized_line()"
            )
        if self.c2_minus + self.c2_plus + self.c3 <= _SUM_TOL:
            raise InvalidCoefficientsError("c1 = 1 is not admissible")

    def as_dict(self) -> dict[str, float]:
        return {"c1": self.c1, "c2m": self.c2_minus, "c2p": self.c2_plus, "c3": self.c3}


def normalized_line(c1: float, c2_minus: float, c2_plus: float, c3: float) -> GeneratorCoeffsLine:
    """Build line coefficients from any nonnegative weights, rescaling to unit sum."""
    s = c1 + c2_minus + c2_plus + c3
    if s <= 0:
        raise InvalidCoefficientsError("coefficients must not all vanish")
    return GeneratorCoeffsLine(c1 / s, c2_minus / s, c2_plus / s, c3 / s)


@dataclass(frozen=True)
class GeneratorCoeffsTwoHalf:
    """Per-side boundary weights on two glued half-lines.

    Each side's equation is homogeneous; canonical form divides each side by
    its own coefficient sum.  Validity requires max(c2, c3) > 0 per side,
    otherwise the equation couples f(0+) to f(0-) and the domain is not dense.
    """

    c1_plus: float
    c1_minus: float
    a_plus: float
    a_minus: float
    c2_plus: float
    c2_minus: float
    c3_plus: float
    c3_minus: float

    def __post_init__(self):
        _check_nonneg(self)
        if max(self.c2_plus, self.c3_plus) <= 0:
            raise InvalidCoefficientsError("need max(c2_plus, c3_plus) > 0")
        if max(self.c2_minus, self.c3_minus) <= 0:
            raise InvalidCoefficientsError("need max(c2_minus, c3_minus) > 0")

    def plus_sum(self) -> float:
        return self.c1_plus + self.a_plus + self.c2_plus + self.c3_plus

    def minus_sum(self) -> float:
        return self.c1_minus + self.a_minus + self.c2_minus + self.c3_minus

    def canonical(self) -> "GeneratorCoeffsTwoHalf":
        """Rescale each side's equation to unit coefficient sum."""
        sp, sm = self.plus_sum(), self.minus_sum()
        return GeneratorCoeffsTwoHalf(
            self.c1_plus / sp, self.c1_minus / sm,
            self.a_plus / sp, self.a_minus / sm,
            self.c2_plus / sp, self.c2_minus / sm,
            self.c3_plus / sp, self.c3_minus / sm,
        )

    def as_dict(self) -> dict[str, float]:
        return {
            "c1p": self.c1_plus, "c1m": self.c1_minus,
            "ap": self.a_plus, "am": self.a_minus,
            "c2p": self.c2_plus, "c2m": self.c2_minus,
            "c3p": self.c3_plus, "c3m": self.c3_minus,
        }


@dataclass(frozen=True)
class WalkParamsLine:
    """Lattice rates at the line origin: kill rate A, exit scales B+/B-.

    At scale n the origin site jumps to the cemetery at rate A, to +1/n at
    rate n*B_plus and to -1/n at rate n*B_minus; interior sites jump to each
    neighbour at rate n^2/2.
    """

    A: float = 0.0
    B_plus: float = 0.0
    B_minus: float = 0.0

    def __post_init__(self):
        _check_nonneg(self)

    def as_dict(self) -> dict[str, float]:
        return {"a": self.A, "b_plus": self.B_plus, "b_minus": self.B_minus}


@dataclass(frozen=True)
class WalkParamsTwoHalf:
    """Lattice rates at the doubled origin: kills A+/-, exits B+/-, switches C+/-."""

    A_plus: float = 0.0
    A_minus: float = 0.0
    B_plus: float = 0.0
    B_minus: float = 0.0
    C_plus: float = 0.0
    C_minus: float = 0.0

    def __post_init__(self):
        _check_nonneg(self)

    def as_dict(self) -> dict[str, float]:
        return {
            "a_plus": self.A_plus, "a_minus": self.A_minus,
            "b_plus": self.B_plus, "b_minus": self.B_minus,
            "c_plus": self.C_plus, "c_minus": self.C_minus,
        }


def coeffs_from_walk_line(p: WalkParamsLine) -> GeneratorCoeffsLine:
    """Boundary weights of the diffusive limit of a line walk.

    The limit identifies c1 = A, c2+ = B+, c2- = B-, c3 = 1; the result is
    normalized to unit sum, so c1 < 1 holds automatically.
    """
    return normalized_line(p.A, p.B_minus, p.B_plus, 1.0)


def coeffs_from_walk_two_half(
    p: WalkParamsTwoHalf, normalize: bool = True
) -> GeneratorCoeffsTwoHalf:
    """Per-side boundary weights of the diffusive limit of a two-half walk.

    Side by side, c1 = A, c2 = B, c3 = 1 and the switch weight a = C; the
    stickiness weight 1 guarantees max(c2, c3) > 0 on both sides.
    """
    k = GeneratorCoeffsTwoHalf(
        c1_plus=p.A_plus, c1_minus=p.A_minus,
        a_plus=p.C_plus, a_minus=p.C_minus,
        c2_plus=p.B_plus, c2_minus=p.B_minus,
        c3_plus=1.0, c3_minus=1.0,
    )
    return k.canonical() if normalize else k


def snapping_out_coeffs(kappa: float) -> GeneratorCoeffsTwoHalf:
    """Reflected half-lines exchanged at local-time rate kappa: a+- = kappa/2, c2 = 1."""
    if kappa <= 0:
        raise InvalidCoefficientsError("kappa must be positive")
    return GeneratorCoeffsTwoHalf(
        c1_plus=0.0, c1_minus=0.0,
        a_plus=kappa / 2.0, a_minus=kappa / 2.0,
        c2_plus=1.0, c2_minus=1.0,
        c3_plus=0.0, c3_minus=0.0,
    )
