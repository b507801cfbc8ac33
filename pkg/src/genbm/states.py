"""State spaces: the punctured line, two glued half-lines, and their lattices.

Macroscopic states live on R with a single origin, or on two closed
half-lines whose origins 0+ and 0- are distinct points.  Both spaces carry
an absorbing cemetery state.  Lattice states are integer sites at spacing
1/n plus the origin site(s) and the cemetery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidFunctionError

LINE = "line"
TWO_HALF = "two_half"

# Side tags for macroscopic points.
_KIND_LINE = "line"
_KIND_POS = "pos"
_KIND_NEG = "neg"
_KIND_CEMETERY = "cemetery"


@dataclass(frozen=True)
class StatePoint:
    """A point of the state space: a real position with a side tag, or the cemetery."""

    kind: str
    x: float = 0.0

    def __post_init__(self):
        if self.kind not in (_KIND_LINE, _KIND_POS, _KIND_NEG, _KIND_CEMETERY):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.kind != _KIND_CEMETERY and not math.isfinite(self.x):
            raise InvalidFunctionError("state coordinate must be finite")
        if self.kind == _KIND_POS and self.x < 0:
            raise InvalidFunctionError("positive half-line point needs x >= 0")
        if self.kind == _KIND_NEG and self.x > 0:
            raise InvalidFunctionError("negative half-line point needs x <= 0")

    @property
    def is_cemetery(self) -> bool:
        return self.kind == _KIND_CEMETERY


CEMETERY = StatePoint(_KIND_CEMETERY)


def line_point(x: float) -> StatePoint:
    return StatePoint(_KIND_LINE, float(x))


def pos_point(x: float) -> StatePoint:
    """Point on the closed right half-line; pos_point(0.0) is the 0+ origin."""
    return StatePoint(_KIND_POS, float(x))


def neg_point(x: float) -> StatePoint:
    """Point on the closed left half-line; neg_point(0.0) is the 0- origin."""
    return StatePoint(_KIND_NEG, float(x))


ZERO_PLUS = pos_point(0.0)
ZERO_MINUS = neg_point(0.0)


# ---------------------------------------------------------------------------
# Lattice states.
#
# Inside the simulation kernels a state is a single int64 code:
#
#   line:      code = site k, cemetery = CEMETERY_CODE
#   two_half:  code = k + 1 for plus-side site k >= 0   (so 0+ -> 1),
#              code = -(|k| + 1) for minus-side site k <= 0 (so 0- -> -1),
#              cemetery = 0
#
# The two-half encoding keeps |code| - 1 equal to the lattice distance from
# the origin of the respective side, with the side read off the sign.
# ---------------------------------------------------------------------------

CEMETERY_CODE = -(2**62)  # line-topology cemetery sentinel
TH_CEMETERY_CODE = 0  # two-half cemetery


@dataclass(frozen=True)
class LatticeState:
    """A lattice walk state: an integer site, an origin state, or the cemetery.

    ``site`` is the signed lattice index (position = site / n).  For the
    two-half topology the origins carry ``site = 0`` and are told apart by
    ``side`` (+1 for 0+, -1 for 0-); interior sites have the sign of their
    index as side.
    """

    topology: str
    site: int = 0
    side: int = 0
    cemetery: bool = False

    def __post_init__(self):
        if self.topology not in (LINE, TWO_HALF):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.cemetery:
            return
        if self.topology == TWO_HALF:
            if self.side not in (-1, 1):
                raise ValueError("two-half lattice state needs side +1 or -1")
            if self.site != 0 and (self.site > 0) != (self.side > 0):
                raise ValueError("site sign inconsistent with side tag")

    @property
    def is_origin(self) -> bool:
        return not self.cemetery and self.site == 0

    @property
    def label(self) -> str:
        """Text label used in CSV path dumps: integer site, '0', '0+', '0-', or 'D'."""
        if self.cemetery:
            return "D"
        if self.topology == LINE:
            return str(self.site)
        if self.site == 0:
            return "0+" if self.side > 0 else "0-"
        return str(self.site)

    def to_point(self, n: int) -> StatePoint:
        """Macroscopic position of this lattice state at scale n."""
        if self.cemetery:
            return CEMETERY
        if self.topology == LINE:
            return line_point(self.site / n)
        if self.side > 0:
            return pos_point(self.site / n)
        return neg_point(self.site / n)

    def code(self) -> int:
        """Integer code used by the simulation kernels."""
        if self.topology == LINE:
            return CEMETERY_CODE if self.cemetery else self.site
        if self.cemetery:
            return TH_CEMETERY_CODE
        if self.side > 0:
            return self.site + 1
        return -(abs(self.site) + 1)


def lattice_cemetery(topology: str) -> LatticeState:
    return LatticeState(topology, cemetery=True)


def line_site(site: int) -> LatticeState:
    return LatticeState(LINE, site=int(site))


def half_site(site: int, side: int) -> LatticeState:
    """Two-half site; ``half_site(0, +1)`` is 0+ and ``half_site(0, -1)`` is 0-."""
    site = int(site)
    if site != 0:
        side = 1 if site > 0 else -1
    return LatticeState(TWO_HALF, site=site, side=int(side))


def state_from_code(code: int, topology: str) -> LatticeState:
    """Inverse of :meth:`LatticeState.code`."""
    if topology == LINE:
        if code == CEMETERY_CODE:
            return lattice_cemetery(LINE)
        return line_site(code)
    if code == TH_CEMETERY_CODE:
        return lattice_cemetery(TWO_HALF)
    if code > 0:
        return half_site(code - 1, +1)
    return half_site(-(-code - 1), -1)


def parse_state_label(label: str, topology: str) -> LatticeState:
    """Parse a CSV state label back into a lattice state."""
    if label == "D":
        return lattice_cemetery(topology)
    if label == "0+":
        return half_site(0, +1)
    if label == "0-":
        return half_site(0, -1)
    site = int(label)
    if topology == LINE:
        return line_site(site)
    return half_site(site, 1 if site > 0 else -1)
