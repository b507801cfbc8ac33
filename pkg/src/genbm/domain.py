"""Generator-domain functions, boundary residuals, projection, dissipativity.

A :class:`DomainFunction` is a real function on one of the two state spaces
together with its recorded boundary data (one-sided values and first and
second derivatives at the origin).  The boundary residuals evaluate the
left-hand sides of the domain equations; the projector repairs an arbitrary
continuous function so that the equations hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .coeffs import GeneratorCoeffsLine, GeneratorCoeffsTwoHalf
from .errors import (
    ContractNotApplicableError,
    InvalidCoefficientsError,
    InvalidFunctionError,
)
from .states import LINE, TWO_HALF, StatePoint

_FD_STEP = 1e-4
# One-sided 4th-order stencils at distance 0, h, ..., from the boundary.
_D1_W = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_D2_W = np.array([15.0 / 4.0, -77.0 / 6.0, 107.0 / 6.0, -13.0, 61.0 / 12.0, -5.0 / 6.0])

DEFAULT_DECAY_RADIUS = 50.0
DEFAULT_DECAY_TOL = 1e-6


@dataclass(frozen=True)
class BoundaryData:
    """One-sided boundary values f(0+-), f'(0+-), f''(0+-)."""

    f0_plus: float
    f0_minus: float
    f1_plus: float
    f1_minus: float
    f2_plus: float
    f2_minus: float

    def scale(self) -> float:
        return max(
            abs(self.f0_plus), abs(self.f0_minus),
            abs(self.f1_plus), abs(self.f1_minus),
            abs(self.f2_plus), abs(self.f2_minus), 1.0,
        )


def _one_sided_data(fn: Callable[[np.ndarray], np.ndarray], sign: int, h: float = _FD_STEP):
    """(value, first, second) derivative data at 0 from the side ``sign``."""
    xs = sign * h * np.arange(6.0)
    vals = np.asarray(fn(xs), dtype=float)
    f0 = float(vals[0])
    f1 = sign * float(_D1_W @ vals[:5]) / h
    f2 = float(_D2_W @ vals) / (h * h)
    return f0, f1, f2


@dataclass(frozen=True)
class DomainFunction:
    """A function on the line or on two half-lines with recorded boundary data.

    ``pos`` and ``neg`` are vectorized callables for the closed right and left
    half-lines (on the line they are two views of the same function).  The
    cemetery value is identically zero.  ``d2_pos``/``d2_neg`` optionally give
    the second derivative; when absent, finite differences are used.
    """

    topology: str
    pos: Callable[[np.ndarray], np.ndarray]
    neg: Callable[[np.ndarray], np.ndarray]
    boundary_data: BoundaryData
    d2_pos: Callable[[np.ndarray], np.ndarray] | None = None
    d2_neg: Callable[[np.ndarray], np.ndarray] | None = None
    breakpoints: tuple[float, ...] = (0.0,)

    def __call__(self, p: StatePoint) -> float:
        if p.is_cemetery:
            return 0.0
        if p.kind == "neg" or (p.kind == "line" and p.x < 0):
            return float(np.asarray(self.neg(np.array([p.x])))[0])
        return float(np.asarray(self.pos(np.array([p.x])))[0])

    def eval_side(self, x: np.ndarray, side: int) -> np.ndarray:
        fn = self.pos if side > 0 else self.neg
        return np.asarray(fn(np.asarray(x, dtype=float)), dtype=float)

    def eval_line(self, x: np.ndarray) -> np.ndarray:
        """Evaluate at signed positions, using the matching side for each point."""
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        m = x >= 0
        if m.any():
            out[m] = self.eval_side(x[m], +1)
        if (~m).any():
            out[~m] = self.eval_side(x[~m], -1)
        return out

    def second_derivative(self, x: np.ndarray, side: int, h: float = 1e-3) -> np.ndarray:
        d2 = self.d2_pos if side > 0 else self.d2_neg
        if d2 is not None:
            return np.asarray(d2(np.asarray(x, dtype=float)), dtype=float)
        x = np.asarray(x, dtype=float)
        fn = self.pos if side > 0 else self.neg
        return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / (h * h)

    def decays(self, radius: float = DEFAULT_DECAY_RADIUS, tol: float = DEFAULT_DECAY_TOL) -> bool:
        probe = radius * (1.0 + 0.5 * np.arange(8.0))
        return bool(
            np.all(np.abs(self.eval_side(probe, +1)) < tol)
            and np.all(np.abs(self.eval_side(-probe, -1)) < tol)
        )

    def check_boundary_consistency(self, tol: float = 1e-4) -> None:
        """Verify stored boundary data against one-sided finite differences."""
        bd = self.boundary_data
        f0p, f1p, f2p = _one_sided_data(self.pos, +1)
        f0m, f1m, f2m = _one_sided_data(self.neg, -1)
        s = bd.scale()
        errs = {
            "f0_plus": abs(f0p - bd.f0_plus), "f0_minus": abs(f0m - bd.f0_minus),
            "f1_plus": abs(f1p - bd.f1_plus), "f1_minus": abs(f1m - bd.f1_minus),
            "f2_plus": abs(f2p - bd.f2_plus), "f2_minus": abs(f2m - bd.f2_minus),
        }
        bad = {k: v for k, v in errs.items() if v > tol * s}
        if bad:
            raise InvalidFunctionError(f"boundary data inconsistent with evaluator: {bad}")


def from_line_callable(
    f: Callable[[np.ndarray], np.ndarray],
    boundary_data: BoundaryData | None = None,
    d2: Callable[[np.ndarray], np.ndarray] | None = None,
    breakpoints: Sequence[float] = (0.0,),
) -> DomainFunction:
    """Wrap a vectorized function on R; boundary data defaults to finite differences."""
    if boundary_data is None:
        f0p, f1p, f2p = _one_sided_data(f, +1)
        f0m, f1m, f2m = _one_sided_data(f, -1)
        boundary_data = BoundaryData(f0p, f0m, f1p, f1m, f2p, f2m)
    return DomainFunction(LINE, f, f, boundary_data, d2, d2, tuple(breakpoints))


def from_half_callables(
    f_pos: Callable[[np.ndarray], np.ndarray],
    f_neg: Callable[[np.ndarray], np.ndarray],
    boundary_data: BoundaryData | None = None,
    d2_pos: Callable[[np.ndarray], np.ndarray] | None = None,
    d2_neg: Callable[[np.ndarray], np.ndarray] | None = None,
    breakpoints: Sequence[float] = (0.0,),
) -> DomainFunction:
    """Wrap a pair of vectorized functions on the closed half-lines."""
    if boundary_data is None:
        f0p, f1p, f2p = _one_sided_data(f_pos, +1)
        f0m, f1m, f2m = _one_sided_data(f_neg, -1)
        boundary_data = BoundaryData(f0p, f0m, f1p, f1m, f2p, f2m)
    return DomainFunction(TWO_HALF, f_pos, f_neg, boundary_data, d2_pos, d2_neg, tuple(breakpoints))


# ---------------------------------------------------------------------------
# Boundary residuals.
# ---------------------------------------------------------------------------

_LINE_MATCH_TOL = 1e-9


def boundary_residual_line(f: DomainFunction, k: GeneratorCoeffsLine) -> float:
    """Left-hand side c1*f(0) + c2m*f'(0-) - c2p*f'(0+) + (c3/2)*f''(0+)."""
    bd = f.boundary_data
    if abs(bd.f0_plus - bd.f0_minus) > _LINE_MATCH_TOL * bd.scale():
        raise InvalidFunctionError(
            f"line function has mismatched one-sided values at 0: "
            f"{bd.f0_plus!r} vs {bd.f0_minus!r}"
        )
    return (
        k.c1 * bd.f0_plus
        + k.c2_minus * bd.f1_minus
        - k.c2_plus * bd.f1_plus
        + 0.5 * k.c3 * bd.f2_plus
    )


def boundary_residual_two_half(
    f: DomainFunction, k: GeneratorCoeffsTwoHalf
) -> tuple[float, float]:
    """Left-hand sides of the two domain equations (plus side, minus side)."""
    bd = f.boundary_data
    jump = bd.f0_plus - bd.f0_minus
    plus = (
        k.c1_plus * bd.f0_plus
        + k.a_plus * jump
        - k.c2_plus * bd.f1_plus
        + 0.5 * k.c3_plus * bd.f2_plus
    )
    minus = (
        k.c1_minus * bd.f0_minus
        - k.a_minus * jump
        + k.c2_minus * bd.f1_minus
        + 0.5 * k.c3_minus * bd.f2_minus
    )
    return plus, minus


def boundary_residual(f: DomainFunction, k) -> float | tuple[float, float]:
    if isinstance(k, GeneratorCoeffsLine):
        return boundary_residual_line(f, k)
    return boundary_residual_two_half(f, k)


# ---------------------------------------------------------------------------
# Smooth bumps used by the projector.
# ---------------------------------------------------------------------------


def _bump(u: np.ndarray, radius: float) -> np.ndarray:
    """Unnormalized C-infinity bump supported on (-radius, radius)."""
    s = np.square(u / radius)
    out = np.zeros_like(u)
    inside = s < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside]))
    return out


def _smooth_transition(s: np.ndarray) -> np.ndarray:
    """C-infinity monotone 0 -> 1 on [0, 1] with flat ends."""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    return a / (a + b)


def _cutoff(x: np.ndarray, eps: float, order: int = 0) -> np.ndarray:
    """Plateau cutoff: 1 on |x|<eps/2, 0 beyond |x|>eps; derivatives by FD.

    The cutoff multiplies a polynomial that is itself O(x) near 0, so modest
    FD accuracy for the derivatives away from the plateau is enough.
    """
    x = np.asarray(x, dtype=float)
    if order == 0:
        return _smooth_transition((eps - np.abs(x)) / (eps / 2.0))
    h = 1e-6 * eps
    if order == 1:
        return (_cutoff(x + h, eps) - _cutoff(x - h, eps)) / (2 * h)
    return (_cutoff(x + h, eps) - 2 * _cutoff(x, eps) + _cutoff(x - h, eps)) / (h * h)


class _MollifiedShift:
    """Shift of f away from the origin, mollified with a bump of radius eps/2.

    The shift holds f(0) constant on the eps-collar, so the mollified result
    is exactly constant (all derivatives zero) on |x| < eps/2.  Gauss panels
    are split at the kink positions of the shifted function, keeping the
    quadrature at machine accuracy.
    """

    _NODES, _WEIGHTS = np.polynomial.legendre.leggauss(32)

    def __init__(self, f_side, f0: float, eps: float, side: int, breakpoints=(0.0,)):
        self.f_side = f_side
        self.f0 = float(f0)
        self.eps = float(eps)
        self.side = side
        # Kinks of the shifted function in position space (one side only).
        kinks = {eps}
        for b in breakpoints:
            kinks.add(abs(b) + eps)
        self.kinks = sorted(kinks)
        # Normalization of the bump on the same 3-panel reference rule used
        # in _window_quadrature, so constants are reproduced exactly.
        r = eps / 2.0
        edges = np.array([-r, -r / 3.0, r / 3.0, r])
        un, uw = self._panel_nodes(edges)
        self._norm = float(np.sum(uw * _bump(un, r)))
        self._ref_edges = edges

    @classmethod
    def _panel_nodes(cls, edges: np.ndarray):
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes = (mid[:, None] + half[:, None] * cls._NODES[None, :]).ravel()
        weights = (half[:, None] * cls._WEIGHTS[None, :]).ravel()
        return nodes, weights

    def _shifted(self, y: np.ndarray) -> np.ndarray:
        """The shifted function on the full line (extended evenly across 0)."""
        y = np.abs(y)
        out = np.full_like(y, self.f0)
        far = y > self.eps
        if far.any():
            out[far] = self.f_side(self.side * (y[far] - self.eps))
        return out

    def _windows(self, x: float):
        edges = set(x + self._ref_edges)
        r = self.eps / 2.0
        for kk in self.kinks:
            for s in (kk, -kk):
                if x - r < s < x + r:
                    edges.add(s)
        edges = np.array(sorted(edges))
        nodes, weights = self._panel_nodes(edges)
        return nodes, weights

    def _kernel(self, u: np.ndarray, order: int) -> np.ndarray:
        r = self.eps / 2.0
        if order == 0:
            return _bump(u, r)
        if order == 1:
            return self._bump_d1(u, r)
        return self._bump_d2(u, r)

    def _value(self, x: float, order: int) -> float:
        if abs(x) < 0.45 * self.eps:
            # Constant plateau: derivatives vanish identically.
            return self.f0 if order == 0 else 0.0
        nodes, weights = self._windows(x)
        w = self._kernel(x - nodes, order)
        return float(np.sum(weights * w * self._shifted(nodes))) / self._norm

    def _window_has_kink(self, x: np.ndarray) -> np.ndarray:
        r = self.eps / 2.0
        hit = np.zeros(x.shape, dtype=bool)
        for kk in self.kinks:
            hit |= np.abs(x - kk) < r
            hit |= np.abs(x + kk) < r
        return hit

    @staticmethod
    def _bump_d1(u, r):
        s = u / r
        out = np.zeros_like(u)
        inside = np.abs(s) < 1.0
        si = s[inside]
        q = 1.0 - si * si
        out[inside] = np.exp(-1.0 / q) * (-2.0 * si / (q * q)) / r
        return out

    @staticmethod
    def _bump_d2(u, r):
        s = u / r
        out = np.zeros_like(u)
        inside = np.abs(s) < 1.0
        si = s[inside]
        q = 1.0 - si * si
        # f = e^{-1/q}, f'' = f * [(-2s/q^2)^2 - 2/q^2 - 8 s^2/q^3] in s.
        e = np.exp(-1.0 / q)
        d2 = e * (4.0 * si * si / q**4 + (-2.0 * q - 8.0 * si * si) / q**3)
        out[inside] = d2 / (r * r)
        return out

    def eval(self, x: np.ndarray, order: int = 0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        plateau = np.abs(x) < 0.45 * self.eps
        out[plateau] = self.f0 if order == 0 else 0.0
        rest = ~plateau
        kinked = self._window_has_kink(x) & rest
        smooth = rest & ~kinked
        if smooth.any():
            # Kink-free windows share the reference panel layout, so the
            # whole batch reduces to one weighted matrix evaluation.
            un, uw = self._panel_nodes(self._ref_edges)
            w = uw * self._kernel(un, order)
            nodes = x[smooth, None] - un[None, :]
            out[smooth] = (self._shifted(nodes) @ w) / self._norm
        for i in np.nonzero(kinked)[0]:
            out[i] = self._value(float(x[i]), order)
        return out


# ---------------------------------------------------------------------------
# Projection onto the generator domain.
# ---------------------------------------------------------------------------


def _min_norm_solution(r: float, v: np.ndarray) -> np.ndarray:
    """Minimum-norm t with r + v . t = 0."""
    n2 = float(v @ v)
    if n2 <= 0.0:
        if abs(r) <= 0.0:
            return np.zeros_like(v)
        raise InvalidCoefficientsError(
            "correction underdetermined: no derivative or stickiness weight"
        )
    return -r * v / n2


def project_to_domain(f, k, eps: float) -> DomainFunction:
    """Repair a continuous function so the boundary equation(s) hold exactly.

    ``f`` may be a :class:`DomainFunction` or a vectorized callable (a pair
    of callables for the two-half space).  The output agrees with f up to
    the shift-mollification error plus a compactly supported polynomial
    correction, and its boundary residual vanishes identically.
    """
    if eps <= 0:
        raise InvalidFunctionError("eps must be positive")
    if isinstance(k, GeneratorCoeffsLine):
        return _project_line(f, k, eps)
    if isinstance(k, GeneratorCoeffsTwoHalf):
        return _project_two_half(f, k, eps)
    raise TypeError(f"unsupported coefficient type {type(k)!r}")


def _as_side_callables(f):
    if isinstance(f, DomainFunction):
        return f.pos, f.neg, f.breakpoints
    if isinstance(f, tuple):
        return f[0], f[1], (0.0,)
    return f, f, (0.0,)


def _project_line(f, k: GeneratorCoeffsLine, eps: float) -> DomainFunction:
    f_pos, f_neg, bps = _as_side_callables(f)
    f0 = float(np.asarray(f_pos(np.array([0.0])))[0])
    f0m = float(np.asarray(f_neg(np.array([0.0])))[0])
    if abs(f0 - f0m) > _LINE_MATCH_TOL * max(1.0, abs(f0)):
        raise InvalidFunctionError("line projection needs matching one-sided values at 0")

    # Residual of the corrected function: c1 f(0) + c2m*at - c2p*a + c3*b = 0
    # with unknowns t = (a, at, b); same curvature b on both sides so that
    # the second derivative extends continuously.
    a, at, b = _min_norm_solution(k.c1 * f0, np.array([-k.c2_plus, k.c2_minus, k.c3]))

    mp = _MollifiedShift(f_pos, f0, eps, +1, bps)
    mm = _MollifiedShift(f_neg, f0, eps, -1, bps)

    def poly(x, side, order=0):
        lin = a if side > 0 else at
        p0 = lin * x + b * x * x
        if order == 0:
            return p0 * _cutoff(x, eps)
        if order == 1:
            return (lin + 2 * b * x) * _cutoff(x, eps) + p0 * _cutoff(x, eps, 1)
        return (
            2 * b * _cutoff(x, eps)
            + 2 * (lin + 2 * b * x) * _cutoff(x, eps, 1)
            + p0 * _cutoff(x, eps, 2)
        )

    def g_pos(x):
        x = np.asarray(x, dtype=float)
        return mp.eval(x) + poly(x, +1)

    def g_neg(x):
        x = np.asarray(x, dtype=float)
        return mm.eval(x) + poly(x, -1)

    def d2_pos(x):
        x = np.asarray(x, dtype=float)
        return mp.eval(x, 2) + poly(x, +1, 2)

    def d2_neg(x):
        x = np.asarray(x, dtype=float)
        return mm.eval(x, 2) + poly(x, -1, 2)

    bd = BoundaryData(f0, f0, a, at, 2 * b, 2 * b)
    return DomainFunction(LINE, g_pos, g_neg, bd, d2_pos, d2_neg, bps)


def _project_two_half(f, k: GeneratorCoeffsTwoHalf, eps: float) -> DomainFunction:
    f_pos, f_neg, bps = _as_side_callables(f)
    f0p = float(np.asarray(f_pos(np.array([0.0])))[0])
    f0m = float(np.asarray(f_neg(np.array([0.0])))[0])
    jump = f0p - f0m

    # Per-side corrections (a, b): plus residual r+ - c2p*a + c3p*b, minus
    # residual r- + c2m*at + c3m*bt; each solved at minimum norm.
    a, b = _min_norm_solution(
        k.c1_plus * f0p + k.a_plus * jump, np.array([-k.c2_plus, k.c3_plus])
    )
    at, bt = _min_norm_solution(
        k.c1_minus * f0m - k.a_minus * jump, np.array([k.c2_minus, k.c3_minus])
    )

    mp = _MollifiedShift(f_pos, f0p, eps, +1, bps)
    mm = _MollifiedShift(f_neg, f0m, eps, -1, bps)

    def make_side(m, lin, quad):
        def val(x):
            x = np.asarray(x, dtype=float)
            return m.eval(x) + (lin * x + quad * x * x) * _cutoff(x, eps)

        def d2(x):
            x = np.asarray(x, dtype=float)
            p0 = lin * x + quad * x * x
            return (
                m.eval(x, 2)
                + 2 * quad * _cutoff(x, eps)
                + 2 * (lin + 2 * quad * x) * _cutoff(x, eps, 1)
                + p0 * _cutoff(x, eps, 2)
            )

        return val, d2

    g_pos, d2_pos = make_side(mp, a, b)
    g_neg, d2_neg = make_side(mm, at, bt)
    bd = BoundaryData(f0p, f0m, a, at, 2 * b, 2 * bt)
    return DomainFunction(TWO_HALF, g_pos, g_neg, bd, d2_pos, d2_neg, bps)


# ---------------------------------------------------------------------------
# Dissipativity check.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DissipativityReport:
    holds: bool
    margin: float
    lhs_norm: float
    f_norm: float


def dissipativity_check(
    f: DomainFunction,
    k,
    lam: float,
    grid: np.ndarray | None = None,
    residual_tol: float = 1e-7,
    slack: float = 1e-7,
) -> DissipativityReport:
    """Check ||lam*f - (1/2)f''||_inf >= lam*||f||_inf on a probe grid.

    Only asserted for domain members: the boundary residual of ``f`` must not
    exceed ``residual_tol`` (scaled), otherwise the contract does not apply.
    """
    if lam <= 0:
        raise InvalidFunctionError("lam must be positive")
    res = boundary_residual(f, k)
    resmax = abs(res) if np.isscalar(res) else max(abs(res[0]), abs(res[1]))
    if resmax > residual_tol * f.boundary_data.scale():
        raise ContractNotApplicableError(
            f"boundary residual {resmax!r} exceeds tolerance; not a domain member"
        )
    if grid is None:
        grid = np.linspace(0.0, 12.0, 481)[1:]
    grid = np.abs(np.asarray(grid, dtype=float))
    grid = grid[grid > 0]

    vals = []
    fvals = []
    for side in (+1, -1):
        x = side * grid
        fx = f.eval_side(x, side)
        d2 = f.second_derivative(x, side)
        vals.append(np.abs(lam * fx - 0.5 * d2))
        fvals.append(np.abs(fx))
    bd = f.boundary_data
    # Boundary nodes: the generator there is half the one-sided curvature.
    vals.append(np.abs([lam * bd.f0_plus - 0.5 * bd.f2_plus,
                        lam * bd.f0_minus - 0.5 * bd.f2_minus]))
    fvals.append(np.abs([bd.f0_plus, bd.f0_minus]))

    lhs = float(max(np.max(v) for v in vals))
    fn = float(max(np.max(v) for v in fvals))
    margin = lhs - lam * fn
    scale = max(1.0, lhs)
    return DissipativityReport(margin >= -slack * scale, margin, lhs, fn)
