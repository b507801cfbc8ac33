"""Closed-form resolvent of the limiting generators, quadrature-limited.

For lam > 0 the free-space resolvent of (1/2) d^2/dx^2 is the convolution

    f_p(x) = integral  (2*lam)^(-1/2) * exp(-sqrt(2*lam)|x - y|) g(y) dy,

and the resolvent of a generator with boundary weights adds decaying
exponential corrections whose constants solve the boundary equation(s)
exactly: one constant A on the line, a 2x2 system for (A, B) on two
half-lines.  Quadrature is composite Gauss-Legendre with panels split at
the kernel kink and at the integrand's breakpoints, with an exponential
tail cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .coeffs import GeneratorCoeffsLine, GeneratorCoeffsTwoHalf
from .domain import BoundaryData, DomainFunction
from .errors import InvalidCoefficientsError, ToleranceNotMetError
from .states import LINE, TWO_HALF, StatePoint

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_GL_NODES_CHECK, _GL_WEIGHTS_CHECK = np.polynomial.legendre.leggauss(21)
_TAIL_DECADES = 40.0  # integrate where the kernel exceeds exp(-40)


def _panel_edges(lo: float, hi: float, x: float, breakpoints: Sequence[float], width: float):
    """Panel edges on [lo, hi], forced at x and at interior breakpoints."""
    forced = {lo, hi}
    for b in list(breakpoints) + [x]:
        if lo < b < hi:
            forced.add(float(b))
    forced = sorted(forced)
    edges = []
    for a, b in zip(forced[:-1], forced[1:]):
        m = max(1, int(math.ceil((b - a) / width)))
        edges.append(np.linspace(a, b, m + 1)[:-1])
    edges.append(np.array([hi]))
    return np.concatenate(edges)


def _gl_apply(fn, edges, nodes, weights):
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    ys = mid[:, None] + half[:, None] * nodes[None, :]
    ws = half[:, None] * weights[None, :]
    return float(np.sum(ws * fn(ys)))


def _kernel_integral(
    g, lam: float, x: float, lo: float, hi: float,
    breakpoints: Sequence[float], deriv: bool = False, check_tol: float | None = None,
) -> float:
    """integral of k(x - y) g(y) over [lo, hi] with k the resolvent kernel.

    With ``deriv`` the differentiated kernel -sign(x - y) exp(-s|x - y|) is
    used (the derivative of f_p without the 1/s prefactor ... the 1/s of the
    kernel and the -s of the exponential cancel).
    """
    s = math.sqrt(2.0 * lam)
    lo = max(lo, x - _TAIL_DECADES / s)
    hi = min(hi, x + _TAIL_DECADES / s)
    if hi <= lo:
        return 0.0
    width = min(0.5, 1.0 / s)
    edges = _panel_edges(lo, hi, x, breakpoints, width)

    if deriv:
        def fn(ys):
            return -np.sign(x - ys) * np.exp(-s * np.abs(x - ys)) * g(ys)
    else:
        def fn(ys):
            return np.exp(-s * np.abs(x - ys)) / s * g(ys)

    val = _gl_apply(fn, edges, _GL_NODES, _GL_WEIGHTS)
    if check_tol is not None:
        ref = _gl_apply(fn, edges, _GL_NODES_CHECK, _GL_WEIGHTS_CHECK)
        err = abs(val - ref)
        if err > check_tol:
            raise ToleranceNotMetError(
                f"kernel quadrature disagreement {err:.3e} exceeds {check_tol:.3e}"
            )
    return val


def free_resolvent(
    g, lam: float, x, half: str | None = None,
    breakpoints: Sequence[float] = (0.0,), check_tol: float | None = None,
):
    """Particular solution f_p(x) of lam*f - (1/2)f'' = g by kernel quadrature.

    ``half`` restricts the integration to one closed half-line: 'pos' uses
    [0, inf) and 'neg' uses (-inf, 0].
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    lo, hi = -np.inf, np.inf
    if half == "pos":
        lo = 0.0
    elif half == "neg":
        hi = 0.0
    elif half is not None:
        raise ValueError("half must be None, 'pos' or 'neg'")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array(
        [_kernel_integral(g, lam, float(v), lo, hi, breakpoints, False, check_tol) for v in xs]
    )
    return out if np.ndim(x) else float(out[0])


_SCAN_NODES, _SCAN_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _fp_on_grid(g, lam: float, xs: np.ndarray, lo: float, hi: float,
                breakpoints: Sequence[float]) -> np.ndarray:
    """f_p on an ascending grid in one sweep per direction.

    Writing f_p = (I_left + I_right)/s with I_left(x) the kernel integral
    over y < x, consecutive grid values obey I_left(x') =
    exp(-s (x'-x)) I_left(x) + (local cell integral), so one forward and one
    backward scan evaluate the whole grid from a single batch of Gauss
    nodes.  Grid nodes must include any breakpoint interior to the grid.
    """
    s = math.sqrt(2.0 * lam)
    xs = np.asarray(xs, dtype=float)
    for b in breakpoints:
        if xs[0] < b < xs[-1] and not np.any(np.abs(xs - b) < 1e-12):
            raise ValueError("grid must contain interior breakpoints as nodes")
    h = np.diff(xs)
    mid = 0.5 * (xs[1:] + xs[:-1])
    nodes = mid[:, None] + 0.5 * h[:, None] * _SCAN_NODES[None, :]
    weights = 0.5 * h[:, None] * _SCAN_WEIGHTS[None, :]
    gv = g(nodes)
    # Cell integrals anchored at the right and at the left cell edge.
    jr = np.sum(weights * np.exp(-s * (xs[1:, None] - nodes)) * gv, axis=1)
    jl = np.sum(weights * np.exp(-s * (nodes - xs[:-1, None])) * gv, axis=1)
    decay = np.exp(-s * h)

    ileft = np.empty_like(xs)
    ileft[0] = _kernel_integral(g, lam, float(xs[0]), lo, xs[0], breakpoints) * s
    for i in range(len(h)):
        ileft[i + 1] = decay[i] * ileft[i] + jr[i]
    iright = np.empty_like(xs)
    iright[-1] = _kernel_integral(g, lam, float(xs[-1]), xs[-1], hi, breakpoints) * s
    for i in range(len(h) - 1, -1, -1):
        iright[i] = decay[i] * iright[i + 1] + jl[i]
    return (ileft + iright) / s


def _halfline_moment(g, lam: float, side: int, breakpoints=(0.0,)) -> float:
    """integral of exp(-s*y) g(side*y) dy over y in [0, inf)."""
    s = math.sqrt(2.0 * lam)
    edges = _panel_edges(0.0, _TAIL_DECADES / s, 0.0,
                         [abs(b) for b in breakpoints], min(0.5, 1.0 / s))

    def fn(ys):
        return np.exp(-s * ys) * g(side * ys)

    return _gl_apply(fn, edges, _GL_NODES, _GL_WEIGHTS)


# ---------------------------------------------------------------------------
# Full resolvent solutions.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResolventSolution:
    """Resolvent R_lam g as particular solution plus exponential correction."""

    topology: str
    lam: float
    corrections: tuple[float, ...]  # (A,) on the line, (A, B) on two half-lines
    boundary_data: BoundaryData
    g_pos: Callable[[np.ndarray], np.ndarray]
    g_neg: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple[float, ...]

    def eval_side(self, x, side: int) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        s = math.sqrt(2.0 * self.lam)
        if self.topology == LINE:
            a = self.corrections[0]
            fp = free_resolvent(self.g_pos, self.lam, x, None, self.breakpoints)
            return fp + a * np.exp(-s * np.abs(x))
        if side > 0:
            a = self.corrections[0]
            fp = free_resolvent(self.g_pos, self.lam, x, "pos", self.breakpoints)
            return fp + a * np.exp(-s * x)
        b = self.corrections[1]
        fp = free_resolvent(self.g_neg, self.lam, x, "neg", self.breakpoints)
        return fp + b * np.exp(s * x)

    def eval_line(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        m = x >= 0
        if m.any():
            out[m] = self.eval_side(x[m], +1)
        if (~m).any():
            out[~m] = self.eval_side(x[~m], -1)
        return out

    def __call__(self, p: StatePoint) -> float:
        if p.is_cemetery:
            return 0.0
        side = 1 if (p.kind == "pos" or (p.kind == "line" and p.x >= 0)) else -1
        return float(self.eval_side(np.array([p.x]), side)[0])

    def second_derivative(self, x, side: int) -> np.ndarray:
        """Exact identity f'' = 2*lam*f - 2*g, no numerical differentiation."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        g = self.g_pos if side > 0 else self.g_neg
        return 2.0 * self.lam * self.eval_side(x, side) - 2.0 * g(x)

    def as_domain_function(self) -> DomainFunction:
        return DomainFunction(
            self.topology,
            lambda x: self.eval_side(x, +1),
            lambda x: self.eval_side(x, -1),
            self.boundary_data,
            d2_pos=lambda x: self.second_derivative(x, +1),
            d2_neg=lambda x: self.second_derivative(x, -1),
            breakpoints=self.breakpoints,
        )

    def tabulated_sides(self, lo: float, hi: float, step: float = 5e-3):
        """Fast spline evaluators (pos_fn, neg_fn) built on [lo, hi].

        Splines are fitted per smooth piece (split at the origin and at the
        breakpoints); outside their range the callables return zero, which is
        below the kernel tail cutoff by construction of the range.
        """
        s = math.sqrt(2.0 * self.lam)

        def build(g, side, a0, b0, glo, ghi, corr_coef, corr_sign):
            knots = sorted({a0, b0, 0.0, *(b for b in self.breakpoints if a0 < b < b0)})
            knots = [t for t in knots if a0 <= t <= b0]
            grids = [np.linspace(a, b, max(8, int(math.ceil((b - a) / step))) + 1)
                     for a, b in zip(knots[:-1], knots[1:])]
            xs = np.unique(np.concatenate(grids))
            fp = _fp_on_grid(g, self.lam, xs, glo, ghi, self.breakpoints)
            if side == 0:  # line: correction decays away from 0 on both sides
                vals = fp + corr_coef * np.exp(-s * np.abs(xs))
            else:
                vals = fp + corr_coef * np.exp(corr_sign * s * xs)
            pieces = []
            for a, b in zip(knots[:-1], knots[1:]):
                m = (xs >= a - 1e-15) & (xs <= b + 1e-15)
                pieces.append((a, b, CubicSpline(xs[m], vals[m])))

            def fn(x):
                x = np.asarray(x, dtype=float)
                out = np.zeros_like(x)
                for a, b, sp in pieces:
                    mm = (x >= a) & (x <= b)
                    if mm.any():
                        out[mm] = sp(x[mm])
                return out

            return fn

        if self.topology == LINE:
            fn = build(self.g_pos, 0, lo, hi, -np.inf, np.inf, self.corrections[0], -1)
            return fn, fn
        pos = build(self.g_pos, +1, max(0.0, lo), hi, 0.0, np.inf, self.corrections[0], -1.0)
        neg = build(self.g_neg, -1, lo, min(0.0, hi), -np.inf, 0.0, self.corrections[1], +1.0)
        return pos, neg


def resolvent_line(
    g, lam: float, k: GeneratorCoeffsLine, breakpoints: Sequence[float] = (0.0,)
) -> ResolventSolution:
    """R_lam g for a line generator: f = f_p + A exp(-sqrt(2 lam)|x|).

    The constant A solves the boundary equation; f_p'(0) comes from the
    differentiated kernel and f_p''(0) from f_p'' = 2 lam f_p - 2 g.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    s = math.sqrt(2.0 * lam)
    fp0 = float(free_resolvent(g, lam, 0.0, None, breakpoints))
    fp1 = _kernel_integral(g, lam, 0.0, -np.inf, np.inf, breakpoints, deriv=True)
    g0 = float(np.asarray(g(np.array([0.0])))[0])
    fp2 = 2.0 * lam * fp0 - 2.0 * g0

    den = k.c1 + s * (k.c2_minus + k.c2_plus) + lam * k.c3
    if den <= 0:
        raise InvalidCoefficientsError("degenerate boundary weights: zero denominator")
    a = -(k.c1 * fp0 + (k.c2_minus - k.c2_plus) * fp1 + 0.5 * k.c3 * fp2) / den

    f0 = fp0 + a
    bd = BoundaryData(
        f0_plus=f0, f0_minus=f0,
        f1_plus=fp1 - s * a, f1_minus=fp1 + s * a,
        f2_plus=fp2 + 2.0 * lam * a, f2_minus=fp2 + 2.0 * lam * a,
    )
    return ResolventSolution(LINE, lam, (a,), bd, g, g, tuple(breakpoints))


def resolvent_two_half(
    g_pos, g_neg, lam: float, k: GeneratorCoeffsTwoHalf,
    breakpoints: Sequence[float] = (0.0,),
) -> ResolventSolution:
    """R_lam g on two half-lines: per-side particular solutions plus
    corrections A exp(-s x) (plus side) and B exp(s x) (minus side) solving
    the coupled pair of boundary equations."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    s = math.sqrt(2.0 * lam)
    mp = _halfline_moment(g_pos, lam, +1, breakpoints)
    mm = _halfline_moment(g_neg, lam, -1, breakpoints)
    fp0 = mp / s  # f_p^+(0); its one-sided derivative is +s * fp0
    fm0 = mm / s  # f_p^-(0); its one-sided derivative is -s * fm0
    g0p = float(np.asarray(g_pos(np.array([0.0])))[0])
    g0m = float(np.asarray(g_neg(np.array([0.0])))[0])
    fp2 = 2.0 * lam * fp0 - 2.0 * g0p
    fm2 = 2.0 * lam * fm0 - 2.0 * g0m

    alpha = k.c1_plus + k.a_plus + s * k.c2_plus + lam * k.c3_plus
    beta = (
        k.c1_plus * fp0 + k.a_plus * (fp0 - fm0)
        - k.c2_plus * (s * fp0) + 0.5 * k.c3_plus * fp2
    )
    gamma = k.c1_minus + k.a_minus + s * k.c2_minus + lam * k.c3_minus
    delta = (
        k.c1_minus * fm0 + k.a_minus * (fm0 - fp0)
        + k.c2_minus * (-s * fm0) + 0.5 * k.c3_minus * fm2
    )

    det = alpha * gamma - k.a_plus * k.a_minus
    if det <= 0:
        raise InvalidCoefficientsError("singular boundary system (should not occur)")
    a = (-beta * gamma - k.a_plus * delta) / det
    b = (-alpha * delta - k.a_minus * beta) / det

    bd = BoundaryData(
        f0_plus=fp0 + a, f0_minus=fm0 + b,
        f1_plus=s * fp0 - s * a, f1_minus=-s * fm0 + s * b,
        f2_plus=fp2 + 2.0 * lam * a, f2_minus=fm2 + 2.0 * lam * b,
    )
    return ResolventSolution(TWO_HALF, lam, (a, b), bd, g_pos, g_neg, tuple(breakpoints))


def solve_resolvent(g, lam: float, k, breakpoints: Sequence[float] = (0.0,)) -> ResolventSolution:
    """Dispatch on coefficient type; ``g`` is a callable or a (pos, neg) pair."""
    if isinstance(k, GeneratorCoeffsLine):
        return resolvent_line(g, lam, k, breakpoints)
    g_pos, g_neg = g if isinstance(g, tuple) else (g, g)
    return resolvent_two_half(g_pos, g_neg, lam, k, breakpoints)


# ---------------------------------------------------------------------------
# Verification.
# ---------------------------------------------------------------------------


def verify_resolvent_identity(sol: ResolventSolution, g, k, grid: np.ndarray):
    """PDE and boundary residuals of a resolvent solution.

    The PDE residual max |lam*f - f''/2 - g| uses central differences for
    f'' on interior nodes (origin excluded); the boundary residual evaluates
    the domain equation(s) with the solution's exact boundary data.
    """
    from .domain import boundary_residual

    grid = np.sort(np.asarray(grid, dtype=float))
    diffs = np.diff(grid)
    diffs = diffs[diffs > 1e-9]
    if diffs.size == 0:
        raise ValueError("grid needs at least two distinct nodes")
    h = float(np.min(diffs))
    g_pos, g_neg = (g if isinstance(g, tuple) else (g, g))
    worst = 0.0
    for side, gs in ((+1, g_pos), (-1, g_neg)):
        x = grid[grid * side >= 0.75 * h]  # keep stencils off the origin
        if x.size == 0:
            continue
        f0 = sol.eval_side(x, side)
        fpp = (sol.eval_side(x + h, side) - 2 * f0 + sol.eval_side(x - h, side)) / (h * h)
        r = np.abs(sol.lam * f0 - 0.5 * fpp - gs(x))
        worst = max(worst, float(np.max(r)))
    res = boundary_residual(sol.as_domain_function(), k)
    bres = abs(res) if np.isscalar(res) else max(abs(res[0]), abs(res[1]))
    return {"pde_residual": worst, "boundary_residual": bres}


def resolvent_identity_gap(
    g, k, lam: float, mu: float, probes: np.ndarray,
    breakpoints: Sequence[float] = (0.0,), tab_step: float = 5e-3,
) -> float:
    """max over probes of |R_lam g - R_mu g - (mu - lam) R_lam (R_mu g)|."""
    probes = np.asarray(probes, dtype=float)
    s_out = math.sqrt(2.0 * lam)
    span = float(np.max(np.abs(probes))) + _TAIL_DECADES / s_out + 1.0

    sol_mu = solve_resolvent(g, mu, k, breakpoints)
    inner_pos, inner_neg = sol_mu.tabulated_sides(-span, span, tab_step)
    sol_lam = solve_resolvent(g, lam, k, breakpoints)
    if isinstance(k, GeneratorCoeffsLine):
        composed = solve_resolvent(inner_pos, lam, k, (0.0,))
    else:
        composed = solve_resolvent((inner_pos, inner_neg), lam, k, (0.0,))

    gap = 0.0
    for x in probes:
        side = 1 if x >= 0 else -1
        lhs = float(sol_lam.eval_side(x, side)[0] - sol_mu.eval_side(x, side)[0])
        rhs = (mu - lam) * float(composed.eval_side(x, side)[0])
        gap = max(gap, abs(lhs - rhs))
    return gap
