"""Finite-difference semigroup oracle u(t, x) = E_x[f(W_t)].

The observable evolves by the backward equation du/dt = (1/2) u_xx away
from the origin.  At an origin node with positive stickiness weight the
boundary value is a dynamic unknown,

    du/dt(0+) = -(1/c3p) [c1p u(0+) + ap (u(0+) - u(0-)) - c2p u_x(0+)],

which is exactly (1/2) u_xx(0+) for domain members; with zero stickiness
the bracket is an algebraic constraint condensed into the linear system
each step.  One-sided derivatives use second-order stencils; far-field
boundaries are homogeneous Dirichlet.  Default scheme is Crank-Nicolson
with a Rannacher start (two implicit half steps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .coeffs import GeneratorCoeffsLine
from .errors import (
    HorizonTooShortError,
    InvalidCoefficientsError,
    InvalidFunctionError,
    StepRejectionError,
    UnsupportedQueryError,
)
from .states import LINE, StatePoint

NORM_GROWTH_SLACK = 1e-8  # relative per-run tolerance on sup-norm growth
GROSS_GROWTH = 1e-5  # beyond this the run is rejected


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L] with an origin node (line) or doubled origin nodes.

    Two-half layout: indices 0..M hold the minus side -L..0-, indices
    M+1..2M+1 hold the plus side 0+..L; the two origin nodes share the
    coordinate 0 but are distinct unknowns.
    """

    topology: str
    h: float
    L: float

    def __post_init__(self):
        if self.h <= 0 or self.L <= 0:
            raise ValueError("h and L must be positive")
        m = self.L / self.h
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise ValueError("L/h must be integral")
        if round(m) < 4:
            raise ValueError("grid too coarse: need at least 4 nodes per side")

    @property
    def m(self) -> int:
        return int(round(self.L / self.h))

    @property
    def size(self) -> int:
        return 2 * self.m + (1 if self.topology == LINE else 2)

    @property
    def coords(self) -> np.ndarray:
        side = np.arange(self.m + 1) * self.h
        if self.topology == LINE:
            return np.concatenate([-side[::-1], side[1:]])
        return np.concatenate([-side[::-1], side])

    @property
    def origin_indices(self) -> tuple[int, ...]:
        return (self.m,) if self.topology == LINE else (self.m, self.m + 1)

    def side_slice(self, side: int) -> slice:
        """Nodes of one closed half-line, origin first when read from 0."""
        if self.topology == LINE:
            return slice(self.m, None) if side > 0 else slice(0, self.m + 1)
        return slice(self.m + 1, None) if side > 0 else slice(0, self.m + 1)


def _side_coeffs(k) -> dict:
    if isinstance(k, GeneratorCoeffsLine):
        return {"line": (k.c1, k.c2_minus, k.c2_plus, k.c3)}
    return {
        "plus": (k.c1_plus, k.a_plus, k.c2_plus, k.c3_plus),
        "minus": (k.c1_minus, k.a_minus, k.c2_minus, k.c3_minus),
    }


def build_operator(grid: Grid, k):
    """Spatial operator G plus the evolving-row indicator.

    Rows of evolving nodes hold du/dt; rows of constraint nodes (far field,
    zero-stickiness origins) hold an expression required to vanish.
    """
    n = grid.size
    m = grid.m
    h = grid.h
    G = sp.lil_matrix((n, n))
    evolving = np.ones(n, dtype=bool)

    lap = 0.5 / (h * h)
    orig = grid.origin_indices
    for j in range(1, n - 1):
        if j in orig:
            continue
        G[j, j - 1] = lap
        G[j, j] = -2 * lap
        G[j, j + 1] = lap

    # Far field: Dirichlet constraint u = 0.
    for j in (0, n - 1):
        evolving[j] = False
        G[j, j] = 1.0

    inv2h = 1.0 / (2 * h)
    if grid.topology == LINE:
        (c1, c2m, c2p, c3) = _side_coeffs(k)["line"]
        if c2m + c2p + c3 <= 0:
            raise InvalidCoefficientsError("pure killing boundary not evolvable")
        # Bracket c1 u0 + c2m u_x(0-) - c2p u_x(0+) with one-sided stencils.
        row = {m: c1}
        row[m] = row.get(m, 0.0) + c2m * 3 * inv2h
        row[m - 1] = row.get(m - 1, 0.0) - c2m * 4 * inv2h
        row[m - 2] = row.get(m - 2, 0.0) + c2m * inv2h
        row[m] = row.get(m, 0.0) - c2p * (-3) * inv2h
        row[m + 1] = row.get(m + 1, 0.0) - c2p * 4 * inv2h
        row[m + 2] = row.get(m + 2, 0.0) + c2p * inv2h
        if c3 > 0:
            for j, v in row.items():
                G[m, j] = -v / c3
        else:
            evolving[m] = False
            for j, v in row.items():
                G[m, j] = v
    else:
        cs = _side_coeffs(k)
        jm, jp = m, m + 1  # 0- and 0+ nodes
        # Plus origin: c1p u+ + ap (u+ - u-) - c2p u_x(0+).
        c1p, ap, c2p, c3p = cs["plus"]
        if max(c2p, c3p) <= 0:
            raise InvalidCoefficientsError("need max(c2_plus, c3_plus) > 0")
        row = {jp: c1p + ap, jm: -ap}
        row[jp] = row.get(jp, 0.0) - c2p * (-3) * inv2h
        row[jp + 1] = row.get(jp + 1, 0.0) - c2p * 4 * inv2h
        row[jp + 2] = row.get(jp + 2, 0.0) + c2p * inv2h
        if c3p > 0:
            for j, v in row.items():
                G[jp, j] = -v / c3p
        else:
            evolving[jp] = False
            for j, v in row.items():
                G[jp, j] = v
        # Minus origin: c1m u- + am (u- - u+) + c2m u_x(0-).
        c1m, am, c2m, c3m = cs["minus"]
        if max(c2m, c3m) <= 0:
            raise InvalidCoefficientsError("need max(c2_minus, c3_minus) > 0")
        row = {jm: c1m + am, jp: -am}
        row[jm] = row.get(jm, 0.0) + c2m * 3 * inv2h
        row[jm - 1] = row.get(jm - 1, 0.0) - c2m * 4 * inv2h
        row[jm - 2] = row.get(jm - 2, 0.0) + c2m * inv2h
        if c3m > 0:
            for j, v in row.items():
                G[jm, j] = -v / c3m
        else:
            evolving[jm] = False
            for j, v in row.items():
                G[jm, j] = v

    return G.tocsr(), evolving


class _Stepper:
    """Factorized theta-scheme stepper with constraint rows enforced implicitly."""

    def __init__(self, G: sp.csr_matrix, evolving: np.ndarray, dt: float, theta: float):
        d = evolving.astype(float)
        D = sp.diags(d)
        Ge = sp.diags(d) @ G
        Gc = sp.diags(1.0 - d) @ G
        self.lhs = splu((D - dt * theta * Ge + Gc).tocsc())
        self.rhs = (D + dt * (1.0 - theta) * Ge).tocsr()
        self.dt = dt

    def step(self, u: np.ndarray) -> np.ndarray:
        return self.lhs.solve(self.rhs @ u)


@dataclass
class SemigroupField:
    """Time-indexed grid functions produced by the semigroup oracle."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray  # shape (len(times), grid.size)
    scheme: str
    min_value: float = 0.0
    max_norm_ratio: float = 1.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def slice_at(self, t: float) -> np.ndarray:
        """Linear interpolation in time between stored slices."""
        if t < -1e-12 or t > self.t_end + 1e-12:
            raise UnsupportedQueryError(f"t={t} outside stored range [0, {self.t_end}]")
        t = min(max(t, 0.0), self.t_end)
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        i = min(max(i, 0), len(self.times) - 2) if len(self.times) > 1 else 0
        if len(self.times) == 1 or self.times[i] == t:
            return self.values[i]
        t0, t1 = self.times[i], self.times[i + 1]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * self.values[i] + w * self.values[i + 1]


def _initial_grid_function(f0, grid: Grid) -> np.ndarray:
    if isinstance(f0, np.ndarray):
        if f0.shape != (grid.size,):
            raise InvalidFunctionError(f"grid function must have shape ({grid.size},)")
        return f0.astype(float).copy()
    x = grid.coords
    u0 = np.empty(grid.size)
    sl = grid.side_slice(-1)
    neg = f0.neg if hasattr(f0, "neg") else (f0[1] if isinstance(f0, tuple) else f0)
    pos = f0.pos if hasattr(f0, "pos") else (f0[0] if isinstance(f0, tuple) else f0)
    u0[sl] = neg(x[sl])
    sl = grid.side_slice(+1)
    u0[sl] = pos(x[sl])
    return u0


def _project_constraints(u: np.ndarray, G: sp.csr_matrix, evolving: np.ndarray,
                         grid: Grid) -> np.ndarray:
    """Enforce the algebraic origin rows on a grid function.

    With zero stickiness the boundary value is slaved to its neighbours, so
    an incompatible initial datum jumps there at t = 0+; the projected value
    is the instantaneous limit the evolution starts from.
    """
    cons = [j for j in grid.origin_indices if not evolving[j]]
    if not cons:
        return u
    out = u.copy()
    A = G[cons, :].toarray()
    acc = A[:, cons]
    rest = A.copy()
    rest[:, cons] = 0.0
    out[cons] = np.linalg.solve(acc, -rest @ u)
    return out


def evolve_semigroup(
    f0, k, t_end: float, dt: float, grid: Grid,
    scheme: str = "cn", record_every: int = 1, rannacher: bool = True,
    callbacks=(),
) -> SemigroupField:
    """Evolve the observable from u(0, .) = f0 up to t_end.

    ``record_every`` thins the stored slices (the initial and final slices
    are always kept).  ``callbacks`` receive (t_prev, u_prev, t_new, u_new)
    after every internal step, before thinning.
    """
    if t_end < 0 or dt <= 0:
        raise ValueError("need t_end >= 0 and dt > 0")
    if scheme not in ("cn", "be"):
        raise ValueError("scheme must be 'cn' or 'be'")
    G, evolving = build_operator(grid, k)
    u = _initial_grid_function(f0, grid)
    u[0] = 0.0
    u[-1] = 0.0

    times = [0.0]
    slices = [u.copy()]
    if t_end == 0:
        return SemigroupField(grid, np.array(times), np.array(slices), scheme)

    # Uniform steps that land exactly on t_end.
    nsteps = max(1, int(math.ceil(t_end / dt - 1e-12)))
    dt_eff = t_end / nsteps
    norm0 = float(np.max(np.abs(u)))
    min_val = float(np.min(u))
    max_ratio = 1.0

    theta = 0.5 if scheme == "cn" else 1.0
    plan: list[tuple[_Stepper, int]] = []
    if scheme == "cn" and rannacher:
        plan.append((_Stepper(G, evolving, dt_eff / 2.0, 1.0), 2))
        if nsteps > 1:
            plan.append((_Stepper(G, evolving, dt_eff, theta), nsteps - 1))
    else:
        plan.append((_Stepper(G, evolving, dt_eff, theta), nsteps))

    # Callbacks (time quadrature) see the constraint-projected initial value:
    # slaved boundary nodes jump at t = 0+ when f0 violates the constraint,
    # and the integrand limit is the projected value, not the raw datum.
    u_cb = _project_constraints(u, G, evolving, grid)
    t = 0.0
    istep = 0
    for stepper, count in plan:
        for _ in range(count):
            u_new = stepper.step(u)
            t_new = t + stepper.dt
            for cb in callbacks:
                cb(t, u_cb, t_new, u_new)
            u, t = u_new, t_new
            u_cb = u_new
            istep += 1
            if norm0 > 0:
                ratio = float(np.max(np.abs(u))) / norm0
                if ratio > max_ratio:
                    max_ratio = ratio
                if ratio > 1.0 + GROSS_GROWTH:
                    raise StepRejectionError(
                        f"sup-norm grew by {ratio - 1.0:.2e} at t={t:.6g}"
                    )
            mv = float(np.min(u))
            if mv < min_val:
                min_val = mv
            if istep % record_every == 0:
                times.append(t)
                slices.append(u.copy())
    if times[-1] != t:
        times.append(t)
        slices.append(u.copy())

    return SemigroupField(
        grid, np.array(times), np.array(slices), scheme,
        min_value=min_val, max_norm_ratio=max_ratio,
        diagnostics={"norm0": norm0, "steps": istep},
    )


def _cubic_interp(xs: np.ndarray, ys: np.ndarray, x: float) -> float:
    """Local 4-point Lagrange interpolation on a uniform grid."""
    n = len(xs)
    if n < 2:
        return float(ys[0])
    h = xs[1] - xs[0]
    j = int(np.clip(np.floor((x - xs[0]) / h), 0, n - 2))
    i0 = int(np.clip(j - 1, 0, n - 4)) if n >= 4 else 0
    sub_x = xs[i0:i0 + 4] if n >= 4 else xs
    sub_y = ys[i0:i0 + 4] if n >= 4 else ys
    val = 0.0
    for a in range(len(sub_x)):
        w = 1.0
        for b in range(len(sub_x)):
            if a != b:
                w *= (x - sub_x[b]) / (sub_x[a] - sub_x[b])
        val += w * float(sub_y[a])
    return val


def semigroup_expectation(field: SemigroupField, p: StatePoint, t: float) -> float:
    """Q_t f at a state point: linear in t, cubic in x on the matching side."""
    if p.is_cemetery:
        return 0.0
    u = field.slice_at(t)
    grid = field.grid
    if abs(p.x) > grid.L + 1e-12:
        raise UnsupportedQueryError(f"|x|={abs(p.x)} outside grid radius {grid.L}")
    if grid.topology == LINE:
        side = 1 if p.x >= 0 else -1
    else:
        if p.kind == "line":
            raise UnsupportedQueryError("two-half field needs a side-tagged point")
        side = 1 if p.kind == "pos" else -1
    sl = grid.side_slice(side)
    return _cubic_interp(grid.coords[sl], u[sl], p.x)


def laplace_check(
    f0, k, lam: float, grid: Grid, T: float, dt: float,
    probes, scheme: str = "cn", min_lam_T: float = 30.0,
):
    """Compare the time-integrated semigroup against the resolvent oracle.

    Returns the maximum over probe points of

        | integral_0^T exp(-lam t) u(t, x) dt  -  R_lam f0 (x) |

    using trapezoidal time quadrature accumulated during the evolution.
    The truncated tail must satisfy lam*T >= min_lam_T.
    """
    from .resolvent import solve_resolvent
    from .states import neg_point, pos_point, line_point

    if lam * T < min_lam_T - 1e-9:
        raise HorizonTooShortError(f"need lam*T >= {min_lam_T}, got {lam * T}")

    acc = np.zeros(grid.size)

    def accumulate(t0, u0, t1, u1):
        acc[:] += 0.5 * (t1 - t0) * (math.exp(-lam * t0) * u0 + math.exp(-lam * t1) * u1)

    field = evolve_semigroup(
        f0, k, T, dt, grid, scheme=scheme, record_every=10**9, callbacks=(accumulate,)
    )

    if isinstance(k, GeneratorCoeffsLine):
        g = f0.eval_line if hasattr(f0, "eval_line") else f0
        sol = solve_resolvent(g, lam, k)
    else:
        gp = f0.pos if hasattr(f0, "pos") else (f0[0] if isinstance(f0, tuple) else f0)
        gn = f0.neg if hasattr(f0, "neg") else (f0[1] if isinstance(f0, tuple) else f0)
        sol = solve_resolvent((gp, gn), lam, k)

    gaps = []
    for p in probes:
        if not isinstance(p, StatePoint):
            if grid.topology == LINE:
                p = line_point(p)
            else:
                p = pos_point(p) if p >= 0 else neg_point(p)
        side = 1 if (p.kind == "pos" or (p.kind == "line" and p.x >= 0)) else -1
        sl = grid.side_slice(side)
        num = _cubic_interp(grid.coords[sl], acc[sl], p.x)
        exact = float(sol.eval_side(np.array([p.x]), side)[0])
        gaps.append(abs(num - exact))
    return {"max_gap": float(max(gaps)), "gaps": gaps, "field": field}


def dirichlet_radius(probe_radius: float, t_end: float, tol: float = 1e-10,
                     lam: float | None = None) -> float:
    """Far-field radius so truncation pollutes probes by less than tol.

    Without lam the bound is the Gaussian tail over [0, t_end]; with lam the
    exp(-lam t) weighting allows the smaller radius probe + ln(1/tol)/sqrt(2 lam).
    """
    if lam is None:
        return probe_radius + math.sqrt(2.0 * t_end * math.log(1.0 / tol))
    return probe_radius + math.log(1.0 / tol) / math.sqrt(2.0 * lam)
