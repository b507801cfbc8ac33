"""Boundary random walks and the general Brownian motions they scale to.

The package simulates continuous-time lattice walks with kill, reflection,
stickiness and side-switch behaviour at the origin, and verifies their
diffusive limits against two independent numerical oracles: the closed-form
resolvent and a Wentzell-boundary finite-difference semigroup.
"""

__version__ = "0.1.0"

from .coeffs import (
    GeneratorCoeffsLine,
    GeneratorCoeffsTwoHalf,
    WalkParamsLine,
    WalkParamsTwoHalf,
    coeffs_from_walk_line,
    coeffs_from_walk_two_half,
    normalized_line,
    snapping_out_coeffs,
)
from .domain import (
    BoundaryData,
    DomainFunction,
    boundary_residual,
    boundary_residual_line,
    boundary_residual_two_half,
    dissipativity_check,
    from_half_callables,
    from_line_callable,
    project_to_domain,
)
from .pde import Grid, SemigroupField, evolve_semigroup, laplace_check, semigroup_expectation
from .resolvent import (
    ResolventSolution,
    free_resolvent,
    resolvent_identity_gap,
    resolvent_line,
    resolvent_two_half,
    solve_resolvent,
    verify_resolvent_identity,
)
from .states import (
    CEMETERY,
    LINE,
    TWO_HALF,
    LatticeState,
    StatePoint,
    half_site,
    line_point,
    line_site,
    neg_point,
    pos_point,
)
from .walk import (
    Ensemble,
    PathRecord,
    SimConfig,
    simulate_batch,
    simulate_path,
    state_at,
    step_rates,
)

__all__ = [name for name in dir() if not name.startswith("_")]
