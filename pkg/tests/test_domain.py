import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genbm.coeffs import GeneratorCoeffsLine, GeneratorCoeffsTwoHalf, snapping_out_coeffs
from genbm.domain import (
    BoundaryData,
    boundary_residual_line,
    boundary_residual_two_half,
    dissipativity_check,
    from_half_callables,
    from_line_callable,
    project_to_domain,
)
from genbm.errors import (
    ContractNotApplicableError,
    InvalidCoefficientsError,
    InvalidFunctionError,
)
from genbm.funcs import random_line_coeffs, random_smooth_callable, random_two_half_coeffs
from genbm.states import CEMETERY, line_point


def gauss_df():
    return from_line_callable(lambda x: np.exp(-np.square(x)),
                              d2=lambda x: (4 * x * x - 2) * np.exp(-np.square(x)))


def test_cemetery_value_is_zero():
    f = gauss_df()
    assert f(CEMETERY) == 0.0
    assert f(line_point(0.0)) == pytest.approx(1.0)


def test_decay_check():
    assert gauss_df().decays()
    slow = from_line_callable(lambda x: 1.0 / (1.0 + np.square(x)))
    assert not slow.decays()


def test_fd_boundary_data_matches_exact():
    f = gauss_df()
    bd = f.boundary_data
    assert bd.f0_plus == pytest.approx(1.0, abs=1e-12)
    assert bd.f1_plus == pytest.approx(0.0, abs=1e-7)
    assert bd.f2_plus == pytest.approx(-2.0, abs=1e-5)
    f.check_boundary_consistency()


def test_residual_absorbed_gauss(absorbed_line):
    assert boundary_residual_line(gauss_df(), absorbed_line) == pytest.approx(-1.0, abs=1e-5)


def test_residual_zero_function(absorbed_line):
    z = from_line_callable(lambda x: np.zeros_like(x))
    assert boundary_residual_line(z, absorbed_line) == 0.0


def test_residual_domain_member_of_absorbed(absorbed_line):
    f = from_line_callable(lambda x: (2 + np.abs(x)) * np.exp(-np.abs(x)))
    assert boundary_residual_line(f, absorbed_line) == pytest.approx(0.0, abs=1e-5)


def test_residual_mismatched_line_values():
    bd = BoundaryData(1.0, 0.5, 0, 0, 0, 0)
    f = from_line_callable(lambda x: np.exp(-np.abs(x)), boundary_data=bd)
    with pytest.raises(InvalidFunctionError):
        boundary_residual_line(f, GeneratorCoeffsLine(0, 0, 0, 1))


def test_two_half_residual_exp_abs():
    f = from_half_callables(lambda x: np.exp(-x), lambda x: np.exp(x))
    k = GeneratorCoeffsTwoHalf(0, 0, 1, 1, 1, 1, 0, 0)
    rp, rm = boundary_residual_two_half(f, k)
    assert rp == pytest.approx(1.0, abs=1e-7)
    assert rm == pytest.approx(1.0, abs=1e-7)


def test_two_half_residual_zero():
    z = from_half_callables(lambda x: np.zeros_like(x), lambda x: np.zeros_like(x))
    k = GeneratorCoeffsTwoHalf(0, 0, 1, 1, 1, 1, 0, 0)
    assert boundary_residual_two_half(z, k) == (0.0, 0.0)


def test_snapping_out_functions_have_zero_residual():
    # Any boundary data with f'(0+) = f'(0-) = (kappa/2)(f(0+) - f(0-)) solves
    # both equations of the switch/reflect coefficients.
    kappa = 3.0
    k = snapping_out_coeffs(kappa)
    for f0p, f0m in ((1.0, 0.25), (0.3, -0.6), (0.0, 0.0)):
        slope = 0.5 * kappa * (f0p - f0m)
        bd = BoundaryData(f0p, f0m, slope, slope, 0.7, -0.9)
        f = from_half_callables(lambda x: np.exp(-x), lambda x: np.exp(x),
                                boundary_data=bd)
        rp, rm = boundary_residual_two_half(f, k)
        assert rp == pytest.approx(0.0, abs=1e-14)
        assert rm == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-3, 3), st.floats(-3, 3))
def test_residual_linearity(a, b, c1w, c3w):
    k = GeneratorCoeffsLine(0.25, 0.25, 0.25, 0.25)
    bd1 = BoundaryData(c1w, c1w, a, b, a * b, a * b)
    bd2 = BoundaryData(c3w, c3w, b, a, a + b, a + b)
    f1 = from_line_callable(lambda x: np.exp(-x * x), boundary_data=bd1)
    f2 = from_line_callable(lambda x: np.exp(-x * x), boundary_data=bd2)
    r1 = boundary_residual_line(f1, k)
    r2 = boundary_residual_line(f2, k)
    comb = BoundaryData(
        a * bd1.f0_plus + b * bd2.f0_plus, a * bd1.f0_minus + b * bd2.f0_minus,
        a * bd1.f1_plus + b * bd2.f1_plus, a * bd1.f1_minus + b * bd2.f1_minus,
        a * bd1.f2_plus + b * bd2.f2_plus, a * bd1.f2_minus + b * bd2.f2_minus)
    fc = from_line_callable(lambda x: np.exp(-x * x), boundary_data=comb)
    rc = boundary_residual_line(fc, k)
    assert rc == pytest.approx(a * r1 + b * r2, abs=1e-9 * (1 + abs(a) + abs(b)))


# ---------------------------------------------------------------------------
# Projection.
# ---------------------------------------------------------------------------


def test_project_zero_function(absorbed_line):
    g = project_to_domain(lambda x: np.zeros_like(x), absorbed_line, 0.1)
    bd = g.boundary_data
    assert (bd.f1_plus, bd.f1_minus, bd.f2_plus) == (0.0, 0.0, 0.0)
    xs = np.linspace(-1, 1, 11)
    assert np.max(np.abs(g.eval_line(xs))) < 1e-14


def test_project_homogeneous_case(absorbed_line):
    # f(0) = 0 means the correction is unnecessary; minimum norm picks zero.
    g = project_to_domain(lambda x: x * np.exp(-x * x), absorbed_line, 0.1)
    bd = g.boundary_data
    assert bd.f1_plus == 0.0 and bd.f2_plus == 0.0
    assert boundary_residual_line(g, absorbed_line) == pytest.approx(0.0, abs=1e-14)


def test_project_solves_scalar_equation():
    # Killing weight 1/2 against stickiness 1/2 at f(0)=1: the correction
    # curvature solves 0.5*1 + 0.5*b = 0 at minimum norm (a = 0).
    k = GeneratorCoeffsLine(0.5, 0.0, 0.0, 0.5)
    g = project_to_domain(lambda x: np.exp(-x * x), k, 0.1)
    assert g.boundary_data.f2_plus / 2 == pytest.approx(-1.0)
    assert g.boundary_data.f1_plus == 0.0
    assert abs(boundary_residual_line(g, k)) < 1e-10


def test_project_correction_is_minimum_norm():
    # Among all corrections solving the constraint, the chosen (a, at, b) is
    # the minimum-Euclidean-norm one, i.e. parallel to the coefficient vector
    # (-c2p, c2m, c3) of the correction unknowns.
    rng = np.random.default_rng(404)
    for _ in range(10):
        k = random_line_coeffs(rng)
        g = project_to_domain(lambda x: np.exp(-x * x), k, 0.1)
        bd = g.boundary_data
        t = np.array([bd.f1_plus, bd.f1_minus, bd.f2_plus / 2])
        v = np.array([-k.c2_plus, k.c2_minus, k.c3])
        cross = np.linalg.norm(np.cross(t, v))
        assert cross <= 1e-12 * max(1.0, np.linalg.norm(t) * np.linalg.norm(v))


def test_project_residual_randomized():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(25):
        f, d2 = random_smooth_callable(rng)
        k = random_line_coeffs(rng)
        eps = float(rng.uniform(0.05, 0.4))
        g = project_to_domain(from_line_callable(f, d2=d2), k, eps)
        worst = max(worst, abs(boundary_residual_line(g, k)))
    assert worst <= 1e-10


def test_project_two_half_residual_randomized():
    rng = np.random.default_rng(202)
    for _ in range(15):
        fp, d2p = random_smooth_callable(rng)
        fm, d2m = random_smooth_callable(rng)
        k = random_two_half_coeffs(rng)
        eps = float(rng.uniform(0.05, 0.4))
        g = project_to_domain(from_half_callables(fp, fm, d2_pos=d2p, d2_neg=d2m), k, eps)
        rp, rm = boundary_residual_two_half(g, k)
        assert max(abs(rp), abs(rm)) <= 1e-10


def test_project_supnorm_decreases_with_eps():
    k = GeneratorCoeffsLine(0.5, 0.0, 0.0, 0.5)
    xs = np.linspace(-3, 3, 301)
    f = lambda x: np.exp(-np.abs(x))
    prev = np.inf
    for eps in (0.4, 0.2, 0.1, 0.05):
        g = project_to_domain(f, k, eps)
        d = float(np.max(np.abs(g.eval_line(xs) - f(xs))))
        assert d <= prev + 1e-12
        prev = d


def test_project_underdetermined_rejected():
    # A pure-killing condition admits no correcting polynomial; the
    # coefficient type already refuses to represent it.
    with pytest.raises(InvalidCoefficientsError):
        project_to_domain(lambda x: np.exp(-x * x),
                          GeneratorCoeffsLine(1.0, 0.0, 0.0, 0.0), 0.1)


# ---------------------------------------------------------------------------
# Dissipativity.
# ---------------------------------------------------------------------------


def test_dissipativity_zero_function(absorbed_line):
    z = from_line_callable(lambda x: np.zeros_like(x), d2=lambda x: np.zeros_like(x))
    rep = dissipativity_check(z, absorbed_line, 1.0)
    assert rep.holds and rep.margin == 0.0


def test_dissipativity_odd_gauss(absorbed_line):
    f = from_line_callable(lambda x: x * np.exp(-x * x),
                           d2=lambda x: (4 * x**3 - 6 * x) * np.exp(-x * x))
    rep = dissipativity_check(f, absorbed_line, 1.0)
    assert rep.holds
    assert rep.f_norm == pytest.approx(np.exp(-0.5) / np.sqrt(2), abs=1e-4)


def test_dissipativity_absorbed_member(absorbed_line):
    f = from_line_callable(lambda x: (2 + np.abs(x)) * np.exp(-np.abs(x)))
    rep = dissipativity_check(f, absorbed_line, 0.5, residual_tol=1e-4)
    assert rep.holds


def test_dissipativity_rejects_non_members(absorbed_line):
    with pytest.raises(ContractNotApplicableError):
        dissipativity_check(gauss_df(), absorbed_line, 1.0)


def test_dissipativity_on_projected_functions():
    rng = np.random.default_rng(303)
    for _ in range(10):
        f, d2 = random_smooth_callable(rng)
        k = random_line_coeffs(rng)
        g = project_to_domain(from_line_callable(f, d2=d2), k, 0.2)
        for lam in (0.1, 1.0, 10.0):
            assert dissipativity_check(g, k, lam).holds
