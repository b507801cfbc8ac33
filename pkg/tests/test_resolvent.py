import dataclasses

import numpy as np
import pytest

from genbm.coeffs import GeneratorCoeffsLine, GeneratorCoeffsTwoHalf
from genbm.domain import BoundaryData, boundary_residual_line
from genbm.errors import ToleranceNotMetError
from genbm.funcs import random_line_coeffs, random_smooth_callable
from genbm.resolvent import (
    free_resolvent,
    resolvent_identity_gap,
    resolvent_line,
    resolvent_two_half,
    verify_resolvent_identity,
)


def exp_abs(y):
    return np.exp(-np.abs(y))


def test_free_resolvent_zero():
    xs = np.linspace(-3, 3, 7)
    assert np.all(free_resolvent(lambda y: np.zeros_like(y), 1.0, xs) == 0)


def test_free_resolvent_even_symmetry():
    xs = np.linspace(0.2, 2.0, 5)
    g = lambda y: np.exp(-np.square(y))
    left = free_resolvent(g, 0.7, -xs)
    right = free_resolvent(g, 0.7, xs)
    assert np.max(np.abs(left - right)) < 1e-12


def test_free_resolvent_closed_form():
    # lam = 1/2 against the exponential: (1 + |x|) e^{-|x|}.
    xs = np.linspace(-4, 4, 33)
    got = free_resolvent(exp_abs, 0.5, xs)
    want = (1 + np.abs(xs)) * np.exp(-np.abs(xs))
    assert np.max(np.abs(got - want)) < 1e-12


def test_free_resolvent_tolerance_error():
    wild = lambda y: np.cos(40 * y * y) * np.exp(-y * y)
    with pytest.raises(ToleranceNotMetError):
        free_resolvent(wild, 0.5, 0.3, check_tol=1e-10)


def test_resolvent_line_zero_source(absorbed_line):
    sol = resolvent_line(lambda y: np.zeros_like(y), 1.0, absorbed_line)
    assert sol.corrections == (0.0,)
    assert np.all(sol.eval_line(np.linspace(-2, 2, 9)) == 0)


def test_resolvent_line_absorbed_closed_form(absorbed_line):
    sol = resolvent_line(exp_abs, 0.5, absorbed_line)
    assert sol.corrections[0] == pytest.approx(1.0, abs=1e-12)
    xs = np.linspace(-3, 3, 21)
    want = (2 + np.abs(xs)) * np.exp(-np.abs(xs))
    assert np.max(np.abs(sol.eval_line(xs) - want)) < 1e-10
    assert sol.boundary_data.f2_plus == pytest.approx(0.0, abs=1e-12)


def test_resolvent_line_mixed_constant(absorbed_line):
    k = GeneratorCoeffsLine(0.5, 0.0, 0.0, 0.5)
    sol = resolvent_line(exp_abs, 0.5, k)
    assert sol.corrections[0] == pytest.approx(-1.0 / 3.0, abs=1e-12)
    res = boundary_residual_line(sol.as_domain_function(), k)
    assert abs(res) < 1e-12


def test_resolvent_two_half_reflected_closed_form(reflected_two_half):
    gp = lambda y: np.exp(-y)
    gn = lambda y: np.zeros_like(y)
    sol = resolvent_two_half(gp, gn, 0.5, reflected_two_half)
    a, b = sol.corrections
    assert a == pytest.approx(0.5, abs=1e-12)
    assert b == pytest.approx(0.0, abs=1e-14)
    xs = np.linspace(0, 4, 21)
    want = (xs + 1) * np.exp(-xs)
    assert np.max(np.abs(sol.eval_side(xs, +1) - want)) < 1e-10
    assert sol.boundary_data.f1_plus == pytest.approx(0.0, abs=1e-12)


def test_resolvent_two_half_symmetry():
    k = GeneratorCoeffsTwoHalf(0.1, 0.1, 0.4, 0.4, 0.8, 0.8, 0.3, 0.3).canonical()
    g = lambda y: np.exp(-np.square(y))
    sol = resolvent_two_half(g, lambda y: g(-y), 1.0, k)
    a, b = sol.corrections
    assert a == pytest.approx(b, abs=1e-13)
    assert sol.boundary_data.f0_plus == pytest.approx(sol.boundary_data.f0_minus, abs=1e-13)


def test_two_half_boundary_residuals_random():
    rng = np.random.default_rng(11)
    from genbm.domain import boundary_residual_two_half
    from genbm.funcs import random_two_half_coeffs

    for _ in range(10):
        k = random_two_half_coeffs(rng)
        gp, _ = random_smooth_callable(rng)
        gn, _ = random_smooth_callable(rng)
        lam = float(rng.uniform(0.2, 4.0))
        sol = resolvent_two_half(gp, gn, lam, k)
        rp, rm = boundary_residual_two_half(sol.as_domain_function(), k)
        assert max(abs(rp), abs(rm)) < 1e-9


def test_verify_identity_zero(absorbed_line):
    sol = resolvent_line(lambda y: np.zeros_like(y), 1.0, absorbed_line)
    out = verify_resolvent_identity(sol, lambda y: np.zeros_like(y), absorbed_line,
                                    np.linspace(-1, 1, 21))
    assert out == {"pde_residual": 0.0, "boundary_residual": 0.0}


def test_verify_identity_fd_floor(absorbed_line):
    sol = resolvent_line(exp_abs, 0.5, absorbed_line)
    out = verify_resolvent_identity(sol, exp_abs, absorbed_line,
                                    np.arange(-2, 2.0001, 1e-3))
    assert out["pde_residual"] <= 1e-5
    assert out["boundary_residual"] <= 1e-12


def test_corrupted_correction_moves_residual(absorbed_line):
    sol = resolvent_line(exp_abs, 0.5, absorbed_line)
    s = np.sqrt(2 * 0.5)
    da = 0.1
    bd = sol.boundary_data
    bad_bd = BoundaryData(bd.f0_plus + da, bd.f0_minus + da,
                          bd.f1_plus - s * da, bd.f1_minus + s * da,
                          bd.f2_plus + 2 * 0.5 * da, bd.f2_minus + 2 * 0.5 * da)
    bad = dataclasses.replace(sol, corrections=(sol.corrections[0] + da,),
                              boundary_data=bad_bd)
    res = boundary_residual_line(bad.as_domain_function(), absorbed_line)
    assert abs(res) >= 0.01


def test_resolvent_contraction_random():
    rng = np.random.default_rng(21)
    xs = np.linspace(-8, 8, 161)
    for _ in range(8):
        k = random_line_coeffs(rng)
        g, _ = random_smooth_callable(rng)
        lam = float(rng.uniform(0.2, 5.0))
        sol = resolvent_line(g, lam, k)
        norm_g = max(float(np.max(np.abs(g(np.linspace(-10, 10, 801))))), 1e-12)
        assert lam * float(np.max(np.abs(sol.eval_line(xs)))) <= norm_g * (1 + 1e-8)


def test_resolvent_sign_preservation(absorbed_line):
    rng = np.random.default_rng(31)
    xs = np.linspace(-6, 6, 121)
    for _ in range(5):
        c = rng.uniform(-1.5, 1.5)
        w = rng.uniform(0.4, 1.5)
        g = lambda y: np.exp(-np.square((y - c) / w))
        k = random_line_coeffs(rng)
        sol = resolvent_line(g, 1.0, k)
        assert float(np.min(sol.eval_line(xs))) >= -1e-10


def test_resolvent_identity_line(absorbed_line):
    probes = np.linspace(-2, 2, 9)
    for lam, mu in ((1.0, 2.0), (0.5, 4.0)):
        gap = resolvent_identity_gap(exp_abs, absorbed_line, lam, mu, probes)
        assert gap < 1e-7


def test_resolvent_identity_two_half():
    k = GeneratorCoeffsTwoHalf(0.1, 0.2, 0.6, 0.4, 1.0, 0.8, 0.5, 0.7).canonical()
    g = (lambda y: np.exp(-np.square(y)), lambda y: 0.5 * np.exp(-np.abs(y)))
    gap = resolvent_identity_gap(g, k, 1.0, 2.0, np.linspace(-2, 2, 9))
    assert gap < 1e-7


def test_exponential_holding_coeffs_have_valid_resolvent():
    # Stickiness against killing with no reflection: the walk family cannot
    # reach it, but the oracle handles it directly.
    lam_hold = 2.5
    k = GeneratorCoeffsLine(lam_hold / (1 + lam_hold), 0.0, 0.0, 1.0 / (1 + lam_hold))
    sol = resolvent_line(exp_abs, 1.0, k)
    res = boundary_residual_line(sol.as_domain_function(), k)
    assert abs(res) < 1e-12
    out = verify_resolvent_identity(sol, exp_abs, k, np.arange(-2, 2.0001, 1e-3))
    assert out["pde_residual"] < 1e-5


def test_tabulated_sides_match_direct(reflected_two_half):
    gp = lambda y: np.exp(-y)
    gn = lambda y: 0.3 * np.exp(y)
    sol = resolvent_two_half(gp, gn, 0.5, reflected_two_half)
    pos, neg = sol.tabulated_sides(-10, 10, 5e-3)
    xs = np.linspace(0, 5, 41)
    assert np.max(np.abs(pos(xs) - sol.eval_side(xs, +1))) < 1e-10
    assert np.max(np.abs(neg(-xs) - sol.eval_side(-xs, -1))) < 1e-10
