import pytest
from hypothesis import given
from hypothesis import strategies as st

from genbm.coeffs import (
    GeneratorCoeffsLine,
    GeneratorCoeffsTwoHalf,
    WalkParamsLine,
    WalkParamsTwoHalf,
    coeffs_from_walk_line,
    coeffs_from_walk_two_half,
    normalized_line,
    snapping_out_coeffs,
)
from genbm.errors import InvalidCoefficientsError

rates = st.floats(min_value=0.0, max_value=1e6, allow_nan=False)


def test_degenerate_walk_gives_absorbed_coeffs():
    k = coeffs_from_walk_line(WalkParamsLine(0, 0, 0))
    assert (k.c1, k.c2_minus, k.c2_plus, k.c3) == (0, 0, 0, 1)


def test_line_map_normalizes_by_sum():
    k = coeffs_from_walk_line(WalkParamsLine(A=0.25, B_plus=2, B_minus=2))
    s = 0.25 + 2 + 2 + 1
    assert k.c1 == pytest.approx(0.25 / s)
    assert k.c2_plus == pytest.approx(2 / s)
    assert k.c2_minus == pytest.approx(2 / s)
    assert k.c3 == pytest.approx(1 / s)
    assert k.c1 == pytest.approx(0.047619, abs=1e-6)


def test_line_map_asymmetric():
    k = coeffs_from_walk_line(WalkParamsLine(A=1, B_plus=1, B_minus=0))
    assert (k.c1, k.c2_minus, k.c2_plus, k.c3) == pytest.approx(
        (1 / 3, 0.0, 1 / 3, 1 / 3))


def test_two_half_degenerate_gives_absorbed_sides():
    k = coeffs_from_walk_two_half(WalkParamsTwoHalf(), normalize=False)
    assert (k.c1_plus, k.c2_plus, k.c3_plus, k.a_plus) == (0, 0, 1, 0)
    assert (k.c1_minus, k.c2_minus, k.c3_minus, k.a_minus) == (0, 0, 1, 0)


def test_two_half_map_figure_values():
    p = WalkParamsTwoHalf(A_plus=0.25, A_minus=0.25, B_plus=2, B_minus=2,
                          C_plus=6, C_minus=4)
    k = coeffs_from_walk_two_half(p, normalize=False)
    assert (k.c1_plus, k.a_plus, k.c2_plus, k.c3_plus) == (0.25, 6, 2, 1)
    assert (k.c1_minus, k.a_minus, k.c2_minus, k.c3_minus) == (0.25, 4, 2, 1)
    kc = k.canonical()
    assert kc.plus_sum() == pytest.approx(1.0)
    assert kc.minus_sum() == pytest.approx(1.0)
    # Side rescaling leaves coefficient ratios unchanged.
    assert kc.a_plus / kc.c2_plus == pytest.approx(3.0)


def test_snapping_out_ratio_from_walk():
    # Large escape scale with switches C = kappa*B/2 approaches switch/reflect
    # ratio kappa/2 on both sides.
    kappa = 1.6
    for B in (10.0, 100.0, 1000.0):
        p = WalkParamsTwoHalf(B_plus=B, B_minus=B,
                              C_plus=kappa * B / 2, C_minus=kappa * B / 2)
        k = coeffs_from_walk_two_half(p)
        assert k.a_plus / k.c2_plus == pytest.approx(kappa / 2)
        assert k.a_minus / k.c2_minus == pytest.approx(kappa / 2)
    k_so = snapping_out_coeffs(kappa)
    assert k_so.a_plus / k_so.c2_plus == pytest.approx(kappa / 2)


def test_pure_killing_rejected():
    with pytest.raises(InvalidCoefficientsError):
        GeneratorCoeffsLine(1.0, 0.0, 0.0, 0.0)
    with pytest.raises(InvalidCoefficientsError):
        normalized_line(5.0, 0.0, 0.0, 0.0)


def test_unnormalized_line_rejected():
    with pytest.raises(InvalidCoefficientsError):
        GeneratorCoeffsLine(0.2, 0.2, 0.2, 0.2)


def test_negative_and_nonfinite_rejected():
    with pytest.raises(InvalidCoefficientsError):
        WalkParamsLine(A=-1.0)
    with pytest.raises(InvalidCoefficientsError):
        WalkParamsTwoHalf(B_plus=float("nan"))
    with pytest.raises(InvalidCoefficientsError):
        GeneratorCoeffsTwoHalf(0, 0, 0, 0, -1, 1, 1, 1)


def test_two_half_needs_reflection_or_stickiness_each_side():
    with pytest.raises(InvalidCoefficientsError):
        GeneratorCoeffsTwoHalf(1, 0, 1, 0, 0, 1, 0, 1)  # plus side bare
    with pytest.raises(InvalidCoefficientsError):
        GeneratorCoeffsTwoHalf(0, 1, 0, 1, 1, 0, 1, 0)  # minus side bare


@given(rates, rates, rates)
def test_walk_line_map_invariants(a, bp, bm):
    k = coeffs_from_walk_line(WalkParamsLine(a, bp, bm))
    assert abs(k.c1 + k.c2_minus + k.c2_plus + k.c3 - 1.0) < 1e-12
    assert k.c1 < 1.0
    assert k.c3 > 0.0


@given(rates, rates, rates, rates, rates, rates)
def test_walk_two_half_map_invariants(ap, am, bp, bm, cp, cm):
    k = coeffs_from_walk_two_half(WalkParamsTwoHalf(ap, am, bp, bm, cp, cm))
    assert abs(k.plus_sum() - 1.0) < 1e-12
    assert abs(k.minus_sum() - 1.0) < 1e-12
    assert max(k.c2_plus, k.c3_plus) > 0
    assert max(k.c2_minus, k.c3_minus) > 0
