import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracground.constants import (constant_from_threshold, extension_constant,
                                  extrapolate_bubble_quotient, fourier_sharp_constant,
                                  neumann_constant, sharp_constants, sobolev_constant_formula,
                                  sobolev_constant_product_form, threshold_from_constant)
from fracground.errors import DomainError, ParameterError

mp.mp.dps = 40


def _mp_sobolev(s, N):
    s, N = mp.mpf(s), mp.mpf(N)
    g = mp.gamma
    return (2 * mp.pi ** s * g(1 - s) * g((N + 2 * s) / 2) * g(N / 2) ** (2 * s / N)
            / (g(s) * g((N - 2 * s) / 2) * g(N) ** (2 * s / N)))


def _mp_fourier(s, N):
    s, N = mp.mpf(s), mp.mpf(N)
    g = mp.gamma
    return (2 ** (2 * s) * mp.pi ** s * g((N + 2 * s) / 2) / g((N - 2 * s) / 2)
            * (g(N / 2) / g(N)) ** (2 * s / N))


PAIRS = [(0.25, 1), (0.4, 1), (0.5, 3), (0.6, 3), (0.75, 2), (0.9, 2), (0.3, 5)]


@pytest.mark.parametrize("s,N", PAIRS)
def test_sobolev_constant_against_high_precision_gamma(s, N):
    ref = float(_mp_sobolev(s, N))
    assert sobolev_constant_formula(s, N) == pytest.approx(ref, rel=1e-13)
    assert sobolev_constant_product_form(s, N) == pytest.approx(ref, rel=1e-13)


@pytest.mark.parametrize("s,N", PAIRS)
def test_fourier_constant_against_high_precision_gamma(s, N):
    assert fourier_sharp_constant(s, N) == pytest.approx(float(_mp_fourier(s, N)), rel=1e-13)


def test_half_order_three_dimensions_is_finite_positive():
    v = sobolev_constant_formula(0.5, 3)
    assert math.isfinite(v) and v > 0


@pytest.mark.parametrize("s", [0.1, 0.25, 0.5, 0.75, 0.9])
def test_extension_constant_closed_form(s):
    k = extension_constant(s)
    ref = mp.mpf(2) ** (2 * s - 1) * mp.gamma(s) / mp.gamma(1 - s)
    assert k == pytest.approx(float(ref), rel=1e-13)
    assert k * neumann_constant(s) == pytest.approx(1.0, rel=1e-15)
    assert extension_constant(0.5) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_extension_constant_matches_neumann_trace(s):
    assert extension_constant(s, verify=True, tol=0.02) == extension_constant(s)


@pytest.mark.parametrize("s,N", PAIRS)
def test_calibration_ratio_is_one(s, N):
    sc = sharp_constants(s, N)
    assert sc.calibration_ratio == pytest.approx(1.0, rel=1e-13)


def test_domain_errors():
    with pytest.raises(DomainError):
        sobolev_constant_formula(0.5, 1)
    with pytest.raises(DomainError):
        fourier_sharp_constant(0.6, 1)
    with pytest.raises(ParameterError):
        sobolev_constant_formula(1.0, 3)
    with pytest.raises(ParameterError):
        sobolev_constant_formula(0.0, 3)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.95), st.integers(1, 6), st.floats(0.1, 50.0))
def test_threshold_roundtrip(s, N, S):
    if not N > 2 * s:
        return
    thr = threshold_from_constant(S, s, N)
    assert constant_from_threshold(thr, s, N) == pytest.approx(S, rel=1e-11)


@pytest.mark.parametrize("s,N,tol", [(0.4, 1, 1e-4), (0.25, 1, 1e-4), (0.5, 2, 1e-4),
                                     (0.6, 3, 1e-4), (0.4, 3, 1e-4)])
def test_bubble_quotient_extrapolates_to_closed_form(s, N, tol):
    ext = extrapolate_bubble_quotient(s, N)
    assert ext.limit == pytest.approx(fourier_sharp_constant(s, N), rel=tol)
    # the box truncation error shrinks monotonically along the ladder
    gaps = [abs(q - ext.limit) for q in ext.quotients]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_measured_constants_pass_calibration():
    sc = sharp_constants(0.4, 1, measured=True)
    assert sc.measurement["method"] == "cartesian"
    assert abs(sc.measurement["relative_to_closed_form"]) < 1e-3


def test_radial_method_requires_three_dimensions():
    with pytest.raises(ParameterError):
        extrapolate_bubble_quotient(0.4, 1, method="radial")
