import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fracground.errors import InvalidFieldError, ParameterError
from fracground.spectral import (Field, Grid, dealiased_apply, dealiased_sum, dilate, dnorm_sq,
                                 fractional_laplacian, lp_power, radial_asymmetry,
                                 radial_dnorm_sq_3d, radial_lp_power_3d, shift,
                                 spectral_truncate, symmetrize, zero_pad)


def test_grid_validation():
    with pytest.raises(ParameterError):
        Grid(1, 100, 1.0)
    with pytest.raises(ParameterError):
        Grid(1, 64, -1.0)
    g = Grid(2, 16, 3.0)
    assert g.spacing == pytest.approx(6.0 / 16)
    assert g.axis[0] == -3.0
    assert g.shape == (16, 16)


def test_field_rejects_nonfinite():
    g = Grid(1, 8, 1.0)
    with pytest.raises(InvalidFieldError):
        Field(g, np.full(8, np.nan))
    with pytest.raises(InvalidFieldError):
        Field(g, np.zeros(7))


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("k", [1, 3, 7])
def test_single_mode_eigenfunction(s, k):
    g = Grid(1, 64, math.pi)
    u = Field(g, np.cos(k * g.axis))
    out = fractional_laplacian(u, s).values
    assert np.allclose(out, k ** (2 * s) * u.values, rtol=0, atol=1e-12 * k ** (2 * s))


def test_constant_is_annihilated():
    g = Grid(2, 16, 2.0)
    u = Field(g, np.ones(g.shape))
    assert np.max(np.abs(fractional_laplacian(u, 0.4).values)) < 1e-13
    assert dnorm_sq(u, 0.4) < 1e-24


def _line_half_laplacian(x):
    """(-Delta)^{1/2} of exp(-x^2/2) on the whole line by adaptive quadrature.

    (1/pi) int_0^inf (2u(x) - u(x+z) - u(x-z)) / z^2 dz, cut at Z = |x| + 15
    beyond which the shifted terms vanish and 2u(x)/z^2 integrates exactly.
    """
    u = lambda t: math.exp(-0.5 * t * t)  # noqa: E731

    def integrand(z):
        if z < 1e-4:
            return -(x * x - 1) * u(x)  # limit of the second difference over z^2
        return (2 * u(x) - u(x + z) - u(x - z)) / (z * z)

    Z = abs(x) + 15.0
    pts = [p for p in (abs(x) - 1, abs(x), abs(x) + 1) if 0 < p < Z]
    head = quad(integrand, 0, Z, points=pts, limit=800, epsabs=1e-15)[0]
    return (head + 2 * u(x) / Z) / math.pi


def _image_sum(x, period, mass, near=3, far=2000):
    """Sum over periodic images m != 0: exact quadrature near, dipole-free far field."""
    total = sum(_line_half_laplacian(x + period * m) for m in range(-near, near + 1) if m)
    r = x + period * np.concatenate([np.arange(-far, -near), np.arange(near + 1, far + 1)])
    total += float(np.sum(-mass / (math.pi * r * r)))
    return total


def test_half_laplacian_against_periodized_quadrature():
    # on the torus the multiplier acts on the periodized function, so the
    # singular-integral oracle sums the line result over all images
    g = Grid(1, 512, 20.0)
    u = Field(g, np.exp(-0.5 * g.axis ** 2))
    lap = fractional_laplacian(u, 0.5).values
    mass = math.sqrt(2 * math.pi)
    for i in np.where(np.abs(g.axis) <= 5)[0][::8]:
        x = g.axis[i]
        ref = _line_half_laplacian(x) + _image_sum(x, 2 * g.L, mass)
        assert abs(lap[i] - ref) <= 1e-4 * abs(ref)


def test_line_oracle_gap_is_the_image_sum():
    g = Grid(1, 512, 20.0)
    u = Field(g, np.exp(-0.5 * g.axis ** 2))
    lap = fractional_laplacian(u, 0.5).values
    i = g.n // 2
    gap = lap[i] - _line_half_laplacian(0.0)
    assert gap == pytest.approx(_image_sum(0.0, 2 * g.L, math.sqrt(2 * math.pi)), rel=1e-3)


def test_parseval_at_zero_order_limit():
    g = Grid(1, 256, 10.0)
    u = Field(g, np.exp(-g.axis ** 2))
    # s -> 0 is excluded, but the s = 1 limit of the symbol gives the Dirichlet energy
    exact = math.sqrt(math.pi / 2)  # integral of |u'|^2 for exp(-x^2)
    assert dnorm_sq(u, 0.999999) == pytest.approx(exact, rel=1e-4)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(s, a, b):
    g = Grid(1, 64, 5.0)
    rng = np.random.default_rng(0)
    u, v = (Field(g, rng.standard_normal(64)) for _ in range(2))
    lhs = fractional_laplacian(a * u + b * v, s).values
    rhs = a * fractional_laplacian(u, s).values + b * fractional_laplacian(v, s).values
    assert np.allclose(lhs, rhs, atol=1e-10 * (1 + abs(a) + abs(b)))


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95), st.integers(-20, 20))
def test_seminorm_translation_invariant(s, k):
    g = Grid(1, 64, 5.0)
    u = Field(g, np.exp(-(g.axis - 0.3) ** 2))
    assert dnorm_sq(shift(u, (k,)), s) == pytest.approx(dnorm_sq(u, s), rel=1e-12)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("t", [0.8, 1.25])
def test_dilation_scaling_of_norms(s, t):
    # zero-mean profile; the remaining box defect is O((pi/L)^{3+2s})
    g = Grid(1, 4096, 80.0)
    x = g.axis
    u = Field(g, x * np.exp(-x ** 2))
    v = dilate(u, t)
    assert np.allclose(v.values, x / t * np.exp(-(x / t) ** 2), atol=1e-12)
    assert dnorm_sq(v, s) == pytest.approx(t ** (1 - 2 * s) * dnorm_sq(u, s), rel=2e-7)
    assert lp_power(v, 2.0) == pytest.approx(t * lp_power(u, 2.0), rel=1e-9)


def test_dilation_two_dimensions():
    g = Grid(2, 128, 12.0)
    X, Y = g.mesh()
    u = Field(g, np.exp(-X ** 2 - 2 * Y ** 2))
    v = dilate(u, 1.3)
    assert np.allclose(v.values, np.exp(-(X / 1.3) ** 2 - 2 * (Y / 1.3) ** 2), atol=1e-10)


def test_dilation_rejects_degenerate_factor():
    g = Grid(1, 64, 5.0)
    u = Field(g, np.exp(-g.axis ** 2))
    for t in (0.0, -1.0, float("inf"), 1e-3):
        with pytest.raises(ParameterError):
            dilate(u, t)


def test_zero_pad_is_interpolation():
    g = Grid(1, 32, math.pi)
    u = np.cos(3 * g.axis) + np.sin(5 * g.axis)
    fine = zero_pad(u)
    x = -math.pi + np.arange(64) * (2 * math.pi / 64)
    assert np.allclose(fine, np.cos(3 * x) + np.sin(5 * x), atol=1e-12)
    assert np.allclose(spectral_truncate(fine), u, atol=1e-12)


def test_dealiased_apply_is_derivative_of_dealiased_sum():
    g = Grid(1, 64, 4.0)
    u = Field(g, np.exp(-g.axis ** 2) * 1.5)
    v = Field(g, np.cos(g.axis) * np.exp(-0.3 * g.axis ** 2))
    F = lambda t: np.abs(t) ** 3.5 / 3.5  # noqa: E731
    f = lambda t: np.sign(t) * np.abs(t) ** 2.5  # noqa: E731
    eps = 1e-6
    fd = (dealiased_sum(u + v * eps, F) - dealiased_sum(u - v * eps, F)) / (2 * eps)
    assert dealiased_apply(u, f).l2_inner(v) == pytest.approx(fd, rel=1e-8)


def test_symmetrize_and_asymmetry():
    g = Grid(2, 32, 4.0)
    r2 = g.radius_sq()
    u = Field(g, np.exp(-r2))
    assert radial_asymmetry(u) < 1e-14
    X, _ = g.mesh()
    w = Field(g, np.exp(-r2) * (1 + 0.3 * X))
    assert radial_asymmetry(w) > 1e-2
    assert radial_asymmetry(symmetrize(w)) < 1e-14


def test_radial_reduction_against_closed_form():
    s = 0.6
    # ||exp(-|x|^2)||_D^2 in R^3 = (pi/2) 2^{s+1/2} Gamma(s + 3/2)
    exact = math.pi / 2 * 2 ** (s + 0.5) * math.gamma(s + 1.5)
    errs = []
    for L, n in ((24.0, 2048), (48.0, 4096), (96.0, 8192)):
        line = Grid(1, n, L)
        errs.append(abs(radial_dnorm_sq_3d(Field(line, np.exp(-line.axis ** 2)), s) / exact - 1))
    assert errs[-1] < 5e-9
    # the box defect of the odd profile x u(|x|) decays like L^{-(3+2s)}
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.allclose(rates, 3 + 2 * s, atol=0.1)
    line = Grid(1, 1024, 12.0)
    prof = Field(line, np.exp(-line.axis ** 2))
    assert radial_lp_power_3d(prof, 2.0) == pytest.approx((math.pi / 2) ** 1.5, rel=1e-10)
    cube = Grid(3, 64, 6.0)
    u3 = Field(cube, np.exp(-cube.radius_sq()))
    assert radial_lp_power_3d(prof, 3.0) == pytest.approx(lp_power(u3, 3.0), rel=1e-10)
