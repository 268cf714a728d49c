"""Periodic-box discretization, Fourier multipliers and the norms built on them.

The box is [-L, L)^N sampled at x_j = -L + j h with h = 2L/n.  Transforms are
unnormalized DFTs (scipy.fft); the continuous Fourier quantities are recovered
with the Parseval weight h^N / n^N, so that for u = A cos(xi_1 x) in one
dimension ``dnorm_sq`` returns A^2 |xi_1|^{2s} (2L)/2.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.signal import czt

from .errors import InvalidFieldError, ParameterError


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L, L)^dim with n points per axis."""

    dim: int
    n: int
    L: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ParameterError(f"dim must be 1, 2 or 3, got {self.dim}")
        if int(self.n) != self.n or self.n < 8 or not _is_power_of_two(int(self.n)):
            raise ParameterError(f"n must be a power of two >= 8, got {self.n}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ParameterError(f"half-width L must be positive, got {self.L}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @classmethod
    def with_spacing(cls, dim: int, L: float, max_spacing: float, min_n: int = 8) -> "Grid":
        """Smallest power-of-two grid on [-L, L)^dim with spacing <= max_spacing."""
        n = max(min_n, 2 ** math.ceil(math.log2(2 * L / max_spacing)))
        return cls(dim, n, L)

    @property
    def spacing(self) -> float:
        return 2 * self.L / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def volume(self) -> float:
        return (2 * self.L) ** self.dim

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n ** self.dim

    @property
    def axis(self) -> np.ndarray:
        return -self.L + self.spacing * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Per-axis modes (pi/L) k in FFT order; k = -n/2 is the Nyquist row."""
        return (np.pi / self.L) * np.fft.fftfreq(self.n, 1.0 / self.n)

    def mesh(self):
        return np.meshgrid(*([self.axis] * self.dim), indexing="ij", sparse=True)

    def radius_sq(self) -> np.ndarray:
        return _radius_sq(self)

    def radius(self) -> np.ndarray:
        return np.sqrt(_radius_sq(self))

    def xi_sq(self) -> np.ndarray:
        return _xi_sq(self)

    def padded(self) -> "Grid":
        """Grid with twice the points on the same box (used for dealiasing)."""
        return Grid(self.dim, 2 * self.n, self.L)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.n, "L": self.L}


@functools.lru_cache(maxsize=32)
def _radius_sq(grid: Grid) -> np.ndarray:
    r2 = sum(c * c for c in grid.mesh())
    r2 = np.broadcast_to(r2, grid.shape).copy()
    r2.flags.writeable = False
    return r2


@functools.lru_cache(maxsize=32)
def _xi_sq(grid: Grid) -> np.ndarray:
    k = grid.wavenumbers
    xi2 = sum(c * c for c in np.meshgrid(*([k] * grid.dim), indexing="ij", sparse=True))
    xi2 = np.broadcast_to(xi2, grid.shape).copy()
    xi2.flags.writeable = False
    return xi2


@functools.lru_cache(maxsize=64)
def fractional_symbol(grid: Grid, s: float) -> np.ndarray:
    """|xi|^{2s} on the mode lattice, zero at the zero mode."""
    sym = _xi_sq(grid) ** s
    sym.flags.writeable = False
    return sym


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of a function on a Grid.  Values are stored read-only."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.size != self.grid.size:
            raise InvalidFieldError(
                f"expected {self.grid.size} values for {self.grid}, got {v.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise InvalidFieldError("field contains NaN or infinite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls(grid, fn(*grid.mesh()) * np.ones(grid.shape))

    def like(self, values) -> "Field":
        return Field(self.grid, values)

    def __add__(self, other):
        return self.like(self.values + _vals(other))

    def __sub__(self, other):
        return self.like(self.values - _vals(other))

    def __mul__(self, c):
        return self.like(self.values * _vals(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.values)

    def integral(self) -> float:
        return float(self.grid.cell_volume * self.values.sum())

    def l2_inner(self, other) -> float:
        return float(self.grid.cell_volume * np.sum(self.values * _vals(other)))


def _vals(x):
    return x.values if isinstance(x, Field) else x


@dataclass(frozen=True)
class FracParams:
    """Fractional order s and dimension N with N > 2s."""

    s: float
    N: int

    def __post_init__(self):
        check_order(self.s)
        if not self.N > 2 * self.s:
            raise ParameterError(f"need N > 2s, got N={self.N}, s={self.s}")

    @property
    def two_star(self) -> float:
        return 2 * self.N / (self.N - 2 * self.s)


def check_order(s: float) -> None:
    if not (0.0 < s < 1.0):
        raise ParameterError(f"fractional order s must lie in (0, 1), got {s}")


def _check_field(u: Field) -> None:
    if not isinstance(u, Field):
        raise InvalidFieldError(f"expected a Field, got {type(u).__name__}")


def apply_multiplier(u: Field, symbol: np.ndarray) -> Field:
    """Inverse transform of symbol * u_hat, real part."""
    return u.like(np.real(sfft.ifftn(symbol * sfft.fftn(u.values))))


def fractional_laplacian(u: Field, s: float) -> Field:
    """(-Delta)^s u through the Fourier symbol |xi|^{2s}."""
    _check_field(u)
    check_order(s)
    return apply_multiplier(u, fractional_symbol(u.grid, s))


def dnorm_sq(u: Field, s: float) -> float:
    """Squared homogeneous seminorm  integral of |xi|^{2s} |u_hat|^2."""
    _check_field(u)
    check_order(s)
    g = u.grid
    U = sfft.fftn(u.values)
    return float(g.cell_volume / g.size * np.sum(fractional_symbol(g, s) * np.abs(U) ** 2))


def lp_power(u: Field, p: float) -> float:
    """Box sum of |u|^p times the cell volume."""
    if not p >= 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    return float(u.grid.cell_volume * np.sum(np.abs(u.values) ** p))


def lp_norm(u: Field, p: float) -> float:
    _check_field(u)
    return lp_power(u, p) ** (1.0 / p)


def _dilate_axis(v: np.ndarray, t: float, axis: int) -> np.ndarray:
    """Evaluate the trigonometric interpolant along one axis at x/t.

    A chirp-z transform evaluates the interpolant at the n points x_j/t.  The
    Nyquist coefficient is split between +n/2 and -n/2 so that it acts as a
    cosine, and nodes with |x_j / t| >= L are set to zero.
    """
    v = np.moveaxis(v, axis, -1)
    n = v.shape[-1]
    U = sfft.fft(v, axis=-1)
    half = n // 2
    V = np.concatenate([U[..., half:], U[..., : half + 1]], axis=-1)
    V[..., 0] *= 0.5
    V[..., -1] *= 0.5
    k = np.arange(-half, half + 1)
    V *= np.where(k % 2 == 0, 1.0, -1.0)
    a = np.exp(1j * np.pi / t)
    w = np.exp(2j * np.pi / (n * t))
    X = czt(V, m=n, w=w, a=a, axis=-1)
    rel = (2 * np.arange(n) / n - 1) / t
    out = np.real(X * np.exp(-1j * np.pi * half * rel)) / n
    out[..., np.abs(rel) >= 1.0] = 0.0
    return np.moveaxis(out, -1, axis)


def dilate(u: Field, t: float) -> Field:
    """Return x -> u(x/t) resampled by trigonometric interpolation.

    Points whose preimage x/t leaves the box are truncated to zero.
    """
    _check_field(u)
    if not (t > 0 and math.isfinite(t)):
        raise ParameterError(f"dilation factor must be positive, got {t}")
    g = u.grid
    if t * g.L < 4 * g.spacing:
        raise ParameterError(f"dilation t={t} shrinks the box below four cells")
    if t == 1.0:
        return u.like(u.values.copy())
    v = np.asarray(u.values, dtype=float)
    for ax in range(g.dim):
        v = _dilate_axis(v, t, ax)
    return u.like(v)


def zero_pad(values: np.ndarray) -> np.ndarray:
    """Spectral interpolation onto the grid with twice the points per axis."""
    V = sfft.fftn(values)
    for ax in range(values.ndim):
        V = _pad_axis(V, ax)
    return np.real(sfft.ifftn(V)) * 2 ** values.ndim


def spectral_truncate(values: np.ndarray) -> np.ndarray:
    """Adjoint of ``zero_pad`` up to the factor 2^N: keeps the coarse modes.

    The two fine-grid copies of the coarse Nyquist mode are averaged, which
    makes the dealiased box sum of F(zero_pad(u)) differentiate exactly to
    spectral_truncate(f(zero_pad(u))).
    """
    V = sfft.fftn(values)
    for ax in range(values.ndim):
        V = _truncate_axis(V, ax)
    return np.real(sfft.ifftn(V)) / 2 ** values.ndim


def _pad_axis(V, ax):
    V = np.moveaxis(V, ax, -1)
    n = V.shape[-1]
    h = n // 2
    out = np.zeros(V.shape[:-1] + (2 * n,), dtype=complex)
    out[..., :h] = V[..., :h]
    out[..., -h + 1:] = V[..., h + 1:]
    out[..., h] = 0.5 * V[..., h]
    out[..., -h] = 0.5 * V[..., h]
    return np.moveaxis(out, -1, ax)


def _truncate_axis(V, ax):
    V = np.moveaxis(V, ax, -1)
    n = V.shape[-1] // 2
    h = n // 2
    out = np.empty(V.shape[:-1] + (n,), dtype=complex)
    out[..., :h] = V[..., :h]
    out[..., h + 1:] = V[..., -h + 1:]
    out[..., h] = 0.5 * (V[..., h] + V[..., -h])
    return np.moveaxis(out, -1, ax)


def dealiased_sum(u: Field, fn) -> float:
    """Box integral of fn(u) evaluated on the twice-refined grid."""
    fine = zero_pad(u.values)
    return float(u.grid.cell_volume / 2 ** u.grid.dim * np.sum(fn(fine)))


def dealiased_apply(u: Field, fn) -> Field:
    """Coarse-grid field whose pairing with v is d/de of dealiased_sum(u + e v)."""
    return u.like(spectral_truncate(fn(zero_pad(u.values))))


def shift(u: Field, offsets) -> Field:
    """Periodic translation by whole grid cells."""
    return u.like(np.roll(u.values, tuple(offsets), axis=tuple(range(u.grid.dim))))


def _reflect(v: np.ndarray, ax: int) -> np.ndarray:
    # index j <-> (n - j) mod n realises x -> -x on the grid
    return np.roll(np.flip(v, axis=ax), 1, axis=ax)


def symmetrize(u: Field) -> Field:
    """Average over the grid's symmetry group (axis reflections and permutations)."""
    v = u.values
    dim = u.grid.dim
    acc = np.zeros_like(v)
    count = 0
    for perm in itertools.permutations(range(dim)):
        w = np.transpose(v, perm)
        for flips in itertools.product((False, True), repeat=dim):
            x = w
            for ax, fl in enumerate(flips):
                if fl:
                    x = _reflect(x, ax)
            acc += x
            count += 1
    return u.like(acc / count)


def radial_asymmetry(u: Field) -> float:
    """Relative L2 distance between u and its symmetrization."""
    nrm = np.linalg.norm(u.values)
    if nrm == 0:
        return 0.0
    return float(np.linalg.norm(u.values - symmetrize(u).values) / nrm)


# Radial reduction in three dimensions: a radial function u(|x|) is carried on
# a line grid as the even profile u(x); g(x) = x u(|x|) is odd and its 1-D
# seminorm equals the 3-D one divided by 2 pi.

def radial_dnorm_sq_3d(profile: Field, s: float) -> float:
    """3-D seminorm of the radial function whose even profile lives on a line grid."""
    if profile.grid.dim != 1:
        raise InvalidFieldError("radial profiles live on a one-dimensional grid")
    g = profile.like(profile.grid.axis * profile.values)
    return 2 * np.pi * dnorm_sq(g, s)


def radial_lp_power_3d(profile: Field, p: float) -> float:
    """3-D integral of |u|^p for the radial function with the given profile."""
    if profile.grid.dim != 1:
        raise InvalidFieldError("radial profiles live on a one-dimensional grid")
    x = profile.grid.axis
    return float(2 * np.pi * profile.grid.spacing * np.sum(x * x * np.abs(profile.values) ** p))
