"""Sharp Sobolev constants, the extremal bubble and the critical energy level.

Three normalizations meet here:

* ``sobolev_constant_formula`` is the Gamma-function constant S(s, N) of the
  weighted extension energy  integral of y^{1-2s}|grad w|^2.
* ``extension_constant`` is k_s, chosen so that k_s times that extension energy
  equals the Fourier seminorm of the trace.
* ``S_F`` is the sharp constant of the Fourier seminorm, measured as the
  Richardson-extrapolated Sobolev quotient of the bubble u_delta and compared
  against the closed form.  The threshold (s/N) S_F^{N/(2s)} uses S_F.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CalibrationError, DomainError, ParameterError
from .spectral import (Field, Grid, check_order, dnorm_sq, lp_norm,
                       radial_dnorm_sq_3d, radial_lp_power_3d)


def _check_pair(s: float, N: int) -> None:
    check_order(s)
    if N < 1 or int(N) != N:
        raise ParameterError(f"dimension must be a positive integer, got {N}")
    if not N > 2 * s:
        raise DomainError(f"N={N} <= 2s={2 * s}: Gamma((N-2s)/2) has a pole")


def sobolev_constant_formula(s: float, N: int) -> float:
    """S(s, N) = 2 pi^s G(1-s) G((N+2s)/2) G(N/2)^{2s/N} / (G(s) G((N-2s)/2) G(N)^{2s/N})."""
    _check_pair(s, N)
    lg = math.lgamma
    log_s = (math.log(2.0) + s * math.log(math.pi) + lg(1 - s) + lg((N + 2 * s) / 2)
             - lg(s) - lg((N - 2 * s) / 2) + (2 * s / N) * (lg(N / 2) - lg(N)))
    return math.exp(log_s)


def sobolev_constant_product_form(s: float, N: int) -> float:
    """Same constant multiplied out directly with math.gamma."""
    _check_pair(s, N)
    g = math.gamma
    ratio = (g(N / 2) / g(N)) ** (2 * s / N)
    return 2 * math.pi ** s * g((N + 2 * s) / 2) / g((N - 2 * s) / 2) * g(1 - s) / g(s) * ratio


def fourier_sharp_constant(s: float, N: int) -> float:
    """Closed-form sharp constant of ||u||_D^2 >= S_F ||u||_{2*}^2 (Fourier convention)."""
    _check_pair(s, N)
    lg = math.lgamma
    return math.exp(2 * s * math.log(2.0) + s * math.log(math.pi) + lg((N + 2 * s) / 2)
                    - lg((N - 2 * s) / 2) + (2 * s / N) * (lg(N / 2) - lg(N)))


def neumann_constant(s: float) -> float:
    """kappa_s with  -lim y^{1-2s} d_y w = kappa_s (-Delta)^s u  for the s-harmonic extension."""
    check_order(s)
    return 2 ** (1 - 2 * s) * math.gamma(1 - s) / math.gamma(s)


def extension_constant(s: float, verify: bool = False, tol: float = 0.02) -> float:
    """k_s = 2^{2s-1} G(s) / G(1-s), so that (-Delta)^s u = -k_s lim y^{1-2s} d_y w.

    With ``verify`` the value is checked against a Gaussian Neumann-trace
    measurement and CalibrationError is raised on a mismatch above ``tol``.
    """
    check_order(s)
    k = 1.0 / neumann_constant(s)
    if verify:
        measured = measure_extension_constant(s)
        if abs(measured / k - 1) > tol:
            raise CalibrationError(
                f"k_s closed form {k:.6g} disagrees with Neumann trace {measured:.6g}",
                expected=k, measured=measured)
    return k


@functools.lru_cache(maxsize=32)
def measure_extension_constant(s: float, n: int = 512, L: float = 20.0) -> float:
    """Fit k in (-Delta)^s u = k * (measured lim -y^{1-2s} d_y w) for a Gaussian trace."""
    from . import extension  # local import: extension depends on this module

    grid = Grid(1, n, L)
    u = Field(grid, np.exp(-grid.axis ** 2))
    raw = extension.neumann_trace(u, s, k_s=1.0).values
    target = extension.fractional_laplacian(u, s).values
    return float(np.dot(target, raw) / np.dot(raw, raw))


def extremal_u_delta(grid: Grid, s: float, delta: float) -> Field:
    """u_delta(x) = delta^{(N-2s)/2} (|x|^2 + delta^2)^{-(N-2s)/2} sampled on the grid."""
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    _check_pair(s, grid.dim)
    e = (grid.dim - 2 * s) / 2
    return Field(grid, delta ** e * (grid.radius_sq() + delta ** 2) ** (-e))


def radial_u_delta_profile(line: Grid, s: float, delta: float, N: int = 3) -> Field:
    """Even line profile of the N-dimensional bubble (used with the radial reduction)."""
    _check_pair(s, N)
    e = (N - 2 * s) / 2
    return Field(line, delta ** e * (line.axis ** 2 + delta ** 2) ** (-e))


def sobolev_quotient(u: Field, s: float) -> float:
    """||u||_D^2 / ||u||_{2*}^2 on the grid."""
    N = u.grid.dim
    p = 2 * N / (N - 2 * s)
    return dnorm_sq(u, s) / lp_norm(u, p) ** 2


def radial_sobolev_quotient_3d(profile: Field, s: float) -> float:
    p = 6 / (3 - 2 * s)
    return radial_dnorm_sq_3d(profile, s) / radial_lp_power_3d(profile, p) ** (2 / p)


@dataclass(frozen=True)
class QuotientExtrapolation:
    """Bubble quotients on a half-width ladder and their L -> infinity limit.

    The box truncation error of the bubble quotient is a power series in
    y = (delta / L)^{N-2s}; a polynomial in y is fitted to the largest boxes.
    """

    s: float
    N: int
    delta: float
    half_widths: tuple
    quotients: tuple
    limit: float
    order: int
    spread: float     # |limit(order) - limit(order - 1)| / limit
    method: str

    def to_dict(self) -> dict:
        return asdict(self)


def _poly_limit(y, Q, order, points):
    A = np.vander(y[-points:], order + 1, increasing=True)
    coef = np.linalg.lstsq(A, Q[-points:], rcond=None)[0]
    return float(coef[0])


def extrapolate_bubble_quotient(s: float, N: int, delta: float = 1.0, *, spacing: float | None = None,
                                half_widths=None, order: int | None = None, method: str | None = None
                                ) -> QuotientExtrapolation:
    """Richardson extrapolation of the u_delta Sobolev quotient in the box size.

    ``method`` is ``"cartesian"`` (full N-D grid) or ``"radial"`` (3-D radial
    reduction on a line).  The default is Cartesian for N = 1, 2 and radial for
    N = 3, with the grid spacing fixed relative to delta along the ladder.
    """
    _check_pair(s, N)
    if method is None:
        method = "radial" if N == 3 else "cartesian"
    if method == "radial" and N != 3:
        raise ParameterError("the radial reduction is implemented for N = 3")
    if half_widths is None:
        if method == "radial":
            half_widths = [delta * 2.0 ** j for j in range(4, 15)]
        elif N == 1:
            half_widths = [delta * 2.0 ** j for j in range(4, 17)]
        else:
            half_widths = [delta * 2.0 ** j for j in range(1, 7 if N == 2 else 5)]
    if spacing is None:
        spacing = delta / {"radial": 8.0, 1: 4.0, 2: 2.0, 3: 2.0}[method if method == "radial" else N]
    if order is None:
        order = 3 if method == "radial" else 5
    Ls = np.asarray(half_widths, dtype=float)
    Q = []
    for L in Ls:
        grid = Grid.with_spacing(1 if method == "radial" else N, L, spacing)
        if method == "radial":
            Q.append(radial_sobolev_quotient_3d(radial_u_delta_profile(grid, s, delta), s))
        else:
            Q.append(sobolev_quotient(extremal_u_delta(grid, s, delta), s))
    Q = np.array(Q)
    y = (delta / Ls) ** (N - 2 * s)
    pts = min(len(Ls), order + 3)
    lim = _poly_limit(y, Q, order, pts)
    lower = _poly_limit(y, Q, order - 1, pts) if order > 1 else float(Q[-1])
    return QuotientExtrapolation(s=s, N=N, delta=delta, half_widths=tuple(Ls.tolist()),
                                 quotients=tuple(Q.tolist()), limit=lim, order=order,
                                 spread=abs(lim - lower) / abs(lim), method=method)


@dataclass(frozen=True)
class SharpConstants:
    s: float
    N: int
    S_ext: float
    k_s: float
    S_F: float
    threshold: float
    calibration_ratio: float          # S_F / (k_s S_ext)
    S_F_closed_form: float
    measurement: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("S_ext", "k_s", "S_F", "threshold"):
            if not getattr(self, name) > 0:
                raise CalibrationError(f"{name} must be positive, got {getattr(self, name)}")

    def to_dict(self) -> dict:
        return {"s": self.s, "N": self.N, "S_ext": self.S_ext, "k_s": self.k_s,
                "S_F": self.S_F, "threshold": self.threshold,
                "calibration_ratio": self.calibration_ratio,
                "S_F_closed_form": self.S_F_closed_form, "measurement": self.measurement}


def threshold_from_constant(S_F: float, s: float, N: int) -> float:
    return (s / N) * S_F ** (N / (2 * s))


def constant_from_threshold(threshold: float, s: float, N: int) -> float:
    return (threshold * N / s) ** (2 * s / N)


@functools.lru_cache(maxsize=64)
def sharp_constants(s: float, N: int, measured: bool = False, tol: float = 0.02) -> SharpConstants:
    """Assemble the constants for (s, N).

    With ``measured`` the Fourier constant is the extrapolated bubble quotient
    and must match the closed form within ``tol``; otherwise the closed form is
    used directly.
    """
    S_ext = sobolev_constant_formula(s, N)
    k = extension_constant(s)
    closed = fourier_sharp_constant(s, N)
    info = {}
    S_F = closed
    if measured:
        ext = extrapolate_bubble_quotient(s, N)
        S_F = ext.limit
        info = {"method": ext.method, "order": ext.order, "spread": ext.spread,
                "relative_to_closed_form": S_F / closed - 1}
        if abs(S_F / closed - 1) > tol:
            raise CalibrationError("extrapolated bubble quotient disagrees with closed form",
                                   expected=closed, measured=S_F)
    sc = SharpConstants(s=s, N=N, S_ext=S_ext, k_s=k, S_F=S_F,
                        threshold=threshold_from_constant(S_F, s, N),
                        calibration_ratio=S_F / (k * S_ext), S_F_closed_form=closed,
                        measurement=info)
    return sc


def critical_threshold(sc: SharpConstants) -> float:
    """(s/N) S_F^{N/(2s)}."""
    return threshold_from_constant(sc.S_F, sc.s, sc.N)
