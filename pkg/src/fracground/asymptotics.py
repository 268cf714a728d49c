"""Truncated extremals and the mountain-pass upper bound built from them.

For v = phi_0(|x|) u_delta / ||phi_0 u_delta||_{2*} the energy of the dilation
v(x/t) is bounded above by the one-dimensional function

    g(t) = 1/2 t^{N-2s} a - t^N/2* + m/2 t^N b - lam/q t^N c_q,

with a = ||v||_D^2, b = ||v||_2^2 and c_q = ||v||_q^q.  Its maximum is the
upper bound for the mountain-pass level, compared against the critical
threshold (s/N) S_F^{N/(2s)}.
"""

from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .constants import fourier_sharp_constant, sharp_constants, threshold_from_constant
from .errors import ParameterError, RegimeError, ResolutionError
from .model import ModelParams, same_boundary
from .spectral import (Field, Grid, dnorm_sq, lp_power, radial_dnorm_sq_3d,
                       radial_lp_power_3d)


def cutoff_phi0(r):
    """Smooth cutoff: 1 on [0, 1], 0 on [2, inf), C-infinity in between."""
    r = np.asarray(r, dtype=float)

    def psi(z):
        out = np.zeros_like(z)
        pos = z > 0
        out[pos] = np.exp(-1.0 / z[pos])
        return out

    a = psi(2.0 - r)
    b = psi(r - 1.0)
    return a / (a + b)


def default_extremal_grid(N: int, delta: float, cells_per_delta: float = 4.0,
                          max_spacing: float = 0.01) -> tuple:
    """Grid used for v_delta norms: returns (grid, radial flag).

    N = 1 uses a wide box, since the periodic seminorm of a positive bump is
    off by about (pi/L)^{N+2s}|v_hat(0)|^2.  N = 3 uses the radial line
    reduction, for which the odd profile x v(|x|) has no zero mode and a
    short box suffices.  N = 2 uses a Cartesian box of half-width 8.
    """
    h = min(delta / cells_per_delta, max_spacing)
    if N == 1:
        return Grid.with_spacing(1, 40.0, h), False
    if N == 3:
        return Grid.with_spacing(1, 3.0, h), True
    if N == 2:
        return Grid.with_spacing(2, 8.0, max(h, 16.0 / 2048)), False
    raise ParameterError(f"unsupported dimension {N}")


@dataclass(frozen=True, eq=False)
class TruncatedExtremal:
    """phi_0(|x|) u_delta normalized to unit L^{2*} norm.

    When ``radial`` is set the trace is the even profile on a line grid of a
    radial function in N = 3; norms use the radial reduction.
    """

    delta: float
    s: float
    N: int
    trace: Field
    radial: bool = False
    cutoff_radius: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False)

    def lp_power(self, p: float) -> float:
        key = ("lp", float(p))
        if key not in self._cache:
            if self.radial:
                self._cache[key] = radial_lp_power_3d(self.trace, p)
            else:
                self._cache[key] = lp_power(self.trace, p)
        return self._cache[key]

    @property
    def seminorm_sq(self) -> float:
        if "a" not in self._cache:
            if self.radial:
                self._cache["a"] = radial_dnorm_sq_3d(self.trace, self.s)
            else:
                self._cache["a"] = dnorm_sq(self.trace, self.s)
        return self._cache["a"]

    @property
    def l2_sq(self) -> float:
        return self.lp_power(2.0)

    @property
    def two_star(self) -> float:
        return 2 * self.N / (self.N - 2 * self.s)


def truncated_extremal(s: float, N: int, delta: float, grid: Grid | None = None,
                       radial: bool | None = None) -> TruncatedExtremal:
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    if not N > 2 * s:
        raise ParameterError(f"need N > 2s, got N={N}, s={s}")
    if grid is None:
        grid, radial = default_extremal_grid(N, delta)
    elif radial is None:
        radial = grid.dim == 1 and N == 3
    if grid.L <= 2.0:
        raise ParameterError("the box must contain the cutoff support |x| <= 2")
    r = np.abs(grid.axis) if radial else grid.radius()
    e = (N - 2 * s) / 2
    raw = cutoff_phi0(r) * delta ** e * (r * r + delta * delta) ** (-e)
    ts = 2 * N / (N - 2 * s)
    if radial:
        norm = radial_lp_power_3d(Field(grid, raw), ts) ** (1 / ts)
    else:
        norm = lp_power(Field(grid, raw), ts) ** (1 / ts)
    return TruncatedExtremal(delta=delta, s=s, N=N, trace=Field(grid, raw / norm), radial=radial)


@functools.lru_cache(maxsize=32)
def _cached_extremal(s, N, delta):
    return truncated_extremal(s, N, delta)


def _g_coefficients(v: TruncatedExtremal, params: ModelParams) -> tuple:
    if abs(v.s - params.s) > 1e-15 or v.N != params.N:
        raise ParameterError("extremal and model parameters disagree on (s, N)")
    a = v.seminorm_sq
    beta = (-1.0 / params.two_star + 0.5 * params.m * v.l2_sq
            - params.lam / params.q * v.lp_power(params.q))
    return a, beta


def reduced_g(t: float, v: TruncatedExtremal, params: ModelParams) -> float:
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")
    a, beta = _g_coefficients(v, params)
    N, s = params.N, params.s
    return 0.5 * t ** (N - 2 * s) * a + beta * t ** N


def closed_form_t_delta(v: TruncatedExtremal, params: ModelParams) -> float:
    """Critical point of g written as in the balance of its two power terms."""
    N, s, m = params.N, params.s, params.m
    a = v.seminorm_sq
    den = ((N - 2 * s) / 2 - m * N / 2 * v.l2_sq
           + params.lam * N / params.q * v.lp_power(params.q)) ** (1 / (2 * s))
    # The unit L^{2*} normalization makes the middle term  (N-2s)/2 = N/2*.
    return ((N - 2 * s) / 2) ** (1 / (2 * s)) * a ** (1 / (2 * s)) / den


def maximize_g(v: TruncatedExtremal, params: ModelParams, tol: float = 1e-14,
               max_iter: int = 100) -> tuple:
    """Maximizer of g by safeguarded Newton on G(tau) = t^{1-N} g'(t), t = e^tau.

    G(tau) = (N-2s)/2 a e^{-2 s tau} + N beta is strictly decreasing and convex,
    so Newton from the left of the root converges monotonically; a bracket
    guards the steps.
    """
    a, beta = _g_coefficients(v, params)
    if not beta < 0:
        raise RegimeError(f"t^N coefficient {beta:.4g} is not negative: g has no maximum")
    N, s = params.N, params.s
    A = 0.5 * (N - 2 * s) * a

    def G(tau):
        return A * math.exp(-2 * s * tau) + N * beta

    def dG(tau):
        return -2 * s * A * math.exp(-2 * s * tau)

    lo, hi = -1.0, 1.0
    while G(lo) <= 0:
        lo *= 2
    while G(hi) >= 0:
        hi *= 2
    tau = lo
    for _ in range(max_iter):
        step = G(tau) / dG(tau)
        new = tau - step
        if not lo <= new <= hi:
            new = 0.5 * (lo + hi)
        if G(new) > 0:
            lo = new
        else:
            hi = new
        if abs(new - tau) < tol * max(1.0, abs(tau)):
            tau = new
            break
        tau = new
    t = math.exp(tau)
    return t, 0.5 * t ** (N - 2 * s) * a + beta * t ** N


def h_peak_location(v: TruncatedExtremal) -> tuple:
    """(calculus maximizer a^{1/(2s)}, displayed form ||v||_D^{1/s}); equal for unit L^{2*} norm."""
    a = v.seminorm_sq
    return a ** (1 / (2 * v.s)), math.sqrt(a) ** (1 / v.s)


def h_peak(v: TruncatedExtremal, params: ModelParams | None = None) -> float:
    """max_t of 1/2 t^{N-2s} a - t^N/2*, which equals (s/N) a^{N/(2s)}."""
    a = v.seminorm_sq
    t, _ = h_peak_location(v)
    N, s = v.N, v.s
    return 0.5 * t ** (N - 2 * s) * a - t ** N / v.two_star


def threshold_for(s: float, N: int) -> float:
    return sharp_constants(s, N).threshold


def cm_upper_bound(params: ModelParams, delta: float, v: TruncatedExtremal | None = None
                   ) -> tuple:
    """(max_t g(t), bound < critical threshold)."""
    if v is None:
        v = _cached_extremal(params.s, params.N, float(delta))
    _, value = maximize_g(v, params)
    return value, bool(value < threshold_for(params.s, params.N))


@dataclass(frozen=True)
class LadderBound:
    delta: float
    bound: float          # inf where g has no interior maximum
    below_threshold: bool


def bound_ladder(params: ModelParams, deltas) -> list:
    out = []
    for d in deltas:
        try:
            b, below = cm_upper_bound(params, float(d))
        except RegimeError:
            b, below = math.inf, False
        out.append(LadderBound(float(d), b, below))
    return out


@dataclass(frozen=True)
class LambdaStar:
    lam_star: float
    delta: float
    bound: float
    threshold: float
    iterations: int
    bracket: tuple


def bisect_lambda(params: ModelParams, deltas, rtol: float = 1e-4, lam_max: float = 1e12
                  ) -> LambdaStar:
    """Smallest lambda for which some delta on the ladder puts the bound below threshold.

    The bound is non-increasing in lambda at fixed delta, so the minimum over
    the ladder is too and bisection in log lambda applies.
    """
    thr = threshold_for(params.s, params.N)

    def best(lam):
        rows = bound_ladder(params.with_lambda(lam), deltas)
        r = min(rows, key=lambda r: r.bound)
        return r

    hi = params.lam
    while best(hi).bound >= thr:
        hi *= 4
        if hi > lam_max:
            raise RegimeError("no lambda below lam_max brings the bound under the threshold")
    lo = hi / 4
    while best(lo).bound < thr and lo > 1e-12:
        hi = lo
        lo /= 4
    it = 0
    while hi / lo - 1 > rtol:
        mid = math.sqrt(lo * hi)
        if best(mid).bound < thr:
            hi = mid
        else:
            lo = mid
        it += 1
    r = best(hi)
    return LambdaStar(lam_star=hi, delta=r.delta, bound=r.bound, threshold=thr,
                      iterations=it, bracket=(lo, hi))


# Scaling laws ---------------------------------------------------------------

def predicted_lp_exponent(p: float, s: float, N: int) -> tuple:
    """Exponent of ||v_delta||_p^p in delta and whether a |log delta| factor appears."""
    crit = N / (N - 2 * s)
    if same_boundary(p, crit):
        return N / 2, True
    if p > crit:
        return (2 * N - (N - 2 * s) * p) / 2, False
    return (N - 2 * s) * p / 2, False


@dataclass(frozen=True)
class ScalingFit:
    exponent_measured: float
    exponent_predicted: float
    log_flag: bool
    r_squared: float
    deltas: tuple = ()
    values: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def relative_error(self) -> float:
        return abs(self.exponent_measured / self.exponent_predicted - 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["relative_error"] = self.relative_error
        return d


def fit_power_law(deltas, values, log_flag: bool = False, correction: float | None = None
                  ) -> tuple:
    """Fit log y = log C + alpha log delta (+ log(|log delta| + beta)); returns (alpha, r2, extra).

    ``correction`` adds a subleading factor (1 + B delta^correction) with a known
    exponent gap, for ladders where the two competing powers are close.
    """
    d = np.asarray(deltas, dtype=float)
    y = np.asarray(values, dtype=float)
    order = np.argsort(d)
    d, y = d[order], y[order]
    if np.any(y <= 0):
        raise ResolutionError("non-positive values cannot be fitted on a log scale")
    ld, ly = np.log(d), np.log(y)
    if log_flag:
        def model(x, lc, al, be):
            return lc + al * x + np.log(np.abs(x) + be)

        start = np.polyfit(ld, ly - np.log(np.abs(ld)), 1)
        p, _ = curve_fit(model, ld, ly, p0=[start[1], start[0], 0.0],
                         bounds=([-np.inf, -np.inf, -np.abs(ld).min() + 1e-6], np.inf))
        pred = model(ld, *p)
        alpha = float(p[1])
        extra = {"log_offset": float(p[2])}
    elif correction is not None:
        def model(x, lc, al, B):
            return lc + al * x + np.log(np.maximum(1 + B * np.exp(correction * x), 1e-300))

        start = np.polyfit(ld, ly, 1)
        p, _ = curve_fit(model, ld, ly, p0=[start[1], start[0], 0.0])
        pred = model(ld, *p)
        alpha = float(p[1])
        extra = {"correction_exponent": float(correction), "correction_coefficient": float(p[2])}
    else:
        A = np.vstack([ld, np.ones_like(ld)]).T
        coef = np.linalg.lstsq(A, ly, rcond=None)[0]
        pred = A @ coef
        alpha = float(coef[0])
        extra = {}
    ss = np.sum((ly - ly.mean()) ** 2)
    r2 = float(1 - np.sum((ly - pred) ** 2) / ss) if ss > 0 else 0.0
    return alpha, r2, extra


def complementary_exponent(p: float, s: float, N: int) -> float | None:
    """Gap between the leading and the competing power in ||v_delta||_p^p.

    The core |x| < delta contributes delta^{N-(N-2s)p/2} and the region
    delta < |x| < 2 contributes delta^{(N-2s)p/2}; the smaller one leads.
    """
    crit = N / (N - 2 * s)
    if same_boundary(p, crit):
        return None
    core = N - (N - 2 * s) * p / 2
    tail = (N - 2 * s) * p / 2
    return abs(core - tail)


def _check_ladder(deltas):
    d = np.asarray(deltas, dtype=float)
    if len(d) < 3 or d.max() / d.min() < 10 * (1 - 1e-12):
        raise ParameterError("the delta ladder must have >= 3 points spanning a decade")


def lp_scaling_study(p: float, deltas, s: float, N: int, grid_factory=None,
                     min_r2: float = 0.98, correct: bool = False) -> ScalingFit:
    """Measured delta-exponent of ||v_delta||_p^p against the three-case prediction.

    ``correct`` fits the competing power as well (see ``complementary_exponent``).
    """
    _check_ladder(deltas)
    ts = 2 * N / (N - 2 * s)
    if not 2 <= p < ts:
        raise ParameterError(f"p must lie in [2, 2*) = [2, {ts:.4g})")
    pred, log_flag = predicted_lp_exponent(p, s, N)
    vals = []
    for d in deltas:
        v = _extremal_on(grid_factory, s, N, float(d))
        vals.append(v.lp_power(p))
    corr = complementary_exponent(p, s, N) if correct and not log_flag else None
    alpha, r2, extra = fit_power_law(deltas, vals, log_flag, corr)
    fit = ScalingFit(alpha, pred, log_flag, r2, tuple(map(float, deltas)), tuple(vals), extra)
    if r2 < min_r2:
        raise ResolutionError(f"poor power-law fit r^2 = {r2:.4f}")
    return fit


def seminorm_gap_study(deltas, s: float, N: int, grid_factory=None, S_F: float | None = None,
                       min_r2: float = 0.98) -> ScalingFit:
    """Fit ||v_delta||_D^2 - S_F against delta; predicted exponent N - 2s."""
    _check_ladder(deltas)
    if S_F is None:
        S_F = fourier_sharp_constant(s, N)
    vals = [_extremal_on(grid_factory, s, N, float(d)).seminorm_sq - S_F for d in deltas]
    alpha, r2, extra = fit_power_law(deltas, vals)
    fit = ScalingFit(alpha, N - 2 * s, False, r2, tuple(map(float, deltas)), tuple(vals),
                     {"S_F": S_F})
    if r2 < min_r2:
        raise ResolutionError(f"poor power-law fit r^2 = {r2:.4f}")
    return fit


def _extremal_on(grid_factory, s, N, d):
    if grid_factory is None:
        return _cached_extremal(s, N, d)
    grid, radial = grid_factory(N, d)
    return truncated_extremal(s, N, d, grid=grid, radial=radial)


# Case table ---------------------------------------------------------------

CASE_LABELS = ("i", "ii", "iii", "iv", "v")


def exponent_case(s: float, N: int, q: float) -> str:
    """Which of the five exponent-comparison cases (N, s, q) falls in."""
    if same_boundary(N, 4 * s):
        return "ii"
    if N > 4 * s:
        return "i"
    if not N > 2 * s:
        raise ParameterError("need N > 2s")
    crit = N / (N - 2 * s)
    if same_boundary(q, crit):
        return "iv"
    return "iii" if q > crit else "v"


def lambda_schedule_exponent(s: float, N: int, q: float, margin: float = 0.25) -> float:
    """theta for lambda = delta^{-theta} that makes the bound drop below threshold.

    Zero when a fixed lambda already suffices; otherwise the lower limit of the
    admissible theta-range plus ``margin``.
    """
    case = exponent_case(s, N, q)
    if case in ("i", "ii"):
        return 0.0
    if case == "iii":
        low = 4 * s / (N - 2 * s)
        if q > low and not same_boundary(q, low):
            return 0.0
        return (2 * N - (q + 2) * (N - 2 * s)) / 2 + margin
    if case == "iv":
        return 2 * s - N / 2 + margin
    return (q - 2) * (N - 2 * s) / 2 + margin


def case_exponents(s: float, N: int, q: float) -> dict:
    """Exponents of the competing correction terms in the bound."""
    e_q, log_q = predicted_lp_exponent(q, s, N)
    e_2, log_2 = predicted_lp_exponent(2.0, s, N)
    return {"seminorm_gap": N - 2 * s, "l2": e_2, "l2_log": log_2, "lq": e_q, "lq_log": log_q}


def threshold_gap_exponents(s: float, N: int, q: float) -> dict:
    """(positive corrections, negative lambda term) exponents and the ordering verdict."""
    ex = case_exponents(s, N, q)
    positive = min(ex["seminorm_gap"], ex["l2"])
    return {**ex, "positive_min": positive, "lambda_term": ex["lq"],
            "lambda_term_dominates": ex["lq"] < positive}
