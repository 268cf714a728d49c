"""Energy functional, gradient, Pohozaev functional and the nonlinearity family.

Everything works on the triple (a, b, c) = (||u||_D^2, ||u||_2^2, integral F(u)):

    E = a/2 + m b/2 - c
    P = (N-2s)/2 a + m N/2 b - N c
    E - P/N = (s/N) a

The potential is a box sum on the twice-refined grid, and ``gradient`` is the
exact derivative of that discrete energy.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import AmplitudeError, ParameterError
from .spectral import (Field, check_order, dealiased_apply, dealiased_sum, dnorm_sq,
                       fractional_laplacian, lp_power)


def same_boundary(x: float, b: float, rtol: float = 1e-12) -> bool:
    """Exponent comparisons treat values within round-off of a boundary as on it.

    2N/(N-2s) and 4s/(N-2s) are rarely exact in floating point (s = 0.3 gives
    4s/(N-2s) = 2.9999999999999996 for N = 1).
    """
    return abs(x - b) <= rtol * max(1.0, abs(b))


@dataclass(frozen=True)
class ModelParams:
    m: float
    s: float
    N: int
    lam: float
    q: float

    def __post_init__(self):
        check_order(self.s)
        if not self.N > 2 * self.s:
            raise ParameterError(f"need N > 2s, got N={self.N}, s={self.s}")
        if not self.m > 0:
            raise ParameterError(f"mass m must be positive, got {self.m}")
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")
        if not (2 < self.q < self.two_star) or same_boundary(self.q, self.two_star):
            raise ParameterError(f"need 2 < q < 2* = {self.two_star:.6g}, got q={self.q}")

    @property
    def two_star(self) -> float:
        return 2 * self.N / (self.N - 2 * self.s)

    @property
    def low_dim_q_bound(self) -> float:
        """4s/(N-2s), the lower q-limit of the every-lambda range when N < 4s."""
        return 4 * self.s / (self.N - 2 * self.s)

    def with_lambda(self, lam: float) -> "ModelParams":
        return ModelParams(self.m, self.s, self.N, lam, self.q)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["two_star"] = self.two_star
        return d


@dataclass(frozen=True)
class Nonlinearity:
    """Scalar pair (f, F = primitive of f) with declared hypothesis flags."""

    f: Callable
    F: Callable
    name: str = "custom"
    df: Callable | None = None
    declared: dict = field(default_factory=dict)


def canonical_f(params: ModelParams) -> Nonlinearity:
    """f(t) = lam t^{q-1} + t^{2*-1} for t >= 0 and 0 otherwise, with its primitive."""
    lam, q, ts = params.lam, params.q, params.two_star

    def f(t):
        tp = np.maximum(t, 0.0)
        return lam * tp ** (q - 1) + tp ** (ts - 1)

    def F(t):
        tp = np.maximum(t, 0.0)
        return lam * tp ** q / q + tp ** ts / ts

    def df(t):
        tp = np.maximum(t, 0.0)
        return lam * (q - 1) * tp ** (q - 2) + (ts - 1) * tp ** (ts - 2)

    return Nonlinearity(f=f, F=F, df=df, name="canonical",
                        declared={"f1": True, "f2": True, "f3": True})


@dataclass(frozen=True)
class HypothesisVerdict:
    name: str
    passed: bool
    worst_t: float
    worst_value: float
    detail: str


@dataclass(frozen=True)
class HypothesisReport:
    f1: HypothesisVerdict
    f2: HypothesisVerdict
    f3: HypothesisVerdict

    @property
    def all_passed(self) -> bool:
        return self.f1.passed and self.f2.passed and self.f3.passed

    def to_dict(self) -> dict:
        return {"f1": asdict(self.f1), "f2": asdict(self.f2), "f3": asdict(self.f3),
                "all_passed": self.all_passed}


def _vanishing_verdict(name, t, ratio, detail):
    """Ratio sequence ordered toward the limit; passes if it decays like a power."""
    ratio = np.abs(np.asarray(ratio, dtype=float))
    eps = np.finfo(float).eps
    # Values within round-off of the limit count as having reached it.
    settled = ratio <= eps
    step = np.diff(ratio)
    decreasing = bool(np.all((step < 0) | (settled[1:] & settled[:-1])))
    if settled[-1]:
        slope = np.inf
    else:
        slope = abs(np.polyfit(np.log(np.abs(t[-3:])), np.log(ratio[-3:]), 1)[0]) \
            if np.all(ratio[-3:] > 0) else 0.0
    passed = bool(np.all(np.isfinite(ratio))) and decreasing and slope >= 1e-2
    i = int(np.argmax(ratio[-3:])) + len(ratio) - 3
    return HypothesisVerdict(name, passed, float(t[i]), float(ratio[i]),
                             f"{detail}; monotone={decreasing}, decay rate={slope:.3g}")


def validate_hypotheses(nl: Nonlinearity, params: ModelParams, *, dense: int = 2001
                        ) -> HypothesisReport:
    """Numerical verdicts for the three growth hypotheses.

    (f1) f(t)/t -> 0 as t -> 0: strictly decreasing along t = 1e-1 .. 1e-6 with a
         nonzero power-law decay rate.
    (f2) f(t)/t^{2*-1} -> 1 as t -> infinity: |ratio - 1| decreasing along
         t = 1e1 .. 1e6, again with a nonzero decay rate.
    (f3) f(t) >= lam t^{q-1} + t^{2*-1} on a dense log sample.
    """
    ts = params.two_star
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        small = 10.0 ** -np.arange(1, 7)
        r1 = np.asarray(nl.f(small), dtype=float) / small
        v1 = _vanishing_verdict("f1", small, r1, "f(t)/t on t=1e-1..1e-6")
        large = 10.0 ** np.arange(1, 7)
        r2 = np.asarray(nl.f(large), dtype=float) / large ** (ts - 1) - 1.0
        v2 = _vanishing_verdict("f2", large, r2, "|f(t)/t^(2*-1) - 1| on t=1e1..1e6")
        t = np.logspace(-6, 6, dense)
        lower = params.lam * t ** (params.q - 1) + t ** (ts - 1)
        gap = (np.asarray(nl.f(t), dtype=float) - lower) / lower
    i = int(np.argmin(gap))
    ok = bool(np.all(np.isfinite(gap)) and gap[i] >= -1e-12)
    v3 = HypothesisVerdict("f3", ok, float(t[i]), float(gap[i]),
                           "min relative margin of f(t) over lam t^(q-1) + t^(2*-1)")
    return HypothesisReport(v1, v2, v3)


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    mass_term: float
    potential: float
    total: float
    pohozaev: float

    @property
    def seminorm_sq(self) -> float:
        return 2 * self.kinetic

    def to_dict(self) -> dict:
        return asdict(self)


def energy_triple(u: Field, params: ModelParams, nl: Nonlinearity) -> tuple:
    """(||u||_D^2, ||u||_2^2, dealiased integral of F(u))."""
    a = dnorm_sq(u, params.s)
    b = lp_power(u, 2.0)
    with np.errstate(over="raise", invalid="raise"):
        try:
            c = dealiased_sum(u, nl.F)
        except FloatingPointError as exc:
            raise AmplitudeError(f"primitive overflowed at max |u| = {np.abs(u.values).max():.3g}") from exc
    if not math.isfinite(c):
        raise AmplitudeError("primitive integral is not finite")
    return a, b, c


def breakdown_from_triple(triple, params: ModelParams) -> EnergyBreakdown:
    a, b, c = triple
    N, s, m = params.N, params.s, params.m
    kinetic = 0.5 * a
    mass = 0.5 * m * b
    return EnergyBreakdown(kinetic=kinetic, mass_term=mass, potential=c,
                           total=kinetic + mass - c,
                           pohozaev=0.5 * (N - 2 * s) * a + 0.5 * m * N * b - N * c)


def energy(u: Field, params: ModelParams, nl: Nonlinearity) -> EnergyBreakdown:
    return breakdown_from_triple(energy_triple(u, params, nl), params)


def gradient(u: Field, params: ModelParams, nl: Nonlinearity) -> Field:
    """L2 gradient (-Delta)^s u + m u - f(u) of the discrete energy."""
    with np.errstate(over="raise", invalid="raise"):
        try:
            fu = dealiased_apply(u, nl.f)
        except FloatingPointError as exc:
            raise AmplitudeError("nonlinearity overflowed") from exc
    return fractional_laplacian(u, params.s) + params.m * u - fu


def pohozaev(u: Field, params: ModelParams, nl: Nonlinearity) -> float:
    return energy(u, params, nl).pohozaev


def dilated_triple(triple, t: float, params: ModelParams) -> tuple:
    """Triple of u(x/t) from the triple of u: (t^{N-2s} a, t^N b, t^N c)."""
    a, b, c = triple
    N, s = params.N, params.s
    return t ** (N - 2 * s) * a, t ** N * b, t ** N * c


def scaled_energy_from_triple(theta: float, triple, params: ModelParams) -> float:
    a, b, c = triple
    N, s, m = params.N, params.s, params.m
    return 0.5 * math.exp((N - 2 * s) * theta) * a + math.exp(N * theta) * (0.5 * m * b - c)


def scaled_energy(theta: float, u: Field, params: ModelParams, nl: Nonlinearity) -> float:
    """Energy of u(x e^{-theta}) from the closed form; no resampling."""
    return scaled_energy_from_triple(theta, energy_triple(u, params, nl), params)


def growth_constant(params: ModelParams, nl: Nonlinearity, delta: float) -> float:
    """Smallest C with F(t) <= delta t^2 + C t^{2*} for all t >= 0.

    C = sup_t (F(t) - delta t^2)/t^{2*}: a dense log scan locates the maximum,
    which is then polished by a bounded scalar search in log t.  The limit
    1/2* as t -> infinity is included.
    """
    ts = params.two_star

    def ratio(logt):
        t = math.exp(logt)
        return (float(nl.F(t)) - delta * t * t) / t ** ts

    grid = np.linspace(-20, 20, 4001)
    with np.errstate(over="ignore"):
        vals = np.array([ratio(g) for g in grid])
    i = int(np.nanargmax(vals))
    best = vals[i]
    if 0 < i < len(grid) - 1:
        res = minimize_scalar(lambda z: -ratio(z), bounds=(grid[i - 1], grid[i + 1]),
                              method="bounded", options={"xatol": 1e-12})
        best = max(best, -res.fun)
    limit = float(nl.F(1e12)) / 1e12 ** ts if math.isfinite(float(nl.F(1e12))) else 1.0 / ts
    return float(max(best, limit, 0.0))
