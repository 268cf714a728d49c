"""Ground-state computation and mountain-pass geometry witnesses.

The solve has two phases:

1. Descent on the reduced energy J(u) = (s/N) t*(u)^{N-2s} ||u||_D^2, the
   energy of u after dilation onto the Pohozaev manifold.  Steps are
   preconditioned by (|xi|^{2s} + m)^{-1}, projected onto u >= 0 and followed by
   an explicit dilation back onto the manifold, since J itself is invariant
   under dilations and would otherwise drift.
2. Petviashvili refinement u <- M^gamma (|xi|^{2s} + m)^{-1} f(u) with the
   stabilizing factor M = <Lu, u> / <f(u), u>.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.fft as sfft

from .constants import sharp_constants
from .errors import GeometryError, InfeasibleError, ParameterError, RegimeError
from .model import (ModelParams, Nonlinearity, breakdown_from_triple, canonical_f,
                    dilated_triple, energy, energy_triple, gradient,
                    scaled_energy_from_triple)
from .spectral import (Field, Grid, dealiased_apply, dilate, fractional_symbol,
                       radial_asymmetry)

INIT_KINDS = ("gaussian_bump", "extremal", "wedge", "custom")


@dataclass(frozen=True)
class SolveConfig:
    params: ModelParams
    grid: Grid
    init: str = "extremal"
    init_args: dict = field(default_factory=dict)
    max_iters: int = 2000
    grad_tol: float = 1e-6
    pohozaev_tol: float = 1e-3
    step_rule: str = "backtracking"
    descent_iters: int = 100
    descent_tol: float = 1e-9
    petviashvili_gamma: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.init not in INIT_KINDS:
            raise ParameterError(f"init must be one of {INIT_KINDS}, got {self.init!r}")
        if not (self.grad_tol > 0 and self.pohozaev_tol > 0):
            raise ParameterError("tolerances must be positive")
        if self.max_iters < 1:
            raise ParameterError("max_iters must be at least 1")
        if self.step_rule != "backtracking":
            raise ParameterError(f"unknown step rule {self.step_rule!r}")
        if self.params.N != self.grid.dim:
            raise ParameterError("grid dimension differs from N")

    def to_dict(self) -> dict:
        args = {k: v for k, v in self.init_args.items() if k != "values"}
        if "values" in self.init_args:
            args["values"] = "<custom field>"
        return {"params": self.params.to_dict(), "grid": self.grid.to_dict(), "init": self.init,
                "init_args": args, "max_iters": self.max_iters, "grad_tol": self.grad_tol,
                "pohozaev_tol": self.pohozaev_tol, "step_rule": self.step_rule,
                "descent_iters": self.descent_iters, "descent_tol": self.descent_tol,
                "petviashvili_gamma": self.petviashvili_gamma, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "SolveConfig":
        p = dict(d["params"])
        p.pop("two_star", None)
        params = ModelParams(m=float(p.get("m", 1.0)), s=float(p["s"]), N=int(p["N"]),
                             lam=float(p.get("lam", 1.0)), q=float(p["q"]))
        g = d["grid"]
        grid = Grid(int(g.get("dim", params.N)), int(g["n"]), float(g["L"]))
        keys = ("max_iters", "grad_tol", "pohozaev_tol", "step_rule", "descent_iters",
                "descent_tol", "petviashvili_gamma", "seed")
        extra = {k: d[k] for k in keys if k in d}
        return cls(params=params, grid=grid, init=d.get("init", "extremal"),
                   init_args=dict(d.get("init_args", {})), **extra)


@dataclass(frozen=True, eq=False)
class SolveReport:
    u_star: Field
    energy_level: float
    pohozaev_residual: float
    gradient_residual: float
    below_threshold: bool
    positivity_min: float
    radial_asymmetry: float
    iterations: int
    converged: bool
    dnorm_sq: float = 0.0
    threshold: float = 0.0
    t_star: float = 1.0
    level_defect: float = 0.0
    descent_iterations: int = 0
    petviashvili_iterations: int = 0
    petviashvili_gamma: float = 0.0
    reduced_energy_log: tuple = ()
    message: str = ""
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "u_star"}
        d["reduced_energy_log"] = list(self.reduced_energy_log)
        d["grid"] = self.u_star.grid.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# Geometry ------------------------------------------------------------------

def wedge_profile(R: float, T: float, grid: Grid) -> Field:
    """T on |x| <= R, linear decay to 0 at |x| = R + 1."""
    if not (R > 0 and T > 0):
        raise ParameterError("R and T must be positive")
    if R + 1 >= grid.L:
        raise GeometryError(f"wedge radius R + 1 = {R + 1} does not fit in half-width {grid.L}")
    return Field(grid, T * np.clip(R + 1 - grid.radius(), 0.0, 1.0))


def _path_terms(triple, params):
    a, b, c = triple
    return a, c - 0.5 * params.m * b


def _t_star_from_triple(triple, params) -> float:
    a, d = _path_terms(triple, params)
    if not (d > 0 and a > 0):
        raise InfeasibleError("integral F(u) <= (m/2)||u||_2^2: no dilation reaches P = 0")
    N, s = params.N, params.s
    return ((N - 2 * s) * a / (2 * N * d)) ** (1 / (2 * s))


def pohozaev_rescale(u: Field, params: ModelParams, nl: Nonlinearity) -> tuple:
    """(t*, u(x/t*)) with t* the root of t -> P(u(x/t))."""
    t = _t_star_from_triple(energy_triple(u, params, nl), params)
    return t, dilate(u, t)


def reduced_energy(u: Field, params: ModelParams, nl: Nonlinearity) -> float:
    """(s/N) t*^{N-2s} ||u||_D^2, the energy of u after the Pohozaev rescaling."""
    return _reduced_from_triple(energy_triple(u, params, nl), params)


def _reduced_from_triple(triple, params):
    t = _t_star_from_triple(triple, params)
    N, s = params.N, params.s
    return (s / N) * t ** (N - 2 * s) * triple[0]


def dilation_path_maximizer(u: Field, params: ModelParams, nl: Nonlinearity) -> float:
    """Maximizer of t -> E(u(x/t)); it coincides with the Pohozaev root t*."""
    try:
        return _t_star_from_triple(energy_triple(u, params, nl), params)
    except InfeasibleError as exc:
        raise RegimeError("the dilation path has no interior maximum") from exc


def dilation_path_level(u: Field, params: ModelParams, nl: Nonlinearity) -> float:
    """max_{t>0} of 1/2 t^{N-2s} a + t^N (m b/2 - c)."""
    if not np.any(u.values):
        raise ParameterError("the zero field has no dilation path")
    triple = energy_triple(u, params, nl)
    try:
        t = _t_star_from_triple(triple, params)
    except InfeasibleError as exc:
        raise RegimeError("the dilation path has no interior maximum") from exc
    return breakdown_from_triple(dilated_triple(triple, t, params), params).total


@dataclass(frozen=True)
class WedgeWitness:
    T: float
    R: float
    theta: float
    energy: float
    direct_energy: float | None
    plateau_value: float


def find_negative_wedge(params: ModelParams, nl: Nonlinearity, grid: Grid,
                        T_max: float = 1e3, theta_max: float = 10.0) -> WedgeWitness:
    """Scripted search for a point of negative energy: first T, then R, then theta.

    T0 is the first power of two with m T^2/2 - F(T) < 0.  R0 is grown in the
    box until the wedge's constant-part coefficient m b/2 - c turns negative,
    then theta is increased until the closed-form dilated energy is negative.
    """
    T = 0.5
    while 0.5 * params.m * T * T - float(nl.F(T)) >= 0:
        T *= 2
        if T > T_max:
            raise RegimeError("no plateau value with m T^2/2 < F(T)")
    plateau = 0.5 * params.m * T * T - float(nl.F(T))
    R = 1.0
    triple = None
    while R + 1 < grid.L:
        triple = energy_triple(wedge_profile(R, T, grid), params, nl)
        if 0.5 * params.m * triple[1] - triple[2] < 0:
            break
        R *= 1.5
    else:
        raise GeometryError("box too small to host a wedge with negative potential balance")
    theta = 0.0
    e = scaled_energy_from_triple(theta, triple, params)
    while e >= 0:
        theta += 0.25
        if theta > theta_max:
            raise RegimeError("dilation did not produce negative energy")
        e = scaled_energy_from_triple(theta, triple, params)
    direct = None
    t = math.exp(theta)
    if t * (R + 1) < grid.L:
        direct = energy(dilate(wedge_profile(R, T, grid), t), params, nl).total
    return WedgeWitness(T=T, R=R, theta=theta, energy=e, direct_energy=direct,
                        plateau_value=plateau)


def random_smooth_directions(grid: Grid, count: int, seed: int, length_scale: float = 1.0):
    """Deterministic random fields with Gaussian-filtered spectra and compact-ish support."""
    rng = np.random.default_rng(seed)
    filt = np.exp(-grid.xi_sq() * length_scale ** 2)
    env = np.exp(-grid.radius_sq() / (4 * length_scale ** 2))
    for _ in range(count):
        z = rng.standard_normal(grid.shape)
        v = np.real(sfft.ifftn(filt * sfft.fftn(z))) * env
        yield Field(grid, v)


def small_sphere_energies(params: ModelParams, nl: Nonlinearity, grid: Grid, radius: float,
                          count: int = 100, seed: int = 0) -> np.ndarray:
    """Energies of radius * phi for random phi with ||phi||_D^2 + m ||phi||_2^2 = 1."""
    out = []
    for phi in random_smooth_directions(grid, count, seed):
        a, b, _ = energy_triple(phi, params, nl)
        phi = phi * (radius / math.sqrt(a + params.m * b))
        out.append(energy(phi, params, nl).total)
    return np.array(out)


# Initialization ------------------------------------------------------------

def _initial_field(config: SolveConfig, nl: Nonlinearity) -> Field:
    g, p, args = config.grid, config.params, config.init_args
    if config.init == "custom":
        return Field(g, np.asarray(args["values"], dtype=float))
    if config.init == "wedge":
        base = wedge_profile(float(args.get("R", 1.0)), 1.0, g)
        default_amp = float(args.get("T", 0.0)) or None
    elif config.init == "gaussian_bump":
        w = float(args.get("width", 1.0))
        base = Field(g, np.exp(-g.radius_sq() / w ** 2))
        default_amp = None
    else:
        delta = float(args.get("delta", 0.1))
        e = (p.N - 2 * p.s) / 2
        base = Field(g, delta ** e * (g.radius_sq() + delta ** 2) ** (-e))
        base = base * (1.0 / base.values.max())
        default_amp = None
    amp = args.get("amplitude", default_amp)
    noise = float(args.get("noise", 0.0))
    if noise:
        rng = np.random.default_rng(config.seed)
        base = base + noise * base.values * rng.standard_normal(g.shape)
        base = Field(g, np.maximum(base.values, 0.0))
    if amp is not None:
        return base * float(amp)
    return base * _manifold_amplitude(base, p, nl)


def _manifold_amplitude(base: Field, params: ModelParams, nl: Nonlinearity) -> float:
    """Amplitude A with P(A base) = 0, found by bisection in log A.

    The potential grows faster than A^2 while the other two terms are
    quadratic, so t*(A base) decreases through 1 exactly once.
    """
    def t_of(A):
        try:
            return _t_star_from_triple(energy_triple(base * A, params, nl), params)
        except InfeasibleError:
            return math.inf

    lo, hi = 1.0, 1.0
    while t_of(hi) <= 1:
        hi /= 2
        if hi < 1e-12:
            raise InfeasibleError("no amplitude places the initial field on the manifold")
    lo = hi
    while t_of(hi) > 1:
        hi *= 2
        if hi > 1e12:
            raise InfeasibleError("no amplitude makes the initial field feasible")
    lo = hi / 2
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if t_of(mid) > 1:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1 < 1e-10:
            break
    return hi


# Phases --------------------------------------------------------------------

def _preconditioner(grid: Grid, params: ModelParams) -> np.ndarray:
    return fractional_symbol(grid, params.s) + params.m


def _reduced_gradient(u: Field, triple, params, nl, fu: Field) -> np.ndarray:
    a, d = _path_terms(triple, params)
    N, s = params.N, params.s
    kap = (N - 2 * s) / (2 * s)
    lap = np.real(sfft.ifftn(fractional_symbol(u.grid, s) * sfft.fftn(u.values)))
    return (1 + kap) * 2 * lap / a - kap * (fu.values - params.m * u.values) / d


def _project_to_manifold(u: Field, params, nl) -> tuple:
    t = _t_star_from_triple(energy_triple(u, params, nl), params)
    try:
        v = dilate(u, t)
    except ParameterError as exc:
        raise InfeasibleError(f"Pohozaev dilation t* = {t:.3g} leaves the resolvable range") from exc
    v = Field(u.grid, np.maximum(v.values, 0.0))
    return v, energy_triple(v, params, nl)


def reduced_descent(u: Field, params: ModelParams, nl: Nonlinearity, iters: int = 100,
                    tol: float = 1e-9) -> tuple:
    """Projected, preconditioned descent on ln J; returns (u, log of J values)."""
    pre = _preconditioner(u.grid, params)
    u, tri = _project_to_manifold(u, params, nl)
    J = _reduced_from_triple(tri, params)
    log = [J]
    step = 0.25
    h = u.grid.cell_volume
    for _ in range(iters):
        fu = dealiased_apply(u, nl.f)
        gr = _reduced_gradient(u, tri, params, nl, fu)
        d = -np.real(sfft.ifftn(sfft.fftn(gr) / pre))
        nd = np.linalg.norm(d)
        if nd == 0:
            break
        d *= np.linalg.norm(u.values) / nd
        slope = h * np.sum(gr * d)
        if slope >= 0:
            break
        accepted = None
        while step > 1e-10:
            cand = Field(u.grid, np.maximum(u.values + step * d, 0.0))
            try:
                ctri = energy_triple(cand, params, nl)
                t = _t_star_from_triple(ctri, params)
                Jc = _reduced_from_triple(ctri, params)
            except InfeasibleError:
                step *= 0.5
                continue
            if 0.7 < t < 1.4 and math.log(Jc) <= math.log(J) + 1e-4 * step * slope:
                accepted = cand
                break
            step *= 0.5
        if accepted is None:
            break
        try:
            u_new, tri_new = _project_to_manifold(accepted, params, nl)
        except InfeasibleError:
            break
        J_new = _reduced_from_triple(tri_new, params)
        rel = (J - J_new) / J
        if J_new > J:
            break
        u, tri, J = u_new, tri_new, J_new
        log.append(J)
        step = min(2 * step, 0.5)
        if rel < tol:
            break
    return u, log


def stabilizing_exponent(u: Field, nl: Nonlinearity) -> float:
    """gamma = p/(p-1) for the effective homogeneity p = <f'(u)u, u>/<f(u), u>.

    For a pure power f = u^p this is the classical choice inside the window
    1 < gamma < (p+1)/(p-1).
    """
    v = np.maximum(u.values, 0.0)
    if nl.df is None:
        return 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        num = np.sum(np.where(v > 0, nl.df(v) * v * v, 0.0))
    den = np.sum(nl.f(v) * v)
    p = num / den if den > 0 else 2.0
    return float(p / (p - 1)) if p > 1 else 2.0


def _residuals(u: Field, params, nl):
    gr = gradient(u, params, nl)
    fu = dealiased_apply(u, nl.f)
    nf = np.linalg.norm(fu.values)
    res = np.linalg.norm(gr.values) / nf if nf > 0 else math.inf
    return res


def petviashvili(u: Field, params: ModelParams, nl: Nonlinearity, iters: int,
                 tol: float, gamma: float | None = None) -> tuple:
    """Returns (u, iterations, gradient residual, gamma)."""
    Lop = _preconditioner(u.grid, params)
    if gamma is None:
        gamma = stabilizing_exponent(u, nl)
    res = _residuals(u, params, nl)
    it = 0
    for it in range(1, iters + 1):
        if res <= tol:
            it -= 1
            break
        U = sfft.fftn(u.values)
        FU = sfft.fftn(dealiased_apply(u, nl.f).values)
        num = np.sum(Lop * np.abs(U) ** 2)
        den = np.real(np.sum(np.conj(U) * FU))
        if not den > 0:
            break
        M = num / den
        new = np.real(sfft.ifftn(FU / Lop)) * M ** gamma
        new = np.maximum(new, 0.0)
        if not np.all(np.isfinite(new)) or not np.any(new):
            break
        u = Field(u.grid, new)
        res = _residuals(u, params, nl)
        if not math.isfinite(res) or res > 1e6:
            break
    return u, it, res, gamma


def minimize_reduced(config: SolveConfig, nl: Nonlinearity | None = None) -> SolveReport:
    params = config.params
    nl = nl or canonical_f(params)
    u0 = _initial_field(config, nl)
    a, b, c = energy_triple(u0, params, nl)
    if not c > 0.5 * params.m * b:
        raise InfeasibleError("initial field is not feasible: integral F <= (m/2)||u||_2^2")
    try:
        u, log = reduced_descent(u0, params, nl, config.descent_iters, config.descent_tol)
    except InfeasibleError:
        u, log = u0, [math.nan]
    descent_its = len(log) - 1
    budget = max(1, config.max_iters - descent_its)
    u, pit, res, gamma = petviashvili(u, params, nl, budget, config.grad_tol,
                                      config.petviashvili_gamma)
    triple = energy_triple(u, params, nl)
    br = breakdown_from_triple(triple, params)
    a = triple[0]
    poh = abs(br.pohozaev) / a if a > 0 else math.inf
    try:
        t = _t_star_from_triple(triple, params)
    except InfeasibleError:
        t = math.nan
    thr = sharp_constants(params.s, params.N).threshold
    level_defect = abs(br.total - params.s / params.N * a) / (params.s / params.N * a) if a > 0 else math.inf
    converged = bool(math.isfinite(res) and res <= config.grad_tol and poh <= config.pohozaev_tol)
    msg = "converged" if converged else (
        f"stopped with gradient residual {res:.3e}, Pohozaev residual {poh:.3e}")
    return SolveReport(
        u_star=u, energy_level=br.total, pohozaev_residual=poh, gradient_residual=float(res),
        below_threshold=bool(br.total < thr), positivity_min=float(u.values.min()),
        radial_asymmetry=radial_asymmetry(u), iterations=descent_its + pit,
        converged=converged, dnorm_sq=a, threshold=thr, t_star=t, level_defect=level_defect,
        descent_iterations=descent_its, petviashvili_iterations=pit, petviashvili_gamma=gamma,
        reduced_energy_log=tuple(log), message=msg, config=config.to_dict())


def compare_levels(reports, rtol: float = 1e-3) -> dict:
    """Keep every converged level and flag disagreement instead of picking one."""
    levels = [r.energy_level for r in reports if r.converged]
    if not levels:
        return {"levels": [], "discrepancy": False}
    lo, hi = min(levels), max(levels)
    return {"levels": levels, "lowest": lo,
            "discrepancy": bool(hi - lo > rtol * abs(lo))}


# Binary dump ---------------------------------------------------------------

_HEADER = struct.Struct("<qqdd")


def write_grid_dump(path, u: Field, s: float) -> None:
    """Header (dim, n as int64; L, s as float64, little-endian) then row-major float64."""
    g = u.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(g.dim, g.n, g.L, float(s)))
        fh.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes(order="C"))


def read_grid_dump(path) -> tuple:
    with open(path, "rb") as fh:
        dim, n, L, s = _HEADER.unpack(fh.read(_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8")
    grid = Grid(dim, n, L)
    return Field(grid, data.reshape(grid.shape)), s
