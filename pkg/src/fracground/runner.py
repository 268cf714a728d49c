"""Regime classification, parameter sweeps, asymptotic case studies and plot data."""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import asymptotics as asy
from .constants import fourier_sharp_constant, sharp_constants
from .errors import FracgroundError
from .model import ModelParams, same_boundary
from .solver import SolveConfig, SolveReport, minimize_reduced
from .spectral import Grid

REGIMES = ("every_lambda_high_dim", "every_lambda_low_dim", "lambda_large", "inadmissible")

DEFAULT_DELTAS = (0.02, 0.03, 0.05, 0.08, 0.12, 0.2)
FINE_DELTAS = (0.002, 0.003, 0.005, 0.008, 0.012, 0.02)


@dataclass(frozen=True)
class RegimeVerdict:
    regime: str
    N: int
    s: float
    q: float
    low_dim_bound: float      # 4s/(N-2s), inf when N <= 2s
    two_star: float           # 2N/(N-2s), inf when N <= 2s
    reason: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def classify_regime(N: int, s: float, q: float) -> RegimeVerdict:
    """Existence regime of the (N, s, q) triple.

    every_lambda_high_dim: N >= 4s and 2 < q < 2*
    every_lambda_low_dim:  2s < N < 4s and 4s/(N-2s) < q < 2*
    lambda_large:          2s < N < 4s and 2 < q <= 4s/(N-2s)
    """
    if not (0 < s < 1) or not N > 2 * s:
        return RegimeVerdict("inadmissible", N, s, q, math.inf, math.inf, "need 0 < s < 1 and N > 2s")
    ts = 2 * N / (N - 2 * s)
    low = 4 * s / (N - 2 * s)
    if not 2 < q < ts or same_boundary(q, ts) or same_boundary(q, 2.0):
        return RegimeVerdict("inadmissible", N, s, q, low, ts, f"q must lie in (2, {ts:.6g})")
    if N >= 4 * s or same_boundary(N, 4 * s):
        return RegimeVerdict("every_lambda_high_dim", N, s, q, low, ts)
    if q > low and not same_boundary(q, low):
        return RegimeVerdict("every_lambda_low_dim", N, s, q, low, ts)
    return RegimeVerdict("lambda_large", N, s, q, low, ts)


# Sweeps --------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    N: tuple = ()
    s: tuple = ()
    q: tuple = ()
    lam: tuple = (1.0,)
    m: tuple = (1.0,)
    deltas: tuple = DEFAULT_DELTAS
    solve: bool = False
    solve_grids: dict = field(default_factory=dict)    # str(N) -> {"n": .., "L": ..}
    solve_options: dict = field(default_factory=dict)
    expected_inadmissible: tuple = ()
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        for k in ("N", "s", "q", "lam", "m", "deltas"):
            if k in known:
                known[k] = tuple(known[k])
        if "expected_inadmissible" in known:
            known["expected_inadmissible"] = tuple(tuple(t) for t in known["expected_inadmissible"])
        return cls(**known)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    def tuples(self):
        return list(itertools.product(self.N, self.s, self.q, self.lam, self.m))


def tuple_seed(master: int, tup) -> int:
    """Seed derived from the tuple's content, independent of sweep order."""
    key = f"{master}|" + "|".join(repr(float(x)) for x in tup)
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little") >> 1


CSV_COLUMNS = ("N", "s", "q", "lam", "m", "regime", "low_dim_bound", "two_star", "best_delta",
               "bound", "threshold", "below_threshold", "solve_energy", "solve_converged",
               "solve_below_threshold", "seed", "error")


def _run_tuple(args):
    spec, tup = args
    N, s, q, lam, m = tup
    N = int(N)
    verdict = classify_regime(N, s, q)
    row = {"N": N, "s": s, "q": q, "lam": lam, "m": m, "regime": verdict.regime,
           "low_dim_bound": verdict.low_dim_bound, "two_star": verdict.two_star,
           "best_delta": "", "bound": "", "threshold": "", "below_threshold": "",
           "solve_energy": "", "solve_converged": "", "solve_below_threshold": "",
           "seed": tuple_seed(spec.seed, tup), "error": ""}
    curve = []
    if verdict.regime == "inadmissible":
        expected = any(tuple(map(float, e)) == (float(N), s, q) for e in spec.expected_inadmissible)
        row["error"] = ("expected-inadmissible: " if expected else "inadmissible: ") + verdict.reason
        return row, curve
    try:
        params = ModelParams(m=m, s=s, N=N, lam=lam, q=q)
        thr = sharp_constants(s, N).threshold
        curve = [asdict(r) for r in asy.bound_ladder(params, spec.deltas)]
        best = min(curve, key=lambda r: r["bound"])
        row.update(best_delta=best["delta"], bound=best["bound"], threshold=thr,
                   below_threshold=best["bound"] < thr)
        if spec.solve:
            g = spec.solve_grids.get(str(N), {"n": 256 if N == 1 else 64, "L": 20.0})
            cfg = SolveConfig(params=params, grid=Grid(N, int(g["n"]), float(g["L"])),
                              seed=row["seed"], **spec.solve_options)
            rep = minimize_reduced(cfg)
            row.update(solve_energy=rep.energy_level, solve_converged=rep.converged,
                       solve_below_threshold=rep.below_threshold)
    except (FracgroundError, ValueError, FloatingPointError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row, curve


@dataclass
class SweepReport:
    spec: SweepSpec
    rows: list
    curves: list

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "rows": self.rows, "curves": self.curves}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r[k]) for k in CSV_COLUMNS})
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepReport:
    """One row per tuple; errors are caught and recorded in that tuple's row."""
    jobs = [(spec, t) for t in spec.tuples()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_tuple, jobs))
    else:
        results = [_run_tuple(j) for j in jobs]
    rows = [r for r, _ in results]
    curves = [{"N": r["N"], "s": r["s"], "q": r["q"], "lam": r["lam"], "m": r["m"], "points": c}
              for r, c in results]
    return SweepReport(spec=spec, rows=rows, curves=curves)


# Asymptotic case studies ---------------------------------------------------

CASE_TUPLES = {
    "i": (3, 0.6, 3.0),
    "ii": (1, 0.25, 3.0),
    "iii": (1, 0.3, 4.0),
    "iv": (1, 0.3, 2.5),
    "v": (1, 0.3, 2.25),
}


@dataclass
class AsymptoticsCase:
    case: str
    N: int
    s: float
    q: float
    deltas: tuple
    rows: list
    fits: dict
    verdict: dict

    def to_dict(self) -> dict:
        return {"case": self.case, "N": self.N, "s": self.s, "q": self.q,
                "deltas": list(self.deltas), "fits": self.fits, "verdict": self.verdict}

    def to_csv(self) -> str:
        cols = ["delta", "seminorm_sq", "seminorm_gap", "l2_sq", "lq_power",
                "lambda", "bound", "threshold", "below_threshold"]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r[k]) for k in cols})
        for name, f in self.fits.items():
            buf.write(f"# fit {name}: measured={f['exponent_measured']!r} "
                      f"predicted={f['exponent_predicted']!r} r2={f['r_squared']!r} "
                      f"log={f['log_flag']}\n")
        return buf.getvalue()


def run_asymptotics_case(case: str, deltas=FINE_DELTAS, tol: float = 0.15) -> AsymptoticsCase:
    """Exponent fits and the lambda-scheduled bound for one of the five cases."""
    if case not in CASE_TUPLES:
        raise ValueError(f"case must be one of {sorted(CASE_TUPLES)}")
    N, s, q = CASE_TUPLES[case]
    S_F = fourier_sharp_constant(s, N)
    thr = sharp_constants(s, N).threshold
    theta = asy.lambda_schedule_exponent(s, N, q, margin=1.0)
    rows = []
    for d in deltas:
        v = asy._cached_extremal(s, N, float(d))
        lam = float(d) ** (-theta) if theta > 0 else 1.0
        params = ModelParams(m=1.0, s=s, N=N, lam=lam, q=q)
        try:
            b, below = asy.cm_upper_bound(params, d, v)
        except FracgroundError:
            b, below = math.inf, False
        rows.append({"delta": float(d), "seminorm_sq": v.seminorm_sq,
                     "seminorm_gap": v.seminorm_sq - S_F, "l2_sq": v.l2_sq,
                     "lq_power": v.lp_power(q), "lambda": lam, "bound": b,
                     "threshold": thr, "below_threshold": below})
    fits = {}
    gap = asy.fit_power_law(deltas, [r["seminorm_gap"] for r in rows])
    fits["seminorm_gap"] = _fit_dict(gap, N - 2 * s, False)
    for label, p, key in (("l2", 2.0, "l2_sq"), ("lq", q, "lq_power")):
        pred, log_flag = asy.predicted_lp_exponent(p, s, N)
        corr = None if log_flag else asy.complementary_exponent(p, s, N)
        fits[label] = _fit_dict(asy.fit_power_law(deltas, [r[key] for r in rows], log_flag, corr),
                                pred, log_flag)
    order = asy.threshold_gap_exponents(s, N, q)
    fits_ok = all(f["r_squared"] >= 0.98 and abs(f["exponent_measured"] / f["exponent_predicted"] - 1) <= tol
                  for f in fits.values())
    verdict = {"fits_within_tolerance": fits_ok, "lambda_exponent_theta": theta,
               "below_threshold_at_smallest_delta": bool(rows[int(np.argmin(deltas))]["below_threshold"]),
               "exponent_ordering": order}
    return AsymptoticsCase(case, N, s, q, tuple(map(float, deltas)), rows, fits, verdict)


def _fit_dict(fit, predicted, log_flag):
    alpha, r2, extra = fit
    return {"exponent_measured": alpha, "exponent_predicted": predicted, "log_flag": log_flag,
            "r_squared": r2, **extra}


# Plot data -----------------------------------------------------------------

def radial_profile(u) -> tuple:
    """(r, u) sampled along the first axis from the origin outward, r ascending."""
    g = u.grid
    c = g.n // 2
    idx = (slice(c, None),) + (c,) * (g.dim - 1)
    return g.axis[c:].copy(), np.asarray(u.values[idx]).copy()


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return path


def emit_plot_data(report, out_dir: str, prefix: str = "") -> list:
    """Write CSV series for external plotting; returns the written paths."""
    try:
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        if isinstance(report, SolveReport):
            r, v = radial_profile(report.u_star)
            paths.append(_write_csv(os.path.join(out_dir, f"{prefix}radial_profile.csv"),
                                    ["r", "u"], zip(r, v)))
        elif isinstance(report, SweepReport):
            rows = []
            for c in report.curves:
                for p in c["points"]:
                    rows.append([c["N"], c["s"], c["q"], c["lam"], c["m"], p["delta"], p["bound"]])
            paths.append(_write_csv(os.path.join(out_dir, f"{prefix}bound_curves.csv"),
                                    ["N", "s", "q", "lam", "m", "delta", "bound"], rows))
            prof = []
            for c in report.curves:
                finite = [p for p in c["points"] if math.isfinite(p["bound"])]
                if not finite:
                    continue
                best = min(finite, key=lambda p: p["bound"])
                params = ModelParams(m=c["m"], s=c["s"], N=int(c["N"]), lam=c["lam"], q=c["q"])
                v = asy._cached_extremal(params.s, params.N, float(best["delta"]))
                for t in np.linspace(0.05, 3.0, 60):
                    prof.append([c["N"], c["s"], c["q"], c["lam"], best["delta"], float(t),
                                 asy.reduced_g(float(t), v, params)])
            paths.append(_write_csv(os.path.join(out_dir, f"{prefix}g_profiles.csv"),
                                    ["N", "s", "q", "lam", "delta", "t", "g"], prof))
        elif isinstance(report, AsymptoticsCase):
            rows = [[math.log(r["delta"]), math.log(r["seminorm_gap"])]
                    for r in report.rows if r["seminorm_gap"] > 0]
            paths.append(_write_csv(os.path.join(out_dir, f"{prefix}case_{report.case}_gap.csv"),
                                    ["log_delta", "log_gap"], rows))
        else:
            raise TypeError(f"no plot data for {type(report).__name__}")
        return paths
    except OSError as exc:
        raise OSError(f"could not write plot data under {out_dir}: {exc}") from exc
