"""Static figures written next to the CSV/JSON outputs (Agg backend, no display)."""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import asymptotics as asy  # noqa: E402
from .model import ModelParams  # noqa: E402
from .runner import AsymptoticsCase, SweepReport, radial_profile  # noqa: E402
from .solver import SolveReport  # noqa: E402

# Fixed metadata keeps PNG bytes identical across runs.
_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def plot_solution(report: SolveReport, path: str) -> str:
    r, u = radial_profile(report.u_star)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(r, u, lw=1.2)
    ax.set_xlabel("r")
    ax.set_ylabel("u*(r)")
    ax.set_title(f"ground state, level {report.energy_level:.5g}")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_bound_curves(report: SweepReport, path: str) -> str:
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for c, row in zip(report.curves, report.rows):
        pts = [p for p in c["points"] if math.isfinite(p["bound"])]
        if not pts or row["threshold"] == "":
            continue
        d = [p["delta"] for p in pts]
        ratio = [p["bound"] / row["threshold"] for p in pts]
        ax.semilogx(d, ratio, marker="o", ms=3,
                    label=f"N={c['N']} s={c['s']:g} q={c['q']:g} lam={c['lam']:g}")
    ax.axhline(1.0, color="k", ls="--", lw=0.8, label="threshold")
    ax.set_xlabel("delta")
    ax.set_ylabel("upper bound / threshold")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=6)
    return _save(fig, path)


def plot_g_profiles(report: SweepReport, path: str) -> str:
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    t = np.linspace(0.05, 3.0, 120)
    for c in report.curves:
        pts = [p for p in c["points"] if math.isfinite(p["bound"])]
        if not pts:
            continue
        best = min(pts, key=lambda p: p["bound"])
        params = ModelParams(m=c["m"], s=c["s"], N=int(c["N"]), lam=c["lam"], q=c["q"])
        v = asy._cached_extremal(params.s, params.N, float(best["delta"]))
        ax.plot(t, [asy.reduced_g(float(x), v, params) for x in t],
                label=f"N={c['N']} s={c['s']:g} q={c['q']:g} delta={best['delta']:g}")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("t")
    ax.set_ylabel("g(t)")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=6)
    return _save(fig, path)


def plot_asymptotics(case: AsymptoticsCase, path: str) -> str:
    d = np.array([r["delta"] for r in case.rows])
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    series = (("seminorm_gap", "seminorm gap"), ("l2_sq", "L2 norm^2"),
              ("lq_power", f"L{case.q:g} power"))
    for key, label in series:
        y = np.array([r[key] for r in case.rows])
        ok = y > 0
        fit = case.fits[{"seminorm_gap": "seminorm_gap", "l2_sq": "l2", "lq_power": "lq"}[key]]
        ax.loglog(d[ok], y[ok], marker="o", ms=3,
                  label=f"{label}: slope {fit['exponent_measured']:.3f} "
                        f"(pred {fit['exponent_predicted']:.3f})")
    ax.set_xlabel("delta")
    ax.set_title(f"case {case.case}: N={case.N} s={case.s:g} q={case.q:g}")
    ax.legend(fontsize=6)
    return _save(fig, path)


def render(report, out_dir: str, prefix: str = "") -> list:
    """Figures for a report; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    join = lambda name: os.path.join(out_dir, prefix + name)  # noqa: E731
    if isinstance(report, SolveReport):
        return [plot_solution(report, join("radial_profile.png"))]
    if isinstance(report, SweepReport):
        return [plot_bound_curves(report, join("bound_curves.png")),
                plot_g_profiles(report, join("g_profiles.png"))]
    if isinstance(report, AsymptoticsCase):
        return [plot_asymptotics(report, join(f"case_{report.case}.png"))]
    raise TypeError(f"no figure for {type(report).__name__}")
