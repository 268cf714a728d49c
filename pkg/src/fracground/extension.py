"""The s-harmonic extension of a trace into the upper half-space.

w(., y) = P_y * u with the Poisson kernel c(N,s) y^{2s} / (|x|^2 + y^2)^{(N+2s)/2}.
In Fourier variables this is multiplication by

    phi_s(t) = 2^{1-s} / Gamma(s) * t^s K_s(t),   t = |xi| y,

which is used directly for slices with y below a couple of grid cells, where
the sampled kernel no longer resolves its peak.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.integrate import simpson
from scipy.special import kve

from .constants import extension_constant
from .errors import ConvergenceError, ParameterError, ResolutionError
from .spectral import Field, Grid, check_order, dnorm_sq, fractional_laplacian


def bessel_multiplier(s: float, t: np.ndarray) -> np.ndarray:
    """phi_s(t), equal to 1 at t = 0 and decaying like t^{s-1/2} e^{-t}."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    pos = t > 0
    tp = t[pos]
    out[pos] = 2 ** (1 - s) / math.gamma(s) * tp ** s * kve(s, tp) * np.exp(-tp)
    return out


def bessel_flux_multiplier(s: float, t: np.ndarray) -> np.ndarray:
    """Multiplier of -y^{1-2s} d_y w divided by |xi|^{2s}; tends to kappa_s as t -> 0."""
    t = np.asarray(t, dtype=float)
    out = np.full_like(t, 2 ** (1 - 2 * s) * math.gamma(1 - s) / math.gamma(s))
    pos = t > 0
    tp = t[pos]
    out[pos] = 2 ** (1 - s) / math.gamma(s) * tp ** (1 - s) * kve(1 - s, tp) * np.exp(-tp)
    return out


def kernel_constant(N: int, s: float) -> float:
    """c(N, s) making the Poisson kernel a probability density on R^N."""
    return math.gamma((N + 2 * s) / 2) / (math.pi ** (N / 2) * math.gamma(s))


def poisson_kernel(grid: Grid, y: float, s: float, images: int | None = None) -> np.ndarray:
    """Periodized, sampled kernel with unit discrete mass.

    Images with |m| <= ``images`` in every axis are summed exactly; the mass
    carried by farther images is spread uniformly over the box, and the whole
    kernel is then rescaled to unit mass on the grid.  The array is ordered so
    that index 0 sits at x = 0.
    """
    N = grid.dim
    if images is None:
        images = {1: 8, 2: 4, 3: 2}[N]
    x = np.roll(grid.axis, grid.n // 2)
    c = kernel_constant(N, s)
    K = np.zeros(grid.shape)
    for img in itertools.product(range(-images, images + 1), repeat=N):
        X = np.meshgrid(*[x + 2 * grid.L * m for m in img], indexing="ij", sparse=True)
        r2 = sum(a * a for a in X)
        K += c * y ** (2 * s) * (r2 + y * y) ** (-(N + 2 * s) / 2)
    h = grid.cell_volume
    K += (1.0 - h * K.sum()) / grid.volume
    return K / (h * K.sum())


def poisson_extend(u: Field, y: float, s: float, method: str = "auto") -> Field:
    """Slice w(., y) of the s-harmonic extension of u.

    ``method``: "kernel" convolves with the sampled kernel, "multiplier" applies
    phi_s(|xi| y) exactly, "auto" uses the kernel when y >= 2 grid cells.
    """
    check_order(s)
    if not y > 0:
        raise ParameterError(f"extension height must be positive, got {y}")
    if method == "auto":
        method = "kernel" if y >= 2 * u.grid.spacing else "multiplier"
    U = sfft.fftn(u.values)
    if method == "kernel":
        K = sfft.fftn(poisson_kernel(u.grid, y, s)) * u.grid.cell_volume
        return u.like(np.real(sfft.ifftn(U * K)))
    if method == "multiplier":
        xi = np.sqrt(u.grid.xi_sq())
        return u.like(np.real(sfft.ifftn(U * bessel_multiplier(s, xi * y))))
    raise ParameterError(f"unknown extension method {method!r}")


def graded_mesh(M: int, y_max: float, y_min: float = 1e-3) -> tuple:
    """Geometric nodes y_j = y_max r^{M-j}, j = 1..M, with y_1 = y_min."""
    if M < 2:
        raise ResolutionError("need at least two nodes")
    r = (y_min / y_max) ** (1.0 / (M - 1))
    nodes = y_max * r ** np.arange(M - 1, -1, -1)
    return nodes, r


@dataclass(frozen=True, eq=False)
class ExtensionStack:
    base: Field
    y_nodes: np.ndarray
    slices: tuple
    s: float
    ratio: float
    method: str

    def __post_init__(self):
        y = np.asarray(self.y_nodes)
        if np.any(np.diff(y) <= 0):
            raise ParameterError("y_nodes must be strictly increasing")
        if len(self.slices) != len(y):
            raise ParameterError("one slice per node is required")

    @property
    def M(self) -> int:
        return len(self.y_nodes)


def build_stack(u: Field, s: float, M: int = 128, y_max: float | None = None,
                y_min: float = 1e-3, method: str = "auto") -> ExtensionStack:
    if y_max is None:
        y_max = 4 * u.grid.L
    nodes, r = graded_mesh(M, y_max, y_min)
    slices = tuple(poisson_extend(u, float(y), s, method) for y in nodes)
    return ExtensionStack(base=u, y_nodes=nodes, slices=slices, s=s, ratio=float(r), method=method)


@dataclass(frozen=True)
class ExtensionEnergy:
    """Pieces of the y-quadrature of y^{1-2s}(|grad_x w|^2 + |d_y w|^2)."""

    total: float
    mesh_part: float
    near_field: float
    tail_estimate: float


def extension_energy_parts(stack: ExtensionStack) -> ExtensionEnergy:
    """Weighted Dirichlet energy of the stack, without the factor k_s.

    x-derivatives are spectral per slice, y-derivatives second-order finite
    differences on the graded mesh, and the y-integral is Simpson's rule in
    ln y.  Below the first node d_y w ~ c y^{2s-1} and the strip [0, y_1] is
    integrated in closed form; the part above y_max is estimated from the
    slowest nonzero mode and reported, not added.
    """
    if stack.M < 16:
        raise ResolutionError(f"extension energy needs M >= 16 slices, got {stack.M}")
    s = stack.s
    g = stack.base.grid
    y = np.asarray(stack.y_nodes)
    W = np.stack([sl.values for sl in stack.slices])
    k = g.wavenumbers
    gx2 = np.zeros(len(y))
    for ax in range(g.dim):
        shape = [1] * (g.dim + 1)
        shape[ax + 1] = g.n
        D = sfft.ifftn(1j * k.reshape(shape) * sfft.fftn(W, axes=range(1, g.dim + 1)),
                       axes=range(1, g.dim + 1)).real
        gx2 += np.sum(D * D, axis=tuple(range(1, g.dim + 1)))
    Wy = np.gradient(W, y, axis=0, edge_order=2)
    gy2 = np.sum(Wy * Wy, axis=tuple(range(1, g.dim + 1)))
    h = g.cell_volume
    integrand = y ** (1 - 2 * s) * h * (gx2 + gy2)
    mesh_part = float(simpson(integrand * y, x=np.log(y)))
    c = y[0] ** (1 - 2 * s) * Wy[0]
    near = float(h * np.sum(c * c) * y[0] ** (2 * s) / (2 * s)
                 + h * gx2[0] * y[0] ** (2 - 2 * s) / (2 - 2 * s))
    xi1 = np.pi / g.L
    tail = float(integrand[-1] / (2 * xi1))
    return ExtensionEnergy(total=mesh_part + near, mesh_part=mesh_part, near_field=near,
                           tail_estimate=tail)


def extension_energy(stack: ExtensionStack) -> float:
    return extension_energy_parts(stack).total


def neumann_trace(u: Field, s: float, y_min: float = 1e-3, k_s: float | None = None) -> Field:
    """-k_s lim_{y->0} y^{1-2s} d_y w, extrapolated from the nodes y_min and 2 y_min.

    The flux at each node is evaluated exactly through the Bessel multiplier;
    its leading defect is O(y^{2-2s}), which one Richardson step removes.
    """
    check_order(s)
    if k_s is None:
        k_s = extension_constant(s)
    g = u.grid
    xi = np.sqrt(g.xi_sq())
    sym = xi ** (2 * s)
    U = sfft.fftn(u.values)
    fluxes = []
    for y in (y_min, 2 * y_min):
        fluxes.append(np.real(sfft.ifftn(U * sym * bessel_flux_multiplier(s, xi * y))))
    p = 2 - 2 * s
    extrap = (2 ** p * fluxes[0] - fluxes[1]) / (2 ** p - 1)
    scale = np.linalg.norm(extrap)
    if scale > 0 and np.linalg.norm(extrap - fluxes[0]) > 0.5 * scale:
        raise ConvergenceError("Neumann-trace extrapolation did not settle; refine y_min")
    return u.like(k_s * extrap)


def isometry_report(u: Field, s: float, M: int = 128, method: str = "auto") -> dict:
    """k_s * extension energy against the seminorm, plus the Neumann trace error."""
    k = extension_constant(s)
    stack = build_stack(u, s, M=M, method=method)
    parts = extension_energy_parts(stack)
    d = dnorm_sq(u, s)
    nt = neumann_trace(u, s).values
    fl = fractional_laplacian(u, s).values
    return {
        "s": s, "grid": u.grid.to_dict(), "slices": M, "method": method,
        "y_min": float(stack.y_nodes[0]), "y_max": float(stack.y_nodes[-1]),
        "grading_ratio": stack.ratio, "k_s": k, "dnorm_sq": d,
        "extension_energy": parts.total, "near_field": parts.near_field,
        "tail_estimate": parts.tail_estimate,
        "isometry_ratio": k * parts.total / d if d > 0 else float("nan"),
        "neumann_trace_rel_l2": float(np.linalg.norm(nt - fl) / np.linalg.norm(fl)),
    }
