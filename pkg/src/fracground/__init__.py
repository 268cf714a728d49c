"""Spectral variational solver and verification suite for (-Delta)^s u + m u = f(u)."""

from .constants import SharpConstants, fourier_sharp_constant, sharp_constants
from .model import ModelParams, canonical_f, energy, validate_hypotheses
from .solver import SolveConfig, SolveReport, minimize_reduced
from .spectral import Field, Grid, dnorm_sq, fractional_laplacian

__all__ = [
    "Field", "Grid", "ModelParams", "SharpConstants", "SolveConfig", "SolveReport",
    "canonical_f", "dnorm_sq", "energy", "fourier_sharp_constant", "fractional_laplacian",
    "minimize_reduced", "sharp_constants", "validate_hypotheses",
]
