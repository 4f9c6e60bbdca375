"""Numerical laboratory for u_t - Δu = u^α (1 - σ ∫ u^β dx) on truncated boxes."""

from .exponents import classify, holder_exponents, moser_exponents, sobolev_exponent
from .field import Bump, Constant, Field, Gaussian, Grid, Sum, make_field
from .stepper import ProblemSpec, StepControls, advance

__all__ = [
    "Bump", "Constant", "Field", "Gaussian", "Grid", "ProblemSpec", "StepControls", "Sum",
    "advance", "classify", "holder_exponents", "make_field", "moser_exponents",
    "sobolev_exponent",
]
__version__ = "0.1.0"
