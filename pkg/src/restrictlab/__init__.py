"""Numerical companion for Fourier restriction to curves with affine arclength measure."""
from .curve import AffineMeasure, CurveSpec, Exponential, Flat, Monomial, Scaled, validate_curve
from .errors import LabError

__all__ = ["AffineMeasure", "CurveSpec", "Exponential", "Flat", "Monomial", "Scaled",
           "validate_curve", "LabError"]
