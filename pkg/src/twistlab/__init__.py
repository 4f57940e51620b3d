"""Quadratic twists of elliptic curves: central values, prime sums and low-lying zero statistics."""

from ._accel import BACKEND
from .curve import CURVE_11A1, CoefficientTable, CurveSpec, build_coefficients

__version__ = "0.1.0"

__all__ = ["BACKEND", "CURVE_11A1", "CoefficientTable", "CurveSpec", "build_coefficients", "__version__"]
