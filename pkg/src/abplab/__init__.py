"""Numerical verification laboratory for curvature-driven measure estimates,
barrier constructions, and Harnack inequalities on 2-D model spaces."""

from .constants import CurvatureParams, ConstantsLedger, build_ledger, calH, calS, verify_ledger
from .fields import ScalarField
from .geometry import GeodesicBallGrid, ModelSpace, build_polar_grid, euclidean, gaussian_plane, hyperbolic, sphere
from .report import CheckReport, seeded_rng

__version__ = "0.1.0"

__all__ = [
    "CheckReport", "ConstantsLedger", "CurvatureParams", "GeodesicBallGrid",
    "ModelSpace", "ScalarField", "build_ledger", "build_polar_grid", "calH",
    "calS", "euclidean", "gaussian_plane", "hyperbolic", "seeded_rng",
    "sphere", "verify_ledger",
]
