"""Numerical checks of the analytic estimates behind the exponents."""

from temperlab.harmonic.report import QuadratureConfig, VerificationReport, to_csv
from temperlab.harmonic.spherical import (
    UnsupportedDimensionError,
    check_spherical_bounds,
    check_weyl_invariance,
    spherical,
)
from temperlab.harmonic.haar import MatrixBump, default_bumps, haar_crosscheck
from temperlab.harmonic.volume import volume_decay_conjugation, volume_growth_bgb
from temperlab.harmonic.theta import ThetaEstimate, estimate_theta_ray

__all__ = [
    "QuadratureConfig",
    "VerificationReport",
    "to_csv",
    "UnsupportedDimensionError",
    "spherical",
    "check_weyl_invariance",
    "check_spherical_bounds",
    "MatrixBump",
    "default_bumps",
    "haar_crosscheck",
    "volume_decay_conjugation",
    "volume_growth_bgb",
    "ThetaEstimate",
    "estimate_theta_ray",
]
