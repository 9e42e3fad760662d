"""Temperedness exponents of homogeneous spaces of SL(n, R).

The package computes the local volume decay exponent beta exactly from
restricted-weight data, estimates the volume growth exponent delta for
discrete and reductive subgroups, and runs numerical checks of the
spherical-function, Haar-measure and volume estimates those exponents
rest on.
"""

__version__ = "0.1.0"

from temperlab.matgroup import (
    GroupElement,
    CartanVector,
    cartan_projection,
    iwasawa_projection,
)
from temperlab.rootdata import Weight, WeightSystem, restricted_roots, rho_form
from temperlab.rhofun import RhoFunction, rho_eval, rho_of_matrix
from temperlab.beta_solver import PairSpec, beta_exact, beta_sample_oracle

__all__ = [
    "__version__",
    "GroupElement",
    "CartanVector",
    "cartan_projection",
    "iwasawa_projection",
    "Weight",
    "WeightSystem",
    "restricted_roots",
    "rho_form",
    "RhoFunction",
    "rho_eval",
    "rho_of_matrix",
    "PairSpec",
    "beta_exact",
    "beta_sample_oracle",
]
