"""Approximate common factors of matrix polynomials.

Two solvers share one resultant layer: a one-shot subspace (null-space)
method and a two-level gradient-flow method that searches for the nearest
pair with an exact common factor. The ``control`` module applies them to
distance-to-uncontrollability problems.
"""

from .control import IoSystem, distance_to_uncontrollability, is_controllable
from .errors import (CoalescenceWarning, ConvergenceError, DimensionError, ExtractionWarning,
                     MatGcdError, NonConvergenceWarning, NormalizationError, NumericError,
                     ParameterError, RankToleranceError, StructureError)
from .matpoly import (FactorizationTriple, MatPoly, PolyPair, add_noise, add_noise_pair, dist,
                      monic_normalize, random_with_common_factor, transpose_pair)
from .odegcd import GcdResult, OdeParams, OdeTrace, agcd_ode
from .structmat import build_resultant, corank, project_structure, toeplitz_of
from .subspace import exact_gcd_echelon, recover_cofactors, subspace_gcd

__all__ = [
    "IoSystem", "distance_to_uncontrollability", "is_controllable",
    "CoalescenceWarning", "ConvergenceError", "DimensionError", "ExtractionWarning",
    "MatGcdError", "NonConvergenceWarning", "NormalizationError", "NumericError",
    "ParameterError", "RankToleranceError", "StructureError",
    "FactorizationTriple", "MatPoly", "PolyPair", "add_noise", "add_noise_pair", "dist",
    "monic_normalize", "random_with_common_factor", "transpose_pair",
    "GcdResult", "OdeParams", "OdeTrace", "agcd_ode",
    "build_resultant", "corank", "project_structure", "toeplitz_of",
    "exact_gcd_echelon", "recover_cofactors", "subspace_gcd",
]

__version__ = "0.1.0"
