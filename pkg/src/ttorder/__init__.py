"""Occupation-tensor spectra and orbital-ordering toolkit.

Builds dense occupation-number tensors of Slater determinants and their
superpositions, computes and validates the inversion symmetry of their
matricization singular values, and benchmarks orbital ordering schemes
(canonical, Fiedler, best prefactor, best weighted prefactor).
"""

from .errors import (CapacityError, CapExceededError, ConsistencyError,
                     DegeneracyError, ParseError, TtOrderError, ValidationError)
from .tensor import (DEFAULT_MODE_CAP, CorrelatedState, OccupationTensor,
                     PartialIsometry, correlated_tensor, matricize, reorder_modes,
                     sector_blocks, slater_tensor)
from .spectra import (CutSpectrum, TTDecomposition, compound_matrix, cut_prefactor,
                      cut_spectrum, inversion_residual, partitioned_cauchy_binet,
                      slater_cut_spectrum, tt_decompose, weyl_violation)
from .rdm import (mutual_information, one_orbital_rdm, slater_mutual_information,
                  slater_one_orbital_rdm, slater_two_orbital_rdm, two_orbital_rdm,
                  von_neumann_entropy)
from .ordering import (AnnealConfig, DegenerateFiedlerWarning, OrderingResult,
                       anneal_prefactor_order, best_prefactor_order,
                       best_weighted_prefactor_order, canonical_order, fiedler_order,
                       prefactor_objective)
from .experiments import (EnsembleStats, ExperimentConfig, MethodStats, build_state,
                          default_methods, family_terms, figure_preset,
                          random_partial_isometry, run_ensemble, trial_seeds)

__version__ = "0.1.0"

__all__ = [
    "AnnealConfig",
    "CapacityError",
    "CapExceededError",
    "ConsistencyError",
    "CorrelatedState",
    "CutSpectrum",
    "DEFAULT_MODE_CAP",
    "DegeneracyError",
    "DegenerateFiedlerWarning",
    "EnsembleStats",
    "ExperimentConfig",
    "MethodStats",
    "OccupationTensor",
    "OrderingResult",
    "ParseError",
    "PartialIsometry",
    "TTDecomposition",
    "TtOrderError",
    "ValidationError",
    "anneal_prefactor_order",
    "best_prefactor_order",
    "best_weighted_prefactor_order",
    "build_state",
    "canonical_order",
    "compound_matrix",
    "correlated_tensor",
    "cut_prefactor",
    "cut_spectrum",
    "default_methods",
    "family_terms",
    "fiedler_order",
    "figure_preset",
    "inversion_residual",
    "matricize",
    "mutual_information",
    "one_orbital_rdm",
    "partitioned_cauchy_binet",
    "prefactor_objective",
    "random_partial_isometry",
    "reorder_modes",
    "run_ensemble",
    "sector_blocks",
    "slater_cut_spectrum",
    "slater_mutual_information",
    "slater_one_orbital_rdm",
    "slater_tensor",
    "slater_two_orbital_rdm",
    "trial_seeds",
    "tt_decompose",
    "two_orbital_rdm",
    "von_neumann_entropy",
    "weyl_violation",
]
