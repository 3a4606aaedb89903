"""Spectral analysis of accretive quadratic differential operators.

A quadratic symbol ``q(x, xi)`` on ``R^{2n}`` is studied through its Hamilton
map ``F``: singular space and hypoellipticity index, eigenvalues ``mu0`` and
gap ``tau0``, and the Gaussian ground state.  A Hermite-Galerkin
discretization and a stochastic simulator of the associated linear SDEs
provide independent cross-checks.
"""
from .analysis import AnalysisBundle, analyze
from .errors import (DomainError, NumericalAmbiguity, QuadgapError, SingularSpaceNonzero)
from .ground_state import (GroundState, LagrangianPlane, ground_state, orthogonality_check,
                           positive_lagrangian, realness_check, symbol_ground_state)
from .hamilton import HamiltonMap, average_re, hamilton_map, im_flow, sigma, symplectic_matrix
from .models import LinearSDE, Model, build_model, chains_model, gle_model, kfp_model
from .spectrum import SpectrumReport, eigen_clusters, kfp_closed_forms, spectrum_report
from .structure import SingularSpaceReport, check_no_real_eigenvalues, singular_space
from .symbol import QuadraticSymbol, check_accretive, make_symbol, read_symbol_file, write_symbol_file

__version__ = "0.1.0"

__all__ = [
    "AnalysisBundle", "analyze",
    "DomainError", "NumericalAmbiguity", "QuadgapError", "SingularSpaceNonzero",
    "GroundState", "LagrangianPlane", "ground_state", "orthogonality_check", "positive_lagrangian",
    "realness_check", "symbol_ground_state",
    "HamiltonMap", "average_re", "hamilton_map", "im_flow", "sigma", "symplectic_matrix",
    "LinearSDE", "Model", "build_model", "chains_model", "gle_model", "kfp_model",
    "SpectrumReport", "eigen_clusters", "kfp_closed_forms", "spectrum_report",
    "SingularSpaceReport", "check_no_real_eigenvalues", "singular_space",
    "QuadraticSymbol", "check_accretive", "make_symbol", "read_symbol_file", "write_symbol_file",
]
