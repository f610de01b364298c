"""Geometric phases for driven finite-dimensional quantum systems.

Abelian and non-Abelian, cyclic and noncyclic geometric phase factors
computed through smooth eigenframe transport and structure-preserving
unitary integration, with a closed-form spin-1 quadrupole solution as
built-in ground truth.  Units: hbar = 1 throughout; energies and times
in reciprocal units; angles in radians.
"""

from .errors import (
    AxisSingularityError,
    ConfigError,
    DomainError,
    HolonomyError,
    LevelCrossingError,
    ResolutionError,
    StructuralError,
    UndefinedPhaseError,
)
from .linalg import (
    Spectrum,
    SpectralLevel,
    eig_hermitian,
    expm_skew,
    hermiticity_defect,
    unitarity_defect,
)
from .frames import (
    ConnectionSamples,
    Curve,
    FrameField,
    OperatorFamily,
    apply_gauge,
    connection_matrices,
    curve_from_function,
    family_from_generators,
    transport_frame,
    verify_invariant,
)
from .propagate import (
    MatrixOdeProblem,
    PropagatorTrace,
    assemble_V,
    assemble_evolution,
    holonomy,
    lewis_riesenfeld_u,
    propagate,
)
from .phase import (
    OverlapMatrix,
    PhaseReport,
    abelian_phase,
    diagonal_decomposition,
    noncyclic_phase,
    overlap_matrix,
)
from .adiabatic import (
    AdiabaticScenario,
    AdiabaticityReport,
    adiabatic_noncyclic_phase,
    adiabatic_propagator,
    adiabaticity_report,
    convergence_study,
)
from . import quadrupole

__all__ = [
    "AxisSingularityError",
    "ConfigError",
    "DomainError",
    "HolonomyError",
    "LevelCrossingError",
    "ResolutionError",
    "StructuralError",
    "UndefinedPhaseError",
    "Spectrum",
    "SpectralLevel",
    "eig_hermitian",
    "expm_skew",
    "hermiticity_defect",
    "unitarity_defect",
    "ConnectionSamples",
    "Curve",
    "FrameField",
    "OperatorFamily",
    "apply_gauge",
    "connection_matrices",
    "curve_from_function",
    "family_from_generators",
    "transport_frame",
    "verify_invariant",
    "MatrixOdeProblem",
    "PropagatorTrace",
    "assemble_V",
    "assemble_evolution",
    "holonomy",
    "lewis_riesenfeld_u",
    "propagate",
    "OverlapMatrix",
    "PhaseReport",
    "abelian_phase",
    "diagonal_decomposition",
    "noncyclic_phase",
    "overlap_matrix",
    "AdiabaticScenario",
    "AdiabaticityReport",
    "adiabatic_noncyclic_phase",
    "adiabatic_propagator",
    "adiabaticity_report",
    "convergence_study",
    "quadrupole",
]

__version__ = "0.1.0"
