"""Time-optimal laser-phase pulses for Rydberg-blockade processes.

The package integrates generalized characteristics of the
Hamilton-Jacobi-Bellman equations governing minimum-time control of
blockaded multi-qubit processes, searches initial-momentum space for
characteristics reaching a target process, and verifies candidate pulses
by direct Schrodinger simulation.
"""

from .errors import (
    DegenerateDirectionError,
    InconsistentStartError,
    IntegrationFailureError,
    InvalidPulseError,
    NoSolutionError,
    RydoptError,
    SingularEvaluationError,
    UnreachableTargetError,
    UnsupportedVariantError,
)
from .fields import (
    AMPLITUDE,
    GATE_PHASE,
    SELECTIVE_PHASE,
    CoefficientField,
    Variant,
    build_field,
    characteristic_rhs,
    eval_F,
    optimal_phase,
    phase_slope,
    wrap_angle,
)

__version__ = "0.1.0"

__all__ = [
    "AMPLITUDE",
    "GATE_PHASE",
    "SELECTIVE_PHASE",
    "CoefficientField",
    "Variant",
    "build_field",
    "characteristic_rhs",
    "eval_F",
    "optimal_phase",
    "phase_slope",
    "wrap_angle",
    "RydoptError",
    "InvalidPulseError",
    "IntegrationFailureError",
    "UnsupportedVariantError",
    "SingularEvaluationError",
    "DegenerateDirectionError",
    "InconsistentStartError",
    "UnreachableTargetError",
    "NoSolutionError",
    "__version__",
]
