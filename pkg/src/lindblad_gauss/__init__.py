"""Exact Gaussian-state dynamics of the Lindblad damped oscillator."""
from .dynamics import (
    ConsistencyReport,
    InitialConditions,
    LindbladParams,
    Mode,
    MomentSystem,
    Trajectory,
    audit,
    moment_system,
    propagate,
    propagate_numeric,
    stationary_formula,
    stationary_solve,
    thermal_calibration,
)
from .lengths import LengthScales, composition_residual, length_scales, thermal_lengths
from .oracle import (
    CharacteristicPoint,
    GridSpec,
    characteristics_ambiguity,
    quadrature_moments,
    quadrature_purity_norm,
)
from .state import (
    GaussianMoments,
    InvalidStateError,
    ValidityReport,
    ambiguity_at,
    density_at,
    purity,
    thermal_density_at,
    thermal_state,
    validate_state,
    wigner_at,
)

__version__ = "0.1.0"
