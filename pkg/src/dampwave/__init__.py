"""Spectral tools for polynomial stability of damped wave equations."""

from .damping import (
    BetaReport,
    DampingConfig,
    GramMatrix,
    Region,
    assemble_gram,
    beta_report,
    beta_sequence,
    compute_beta,
    eigenspace_blocks,
    estimate_norm_B,
    fit_gamma0,
)
from .errors import (
    AccuracyRefused,
    DampwaveError,
    DegenerateDamping,
    Diverged,
    InsufficientData,
    InvalidArgument,
    NumericalFailure,
    PoleError,
    RefusedPrecondition,
    ResonanceError,
    ResourceLimit,
    SpectralPositivityError,
    Unsupported,
)
from .gaps import (
    GapReport,
    GapWitness,
    RationalRatio,
    fit_gamma1,
    gap_quotient,
    irrational_gap_witness,
    multi_d_gap_bound,
    rational_gap_bound,
    roth_gap_check,
)
from .predictor import ScenarioPrediction, predicted_m, scenario_table
from .resolvent import ResolventProfile, alpha, build_profile, c_omega, omega_grid, resolvent_norm_numeric
from .semigroup import (
    DecayReport,
    EnergyTrajectory,
    dissipation_residual,
    fit_decay_exponent,
    initial_data,
    simulate,
    verify_decay_bound,
)
from .spectral import (
    Coefficient1D,
    Domain1D,
    RectangleDomain,
    Spectrum,
    build_spectrum_1d_constant,
    build_spectrum_1d_piecewise,
    build_spectrum_rectangle,
    build_spectrum_sturm_liouville,
    liouville_asymptotics,
)

__version__ = "0.1.0"
