"""Simulation and analysis toolkit for interference-based secure direct communication.

Closed-form secrecy-rate analytics, pulse-level Monte Carlo simulation,
a frame-based secure coding pipeline, and sweep/optimization tooling.
"""
from .params import (
    InvalidParameterError,
    SystemParams,
    channel_transmittance,
    load_config,
    mode_match_rate,
    system_transmittance,
)
from .rates import (
    ComparisonRates,
    DegenerateChannelError,
    RateBreakdown,
    TruncationError,
    binary_entropy,
    comparison_rates,
    dl04_rate,
    gain,
    ideal_rates,
    mdi_rate,
    plob_bound,
    poisson_weight,
    secrecy_rate,
    x_error,
    yield_n,
    z_error,
)
from .security import (
    BellDiagonal,
    FockCoefficients,
    conditional_weights,
    eve_bound_gap,
    eve_information,
    fock_coefficients,
    phase_error,
    sample_bell_diagonal,
)
from .sweeps import (
    CrossingResult,
    CurvePoint,
    IntensityOptimum,
    MaxDistanceResult,
    dark_count_sweep,
    find_plob_crossing,
    max_distance,
    optimize_intensity,
    rate_curve,
)

__version__ = "0.1.0"
