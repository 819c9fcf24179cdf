"""Decoy-state security analysis for reference-frame-independent QKD.

A numpy library covering the full pipeline: single-photon information
bounds, an analytic channel model plus a per-round Monte Carlo simulator
with ground-truth bookkeeping, decoy-state bounds on the single-photon
yield/error/quality parameters, finite-key corrections, and sweep
orchestration with CSV/JSON artifacts.
"""

from .channel import (
    ChannelModel,
    DEFAULT_VISIBILITY,
    DriftProcess,
    GroundTruth,
    IncompleteStatisticsError,
    ObservedStatistics,
    analytic_qber,
    analytic_statistics,
    analytic_yield,
    calibrate_visibility,
    normalize_flip_convention,
    qber_histogram,
    simulate_rounds,
)
from .config import ConfigError, RunConfig, default_toml, load_config
from .core import (
    ALL_PAIRS,
    Basis,
    BasisPair,
    CorrelationSet,
    ESTIMATION_PAIRS,
    Intensity,
    KEY_PAIR,
    ProtocolConfig,
    binary_entropy,
    error_rate_from_expectation,
    quality_parameter,
    rotated_expectations,
    single_photon_eve_information,
    single_photon_key_rate,
    wrap_angle,
)
from .decoy import (
    DecoyBounds,
    PAIR_ERROR_SUM_MAX,
    RatePoint,
    aligned_pair_qbers,
    asymptotic_rate,
    c1_lower_bound,
    c1_method1,
    c1_method2,
    e1xy_lower_bound,
    e1zz_upper_bound,
    estimate_bounds,
    estimate_frame_angle,
    eve_information_decoy,
    y1_lower_bound,
)
from .finitekey import (
    CorrectedErrorRates,
    FiniteKeyContext,
    FiniteRatePoint,
    corrected_statistics,
    delta,
    finite_key_rate,
)
from .sweeps import (
    RateCurveRow,
    RateReport,
    ValidationReport,
    read_rate_csv,
    run_finite_sweep,
    run_oracle_validation,
    run_qber_histogram,
    run_rate_curve,
    write_json_report,
    write_rate_csv,
)

__version__ = "0.1.0"
