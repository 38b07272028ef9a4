"""Finite-blocklength throughput and achievable-rate tools for the two-user
uplink with rate splitting, successive decoding and time sharing."""

from .config import ConfigError, ScenarioConfig, default_config_path, load_config
from .explorer import (
    CirclePolicy,
    FrontierPoint,
    RegionSpec,
    SweepResult,
    TimeShareResult,
    capacity_caps,
    pentagon_radius,
    rate_pair,
    rate_region,
    throughput_sweep,
    time_sharing_throughput,
)
from .fbl import FblParams, dispersion, fbl_rate, q_function, q_inverse, stream_error_prob
from .mac import (
    ChannelState,
    DecodeOrder,
    ErrorBreakdown,
    EvalResult,
    PowerAllocation,
    RateTarget,
    Scheme,
    evaluate,
)
from .oracle import GridSpec, OracleResult, grid_min_max_error, grid_optimize, refine
from .sca import (
    BetaCandidate,
    InfeasibleTargetError,
    OptimizeResult,
    ScaConfig,
    optimize_beta,
    optimize_scheme,
)
from .service import create_app

__version__ = "0.1.0"

__all__ = [
    "BetaCandidate",
    "ChannelState",
    "CirclePolicy",
    "ConfigError",
    "DecodeOrder",
    "ErrorBreakdown",
    "EvalResult",
    "FblParams",
    "FrontierPoint",
    "GridSpec",
    "InfeasibleTargetError",
    "OptimizeResult",
    "OracleResult",
    "PowerAllocation",
    "RateTarget",
    "RegionSpec",
    "ScaConfig",
    "ScenarioConfig",
    "Scheme",
    "SweepResult",
    "TimeShareResult",
    "capacity_caps",
    "create_app",
    "default_config_path",
    "dispersion",
    "evaluate",
    "fbl_rate",
    "grid_min_max_error",
    "grid_optimize",
    "load_config",
    "optimize_beta",
    "optimize_scheme",
    "pentagon_radius",
    "q_function",
    "q_inverse",
    "rate_pair",
    "rate_region",
    "refine",
    "stream_error_prob",
    "throughput_sweep",
    "time_sharing_throughput",
    "__version__",
]
