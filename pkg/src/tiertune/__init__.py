"""tiertune: analytic DDR+CXL tiered-memory simulator and ratio tuner."""

from .allocator import (
    AllocationPolicy,
    PageMap,
    allocate_pages,
    membind,
    preferred,
    set_ratio,
    weighted_interleave,
)
from .config import Config, ConfigError, Scenario, default_config, load_config
from .devices import DeviceProfile, effective_bandwidth, loaded_latency
from .estimator import (
    ModelCoefficients,
    SampleWindow,
    estimate,
    fit_ols,
    moving_average,
    pearson,
)
from .simulator import (
    CounterSample,
    Simulation,
    SteadyState,
    SystemConfig,
    solve_steady_state,
    throughput_metric,
)
from .tuner import RunResult, TunerState, TuneRow, fresh_state, run_loop, tune_step
from .workloads import WorkloadProfile, builtin_profiles, traffic_split

__version__ = "0.1.0"

__all__ = [
    "AllocationPolicy",
    "Config",
    "ConfigError",
    "CounterSample",
    "DeviceProfile",
    "ModelCoefficients",
    "PageMap",
    "RunResult",
    "SampleWindow",
    "Scenario",
    "Simulation",
    "SteadyState",
    "SystemConfig",
    "TuneRow",
    "TunerState",
    "WorkloadProfile",
    "allocate_pages",
    "builtin_profiles",
    "default_config",
    "effective_bandwidth",
    "estimate",
    "fit_ols",
    "fresh_state",
    "load_config",
    "loaded_latency",
    "membind",
    "moving_average",
    "pearson",
    "preferred",
    "run_loop",
    "set_ratio",
    "solve_steady_state",
    "throughput_metric",
    "traffic_split",
    "tune_step",
    "weighted_interleave",
    "__version__",
]
