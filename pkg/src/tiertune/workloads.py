"""Abstract workload profiles and how a page-allocation ratio maps to traffic.

A WorkloadProfile reduces an application to the handful of knobs that matter
for a two-tier bandwidth/latency model: how often it misses to memory, how
much latency it can overlap, and how its instruction stream converts to
application-level operations.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class WorkloadProfile:
    name: str
    threads: int
    cpi_base: float  # cycles/instruction for non-memory work
    miss_per_instruction: float  # accesses reaching memory per instruction
    read_fraction: float  # fraction of memory accesses that are reads
    mlp: float  # memory-level parallelism; divides the latency penalty
    line_size: int = 64  # bytes per memory access
    instructions_per_op: float = 1.0  # converts instruction rate to ops/s

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError(f"{self.name}: threads must be >= 1")
        if self.cpi_base <= 0.0:
            raise ValueError(f"{self.name}: cpi_base must be > 0")
        if self.miss_per_instruction < 0.0:
            raise ValueError(f"{self.name}: miss_per_instruction must be >= 0")
        if not 0.0 <= self.read_fraction <= 1.0:
            raise ValueError(f"{self.name}: read_fraction must lie in [0, 1]")
        if self.mlp < 1.0:
            raise ValueError(f"{self.name}: mlp must be >= 1")
        if self.line_size <= 0:
            raise ValueError(f"{self.name}: line_size must be > 0")
        if self.instructions_per_op <= 0.0:
            raise ValueError(f"{self.name}: instructions_per_op must be > 0")

    @property
    def bytes_per_instruction(self) -> float:
        return self.miss_per_instruction * self.line_size


def traffic_split(ratio: float) -> tuple[float, float]:
    """(ddr_share, cxl_share) of memory traffic for a percent-to-CXL ratio.

    Pages are spread by the interleaver and accessed uniformly, so traffic
    follows placement exactly.
    """
    if not 0.0 <= ratio <= 100.0:
        raise ValueError(f"ratio {ratio} outside [0, 100]")
    cxl_share = ratio / 100.0
    return 1.0 - cxl_share, cxl_share


def builtin_profiles() -> list[WorkloadProfile]:
    """Workload profiles shipped with the default configuration."""
    from . import config

    return list(config.default_config().workloads.values())
