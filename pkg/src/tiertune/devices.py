"""Memory device models: idle latency plus load-dependent latency and bandwidth.

A device is characterized by its unloaded read/write latencies, the
theoretical channel bandwidth, and an efficiency table mapping the read
fraction of the offered traffic to the deliverable fraction of that
theoretical bandwidth.  Loaded latency follows an M/M/1-flavored blow-up
shaped by a per-device contention exponent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Utilization clamp inside the latency curve. Demand beyond this point is the
# steady-state solver's problem (it scales rates down), not the device's.
RHO_MAX = 0.999


@dataclass(frozen=True)
class DeviceProfile:
    """Latency/bandwidth characterization of one memory device.

    efficiency_table holds (read_fraction, efficiency) anchor points with
    strictly increasing read fractions; deliverable bandwidth between anchors
    is linearly interpolated and clamped to the nearest anchor outside them.
    """

    name: str
    idle_read_latency_ns: float
    idle_write_latency_ns: float
    theoretical_bandwidth: float  # bytes/s
    efficiency_table: tuple[tuple[float, float], ...]
    contention_exponent: float = 2.0

    def __post_init__(self) -> None:
        if self.idle_read_latency_ns <= 0.0:
            raise ValueError(f"{self.name}: idle_read_latency must be > 0")
        if self.idle_write_latency_ns <= 0.0:
            raise ValueError(f"{self.name}: idle_write_latency must be > 0")
        if self.theoretical_bandwidth <= 0.0:
            raise ValueError(f"{self.name}: theoretical_bandwidth must be > 0")
        if self.contention_exponent <= 0.0:
            raise ValueError(f"{self.name}: contention_exponent must be > 0")
        table = tuple((float(f), float(e)) for f, e in self.efficiency_table)
        object.__setattr__(self, "efficiency_table", table)
        if len(table) < 2:
            raise ValueError(f"{self.name}: efficiency_table needs >= 2 anchors")
        fracs = [f for f, _ in table]
        if any(b <= a for a, b in zip(fracs, fracs[1:])):
            raise ValueError(f"{self.name}: read fractions must be strictly increasing")
        if any(not (0.0 <= f <= 1.0) for f in fracs):
            raise ValueError(f"{self.name}: read fractions must lie in [0, 1]")
        if any(not (0.0 < e <= 1.0) for _, e in table):
            raise ValueError(f"{self.name}: efficiencies must lie in (0, 1]")

    def blended_idle_latency_ns(self, read_fraction: float) -> float:
        f = float(read_fraction)
        return f * self.idle_read_latency_ns + (1.0 - f) * self.idle_write_latency_ns


def effective_bandwidth(profile: DeviceProfile, read_fraction: float) -> float:
    """Deliverable bandwidth (bytes/s) for traffic with the given read fraction."""
    if not 0.0 <= read_fraction <= 1.0:
        raise ValueError(f"read_fraction {read_fraction} outside [0, 1]")
    fracs = [f for f, _ in profile.efficiency_table]
    effs = [e for _, e in profile.efficiency_table]
    # np.interp clamps to the end anchors outside the table's range.
    eff = float(np.interp(read_fraction, fracs, effs))
    return profile.theoretical_bandwidth * eff


def congestion_multiplier(
    profile: DeviceProfile, offered_bandwidth: float, read_fraction: float
) -> float:
    """Latency inflation factor at the given load; 1.0 at zero load."""
    if offered_bandwidth < 0.0:
        raise ValueError("offered_bandwidth must be >= 0")
    capacity = effective_bandwidth(profile, read_fraction)
    rho = min(max(offered_bandwidth / capacity, 0.0), RHO_MAX)
    k = profile.contention_exponent
    return 1.0 + rho**k * rho / (1.0 - rho)


def loaded_latency(
    profile: DeviceProfile, offered_bandwidth: float, read_fraction: float
) -> float:
    """Average access latency (ns) under load.

    Blends the idle read/write latencies by the traffic's read fraction and
    inflates the blend by the congestion multiplier.  Equals the blended idle
    latency exactly at zero offered bandwidth and is monotone non-decreasing
    in offered bandwidth.
    """
    idle = profile.blended_idle_latency_ns(read_fraction)
    return idle * congestion_multiplier(profile, offered_bandwidth, read_fraction)
