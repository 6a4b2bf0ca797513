"""Closed-loop analytic steady-state model of a two-tier memory system.

Given workload profiles, the two device profiles, and a percent-to-CXL page
ratio, the solver finds the self-consistent operating point: instruction
rates determine memory traffic, traffic determines loaded latencies, and
loaded latencies feed back into instruction rates through a CPI model with a
memory-level-parallelism divisor.  A stepping wrapper turns the solution
into the telemetry stream the tuner consumes, optionally perturbed by
seeded multiplicative noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .devices import RHO_MAX, DeviceProfile, congestion_multiplier, effective_bandwidth
from .workloads import WorkloadProfile, traffic_split

CONVERGENCE_TOL = 1e-9  # internal target for the fixed point
RESIDUAL_LIMIT = 1e-6  # contract: converged states sit below this
MAX_ITERATIONS = 1000


class SteadyStateError(RuntimeError):
    """Fixed-point search failed; carries the last iterate for diagnosis."""

    def __init__(self, message: str, last_latencies: Sequence[float], residual: float):
        super().__init__(f"{message} (residual {residual:.3e}, latencies {last_latencies})")
        self.last_latencies = tuple(last_latencies)
        self.residual = residual


@dataclass(frozen=True)
class SystemConfig:
    ddr: DeviceProfile
    cxl: DeviceProfile
    cpu_frequency: float = 2.1e9  # Hz
    noise_sigma: float = 0.0  # relative std-dev of counter noise
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.cpu_frequency <= 0.0:
            raise ValueError("cpu_frequency must be > 0")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class SteadyState:
    """Converged operating point for one (workloads, config, ratio) triple."""

    instruction_rates: tuple[float, ...]  # per workload, instructions/s
    op_rates: tuple[float, ...]  # per workload, ops/s
    workload_latencies: tuple[float, ...]  # per workload, ns per memory access
    device_bandwidths: tuple[float, float]  # (ddr, cxl) offered bytes/s
    avg_latency_ns: float
    ddr_read_latency_ns: float
    ipc: float
    residual: float
    iterations: int


@dataclass(frozen=True)
class CounterSample:
    """One monitoring interval's telemetry."""

    l1_miss_latency: float  # ns
    ddr_read_latency: float  # ns
    ipc: float
    total_bandwidth: float  # bytes/s
    timestamp: float  # seconds of simulated time


def _cpi(w: WorkloadProfile, latency_ns: float, frequency: float) -> float:
    latency_cycles = latency_ns * frequency * 1e-9
    return w.cpi_base + w.miss_per_instruction * latency_cycles / w.mlp


class _Model:
    """Fixed-point map shared by the damped iteration and the bisection."""

    def __init__(
        self, workloads: Sequence[WorkloadProfile], config: SystemConfig, ratio: float
    ):
        self.workloads = list(workloads)
        self.config = config
        self.shares = traffic_split(ratio)
        self.devices = (config.ddr, config.cxl)
        self.idle = [
            tuple(d.blended_idle_latency_ns(w.read_fraction) for d in self.devices)
            for w in self.workloads
        ]

    def rates(self, latencies: Sequence[float]) -> list[float]:
        return [
            w.threads * self.config.cpu_frequency / _cpi(w, lat, self.config.cpu_frequency)
            for w, lat in zip(self.workloads, latencies)
        ]

    def read_fraction(self, rates: Sequence[float]) -> float:
        weights = [r * w.bytes_per_instruction for r, w in zip(rates, self.workloads)]
        total = sum(weights)
        if total <= 0.0:
            return sum(w.read_fraction for w in self.workloads) / len(self.workloads)
        return sum(wt * w.read_fraction for wt, w in zip(weights, self.workloads)) / total

    def apply(self, latencies: Sequence[float]):
        """One application of the map: latencies -> (new latencies, operating point)."""
        rates = self.rates(latencies)
        f_agg = self.read_fraction(rates)
        total = sum(r * w.bytes_per_instruction for r, w in zip(rates, self.workloads))
        caps = [effective_bandwidth(d, f_agg) for d in self.devices]
        # Uniform rate scaling: bring the binding device back to RHO_MAX.
        scale = 1.0
        for share, cap in zip(self.shares, caps):
            offered = total * share
            if offered > RHO_MAX * cap:
                scale = min(scale, RHO_MAX * cap / offered)
        rates = [r * scale for r in rates]
        total *= scale
        bandwidths = tuple(total * share for share in self.shares)
        mult = [
            congestion_multiplier(d, b, f_agg)
            for d, b in zip(self.devices, bandwidths)
        ]
        new_latencies = [
            sum(s * idle_d * m for s, idle_d, m in zip(self.shares, self.idle[i], mult))
            for i in range(len(self.workloads))
        ]
        return new_latencies, rates, bandwidths, mult, f_agg

    def idle_latencies(self) -> list[float]:
        return [
            sum(s * idle_d for s, idle_d in zip(self.shares, idle_w))
            for idle_w in self.idle
        ]


def _residual(new: Sequence[float], old: Sequence[float]) -> float:
    return max(abs(n - o) / max(abs(o), 1e-30) for n, o in zip(new, old))


def _bisect_traffic(model: _Model) -> list[float]:
    """Robust fallback: root-find on total traffic instead of iterating.

    Total offered traffic is the one scalar everything else hangs off, and
    the demand response to it is strictly decreasing, so bisection cannot
    miss.  The aggregate read fraction is refined in a short outer loop.
    """
    idle_lat = model.idle_latencies()
    f_agg = model.read_fraction(model.rates(idle_lat))

    def latencies_at(traffic: float, f: float) -> list[float]:
        mult = [
            congestion_multiplier(d, traffic * s, f)
            for d, s in zip(model.devices, model.shares)
        ]
        return [
            sum(s * idle_d * m for s, idle_d, m in zip(model.shares, idle_w, mult))
            for idle_w in model.idle
        ]

    def demand_at(traffic: float, f: float) -> float:
        rates = model.rates(latencies_at(traffic, f))
        return sum(r * w.bytes_per_instruction for r, w in zip(rates, model.workloads))

    latencies = idle_lat
    for _ in range(6):
        caps = [effective_bandwidth(d, f_agg) for d in model.devices]
        limits = [
            RHO_MAX * cap / share
            for cap, share in zip(caps, model.shares)
            if share > 0.0
        ]
        t_cap = min(limits)
        if demand_at(0.0, f_agg) <= 0.0:
            latencies = latencies_at(0.0, f_agg)
            break
        if demand_at(t_cap, f_agg) >= t_cap:
            # Saturated: even at the clamp the workloads want more traffic.
            latencies = latencies_at(t_cap, f_agg)
        else:
            lo, hi = 0.0, t_cap
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                if demand_at(mid, f_agg) > mid:
                    lo = mid
                else:
                    hi = mid
            latencies = latencies_at(0.5 * (lo + hi), f_agg)
        f_new = model.read_fraction(model.rates(latencies))
        if abs(f_new - f_agg) < 1e-12:
            f_agg = f_new
            break
        f_agg = f_new
    return latencies


def solve_steady_state(
    workloads: Sequence[WorkloadProfile], config: SystemConfig, ratio: float
) -> SteadyState:
    """Find the self-consistent operating point at the given ratio.

    Damped fixed-point iteration on the per-workload average memory latency;
    the damping factor adapts downward if the iterates oscillate (which
    happens near device saturation, where the latency response is steep).
    A scalar bisection on total traffic serves as a fallback.
    """
    if not workloads:
        raise ValueError("at least one workload required")
    model = _Model(workloads, config, ratio)
    latencies = model.idle_latencies()
    damping = 0.5
    residual = math.inf
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        new_latencies, *_ = model.apply(latencies)
        prev_residual = residual
        residual = _residual(new_latencies, latencies)
        if residual < CONVERGENCE_TOL:
            latencies = new_latencies
            break
        if residual >= prev_residual:
            damping = max(damping * 0.5, 1.0 / 1024.0)
        latencies = [
            (1.0 - damping) * old + damping * new
            for old, new in zip(latencies, new_latencies)
        ]
        if iterations == 400:
            # Damped iteration is struggling; switch to the robust path.
            latencies = _bisect_traffic(model)
            new_latencies, *_ = model.apply(latencies)
            residual = _residual(new_latencies, latencies)
            latencies = new_latencies
            break

    new_latencies, rates, bandwidths, mult, _ = model.apply(latencies)
    residual = _residual(new_latencies, latencies)
    if residual > RESIDUAL_LIMIT:
        raise SteadyStateError(
            "steady-state solver did not converge", latencies, residual
        )

    miss_weights = [r * w.miss_per_instruction for r, w in zip(rates, workloads)]
    total_misses = sum(miss_weights)
    if total_misses > 0.0:
        avg_latency = (
            sum(wt * lat for wt, lat in zip(miss_weights, new_latencies)) / total_misses
        )
    else:
        avg_latency = sum(new_latencies) / len(new_latencies)
    total_threads = sum(w.threads for w in workloads)
    return SteadyState(
        instruction_rates=tuple(rates),
        op_rates=tuple(r / w.instructions_per_op for r, w in zip(rates, workloads)),
        workload_latencies=tuple(new_latencies),
        device_bandwidths=(bandwidths[0], bandwidths[1]),
        avg_latency_ns=avg_latency,
        ddr_read_latency_ns=config.ddr.idle_read_latency_ns * mult[0],
        ipc=sum(rates) / (config.cpu_frequency * total_threads),
        residual=residual,
        iterations=iterations,
    )


def throughput_metric(steady: SteadyState, baselines: Sequence[float]) -> float:
    """Normalized throughput: per-workload ops/s against the ratio-0 baseline.

    A single workload reduces to plain normalization; a mix is summarized by
    the geometric mean of the per-workload normalized values.
    """
    if len(baselines) != len(steady.op_rates):
        raise ValueError("one baseline per workload required")
    if any(b <= 0.0 for b in baselines):
        raise ValueError("baselines must be positive")
    normalized = [op / base for op, base in zip(steady.op_rates, baselines)]
    return float(np.exp(np.mean(np.log(normalized))))


class Simulation:
    """Single-owner stepping clock over the analytic model.

    Each step advances simulated time by one sampling period, solves the
    steady state at the requested ratio, and emits a counter sample with
    independent multiplicative Gaussian noise per field (deterministic for a
    given seed).  Noise-free solutions are cached per ratio, as is the
    ratio-0 baseline used for normalized throughput.
    """

    def __init__(
        self,
        workloads: Sequence[WorkloadProfile],
        config: SystemConfig,
        sampling_period_s: float = 1.0,
    ):
        if sampling_period_s <= 0.0:
            raise ValueError("sampling_period_s must be > 0")
        self.workloads = list(workloads)
        self.config = config
        self.sampling_period_s = sampling_period_s
        self.clock_s = 0.0
        self._rng = np.random.default_rng(config.rng_seed)
        self._solutions: dict[float, SteadyState] = {}
        self._baselines: tuple[float, ...] | None = None

    def solve(self, ratio: float) -> SteadyState:
        key = float(ratio)
        if key not in self._solutions:
            self._solutions[key] = solve_steady_state(self.workloads, self.config, key)
        return self._solutions[key]

    def baselines(self) -> tuple[float, ...]:
        if self._baselines is None:
            self._baselines = self.solve(0.0).op_rates
        return self._baselines

    def true_throughput(self, ratio: float) -> float:
        return throughput_metric(self.solve(ratio), self.baselines())

    def step_interval(self, ratio: float) -> CounterSample:
        steady = self.solve(ratio)
        self.clock_s += self.sampling_period_s
        noise = self._rng.normal(1.0, self.config.noise_sigma, size=4)
        noise = np.maximum(noise, 0.0)  # counters cannot go negative
        return CounterSample(
            l1_miss_latency=steady.avg_latency_ns * noise[0],
            ddr_read_latency=steady.ddr_read_latency_ns * noise[1],
            ipc=steady.ipc * noise[2],
            total_bandwidth=sum(steady.device_bandwidths) * noise[3],
            timestamp=self.clock_s,
        )
