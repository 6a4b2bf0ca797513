"""Greedy step-halving controller for the page-allocation ratio.

The controller holds direction while the performance estimate improves,
reverses at half magnitude when it declines (never below a minimum step),
and clamps the resulting ratio to [0, 100].  Two guard mechanisms sit on
top: a dead band that ignores sub-threshold fluctuation, and a reset that
re-expands the step after a sudden large shift.  Both can be disabled,
leaving the bare listing semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from . import allocator
from .estimator import ModelCoefficients, SampleWindow, estimate, moving_average
from .simulator import CounterSample

_TINY = 1e-12


@dataclass(frozen=True)
class TunerState:
    """Controller state carried between tuning intervals.

    prev_* fields commit only on intervals that saw new allocations; until
    then the previous triple is retained and re-used for comparisons.
    """

    prev_state: float | None = None  # last committed performance estimate
    prev_step: float = 18.0  # signed percent step
    prev_ratio: float = 50.0  # percent of pages to CXL
    min_step_magnitude: float = 9.0
    initial_step: float = 18.0
    tune_interval_s: float = 1.0
    dead_band: float = 0.01  # relative; 0 disables
    reset_threshold: float = 0.5  # relative; math.inf disables

    def __post_init__(self) -> None:
        if not 0.0 <= self.prev_ratio <= 100.0:
            raise ValueError("prev_ratio must lie in [0, 100]")
        if self.min_step_magnitude <= 0.0:
            raise ValueError("min_step_magnitude must be > 0")
        if abs(self.prev_step) < self.min_step_magnitude:
            raise ValueError("|prev_step| must be >= min_step_magnitude")
        if abs(self.initial_step) < self.min_step_magnitude:
            raise ValueError("|initial_step| must be >= min_step_magnitude")
        if self.dead_band < 0.0 or self.reset_threshold < 0.0:
            raise ValueError("dead_band and reset_threshold must be >= 0")


def fresh_state(
    start_ratio: float = 50.0,
    *,
    min_step_magnitude: float = 9.0,
    initial_step: float = 18.0,
    dead_band: float = 0.01,
    reset_threshold: float = 0.5,
) -> TunerState:
    return TunerState(
        prev_state=None,
        prev_step=initial_step,
        prev_ratio=start_ratio,
        min_step_magnitude=min_step_magnitude,
        initial_step=initial_step,
        dead_band=dead_band,
        reset_threshold=reset_threshold,
    )


def tune_step(
    state: TunerState, curr_state: float, new_allocations: bool = True
) -> tuple[TunerState, float]:
    """One controller decision; returns (state to carry, ratio to apply).

    The returned ratio is always applied to the allocation policy; the state
    commit is gated on new_allocations, matching a tuner that only learns
    from intervals whose allocations its previous decision actually shaped.
    """
    if not math.isfinite(curr_state):
        raise ValueError("curr_state must be finite")
    step = state.prev_step
    if state.prev_state is not None:
        rel_change = abs(curr_state - state.prev_state) / max(
            abs(state.prev_state), _TINY
        )
        if rel_change < state.dead_band:
            pass  # within the dead band: treated as equal, direction held
        elif curr_state < state.prev_state:
            step = state.prev_step * -0.5
            if abs(step) < state.min_step_magnitude:
                step = math.copysign(state.min_step_magnitude, step)
        if rel_change > state.reset_threshold:
            step = math.copysign(abs(state.initial_step), step)
    ratio = min(max(state.prev_ratio + step, 0.0), 100.0)
    assert abs(step) >= state.min_step_magnitude
    if new_allocations:
        state = replace(state, prev_state=curr_state, prev_step=step, prev_ratio=ratio)
    return state, ratio


@dataclass(frozen=True)
class TuneRow:
    """One interval of a tuning run, as logged to CSV."""

    interval: int
    ratio: float  # ratio the interval ran at
    l1_miss_latency: float
    ddr_read_latency: float
    ipc: float
    total_bandwidth: float
    estimate: float
    true_throughput: float


@dataclass(frozen=True)
class RunResult:
    rows: tuple[TuneRow, ...]
    final_ratio: float  # ratio in effect after the last interval
    final_state: TunerState


def run_loop(
    sim,
    policy: allocator.AllocationPolicy,
    model: ModelCoefficients,
    window: SampleWindow,
    intervals: int,
    *,
    state: TunerState | None = None,
    page_map: allocator.PageMap | None = None,
    pages_per_interval: int = 0,
    new_allocations: Callable[[int], bool] | None = None,
) -> RunResult:
    """Closed control loop over a simulation handle.

    Per interval: sample counters at the current ratio, smooth, estimate,
    tune, and apply the new ratio through the allocation policy.  `sim` must
    provide step_interval(ratio) -> CounterSample and
    true_throughput(ratio) -> float.
    """
    if intervals < 1:
        raise ValueError("intervals must be >= 1")
    if policy.mode != allocator.WEIGHTED_INTERLEAVE:
        raise ValueError("run_loop tunes a weighted_interleave policy")
    if state is None:
        state = fresh_state(policy.ratio)
    rows = []
    for interval in range(intervals):
        ratio = float(policy.ratio)
        sample = sim.step_interval(ratio)
        window.push(sample)
        smoothed = moving_average(window)
        curr = estimate(model, smoothed)
        if page_map is not None and pages_per_interval > 0:
            page_map.allocate(policy, pages_per_interval)
        allocated = (
            new_allocations(interval) if new_allocations is not None else True
        )
        state, new_ratio = tune_step(state, curr, allocated)
        policy = allocator.set_ratio(policy, new_ratio)
        assert 0 <= policy.ratio <= 100
        rows.append(
            TuneRow(
                interval=interval,
                ratio=ratio,
                l1_miss_latency=sample.l1_miss_latency,
                ddr_read_latency=sample.ddr_read_latency,
                ipc=sample.ipc,
                total_bandwidth=sample.total_bandwidth,
                estimate=curr,
                true_throughput=sim.true_throughput(ratio),
            )
        )
    return RunResult(rows=tuple(rows), final_ratio=float(policy.ratio), final_state=state)


def identity_model() -> ModelCoefficients:
    """Model that reads the throughput-like field straight through.

    Useful when driving the loop against synthetic curves where the sample's
    ipc field carries the quantity being maximized.
    """
    return ModelCoefficients(beta0=0.0, betas=(1.0,), feature_names=("ipc",))


class CurveEnv:
    """Minimal environment exposing a ratio -> value curve to run_loop."""

    def __init__(self, curve: Callable[[float], float]):
        self.curve = curve
        self.clock = 0

    def step_interval(self, ratio: float) -> CounterSample:
        self.clock += 1
        value = float(self.curve(ratio))
        return CounterSample(
            l1_miss_latency=0.0,
            ddr_read_latency=0.0,
            ipc=value,
            total_bandwidth=0.0,
            timestamp=float(self.clock),
        )

    def true_throughput(self, ratio: float) -> float:
        return float(self.curve(ratio))


def oracle_ratio(values: Sequence[float]) -> tuple[int, float]:
    """Brute-force argmax over integer ratios; ties break to the lowest."""
    best_ratio = 0
    best_value = values[0]
    for ratio, value in enumerate(values):
        if value > best_value:
            best_ratio, best_value = ratio, value
    return best_ratio, float(best_value)
