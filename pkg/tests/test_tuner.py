import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tiertune.allocator import PageMap, weighted_interleave
from tiertune.estimator import SampleWindow
from tiertune.tuner import (
    CurveEnv,
    TunerState,
    fresh_state,
    identity_model,
    oracle_ratio,
    run_loop,
    tune_step,
)


def bare_state(prev_state, prev_step, prev_ratio):
    """Listing semantics only: dead band and reset disabled."""
    return TunerState(
        prev_state=prev_state,
        prev_step=prev_step,
        prev_ratio=prev_ratio,
        dead_band=0.0,
        reset_threshold=math.inf,
    )


class TestTuneStep:
    def test_decline_reverses_at_half_magnitude(self):
        state, ratio = tune_step(bare_state(1.0, 20.0, 50.0), 0.9)
        assert state.prev_step == -10.0
        assert ratio == 40.0

    def test_improvement_holds_direction_and_clamps(self):
        state, ratio = tune_step(bare_state(1.0, 10.0, 95.0), 1.1)
        assert state.prev_step == 10.0
        assert ratio == 100.0

    def test_reversal_floors_at_min_step(self):
        state, ratio = tune_step(bare_state(1.0, 10.0, 50.0), 0.9)
        assert state.prev_step == -9.0
        assert ratio == 41.0

    def test_clamp_low(self):
        state, ratio = tune_step(bare_state(1.0, -18.0, 5.0), 1.2)
        assert ratio == 0.0

    def test_equal_state_holds_direction(self):
        state, ratio = tune_step(bare_state(1.0, -9.0, 50.0), 1.0)
        assert state.prev_step == -9.0
        assert ratio == 41.0

    def test_first_observation_keeps_initial_step(self):
        state, ratio = tune_step(fresh_state(50.0), 0.123)
        assert ratio == 68.0
        assert state.prev_state == 0.123

    def test_commit_guard_retains_previous_triple(self):
        before = bare_state(1.0, 20.0, 50.0)
        after, ratio = tune_step(before, 0.9, new_allocations=False)
        assert after == before  # nothing committed
        assert ratio == 40.0  # but the ratio is still applied

    def test_commit_updates_triple(self):
        after, ratio = tune_step(bare_state(1.0, 20.0, 50.0), 0.9, new_allocations=True)
        assert (after.prev_state, after.prev_step, after.prev_ratio) == (0.9, -10.0, 40.0)

    def test_dead_band_swallows_small_decline(self):
        state = TunerState(
            prev_state=1.0, prev_step=10.0, prev_ratio=50.0,
            dead_band=0.01, reset_threshold=math.inf,
        )
        after, ratio = tune_step(state, 0.995)  # 0.5% drop: inside the band
        assert after.prev_step == 10.0
        assert ratio == 60.0

    def test_decline_beyond_dead_band_reverses(self):
        state = TunerState(
            prev_state=1.0, prev_step=10.0, prev_ratio=50.0,
            dead_band=0.01, reset_threshold=math.inf,
        )
        after, _ = tune_step(state, 0.9)
        assert after.prev_step == -9.0

    def test_reset_expands_step_preserving_direction(self):
        state = TunerState(
            prev_state=1.0, prev_step=9.0, prev_ratio=50.0,
            dead_band=0.0, reset_threshold=0.5,
        )
        # collapse: reversal direction,但 magnitude back to the initial step
        after, ratio = tune_step(state, 0.2)
        assert after.prev_step == -18.0
        assert ratio == 32.0
        # surge: direction held, magnitude re-expanded
        after, ratio = tune_step(state, 2.0)
        assert after.prev_step == 18.0
        assert ratio == 68.0

    def test_non_finite_estimate_rejected(self):
        with pytest.raises(ValueError):
            tune_step(fresh_state(50.0), math.nan)

    @given(
        st.floats(-100.0, 100.0),
        st.lists(st.floats(0.0, 4.0), min_size=1, max_size=40),
    )
    def test_invariants_over_random_sequences(self, start_step, estimates):
        step = math.copysign(max(abs(start_step), 9.0), start_step if start_step else 1.0)
        state = bare_state(None, step, 50.0)
        for est in estimates:
            prev = state.prev_state
            prev_step = state.prev_step
            state, ratio = tune_step(state, est)
            assert 0.0 <= ratio <= 100.0
            assert abs(state.prev_step) >= state.min_step_magnitude
            if prev is not None and est < prev:
                assert state.prev_step * prev_step < 0  # reversal on decline
            elif prev is not None:
                assert state.prev_step * prev_step > 0  # hold otherwise


class TestRunLoop:
    def test_flat_surface_stays_in_bounds(self):
        env = CurveEnv(lambda r: 1.0)
        res = run_loop(
            env, weighted_interleave(50), identity_model(), SampleWindow(1), 40,
            state=fresh_state(50.0),
        )
        assert all(0.0 <= row.ratio <= 100.0 for row in res.rows)
        assert 0.0 <= res.final_ratio <= 100.0

    def test_converges_to_quadratic_peak(self):
        env = CurveEnv(lambda r: 1.0 - 8e-5 * (r - 31.0) ** 2)
        res = run_loop(
            env, weighted_interleave(50), identity_model(), SampleWindow(1), 50,
            state=fresh_state(50.0, dead_band=0.0, reset_threshold=math.inf),
        )
        assert abs(res.final_ratio - 31.0) <= 18.0

    def test_latency_bound_curve_walks_to_ddr(self):
        env = CurveEnv(lambda r: 1.0 - 0.003 * r)
        res = run_loop(
            env, weighted_interleave(50), identity_model(), SampleWindow(1), 50,
            state=fresh_state(50.0),
        )
        assert res.final_ratio < 50.0

    def test_no_allocations_freezes_the_walk(self):
        env = CurveEnv(lambda r: 1.0 + 0.001 * r)
        res = run_loop(
            env, weighted_interleave(50), identity_model(), SampleWindow(1), 10,
            state=fresh_state(50.0), new_allocations=lambda i: False,
        )
        # the uncommitted controller re-applies the same move every interval
        assert [row.ratio for row in res.rows] == [50.0] + [68.0] * 9
        assert res.final_state.prev_state is None

    def test_page_map_tracks_allocations(self):
        env = CurveEnv(lambda r: 1.0)
        page_map = PageMap()
        res = run_loop(
            env, weighted_interleave(50), identity_model(), SampleWindow(1), 10,
            state=fresh_state(50.0), page_map=page_map, pages_per_interval=100,
        )
        assert page_map.total_pages == 1000
        mean_ratio = np.mean([row.ratio for row in res.rows])
        assert abs(page_map.cxl_pages / 10.0 - mean_ratio) <= 10.0

    def test_log_columns_are_complete(self):
        env = CurveEnv(lambda r: 2.0)
        res = run_loop(
            env, weighted_interleave(40), identity_model(), SampleWindow(1), 3,
            state=fresh_state(40.0),
        )
        row = res.rows[0]
        assert row.interval == 0
        assert row.ratio == 40.0
        assert row.estimate == pytest.approx(2.0)
        assert row.true_throughput == pytest.approx(2.0)

    def test_requires_interleave_policy(self):
        from tiertune.allocator import membind

        with pytest.raises(ValueError):
            run_loop(
                CurveEnv(lambda r: 1.0), membind("ddr"), identity_model(),
                SampleWindow(1), 5,
            )


class TestOracleRatio:
    def test_tie_breaks_to_lowest(self):
        assert oracle_ratio([1.0] * 101) == (0, 1.0)

    def test_finds_interior_max(self):
        values = [1.0 - 1e-4 * (r - 63) ** 2 for r in range(101)]
        assert oracle_ratio(values) == (63, 1.0)
