import numpy as np
import pytest
from hypothesis import given, strategies as st

from tiertune.config import default_config
from tiertune.devices import (
    DeviceProfile,
    congestion_multiplier,
    effective_bandwidth,
    loaded_latency,
)


def make_profile(**kwargs):
    defaults = dict(
        name="dev",
        idle_read_latency_ns=100.0,
        idle_write_latency_ns=200.0,
        theoretical_bandwidth=10e9,
        efficiency_table=((0.0, 0.5), (1.0, 0.8)),
        contention_exponent=2.0,
    )
    defaults.update(kwargs)
    return DeviceProfile(**defaults)


@st.composite
def profiles(draw):
    n_anchors = draw(st.integers(2, 4))
    fracs = sorted(
        draw(
            st.lists(
                st.floats(0.0, 1.0),
                min_size=n_anchors,
                max_size=n_anchors,
                unique=True,
            )
        )
    )
    effs = draw(
        st.lists(st.floats(0.05, 1.0), min_size=n_anchors, max_size=n_anchors)
    )
    return make_profile(
        idle_read_latency_ns=draw(st.floats(20.0, 600.0)),
        idle_write_latency_ns=draw(st.floats(20.0, 1500.0)),
        theoretical_bandwidth=draw(st.floats(1e9, 1e11)),
        efficiency_table=tuple(zip(fracs, effs)),
        contention_exponent=draw(st.floats(0.5, 4.0)),
    )


class TestValidation:
    def test_rejects_nonpositive_latency(self):
        with pytest.raises(ValueError):
            make_profile(idle_read_latency_ns=0.0)
        with pytest.raises(ValueError):
            make_profile(idle_write_latency_ns=-1.0)

    def test_rejects_single_anchor(self):
        with pytest.raises(ValueError):
            make_profile(efficiency_table=((0.5, 0.5),))

    def test_rejects_nonincreasing_fractions(self):
        with pytest.raises(ValueError):
            make_profile(efficiency_table=((0.5, 0.5), (0.5, 0.6)))

    def test_rejects_efficiency_outside_unit(self):
        with pytest.raises(ValueError):
            make_profile(efficiency_table=((0.0, 0.0), (1.0, 0.5)))
        with pytest.raises(ValueError):
            make_profile(efficiency_table=((0.0, 0.5), (1.0, 1.2)))

    def test_rejects_nonpositive_exponent(self):
        with pytest.raises(ValueError):
            make_profile(contention_exponent=0.0)


class TestEffectiveBandwidth:
    def test_cxl_a_all_read(self):
        # 38.4 GB/s channel delivering 46% for pure loads.
        cxl_a = default_config().devices["cxl-a"]
        assert effective_bandwidth(cxl_a, 1.0) == pytest.approx(17.664e9)

    def test_remote_ddr_all_read(self):
        # 38.4 GB/s channel delivering 70% for pure loads.
        remote = default_config().devices["ddr5-remote"]
        assert effective_bandwidth(remote, 1.0) == pytest.approx(26.88e9)

    def test_constant_table(self):
        flat = make_profile(efficiency_table=((0.0, 0.6), (1.0, 0.6)))
        assert effective_bandwidth(flat, 0.5) == pytest.approx(10e9 * 0.6)

    def test_interpolates_between_anchors(self):
        dev = make_profile(efficiency_table=((0.0, 0.4), (1.0, 0.8)))
        assert effective_bandwidth(dev, 0.25) == pytest.approx(10e9 * 0.5)

    def test_clamps_outside_table_range(self):
        dev = make_profile(efficiency_table=((0.4, 0.5), (0.6, 0.7)))
        assert effective_bandwidth(dev, 0.0) == pytest.approx(10e9 * 0.5)
        assert effective_bandwidth(dev, 1.0) == pytest.approx(10e9 * 0.7)

    def test_rejects_out_of_range_fraction(self):
        with pytest.raises(ValueError):
            effective_bandwidth(make_profile(), 1.5)

    @given(profiles(), st.floats(0.0, 1.0))
    def test_within_theoretical(self, profile, frac):
        bw = effective_bandwidth(profile, frac)
        assert 0.0 < bw <= profile.theoretical_bandwidth


class TestLoadedLatency:
    def test_zero_load_is_blended_idle(self):
        dev = make_profile()
        assert loaded_latency(dev, 0.0, 1.0) == dev.idle_read_latency_ns
        assert loaded_latency(dev, 0.0, 0.0) == dev.idle_write_latency_ns
        assert loaded_latency(dev, 0.0, 0.25) == pytest.approx(
            0.25 * 100.0 + 0.75 * 200.0
        )

    def test_half_utilization_linear_exponent(self):
        # rho = 0.5 with exponent 1 inflates by 1 + 0.5 * 0.5/0.5 = 1.5.
        dev = make_profile(
            efficiency_table=((0.0, 0.5), (1.0, 0.5)), contention_exponent=1.0
        )
        capacity = effective_bandwidth(dev, 1.0)
        assert loaded_latency(dev, 0.5 * capacity, 1.0) == pytest.approx(150.0)

    def test_higher_load_never_faster(self):
        dev = make_profile()
        capacity = effective_bandwidth(dev, 1.0)
        assert loaded_latency(dev, 0.9 * capacity, 1.0) > loaded_latency(
            dev, 0.5 * capacity, 1.0
        )

    def test_saturated_load_is_clamped(self):
        dev = make_profile()
        capacity = effective_bandwidth(dev, 1.0)
        at_clamp = loaded_latency(dev, 2.0 * capacity, 1.0)
        assert at_clamp == loaded_latency(dev, 10.0 * capacity, 1.0)
        assert np.isfinite(at_clamp)

    @given(profiles(), st.floats(0.0, 1.0), st.floats(0.0, 1e11), st.floats(0.0, 1e11))
    def test_monotone_in_offered_bandwidth(self, profile, frac, bw_a, bw_b):
        lo, hi = sorted((bw_a, bw_b))
        assert loaded_latency(profile, lo, frac) <= loaded_latency(profile, hi, frac)

    @given(profiles(), st.floats(0.0, 1.0))
    def test_multiplier_at_least_one(self, profile, frac):
        assert congestion_multiplier(profile, 0.0, frac) == 1.0
        assert congestion_multiplier(profile, 5e9, frac) >= 1.0


class TestShippedProfileOrdering:
    def test_idle_read_ratios_match_characterization(self):
        devs = default_config().devices
        remote = devs["ddr5-remote"].idle_read_latency_ns
        assert devs["cxl-a"].idle_read_latency_ns == pytest.approx(1.35 * remote)
        assert devs["cxl-b"].idle_read_latency_ns == pytest.approx(2.0 * remote, rel=0.05)
        assert devs["cxl-c"].idle_read_latency_ns == pytest.approx(3.0 * remote, rel=0.05)

    def test_remote_slower_than_local(self):
        devs = default_config().devices
        assert (
            devs["ddr5-remote"].idle_read_latency_ns
            > devs["ddr5-local"].idle_read_latency_ns
        )

    def test_scenario_ddr_anchors_keep_bandwidth_ratios(self):
        # The tuned scenarios assume the DDR pool delivers 3.4x (loads) and
        # 2.0x (stores) what the expander does.
        devs = default_config().devices
        ddr, cxl = devs["ddr5-2ch"], devs["cxl-a"]
        assert effective_bandwidth(ddr, 1.0) == pytest.approx(
            3.4 * effective_bandwidth(cxl, 1.0), rel=1e-3
        )
        assert effective_bandwidth(ddr, 0.0) == pytest.approx(
            2.0 * effective_bandwidth(cxl, 0.0), rel=1e-3
        )
