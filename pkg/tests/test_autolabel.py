import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pondwatch import autolabel
from pondwatch.autolabel import (
    ACTIVE,
    AutoLabelConfig,
    INACTIVE,
    NO_CHANGE,
    NO_WATER,
    TRANSITION,
    DECREASE,
    INCREASE,
    WATER_EXIST_ABSENCE,
    change_map,
    color_index,
    majority_cleanup,
    mndwi,
    ndwi,
    pond_states,
    water_mask,
)
from pondwatch.raster import LabelRaster, STATE_CLASSES


def states(values):
    return LabelRaster(values=np.asarray(values, np.uint8), classes=STATE_CLASSES)


class TestIndices:
    def test_color_index_symmetry(self):
        assert color_index(np.array([[0.2]]), np.array([[0.2]])).values[0, 0] == 0.0

    def test_color_index_value(self):
        assert color_index(np.array([[0.3]]), np.array([[0.1]])).values[0, 0] == pytest.approx(0.5)

    def test_zero_denominator_sentinel(self):
        assert color_index(np.array([[0.0]]), np.array([[0.0]])).values[0, 0] == 0.0

    def test_ndwi_values(self):
        assert ndwi(np.array([[0.4]]), np.array([[0.1]])).values[0, 0] == pytest.approx(0.6)
        assert ndwi(np.array([[0.1]]), np.array([[0.4]])).values[0, 0] == pytest.approx(-0.6)
        assert ndwi(np.array([[0.3]]), np.array([[0.3]])).values[0, 0] == 0.0

    def test_mndwi_values(self):
        assert mndwi(np.array([[0.4]]), np.array([[0.1]])).values[0, 0] == pytest.approx(0.6)
        assert mndwi(np.array([[0.1]]), np.array([[0.4]])).values[0, 0] == pytest.approx(-0.6)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            color_index(np.zeros((2, 2)), np.zeros((3, 2)))

    def test_negative_band_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            ndwi(np.array([[-0.1]]), np.array([[0.2]]))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_antisymmetry_under_band_swap(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.uniform(0, 1, (4, 4))
        b = rng.uniform(0, 1, (4, 4))
        fwd = color_index(a, b).values
        rev = color_index(b, a).values
        assert np.allclose(fwd, -rev, atol=1e-12)


class TestWaterMask:
    def test_above_threshold_is_water(self):
        m = mndwi(np.array([[0.65]]), np.array([[0.35]]))  # 0.3
        assert water_mask(m, 0.0)[0, 0]

    def test_below_threshold_is_land(self):
        m = mndwi(np.array([[0.2]]), np.array([[0.3]]))
        assert not water_mask(m, 0.0)[0, 0]

    def test_exactly_at_threshold_is_land(self):
        m = mndwi(np.array([[0.3]]), np.array([[0.3]]))
        assert not water_mask(m, 0.0)[0, 0]


class TestPondStates:
    def test_interval_mapping(self):
        ci = color_index(np.array([[0.1, 0.35, 0.5, 0.2]]), np.array([[0.3, 0.3, 0.3, 0.3]]))
        water = np.array([[True, True, True, False]])
        out = pond_states(ci, water)
        # Ci: -0.5 (active), 0.0769 (transition), 0.25 (inactive), masked
        assert out.values.tolist() == [[ACTIVE, TRANSITION, INACTIVE, NO_WATER]]

    def test_negative_ci_on_land_ignored(self):
        ci = color_index(np.array([[0.05]]), np.array([[0.3]]))
        out = pond_states(ci, np.array([[False]]))
        assert out.values[0, 0] == NO_WATER

    def test_boundary_inclusion(self):
        cfg = AutoLabelConfig()
        ci_vals = np.array([[cfg.ci_low, cfg.ci_high]])
        ci = color_index(np.array([[0.3, 0.3]]), np.array([[0.3, 0.3]]))
        object.__setattr__(ci, "values", ci_vals)
        out = pond_states(ci, np.array([[True, True]]), cfg)
        assert out.values.tolist() == [[TRANSITION, INACTIVE]]

    def test_swap_option(self):
        ci = color_index(np.array([[0.1, 0.5]]), np.array([[0.3, 0.3]]))
        out = pond_states(ci, np.array([[True, True]]), AutoLabelConfig(swap_active_inactive=True))
        assert out.values.tolist() == [[INACTIVE, ACTIVE]]

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_partition_and_threshold_locality(self, seed):
        rng = np.random.default_rng(seed)
        g = rng.uniform(0, 1, (6, 6))
        r = rng.uniform(0, 1, (6, 6))
        water = rng.uniform(size=(6, 6)) < 0.5
        base = pond_states(color_index(g, r), water)
        assert set(np.unique(base.values)) <= {NO_WATER, INACTIVE, TRANSITION, ACTIVE}
        moved = pond_states(
            color_index(g, r), water, AutoLabelConfig(ci_low=-0.2, ci_high=0.4)
        )
        # changing thresholds reassigns only water pixels
        assert np.array_equal((base.values == NO_WATER), (moved.values == NO_WATER))
        assert np.array_equal(base.values == NO_WATER, ~water)


class TestMajorityCleanup:
    def test_majority_vote_oracle(self):
        # one 4-connected pond of 10 pixels: 7 active, 3 transition
        values = np.zeros((3, 5), np.uint8)
        values[0:2, 0:5] = ACTIVE
        for y, x in ((0, 3), (1, 2), (1, 4)):
            values[y, x] = TRANSITION
        out = majority_cleanup(states(values), min_pond_pixels=5)
        water = values != NO_WATER
        assert (out.values[water] == ACTIVE).all()
        assert (out.values[~water] == NO_WATER).all()

    def test_uniform_pond_fixed_point(self):
        values = np.zeros((5, 5), np.uint8)
        values[1:3, 1:4] = INACTIVE  # 6 pixels, above the size floor
        s = states(values)
        assert np.array_equal(majority_cleanup(s).values, values)

    def test_small_speck_removed(self):
        values = np.zeros((5, 5), np.uint8)
        values[2, 1:4] = ACTIVE  # 3-pixel speck
        out = majority_cleanup(states(values), min_pond_pixels=5)
        assert (out.values == NO_WATER).all()

    def test_tie_goes_to_lowest_state_code(self):
        values = np.zeros((1, 6), np.uint8)
        values[0, :3] = TRANSITION
        values[0, 3:] = ACTIVE
        out = majority_cleanup(states(values), min_pond_pixels=1)
        assert (out.values == TRANSITION).all()

    def test_idempotent(self, rng):
        values = (rng.uniform(size=(12, 12)) * 4).astype(np.uint8)
        once = majority_cleanup(states(values), min_pond_pixels=3)
        twice = majority_cleanup(once, min_pond_pixels=3)
        assert np.array_equal(once.values, twice.values)

    def test_distinct_ponds_cleaned_separately(self):
        values = np.zeros((3, 7), np.uint8)
        values[0:3, 0:3] = ACTIVE
        values[0:3, 4:7] = INACTIVE
        out = majority_cleanup(states(values), min_pond_pixels=2)
        assert (out.values[:, 0:3] == ACTIVE).all()
        assert (out.values[:, 4:7] == INACTIVE).all()


class TestChangeMap:
    def pair(self, a, b):
        return states(np.array([[a]])), states(np.array([[b]]))

    def test_paper_categories(self):
        for s1, s2, expected in [
            (ACTIVE, INACTIVE, DECREASE),
            (ACTIVE, TRANSITION, DECREASE),
            (TRANSITION, INACTIVE, DECREASE),
            (INACTIVE, TRANSITION, INCREASE),
            (INACTIVE, ACTIVE, INCREASE),
            (TRANSITION, ACTIVE, INCREASE),
            (ACTIVE, NO_WATER, WATER_EXIST_ABSENCE),
            (NO_WATER, TRANSITION, WATER_EXIST_ABSENCE),
            (TRANSITION, TRANSITION, NO_CHANGE),
            (NO_WATER, NO_WATER, NO_CHANGE),
        ]:
            a, b = self.pair(s1, s2)
            assert change_map(a, b).values[0, 0] == expected, (s1, s2)

    def test_self_change_is_nochange(self, rng):
        values = (rng.uniform(size=(8, 8)) * 4).astype(np.uint8)
        s = states(values)
        assert (change_map(s, s).values == NO_CHANGE).all()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_antisymmetry(self, seed):
        rng = np.random.default_rng(seed)
        a = states((rng.uniform(size=(5, 5)) * 4).astype(np.uint8))
        b = states((rng.uniform(size=(5, 5)) * 4).astype(np.uint8))
        fwd = change_map(a, b).values
        rev = change_map(b, a).values
        swap = fwd.copy()
        swap[fwd == DECREASE] = INCREASE
        swap[fwd == INCREASE] = DECREASE
        assert np.array_equal(rev, swap)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            change_map(states(np.zeros((2, 2), np.uint8)), states(np.zeros((3, 2), np.uint8)))


class TestConfig:
    def test_threshold_ordering(self):
        with pytest.raises(ValueError, match="ci_low"):
            AutoLabelConfig(ci_low=0.2, ci_high=0.1)

    def test_threshold_range(self):
        with pytest.raises(ValueError, match="outside"):
            AutoLabelConfig(ci_low=-2.0, ci_high=0.15)
