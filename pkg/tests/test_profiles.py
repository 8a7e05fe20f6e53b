"""Unit and property tests for the load-profile value library."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kettlepool.profiles import (
    BiasedProfile,
    Booking,
    LoadProfile,
    Tariff,
    TimeGrid,
    advance,
    aggregate,
    angle_to_offset,
    apply_booking,
    bias,
    empty_profile,
    friction_at,
    offset_to_angle,
    profile_from_intervals,
    recommend_slot,
)

GRID = TimeGrid(horizon_s=900, bucket_s=30, origin=0)


def per_second_sum(horizon_s, bookings):
    """Oracle: accumulate watts second by second, then read bucket starts."""
    seconds = [0] * horizon_s
    for start, duration, power in bookings:
        for t in range(start, start + duration):
            seconds[t] += power
    return seconds


def profile_of(watts, grid=GRID):
    return LoadProfile(grid, tuple(watts))


class TestTimeGrid:
    def test_default_grid_has_30_buckets(self):
        assert GRID.bucket_count == 30

    def test_single_bucket_grid_rejected(self):
        with pytest.raises(ValueError):
            TimeGrid(horizon_s=900, bucket_s=900)

    def test_non_divisible_bucket_rejected(self):
        with pytest.raises(ValueError):
            TimeGrid(horizon_s=900, bucket_s=29)

    def test_bucket_of_horizon_end_maps_to_last_bucket(self):
        assert GRID.bucket_of(900) == 29
        assert GRID.bucket_of(0) == 0
        assert GRID.bucket_of(59) == 1


class TestEmptyProfile:
    def test_all_buckets_zero(self):
        p = empty_profile(GRID)
        assert p.watts == (0,) * 30

    def test_negative_watts_rejected(self):
        with pytest.raises(ValueError):
            profile_of([0] * 29 + [-1])

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError):
            profile_of([0] * 29)


class TestApplyBooking:
    def test_kettle_booking_fills_first_six_buckets(self):
        b = Booking("b1", "kettle", start_offset_s=0, duration_s=180, power_w=2000)
        p = apply_booking(empty_profile(GRID), b)
        assert p.watts[:6] == (2000,) * 6
        assert p.watts[6:] == (0,) * 24

    def test_add_then_remove_is_identity(self):
        b = Booking("b1", "kettle", 150, 180, 2000)
        p0 = profile_of([100] * 30)
        assert apply_booking(apply_booking(p0, b, 1), b, -1) == p0

    def test_two_overlapping_bookings_match_per_second_oracle(self):
        b1 = Booking("b1", "k1", 0, 180, 2000)
        b2 = Booking("b2", "k2", 90, 180, 2000)
        p = apply_booking(apply_booking(empty_profile(GRID), b1), b2)
        seconds = per_second_sum(900, [(0, 180, 2000), (90, 180, 2000)])
        expected = tuple(seconds[i * 30] for i in range(30))
        assert p.watts == expected
        assert p.watts[3:6] == (4000,) * 3

    def test_misaligned_booking_rejected(self):
        b = Booking("b1", "k", 10, 180, 2000)
        with pytest.raises(ValueError):
            apply_booking(empty_profile(GRID), b)

    def test_booking_beyond_horizon_rejected(self):
        b = Booking("b1", "k", 840, 180, 2000)
        with pytest.raises(ValueError):
            apply_booking(empty_profile(GRID), b)

    def test_removal_driving_negative_is_corruption(self):
        b = Booking("b1", "k", 0, 30, 2000)
        with pytest.raises(ValueError):
            apply_booking(empty_profile(GRID), b, -1)

    def test_inputs_not_mutated(self):
        p0 = empty_profile(GRID)
        apply_booking(p0, Booking("b1", "k", 0, 30, 500))
        assert p0.watts == (0,) * 30

    @given(
        start_bucket=st.integers(0, 29),
        dur_buckets=st.integers(1, 30),
        power=st.integers(1, 5000),
    )
    def test_roundtrip_property(self, start_bucket, dur_buckets, power):
        dur_buckets = min(dur_buckets, 30 - start_bucket)
        b = Booking("b", "k", start_bucket * 30, dur_buckets * 30, power)
        p0 = profile_of([7] * 30)
        assert apply_booking(apply_booking(p0, b), b, -1) == p0


class TestAggregate:
    def test_empty_pool_is_zero_profile(self):
        assert aggregate([], GRID) == empty_profile(GRID)

    def test_single_profile_identity(self):
        p = profile_of(list(range(30)))
        assert aggregate([p], GRID) == p

    def test_three_profiles_match_triple_loop(self):
        rng = random.Random(7)
        ps = [profile_of([rng.randrange(0, 4000) for _ in range(30)]) for _ in range(3)]
        got = aggregate(ps, GRID)
        expected = []
        for i in range(30):
            total = 0
            for p in ps:
                total += p.watts[i]
            expected.append(total)
        assert got.watts == tuple(expected)

    def test_mismatched_grid_rejected(self):
        other = TimeGrid(900, 30, origin=30)
        with pytest.raises(ValueError):
            aggregate([empty_profile(other)], GRID)

    @given(st.lists(st.lists(st.integers(0, 1000), min_size=4, max_size=4), max_size=5))
    def test_permutation_invariant_and_scaling(self, rows):
        grid = TimeGrid(120, 30)
        ps = [LoadProfile(grid, tuple(r)) for r in rows]
        shuffled = list(reversed(ps))
        assert aggregate(ps, grid) == aggregate(shuffled, grid)
        if ps:
            k = len(ps)
            copies = aggregate([ps[0]] * k, grid)
            assert copies.watts == tuple(w * k for w in ps[0].watts)


class TestBias:
    def test_neutral_tariff_no_cap_is_identity(self):
        p = profile_of([1000] * 30)
        bp = bias(p, Tariff.neutral(30))
        assert bp.biased == tuple(float(w) for w in p.watts)
        assert bp.raw == p
        assert bp.cap_w is None

    def test_morning_doubling_matches_elementwise_oracle(self):
        p = profile_of([1000] * 30)
        t = Tariff.from_multipliers([2.0] * 10 + [1.0] * 20)
        bp = bias(p, t, cap_w=None)
        expected = tuple(w * m for w, m in zip(p.watts, t.multipliers))
        assert bp.biased == expected
        assert bp.biased[:10] == (2000.0,) * 10
        assert bp.biased[10:] == (1000.0,) * 20

    def test_zero_tariff_annihilates(self):
        p = profile_of([4000] * 30)
        bp = bias(p, Tariff.from_multipliers([0.0] * 30))
        assert bp.biased == (0.0,) * 30

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            bias(empty_profile(GRID), Tariff.neutral(29))

    def test_cap_carried_through_without_clipping(self):
        p = profile_of([8000] * 30)
        bp = bias(p, Tariff.neutral(30), cap_w=6000)
        assert bp.cap_w == 6000
        assert bp.raw.watts == (8000,) * 30


class TestAngleMapping:
    def test_zero_degrees_is_now(self):
        assert angle_to_offset(0, GRID) == 0

    def test_midpoint(self):
        assert angle_to_offset(180, GRID) == 450

    def test_full_turn_is_horizon(self):
        assert angle_to_offset(360, GRID) == 900

    def test_rounds_to_nearest_bucket(self):
        # 90 deg -> 225 s -> 7.5 buckets, half rounds up
        assert angle_to_offset(90, GRID) == 240
        # 44 deg -> 110 s -> 3.67 buckets -> 4
        assert angle_to_offset(44, GRID) == 120

    def test_out_of_range_clamped(self):
        assert angle_to_offset(-15, GRID) == 0
        assert angle_to_offset(400, GRID) == 900

    @given(st.integers(0, 30))
    def test_offset_angle_roundtrip_on_boundaries(self, k):
        offset = k * 30
        assert angle_to_offset(offset_to_angle(offset, GRID), GRID) == offset


class TestFriction:
    def test_all_zero_profile_gives_zero_friction(self):
        bp = bias(empty_profile(GRID), Tariff.neutral(30))
        for angle in (0, 90, 180, 270, 360):
            assert friction_at(bp, angle).friction == 0.0

    def test_peak_bucket_is_full_friction(self):
        watts = [500] * 30
        watts[12] = 3000
        bp = bias(profile_of(watts), Tariff.neutral(30))
        angle = offset_to_angle(12 * 30, GRID)
        assert friction_at(bp, angle).friction == 1.0

    def test_half_of_peak_gives_half_friction(self):
        watts = [0] * 30
        watts[0], watts[1] = 2000, 1000
        bp = bias(profile_of(watts), Tariff.neutral(30))
        sample = friction_at(bp, offset_to_angle(30, GRID))
        assert sample.friction == 1000 / 2000
        assert sample.offset_s == 30

    def test_over_cap_flagged_from_raw(self):
        watts = [0] * 30
        watts[0] = 6000
        bp = bias(profile_of(watts), Tariff.neutral(30), cap_w=6000)
        assert friction_at(bp, 0).over_cap is True
        assert friction_at(bp, 180).over_cap is False

    def test_offset_matches_angle_map_invariant(self):
        bp = bias(profile_of([1] * 30), Tariff.neutral(30))
        for angle in (0, 13, 90, 180, 271.5, 360):
            s = friction_at(bp, angle)
            assert s.offset_s == angle_to_offset(angle, GRID)

    @given(
        watts=st.lists(st.integers(0, 5000), min_size=30, max_size=30),
        scale=st.sampled_from([2, 3, 10, 1000]),
        angle=st.floats(0, 360, allow_nan=False),
    )
    def test_scale_invariance(self, watts, scale, angle):
        p = profile_of(watts)
        base = bias(p, Tariff.neutral(30))
        scaled = BiasedProfile(
            grid=base.grid,
            biased_milli=tuple(b * scale for b in base.biased_milli),
            raw=base.raw,
            cap_w=None,
        )
        assert friction_at(base, angle) == friction_at(scaled, angle)


def exhaustive_best_slot(bp, duration_s, power_w, earliest_offset_s=0):
    """Oracle: per-second induced load, lexicographic (raw peak, biased peak, offset)."""
    grid = bp.grid
    best = None
    for offset in range(earliest_offset_s, grid.horizon_s - duration_s + 1, grid.bucket_s):
        seconds = []
        for t in range(offset, offset + duration_s):
            seconds.append(bp.raw.watts[t // grid.bucket_s] + power_w)
        window_buckets = range(offset // grid.bucket_s, (offset + duration_s) // grid.bucket_s)
        biased_peak = max(bp.biased_milli[i] for i in window_buckets)
        key = (max(seconds), biased_peak, offset)
        if best is None or key < best:
            best = key
    return best[2]


class TestRecommendSlot:
    def test_empty_profile_returns_earliest(self):
        bp = bias(empty_profile(GRID), Tariff.neutral(30))
        assert recommend_slot(bp, 180, 2000, 0) == 0
        assert recommend_slot(bp, 180, 2000, 240) == 240

    def test_loaded_head_pushes_to_first_free_window(self):
        watts = [2000] * 6 + [0] * 24
        bp = bias(profile_of(watts), Tariff.neutral(30))
        got = recommend_slot(bp, 180, 2000, 0)
        assert got == exhaustive_best_slot(bp, 180, 2000, 0) == 180

    def test_uniform_profile_ties_resolve_earliest(self):
        bp = bias(profile_of([1500] * 30), Tariff.neutral(30))
        assert recommend_slot(bp, 180, 2000, 0) == 0
        assert recommend_slot(bp, 180, 2000, 90) == 90

    def test_biased_breaks_raw_ties(self):
        # Uniform raw load ties everywhere; tariff makes the early half pricier.
        tariff = Tariff.from_multipliers([3.0] * 15 + [1.0] * 15)
        bp = bias(profile_of([1000] * 30), tariff)
        got = recommend_slot(bp, 180, 2000, 0)
        assert got == exhaustive_best_slot(bp, 180, 2000, 0) == 450

    def test_infeasible_duration_rejected(self):
        bp = bias(empty_profile(GRID), Tariff.neutral(30))
        with pytest.raises(ValueError):
            recommend_slot(bp, 930, 2000, 0)
        with pytest.raises(ValueError):
            recommend_slot(bp, 180, 2000, 750)

    @settings(max_examples=150, deadline=None)
    @given(data=st.data())
    def test_matches_exhaustive_oracle(self, data):
        bucket_count = data.draw(st.integers(2, 60), label="buckets")
        grid = TimeGrid(bucket_count * 30, 30)
        watts = data.draw(
            st.lists(st.integers(0, 6000), min_size=bucket_count, max_size=bucket_count)
        )
        milli = data.draw(
            st.lists(st.integers(0, 3000), min_size=bucket_count, max_size=bucket_count)
        )
        bp = bias(LoadProfile(grid, tuple(watts)), Tariff(tuple(milli)))
        dur_buckets = data.draw(st.integers(1, bucket_count), label="dur")
        earliest = data.draw(st.integers(0, bucket_count - dur_buckets), label="earliest") * 30
        power = data.draw(st.integers(1, 4000), label="power")
        got = recommend_slot(bp, dur_buckets * 30, power, earliest)
        assert got == exhaustive_best_slot(bp, dur_buckets * 30, power, earliest)

    @given(
        watts=st.lists(st.integers(0, 5000), min_size=30, max_size=30),
        scale=st.sampled_from([2, 5, 1000]),
    )
    def test_invariant_under_uniform_tariff_scaling(self, watts, scale):
        p = profile_of(watts)
        base = bias(p, Tariff.neutral(30))
        scaled = bias(p, Tariff(tuple(1000 * scale for _ in range(30))))
        assert recommend_slot(base, 180, 2000, 0) == recommend_slot(scaled, 180, 2000, 0)


class TestAdvance:
    def test_zero_delta_is_noop(self):
        p = profile_of(list(range(30)))
        assert advance(p, 0).watts == p.watts

    def test_full_horizon_expires_everything(self):
        p = profile_of([999] * 30)
        assert advance(p, 900).watts == (0,) * 30

    def test_two_bucket_shift_matches_index_oracle(self):
        values = list(range(100, 130))
        p = profile_of(values)
        got = advance(p, 60)
        expected = tuple(values[2:] + [0, 0])
        assert got.watts == expected
        assert got.grid.origin == 60

    def test_backwards_rejected(self):
        p = profile_of([0] * 30)
        with pytest.raises(ValueError):
            advance(LoadProfile(GRID.at_origin(60), p.watts), 30)

    def test_unaligned_rejected(self):
        with pytest.raises(ValueError):
            advance(empty_profile(GRID), 45)

    @given(
        watts=st.lists(st.integers(0, 100), min_size=30, max_size=30),
        a=st.integers(0, 30),
        b=st.integers(0, 30),
    )
    def test_monoid_action(self, watts, a, b):
        p = profile_of(watts)
        one_step = advance(p, (a + b) * 30)
        two_steps = advance(advance(p, a * 30), (a + b) * 30)
        assert one_step == two_steps


class TestProfileFromIntervals:
    def test_clips_interval_straddling_origin(self):
        grid = TimeGrid(900, 30, origin=60)
        p = profile_from_intervals(grid, [(0, 180, 2000)])
        # 0..180 abs overlaps window [60, 960) in buckets 0..3
        assert p.watts[:4] == (2000,) * 4
        assert p.watts[4:] == (0,) * 26

    def test_drops_interval_fully_outside(self):
        grid = TimeGrid(900, 30, origin=900)
        p = profile_from_intervals(grid, [(0, 180, 2000), (1800, 60, 500)])
        assert p == empty_profile(grid)

    def test_matches_apply_booking_for_in_window_bookings(self):
        rng = random.Random(3)
        bookings = []
        for i in range(8):
            start = rng.randrange(0, 25) * 30
            dur = rng.randrange(1, 30 - start // 30 + 1) * 30
            bookings.append(Booking(f"b{i}", "k", start, dur, rng.randrange(1, 3000)))
        via_apply = empty_profile(GRID)
        for b in bookings:
            via_apply = apply_booking(via_apply, b)
        via_intervals = profile_from_intervals(
            GRID, [(b.start_offset_s, b.duration_s, b.power_w) for b in bookings]
        )
        assert via_apply == via_intervals
