import numpy as np
import pytest
from pydantic import ValidationError
from hypothesis import given, settings, strategies as st

from dbpim import ArgumentError, Filter, RangeError, TableMode, ThresholdedFilter, approximate_weight, build_query_table, fta_quantize, select_threshold
from dbpim.csd import phi_of, to_csd, to_dyadic_blocks
from dbpim.fta import phi_profile, profile_mode, quantize_filter
from dbpim.oracle import min_nonzeros, nearest_reference


int8 = st.integers(-128, 127)


# ===========================================================================
# Tests: Threshold selection
# ===========================================================================

class TestSelectThreshold:

    @pytest.mark.parametrize("profile, expected", [
        ([0, 0, 0], 0),
        ([0], 0),
        ([0, 0, 1], 1),
        ([0, 0, 2, 2], 1),
        ([1, 1, 2], 1),
        ([2, 2, 1], 2),
        ([1, 2], 1),
        ([3, 3, 1], 2),
        ([4], 2),
        ([4, 4, 3, 0], 2),
    ])
    def test_cases(self, profile: list[int], expected: int):
        assert select_threshold(profile) == expected

    def test_empty_profile(self):
        with pytest.raises(ArgumentError):
            select_threshold([])

    @pytest.mark.parametrize("profile", [[5], [-1, 1]])
    def test_out_of_range_profile(self, profile: list[int]):
        with pytest.raises(ArgumentError):
            select_threshold(profile)

    def test_mode_prefers_smaller_on_ties(self):
        assert profile_mode([3, 1, 3, 1]) == 1

    def test_profile(self):
        assert phi_profile(Filter(weights=(0, 1, 3, 85))) == [0, 1, 2, 4]

    @given(st.lists(st.integers(0, 4), min_size=1))
    def test_result_in_range(self, profile: list[int]):
        assert 0 <= select_threshold(profile) <= 2


# ===========================================================================
# Tests: Query tables
# ===========================================================================

class TestQueryTable:

    def test_exact_one(self):
        table = build_query_table(1, TableMode.EXACT)
        expected = sorted([1 << k for k in range(7)] + [-(1 << k) for k in range(8)])
        assert list(table.entries) == expected
        assert len(table.entries) == 15

    def test_zero(self):
        assert build_query_table(0).entries == (0,)

    def test_exact_two_members(self):
        entries = build_query_table(2, TableMode.EXACT).entries
        assert all(phi_of(t) == 2 for t in entries)
        assert 80 in entries and 3 in entries and 127 in entries
        assert 0 not in entries and 85 not in entries

    def test_at_most_contains_exact(self):
        for phi_th in (1, 2):
            exact = set(build_query_table(phi_th, TableMode.EXACT).entries)
            at_most = set(build_query_table(phi_th, TableMode.AT_MOST).entries)
            assert exact < at_most
            assert 0 in at_most

    def test_sorted_unique(self):
        for mode in TableMode:
            for phi_th in range(3):
                entries = build_query_table(phi_th, mode).entries
                assert list(entries) == sorted(set(entries))

    @pytest.mark.parametrize("phi_th", [-1, 3])
    def test_bad_threshold(self, phi_th: int):
        with pytest.raises(ArgumentError):
            build_query_table(phi_th)


# ===========================================================================
# Tests: Approximation
# ===========================================================================

class TestApproximateWeight:

    def test_85_to_80(self):
        assert approximate_weight(85, build_query_table(2)) == 80

    def test_zero_goes_positive(self):
        assert approximate_weight(0, build_query_table(1)) == 1

    def test_tie_prefers_smaller_magnitude(self):
        table = build_query_table(1)
        assert approximate_weight(3, table) == 2
        assert approximate_weight(-3, table) == -2
        assert approximate_weight(-96, table) == -64

    def test_member_is_kept(self):
        table = build_query_table(2)
        for t in table.entries:
            assert approximate_weight(t, table) == t

    def test_beyond_largest_entry(self):
        assert approximate_weight(127, build_query_table(1)) == 64

    def test_out_of_range(self):
        with pytest.raises(RangeError):
            approximate_weight(200, build_query_table(1))

    @settings(max_examples=300)
    @given(int8, st.sampled_from([1, 2]), st.sampled_from(list(TableMode)))
    def test_matches_brute_force_scan(self, w: int, phi_th: int, mode: TableMode):
        expected = nearest_reference(w, lambda phi: mode.admits(phi, phi_th))
        assert approximate_weight(w, build_query_table(phi_th, mode)) == expected


# ===========================================================================
# Tests: Filter quantization
# ===========================================================================

class TestQuantizeFilter:

    def test_all_zero_filter(self):
        t = quantize_filter(Filter(weights=(0, 0, 0)))
        assert t.phi_th == 0
        assert t.weights == (0, 0, 0)

    def test_mostly_zero_filter_gets_threshold_one(self):
        t = quantize_filter(Filter(weights=(0, 0, 0, 5)))
        assert t.phi_th == 1
        assert t.weights == (1, 1, 1, 4)

    def test_exact_discipline(self):
        t = quantize_filter(Filter(weights=(85, 3, 6, -7, 0)))
        assert t.phi_th == 2
        assert all(phi_of(w) == 2 for w in t.weights)
        assert t.weights[0] == 80

    def test_at_most_keeps_zero(self):
        t = quantize_filter(Filter(weights=(3, 6, 0)), TableMode.AT_MOST)
        assert t.phi_th == 2
        assert t.weights == (3, 6, 0)

    def test_blocks_belong_to_weights(self):
        t = quantize_filter(Filter(weights=(100, -100, 17, 1)))
        for w, blocks in zip(t.weights, t.per_weight_blocks):
            assert blocks == to_dyadic_blocks(to_csd(w))
            assert len(blocks.comp_blocks) == t.phi_th

    def test_layer_keeps_order_and_ids(self):
        filters = [Filter(weights=(i, -i), filter_id=10 + i) for i in range(5)]
        result = fta_quantize(filters)
        assert [t.filter_id for t in result] == [10, 11, 12, 13, 14]

    def test_filter_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            Filter(weights=(0, 128))

    def test_filter_rejects_empty(self):
        with pytest.raises(ValidationError):
            Filter(weights=())

    def test_thresholded_filter_rejects_broken_discipline(self):
        with pytest.raises(ValidationError):
            ThresholdedFilter(
                filter_id=0,
                phi_th=1,
                mode=TableMode.EXACT,
                weights=(3,),
                per_weight_blocks=(to_dyadic_blocks(to_csd(3)),),
            )

    @settings(max_examples=200)
    @given(st.lists(int8, min_size=1, max_size=32))
    def test_every_weight_satisfies_threshold(self, weights: list[int]):
        t = quantize_filter(Filter(weights=tuple(weights)))
        if t.phi_th == 0:
            assert all(w == 0 for w in t.weights)
        else:
            assert all(phi_of(w) == t.phi_th for w in t.weights)


# ===========================================================================
# Tests: FTA laws
# ===========================================================================

def reference_threshold(weights: tuple[int, ...]) -> int:
    phis = [min_nonzeros(w) for w in weights]
    if max(phis) == 0:
        return 0
    mode = int(np.argmax(np.bincount(phis, minlength=5)))
    return 1 if mode == 0 else min(mode, 2)


def best_distance(w: int, phi_th: int, mode: TableMode) -> int:
    return abs(nearest_reference(w, lambda phi: mode.admits(phi, phi_th)) - w)


class TestFtaLaws:

    @pytest.fixture(scope="class")
    def distances(self) -> dict[tuple[int, int, TableMode], int]:
        return {
            (w, phi_th, mode): best_distance(w, phi_th, mode)
            for w in range(-128, 128)
            for phi_th in (0, 1, 2)
            for mode in TableMode
        }

    @pytest.mark.parametrize("mode", list(TableMode))
    def test_random_filters(self, mode: TableMode, distances: dict[tuple[int, int, TableMode], int]):
        rng = np.random.default_rng(2024)

        for i in range(10_000):
            length = int(rng.integers(1, 17))
            match i % 3:
                case 0:
                    row = rng.integers(-128, 128, size=length)
                case 1:
                    row = np.clip(np.rint(rng.normal(0, 12, size=length)), -128, 127)
                case _:
                    row = rng.integers(-128, 128, size=length) * (rng.random(length) < 0.4)
            source = tuple(int(w) for w in row)

            t = quantize_filter(Filter(weights=source, filter_id=i), mode)

            assert t.phi_th == reference_threshold(source), source
            for w, approx in zip(source, t.weights):
                assert abs(approx - w) == distances[(w, t.phi_th, mode)], (w, approx, t.phi_th)
            if mode == TableMode.EXACT and t.phi_th >= 1:
                assert all(phi_of(w) == t.phi_th for w in t.weights)
            else:
                assert all(phi_of(w) <= t.phi_th for w in t.weights)

    @settings(max_examples=200)
    @given(st.lists(st.lists(int8, min_size=6, max_size=6), min_size=1, max_size=6), st.sampled_from(list(TableMode)))
    def test_idempotent(self, weights: list[list[int]], mode: TableMode):
        once = fta_quantize([Filter(weights=tuple(w), filter_id=i) for i, w in enumerate(weights)], mode)
        twice = fta_quantize([Filter(weights=t.weights, filter_id=t.filter_id) for t in once], mode)
        assert [(t.phi_th, t.weights) for t in twice] == [(t.phi_th, t.weights) for t in once]

    @pytest.mark.parametrize("phi_th", [1, 2])
    def test_at_most_is_never_worse(self, phi_th: int):
        exact, at_most = build_query_table(phi_th, TableMode.EXACT), build_query_table(phi_th, TableMode.AT_MOST)
        for w in range(-128, 128):
            assert abs(approximate_weight(w, at_most) - w) <= abs(approximate_weight(w, exact) - w)

    def test_error_is_table_minimum(self):
        for mode in TableMode:
            for phi_th in (1, 2):
                table = build_query_table(phi_th, mode)
                for w in range(-128, 128):
                    approx = approximate_weight(w, table)
                    assert all(abs(approx - w) <= abs(t - w) for t in table.entries)
