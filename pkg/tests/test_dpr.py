"""Reconfiguration cost model and bitstream relocation."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slicesim.allocator import Region
from slicesim.catalog import builtin_catalog
from slicesim.dpr import (MECHANISMS, BitstreamImage, DprParams,
                          preload_cycles, reconfig_cycles, relocate)
from slicesim.errors import ConfigError, ValidationError


def image(words=1024, slices=6):
    return BitstreamImage(task_id="t", version="a",
                          words_per_slice=words, slices=slices)


def region(start, length):
    return Region(region_id=0, array_run=(start, length), glb_run=(0, 1))


class TestReconfigCycles:
    def test_parallel_streams_cost_one_slice(self):
        params = DprParams(mechanism="fast_parallel",
                           stream_words_per_cycle=1)
        assert reconfig_cycles(image(1024, 6), params) == 1024

    def test_bus_serializes_every_word(self):
        params = DprParams(mechanism="sequential_bus",
                           bus_cycles_per_word=4)
        assert reconfig_cycles(image(1024, 6), params) == 24576

    def test_single_slice_speedup_is_bus_cost_times_stream_rate(self):
        fast = DprParams(mechanism="fast_parallel", bus_cycles_per_word=3,
                         stream_words_per_cycle=4)
        bus = fast.with_mechanism("sequential_bus")
        img = image(1024, 1)
        assert (reconfig_cycles(img, bus)
                == reconfig_cycles(img, fast) * 3 * 4)

    def test_parallel_cost_ignores_region_width(self):
        params = DprParams(mechanism="fast_parallel")
        costs = {reconfig_cycles(image(2048, n), params)
                 for n in range(1, 9)}
        assert costs == {2048}

    def test_bus_cost_is_linear_in_region_width(self):
        params = DprParams(mechanism="sequential_bus")
        base = reconfig_cycles(image(2048, 1), params)
        for n in range(1, 9):
            assert reconfig_cycles(image(2048, n), params) == n * base

    def test_stream_rounds_up(self):
        params = DprParams(mechanism="fast_parallel",
                           stream_words_per_cycle=8)
        assert reconfig_cycles(image(1000, 2), params) == 125
        assert reconfig_cycles(image(1001, 2), params) == 126

    @given(words=st.integers(1, 10 ** 6), slices=st.integers(1, 32),
           rate=st.integers(1, 16), bus=st.integers(1, 16))
    def test_parallel_never_slower_than_bus(self, words, slices, rate, bus):
        img = image(words, slices)
        fast = DprParams(mechanism="fast_parallel",
                         stream_words_per_cycle=rate,
                         bus_cycles_per_word=bus)
        assert (reconfig_cycles(img, fast)
                <= reconfig_cycles(img, fast.with_mechanism(
                    "sequential_bus")))


class TestPreload:
    def test_counts_total_words(self):
        params = DprParams(preload_words_per_cycle=8)
        assert preload_cycles(image(1024, 2), params) == 256

    def test_rounds_up(self):
        params = DprParams(preload_words_per_cycle=8)
        assert preload_cycles(image(1023, 1), params) == 128

    def test_overlap_flag_defaults_on(self):
        assert DprParams().preload_overlaps_execution


class TestRelocation:
    def test_binds_streams_to_run_offsets(self):
        plan = relocate(image(slices=2), region(3, 2))
        assert plan.bindings == ((0, 3), (1, 4))
        assert plan.register_write_cycles == 1

    def test_wider_run_binds_low_end(self):
        plan = relocate(image(slices=2), region(0, 3))
        assert plan.bindings == ((0, 0), (1, 1))

    def test_short_run_is_rejected(self):
        with pytest.raises(ValidationError, match="holds only 1"):
            relocate(image(slices=2), region(0, 1))

    def test_relocation_is_position_invariant(self):
        img = image(slices=3)
        plans = [relocate(img, region(start, 3)) for start in range(6)]
        assert {p.register_write_cycles for p in plans} == {1}
        assert {len(p.bindings) for p in plans} == {3}
        for start, plan in enumerate(plans):
            assert [b - a for a, b in plan.bindings] == [start] * 3

    def test_identity_preserved(self):
        plan = relocate(image(), region(0, 6))
        assert (plan.task_id, plan.version) == ("t", "a")


class TestImages:
    def test_for_variant_copies_footprint(self):
        variant = builtin_catalog().app("harris").node("harris").variants[-1]
        img = BitstreamImage.for_variant(variant)
        assert (img.task_id, img.version) == ("harris", "c")
        assert img.words_per_slice == 4096
        assert img.slices == 7
        assert img.total_words == 4096 * 7

    def test_rejects_empty_stream(self):
        with pytest.raises(ValidationError):
            image(words=0)

    def test_rejects_zero_slices(self):
        with pytest.raises(ValidationError):
            image(slices=0)


class TestParams:
    def test_mechanism_names(self):
        assert set(MECHANISMS) == {"sequential_bus", "fast_parallel"}

    def test_unknown_mechanism(self):
        with pytest.raises(ConfigError, match="unknown reconfiguration"):
            DprParams(mechanism="carrier_pigeon")

    @pytest.mark.parametrize("field", ["bus_cycles_per_word",
                                       "stream_words_per_cycle",
                                       "preload_words_per_cycle"])
    def test_rates_must_be_positive_integers(self, field):
        with pytest.raises(ConfigError, match=field):
            DprParams(**{field: 0})
        with pytest.raises(ConfigError, match=field):
            DprParams(**{field: 2.5})

    def test_with_mechanism_keeps_transfer_rates(self):
        params = DprParams(mechanism="fast_parallel", bus_cycles_per_word=9,
                           stream_words_per_cycle=2,
                           preload_words_per_cycle=4,
                           preload_overlaps_execution=False)
        swapped = params.with_mechanism("sequential_bus")
        assert swapped.mechanism == "sequential_bus"
        assert swapped.bus_cycles_per_word == 9
        assert swapped.stream_words_per_cycle == 2
        assert swapped.preload_words_per_cycle == 4
        assert not swapped.preload_overlaps_execution
