import io
from collections.abc import Sequence
from typing import Any

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dbpim import (
    AccumulatorOverflowError, ArgumentError, DbPimError, Filter, MacroConfig, RangeError, RunConfig, ShapeError, Signedness,
    SimdAffine, fta_quantize,
)
from dbpim.compiler import CompiledLayer, DbmuSlot, DbPimPassImage, LoadWeights, SimMode, map_dense_layer, map_layer
from dbpim.hooks import TraceHook
from dbpim.ipu import BitColumnMask, ColumnStep
from dbpim.oracle import dot_reference
from dbpim.sim import MacroState, SimHook, SimOutput, csd_adder_tree, dbmu_compute, run_bit_cycle, run_layer, slot_sums, tree_reduce


SMALL = MacroConfig(
    num_macros=2,
    compartments_per_macro=4,
    dbmus_per_compartment=8,
    rows_per_dbmu=8,
    input_group_size=2,
    dense_filters_per_pass=1,
)


def quantize(weights: Sequence[Sequence[int]]):
    return fta_quantize([Filter(weights=tuple(w), filter_id=i) for i, w in enumerate(weights)])


def both(weights: Sequence[Sequence[int]], inputs: Sequence[int], cfg: RunConfig) -> tuple[SimOutput, SimOutput]:
    filters = quantize(weights)
    db = run_layer(map_layer(filters, cfg.macro), inputs, cfg, SimMode.DBPIM)
    dense = run_layer(map_dense_layer(filters, cfg.macro), inputs, cfg, SimMode.DENSE)
    return db, dense


class RecordingHook(SimHook):

    def __init__(self) -> None:
        self.events: list[str] = []

    def on_layer_start(self, layer: CompiledLayer, mode: SimMode, inputs: Sequence[int], masks: Sequence[BitColumnMask]) -> None:
        self.events.append("start")

    def on_load(self, state: MacroState, instruction: LoadWeights) -> None:
        self.events.append("load")

    def on_bit_cycle(self, state: MacroState, row: int, step: ColumnStep, sums: np.ndarray) -> None:
        self.events.append("cycle")

    def on_skip(self, state: MacroState, row: int, column: int) -> None:
        self.events.append("skip")

    def on_accumulate(self, state: MacroState, row: int) -> None:
        self.events.append("accumulate")

    def on_write_back(self, state: MacroState, filters: Sequence[int], values: Sequence[int]) -> None:
        self.events.append("write_back")

    def on_layer_end(self, output: SimOutput) -> None:
        self.events.append("end")


# ===========================================================================
# Tests: DBMU and adder tree
# ===========================================================================

class TestDbmu:

    def test_worked_terms(self):
        assert dbmu_compute(DbmuSlot(enabled=True, stored_pair=0, sign=1, index=2), 1) == 16
        assert dbmu_compute(DbmuSlot(enabled=True, stored_pair=1, sign=-1, index=3), 1) == -128

    def test_zero_input_bit(self):
        assert dbmu_compute(DbmuSlot(enabled=True, stored_pair=1, sign=1, index=3), 0) == 0

    def test_disabled_slot(self):
        assert dbmu_compute(DbmuSlot(enabled=False), 1) == 0

    def test_matches_image_terms(self):
        layer = map_layer(quantize([[85, -62, 3, 127]]), RunConfig().macro)
        p = layer.passes[0]
        for c in range(4):
            for k in range(p.width):
                assert dbmu_compute(p.slot(0, c, k), 1) == int(p.terms[0, c, k])


class TestAdderTree:

    def test_worked_sum(self):
        assert csd_adder_tree([16, -128]) == -112
        assert (-112) & 0x1FF == 0b1_1001_0000

    def test_zero_terms(self):
        assert csd_adder_tree([0] * 16) == 0

    def test_empty_and_odd(self):
        assert csd_adder_tree([]) == 0
        assert csd_adder_tree([1, 2, 4]) == 7

    def test_reduces_last_axis(self):
        assert tree_reduce(np.array([[1, 2, 3], [4, 5, 6]], dtype=np.int64)).tolist() == [6, 15]

    @given(st.lists(st.tuples(st.sampled_from([-1, 1]), st.integers(0, 7)), min_size=16, max_size=16))
    def test_signed_powers_of_two(self, terms: list[tuple[int, int]]):
        values = [s * (1 << b) for s, b in terms]
        assert csd_adder_tree(values) == sum(values)

    def test_slot_sums_match_cell_level_reference(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            weights = rng.integers(-128, 128, size=(int(rng.integers(1, 6)), 32)).tolist()
            for p in map_layer(quantize(weights), SMALL).passes:
                assert isinstance(p, DbPimPassImage)
                for row in range(p.rows):
                    bits = rng.integers(0, 2, size=p.compartments).astype(np.int64)
                    expected = [
                        csd_adder_tree([
                            dbmu_compute(p.slot(row, c, k), int(bits[c]))
                            for c in range(p.compartments)
                            for k in range(s * p.group_width, (s + 1) * p.group_width)
                        ])
                        for s in range(len(p.members))
                    ]
                    assert slot_sums(p, row, bits).tolist() == expected


# ===========================================================================
# Tests: Bit cycles
# ===========================================================================

class TestRunBitCycle:

    @pytest.fixture
    def state(self) -> MacroState:
        layer = map_layer(quantize([[16, -128]]), RunConfig().macro)
        state = MacroState()
        state.load(layer.passes[0], range(0, 1))
        return state

    def test_single_column(self, state: MacroState):
        bits = np.zeros(16, dtype=np.int64)
        bits[:2] = 1
        run_bit_cycle(state, ColumnStep(position=3, weight=8), 0, bits)
        assert state.psums.tolist() == [8 * -112]
        assert state.cycles == 1
        assert state.tallies.post_process_ops == 1

    def test_slot_sums(self, state: MacroState):
        bits = np.zeros(16, dtype=np.int64)
        bits[1] = 1
        assert slot_sums(state.require_image(), 0, bits).tolist() == [-128]

    def test_accumulate_and_drain(self, state: MacroState):
        bits = np.ones(16, dtype=np.int64)
        run_bit_cycle(state, ColumnStep(position=0, weight=1), 0, bits)
        state.accumulate()
        assert state.psums.tolist() == [0]
        assert state.drain().tolist() == [-112]
        assert state.accumulators.tolist() == [0]

    def test_unloaded_row(self, state: MacroState):
        with pytest.raises(DbPimError):
            run_bit_cycle(state, ColumnStep(position=0, weight=1), 1, np.ones(16, dtype=np.int64))

    def test_no_image(self):
        with pytest.raises(DbPimError):
            run_bit_cycle(MacroState(), ColumnStep(position=0, weight=1), 0, np.ones(16, dtype=np.int64))

    def test_bound(self, state: MacroState):
        state.accumulator_bound = 100
        with pytest.raises(AccumulatorOverflowError):
            run_bit_cycle(state, ColumnStep(position=7, weight=128), 0, np.ones(16, dtype=np.int64))


# ===========================================================================
# Tests: Layers
# ===========================================================================

class TestRunLayer:

    def test_worked_example(self):
        db, dense = both([[16, -128]], [1, 1], RunConfig())
        assert db.outputs == dense.outputs == (-112,)

    @settings(max_examples=80, deadline=None)
    @given(st.data())
    def test_matches_reference(self, data: st.DataObject):
        signedness = data.draw(st.sampled_from(list(Signedness)))
        length = data.draw(st.integers(1, 24))
        weights = data.draw(st.lists(st.lists(st.integers(-128, 127), min_size=length, max_size=length), min_size=1, max_size=10))
        inputs = data.draw(st.lists(st.integers(signedness.low, signedness.high), min_size=length, max_size=length))
        cfg = RunConfig(macro=SMALL, signedness=signedness, ipu_skipping=data.draw(st.booleans()))

        filters = quantize(weights)
        expected = dot_reference([f.weights for f in filters], inputs, signedness).outputs
        db, dense = both(weights, inputs, cfg)

        assert db.outputs == expected
        assert dense.outputs == expected

    def test_skipped_filters_output_zero(self):
        db, _ = both([[0, 0], [1, 1]], [5, 7], RunConfig())
        assert db.outputs == (0, 12)
        assert db.passes[0].filters == (1,)

    def test_simd_post_processing(self):
        cfg = RunConfig(simd=SimdAffine(multiplier=3, shift=1, offset=5))
        db, dense = both([[0, 0], [1, 1]], [5, 7], cfg)
        assert db.outputs == dense.outputs == (5, (12 * 3 >> 1) + 5)

    def test_chained_negative_accumulation(self):
        cfg = RunConfig(signedness=Signedness.SIGNED8)
        db, dense = both([[-128, 64, -1]], [-128, -128, 127], cfg)
        assert db.outputs == dense.outputs == (-128 * -128 + 64 * -128 - 127,)

    def test_deterministic(self):
        cfg = RunConfig()
        weights = [[85, -62, 3, 127, 0, 9] for _ in range(3)]
        first, _ = both(weights, [1, 2, 3, 4, 5, 6], cfg)
        second, _ = both(weights, [1, 2, 3, 4, 5, 6], cfg)
        assert first.model_dump_json() == second.model_dump_json()

    def test_mode_mismatch(self):
        layer = map_layer(quantize([[1]]), SMALL)
        with pytest.raises(ArgumentError):
            run_layer(layer, [1], RunConfig(macro=SMALL), SimMode.DENSE)

    def test_wrong_length(self):
        layer = map_layer(quantize([[1, 2]]), SMALL)
        with pytest.raises(ShapeError):
            run_layer(layer, [1], RunConfig(macro=SMALL), SimMode.DBPIM)

    @pytest.mark.parametrize("inputs", [[300, 1], [-1, 1], [1.5, 1]])
    def test_bad_inputs(self, inputs: list[Any]):
        layer = map_layer(quantize([[1, 2]]), SMALL)
        with pytest.raises(RangeError):
            run_layer(layer, inputs, RunConfig(macro=SMALL), SimMode.DBPIM)

    def test_accumulator_overflow(self):
        cfg = RunConfig(accumulator_bits=24)
        db_layer = map_layer(quantize([[-128] * 1024]), cfg.macro)
        with pytest.raises(AccumulatorOverflowError):
            run_layer(db_layer, [255] * 1024, cfg, SimMode.DBPIM)

    def test_full_layer_fits_default_accumulator(self):
        db, _ = both([[-128] * 1024], [255] * 1024, RunConfig())
        assert db.outputs == (-128 * 255 * 1024,)


# ===========================================================================
# Tests: Cycles
# ===========================================================================

class TestCycles:

    def test_threshold_one_is_eight_times_faster(self):
        db, dense = both([[1] * 16 for _ in range(16)], [255] * 16, RunConfig())
        assert db.cycles == 8
        assert dense.cycles == 64
        assert dense.cycles / db.cycles == 8.0

    def test_threshold_two_is_four_times_faster(self):
        db, dense = both([[3] * 16 for _ in range(16)], [255] * 16, RunConfig())
        assert dense.cycles / db.cycles == 4.0

    @pytest.mark.parametrize("k", range(8))
    def test_skipped_columns_scale_speedup(self, k: int):
        inputs = [(1 << (8 - k)) - 1] * 16
        db, dense = both([[1] * 16 for _ in range(16)], inputs, RunConfig())
        assert db.compute_cycles == 8 - k
        assert db.tallies.skipped_cycles == k
        assert dense.cycles / db.cycles == 8.0 * 8 / (8 - k)

    def test_zero_inputs_need_no_cycles(self):
        db, dense = both([[5, -7, 9]] * 4, [0, 0, 0], RunConfig())
        assert db.outputs == dense.outputs == (0, 0, 0, 0)
        assert db.compute_cycles == 0
        assert dense.compute_cycles == 8 * 2

    def test_skipping_never_adds_cycles(self):
        weights = [[85, -62, 3, 127, 0, 9] for _ in range(5)]
        inputs = [0, 1, 2, 3, 128, 0]
        on, _ = both(weights, inputs, RunConfig(ipu_skipping=True))
        off, _ = both(weights, inputs, RunConfig(ipu_skipping=False))
        assert on.outputs == off.outputs
        assert on.compute_cycles <= off.compute_cycles
        assert off.tallies.skipped_cycles == 0

    def test_dense_dimensions(self):
        _, dense = both([[1] * 40 for _ in range(5)], [1] * 40, RunConfig())
        assert dense.compute_cycles == 8 * 3 * 3

    def test_masks_per_tile(self):
        inputs = [1] * 16 + [255] * 16
        db, _ = both([[1] * 32], inputs, RunConfig())
        assert [m.skipped for m in db.tile_masks] == [7, 0]
        assert db.compute_cycles == 1 + 8

    def test_mixed_thresholds(self):
        weights = [[1] * 16 for _ in range(16)] + [[3] * 16 for _ in range(16)]
        db, dense = both(weights, [255] * 16, RunConfig())
        assert db.compute_cycles == 8 * (1 + 2)
        assert dense.compute_cycles == 8 * 16
        assert dense.cycles / db.cycles == pytest.approx(128 / 24)

    def test_weight_load_cycles(self):
        cfg = RunConfig(include_weight_load_cycles=True)
        db, dense = both([[1] * 16 for _ in range(16)], [255] * 16, cfg)
        assert db.load_cycles == 1
        assert db.cycles == 9
        assert dense.cycles == 64 + 8

    def test_pass_tallies(self):
        db, dense = both([[1] * 16 for _ in range(16)], [255] * 16, RunConfig())
        assert [(p.effective_cells, p.total_cells) for p in db.passes] == [(256, 256)]
        assert sum(p.effective_cells for p in dense.passes) == 16 * 16
        assert sum(p.total_cells for p in dense.passes) == 16 * 16 * 8

    def test_event_tallies(self):
        db, _ = both([[1] * 20 for _ in range(3)], [255] * 20, RunConfig())
        t = db.tallies
        assert t.compute_cycles == 16
        assert t.row_loads == 2
        assert t.buffer_writes == 3
        assert t.buffer_reads == 2
        assert t.post_process_ops == 16 * 3


# ===========================================================================
# Tests: Hooks
# ===========================================================================

class TestSimHooks:

    def test_events(self):
        hook = RecordingHook()
        layer = map_layer(quantize([[1] * 4]), SMALL)
        out = run_layer(layer, [1, 0, 0, 0], RunConfig(macro=SMALL), SimMode.DBPIM, [hook])

        assert hook.events[0] == "start" and hook.events[-1] == "end"
        assert hook.events.count("cycle") == out.compute_cycles == 1
        assert hook.events.count("skip") == 7
        assert hook.events.count("load") == 1
        assert hook.events.count("accumulate") == 1
        assert hook.events.count("write_back") == 1

    def test_trace(self):
        out = io.StringIO()
        layer = map_layer(quantize([[16, -128]]), SMALL)
        run_layer(layer, [1, 1], RunConfig(macro=SMALL), SimMode.DBPIM, [TraceHook(out)])

        lines = out.getvalue().splitlines()
        assert lines[0].startswith("layer layer mode=dbpim")
        assert "  mask row=0 xxxxxxx. surviving=[0]" in lines
        assert "cycle=0 row=0 column=0 weight=1 terms=[-112] psums=[-112]" in lines
        assert "write_back filters=[0] values=[-112]" in lines
        assert lines[-1].startswith("end layer cycles=1")
