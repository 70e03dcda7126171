import csv
import io

import numpy as np
import pytest
from pydantic import ValidationError

from dbpim import ArgumentError, EnergyModel, Filter, MacroConfig, RunConfig, TableMode, UtilizationRecord, fta_quantize, speedup_and_energy, utilization
from dbpim.compiler import SimMode, map_dense_layer, map_layer
from dbpim.metrics import CSV_COLUMNS, aggregate_utilization, estimate_energy, report_csv
from dbpim.sim import EventTallies, PassTallies, SimOutput, run_layer


def simulate(weights: list[list[int]], inputs: list[int], name: str = "layer", cfg: RunConfig | None = None) -> tuple[SimOutput, SimOutput]:
    cfg = cfg or RunConfig()
    filters = fta_quantize([Filter(weights=tuple(w), filter_id=i) for i, w in enumerate(weights)])
    return (
        run_layer(map_layer(filters, cfg.macro, name), inputs, cfg, SimMode.DBPIM),
        run_layer(map_dense_layer(filters, cfg.macro, name), inputs, cfg, SimMode.DENSE),
    )


def output(mode: SimMode, cycles: int, layer: str = "layer", load_flag: bool = False) -> SimOutput:
    return SimOutput(
        layer=layer,
        mode=mode,
        outputs=(1,),
        compute_cycles=cycles,
        load_cycles=0,
        include_weight_load_cycles=load_flag,
        tallies=EventTallies(compute_cycles=cycles),
        passes=(),
        tile_masks=(),
    )


# ===========================================================================
# Tests: Utilization
# ===========================================================================

class TestUtilization:

    def test_record(self):
        r = UtilizationRecord.of(3, 4)
        assert r is not None
        assert r.u_act == 0.75

    def test_no_cells(self):
        assert UtilizationRecord.of(0, 0) is None

    def test_inconsistent_record_rejected(self):
        with pytest.raises(ValidationError):
            UtilizationRecord(effective_cells=1, total_cells=4, u_act=0.5)
        with pytest.raises(ValidationError):
            UtilizationRecord(effective_cells=5, total_cells=4, u_act=1.25)

    def test_full_dbpim_utilization(self):
        db, _ = simulate([[1] * 16 for _ in range(16)], [255] * 16)
        record = utilization(db.passes[0])
        assert record is not None
        assert record.u_act == 1.0

    def test_dense_utilization_of_single_bit_weights(self):
        _, dense = simulate([[1] * 16 for _ in range(16)], [255] * 16)
        record = aggregate_utilization(dense.passes)
        assert record is not None
        assert record.u_act == 1 / 8

    def test_dbpim_never_below_dense(self):
        db, dense = simulate([[85, -62, 3, 127, 0, 9, 100, -100] for _ in range(6)], [1] * 8)
        db_record, dense_record = aggregate_utilization(db.passes), aggregate_utilization(dense.passes)
        assert db_record is not None and dense_record is not None
        assert db_record.u_act >= dense_record.u_act

    def test_at_most_disabled_slots_lower_utilization(self):
        cfg = RunConfig(macro=MacroConfig(fta_mode=TableMode.AT_MOST))
        filters = fta_quantize([Filter(weights=(3, 3, 3, 0, 0))], TableMode.AT_MOST)
        db = run_layer(map_layer(filters, cfg.macro), [1] * 5, cfg, SimMode.DBPIM)

        record = utilization(db.passes[0])
        assert record is not None
        assert (record.effective_cells, record.total_cells) == (6, 10)
        assert record.u_act == 0.6

    def test_exact_mode_fills_the_same_filter(self):
        db, _ = simulate([[3, 3, 3, 0, 0]], [1] * 5)
        record = utilization(db.passes[0])
        assert record is not None
        assert record.u_act == 1.0

    def test_dense_utilization_on_random_weights(self):
        rng = np.random.default_rng(11)
        weights = rng.integers(-128, 128, size=(16, 64)).tolist()
        db, dense = simulate(weights, [1] * 64)

        filters = fta_quantize([Filter(weights=tuple(w), filter_id=i) for i, w in enumerate(weights)])
        stored_bits = sum((w & 0xFF).bit_count() for f in filters for w in f.weights)

        record = aggregate_utilization(dense.passes)
        assert record is not None
        assert (record.effective_cells, record.total_cells) == (stored_bits, 16 * 64 * 8)
        assert record.u_act < 0.5

        db_record = aggregate_utilization(db.passes)
        assert db_record is not None and db_record.u_act == 1.0

    def test_empty_pass(self):
        tallies = PassTallies(pass_index=0, macro=0, filters=(), compute_cycles=0, skipped_cycles=0, effective_cells=0, total_cells=0)
        assert utilization(tallies) is None


# ===========================================================================
# Tests: Energy
# ===========================================================================

class TestEnergy:

    def test_weighted_sum(self):
        model = EnergyModel(macro_bit_cycle=1, row_load=2, buffer_read=3, buffer_write=4, post_process_op=5)
        tallies = EventTallies(compute_cycles=1, row_loads=1, buffer_reads=1, buffer_writes=1, post_process_ops=1)
        assert estimate_energy(tallies, model) == 15

    def test_skipped_cycles_are_free(self):
        model = EnergyModel()
        assert estimate_energy(EventTallies(skipped_cycles=100), model) == 0

    def test_monotone_in_events(self):
        model = EnergyModel()
        base = EventTallies(compute_cycles=4, row_loads=1)
        assert estimate_energy(base + EventTallies(compute_cycles=1), model) > estimate_energy(base, model)

    def test_tallies_add(self):
        total = EventTallies(compute_cycles=1, buffer_reads=2) + EventTallies(compute_cycles=3, row_loads=1)
        assert (total.compute_cycles, total.buffer_reads, total.row_loads) == (4, 2, 1)

    def test_negative_constant_rejected(self):
        with pytest.raises(ValidationError):
            EnergyModel(row_load=-1)


# ===========================================================================
# Tests: Reports
# ===========================================================================

class TestSpeedupAndEnergy:

    def test_identical_runs(self):
        report = speedup_and_energy([output(SimMode.DBPIM, 10)], [output(SimMode.DENSE, 10)], EnergyModel())
        assert report.layers[0].speedup == 1.0
        assert report.layers[0].energy_savings == 0.0
        assert report.aggregate.speedup == 1.0

    def test_threshold_one_layer(self):
        db, dense = simulate([[1] * 16 for _ in range(16)], [255] * 16)
        report = speedup_and_energy([db], [dense], EnergyModel())
        line = report.layers[0]
        assert line.speedup == 8.0
        assert line.energy_savings is not None and 0 < line.energy_savings < 1
        assert line.dbpim.energy < line.dense.energy
        assert line.outputs == db.outputs

    def test_aggregate_uses_totals(self):
        a_db, a_dense = simulate([[1] * 16 for _ in range(16)], [255] * 16, "a")
        b_db, b_dense = simulate([[3] * 16 for _ in range(16)], [255] * 16, "b")
        report = speedup_and_energy([a_db, b_db], [a_dense, b_dense], EnergyModel())

        assert [l.speedup for l in report.layers] == [8.0, 4.0]
        assert report.aggregate.dbpim_cycles == 8 + 16
        assert report.aggregate.dense_cycles == 64 + 64
        assert report.aggregate.speedup == 128 / 24
        assert report.aggregate.mean_layer_speedup == 6.0

    def test_zero_dbpim_cycles(self):
        report = speedup_and_energy([output(SimMode.DBPIM, 0)], [output(SimMode.DENSE, 8)], EnergyModel())
        assert report.layers[0].speedup is None
        assert report.aggregate.mean_layer_speedup is None

    def test_dense_outputs_when_requested(self):
        db, dense = simulate([[1, 2]], [3, 4])
        report = speedup_and_energy([db], [dense], EnergyModel(), mode=SimMode.DENSE)
        assert report.mode == SimMode.DENSE
        assert report.layers[0].outputs == dense.outputs

    def test_different_layers(self):
        with pytest.raises(ArgumentError):
            speedup_and_energy([output(SimMode.DBPIM, 1, "a")], [output(SimMode.DENSE, 1, "b")], EnergyModel())

    def test_swapped_modes(self):
        with pytest.raises(ArgumentError):
            speedup_and_energy([output(SimMode.DENSE, 1)], [output(SimMode.DENSE, 1)], EnergyModel())

    def test_load_flags_disagree(self):
        with pytest.raises(ArgumentError):
            speedup_and_energy([output(SimMode.DBPIM, 1, load_flag=True)], [output(SimMode.DENSE, 1)], EnergyModel())

    def test_weight_only_isolates_skipping(self):
        weights, inputs = [[1] * 16 for _ in range(16)], [15] * 16
        db, dense = simulate(weights, inputs)
        weight_only, _ = simulate(weights, inputs, cfg=RunConfig(ipu_skipping=False))

        report = speedup_and_energy([db], [dense], EnergyModel(), weight_only=[weight_only])
        line = report.layers[0]

        assert line.weight_only is not None
        assert (line.dbpim.cycles, line.weight_only.cycles, line.dense.cycles) == (4, 8, 64)
        assert (line.speedup, line.weight_only_speedup) == (16.0, 8.0)
        assert report.aggregate.weight_only_cycles == 8
        assert report.aggregate.weight_only_speedup == 8.0
        assert line.outputs == weight_only.outputs

    def test_weight_only_never_faster_than_combined(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            weights = rng.integers(-128, 128, size=(int(rng.integers(1, 20)), 32)).tolist()
            inputs = (rng.integers(0, 256, size=32) * (rng.random(32) < 0.5)).tolist()
            db, dense = simulate(weights, inputs)
            weight_only, _ = simulate(weights, inputs, cfg=RunConfig(ipu_skipping=False))

            report = speedup_and_energy([db], [dense], EnergyModel(), weight_only=[weight_only])
            line, a = report.layers[0], report.aggregate

            assert line.weight_only_speedup is not None and line.speedup is not None
            assert line.weight_only_speedup <= line.speedup
            assert a.weight_only_energy is not None and a.weight_only_energy >= a.dbpim_energy

    def test_weight_only_must_not_skip(self):
        db, dense = simulate([[1, 2]], [3, 4])
        with pytest.raises(ArgumentError):
            speedup_and_energy([db], [dense], EnergyModel(), weight_only=[db])

    def test_weight_only_must_cover_the_layers(self):
        with pytest.raises(ArgumentError):
            speedup_and_energy([output(SimMode.DBPIM, 1, "a")], [output(SimMode.DENSE, 1, "a")], EnergyModel(), weight_only=[output(SimMode.DBPIM, 1, "b")])

    def test_no_weight_only_runs(self):
        report = speedup_and_energy([output(SimMode.DBPIM, 10)], [output(SimMode.DENSE, 20)], EnergyModel())
        assert report.layers[0].weight_only is None
        assert report.aggregate.weight_only_speedup is None


class TestCsv:

    def test_rows(self):
        a_db, a_dense = simulate([[1] * 16 for _ in range(16)], [255] * 16, "a")
        report = speedup_and_energy([a_db, output(SimMode.DBPIM, 0, "b")], [a_dense, output(SimMode.DENSE, 8, "b")], EnergyModel())

        rows = list(csv.reader(io.StringIO(report_csv(report))))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert [r[0] for r in rows[1:]] == ["a", "b", "aggregate"]
        assert float(rows[1][3]) == 8.0
        assert rows[2][3] == ""
        assert rows[2][7] == ""

    def test_weight_only_columns(self):
        weights, inputs = [[1] * 16 for _ in range(16)], [15] * 16
        db, dense = simulate(weights, inputs)
        weight_only, _ = simulate(weights, inputs, cfg=RunConfig(ipu_skipping=False))
        report = speedup_and_energy([db], [dense], EnergyModel(), weight_only=[weight_only])

        rows = list(csv.DictReader(io.StringIO(report_csv(report))))
        assert [(r["weight_only_cycles"], r["weight_only_speedup"]) for r in rows] == [("8", "8.0"), ("8", "8.0")]

    def test_weight_only_cells_empty_without_runs(self):
        report = speedup_and_energy([output(SimMode.DBPIM, 10)], [output(SimMode.DENSE, 20)], EnergyModel())
        rows = list(csv.DictReader(io.StringIO(report_csv(report))))
        assert all(r["weight_only_cycles"] == r["weight_only_speedup"] == "" for r in rows)
