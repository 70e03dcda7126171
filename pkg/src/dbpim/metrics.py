"""
Utilization, speedup and energy estimates from simulator tallies, and their reports.
"""

from __future__ import annotations
from collections.abc import Iterable, Sequence
from typing import Literal, Self
import csv
import io

from pydantic import BaseModel, ConfigDict, model_validator

from .compiler import SimMode
from .config import EnergyModel
from .errors import ArgumentError
from .sim import EventTallies, PassTallies, SimOutput


class UtilizationRecord(BaseModel):
    """
    Actual utilization of the cells taking part in a computation.

    Attributes:
        effective_cells: Participating cells holding a non-zero bit.
        total_cells: All participating cells.
        u_act: `effective_cells / total_cells`.
    """

    effective_cells: int
    total_cells: int
    u_act: float
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_ratio(self) -> Self:
        if self.total_cells <= 0:
            raise ValueError("a utilization record needs participating cells")
        if not 0 <= self.effective_cells <= self.total_cells:
            raise ValueError(f"{self.effective_cells} effective cells out of {self.total_cells}")
        if self.u_act != self.effective_cells / self.total_cells:
            raise ValueError(f"u_act {self.u_act} is not {self.effective_cells}/{self.total_cells}")
        return self

    @classmethod
    def of(cls, effective_cells: int, total_cells: int) -> UtilizationRecord | None:
        """The record for the given counts, None when no cell participates."""
        if total_cells == 0:
            return None
        return cls(effective_cells=effective_cells, total_cells=total_cells, u_act=effective_cells / total_cells)


def utilization(tallies: PassTallies) -> UtilizationRecord | None:
    """
    Utilization of one pass. A pass without participating cells has no record.
    """
    return UtilizationRecord.of(tallies.effective_cells, tallies.total_cells)


def aggregate_utilization(passes: Iterable[PassTallies]) -> UtilizationRecord | None:
    """
    Utilization over several passes, from the summed cell counts.
    """
    passes = list(passes)
    return UtilizationRecord.of(sum(p.effective_cells for p in passes), sum(p.total_cells for p in passes))


def estimate_energy(tallies: EventTallies, model: EnergyModel) -> float:
    """
    Weighted sum of the simulation events. Row loads always cost energy, whether or not
    they are counted as cycles.
    """

    return (
        tallies.compute_cycles * model.macro_bit_cycle
        + tallies.row_loads * model.row_load
        + tallies.buffer_reads * model.buffer_read
        + tallies.buffer_writes * model.buffer_write
        + tallies.post_process_ops * model.post_process_op
    )


def _ratio(numerator: float, denominator: float) -> float | None:
    return None if denominator == 0 else numerator / denominator


class ModeReport(BaseModel):
    """
    Figures of one layer on one macro.
    """

    cycles: int
    compute_cycles: int
    load_cycles: int
    skipped_cycles: int
    energy: float
    utilization: UtilizationRecord | None
    pass_utilization: tuple[UtilizationRecord | None, ...]
    model_config = ConfigDict(frozen=True)

    @classmethod
    def of(cls, output: SimOutput, model: EnergyModel) -> ModeReport:
        return cls(
            cycles=output.cycles,
            compute_cycles=output.compute_cycles,
            load_cycles=output.load_cycles,
            skipped_cycles=output.tallies.skipped_cycles,
            energy=estimate_energy(output.tallies, model),
            utilization=aggregate_utilization(output.passes),
            pass_utilization=tuple(utilization(p) for p in output.passes),
        )


class LayerReport(BaseModel):
    """
    Per-layer line of a report.

    Attributes:
        outputs: Output values of the reported mode.
        speedup: Dense cycles over DB-PIM cycles, None when DB-PIM needs no cycle.
        energy_savings: `1 - dbpim energy / dense energy`, None when the dense energy is zero.
        weight_only: DB-PIM with input skipping turned off, when it was simulated.
        weight_only_speedup: Dense cycles over weight-only cycles.
        weight_only_energy_savings: `1 - weight-only energy / dense energy`.
    """

    layer: str
    dbpim: ModeReport
    dense: ModeReport
    speedup: float | None
    energy_savings: float | None
    outputs: tuple[int, ...]
    weight_only: ModeReport | None = None
    weight_only_speedup: float | None = None
    weight_only_energy_savings: float | None = None
    model_config = ConfigDict(frozen=True)


class AggregateReport(BaseModel):
    """
    Totals over all layers.

    Attributes:
        speedup: Ratio of the total cycles.
        mean_layer_speedup: Mean of the defined per-layer speedups, reported for comparison.
        weight_only_cycles: Total weight-only cycles, None when no weight-only run was given.
    """

    dbpim_cycles: int
    dense_cycles: int
    speedup: float | None
    mean_layer_speedup: float | None
    dbpim_energy: float
    dense_energy: float
    energy_savings: float | None
    dbpim_utilization: UtilizationRecord | None
    dense_utilization: UtilizationRecord | None
    weight_only_cycles: int | None = None
    weight_only_speedup: float | None = None
    weight_only_energy: float | None = None
    weight_only_energy_savings: float | None = None
    model_config = ConfigDict(frozen=True)


class SimReport(BaseModel):
    """
    The report written by `dbpim simulate`.
    """

    format_version: Literal[1] = 1
    mode: SimMode
    include_weight_load_cycles: bool
    layers: tuple[LayerReport, ...]
    aggregate: AggregateReport
    model_config = ConfigDict(frozen=True)


def _savings(energy: float, baseline: float) -> float | None:
    ratio = _ratio(energy, baseline)
    return None if ratio is None else 1 - ratio


def _check_runs(dbpim: Sequence[SimOutput], dense: Sequence[SimOutput], weight_only: Sequence[SimOutput] | None) -> None:

    names = [o.layer for o in dbpim]
    if names != [o.layer for o in dense]:
        raise ArgumentError(f"runs cover different layers: {names} vs {[o.layer for o in dense]}")
    if weight_only is not None and names != [o.layer for o in weight_only]:
        raise ArgumentError(f"weight-only runs cover different layers: {names} vs {[o.layer for o in weight_only]}")

    for label, runs, expected in (("DB-PIM", dbpim, SimMode.DBPIM), ("dense", dense, SimMode.DENSE), ("weight-only", weight_only or (), SimMode.DBPIM)):
        for o in runs:
            if o.mode != expected:
                raise ArgumentError(f"layer {o.layer} of the {label} runs was simulated as {o.mode}")

    for o in weight_only or ():
        if o.input_skipping:
            raise ArgumentError(f"layer {o.layer} of the weight-only runs skipped input bit columns")

    if len({o.include_weight_load_cycles for o in [*dbpim, *dense, *(weight_only or ())]}) > 1:
        raise ArgumentError("runs disagree on counting weight load cycles")


def speedup_and_energy(
        dbpim: Sequence[SimOutput],
        dense: Sequence[SimOutput],
        model: EnergyModel,
        mode: SimMode = SimMode.DBPIM,
        weight_only: Sequence[SimOutput] | None = None,
    ) -> SimReport:
    """
    Compares DB-PIM and dense runs of the same layers.

    Args:
        dbpim: DB-PIM results, one per layer.
        dense: Dense baseline results of the same layers, in the same order.
        model: Energy constants.
        mode: Whose outputs the layer lines carry.
        weight_only: DB-PIM results of the same layers without input skipping. They isolate
            the gain of the weight encoding from the gain of skipping zero input bit columns.

    Raises:
        ArgumentError: If the runs do not cover the same layers, or a weight-only run skipped inputs.
    """

    _check_runs(dbpim, dense, weight_only)

    layers: list[LayerReport] = []

    for k, (db, dn) in enumerate(zip(dbpim, dense)):
        db_report, dn_report = ModeReport.of(db, model), ModeReport.of(dn, model)
        wo_report = None if weight_only is None else ModeReport.of(weight_only[k], model)
        layers.append(LayerReport(
            layer=db.layer,
            dbpim=db_report,
            dense=dn_report,
            speedup=_ratio(dn_report.cycles, db_report.cycles),
            energy_savings=_savings(db_report.energy, dn_report.energy),
            outputs=db.outputs if mode == SimMode.DBPIM else dn.outputs,
            weight_only=wo_report,
            weight_only_speedup=None if wo_report is None else _ratio(dn_report.cycles, wo_report.cycles),
            weight_only_energy_savings=None if wo_report is None else _savings(wo_report.energy, dn_report.energy),
        ))

    db_cycles = sum(l.dbpim.cycles for l in layers)
    dn_cycles = sum(l.dense.cycles for l in layers)
    db_energy = sum(l.dbpim.energy for l in layers)
    dn_energy = sum(l.dense.energy for l in layers)
    speedups = [l.speedup for l in layers if l.speedup is not None]

    wo_cycles: int | None = None
    wo_energy: float | None = None
    if weight_only is not None:
        wo_cycles = sum(l.weight_only.cycles for l in layers if l.weight_only is not None)
        wo_energy = sum(l.weight_only.energy for l in layers if l.weight_only is not None)

    return SimReport(
        mode=mode,
        include_weight_load_cycles=bool(dbpim) and dbpim[0].include_weight_load_cycles,
        layers=tuple(layers),
        aggregate=AggregateReport(
            dbpim_cycles=db_cycles,
            dense_cycles=dn_cycles,
            speedup=_ratio(dn_cycles, db_cycles),
            mean_layer_speedup=sum(speedups) / len(speedups) if speedups else None,
            dbpim_energy=db_energy,
            dense_energy=dn_energy,
            energy_savings=_savings(db_energy, dn_energy),
            dbpim_utilization=aggregate_utilization(p for o in dbpim for p in o.passes),
            dense_utilization=aggregate_utilization(p for o in dense for p in o.passes),
            weight_only_cycles=wo_cycles,
            weight_only_speedup=None if wo_cycles is None else _ratio(dn_cycles, wo_cycles),
            weight_only_energy=wo_energy,
            weight_only_energy_savings=None if wo_energy is None else _savings(wo_energy, dn_energy),
        ),
    )


CSV_COLUMNS = (
    "layer", "dbpim_cycles", "dense_cycles", "speedup",
    "dbpim_energy", "dense_energy", "energy_savings", "dbpim_u_act", "dense_u_act",
    "weight_only_cycles", "weight_only_speedup", "weight_only_energy_savings",
)


def _cell(value: str | float | None) -> str:
    return "" if value is None else str(value)


def _u_act(record: UtilizationRecord | None) -> float | None:
    return None if record is None else record.u_act


def report_csv(report: SimReport) -> str:
    """
    One CSV row per layer plus an `aggregate` row. Undefined ratios and missing
    weight-only figures are empty cells.
    """

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)

    for l in report.layers:
        writer.writerow([_cell(v) for v in (
            l.layer, l.dbpim.cycles, l.dense.cycles, l.speedup,
            l.dbpim.energy, l.dense.energy, l.energy_savings,
            _u_act(l.dbpim.utilization), _u_act(l.dense.utilization),
            None if l.weight_only is None else l.weight_only.cycles, l.weight_only_speedup, l.weight_only_energy_savings,
        )])

    a = report.aggregate
    writer.writerow([_cell(v) for v in (
        "aggregate", a.dbpim_cycles, a.dense_cycles, a.speedup,
        a.dbpim_energy, a.dense_energy, a.energy_savings,
        _u_act(a.dbpim_utilization), _u_act(a.dense_utilization),
        a.weight_only_cycles, a.weight_only_speedup, a.weight_only_energy_savings,
    )])

    return buffer.getvalue()
