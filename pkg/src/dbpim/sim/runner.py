from __future__ import annotations
from collections.abc import Sequence
import logging
import math

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict

from ..compiler import Accumulate, Compute, CompiledLayer, LoadWeights, SimMode, SkipFilters, WriteBack, emit_instructions
from ..config import INPUT_BITS, RunConfig
from ..errors import ArgumentError, DbPimError, RangeError, ShapeError
from ..ipu import BitColumnMask, ColumnStep, analyze_tensor, column_weight, merge_masks
from .hooks import SimHook
from .macro import EventTallies, MacroState, run_bit_cycle, slot_sums


logger = logging.getLogger(__name__)


class PassTallies(BaseModel):
    """
    Per-pass counts.

    Attributes:
        effective_cells: Cells of the pass that hold a non-zero bit.
        total_cells: Cells allocated to the filters of the pass.
    """

    pass_index: int
    macro: int
    filters: tuple[int, ...]
    compute_cycles: int
    skipped_cycles: int
    effective_cells: int
    total_cells: int
    model_config = ConfigDict(frozen=True)


class SimOutput(BaseModel):
    """
    Result of simulating one layer on one input vector.

    Attributes:
        layer: Layer name.
        mode: The simulated macro.
        outputs: One value per filter, in layer order, after SIMD post-processing.
        compute_cycles: Bit cycles executed.
        load_cycles: Row loads, one cycle each.
        include_weight_load_cycles: Whether `cycles` counts the row loads.
        input_skipping: Whether the IPU skipped zero bit columns in this run.
        tallies: Event counts for the energy model.
        passes: Per-pass counts.
        tile_masks: Merged bit-column mask of every tile. All columns survive when skipping is off.
    """

    layer: str
    mode: SimMode
    outputs: tuple[int, ...]
    compute_cycles: int
    load_cycles: int
    include_weight_load_cycles: bool = False
    input_skipping: bool = False
    tallies: EventTallies
    passes: tuple[PassTallies, ...]
    tile_masks: tuple[BitColumnMask, ...]

    @property
    def cycles(self) -> int:
        return self.compute_cycles + (self.load_cycles if self.include_weight_load_cycles else 0)


def tile_masks(inputs: Sequence[int], compartments: int, cfg: RunConfig, skipping: bool) -> list[BitColumnMask]:
    """
    Merged bit-column mask of every tile of `inputs`.

    Raises:
        RangeError: If an input lies outside the configured signedness.
    """

    rows = math.ceil(len(inputs) / compartments)
    masks: list[BitColumnMask] = []

    for t in range(rows):
        tile = inputs[t * compartments:(t + 1) * compartments]
        groups = analyze_tensor(tile, cfg.macro.input_group_size, cfg.signedness)
        if skipping:
            masks.append(merge_masks(groups, cfg.signedness))
        else:
            masks.append(BitColumnMask.from_flags([False] * INPUT_BITS, cfg.signedness))

    return masks


def input_bit_planes(inputs: Sequence[int], compartments: int) -> NDArray[np.int64]:
    """
    Bits of the inputs as `[row, column, compartment]`, padded with zero inputs.
    """

    rows = math.ceil(len(inputs) / compartments)
    padded = np.zeros(rows * compartments, dtype=np.int64)
    padded[:len(inputs)] = np.asarray(inputs, dtype=np.int64) & 0xFF
    tiles = padded.reshape(rows, compartments)

    return np.stack([(tiles >> b) & 1 for b in range(INPUT_BITS)], axis=1)


def run_layer(layer: CompiledLayer, inputs: Sequence[int], cfg: RunConfig, mode: SimMode, hooks: Sequence[SimHook] = ()) -> SimOutput:
    """
    Simulates a compiled layer on one input vector.

    The instruction stream is interpreted in order. On DB-PIM with skipping enabled, `Compute`
    instructions for columns the IPU finds all-zero in a tile are skipped and cost no cycle.
    The dense baseline always runs all eight columns.

    Args:
        layer: The compiled layer; its kind must match `mode`.
        inputs: One input per reduction position.
        cfg: Run configuration.
        mode: The macro to simulate.
        hooks: Simulation hooks.

    Raises:
        ArgumentError: If `mode` does not match the layer.
        ShapeError: If the input length does not match the reduction length.
        RangeError: If an input lies outside the configured signedness.
        AccumulatorOverflowError: If an accumulator leaves its range.
    """

    if layer.kind != mode:
        raise ArgumentError(f"layer {layer.name} is compiled for {layer.kind}, cannot simulate it as {mode}")
    if len(inputs) != layer.reduction_length:
        raise ShapeError(f"layer {layer.name} expects {layer.reduction_length} inputs, got {len(inputs)}")
    for i, v in enumerate(inputs):
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise RangeError(f"input {i} must be an integer, got {v!r}")
    inputs = [int(v) for v in inputs]

    compartments = layer.passes[0].compartments if layer.passes else cfg.macro.compartments_per_macro
    skipping = cfg.ipu_skipping and mode == SimMode.DBPIM

    masks = tile_masks(inputs, compartments, cfg, skipping)
    planes = input_bit_planes(inputs, compartments)
    images = {p.pass_index: p for p in layer.passes}

    outputs = [0] * layer.num_filters
    state = MacroState(accumulator_bound=cfg.accumulator_bound)
    per_pass = {p.pass_index: [0, 0] for p in layer.passes}

    for h in hooks: h.on_layer_start(layer, mode, inputs, masks)

    for ins in emit_instructions(layer).instructions:
        match ins:

            case SkipFilters(filters=filters):
                logger.debug("%s: filters %s skipped (%s)", layer.name, list(filters), ins.reason)

            case LoadWeights(pass_index=p, row_start=start, row_stop=stop):
                state.load(images[p], range(start, stop))
                for h in hooks: h.on_load(state, ins)

            case Compute(pass_index=p, row=row, column=column):
                if masks[row].mask[column]:
                    state.tallies.skipped_cycles += 1
                    per_pass[p][1] += 1
                    for h in hooks: h.on_skip(state, row, column)
                    continue

                step = ColumnStep(position=column, weight=column_weight(column, cfg.signedness))
                bits = planes[row, column]
                run_bit_cycle(state, step, row, bits)
                per_pass[p][0] += 1

                if hooks:
                    sums = slot_sums(state.require_image(), row, bits)
                    for h in hooks: h.on_bit_cycle(state, row, step, sums)

            case Accumulate(row=row):
                state.accumulate()
                valid = int(np.count_nonzero(state.require_image().valid[row]))
                state.tallies.buffer_reads += math.ceil(valid / cfg.macro.input_group_size)
                for h in hooks: h.on_accumulate(state, row)

            case WriteBack(filters=filters):
                values = [cfg.simd.apply(int(v)) for v in state.drain()]
                if len(values) != len(filters):
                    raise DbPimError(f"internal error: {len(values)} accumulators for {len(filters)} filters")
                for member, value in zip(filters, values):
                    outputs[member] = value
                state.tallies.buffer_writes += len(filters)
                for h in hooks: h.on_write_back(state, filters, values)

    # skipped filters have no pass and produce zero
    for member in layer.skipped:
        outputs[member] = cfg.simd.apply(0)

    result = SimOutput(
        layer=layer.name,
        mode=mode,
        outputs=tuple(outputs),
        compute_cycles=state.tallies.compute_cycles,
        load_cycles=state.tallies.row_loads,
        include_weight_load_cycles=cfg.include_weight_load_cycles,
        input_skipping=skipping,
        tallies=state.tallies,
        passes=tuple(
            PassTallies(
                pass_index=p.pass_index,
                macro=p.macro,
                filters=p.members,
                compute_cycles=per_pass[p.pass_index][0],
                skipped_cycles=per_pass[p.pass_index][1],
                effective_cells=int(np.count_nonzero(p.effective)),
                total_cells=int(np.count_nonzero(p.allocated)),
            )
            for p in layer.passes
        ),
        tile_masks=tuple(masks),
    )

    logger.debug("%s on %s: %d cycles, %d skipped", layer.name, mode, result.compute_cycles, state.tallies.skipped_cycles)

    for h in hooks: h.on_layer_end(result)

    return result
