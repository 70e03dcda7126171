from __future__ import annotations
from collections.abc import Sequence
from typing import TextIO

import numpy as np
from numpy.typing import NDArray

from ..compiler import CompiledLayer, LoadWeights, SimMode
from ..ipu import BitColumnMask, ColumnStep
from ..sim import MacroState, SimHook, SimOutput


def _ints(values: Sequence[int] | NDArray[np.int64]) -> str:
    return "[" + ",".join(str(int(v)) for v in values) + "]"


def _mask(m: BitColumnMask) -> str:
    return "".join("x" if m.mask[b] else "." for b in reversed(range(len(m.mask))))


class TraceHook(SimHook):
    """
    Writes a line-oriented trace of the simulation.

    One line per event: layer start with the tile masks (`x` marks a skipped column, most
    significant first), row loads, every executed or skipped bit cycle with the per-slot
    adder tree outputs and partial sums, accumulations and write-backs.

    Args:
        out: Text stream to write to.
    """

    def __init__(self, out: TextIO) -> None:
        self.out = out
        self.cycle = 0

    def write(self, line: str) -> None:
        self.out.write(line + "\n")

    def on_layer_start(self, layer: CompiledLayer, mode: SimMode, inputs: Sequence[int], masks: Sequence[BitColumnMask]) -> None:
        self.cycle = 0
        self.write(f"layer {layer.name} mode={mode} passes={len(layer.passes)} skipped_filters={_ints(layer.skipped)}")
        for row, m in enumerate(masks):
            self.write(f"  mask row={row} {_mask(m)} surviving={_ints(m.surviving_columns)}")

    def on_load(self, state: MacroState, instruction: LoadWeights) -> None:
        self.write(
            f"load pass={instruction.pass_index} macro={instruction.macro} "
            f"rows={instruction.row_start}..{instruction.row_stop - 1}"
        )

    def on_bit_cycle(self, state: MacroState, row: int, step: ColumnStep, sums: NDArray[np.int64]) -> None:
        self.write(
            f"cycle={self.cycle} row={row} column={step.position} weight={step.weight} "
            f"terms={_ints(sums)} psums={_ints(state.psums)}"
        )
        self.cycle += 1

    def on_skip(self, state: MacroState, row: int, column: int) -> None:
        self.write(f"skip row={row} column={column}")

    def on_accumulate(self, state: MacroState, row: int) -> None:
        self.write(f"accumulate row={row} acc={_ints(state.accumulators)}")

    def on_write_back(self, state: MacroState, filters: Sequence[int], values: Sequence[int]) -> None:
        self.write(f"write_back filters={_ints(filters)} values={_ints(values)}")

    def on_layer_end(self, output: SimOutput) -> None:
        self.write(
            f"end {output.layer} cycles={output.cycles} compute={output.compute_cycles} "
            f"loads={output.load_cycles} skipped={output.tallies.skipped_cycles}"
        )
