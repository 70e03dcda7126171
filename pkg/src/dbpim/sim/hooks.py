from __future__ import annotations
from abc import ABC
from collections.abc import Sequence
from typing import TYPE_CHECKING

from numpy.typing import NDArray
import numpy as np

from ..compiler import CompiledLayer, LoadWeights, SimMode
from ..ipu import BitColumnMask, ColumnStep
from .macro import MacroState

if TYPE_CHECKING:
    from .runner import SimOutput


class SimHook(ABC):
    """
    Hook for the layer simulation.

    Hooks are called at the events of the instruction stream. They can be used to trace,
    count or inspect the macro state. The simulation runs synchronously, so hooks are plain methods.
    """

    def on_layer_start(self, layer: CompiledLayer, mode: SimMode, inputs: Sequence[int], masks: Sequence[BitColumnMask]) -> None:
        """
        Called before the first instruction.

        Args:
            layer: The compiled layer.
            mode: The simulated macro.
            inputs: The input vector.
            masks: The merged bit-column mask of every tile, in row order.
        """

        pass


    def on_load(self, state: MacroState, instruction: LoadWeights) -> None:
        """
        Called after rows of a pass image have been written into the macro.
        """

        pass


    def on_bit_cycle(self, state: MacroState, row: int, step: ColumnStep, sums: NDArray[np.int64]) -> None:
        """
        Called after a bit cycle has executed.

        Args:
            state: The macro state after the cycle.
            row: The active row.
            step: The processed input column.
            sums: The adder tree output of every filter slot, before shifting.
        """

        pass


    def on_skip(self, state: MacroState, row: int, column: int) -> None:
        """
        Called when the IPU skips a bit column.
        """

        pass


    def on_accumulate(self, state: MacroState, row: int) -> None:
        """
        Called after the partial sums of a row have been added to the accumulators.
        """

        pass


    def on_write_back(self, state: MacroState, filters: Sequence[int], values: Sequence[int]) -> None:
        """
        Called when a pass writes its outputs back.

        Args:
            state: The macro state.
            filters: Layer positions of the written filters.
            values: The written values after SIMD post-processing.
        """

        pass


    def on_layer_end(self, output: SimOutput) -> None:
        """
        Called with the result of the layer.
        """

        pass
