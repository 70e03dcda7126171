"""
Bit-accurate model of one macro.

A DBMU column stores one complementary block as the pair (Q, Q-bar). With input bit `x`
the two AND gates give `O_Q = Q & x` and `O_Qb = ~Q & x`, so exactly one of the two
weights 2^(2i+1) and 2^(2i) is selected when `x` is one. The sign applied by the CSD-based
adder tree turns that into the stored digit. Per filter slot the adder tree sums the
terms of all its columns over all compartments; the post-processing unit then shifts the
sum by the significance of the input column and accumulates it.

`dbmu_compute` and `csd_adder_tree` model a single cell and a single tree. The simulator
runs the vectorized form: `PassImage.terms` holds `dbmu_compute` of every cell for an input
bit of one, and `slot_sums` reduces them per filter slot with `tree_reduce`.
"""

from __future__ import annotations
from collections.abc import Sequence
import logging

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

from ..compiler import DbmuSlot, PassImage
from ..errors import AccumulatorOverflowError, DbPimError
from ..ipu import ColumnStep


logger = logging.getLogger(__name__)


class EventTallies(BaseModel):
    """
    Event counts of a simulation, the inputs of the energy model.
    """

    compute_cycles: int = 0
    skipped_cycles: int = 0
    row_loads: int = 0
    buffer_reads: int = 0
    buffer_writes: int = 0
    post_process_ops: int = 0
    active_slot_cycles: int = 0

    def __add__(self, other: EventTallies) -> EventTallies:
        return EventTallies.model_validate({k: v + getattr(other, k) for k, v in self.model_dump().items()})


class MacroState(BaseModel):
    """
    Mutable state of a macro while a layer streams through it.

    Attributes:
        image: Pass image currently written into the macro.
        loaded_rows: Rows of `image` that have been written.
        psums: Shift-accumulated partial sums of the current row, per filter slot.
        accumulators: Output accumulators of the current pass, per filter slot.
        accumulator_bound: Largest magnitude an accumulator may hold.
        tallies: Event counts so far.
    """

    image: PassImage | None = None
    loaded_rows: set[int] = Field(default_factory=set)
    psums: NDArray[np.int64] = Field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    accumulators: NDArray[np.int64] = Field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    accumulator_bound: int = (1 << 31) - 1
    tallies: EventTallies = Field(default_factory=EventTallies)
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def cycles(self) -> int:
        return self.tallies.compute_cycles

    def require_image(self) -> PassImage:
        if self.image is None:
            raise DbPimError("internal error: no pass image loaded")
        return self.image

    def load(self, image: PassImage, rows: range) -> None:
        """
        Writes `rows` of `image` into the macro, starting a new pass when the image changes.
        """

        if self.image is None or self.image.pass_index != image.pass_index:
            self.image = image
            self.loaded_rows = set()
            self.psums = np.zeros(len(image.members), dtype=np.int64)
            self.accumulators = np.zeros(len(image.members), dtype=np.int64)

        self.loaded_rows.update(rows)
        self.tallies.row_loads += len(rows)

    def check_bound(self, values: NDArray[np.int64], what: str) -> None:
        """
        Raises:
            AccumulatorOverflowError: If a value exceeds the accumulator width.
        """
        over = np.flatnonzero(np.abs(values) > self.accumulator_bound)
        if len(over):
            slot = int(over[0])
            raise AccumulatorOverflowError(
                f"{what} of filter slot {slot} reached {int(values[slot])}, accumulator bound is {self.accumulator_bound}"
            )

    def accumulate(self) -> None:
        """Adds the row partial sums into the accumulators and clears them."""
        self.accumulators = self.accumulators + self.psums
        self.check_bound(self.accumulators, "accumulator")
        self.psums = np.zeros_like(self.psums)

    def drain(self) -> NDArray[np.int64]:
        """Returns and clears the accumulators."""
        out = self.accumulators
        self.accumulators = np.zeros_like(out)
        return out


def dbmu_compute(slot: DbmuSlot, input_bit: int) -> int:
    """
    Signed term of one DBMU for one input bit: `sign * (O_Q * 2^(2i+1) + O_Qb * 2^(2i))`.
    """

    if not slot.enabled:
        return 0

    q = slot.stored_pair
    o_q = q & input_bit
    o_qb = (1 - q) & input_bit

    return slot.sign * ((o_q << (2 * slot.index + 1)) + (o_qb << (2 * slot.index)))


def tree_reduce(operands: NDArray[np.int64]) -> NDArray[np.int64]:
    """
    Pairwise adder tree over the last axis. Odd levels are padded with a zero operand.
    """

    level = operands
    if level.shape[-1] == 0:
        return np.zeros(level.shape[:-1], dtype=np.int64)

    while level.shape[-1] > 1:
        if level.shape[-1] % 2:
            level = np.concatenate([level, np.zeros((*level.shape[:-1], 1), dtype=level.dtype)], axis=-1)
        level = level[..., 0::2] + level[..., 1::2]

    return level[..., 0]


def csd_adder_tree(terms: Sequence[int] | NDArray[np.int64]) -> int:
    """
    Sums signed terms with a pairwise adder tree.
    """
    return int(tree_reduce(np.asarray(terms, dtype=np.int64).reshape(1, -1))[0])


def slot_sums(image: PassImage, row: int, input_bits: NDArray[np.int64]) -> NDArray[np.int64]:
    """
    Adder tree outputs of every filter slot of `row` for one input column.

    Args:
        image: The pass image.
        row: The active row.
        input_bits: The current bit of the input bound to each compartment.

    Returns:
        One sum per filter of the pass, in slot order.
    """

    terms = image.terms[row] * input_bits[:, None]
    used = terms[:, :len(image.members) * image.group_width]
    per_slot = used.reshape(image.compartments, len(image.members), image.group_width).transpose(1, 0, 2)

    return tree_reduce(per_slot.reshape(len(image.members), -1))


def run_bit_cycle(state: MacroState, step: ColumnStep, row: int, input_bits: NDArray[np.int64]) -> MacroState:
    """
    Executes one bit cycle: every slot of the active row computes, the adder trees reduce
    per filter slot, and the post-processing units shift-accumulate by the column weight.

    Raises:
        DbPimError: If the row has not been loaded.
        AccumulatorOverflowError: If a partial sum leaves the accumulator range.
    """

    image = state.require_image()

    if row not in state.loaded_rows:
        raise DbPimError(f"internal error: row {row} of pass {image.pass_index} computed before it was loaded")

    sums = slot_sums(image, row, input_bits)
    state.psums = state.psums + step.weight * sums
    state.check_bound(state.psums, "partial sum")

    state.tallies.compute_cycles += 1
    state.tallies.post_process_ops += len(image.members)
    state.tallies.active_slot_cycles += int(np.count_nonzero(image.allocated[row]))

    return state
