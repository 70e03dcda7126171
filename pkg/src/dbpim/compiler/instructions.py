from __future__ import annotations

from ..config import INPUT_BITS
from .types import Accumulate, Compute, CompiledLayer, Instruction, InstructionStream, LoadWeights, SkipFilters, WriteBack


def emit_instructions(layer: CompiledLayer) -> InstructionStream:
    """
    Emits the instruction stream of a layer.

    Per pass: one `LoadWeights` for all rows, then for every scheduled row eight `Compute`
    bit cycles (most significant column first) and an `Accumulate`, and a final `WriteBack`.
    Which `Compute` cycles actually run is decided by the IPU at simulation time.
    """

    instructions: list[Instruction] = []

    if layer.skipped:
        instructions.append(SkipFilters(filters=layer.skipped, reason="all-zero filter"))

    for p in layer.passes:

        instructions.append(LoadWeights(pass_index=p.pass_index, macro=p.macro, row_start=0, row_stop=p.rows))

        for row, _ in p.row_schedule:
            instructions.extend(Compute(pass_index=p.pass_index, row=row, column=b) for b in reversed(range(INPUT_BITS)))
            instructions.append(Accumulate(pass_index=p.pass_index, row=row))

        instructions.append(WriteBack(pass_index=p.pass_index, filters=p.members))

    return InstructionStream(instructions=tuple(instructions))
