"""
Buffer capacity checks of a compiled layer.

Sizes: an instruction word is 4 bytes and one word covers the whole bit-cycle burst of a
row; a weight cell is 1 bit; a metadata entry is 3 bits (sign and 2-bit index); inputs are
1 byte and outputs 4 bytes. Weight and meta buffers hold one pass image at a time, the
feature and instruction buffers hold the whole layer.
"""

from __future__ import annotations
import math

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..config import BufferConfig
from ..errors import CapacityError
from .types import CompiledLayer, DbPimPassImage, InstructionStream


INSTRUCTION_BYTES = 4
META_BITS = 3
INPUT_BYTES = 1
OUTPUT_BYTES = 4


class BufferUsage(BaseModel):
    """
    Bytes a layer needs in every on-chip buffer.
    """

    feature_bytes: int
    instruction_bytes: int
    weight_bytes: int
    meta_bytes: int
    model_config = ConfigDict(frozen=True)


def buffer_usage(layer: CompiledLayer, stream: InstructionStream) -> BufferUsage:

    words = sum(1 for ins in stream.instructions if ins.op != "compute")
    words += sum(len(p.row_schedule) for p in layer.passes)

    weight_bits = max((int(np.count_nonzero(p.allocated)) for p in layer.passes), default=0)
    meta_bits = max(
        (int(np.count_nonzero(p.enabled)) * META_BITS for p in layer.passes if isinstance(p, DbPimPassImage)),
        default=0,
    )

    return BufferUsage(
        feature_bytes=layer.reduction_length * INPUT_BYTES + layer.num_filters * OUTPUT_BYTES,
        instruction_bytes=words * INSTRUCTION_BYTES,
        weight_bytes=math.ceil(weight_bits / 8),
        meta_bytes=math.ceil(meta_bits / 8),
    )


def check_buffers(layer: CompiledLayer, stream: InstructionStream, buffers: BufferConfig) -> BufferUsage:
    """
    Raises:
        CapacityError: Naming the first buffer the layer overflows.
    """

    usage = buffer_usage(layer, stream)

    for name in ("feature_bytes", "instruction_bytes", "weight_bytes", "meta_bytes"):
        need, have = getattr(usage, name), getattr(buffers, name)
        if need > have:
            raise CapacityError(f"layer {layer.name} needs {need} bytes of {name.removesuffix('_bytes')} buffer, {have} available")

    return usage
