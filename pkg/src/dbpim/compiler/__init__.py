from .types import (
    SimMode, DbmuSlot, PassImage, DbPimPassImage, DensePassImage, CompiledLayer, dense_bit_weight,
    MetadataRecord, MetadataImage,
    LoadWeights, Compute, Accumulate, WriteBack, SkipFilters, Instruction, InstructionStream,
)
from .mapping import map_layer, map_dense_layer, decode_weights, check_layer_shape
from .metadata import emit_metadata, apply_metadata
from .instructions import emit_instructions
from .capacity import BufferUsage, buffer_usage, check_buffers
from .documents import CompiledFile, to_compiled_file, from_compiled_file
