from .errors import DbPimError, ArgumentError, ParseError, RangeError, ShapeError, CapacityError, AccumulatorOverflowError, VerificationError
from .config import MacroConfig, EnergyModel, BufferConfig, SimdAffine, RunConfig, Signedness
from .csd import CsdWord, DyadicBlock, DyadicBlockSet, to_csd, from_csd, count_nonzeros, to_dyadic_blocks
from .fta import Filter, TableMode, QueryTable, ThresholdedFilter, select_threshold, build_query_table, approximate_weight, fta_quantize
from .ipu import InputGroup, BitColumnMask, analyze_group, bit_serial_schedule
from .compiler import SimMode, CompiledLayer, map_layer, map_dense_layer, emit_metadata, emit_instructions
from .sim import MacroState, SimHook, SimOutput, run_bit_cycle, run_layer
from .metrics import UtilizationRecord, SimReport, utilization, speedup_and_energy
from .pipeline import Pipeline, PipelineState, Shared, Stage, PipelineHook

__all__ = [
    "DbPimError",
    "ArgumentError",
    "ParseError",
    "RangeError",
    "ShapeError",
    "CapacityError",
    "AccumulatorOverflowError",
    "VerificationError",
    "MacroConfig",
    "EnergyModel",
    "BufferConfig",
    "SimdAffine",
    "RunConfig",
    "Signedness",
    "CsdWord",
    "DyadicBlock",
    "DyadicBlockSet",
    "to_csd",
    "from_csd",
    "count_nonzeros",
    "to_dyadic_blocks",
    "Filter",
    "TableMode",
    "QueryTable",
    "ThresholdedFilter",
    "select_threshold",
    "build_query_table",
    "approximate_weight",
    "fta_quantize",
    "InputGroup",
    "BitColumnMask",
    "analyze_group",
    "bit_serial_schedule",
    "SimMode",
    "CompiledLayer",
    "map_layer",
    "map_dense_layer",
    "emit_metadata",
    "emit_instructions",
    "MacroState",
    "SimHook",
    "SimOutput",
    "run_bit_cycle",
    "run_layer",
    "UtilizationRecord",
    "SimReport",
    "utilization",
    "speedup_and_energy",
    "Pipeline",
    "PipelineState",
    "Shared",
    "Stage",
    "PipelineHook",
]
