from __future__ import annotations
from enum import StrEnum
from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, NonNegativeInt, PositiveInt, model_validator

from .fta import TableMode


BITS_PER_WEIGHT = 8
INPUT_BITS = 8


class Signedness(StrEnum):
    """
    Encoding of input features. The values double as tensor file dtypes.
    """

    UNSIGNED8 = "u8"
    SIGNED8 = "i8"

    @property
    def low(self) -> int:
        return 0 if self == Signedness.UNSIGNED8 else -128

    @property
    def high(self) -> int:
        return 255 if self == Signedness.UNSIGNED8 else 127

    def contains(self, v: int) -> bool:
        return self.low <= v <= self.high

    def clamp(self, v: int) -> int:
        return max(self.low, min(self.high, v))


class EnergyModel(BaseModel):
    """
    Per-event energy constants in arbitrary units.

    The defaults are calibration placeholders, not measured values.

    Attributes:
        macro_bit_cycle: One bit-serial compute cycle of a macro.
        row_load: Writing one row of weights into the macro.
        buffer_read: Fetching one input group from the feature buffer.
        buffer_write: Writing one output back to the feature buffer.
        post_process_op: One shift-accumulate of one post-processing unit.
    """

    macro_bit_cycle: NonNegativeFloat = 1.0
    row_load: NonNegativeFloat = 0.1
    buffer_read: NonNegativeFloat = 0.05
    buffer_write: NonNegativeFloat = 0.05
    post_process_op: NonNegativeFloat = 0.01
    model_config = ConfigDict(extra="forbid", frozen=True)


class MacroConfig(BaseModel):
    """
    Geometry of the modeled PIM core.

    Attributes:
        num_macros: Macros in the PIM core. Passes are placed on them round robin.
        compartments_per_macro: Compartments per macro, each bound to one input element of a tile.
        dbmus_per_compartment: DBMU columns in one compartment row.
        rows_per_dbmu: SRAM cells per DBMU, i.e. rows of a compartment.
        input_group_size: Inputs analysed together by the IPU.
        dense_filters_per_pass: Filters a dense baseline macro computes at once.
        fta_mode: Query table membership rule used when quantizing.
        energy: Per-event energy constants.
    """

    num_macros: PositiveInt = 4
    compartments_per_macro: PositiveInt = 16
    dbmus_per_compartment: PositiveInt = 16
    rows_per_dbmu: PositiveInt = 64
    input_group_size: PositiveInt = 16
    dense_filters_per_pass: PositiveInt = 2
    fta_mode: TableMode = TableMode.EXACT
    energy: EnergyModel = Field(default_factory=EnergyModel)
    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def check_geometry(self) -> Self:
        if self.dbmus_per_compartment % 2:
            raise ValueError(f"dbmus_per_compartment must be divisible by every threshold (1 and 2), got {self.dbmus_per_compartment}")
        if self.dense_filters_per_pass * BITS_PER_WEIGHT > self.dbmus_per_compartment:
            raise ValueError(
                f"{self.dense_filters_per_pass} dense filters need {self.dense_filters_per_pass * BITS_PER_WEIGHT} cells per row, "
                f"a compartment row has {self.dbmus_per_compartment}"
            )
        if self.compartments_per_macro % self.input_group_size:
            raise ValueError(f"input_group_size {self.input_group_size} must divide compartments_per_macro {self.compartments_per_macro}")
        return self

    def filter_slots_per_pass(self, phi_th: int) -> int:
        """Filters one DB-PIM pass holds for the given threshold."""
        return self.dbmus_per_compartment // phi_th

    @property
    def max_reduction_length(self) -> int:
        return self.rows_per_dbmu * self.compartments_per_macro


class BufferConfig(BaseModel):
    """
    On-chip buffer capacities in bytes.
    """

    feature_bytes: PositiveInt = 128 * 1024
    instruction_bytes: PositiveInt = 16 * 1024
    weight_bytes: PositiveInt = 32 * 1024
    meta_bytes: PositiveInt = 96 * 1024
    model_config = ConfigDict(extra="forbid", frozen=True)


class SimdAffine(BaseModel):
    """
    Element-wise post-processing of the SIMD core: `(y * multiplier >> shift) + offset`.
    """

    multiplier: int = 1
    shift: NonNegativeInt = 0
    offset: int = 0
    model_config = ConfigDict(extra="forbid", frozen=True)

    @property
    def is_identity(self) -> bool:
        return self.multiplier == 1 and self.shift == 0 and self.offset == 0

    def apply(self, y: int) -> int:
        return ((y * self.multiplier) >> self.shift) + self.offset


class RunConfig(BaseModel):
    """
    Contents of a config file. Missing fields take the defaults, unknown fields are rejected.
    """

    format_version: Literal[1] = 1
    macro: MacroConfig = Field(default_factory=MacroConfig)
    buffers: BufferConfig = Field(default_factory=BufferConfig)
    signedness: Signedness = Signedness.UNSIGNED8
    ipu_skipping: bool = True
    include_weight_load_cycles: bool = False
    accumulator_bits: int = Field(default=32, ge=24, le=64)
    max_tensor_elements: PositiveInt = 1 << 20
    simd: SimdAffine = Field(default_factory=SimdAffine)
    seed: int = 0
    model_config = ConfigDict(extra="forbid", frozen=True)

    @property
    def accumulator_bound(self) -> int:
        return (1 << (self.accumulator_bits - 1)) - 1
