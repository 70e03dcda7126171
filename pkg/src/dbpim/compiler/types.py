from __future__ import annotations
from abc import ABC, abstractmethod
from enum import StrEnum
from typing import Annotated, Any, Literal, Self

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PrivateAttr, model_validator

from ..config import BITS_PER_WEIGHT
from ..rich import CompactReprMixin


class SimMode(StrEnum):
    """
    Which macro a layer is compiled for and simulated on.
    """

    DBPIM = "dbpim"
    DENSE = "dense"


class DbmuSlot(BaseModel):
    """
    One DBMU column of one compartment row.

    Attributes:
        enabled: Whether the slot holds a complementary block. Disabled slots contribute nothing.
        stored_pair: Which cell of the complementary pair holds the one (1 = Q, the upper digit; 0 = Q-bar, the lower digit).
        sign: Sign of the stored digit.
        index: Dyadic block index within the weight.
        owner: Layer position of the filter owning the slot, -1 if none.
    """

    enabled: bool
    stored_pair: Literal[0, 1] = 0
    sign: Literal[-1, 1] = 1
    index: Literal[0, 1, 2, 3] = 0
    owner: int = -1
    model_config = ConfigDict(frozen=True)

    @property
    def bit(self) -> int:
        return 2 * self.index + self.stored_pair

    @property
    def sign_bit(self) -> int:
        """Sign as stored in the metadata register: 0 for +, 1 for -."""
        return 0 if self.sign > 0 else 1


class PassImage(CompactReprMixin, BaseModel, ABC):
    """
    Macro contents for one pass: a group of filters sharing the macro while the reduction
    dimension is streamed row by row.

    Arrays are indexed `[row, compartment, column]`. Row `r` holds tile `r`, and compartment `c`
    of that row holds the weights at reduction position `r * compartments + c`. Column
    `k` belongs to filter slot `k // group_width`.

    Attributes:
        pass_index: Position of the pass in the layer.
        macro: Macro the pass is placed on.
        group_width: Columns per filter slot: the threshold for DB-PIM, 8 for the dense baseline.
        members: Layer positions of the filters in slot order.
        row_schedule: `(row, input base offset)` activations in execution order.
        valid: `[row, compartment]` flags of compartments bound to a real weight position.
    """

    kind: SimMode
    pass_index: int
    macro: int
    group_width: int
    members: tuple[int, ...]
    row_schedule: tuple[tuple[int, int], ...]
    valid: NDArray[np.bool_]
    model_config = ConfigDict(arbitrary_types_allowed=True)

    _terms: NDArray[np.int64] | None = PrivateAttr(default=None)

    @property
    def rows(self) -> int:
        return int(self.valid.shape[0])

    @property
    def compartments(self) -> int:
        return int(self.valid.shape[1])

    @property
    @abstractmethod
    def width(self) -> int:
        pass

    @property
    def filter_slots(self) -> int:
        """Filters the pass could hold."""
        return self.width // self.group_width

    @property
    def owner(self) -> NDArray[np.int64]:
        """Per column: layer position of the owning filter, -1 if the column is idle."""
        owner = np.full(self.width, -1, dtype=np.int64)
        for s, member in enumerate(self.members):
            owner[s * self.group_width:(s + 1) * self.group_width] = member
        return owner

    @property
    def allocated(self) -> NDArray[np.bool_]:
        """Cells participating in the pass: owned columns of valid compartments."""
        return self.valid[:, :, None] & (self.owner >= 0)[None, None, :]

    @property
    @abstractmethod
    def effective(self) -> NDArray[np.bool_]:
        """Participating cells that hold a non-zero bit."""
        pass

    @abstractmethod
    def compute_terms(self) -> NDArray[np.int64]:
        pass

    @property
    def terms(self) -> NDArray[np.int64]:
        """Signed contribution of every cell for an input bit of one."""
        if self._terms is None:
            self._terms = self.compute_terms()
        return self._terms

    def with_arrays(self, **arrays: NDArray[Any]) -> Self:
        """Copy of the image with some cell arrays replaced."""
        copy = self.model_copy(update=arrays)
        copy._terms = None
        return copy


class DbPimPassImage(PassImage):
    """
    A DB-PIM pass: every column stores one complementary block with sign and index metadata.

    Attributes:
        phi_th: Threshold shared by all filters of the pass.
        enabled: Slot holds a block.
        sign: +1 or -1 for enabled slots, 0 otherwise.
        index: Dyadic block index of enabled slots.
        position: Stored pair of enabled slots (1 = upper digit).
    """

    kind: Literal[SimMode.DBPIM] = SimMode.DBPIM
    phi_th: Literal[1, 2]
    enabled: NDArray[np.bool_]
    sign: NDArray[np.int8]
    index: NDArray[np.int8]
    position: NDArray[np.int8]

    @model_validator(mode="after")
    def check_arrays(self) -> Self:
        shape = self.enabled.shape
        for name, array in (("sign", self.sign), ("index", self.index), ("position", self.position)):
            if array.shape != shape:
                raise ValueError(f"{name} array has shape {array.shape}, expected {shape}")
        if shape[:2] != self.valid.shape:
            raise ValueError(f"slot arrays of shape {shape} do not match valid flags {self.valid.shape}")
        if self.group_width != self.phi_th:
            raise ValueError("a DB-PIM filter slot is phi_th columns wide")
        if len(self.members) > self.filter_slots:
            raise ValueError(f"{len(self.members)} filters exceed {self.filter_slots} filter slots")
        if np.any(self.enabled & ~self.allocated):
            raise ValueError("enabled slot outside the cells owned by a filter")
        return self

    @property
    def width(self) -> int:
        return int(self.enabled.shape[2])

    @property
    def effective(self) -> NDArray[np.bool_]:
        return self.enabled & self.allocated

    def compute_terms(self) -> NDArray[np.int64]:
        bits = 2 * self.index.astype(np.int64) + self.position.astype(np.int64)
        return np.where(self.enabled, self.sign.astype(np.int64) << bits, 0)

    def slot(self, row: int, compartment: int, column: int) -> DbmuSlot:
        """Typed view of one slot."""
        owner = int(self.owner[column]) if self.valid[row, compartment] else -1
        if not self.enabled[row, compartment, column]:
            return DbmuSlot(enabled=False, owner=owner)
        return DbmuSlot.model_validate({
            "enabled": True,
            "stored_pair": int(self.position[row, compartment, column]),
            "sign": int(self.sign[row, compartment, column]),
            "index": int(self.index[row, compartment, column]),
            "owner": owner,
        })


class DensePassImage(PassImage):
    """
    A dense baseline pass: every weight occupies eight cells holding its two's-complement bits.

    Attributes:
        bits: Stored bit of every cell; column `k` of a slot holds bit `k % 8`.
    """

    kind: Literal[SimMode.DENSE] = SimMode.DENSE
    bits: NDArray[np.int8]

    @model_validator(mode="after")
    def check_arrays(self) -> Self:
        if self.bits.shape[:2] != self.valid.shape:
            raise ValueError(f"bit array of shape {self.bits.shape} does not match valid flags {self.valid.shape}")
        if self.group_width != BITS_PER_WEIGHT:
            raise ValueError(f"a dense filter slot is {BITS_PER_WEIGHT} columns wide")
        if len(self.members) > self.filter_slots:
            raise ValueError(f"{len(self.members)} filters exceed {self.filter_slots} filter slots")
        return self

    @property
    def width(self) -> int:
        return int(self.bits.shape[2])

    @property
    def effective(self) -> NDArray[np.bool_]:
        return (self.bits != 0) & self.allocated

    def compute_terms(self) -> NDArray[np.int64]:
        weight = np.array([dense_bit_weight(k % BITS_PER_WEIGHT) for k in range(self.width)], dtype=np.int64)
        return self.bits.astype(np.int64) * weight[None, None, :]


def dense_bit_weight(bit: int) -> int:
    """Significance of a two's-complement weight bit."""
    return -(1 << bit) if bit == BITS_PER_WEIGHT - 1 else 1 << bit


type AnyPassImage = Annotated[DbPimPassImage | DensePassImage, Field(discriminator="kind")]


class CompiledLayer(CompactReprMixin, BaseModel):
    """
    A layer mapped onto the macro geometry.

    Attributes:
        kind: Macro the image is built for.
        name: Layer name used in reports.
        reduction_length: Weights per filter.
        filter_ids: Ids of the source filters, in layer order.
        phi_th: Threshold of every filter, in layer order.
        skipped: Layer positions of filters with no pass (all-zero filters on DB-PIM).
        passes: The pass images in execution order.
    """

    kind: SimMode
    name: str = "layer"
    reduction_length: int
    filter_ids: tuple[int, ...]
    phi_th: tuple[int, ...]
    skipped: tuple[int, ...] = ()
    passes: tuple[AnyPassImage, ...]
    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_coverage(self) -> Self:
        if len(self.phi_th) != len(self.filter_ids):
            raise ValueError("one threshold per filter is required")
        placed = sorted([m for p in self.passes for m in p.members] + list(self.skipped))
        if placed != list(range(len(self.filter_ids))):
            raise ValueError("every filter must be placed in exactly one pass or skipped")
        for p in self.passes:
            if p.kind != self.kind:
                raise ValueError(f"pass {p.pass_index} is a {p.kind} image inside a {self.kind} layer")
        return self

    @property
    def num_filters(self) -> int:
        return len(self.filter_ids)

    @property
    def macro_images(self) -> dict[int, list[AnyPassImage]]:
        """Pass images grouped by the macro they are placed on."""
        images: dict[int, list[AnyPassImage]] = {}
        for p in self.passes:
            images.setdefault(p.macro, []).append(p)
        return images


class MetadataRecord(BaseModel):
    """
    Sign and index of one enabled slot, as deposited in the meta buffer.
    """

    pass_index: NonNegativeInt
    row: NonNegativeInt
    compartment: NonNegativeInt
    column: NonNegativeInt
    sign: Literal[0, 1]
    index: Literal[0, 1, 2, 3]
    model_config = ConfigDict(frozen=True)


class MetadataImage(CompactReprMixin, BaseModel):
    """
    The metadata of a compiled DB-PIM layer in deposit order (pass, row, compartment, column).
    """

    format_version: Literal[1] = 1
    layer: str = "layer"
    records: tuple[MetadataRecord, ...]


class LoadWeights(BaseModel):
    """Write rows `[row_start, row_stop)` of a pass image into its macro."""
    op: Literal["load_weights"] = "load_weights"
    pass_index: int
    macro: int
    row_start: int
    row_stop: int
    model_config = ConfigDict(frozen=True)


class Compute(BaseModel):
    """One bit cycle of input column `column` against a loaded row. Skipped when the IPU masks the column."""
    op: Literal["compute"] = "compute"
    pass_index: int
    row: int
    column: int
    model_config = ConfigDict(frozen=True)


class Accumulate(BaseModel):
    """Add the shift-accumulated partial sums of a row into the output accumulators."""
    op: Literal["accumulate"] = "accumulate"
    pass_index: int
    row: int
    model_config = ConfigDict(frozen=True)


class WriteBack(BaseModel):
    """Write the accumulators of a pass back to the feature buffer."""
    op: Literal["write_back"] = "write_back"
    pass_index: int
    filters: tuple[int, ...]
    model_config = ConfigDict(frozen=True)


class SkipFilters(BaseModel):
    """Filters that get no pass; their outputs are pinned to zero."""
    op: Literal["skip_filters"] = "skip_filters"
    filters: tuple[int, ...]
    reason: str
    model_config = ConfigDict(frozen=True)


type Instruction = Annotated[LoadWeights | Compute | Accumulate | WriteBack | SkipFilters, Field(discriminator="op")]


class InstructionStream(CompactReprMixin, BaseModel):
    """
    Ordered instructions of one layer. Every `Compute` must follow a `LoadWeights` of its row.
    """

    instructions: tuple[Instruction, ...]
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_loaded(self) -> Self:
        loaded: set[tuple[int, int]] = set()
        for i, ins in enumerate(self.instructions):
            match ins:
                case LoadWeights(pass_index=p, row_start=start, row_stop=stop):
                    loaded.update((p, r) for r in range(start, stop))
                case Compute(pass_index=p, row=r) | Accumulate(pass_index=p, row=r):
                    if (p, r) not in loaded:
                        raise ValueError(f"instruction {i} uses row {r} of pass {p} before it is loaded")
                case _:
                    pass
        return self

    def count(self, op: str) -> int:
        return sum(1 for ins in self.instructions if ins.op == op)

    def __len__(self) -> int:
        return len(self.instructions)

