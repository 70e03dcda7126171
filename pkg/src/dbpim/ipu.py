"""
Input pre-processing unit: bit-column analysis of input groups.

Inputs are streamed bit-serially, one bit position (column) per cycle. A column whose
bit is zero for every member of a group contributes nothing and is skipped.
"""

from __future__ import annotations
from collections.abc import Iterable, Sequence
from typing import Self

from pydantic import BaseModel, ConfigDict, model_validator

from .config import INPUT_BITS, Signedness
from .errors import RangeError


BYTE_MASK = (1 << INPUT_BITS) - 1


class InputGroup(BaseModel):
    """
    Input features analysed together.
    """

    values: tuple[int, ...]
    signedness: Signedness = Signedness.UNSIGNED8
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_range(self) -> Self:
        for i, v in enumerate(self.values):
            if not self.signedness.contains(v):
                raise ValueError(f"input {i} = {v} outside {self.signedness} range [{self.signedness.low}, {self.signedness.high}]")
        return self


class ColumnStep(BaseModel):
    """
    One scheduled bit column and the significance its partial sum is shifted by.
    """

    position: int
    weight: int
    model_config = ConfigDict(frozen=True)


class BitColumnMask(BaseModel):
    """
    Result of the zero-column analysis of one group.

    Attributes:
        mask: Flag b is set when bit b is zero in every member of the group.
        surviving_columns: Positions whose flag is clear, most significant first.
        signedness: Encoding of the analysed inputs.
    """

    mask: tuple[bool, bool, bool, bool, bool, bool, bool, bool]
    surviving_columns: tuple[int, ...]
    signedness: Signedness = Signedness.UNSIGNED8
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_consistent(self) -> Self:
        expected = tuple(b for b in reversed(range(INPUT_BITS)) if not self.mask[b])
        if self.surviving_columns != expected:
            raise ValueError(f"surviving columns {self.surviving_columns} do not match mask, expected {expected}")
        return self

    @property
    def skipped(self) -> int:
        """Number of columns skipped, i.e. bit cycles saved."""
        return sum(self.mask)

    @classmethod
    def from_flags(cls, mask: Sequence[bool], signedness: Signedness) -> BitColumnMask:
        flags = tuple(bool(f) for f in mask)
        return cls.model_validate({
            "mask": flags,
            "surviving_columns": tuple(b for b in reversed(range(INPUT_BITS)) if not flags[b]),
            "signedness": signedness,
        })


def column_weight(position: int, signedness: Signedness) -> int:
    """
    Significance of a bit column. The sign column of a two's-complement input weighs -2^7.
    """
    if signedness == Signedness.SIGNED8 and position == INPUT_BITS - 1:
        return -(1 << position)
    return 1 << position


def analyze_group(g: InputGroup) -> BitColumnMask:
    """
    Finds the bit columns that are zero across the whole group.
    """

    column_or = 0
    for v in g.values:
        column_or |= v & BYTE_MASK

    return BitColumnMask.from_flags([not (column_or >> b) & 1 for b in range(INPUT_BITS)], g.signedness)


def bit_serial_schedule(m: BitColumnMask) -> tuple[ColumnStep, ...]:
    """
    Returns the surviving columns, most significant first, with their shift weights.
    """
    return tuple(ColumnStep(position=b, weight=column_weight(b, m.signedness)) for b in m.surviving_columns)


def merge_masks(masks: Iterable[BitColumnMask], signedness: Signedness) -> BitColumnMask:
    """
    Combines the masks of groups sharing one broadcast: a column is skipped only if every group skips it.
    """

    flags = [True] * INPUT_BITS
    for m in masks:
        flags = [a and b for a, b in zip(flags, m.mask)]
    return BitColumnMask.from_flags(flags, signedness)


def analyze_tensor(values: Sequence[int], group_size: int, signedness: Signedness = Signedness.UNSIGNED8) -> list[BitColumnMask]:
    """
    Partitions `values` into aligned groups of `group_size` and analyses each.

    The last group holds the remaining values and may be shorter than `group_size`. Its mask
    equals that of the group padded with zeros, since zero values never clear a flag.

    Raises:
        RangeError: If a value lies outside the range of `signedness`.
    """

    for i, v in enumerate(values):
        if not signedness.contains(v):
            raise RangeError(f"input {i} = {v} outside {signedness} range [{signedness.low}, {signedness.high}]")

    return [
        analyze_group(InputGroup(values=tuple(values[start:start + group_size]), signedness=signedness))
        for start in range(0, len(values), group_size)
    ]


def reconstruct(g: InputGroup, m: BitColumnMask) -> tuple[int, ...]:
    """
    Rebuilds the group values from the surviving columns only.
    """

    schedule = bit_serial_schedule(m)
    return tuple(
        sum(((v & BYTE_MASK) >> step.position & 1) * step.weight for step in schedule)
        for v in g.values
    )
