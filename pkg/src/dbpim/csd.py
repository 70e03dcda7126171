"""
Canonical Signed Digit (CSD) encoding of INT8 values and their dyadic-block decomposition.

A CSD word has eight digits from {-1, 0, +1}, index 0 being the least significant, and
never two adjacent non-zero digits. The four digit pairs (0,1), (2,3), (4,5), (6,7) are the
dyadic blocks DB#0 to DB#3. Because of the non-adjacency rule every block holds at most one
non-zero digit, which is what allows a block to live in one complementary SRAM cell pair.
"""

from __future__ import annotations
from enum import StrEnum, auto
from functools import cache
from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import RangeError


WORD_DIGITS = 8
BLOCKS_PER_WORD = WORD_DIGITS // 2
INT8_MIN = -128
INT8_MAX = 127

type CsdDigit = Literal[-1, 0, 1]


class CsdWord(BaseModel):
    """
    An 8-digit signed-digit word, `digits[0]` weighs 2^0 and `digits[7]` weighs 2^7.

    Construction rejects words with adjacent non-zero digits. Any such word is the unique
    non-adjacent form of its value and therefore has the minimal non-zero count.
    """

    digits: tuple[CsdDigit, ...]
    model_config = ConfigDict(frozen=True)

    @field_validator("digits")
    @classmethod
    def check_digits(cls, digits: tuple[int, ...]) -> tuple[int, ...]:
        if len(digits) != WORD_DIGITS:
            raise ValueError(f"a CSD word has {WORD_DIGITS} digits, got {len(digits)}")
        for i in range(WORD_DIGITS - 1):
            if digits[i] != 0 and digits[i + 1] != 0:
                raise ValueError(f"digits {i} and {i + 1} are both non-zero")
        return digits

    @property
    def value(self) -> int:
        return from_csd(self)

    def __str__(self) -> str:
        return render_csd(self)


class BlockKind(StrEnum):
    """
    Classification of a dyadic block.
    """

    ZERO = auto()
    COMP = auto()


class DyadicBlock(BaseModel):
    """
    One digit pair of a CSD word.

    Attributes:
        kind: `ZERO` for the pair 00, `COMP` for a pair with exactly one non-zero digit.
        position: Which digit of the pair is non-zero (0 = lower, 1 = upper). Always 0 for `ZERO`.
        sign: Sign of the non-zero digit. Always +1 for `ZERO`.
        index: Block position within the word, 0 = least significant pair.
    """

    kind: BlockKind
    position: Literal[0, 1] = 0
    sign: Literal[-1, 1] = 1
    index: Literal[0, 1, 2, 3]
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_zero_block(self) -> Self:
        if self.kind == BlockKind.ZERO and (self.position != 0 or self.sign != 1):
            raise ValueError("a zero block carries no position or sign")
        return self

    @property
    def bit(self) -> int:
        """Bit position of the non-zero digit."""
        return 2 * self.index + self.position

    @property
    def term(self) -> int:
        """Signed value the block contributes to its word."""
        if self.kind == BlockKind.ZERO:
            return 0
        return self.sign * (1 << self.bit)

    @property
    def digits(self) -> tuple[int, int]:
        """The (lower, upper) digit pair."""
        if self.kind == BlockKind.ZERO:
            return (0, 0)
        return (0, self.sign) if self.position else (self.sign, 0)

    @property
    def pair(self) -> str:
        """The stored pair as written in the macro, upper digit first ("01", "10", "0-1", "-10", "00")."""
        lower, upper = self.digits
        return f"{upper}{lower}"


class DyadicBlockSet(BaseModel):
    """
    The four dyadic blocks of one CSD word, ordered by index, and their non-zero count `phi`.
    """

    blocks: tuple[DyadicBlock, DyadicBlock, DyadicBlock, DyadicBlock]
    phi: int
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_blocks(self) -> Self:
        if [b.index for b in self.blocks] != list(range(BLOCKS_PER_WORD)):
            raise ValueError("blocks must be ordered by index 0..3")
        comp = sum(1 for b in self.blocks if b.kind == BlockKind.COMP)
        if comp != self.phi:
            raise ValueError(f"phi {self.phi} does not match {comp} complementary blocks")
        return self

    @property
    def comp_blocks(self) -> tuple[DyadicBlock, ...]:
        """The non-zero blocks, lowest index first."""
        return tuple(b for b in self.blocks if b.kind == BlockKind.COMP)


def check_int8(v: int, what: str = "value") -> int:
    """
    Raises:
        RangeError: If `v` is not an integer in [-128, 127].
    """
    if isinstance(v, bool) or not isinstance(v, int):
        raise RangeError(f"{what} must be an integer, got {v!r}")
    if not INT8_MIN <= v <= INT8_MAX:
        raise RangeError(f"{what} {v} outside INT8 range [{INT8_MIN}, {INT8_MAX}]")
    return v


@cache
def _naf(v: int) -> CsdWord:

    digits: list[int] = []
    k = v
    while k != 0:
        if k & 1:
            d = 2 - (k % 4) # k % 4 is 1 or 3 for odd k, also for negative k
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1

    digits.extend([0] * (WORD_DIGITS - len(digits)))
    return CsdWord.model_validate({"digits": tuple(digits)})


def to_csd(v: int) -> CsdWord:
    """
    Encodes an INT8 value in canonical signed digit form (non-adjacent form).

    Args:
        v: Integer in [-128, 127].

    Returns:
        The unique CSD word decoding to `v`.

    Raises:
        RangeError: If `v` is outside the INT8 range.
    """
    return _naf(check_int8(v))


def from_csd(w: CsdWord) -> int:
    """
    Decodes a CSD word to its integer value.
    """
    return sum(d * (1 << i) for i, d in enumerate(w.digits))


def count_nonzeros(w: CsdWord) -> int:
    """
    Returns phi, the number of non-zero digits of `w`.
    """
    return sum(1 for d in w.digits if d != 0)


@cache
def to_dyadic_blocks(w: CsdWord) -> DyadicBlockSet:
    """
    Splits a CSD word into its four dyadic blocks.

    Block k covers digits 2k and 2k+1.
    """

    blocks: list[DyadicBlock] = []

    for k in range(BLOCKS_PER_WORD):
        lower, upper = w.digits[2 * k], w.digits[2 * k + 1]

        if lower == 0 and upper == 0:
            blocks.append(DyadicBlock(kind=BlockKind.ZERO, index=k))
        elif upper != 0:
            blocks.append(DyadicBlock(kind=BlockKind.COMP, position=1, sign=upper, index=k))
        else:
            blocks.append(DyadicBlock(kind=BlockKind.COMP, position=0, sign=lower, index=k))

    return DyadicBlockSet(blocks=(blocks[0], blocks[1], blocks[2], blocks[3]), phi=count_nonzeros(w))


def from_dyadic_blocks(blocks: DyadicBlockSet) -> CsdWord:
    """
    Reassembles the CSD word a block set was taken from.

    Raises:
        pydantic.ValidationError: If neighbouring blocks put non-zero digits next to each other.
    """

    digits: list[int] = []
    for block in blocks.blocks:
        digits.extend(block.digits)
    return CsdWord.model_validate({"digits": tuple(digits)})


def render_csd(w: CsdWord) -> str:
    """
    Renders a word most significant digit first with a `_` between the nibbles, e.g. `1000_0-101`.
    """

    text = [str(d) for d in reversed(w.digits)]
    return "".join(text[:4]) + "_" + "".join(text[4:])


def phi_of(v: int) -> int:
    """
    Shorthand for `count_nonzeros(to_csd(v))`.
    """
    return count_nonzeros(to_csd(v))
