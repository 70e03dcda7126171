"""
Fixed Threshold Approximation (FTA).

Every filter gets one threshold `phi_th` in [0, 2] derived from the most frequent
non-zero digit count among its weights. Each weight is then replaced by the closest
INT8 value from the query table of that threshold, so all weights of a filter carry
the same number of complementary blocks and pack into the macro without holes.
"""

from __future__ import annotations
from bisect import bisect_left
from collections import Counter
from collections.abc import Sequence
from enum import StrEnum
from functools import cache
from typing import Self
import logging

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .csd import DyadicBlockSet, INT8_MAX, INT8_MIN, check_int8, phi_of, to_csd, to_dyadic_blocks
from .errors import ArgumentError, DbPimError
from .rich import CompactReprMixin


logger = logging.getLogger(__name__)

MAX_THRESHOLD = 2


class TableMode(StrEnum):
    """
    Membership rule of a query table.

    `EXACT` keeps values whose non-zero count equals the threshold, as the algorithm is written.
    `AT_MOST` keeps values with at most that many non-zero digits; the shortfall is padded
    with disabled slots by the compiler.
    """

    EXACT = "exact"
    AT_MOST = "atmost"

    def admits(self, phi: int, phi_th: int) -> bool:
        return phi == phi_th if self == TableMode.EXACT else phi <= phi_th


class Filter(BaseModel):
    """
    One quantized filter: the INT8 weights of a single output channel, flattened.
    """

    weights: tuple[int, ...]
    filter_id: int = 0
    model_config = ConfigDict(frozen=True)

    @field_validator("weights")
    @classmethod
    def check_weights(cls, weights: tuple[int, ...]) -> tuple[int, ...]:
        if not weights:
            raise ValueError("a filter needs at least one weight")
        for j, w in enumerate(weights):
            check_int8(w, f"weight {j}")
        return weights


class QueryTable(BaseModel):
    """
    The admissible replacement values for one threshold, sorted ascending.
    """

    phi_th: int
    mode: TableMode
    entries: tuple[int, ...]
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_entries(self) -> Self:
        if not self.entries:
            raise ValueError("query table is empty")
        if list(self.entries) != sorted(set(self.entries)):
            raise ValueError("query table entries must be unique and sorted")
        for t in self.entries:
            if not self.mode.admits(phi_of(t), self.phi_th):
                raise ValueError(f"{t} does not satisfy {self.mode} phi {self.phi_th}")
        return self


class ThresholdedFilter(CompactReprMixin, BaseModel):
    """
    A filter after FTA.

    Attributes:
        filter_id: Id of the source filter.
        phi_th: The filter threshold.
        mode: The table mode the weights were approximated with.
        weights: The approximated weights.
        per_weight_blocks: The dyadic blocks of every approximated weight.
    """

    filter_id: int
    phi_th: int
    mode: TableMode
    weights: tuple[int, ...]
    per_weight_blocks: tuple[DyadicBlockSet, ...]
    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_discipline(self) -> Self:
        if len(self.weights) != len(self.per_weight_blocks):
            raise ValueError("one block set per weight is required")
        if not 0 <= self.phi_th <= MAX_THRESHOLD:
            raise ValueError(f"phi_th {self.phi_th} outside [0, {MAX_THRESHOLD}]")
        for j, (w, blocks) in enumerate(zip(self.weights, self.per_weight_blocks)):
            if blocks.phi != phi_of(w):
                raise ValueError(f"blocks of weight {j} do not belong to {w}")
            if self.phi_th == 0:
                if w != 0:
                    raise ValueError(f"weight {j} of an all-zero filter is {w}")
            elif not self.mode.admits(blocks.phi, self.phi_th):
                raise ValueError(f"weight {j} = {w} has phi {blocks.phi}, filter threshold is {self.phi_th} ({self.mode})")
        return self


def phi_profile(f: Filter) -> list[int]:
    """
    Returns the non-zero digit count of every weight of `f`.
    """
    return [phi_of(w) for w in f.weights]


def profile_mode(profile: Sequence[int]) -> int:
    """
    Most frequent value of `profile`; among equally frequent values the smallest.
    """
    counts = Counter(profile)
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


def select_threshold(profile: Sequence[int]) -> int:
    """
    Chooses the filter threshold from a phi profile.

    All-zero profiles give 0, a zero mode gives 1, modes 1 and 2 are kept, larger modes are clamped to 2.

    Raises:
        ArgumentError: If the profile is empty or holds values outside [0, 4].
    """

    if not profile:
        raise ArgumentError("cannot select a threshold for an empty profile")
    if any(not 0 <= p <= 4 for p in profile):
        raise ArgumentError(f"phi profile entries must lie in [0, 4], got {list(profile)}")

    if all(p == 0 for p in profile):
        return 0

    m = profile_mode(profile)

    if m == 0:
        return 1
    return min(m, MAX_THRESHOLD)


@cache
def build_query_table(phi_th: int, mode: TableMode = TableMode.EXACT) -> QueryTable:
    """
    Builds the query table of all INT8 values admitted by `mode` for `phi_th`.

    Raises:
        ArgumentError: If `phi_th` is outside [0, 2].
    """

    if not 0 <= phi_th <= MAX_THRESHOLD:
        raise ArgumentError(f"phi_th must lie in [0, {MAX_THRESHOLD}], got {phi_th}")

    entries = tuple(t for t in range(INT8_MIN, INT8_MAX + 1) if mode.admits(phi_of(t), phi_th))
    return QueryTable(phi_th=phi_th, mode=mode, entries=entries)


def approximate_weight(w: int, table: QueryTable) -> int:
    """
    Returns the table entry closest to `w`.

    Ties prefer the smaller magnitude, then the positive value.

    Raises:
        RangeError: If `w` is outside the INT8 range.
        DbPimError: If the table is empty.
    """

    check_int8(w, "weight")

    entries = table.entries
    if not entries:
        raise DbPimError(f"internal error: empty query table for phi_th {table.phi_th}")

    i = bisect_left(entries, w)
    candidates = entries[max(i - 1, 0):i + 1]

    return min(candidates, key=lambda t: (abs(t - w), abs(t), t < 0))


def quantize_filter(f: Filter, mode: TableMode = TableMode.EXACT) -> ThresholdedFilter:
    """
    Runs FTA on a single filter.
    """

    phi_th = select_threshold(phi_profile(f))

    if phi_th == 0:
        weights = f.weights
    else:
        table = build_query_table(phi_th, mode)
        weights = tuple(approximate_weight(w, table) for w in f.weights)

    return ThresholdedFilter(
        filter_id=f.filter_id,
        phi_th=phi_th,
        mode=mode,
        weights=weights,
        per_weight_blocks=tuple(to_dyadic_blocks(to_csd(w)) for w in weights),
    )


def fta_quantize(filters: Sequence[Filter], mode: TableMode = TableMode.EXACT) -> list[ThresholdedFilter]:
    """
    Runs FTA on every filter of a layer.

    Args:
        filters: The quantized filters.
        mode: Query table membership rule.

    Returns:
        One thresholded filter per input filter, in input order.
    """

    result = [quantize_filter(f, mode) for f in filters]

    logger.debug("FTA (%s) on %d filters: thresholds %s", mode, len(result), dict(Counter(t.phi_th for t in result)))

    return result
