"""
Brute-force references the encoder, the approximation and the simulator are checked against.

Nothing here calls into the modules under test: signed-digit words are enumerated, the
nearest value is found by scanning, and dot products are summed directly.
"""

from __future__ import annotations
from collections.abc import Callable, Sequence
from functools import cache
from itertools import product

from pydantic import BaseModel, ConfigDict

from .config import Signedness
from .errors import ArgumentError, RangeError, ShapeError, VerificationError


DIGITS = 8
LOW, HIGH = -128, 127

type Representation = tuple[int, ...]


class ReferenceResult(BaseModel):
    """
    Exact outputs, one per filter, as unbounded integers.
    """

    outputs: tuple[int, ...]
    model_config = ConfigDict(frozen=True)


def _check_value(v: int, low: int, high: int, what: str) -> None:
    if isinstance(v, bool) or not isinstance(v, int):
        raise RangeError(f"{what} must be an integer, got {v!r}")
    if not low <= v <= high:
        raise RangeError(f"{what} {v} outside [{low}, {high}]")


def dot_reference(weights: Sequence[Sequence[int]], inputs: Sequence[int], signedness: Signedness = Signedness.UNSIGNED8) -> ReferenceResult:
    """
    Direct dot product of every filter with the inputs.

    The sum is formed twice, front to back and back to front, and both must agree.

    Raises:
        ShapeError: If a filter and the inputs differ in length.
        RangeError: If a weight is not INT8 or an input is outside `signedness`.
        VerificationError: If the two summation orders disagree.
    """

    for i, x in enumerate(inputs):
        _check_value(x, signedness.low, signedness.high, f"input {i}")

    outputs: list[int] = []

    for n, f in enumerate(weights):
        if len(f) != len(inputs):
            raise ShapeError(f"filter {n} has {len(f)} weights, there are {len(inputs)} inputs")
        for j, w in enumerate(f):
            _check_value(w, LOW, HIGH, f"weight {j} of filter {n}")

        forward = 0
        for w, x in zip(f, inputs):
            forward += w * x

        backward = 0
        for j in reversed(range(len(f))):
            backward += f[j] * inputs[j]

        if forward != backward:
            raise VerificationError(f"summation orders disagree for filter {n}: {forward} != {backward}")

        outputs.append(forward)

    return ReferenceResult(outputs=tuple(outputs))


def _value(r: Representation) -> int:
    return sum(d * 2 ** i for i, d in enumerate(r))


@cache
def _all_representations() -> dict[int, frozenset[Representation]]:

    table: dict[int, set[Representation]] = {}
    for r in product((-1, 0, 1), repeat=DIGITS):
        table.setdefault(_value(r), set()).add(r)

    return {v: frozenset(rs) for v, rs in table.items()}


def csd_enumerate(v: int) -> frozenset[Representation]:
    """
    All 8-digit words over {-1, 0, 1}, least significant digit first, that decode to `v`.

    Raises:
        RangeError: If `v` is outside the INT8 range.
    """

    _check_value(v, LOW, HIGH, "value")
    return _all_representations()[v]


def is_nonadjacent(r: Representation) -> bool:
    return all(r[i] == 0 or r[i + 1] == 0 for i in range(len(r) - 1))


def nonadjacent_forms(v: int) -> list[Representation]:
    """
    The representations of `v` without neighbouring non-zero digits.
    """
    return sorted(r for r in csd_enumerate(v) if is_nonadjacent(r))


@cache
def min_nonzeros(v: int) -> int:
    """
    Fewest non-zero digits over all representations of `v`.
    """
    return min(sum(1 for d in r if d) for r in csd_enumerate(v))


def nearest_reference(w: int, predicate: Callable[[int], bool]) -> int:
    """
    Scans all INT8 values for the one closest to `w` whose minimal non-zero count satisfies `predicate`.

    Ties go to the smaller magnitude, then to the positive value.

    Raises:
        RangeError: If `w` is not INT8.
        ArgumentError: If no INT8 value satisfies `predicate`.
    """

    _check_value(w, LOW, HIGH, "weight")

    best: int | None = None
    for t in range(LOW, HIGH + 1):
        if not predicate(min_nonzeros(t)):
            continue
        if best is None or (abs(t - w), abs(t), t < 0) < (abs(best - w), abs(best), best < 0):
            best = t

    if best is None:
        raise ArgumentError("no INT8 value satisfies the predicate")

    return best
