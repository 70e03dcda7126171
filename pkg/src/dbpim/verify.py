"""
Simulator against oracle: single cases from files and randomized case suites.
"""

from __future__ import annotations
from collections.abc import Sequence
import asyncio
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from .compiler import CompiledLayer, SimMode, decode_weights, map_dense_layer, map_layer
from .config import MacroConfig, RunConfig, Signedness, SimdAffine
from .errors import ArgumentError, DbPimError, ShapeError
from .fta import Filter, TableMode, ThresholdedFilter, fta_quantize
from .oracle import dot_reference
from .sim import run_layer


logger = logging.getLogger(__name__)


# (compartments, input group size) and (dbmus, dense filters per pass) drawn by random cases
RANDOM_COMPARTMENTS = ((16, 16), (16, 8), (8, 8), (8, 4), (4, 4))
RANDOM_COLUMNS = ((16, 2), (8, 1), (32, 4))


class VerifyCase(BaseModel):
    """
    One verification case: a geometry, a layer and an input vector.
    """

    index: int
    macro: MacroConfig
    signedness: Signedness
    ipu_skipping: bool
    weights: tuple[tuple[int, ...], ...]
    inputs: tuple[int, ...]
    model_config = ConfigDict(frozen=True)


class ModeCheck(BaseModel):
    """
    Comparison of one simulated mode with the reference.

    Attributes:
        first_mismatch: Layer position of the first differing filter, None when all agree.
        detail: Where the mismatch comes from, if it could be located.
    """

    mode: SimMode
    passed: bool
    expected: tuple[int, ...]
    got: tuple[int, ...]
    first_mismatch: int | None = None
    detail: str | None = None


class CaseResult(BaseModel):
    index: int
    passed: bool
    checks: tuple[ModeCheck, ...] = ()
    message: str = ""


class VerifySummary(BaseModel):
    format_version: int = 1
    cases: tuple[CaseResult, ...]

    @property
    def passed(self) -> int:
        return sum(1 for c in self.cases if c.passed)

    @property
    def failed(self) -> int:
        return len(self.cases) - self.passed


def random_case(seed: int, index: int) -> VerifyCase:
    """
    Draws a case from a generator seeded by `(seed, index)`, so cases do not depend on each other.
    """

    rng = np.random.default_rng([seed, index])

    compartments, group = RANDOM_COMPARTMENTS[rng.integers(len(RANDOM_COMPARTMENTS))]
    dbmus, dense = RANDOM_COLUMNS[rng.integers(len(RANDOM_COLUMNS))]
    macro = MacroConfig(
        num_macros=int(rng.integers(1, 5)),
        compartments_per_macro=compartments,
        dbmus_per_compartment=dbmus,
        rows_per_dbmu=16,
        input_group_size=group,
        dense_filters_per_pass=dense,
        fta_mode=TableMode.EXACT if rng.random() < 0.5 else TableMode.AT_MOST,
    )

    length = int(rng.integers(1, min(64, macro.max_reduction_length) + 1))
    count = int(rng.integers(1, 25))

    weights: list[tuple[int, ...]] = []
    for _ in range(count):
        match int(rng.integers(4)):
            case 0:
                row = rng.integers(-128, 128, size=length)
            case 1:
                row = np.clip(np.rint(rng.normal(0, 20, size=length)), -128, 127)
            case 2:
                row = rng.integers(-128, 128, size=length) * (rng.random(length) < 0.3)
            case _:
                row = np.zeros(length, dtype=np.int64)
        weights.append(tuple(int(w) for w in row))

    signedness = Signedness.SIGNED8 if rng.random() < 0.5 else Signedness.UNSIGNED8
    inputs = rng.integers(signedness.low, signedness.high + 1, size=length)
    match int(rng.integers(3)):
        case 0:
            inputs = inputs & 0x0F
        case 1:
            inputs = inputs * (rng.random(length) < 0.2)
        case _:
            pass

    return VerifyCase(
        index=index,
        macro=macro,
        signedness=signedness,
        ipu_skipping=bool(rng.random() < 0.75),
        weights=tuple(weights),
        inputs=tuple(int(x) for x in inputs),
    )


def locate_mismatch(layer: CompiledLayer, filters: Sequence[ThresholdedFilter], member: int) -> str | None:
    """
    Points at the first weight of filter `member` the image does not decode to.
    """

    decoded = decode_weights(layer)[member]
    compartments = layer.passes[0].compartments if layer.passes else 1

    for j, (got, want) in enumerate(zip(decoded, filters[member].weights)):
        if got != want:
            row, compartment = divmod(j, compartments)
            return f"weight {j} (row {row}, compartment {compartment}) decodes to {got}, expected {want}"

    return None


def check_mode(layer: CompiledLayer, filters: Sequence[ThresholdedFilter], inputs: Sequence[int], cfg: RunConfig, expected: tuple[int, ...]) -> ModeCheck:

    got = run_layer(layer, inputs, cfg, layer.kind).outputs

    if len(got) != len(expected):
        return ModeCheck(
            mode=layer.kind,
            passed=False,
            expected=expected,
            got=got,
            first_mismatch=min(len(got), len(expected)),
            detail=f"simulated {len(got)} outputs, expected {len(expected)}",
        )

    mismatches = [k for k, (a, b) in enumerate(zip(expected, got)) if a != b]

    if not mismatches:
        return ModeCheck(mode=layer.kind, passed=True, expected=expected, got=got)

    return ModeCheck(
        mode=layer.kind,
        passed=False,
        expected=expected,
        got=got,
        first_mismatch=mismatches[0],
        detail=locate_mismatch(layer, filters, mismatches[0]),
    )


def check_compiled(layer: CompiledLayer, case: VerifyCase) -> None:
    """
    Checks that a given DB-PIM image was compiled for the layer of `case`.

    Raises:
        ArgumentError: If the image is built for the dense baseline.
        ShapeError: If its filter count or reduction length differ from the case.
    """

    if layer.kind != SimMode.DBPIM:
        raise ArgumentError(f"compiled layer {layer.name!r} is a {layer.kind} image, verify needs a {SimMode.DBPIM} image")
    if layer.num_filters != len(case.weights):
        raise ShapeError(f"compiled layer {layer.name!r} holds {layer.num_filters} filters, the weights have {len(case.weights)}")
    if case.weights and layer.reduction_length != len(case.weights[0]):
        raise ShapeError(f"compiled layer {layer.name!r} has reduction length {layer.reduction_length}, the weights have {len(case.weights[0])}")


def run_case(case: VerifyCase, cfg: RunConfig, compiled: CompiledLayer | None = None) -> CaseResult:
    """
    Quantizes, compiles and simulates one case in both modes and compares with `dot_reference`.

    Args:
        case: The case.
        cfg: Base configuration; geometry, signedness and skipping come from the case.
        compiled: A DB-PIM image to use instead of compiling the case.

    Returns:
        The result. Errors raised on the way fail the case instead of propagating.
    """

    run_cfg = cfg.model_copy(update={
        "macro": case.macro,
        "signedness": case.signedness,
        "ipu_skipping": case.ipu_skipping,
        "simd": SimdAffine(),
    })

    try:
        if compiled is not None:
            check_compiled(compiled, case)

        filters = fta_quantize([Filter(weights=w, filter_id=i) for i, w in enumerate(case.weights)], case.macro.fta_mode)
        expected = dot_reference([f.weights for f in filters], case.inputs, case.signedness).outputs

        layers = [compiled or map_layer(filters, case.macro, name=f"case{case.index}"), map_dense_layer(filters, case.macro, name=f"case{case.index}")]
        checks = tuple(check_mode(layer, filters, case.inputs, run_cfg, expected) for layer in layers)

    except DbPimError as e:
        return CaseResult(index=case.index, passed=False, message=f"{type(e).__name__}: {e}")

    passed = all(c.passed for c in checks)
    return CaseResult(index=case.index, passed=passed, checks=checks, message="ok" if passed else "output mismatch")


async def verify_cases(cases: Sequence[VerifyCase], cfg: RunConfig, workers: int = 1) -> VerifySummary:
    """
    Runs cases on up to `workers` threads. Results are ordered by case index.
    """

    semaphore = asyncio.Semaphore(max(workers, 1))

    async def run(case: VerifyCase) -> CaseResult:
        async with semaphore:
            return await asyncio.to_thread(run_case, case, cfg)

    async with asyncio.TaskGroup() as tg:
        tasks = [tg.create_task(run(case)) for case in cases]

    results = sorted((t.result() for t in tasks), key=lambda r: r.index)
    summary = VerifySummary(cases=tuple(results))

    logger.info("verified %d cases: %d passed, %d failed", len(results), summary.passed, summary.failed)

    return summary
