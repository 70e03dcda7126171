"""
JSON file formats: tensors, configs, quantized layers and reports.

Every document carries a `format_version`. Reading wraps JSON syntax errors and pydantic
validation errors into `ParseError` naming the file.
"""

from __future__ import annotations
from collections.abc import Sequence
from pathlib import Path
from typing import Literal, Self
import json
import math

from pydantic import BaseModel, ConfigDict, PositiveInt, ValidationError, model_validator

from .config import RunConfig, Signedness
from .csd import DyadicBlockSet, to_csd, to_dyadic_blocks
from .errors import CapacityError, ParseError, ShapeError
from .fta import TableMode, ThresholdedFilter


class TensorFile(BaseModel):
    """
    A dense integer tensor, row major.
    """

    format_version: Literal[1] = 1
    dims: tuple[PositiveInt, ...]
    dtype: Signedness
    data: tuple[int, ...]
    model_config = ConfigDict(extra="forbid", frozen=True)

    @model_validator(mode="after")
    def check_data(self) -> Self:
        if not self.dims:
            raise ValueError("a tensor needs at least one dimension")
        if math.prod(self.dims) != len(self.data):
            raise ValueError(f"dims {list(self.dims)} hold {math.prod(self.dims)} elements, data has {len(self.data)}")
        for i, v in enumerate(self.data):
            if not self.dtype.contains(v):
                raise ValueError(f"element {i} = {v} outside {self.dtype} range [{self.dtype.low}, {self.dtype.high}]")
        return self

    def rows(self) -> list[tuple[int, ...]]:
        """The rows of a 2-D tensor."""
        _, width = self.dims
        return [self.data[i:i + width] for i in range(0, len(self.data), width)]


def _location(e: ValidationError) -> str:
    error = e.errors()[0]
    where = ".".join(str(part) for part in error["loc"]) or "document"
    return f"{where}: {error['msg']}"


def read_model[M: BaseModel](path: str | Path, model: type[M]) -> M:
    """
    Reads a JSON document into `model`.

    Raises:
        ParseError: If the file is missing, is not JSON, or does not validate.
    """

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"{path}: cannot read file: {e.strerror}") from e

    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e

    try:
        return model.model_validate(obj)
    except ValidationError as e:
        raise ParseError(f"{path}: {_location(e)}") from e


def write_model(path: str | Path, document: BaseModel) -> None:
    """
    Writes a document as indented JSON. Equal documents give identical bytes.
    """
    Path(path).write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")


def load_config(path: str | Path | None) -> RunConfig:
    """
    Reads a config file; without a path the defaults are returned.
    """
    if path is None:
        return RunConfig()
    return read_model(path, RunConfig)


def read_tensor(path: str | Path, cfg: RunConfig, ndim: int | None = None) -> TensorFile:
    """
    Reads a tensor file.

    Raises:
        ParseError: If the file is malformed.
        CapacityError: If the tensor holds more than `max_tensor_elements`.
        ShapeError: If `ndim` is given and the tensor has another rank.
    """

    tensor = read_model(path, TensorFile)

    if len(tensor.data) > cfg.max_tensor_elements:
        raise CapacityError(f"{path}: {len(tensor.data)} elements exceed max_tensor_elements {cfg.max_tensor_elements}")
    if ndim is not None and len(tensor.dims) != ndim:
        raise ShapeError(f"{path}: expected a {ndim}-D tensor, got dims {list(tensor.dims)}")

    return tensor


def read_weights(path: str | Path, cfg: RunConfig) -> list[tuple[int, ...]]:
    """
    Reads a 2-D `i8` weight tensor, one filter per row.
    """

    tensor = read_tensor(path, cfg, ndim=2)
    if tensor.dtype != Signedness.SIGNED8:
        raise ParseError(f"{path}: weights must have dtype {Signedness.SIGNED8}, got {tensor.dtype}")
    return tensor.rows()


def read_inputs(path: str | Path, cfg: RunConfig) -> tuple[int, ...]:
    """
    Reads a 1-D input vector whose dtype matches the configured signedness.
    """

    tensor = read_tensor(path, cfg, ndim=1)
    if tensor.dtype != cfg.signedness:
        raise ParseError(f"{path}: dtype {tensor.dtype} does not match config signedness {cfg.signedness}")
    return tensor.data


class BlockRecord(BaseModel):
    """
    A complementary block as written to a quantized file.
    """

    index: Literal[0, 1, 2, 3]
    sign: Literal[-1, 1]
    position: Literal[0, 1]
    pair: str
    model_config = ConfigDict(frozen=True)


class QuantizedFilterRecord(BaseModel):
    """
    One filter after approximation.

    Attributes:
        blocks: The complementary blocks of every weight.
        csd: The CSD rendering of every weight.
        abs_error: Summed absolute approximation error of the filter.
    """

    filter_id: int
    phi_th: int
    weights: tuple[int, ...]
    blocks: tuple[tuple[BlockRecord, ...], ...]
    csd: tuple[str, ...]
    abs_error: int


class QuantizeSummary(BaseModel):
    """
    Attributes:
        phi_histogram: Number of filters per threshold.
        mean_abs_error: Mean absolute approximation error over all weights.
        max_abs_error: Largest absolute error of a single weight.
    """

    phi_histogram: dict[str, int]
    mean_abs_error: float
    max_abs_error: int


class QuantizedFile(BaseModel):
    """
    Output of `dbpim quantize`, input of `dbpim compile --quantized`.
    """

    format_version: Literal[1] = 1
    mode: TableMode
    reduction_length: int
    filters: tuple[QuantizedFilterRecord, ...]
    summary: QuantizeSummary
    model_config = ConfigDict(extra="forbid")


def to_quantized_file(source: Sequence[Sequence[int]], filters: Sequence[ThresholdedFilter], mode: TableMode) -> QuantizedFile:
    """
    Builds the quantized document from the source weights and their approximation.
    """

    records: list[QuantizedFilterRecord] = []
    errors: list[int] = []

    for original, f in zip(source, filters):
        diffs = [abs(a - b) for a, b in zip(original, f.weights)]
        errors.extend(diffs)
        records.append(QuantizedFilterRecord(
            filter_id=f.filter_id,
            phi_th=f.phi_th,
            weights=f.weights,
            blocks=tuple(
                tuple(BlockRecord(index=b.index, sign=b.sign, position=b.position, pair=b.pair) for b in blocks.comp_blocks)
                for blocks in f.per_weight_blocks
            ),
            csd=tuple(str(to_csd(w)) for w in f.weights),
            abs_error=sum(diffs),
        ))

    histogram: dict[str, int] = {str(phi): 0 for phi in range(3)}
    for f in filters:
        histogram[str(f.phi_th)] += 1

    return QuantizedFile(
        mode=mode,
        reduction_length=len(filters[0].weights) if filters else 0,
        filters=tuple(records),
        summary=QuantizeSummary(
            phi_histogram=histogram,
            mean_abs_error=sum(errors) / len(errors) if errors else 0.0,
            max_abs_error=max(errors, default=0),
        ),
    )


def from_quantized_file(document: QuantizedFile, source: str = "quantized file") -> list[ThresholdedFilter]:
    """
    Rebuilds the thresholded filters of a quantized document.

    The block lists are checked against the weights.

    Raises:
        ParseError: If a weight or its blocks violate the threshold discipline.
    """

    filters: list[ThresholdedFilter] = []

    for n, record in enumerate(document.filters):
        try:
            blocks: list[DyadicBlockSet] = [to_dyadic_blocks(to_csd(w)) for w in record.weights]
            for j, (expected, written) in enumerate(zip(blocks, record.blocks)):
                actual = tuple((b.index, b.sign, b.position) for b in expected.comp_blocks)
                if actual != tuple((b.index, b.sign, b.position) for b in written):
                    raise ValueError(f"blocks of weight {j} do not encode {record.weights[j]}")
            if len(record.blocks) != len(record.weights):
                raise ValueError("one block list per weight is required")
            filters.append(ThresholdedFilter(
                filter_id=record.filter_id,
                phi_th=record.phi_th,
                mode=document.mode,
                weights=record.weights,
                per_weight_blocks=tuple(blocks),
            ))
        except ValueError as e:
            raise ParseError(f"{source}: filter {n}: {e}") from e

    return filters
