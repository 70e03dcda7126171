"""
JSON documents of compiled layers.

A DB-PIM pass is written as parallel slot arrays `enabled`, `sign`, `index`, `position` and
`owner`, each indexed `[row][compartment][column]`. Disabled slots carry sign 0, index 0 and
position 0. A dense compartment row is a string of its cell bits, column 0 first.
"""

from __future__ import annotations
from typing import Annotated, Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..errors import ParseError
from .instructions import emit_instructions
from .metadata import emit_metadata
from .types import CompiledLayer, DbPimPassImage, DensePassImage, InstructionStream, MetadataImage, PassImage, SimMode


class DbPimPassDocument(BaseModel):
    kind: Literal[SimMode.DBPIM] = SimMode.DBPIM
    pass_index: int
    macro: int
    phi_th: Literal[1, 2]
    members: tuple[int, ...]
    row_schedule: tuple[tuple[int, int], ...]
    valid: list[list[bool]]
    enabled: list[list[list[bool]]]
    sign: list[list[list[Literal[-1, 0, 1]]]]
    index: list[list[list[Literal[0, 1, 2, 3]]]]
    position: list[list[list[Literal[0, 1]]]]
    owner: list[list[list[int]]]


class DensePassDocument(BaseModel):
    kind: Literal[SimMode.DENSE] = SimMode.DENSE
    pass_index: int
    macro: int
    members: tuple[int, ...]
    row_schedule: tuple[tuple[int, int], ...]
    valid: list[list[bool]]
    bits: list[list[str]]


type PassDocument = Annotated[DbPimPassDocument | DensePassDocument, Field(discriminator="kind")]


class CompiledLayerDocument(BaseModel):
    kind: SimMode
    name: str
    reduction_length: int
    filter_ids: tuple[int, ...]
    phi_th: tuple[int, ...]
    skipped: tuple[int, ...] = ()
    passes: list[PassDocument]


class CompiledFile(BaseModel):
    """
    Output of `dbpim compile`: the layer image, its metadata and its instruction stream.
    """

    format_version: Literal[1] = 1
    layer: CompiledLayerDocument
    metadata: MetadataImage | None = None
    instructions: InstructionStream
    model_config = ConfigDict(extra="forbid")


def _slot_owner(p: DbPimPassImage) -> NDArray[np.int64]:
    """Per slot: layer position of the owning filter, -1 in invalid compartments and idle columns."""
    return np.where(p.valid[:, :, None], p.owner[None, None, :], -1)


def _pass_to_document(p: PassImage) -> DbPimPassDocument | DensePassDocument:

    valid = p.valid.tolist()

    if isinstance(p, DbPimPassImage):
        enabled = p.enabled
        return DbPimPassDocument.model_validate({
            "pass_index": p.pass_index,
            "macro": p.macro,
            "phi_th": p.phi_th,
            "members": p.members,
            "row_schedule": p.row_schedule,
            "valid": valid,
            "enabled": enabled.tolist(),
            "sign": np.where(enabled, p.sign, 0).tolist(),
            "index": np.where(enabled, p.index, 0).tolist(),
            "position": np.where(enabled, p.position, 0).tolist(),
            "owner": _slot_owner(p).tolist(),
        })

    assert isinstance(p, DensePassImage)
    return DensePassDocument(
        pass_index=p.pass_index,
        macro=p.macro,
        members=p.members,
        row_schedule=p.row_schedule,
        valid=valid,
        bits=[["".join(str(int(b)) for b in p.bits[r, c]) for c in range(p.compartments)] for r in range(p.rows)],
    )


def _pass_from_document(d: DbPimPassDocument | DensePassDocument) -> PassImage:

    valid = np.array(d.valid, dtype=np.bool_).reshape(len(d.valid), -1)

    if isinstance(d, DbPimPassDocument):
        enabled = np.array(d.enabled, dtype=np.bool_)
        if enabled.ndim != 3:
            raise ValueError(f"slot arrays must be indexed [row][compartment][column], got {enabled.ndim} dimensions")
        arrays = {
            "sign": np.array(d.sign, dtype=np.int8),
            "index": np.array(d.index, dtype=np.int8),
            "position": np.array(d.position, dtype=np.int8),
            "owner": np.array(d.owner, dtype=np.int64),
        }
        for name, array in arrays.items():
            if array.shape != enabled.shape:
                raise ValueError(f"slot array {name} has shape {array.shape}, expected {enabled.shape}")
        if np.any(enabled & (arrays["sign"] == 0)):
            raise ValueError("enabled slot with sign 0")
        if np.any(~enabled & ((arrays["sign"] != 0) | (arrays["index"] != 0) | (arrays["position"] != 0))):
            raise ValueError("disabled slot with sign, index or position set")

        image = DbPimPassImage(
            pass_index=d.pass_index,
            macro=d.macro,
            phi_th=d.phi_th,
            group_width=d.phi_th,
            members=d.members,
            row_schedule=d.row_schedule,
            valid=valid,
            enabled=enabled,
            sign=arrays["sign"],
            index=arrays["index"],
            position=arrays["position"],
        )
        if not np.array_equal(_slot_owner(image), arrays["owner"]):
            raise ValueError(f"slot owners of pass {d.pass_index} do not match its members {d.members}")
        return image

    for row in d.bits:
        for cells in row:
            if set(cells) - {"0", "1"}:
                raise ValueError(f"malformed cell bits {cells!r}")

    return DensePassImage(
        pass_index=d.pass_index,
        macro=d.macro,
        group_width=8,
        members=d.members,
        row_schedule=d.row_schedule,
        valid=valid,
        bits=np.array([[[int(b) for b in cells] for cells in row] for row in d.bits], dtype=np.int8).reshape(*valid.shape, -1),
    )


def to_compiled_file(layer: CompiledLayer) -> CompiledFile:
    """
    Builds the `dbpim compile` document of a layer.
    """

    return CompiledFile(
        layer=CompiledLayerDocument(
            kind=layer.kind,
            name=layer.name,
            reduction_length=layer.reduction_length,
            filter_ids=layer.filter_ids,
            phi_th=layer.phi_th,
            skipped=layer.skipped,
            passes=[_pass_to_document(p) for p in layer.passes],
        ),
        metadata=emit_metadata(layer) if layer.kind == SimMode.DBPIM else None,
        instructions=emit_instructions(layer),
    )


def from_compiled_file(document: CompiledFile, source: str = "compiled layer") -> CompiledLayer:
    """
    Rebuilds the layer image of a `dbpim compile` document.

    Raises:
        ParseError: If the slots are malformed or do not form a consistent layer.
    """

    d = document.layer
    try:
        return CompiledLayer(
            kind=d.kind,
            name=d.name,
            reduction_length=d.reduction_length,
            filter_ids=d.filter_ids,
            phi_th=d.phi_th,
            skipped=d.skipped,
            passes=tuple(_pass_from_document(p) for p in d.passes),
        )
    except (ValidationError, ValueError) as e:
        raise ParseError(f"{source}: {e}") from e
