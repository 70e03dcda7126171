from __future__ import annotations

import numpy as np

from ..errors import ArgumentError
from .types import CompiledLayer, DbPimPassImage, MetadataImage, MetadataRecord, SimMode


def _dbpim_passes(layer: CompiledLayer) -> list[DbPimPassImage]:
    if layer.kind != SimMode.DBPIM:
        raise ArgumentError(f"layer {layer.name} is compiled for {layer.kind}, metadata exists only for {SimMode.DBPIM}")
    return [p for p in layer.passes if isinstance(p, DbPimPassImage)]


def emit_metadata(layer: CompiledLayer) -> MetadataImage:
    """
    Collects sign and index of every enabled slot in deposit order (pass, row, compartment, column).

    Raises:
        ArgumentError: If the layer is not a DB-PIM layer.
    """

    records: list[MetadataRecord] = []

    for p in _dbpim_passes(layer):
        for row, compartment, column in np.argwhere(p.enabled):
            records.append(MetadataRecord.model_validate({
                "pass_index": p.pass_index,
                "row": int(row),
                "compartment": int(compartment),
                "column": int(column),
                "sign": 0 if p.sign[row, compartment, column] > 0 else 1,
                "index": int(p.index[row, compartment, column]),
            }))

    return MetadataImage(layer=layer.name, records=tuple(records))


def apply_metadata(layer: CompiledLayer, metadata: MetadataImage) -> CompiledLayer:
    """
    Returns a copy of `layer` whose slot signs and indices are taken from `metadata`.

    Raises:
        ArgumentError: If the records do not cover exactly the enabled slots of the layer,
            or address a slot twice.
    """

    passes = {p.pass_index: p for p in _dbpim_passes(layer)}
    signs = {i: p.sign.copy() for i, p in passes.items()}
    indices = {i: p.index.copy() for i, p in passes.items()}
    seen = {i: np.zeros_like(p.enabled) for i, p in passes.items()}

    for n, r in enumerate(metadata.records):
        p = passes.get(r.pass_index)
        if p is None or not (r.row < p.rows and r.compartment < p.compartments and r.column < p.width):
            raise ArgumentError(f"metadata record {n} addresses a slot outside the layer: {r}")
        if not p.enabled[r.row, r.compartment, r.column]:
            raise ArgumentError(f"metadata record {n} addresses a disabled slot: {r}")
        if seen[r.pass_index][r.row, r.compartment, r.column]:
            raise ArgumentError(f"metadata record {n} addresses a slot already written: {r}")
        signs[r.pass_index][r.row, r.compartment, r.column] = 1 if r.sign == 0 else -1
        indices[r.pass_index][r.row, r.compartment, r.column] = r.index
        seen[r.pass_index][r.row, r.compartment, r.column] = True

    for i, p in passes.items():
        missing = np.argwhere(p.enabled & ~seen[i])
        if len(missing):
            row, compartment, column = (int(v) for v in missing[0])
            raise ArgumentError(f"no metadata for pass {i} row {row} compartment {compartment} column {column}")

    return layer.model_copy(update={
        "passes": tuple(
            p.with_arrays(sign=signs[p.pass_index], index=indices[p.pass_index])
            for p in layer.passes
            if isinstance(p, DbPimPassImage)
        ),
    })
