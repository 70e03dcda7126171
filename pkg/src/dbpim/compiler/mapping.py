"""
Mapping of thresholded filters onto the macro geometry.

Filters of equal threshold are packed into the same pass, `dbmus_per_compartment / phi_th`
of them at a time. Filter slot `s` owns columns `[s * phi_th, (s + 1) * phi_th)`, and each
weight of the filter puts its complementary blocks into those columns, lowest block index
first. The reduction dimension is tiled over the compartments of the rows: tile `t` is row
`t`, and compartment `c` of that row carries reduction position `t * compartments + c`.
"""

from __future__ import annotations
from collections.abc import Sequence
import logging
import math

import numpy as np

from ..config import BITS_PER_WEIGHT, MacroConfig
from ..errors import CapacityError, DbPimError, ShapeError
from ..fta import MAX_THRESHOLD, ThresholdedFilter
from .types import CompiledLayer, DbPimPassImage, DensePassImage, PassImage, SimMode


logger = logging.getLogger(__name__)


def check_layer_shape(filters: Sequence[ThresholdedFilter], cfg: MacroConfig) -> int:
    """
    Returns the common reduction length of `filters`.

    Raises:
        ShapeError: If the layer is empty or the filters differ in length.
        CapacityError: If a filter is longer than the macro can hold.
    """

    if not filters:
        raise ShapeError("a layer needs at least one filter")

    length = len(filters[0].weights)
    for position, f in enumerate(filters):
        if len(f.weights) != length:
            raise ShapeError(f"filter {position} (id {f.filter_id}) has {len(f.weights)} weights, filter 0 has {length}")

    if length > cfg.max_reduction_length:
        raise CapacityError(
            f"reduction length {length} exceeds the macro capacity of rows_per_dbmu x compartments_per_macro = "
            f"{cfg.rows_per_dbmu} x {cfg.compartments_per_macro} = {cfg.max_reduction_length}"
        )

    return length


def _tiles(length: int, cfg: MacroConfig) -> tuple[int, np.ndarray, tuple[tuple[int, int], ...]]:

    rows = math.ceil(length / cfg.compartments_per_macro)
    positions = np.arange(rows * cfg.compartments_per_macro).reshape(rows, cfg.compartments_per_macro)
    valid = positions < length
    schedule = tuple((r, r * cfg.compartments_per_macro) for r in range(rows))

    return rows, valid, schedule


def _chunks[T](items: Sequence[T], size: int) -> list[Sequence[T]]:
    return [items[i:i + size] for i in range(0, len(items), size)]


def map_layer(filters: Sequence[ThresholdedFilter], cfg: MacroConfig, name: str = "layer") -> CompiledLayer:
    """
    Places a thresholded layer onto DB-PIM macros.

    All-zero filters (threshold 0) get no pass. Passes are numbered threshold 1 first and
    are assigned to macros round robin.

    Args:
        filters: The layer, in layer order.
        cfg: Macro geometry.
        name: Layer name carried into reports.

    Raises:
        ShapeError: If the filters differ in length.
        CapacityError: If the reduction dimension does not fit the macro.
    """

    length = check_layer_shape(filters, cfg)
    rows, valid, schedule = _tiles(length, cfg)
    width = cfg.dbmus_per_compartment
    compartments = cfg.compartments_per_macro

    passes: list[PassImage] = []

    for phi_th in range(1, MAX_THRESHOLD + 1):

        group = [p for p, f in enumerate(filters) if f.phi_th == phi_th]

        for members in _chunks(group, cfg.filter_slots_per_pass(phi_th)):

            enabled = np.zeros((rows, compartments, width), dtype=np.bool_)
            sign = np.zeros((rows, compartments, width), dtype=np.int8)
            index = np.zeros((rows, compartments, width), dtype=np.int8)
            position = np.zeros((rows, compartments, width), dtype=np.int8)

            for s, member in enumerate(members):
                f = filters[member]

                for j, blocks in enumerate(f.per_weight_blocks):
                    t, c = divmod(j, compartments)
                    comp = blocks.comp_blocks

                    if len(comp) > phi_th:
                        raise DbPimError(
                            f"internal error: weight {j} of filter {f.filter_id} has {len(comp)} blocks, threshold is {phi_th}"
                        )

                    for q, block in enumerate(comp):
                        col = s * phi_th + q
                        enabled[t, c, col] = True
                        sign[t, c, col] = block.sign
                        index[t, c, col] = block.index
                        position[t, c, col] = block.position

            passes.append(DbPimPassImage(
                pass_index=len(passes),
                macro=len(passes) % cfg.num_macros,
                phi_th=phi_th,
                group_width=phi_th,
                members=tuple(members),
                row_schedule=schedule,
                valid=valid,
                enabled=enabled,
                sign=sign,
                index=index,
                position=position,
            ))

    skipped = tuple(p for p, f in enumerate(filters) if f.phi_th == 0)

    logger.debug("mapped %s: %d filters, %d passes, %d skipped, %d rows", name, len(filters), len(passes), len(skipped), rows)

    return CompiledLayer(
        kind=SimMode.DBPIM,
        name=name,
        reduction_length=length,
        filter_ids=tuple(f.filter_id for f in filters),
        phi_th=tuple(f.phi_th for f in filters),
        skipped=skipped,
        passes=tuple(passes),
    )


def map_dense_layer(filters: Sequence[ThresholdedFilter], cfg: MacroConfig, name: str = "layer") -> CompiledLayer:
    """
    Places the same weights onto a dense baseline macro: eight cells per weight holding its
    two's-complement bits, `dense_filters_per_pass` filters per pass, no filter skipped.

    Raises:
        ShapeError: If the filters differ in length.
        CapacityError: If the reduction dimension does not fit the macro.
    """

    length = check_layer_shape(filters, cfg)
    rows, valid, schedule = _tiles(length, cfg)
    width = cfg.dense_filters_per_pass * BITS_PER_WEIGHT
    compartments = cfg.compartments_per_macro

    passes: list[PassImage] = []

    for members in _chunks(range(len(filters)), cfg.dense_filters_per_pass):

        bits = np.zeros((rows, compartments, width), dtype=np.int8)

        for s, member in enumerate(members):
            for j, w in enumerate(filters[member].weights):
                t, c = divmod(j, compartments)
                pattern = w & 0xFF
                for b in range(BITS_PER_WEIGHT):
                    bits[t, c, s * BITS_PER_WEIGHT + b] = (pattern >> b) & 1

        passes.append(DensePassImage(
            pass_index=len(passes),
            macro=len(passes) % cfg.num_macros,
            group_width=BITS_PER_WEIGHT,
            members=tuple(members),
            row_schedule=schedule,
            valid=valid,
            bits=bits,
        ))

    return CompiledLayer(
        kind=SimMode.DENSE,
        name=name,
        reduction_length=length,
        filter_ids=tuple(f.filter_id for f in filters),
        phi_th=tuple(f.phi_th for f in filters),
        passes=tuple(passes),
    )


def decode_weights(layer: CompiledLayer) -> list[tuple[int, ...]]:
    """
    Reads the weights back out of a compiled image, one tuple per filter in layer order.

    Skipped filters decode to zeros.
    """

    decoded = [(0,) * layer.reduction_length for _ in range(layer.num_filters)]

    for p in layer.passes:
        terms = p.terms
        for s, member in enumerate(p.members):
            per_position = terms[:, :, s * p.group_width:(s + 1) * p.group_width].sum(axis=2)
            decoded[member] = tuple(int(v) for v in per_position.reshape(-1)[:layer.reduction_length])

    return decoded
