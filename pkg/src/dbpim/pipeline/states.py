from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field

from ..compiler import BufferUsage, CompiledLayer, SimMode
from ..config import RunConfig
from ..fta import ThresholdedFilter
from ..metrics import SimReport
from ..sim import SimHook, SimOutput


class LayerWork(BaseModel):
    """
    Everything the pipeline knows about one layer.

    Attributes:
        name: Layer name used in reports and traces.
        weights: Source INT8 weights, one tuple per filter.
        inputs: Input vector. Layers after the first may leave it out when the pipeline chains.
        filters: Thresholded filters, set by quantization or given up front.
        images: Compiled image per macro.
        buffers: Buffer usage per macro.
        outputs: Simulation result per macro.
        weight_only: DB-PIM result with input skipping turned off.
    """

    name: str
    weights: tuple[tuple[int, ...], ...] = ()
    inputs: tuple[int, ...] | None = None
    filters: list[ThresholdedFilter] = Field(default_factory=list[ThresholdedFilter])
    images: dict[SimMode, CompiledLayer] = Field(default_factory=dict[SimMode, CompiledLayer])
    buffers: dict[SimMode, BufferUsage] = Field(default_factory=dict[SimMode, BufferUsage])
    outputs: dict[SimMode, SimOutput] = Field(default_factory=dict[SimMode, SimOutput])
    weight_only: SimOutput | None = None
    model_config = ConfigDict(arbitrary_types_allowed=True)


class PipelineState(BaseModel):
    """
    Holds the layers flowing through the pipeline and the final report.

    Stages work on the state one after the other. Within a stage, per-layer work may run
    in parallel; each task only touches its own `LayerWork`.

    Attributes:
        config: Run configuration.
        layers: The layers, in network order.
        mode: Macro whose outputs are reported and traced.
        chain: Feed the outputs of each layer into the next one.
        report: Set by the report stage.
    """

    config: RunConfig = Field(default_factory=RunConfig)
    layers: list[LayerWork] = Field(default_factory=list[LayerWork])
    mode: SimMode = SimMode.DBPIM
    chain: bool = False
    report: SimReport | None = None
    model_config = ConfigDict(arbitrary_types_allowed=True)


class Shared(BaseModel):
    """
    Holds objects shared by all stages, currently the simulator hooks.
    """

    sim_hooks: list[SimHook] = Field(default_factory=list[SimHook])
    model_config = ConfigDict(arbitrary_types_allowed=True)
