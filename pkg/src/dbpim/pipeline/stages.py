from __future__ import annotations
from abc import ABC, abstractmethod
from collections.abc import Awaitable, Callable, Sequence
import asyncio
import logging

from ..compiler import SimMode, check_buffers, emit_instructions, map_dense_layer, map_layer
from ..errors import ArgumentError, ShapeError
from ..fta import Filter, fta_quantize
from ..metrics import speedup_and_energy
from ..sim import SimOutput, run_layer
from .states import LayerWork, PipelineState, Shared


logger = logging.getLogger(__name__)


async def for_each_layer(layers: Sequence[LayerWork], work: Callable[[LayerWork], Awaitable[None]]) -> None:
    """
    Runs `work` on all layers concurrently. A failure is re-raised as the plain exception
    of the first failing layer instead of an exception group.
    """

    tasks: list[asyncio.Task[None]] = []
    try:
        async with asyncio.TaskGroup() as tg:
            for layer in layers:
                tasks.append(tg.create_task(work(layer)))
    except ExceptionGroup as group:
        for t in tasks:
            if t.done() and not t.cancelled() and (error := t.exception()) is not None:
                raise error from None
        raise group.exceptions[0] from None


class Stage[T: PipelineState = PipelineState](ABC):
    """
    One step of the pipeline.

    A stage must implement the async `__call__` method. It works on the state in place;
    per-layer work inside a stage may be fanned out with `asyncio.TaskGroup`, each task
    touching only its own layer.
    """

    @property
    def name(self) -> str:
        return type(self).__name__

    @abstractmethod
    async def __call__(self, state: T, shared: Shared) -> None:
        """
        Runs the stage.

        Args:
            state: The pipeline state.
            shared: The shared state.
        """
        pass


class QuantizeStage(Stage):
    """
    Runs FTA on every layer that has no thresholded filters yet.
    """

    async def __call__(self, state: PipelineState, shared: Shared) -> None:

        mode = state.config.macro.fta_mode

        async def quantize(layer: LayerWork) -> None:
            if layer.filters:
                return
            if not layer.weights:
                raise ShapeError(f"layer {layer.name} has no weights")
            sources = [Filter(weights=w, filter_id=i) for i, w in enumerate(layer.weights)]
            layer.filters = await asyncio.to_thread(fta_quantize, sources, mode)

        await for_each_layer(state.layers, quantize)


class CompileStage(Stage):
    """
    Maps every layer onto the DB-PIM and the dense macro and checks the buffer capacities.
    """

    async def __call__(self, state: PipelineState, shared: Shared) -> None:

        cfg = state.config

        async def compile_layer(layer: LayerWork) -> None:
            for mode, mapper in ((SimMode.DBPIM, map_layer), (SimMode.DENSE, map_dense_layer)):
                image = await asyncio.to_thread(mapper, layer.filters, cfg.macro, layer.name)
                layer.buffers[mode] = check_buffers(image, emit_instructions(image), cfg.buffers)
                layer.images[mode] = image

        await for_each_layer(state.layers, compile_layer)


class SimulateStage(Stage):
    """
    Simulates every layer on both macros.

    Layers run in order. With chaining, the outputs of the reported mode, clamped into the
    input range, become the inputs of the next layer. Simulator hooks observe the reported mode only.
    DB-PIM also runs once more without input skipping, so the report can tell the weight
    encoding gain from the skipping gain.
    """

    async def __call__(self, state: PipelineState, shared: Shared) -> None:

        cfg = state.config
        previous: SimOutput | None = None
        weight_only_cfg = cfg.model_copy(update={"ipu_skipping": False})

        for position, layer in enumerate(state.layers):

            inputs = layer.inputs
            if state.chain and previous is not None:
                inputs = tuple(cfg.signedness.clamp(v) for v in previous.outputs)
            if inputs is None:
                raise ArgumentError(f"layer {layer.name} (position {position}) has no inputs")
            if len(inputs) != layer.images[SimMode.DBPIM].reduction_length:
                raise ShapeError(
                    f"layer {layer.name} expects {layer.images[SimMode.DBPIM].reduction_length} inputs, got {len(inputs)}"
                )
            layer.inputs = inputs

            for mode in SimMode:
                hooks = shared.sim_hooks if mode == state.mode else ()
                layer.outputs[mode] = await asyncio.to_thread(run_layer, layer.images[mode], inputs, cfg, mode, hooks)

            if cfg.ipu_skipping:
                layer.weight_only = await asyncio.to_thread(run_layer, layer.images[SimMode.DBPIM], inputs, weight_only_cfg, SimMode.DBPIM)
            else:
                layer.weight_only = layer.outputs[SimMode.DBPIM]

            previous = layer.outputs[state.mode]

            logger.info("%s: %d dbpim cycles, %d dense cycles", layer.name,
                        layer.outputs[SimMode.DBPIM].cycles, layer.outputs[SimMode.DENSE].cycles)


class ReportStage(Stage):
    """
    Builds the speedup and energy report from the simulation results.
    """

    async def __call__(self, state: PipelineState, shared: Shared) -> None:

        weight_only = [layer.weight_only for layer in state.layers if layer.weight_only is not None]

        state.report = speedup_and_energy(
            [layer.outputs[SimMode.DBPIM] for layer in state.layers],
            [layer.outputs[SimMode.DENSE] for layer in state.layers],
            state.config.macro.energy,
            mode=state.mode,
            weight_only=weight_only if len(weight_only) == len(state.layers) else None,
        )
