from __future__ import annotations
from collections.abc import Sequence
import logging

from .hooks import PipelineHook
from .stages import Stage, QuantizeStage, CompileStage, SimulateStage, ReportStage
from .states import PipelineState, Shared


logger = logging.getLogger(__name__)


class Pipeline[T: PipelineState = PipelineState]:
    """
    Runs a sequence of stages on a state.

    An exception raised by a stage is passed through the `on_error` hooks in order. A hook
    returning None stops the pipeline without raising; the remaining stages are not run.

    Attributes:
        stages: The stages in execution order.
        hooks: Pipeline hooks, usable for printing and error handling.
    """

    def __init__(self, stages: Sequence[Stage[T]], hooks: Sequence[PipelineHook[T]] | None = None) -> None:
        self.stages = stages
        self.hooks = hooks or []

    async def __call__(self, state: T, shared: Shared) -> tuple[T, Shared]:
        """
        Runs all stages on `state`.

        Returns:
            The state and shared state after the last executed stage.
        """

        # Hook
        for h in self.hooks: await h.on_pipeline_start(state, shared)

        for stage in self.stages:

            # Hook
            for h in self.hooks: await h.on_stage_start(state, shared, stage.name)

            try:
                await stage(state, shared)

            except Exception as e:
                logger.debug("stage %s failed: %s", stage.name, e)

                error: Exception | None = e
                for h in self.hooks:
                    error = await h.on_error(error, state, shared, stage.name)
                    if error is None:
                        break

                if error:
                    raise error
                return state, shared

            # Hook
            for h in self.hooks: await h.on_stage_end(state, shared, stage.name)

        # Hook
        for h in self.hooks: await h.on_pipeline_end(state, shared)

        return state, shared


def default_stages() -> list[Stage]:
    """The full quantize, compile, simulate, report sequence."""
    return [QuantizeStage(), CompileStage(), SimulateStage(), ReportStage()]
