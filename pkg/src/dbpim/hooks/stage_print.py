from ..pipeline import PipelineHook, PipelineState, Shared
from .utils.rich_printing import PipelineRenderer


class StagePrintHook[T: PipelineState = PipelineState](PipelineHook[T]):
    """
    A hook that prints the stages of the pipeline as they run, and the report at the end.

    Args:
        renderer: The PipelineRenderer to use. If not provided, the default renderer will be used.
        details: Also print the thresholded filters and compiled images of every layer at the end.
    """

    def __init__(self, renderer: PipelineRenderer[T] | None = None, details: bool = False) -> None:
        self.renderer = renderer or PipelineRenderer()
        self.details = details


    async def on_pipeline_start(self, state: T, shared: Shared) -> None:
        self.renderer.render_pipeline_start(state)

    async def on_stage_start(self, state: T, shared: Shared, stage: str) -> None:
        self.renderer.render_stage_start(stage)

    async def on_stage_end(self, state: T, shared: Shared, stage: str) -> None:
        self.renderer.render_stage_end(state, stage)

    async def on_error(self, error: Exception, state: T, shared: Shared, stage: str) -> Exception | None:
        self.renderer.render_error(error, stage)
        return error

    async def on_pipeline_end(self, state: T, shared: Shared) -> None:
        if self.details:
            self.renderer.render_layer_details(state)
        self.renderer.render_pipeline_end(state)
