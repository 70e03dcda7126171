from abc import ABC

from .states import PipelineState, Shared


class PipelineHook[T: PipelineState = PipelineState](ABC):
    """
    Hook for the pipeline execution.

    Hooks are called before and after every stage. They can be used to print progress,
    inspect the state, or handle errors.
    """

    async def on_pipeline_start(self, state: T, shared: Shared) -> None:
        """
        Called when the pipeline starts.

        Args:
            state: The initial state.
            shared: The shared state.
        """

        pass


    async def on_stage_start(self, state: T, shared: Shared, stage: str) -> None:
        """
        Called before a stage runs.

        Args:
            state: The state.
            shared: The shared state.
            stage: Name of the stage.
        """

        pass


    async def on_stage_end(self, state: T, shared: Shared, stage: str) -> None:
        """
        Called after a stage has finished.
        """

        pass


    async def on_error(self, error: Exception, state: T, shared: Shared, stage: str) -> Exception | None:
        """
        Called when a stage raises.

        Args:
            error: The exception.
            state: The state when the error occurred.
            shared: The shared state.
            stage: Name of the failing stage.

        Returns:
            The exception to raise, possibly replaced, or None to stop the pipeline without raising.
        """

        return error


    async def on_pipeline_end(self, state: T, shared: Shared) -> None:
        """
        Called when the pipeline finishes.
        """

        pass
