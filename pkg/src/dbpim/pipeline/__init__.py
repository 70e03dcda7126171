from .states import LayerWork, PipelineState, Shared
from .hooks import PipelineHook
from .stages import Stage, QuantizeStage, CompileStage, SimulateStage, ReportStage
from .runner import Pipeline, default_stages
