from .stage_print import StagePrintHook
from .trace import TraceHook
from .utils.rich_printing import PipelineRenderer
