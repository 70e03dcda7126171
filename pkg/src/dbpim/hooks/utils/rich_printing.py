from rich.console import Console, Group
from rich.markup import escape
from rich.panel import Panel
from rich.pretty import Pretty
from rich.rule import Rule
from rich.table import Table
from rich.tree import Tree

from ...metrics import SimReport, UtilizationRecord
from ...pipeline import PipelineState
from ...verify import VerifySummary


def _ratio(value: float | None, suffix: str = "x") -> str:
    return "n/a" if value is None else f"{value:.3f}{suffix}"


def _percent(value: float | None) -> str:
    return "n/a" if value is None else f"{100 * value:.2f}%"


def _u_act(record: UtilizationRecord | None) -> str:
    return "n/a" if record is None else f"{100 * record.u_act:.2f}% ({record.effective_cells}/{record.total_cells})"


class PipelineRenderer[T: PipelineState = PipelineState]:
    """
    A reusable Rich-based renderer for pipeline runs, reports and verification results.

    Used by `StagePrintHook` and by the CLI.
    """

    def __init__(self, console: Console | None = None) -> None:
        self.console = console or Console()

    # -------------------------------------------------------------------------
    # Pipeline lifecycle
    # -------------------------------------------------------------------------

    def render_pipeline_start(self, state: T) -> None:
        self.console.print(Rule("[bold magenta]Pipeline Started", style="magenta"))

        layers = Tree(f"[bold yellow]{len(state.layers)} layer(s), reporting {state.mode}")
        for layer in state.layers:
            length = len(layer.weights[0]) if layer.weights else len(layer.filters[0].weights) if layer.filters else 0
            layers.add(f"[green]{escape(layer.name)}[/green] {len(layer.weights) or len(layer.filters)} filters x {length}")

        self.console.print(Panel(layers, title="Layers", border_style="blue", expand=False))

    def render_stage_start(self, stage: str) -> None:
        self.console.print(f"[yellow]>[/yellow] {stage}")

    def render_stage_end(self, state: T, stage: str) -> None:
        self.console.print(f"[dim]Finished: {stage}[/dim]")

    def render_pipeline_end(self, state: T) -> None:
        self.console.print(Rule("[bold green]Pipeline Finished", style="green"))
        if state.report is not None:
            self.render_report(state.report)

    def render_layer_details(self, state: T) -> None:
        """
        Prints the first thresholded filter and the compiled images of every layer.
        """

        for layer in state.layers:
            parts: list[Pretty] = []
            if layer.filters:
                parts.append(Pretty(layer.filters[0]))
            parts.extend(Pretty(image) for image in layer.images.values())
            if parts:
                self.console.print(Panel(Group(*parts), title=escape(layer.name), border_style="dim", expand=False))

    def render_error(self, error: Exception, stage: str) -> None:
        self.console.print(Panel(
            f"[bold white]{type(error).__name__}: {escape(str(error))}[/]",
            title=f"ERROR IN {stage}",
            style="on red",
            expand=True,
        ))

    # -------------------------------------------------------------------------
    # Results
    # -------------------------------------------------------------------------

    def render_report(self, report: SimReport) -> None:

        table = Table(title="Simulation Report", show_header=True, header_style="bold cyan", border_style="dim")
        table.add_column("Layer", style="bold")
        table.add_column("DB-PIM cycles", justify="right")
        table.add_column("Dense cycles", justify="right")
        table.add_column("Speedup", justify="right")
        table.add_column("Weight-only speedup", justify="right")
        table.add_column("Energy savings", justify="right")
        table.add_column("DB-PIM U_act", justify="right")
        table.add_column("Dense U_act", justify="right")

        for l in report.layers:
            table.add_row(
                escape(l.layer), str(l.dbpim.cycles), str(l.dense.cycles), _ratio(l.speedup), _ratio(l.weight_only_speedup), _percent(l.energy_savings),
                _u_act(l.dbpim.utilization), _u_act(l.dense.utilization),
            )

        a = report.aggregate
        table.add_section()
        table.add_row(
            "[bold]aggregate", str(a.dbpim_cycles), str(a.dense_cycles), _ratio(a.speedup), _ratio(a.weight_only_speedup), _percent(a.energy_savings),
            _u_act(a.dbpim_utilization), _u_act(a.dense_utilization),
        )

        self.console.print(table)
        self.console.print(f"[dim]mean per-layer speedup: {_ratio(a.mean_layer_speedup)}[/dim]")

    def render_verify(self, summary: VerifySummary) -> None:

        table = Table(title="Verification", show_header=True, header_style="bold cyan", border_style="dim")
        table.add_column("Case", justify="right")
        table.add_column("Result")
        table.add_column("Detail", ratio=1)

        for case in summary.cases:
            table.add_row(str(case.index), "[green]pass" if case.passed else "[red]FAIL", escape(case.message))
            for check in case.checks:
                if check.passed:
                    continue
                k = check.first_mismatch
                assert k is not None
                detail = f"{check.mode}: filter {k} expected {check.expected[k]}, got {check.got[k]}"
                if check.detail:
                    detail += f"; {check.detail}"
                table.add_row("", "", escape(detail))

        if table.row_count:
            self.console.print(table)

        color = "green" if summary.failed == 0 else "red"
        self.console.print(f"[bold {color}]{summary.passed} passed, {summary.failed} failed[/]")

