"""
Command line front end: `dbpim quantize | compile | simulate | verify`.

Exit codes: 0 success, 1 argument or verification failure, 2 parse or range error,
3 shape error, 4 capacity error.
"""

from __future__ import annotations
from collections.abc import Sequence
from pathlib import Path
from typing import NoReturn
import argparse
import asyncio
import logging

from rich.console import Console
from rich.markup import escape

from .compiler import CompiledFile, CompiledLayer, MetadataImage, SimMode, apply_metadata, check_buffers, emit_instructions, emit_metadata, from_compiled_file, map_dense_layer, map_layer, to_compiled_file
from .config import RunConfig
from .errors import ArgumentError, DbPimError, VerificationError
from .files import QuantizedFile, from_quantized_file, load_config, read_inputs, read_model, read_weights, to_quantized_file, write_model
from .fta import Filter, TableMode, ThresholdedFilter, fta_quantize
from .hooks import PipelineRenderer, StagePrintHook, TraceHook
from .logs import setup_logging
from .metrics import report_csv
from .pipeline import LayerWork, Pipeline, PipelineHook, PipelineState, Shared, default_stages
from .verify import VerifyCase, VerifySummary, random_case, run_case, verify_cases


logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):

    def error(self, message: str) -> NoReturn:
        raise ArgumentError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:

    parser = _Parser(prog="dbpim", description="DB-PIM weight approximation, compiler and macro simulator.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="Log more (-v info, -vv debug). Overrides DBPIM_LOG_LEVEL.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    quantize = commands.add_parser("quantize", help="Approximate a weight tensor with fixed thresholds.")
    quantize.add_argument("--weights", required=True, type=Path, help="2-D i8 tensor, one filter per row.")
    quantize.add_argument("--out", required=True, type=Path, help="Quantized file to write.")
    quantize.add_argument("--mode", choices=[m.value for m in TableMode], help="Query table mode. Defaults to the config value.")
    quantize.add_argument("--config", type=Path)
    quantize.set_defaults(handler=cmd_quantize)

    compile_ = commands.add_parser("compile", help="Map a layer onto the macro and emit metadata and instructions.")
    source = compile_.add_mutually_exclusive_group(required=True)
    source.add_argument("--weights", type=Path, help="2-D i8 tensor, quantized on the fly.")
    source.add_argument("--quantized", type=Path, help="Output of `dbpim quantize`.")
    compile_.add_argument("--out", required=True, type=Path, help="Compiled layer file to write.")
    compile_.add_argument("--metadata-out", type=Path, help="Also write the metadata image on its own.")
    compile_.add_argument("--dense", action="store_true", help="Compile for the dense baseline macro.")
    compile_.add_argument("--name", default=None, help="Layer name. Defaults to the file stem.")
    compile_.add_argument("--config", type=Path)
    compile_.set_defaults(handler=cmd_compile)

    simulate = commands.add_parser("simulate", help="Simulate layers on DB-PIM and the dense baseline and report.")
    simulate.add_argument("--weights", required=True, nargs="+", type=Path, help="One weight tensor per layer.")
    simulate.add_argument("--inputs", required=True, nargs="+", type=Path, help="One input vector per layer, or one with --chain.")
    simulate.add_argument("--config", type=Path)
    simulate.add_argument("--mode", choices=[m.value for m in SimMode], default=SimMode.DBPIM.value, help="Mode whose outputs are reported and traced.")
    simulate.add_argument("--report", required=True, type=Path, help="JSON report to write.")
    simulate.add_argument("--csv", type=Path, help="Also write the report as CSV.")
    simulate.add_argument("--trace", type=Path, help="Write a per-cycle trace.")
    simulate.add_argument("--chain", action="store_true", help="Feed each layer's outputs into the next layer.")
    simulate.add_argument("--quiet", action="store_true", help="Do not print the report.")
    simulate.set_defaults(handler=cmd_simulate)

    verify = commands.add_parser("verify", help="Check the simulator against the reference dot products.")
    verify.add_argument("--weights", type=Path)
    verify.add_argument("--inputs", type=Path)
    verify.add_argument("--config", type=Path)
    verify.add_argument("--cases", type=int, default=None, help="Number of random cases drawn with the config seed.")
    verify.add_argument("--workers", type=int, default=1, help="Threads running random cases.")
    verify.add_argument("--compiled", type=Path, help="Use this compiled DB-PIM layer instead of compiling the weights.")
    verify.add_argument("--metadata", type=Path, help="Apply this metadata image to the DB-PIM layer before simulating.")
    verify.add_argument("--out", type=Path, help="Write the results as JSON.")
    verify.set_defaults(handler=cmd_verify)

    return parser


def _quantize(weights: Sequence[tuple[int, ...]], mode: TableMode) -> list[ThresholdedFilter]:
    return fta_quantize([Filter(weights=w, filter_id=i) for i, w in enumerate(weights)], mode)


# ============================================================================
# Commands
# ============================================================================

def cmd_quantize(args: argparse.Namespace, console: Console) -> int:

    cfg = load_config(args.config)
    mode = TableMode(args.mode) if args.mode else cfg.macro.fta_mode

    weights = read_weights(args.weights, cfg)
    document = to_quantized_file(weights, _quantize(weights, mode), mode)
    write_model(args.out, document)

    s = document.summary
    console.print(
        f"{len(document.filters)} filters, thresholds {s.phi_histogram}, "
        f"mean abs error {s.mean_abs_error:.4f}, max {s.max_abs_error}",
        markup=False,
    )
    return 0


def cmd_compile(args: argparse.Namespace, console: Console) -> int:

    cfg = load_config(args.config)

    if args.quantized:
        filters = from_quantized_file(read_model(args.quantized, QuantizedFile), str(args.quantized))
        source: Path = args.quantized
    else:
        filters = _quantize(read_weights(args.weights, cfg), cfg.macro.fta_mode)
        source = args.weights

    mapper = map_dense_layer if args.dense else map_layer
    layer = mapper(filters, cfg.macro, args.name or source.stem)
    usage = check_buffers(layer, emit_instructions(layer), cfg.buffers)

    write_model(args.out, to_compiled_file(layer))
    if args.metadata_out:
        if layer.kind != SimMode.DBPIM:
            raise ArgumentError("--metadata-out needs a DB-PIM layer, drop --dense")
        write_model(args.metadata_out, emit_metadata(layer))

    console.print(
        f"{layer.name}: {layer.num_filters} filters, {len(layer.passes)} passes, {len(layer.skipped)} skipped; "
        f"buffers {usage.model_dump()}",
        markup=False,
    )
    return 0


def _layer_names(paths: Sequence[Path]) -> list[str]:
    names: list[str] = []
    for i, p in enumerate(paths):
        names.append(p.stem if p.stem not in names else f"{p.stem}_{i}")
    return names


def cmd_simulate(args: argparse.Namespace, console: Console) -> int:

    cfg = load_config(args.config)

    if args.chain:
        if len(args.inputs) != 1:
            raise ArgumentError("--chain takes exactly one input file, for the first layer")
    elif len(args.inputs) != len(args.weights):
        raise ArgumentError(f"{len(args.weights)} weight files need as many input files, got {len(args.inputs)}")

    layers = [
        LayerWork(name=name, weights=tuple(read_weights(path, cfg)))
        for name, path in zip(_layer_names(args.weights), args.weights)
    ]
    for layer, path in zip(layers, args.inputs):
        layer.inputs = read_inputs(path, cfg)

    state = PipelineState(config=cfg, layers=layers, mode=SimMode(args.mode), chain=args.chain)
    hooks: list[PipelineHook] = [StagePrintHook(PipelineRenderer(Console(stderr=True)), details=args.verbose > 1)] if args.verbose else []

    trace = args.trace.open("w", encoding="utf-8") if args.trace else None
    try:
        shared = Shared(sim_hooks=[TraceHook(trace)] if trace else [])
        state, _ = asyncio.run(Pipeline(default_stages(), hooks)(state, shared))
    finally:
        if trace:
            trace.close()

    if state.report is None:
        raise DbPimError("internal error: the pipeline produced no report")

    write_model(args.report, state.report)
    if args.csv:
        args.csv.write_text(report_csv(state.report), encoding="utf-8")

    if not args.quiet:
        PipelineRenderer(console).render_report(state.report)
    return 0


def _file_case(args: argparse.Namespace, cfg: RunConfig) -> tuple[VerifyCase, CompiledLayer | None]:

    if args.inputs is None:
        raise ArgumentError("--weights needs --inputs")

    weights = read_weights(args.weights, cfg)
    case = VerifyCase(
        index=0,
        macro=cfg.macro,
        signedness=cfg.signedness,
        ipu_skipping=cfg.ipu_skipping,
        weights=tuple(weights),
        inputs=read_inputs(args.inputs, cfg),
    )

    compiled: CompiledLayer | None = None
    if args.compiled:
        compiled = from_compiled_file(read_model(args.compiled, CompiledFile), str(args.compiled))
    if args.metadata:
        base = compiled or map_layer(_quantize(weights, cfg.macro.fta_mode), cfg.macro, args.weights.stem)
        compiled = apply_metadata(base, read_model(args.metadata, MetadataImage))

    return case, compiled


def cmd_verify(args: argparse.Namespace, console: Console) -> int:

    cfg = load_config(args.config)

    if args.weights:
        case, compiled = _file_case(args, cfg)
        summary = VerifySummary(cases=(run_case(case, cfg, compiled),))
    elif args.cases is not None:
        if args.cases < 1 or args.workers < 1:
            raise ArgumentError("--cases and --workers must be positive")
        if args.compiled or args.metadata:
            raise ArgumentError("--compiled and --metadata apply to a case given by --weights and --inputs")
        cases = [random_case(cfg.seed, i) for i in range(args.cases)]
        summary = asyncio.run(verify_cases(cases, cfg, args.workers))
    else:
        raise ArgumentError("verify needs --weights and --inputs, or --cases")

    if args.out:
        write_model(args.out, summary)

    PipelineRenderer(console).render_verify(summary)

    if summary.failed:
        return VerificationError.exit_code
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    """
    Runs the CLI and returns the process exit code.
    """

    errors = Console(stderr=True)

    try:
        args = build_parser().parse_args(argv)
        setup_logging("DEBUG" if args.verbose > 1 else "INFO" if args.verbose else None)
        return args.handler(args, Console())

    except DbPimError as e:
        errors.print(f"[bold red]{type(e).__name__}:[/] {escape(str(e))}")
        return e.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
