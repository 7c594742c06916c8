"""Command-line entry point: config ingestion, command dispatch and report serialisation."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog

from retarded_spectrum.config import NumericsSection, ProblemConfig, get_runtime_settings, load_config
from retarded_spectrum.errors import SpectralError
from retarded_spectrum.expr import FloatArray, unparse
from retarded_spectrum.models import PqrsAt, SpectrumRow
from retarded_spectrum.problem import Problem, build_problem, delay_margins
from retarded_spectrum.spectral.asymptotics import MIN_REPORT_N, asymptotic_report
from retarded_spectrum.spectral.charfn import Method, characteristic_function, characteristic_table
from retarded_spectrum.spectral.dde import GridSpec, solve_omega
from retarded_spectrum.spectral.pqrs import pqrs_sweep
from retarded_spectrum.spectral.spectrum import IndexedSpectrum, index_spectrum, scan_roots_detailed
from retarded_spectrum.spectral.trace import MIN_TRACE_N, trace_report
from retarded_spectrum.validation import (
    validate_command,
    validate_method,
    validate_n_max,
    validate_pqrs_at,
    validate_sweep,
)

structlog.configure(
    processors=[
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.dev.ConsoleRenderer() if sys.stderr.isatty() else structlog.processors.JSONRenderer(),
    ],
    logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
)

log = structlog.get_logger()

_EPILOG = """\
environment:
  THREADS   worker threads for mu sweeps (positive integer, default 1)

exit status: 0 on success, 1 on configuration, validation, indexing or solver errors.
"""


@dataclass(frozen=True)
class CommandFlags:
    """Per-run options; ``None`` numerics fall back to the config file."""

    out: Path | None = None
    n_max: int | None = None
    start: float | None = None
    stop: float | None = None
    step: float | None = None
    pqrs_at: str = "mu0"
    method: str = "auto"
    mu: float | None = None
    grid_points: int | None = None
    quad_points: int | None = None
    scan_step: float | None = None
    root_tol: float | None = None


def _elapsed_ms(start: float) -> int:
    return int((time.monotonic() - start) * 1000)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _json_text(value: object, level: int = 0) -> str:
    """Serialise a dumped report as indented JSON with floats written like the CSV columns.

    Args:
        value: Output of ``model_dump()``: dicts, lists, str, int, float, bool or None.
        level: Current nesting depth, two spaces per level.

    Returns:
        JSON text without a trailing newline.
    """
    pad, inner = "  " * level, "  " * (level + 1)
    match value:
        case None:
            return "null"
        case bool():
            return "true" if value else "false"
        case float():
            # JSON has no spelling for inf or nan
            return _fmt(value) if math.isfinite(value) else "null"
        case int() | str():
            return json.dumps(value)
        case dict():
            if not value:
                return "{}"
            items = [f"{inner}{json.dumps(str(k))}: {_json_text(v, level + 1)}" for k, v in value.items()]
            return "{\n" + ",\n".join(items) + f"\n{pad}}}"
        case list() | tuple():
            if not value:
                return "[]"
            items = [f"{inner}{_json_text(v, level + 1)}" for v in value]
            return "[\n" + ",\n".join(items) + f"\n{pad}]"
    msg = f"cannot serialise {type(value).__name__} as JSON"
    raise TypeError(msg)


def _csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _numerics(cfg: ProblemConfig, flags: CommandFlags) -> NumericsSection:
    overrides = {
        key: value
        for key, value in (
            ("grid_points", flags.grid_points),
            ("quad_points", flags.quad_points),
            ("scan_step", flags.scan_step),
            ("root_tol", flags.root_tol),
            ("n_max", flags.n_max),
        )
        if value is not None
    }
    return NumericsSection.model_validate({**cfg.numerics.model_dump(), **overrides})


def _resolve_method(problem: Problem, method: str) -> Method:
    validate_method(method)
    if method == "auto":
        return "closed_form" if problem.q.is_zero else "solver"
    return "closed_form" if method == "closed-form" else "solver"


def _sweep(flags: CommandFlags) -> FloatArray:
    validate_sweep(flags.start, flags.stop, flags.step)
    assert flags.start is not None and flags.stop is not None and flags.step is not None
    # the 1e-9 keeps an end point that the step reaches only up to rounding (0 to 1 by 0.1)
    count = math.floor((flags.stop - flags.start) / flags.step + 1e-9) + 1
    return flags.start + flags.step * np.arange(count, dtype=np.float64)


def _indexed(
    problem: Problem, num: NumericsSection, grid: GridSpec, method: Method, threads: int
) -> tuple[IndexedSpectrum, list[str]]:
    scan = scan_roots_detailed(
        problem, num.n_max, num.scan_step, grid, method=method, root_tol=num.root_tol, threads=threads
    )
    notes = [f"suspected double root near mu={s.mu:.12g}" for s in scan.suspects]
    return index_spectrum(scan.roots, num.n_max), notes


def _validate_report(problem: Problem) -> str:
    margins = delay_margins(problem)
    lines = [f"{name} = {_fmt(getattr(problem, name))}" for name in ("a1", "a1p", "a2", "a2p", "b", "delta")]
    for name, fn in (("q", problem.q), ("delay", problem.delay)):
        lines.append(f"{name}_left = {unparse(fn.left)}  (limit at pi/2: {_fmt(fn.left_limit_at_mid)})")
        lines.append(f"{name}_right = {unparse(fn.right)}  (limit at pi/2: {_fmt(fn.right_limit_at_mid)})")
    lines.extend(f"warning: {w}" for w in problem.warnings)
    lines.extend(
        [
            f"min delay(x), left piece = {_fmt(margins.min_delay_left)}",
            f"min delay(x), right piece = {_fmt(margins.min_delay_right)}",
            f"min x - delay(x), left piece = {_fmt(margins.left_history_margin)}",
            f"min x - delay(x) - pi/2, right piece = {_fmt(margins.right_history_margin)}",
            "status: ok",
        ]
    )
    return "\n".join(lines) + "\n"


def _eigen_report(spec: IndexedSpectrum, problem: Problem, grid: GridSpec, method: Method, threads: int) -> str:
    ordered = spec.ordered()
    fn = characteristic_function(problem, grid, method, threads)
    residuals = fn(np.array([entry.mu for _, entry in ordered], dtype=np.float64))
    rows = [
        SpectrumRow(label=str(label), mu=entry.mu, mu0=entry.mu0, eps=entry.eps, f_residual=float(res))
        for (label, entry), res in zip(ordered, residuals, strict=True)
    ]
    return _csv(
        ("label", "mu", "mu0", "eps", "f_residual"),
        ((r.label, _fmt(r.mu), _fmt(r.mu0), _fmt(r.eps), _fmt(r.f_residual)) for r in rows),
    )


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        out.write_text(text, encoding="utf-8", newline="\n")


def _render(command: str, cfg: ProblemConfig, flags: CommandFlags) -> str:
    threads = get_runtime_settings().threads
    problem = build_problem(cfg)
    num = _numerics(cfg, flags)
    grid = GridSpec(steps_per_half=num.grid_points)
    validate_pqrs_at(flags.pqrs_at)
    pqrs_at: PqrsAt = "n" if flags.pqrs_at == "n" else "mu0"

    if command == "validate":
        return _validate_report(problem)
    if command == "charfn":
        table = characteristic_table(problem, _sweep(flags), grid, threads)
        return _csv(("mu", "f", "f0"), ((_fmt(s.mu), _fmt(s.f), _fmt(s.f0)) for s in table))
    if command == "pqrs":
        values = pqrs_sweep(problem, _sweep(flags), num.quad_points)
        return _csv(
            ("mu", "P", "Q", "R", "S"),
            ((_fmt(v.mu), _fmt(v.p_val), _fmt(v.q_val), _fmt(v.r_val), _fmt(v.s_val)) for v in values),
        )
    if command == "omega":
        if flags.mu is None:
            msg = "omega needs --mu"
            raise ValueError(msg)
        trajectory = solve_omega(problem, flags.mu, grid)
        return _csv(("x", "y", "yp"), ((_fmt(x), _fmt(y), _fmt(yp)) for x, y, yp in trajectory.rows()))

    method = _resolve_method(problem, flags.method)
    if command == "eigen":
        spec, notes = _indexed(problem, num, grid, method, threads)
        for note in [*notes, *spec.warnings]:
            log.warning("eigen_diagnostic", detail=note)
        return _eigen_report(spec, problem, grid, method, threads)
    if command == "asym":
        validate_n_max(num.n_max, MIN_REPORT_N)
        spec, _ = _indexed(problem, num, grid, method, threads)
        rows = asymptotic_report(problem, spec, num.quad_points, pqrs_at)
        return _csv(
            ("n", "mu", "mu_pred", "residual", "scaled_residual"),
            (
                (str(r.n), _fmt(r.mu_computed), _fmt(r.mu_predicted), _fmt(r.residual), _fmt(r.scaled_residual))
                for r in rows
            ),
        )
    validate_n_max(num.n_max, MIN_TRACE_N)
    report = trace_report(
        problem,
        num.n_max,
        grid,
        quad_points=num.quad_points,
        scan_step=num.scan_step,
        root_tol=num.root_tol,
        method=method,
        pqrs_at=pqrs_at,
        threads=threads,
    )
    return _json_text(report.model_dump()) + "\n"


def run_command(command: str, cfg: ProblemConfig, flags: CommandFlags) -> int:
    """Run one command and write its output once.

    Args:
        command: One of the subcommand names.
        cfg: Parsed problem file.
        flags: Per-run options from the command line.

    Returns:
        The process exit status: 0 on success, 1 when the command fails.
    """
    start = time.monotonic()
    # the whole output is rendered before anything is written, so a failure leaves no partial file
    try:
        validate_command(command)
        text = _render(command, cfg, flags)
    except (SpectralError, ValueError) as exc:
        log.error("command_failed", command=command, error=str(exc), latency_ms=_elapsed_ms(start))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(text, flags.out)
    log.info("command_completed", command=command, latency_ms=_elapsed_ms(start))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retarded-spectrum",
        description="Spectral toolkit for a retarded Sturm-Liouville problem with interface conditions.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", type=Path, help="problem file (YAML)")
    common.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    common.add_argument("--nmax", dest="n_max", type=int, default=None, help="label range / truncation N")
    common.add_argument("--grid-points", type=int, default=None, help="override numerics.grid_points")
    common.add_argument("--quad-points", type=int, default=None, help="override numerics.quad_points")
    common.add_argument("--scan-step", type=float, default=None, help="override numerics.scan_step")
    common.add_argument("--root-tol", type=float, default=None, help="override numerics.root_tol")

    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--from", dest="start", type=float, default=None, help="first mu")
    sweep.add_argument("--to", dest="stop", type=float, default=None, help="last mu (inclusive)")
    sweep.add_argument("--step", type=float, default=None, help="mu spacing")

    spectral = argparse.ArgumentParser(add_help=False)
    spectral.add_argument("--method", default="auto", help="auto | solver | closed-form (default: auto)")

    labelled = argparse.ArgumentParser(add_help=False)
    labelled.add_argument("--pqrs-at", default="mu0", help="evaluate P, Q at mu0 (default) or at n")

    commands.add_parser("validate", parents=[common], help="check the problem and print delay margins")
    commands.add_parser("eigen", parents=[common, spectral], help="labelled eigenvalues as CSV")
    commands.add_parser("charfn", parents=[common, sweep], help="tabulate F and F0 as CSV")
    commands.add_parser("pqrs", parents=[common, sweep], help="tabulate P, Q, R, S as CSV")
    commands.add_parser("asym", parents=[common, spectral, labelled], help="asymptotic residuals as CSV")
    commands.add_parser("trace", parents=[common, spectral, labelled], help="trace report as JSON")
    omega = commands.add_parser("omega", parents=[common], help="solution trajectory as CSV")
    omega.add_argument("--mu", type=float, required=True, help="spectral parameter")
    return parser


def _flags(args: argparse.Namespace) -> CommandFlags:
    return CommandFlags(
        out=args.out,
        n_max=args.n_max,
        start=getattr(args, "start", None),
        stop=getattr(args, "stop", None),
        step=getattr(args, "step", None),
        pqrs_at=getattr(args, "pqrs_at", "mu0"),
        method=getattr(args, "method", "auto"),
        mu=getattr(args, "mu", None),
        grid_points=args.grid_points,
        quad_points=args.quad_points,
        scan_step=args.scan_step,
        root_tol=args.root_tol,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (FileNotFoundError, SpectralError) as exc:
        log.error("config_load_failed", path=str(args.config), error=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run_command(args.command, cfg, _flags(args))


if __name__ == "__main__":
    sys.exit(main())
