"""Regularized trace: truncated left-hand sums against the closed-form right-hand side.

    S_N = mu_{-0}^2 + mu_{+0}^2 + sum_{n=1}^{N} [mu_{-n}^2 + mu_n^2 - 2 (n-1)^2 + (4/pi) C_n]
    C_n = -a1p/a2p + P + Q
    rhs = -(2/pi) C - C^2 + D^2,   C = C_n at mu = 0,   D = a2/a2p + R(0) + S(0)
"""

from __future__ import annotations

import math

import structlog

from retarded_spectrum.models import PqrsAt, TraceReport
from retarded_spectrum.problem import Problem
from retarded_spectrum.spectral.asymptotics import pqrs_argument
from retarded_spectrum.spectral.charfn import Method
from retarded_spectrum.spectral.dde import GridSpec
from retarded_spectrum.spectral.pqrs import compute_pqrs
from retarded_spectrum.spectral.spectrum import (
    DEFAULT_ROOT_TOL,
    DEFAULT_SCAN_STEP,
    IndexedSpectrum,
    Label,
    index_spectrum,
    scan_roots_detailed,
)

log = structlog.get_logger()

MIN_TRACE_N = 10
DECAY_BAND = (0.1, 0.9)


def trace_term(p: Problem, spec: IndexedSpectrum, n: int, quad_points: int, pqrs_at: PqrsAt = "mu0") -> float:
    """mu_{-n}^2 + mu_n^2 - 2 (n-1)^2 + (4/pi)(-a1p/a2p + P + Q).

    Raises:
        MissingLabelError: If +n or -n is absent from ``spec``.
    """
    if n < 1:
        msg = f"trace terms start at n = 1, got {n}"
        raise ValueError(msg)
    mu_neg = spec.mu(Label(-1, n))
    mu_pos = spec.mu(Label(1, n))
    values = compute_pqrs(p, pqrs_argument(Label(1, n), pqrs_at), quad_points)
    correction = -p.a1p / p.a2p + values.p_val + values.q_val
    return mu_neg**2 + mu_pos**2 - 2.0 * (n - 1) ** 2 + (4.0 / math.pi) * correction


def _partial_sum(spec: IndexedSpectrum, terms: list[float]) -> float:
    return math.fsum([spec.mu(Label(-1, 0)) ** 2, spec.mu(Label(1, 0)) ** 2, *terms])


def trace_partial_sum(p: Problem, spec: IndexedSpectrum, n: int, quad_points: int, pqrs_at: PqrsAt = "mu0") -> float:
    """S_N, accumulated in ascending n with correctly rounded summation.

    Raises:
        MissingLabelError: If any of -0, +0, +-1..+-N is absent.
    """
    return _partial_sum(spec, [trace_term(p, spec, k, quad_points, pqrs_at) for k in range(1, n + 1)])


def trace_constants(p: Problem, quad_points: int) -> tuple[float, float]:
    """(C, D) at mu = 0; R(0) = S(0) = 0 exactly, so D = a2/a2p."""
    at_zero = compute_pqrs(p, 0.0, quad_points)
    c_const = -p.a1p / p.a2p + at_zero.p_val + at_zero.q_val
    d_const = p.a2 / p.a2p + at_zero.r_val + at_zero.s_val
    return c_const, d_const


def trace_rhs(p: Problem, quad_points: int) -> float:
    c_const, d_const = trace_constants(p, quad_points)
    return -(2.0 / math.pi) * c_const - c_const**2 + d_const**2


# O(1/N) decay halves the residual with every doubling of N. A ratio outside DECAY_BAND over the
# last doubling means the sums have levelled off or are growing, and is reported as a plateau.
def _shape_warnings(residuals: dict[int, float], n_max: int) -> list[str]:
    last = residuals[n_max]
    half = residuals[n_max // 2]
    if last == 0.0:
        return []
    if half == 0.0:
        return [f"residual plateau near {last:.6g}: residual({n_max // 2}) is zero but residual({n_max}) is not"]
    ratio = abs(last) / abs(half)
    low, high = DECAY_BAND
    if low <= ratio <= high:
        return []
    return [
        f"residual plateau near {last:.6g}: |residual({n_max})| / |residual({n_max // 2})| = {ratio:.6g} "
        f"outside [{low}, {high}]"
    ]


def trace_report_from_spectrum(
    p: Problem,
    spec: IndexedSpectrum,
    quad_points: int,
    pqrs_at: PqrsAt = "mu0",
    notes: list[str] | None = None,
) -> TraceReport:
    """Assemble the report for an already labelled spectrum."""
    n_max = spec.n_max
    if n_max < MIN_TRACE_N:
        msg = f"trace report needs n_max >= {MIN_TRACE_N}, got {n_max}"
        raise ValueError(msg)

    c_const, d_const = trace_constants(p, quad_points)
    rhs = -(2.0 / math.pi) * c_const - c_const**2 + d_const**2
    terms = [trace_term(p, spec, k, quad_points, pqrs_at) for k in range(1, n_max + 1)]

    # every S_N is a fresh fsum over its own prefix, so each one is correctly rounded on its own
    sums = {n: _partial_sum(spec, terms[:n]) for n in range(2, n_max + 1)}
    residuals = {n: s - rhs for n, s in sums.items()}
    decay: list[float | None] = [
        abs(residuals[2 * n]) / abs(residuals[n]) if residuals[n] != 0.0 else None for n in range(2, n_max // 2 + 1)
    ]

    warnings = [*(notes or []), *p.warnings, *spec.warnings, *_shape_warnings(residuals, n_max)]
    log.info("trace_report_built", n_max=n_max, rhs=rhs, last_residual=residuals[n_max], warnings=len(warnings))
    return TraceReport(
        n_max=n_max,
        rhs=rhs,
        c_const=c_const,
        d_const=d_const,
        partial_sums=list(sums.values()),
        residuals=list(residuals.values()),
        decay_ratios=decay,
        pqrs_at=pqrs_at,
        warnings=warnings,
    )


def trace_report(
    p: Problem,
    n_max: int,
    g: GridSpec,
    *,
    quad_points: int = 2048,
    scan_step: float = DEFAULT_SCAN_STEP,
    root_tol: float = DEFAULT_ROOT_TOL,
    method: Method = "solver",
    pqrs_at: PqrsAt = "mu0",
    threads: int = 1,
) -> TraceReport:
    """Scan, label and sum: the whole trace pipeline.

    Args:
        p: The problem.
        n_max: Truncation N, at least ``MIN_TRACE_N``.
        g: Solver grid.
        quad_points: Quadrature nodes per half for P and Q.
        scan_step: Root-scan spacing.
        root_tol: Final bracket width.
        method: ``"solver"`` or ``"closed_form"``.
        pqrs_at: Where P and Q are evaluated in each term.
        threads: Worker threads for the root scan.

    Returns:
        Partial sums, residuals, decay ratios and every warning collected on the way.

    Raises:
        ValueError: If ``n_max`` is below ``MIN_TRACE_N``.
        IndexingError: If the spectrum cannot be labelled.
    """
    if n_max < MIN_TRACE_N:
        msg = f"trace report needs n_max >= {MIN_TRACE_N}, got {n_max}"
        raise ValueError(msg)
    scan = scan_roots_detailed(p, n_max, scan_step, g, method=method, root_tol=root_tol, threads=threads)
    spec = index_spectrum(scan.roots, n_max)
    notes = [f"suspected double root near mu={s.mu:.12g}" for s in scan.suspects]
    return trace_report_from_spectrum(p, spec, quad_points, pqrs_at, notes)
