"""Two-term eigenvalue asymptotics and residual-order diagnostics."""

from __future__ import annotations

import math

from retarded_spectrum.errors import LabelError
from retarded_spectrum.models import AsymptoticRow, PqrsAt
from retarded_spectrum.problem import Problem
from retarded_spectrum.spectral.pqrs import compute_pqrs
from retarded_spectrum.spectral.spectrum import IndexedSpectrum, Label, unperturbed_zero

MIN_REPORT_N = 10


def _as_label(n: Label | int) -> Label:
    return n if isinstance(n, Label) else Label(-1 if n < 0 else 1, abs(n))


def pqrs_argument(label: Label, pqrs_at: PqrsAt) -> float:
    """Where P and Q are evaluated for ``label``: at mu_n^0, or at the literal signed index."""
    if pqrs_at == "mu0":
        return unperturbed_zero(label)
    return float(label.sign * label.n)


def predicted_mu(p: Problem, n: Label | int, quad_points: int, pqrs_at: PqrsAt = "mu0") -> float:
    """mu_n^0 - (-a1p/a2p + P + Q) / (mu_n^0 pi).

    Args:
        p: The problem.
        n: Label, or a signed int read as one.
        quad_points: Quadrature nodes per half for P and Q.
        pqrs_at: Evaluate P and Q at mu_n^0 or at the signed index.

    Returns:
        The two-term prediction for the eigenvalue with that label.

    Raises:
        LabelError: For labels whose unperturbed zero is 0 (|n| < 2).
    """
    label = _as_label(n)
    mu0 = unperturbed_zero(label)
    if mu0 == 0.0:
        msg = f"label {label} has mu0 = 0; the asymptotic correction divides by mu0"
        raise LabelError(msg)
    values = compute_pqrs(p, pqrs_argument(label, pqrs_at), quad_points)
    bracket = -p.a1p / p.a2p + values.p_val + values.q_val
    return mu0 - bracket / (mu0 * math.pi)


def asymptotic_report(
    p: Problem, spec: IndexedSpectrum, quad_points: int, pqrs_at: PqrsAt = "mu0"
) -> list[AsymptoticRow]:
    """Rows for -n_max..-2 then +2..+n_max."""
    if spec.n_max < MIN_REPORT_N:
        msg = f"asymptotic report needs n_max >= {MIN_REPORT_N}, got {spec.n_max}"
        raise ValueError(msg)
    labels = [Label(-1, n) for n in range(spec.n_max, 1, -1)] + [Label(1, n) for n in range(2, spec.n_max + 1)]
    rows: list[AsymptoticRow] = []
    for label in labels:
        computed = spec.mu(label)
        predicted = predicted_mu(p, label, quad_points, pqrs_at)
        residual = computed - predicted
        rows.append(
            AsymptoticRow(
                n=label.sign * label.n,
                mu_computed=computed,
                mu_predicted=predicted,
                residual=residual,
                scaled_residual=residual * label.n**2,
            )
        )
    return rows


def _band_max(rows: list[AsymptoticRow], low: int, high: int) -> float:
    band = [abs(r.scaled_residual) for r in rows if low <= abs(r.n) <= high]
    if not band:
        msg = f"no rows with {low} <= |n| <= {high}"
        raise ValueError(msg)
    return max(band)


def scaled_residual_growth(rows: list[AsymptoticRow], split: int = 20, low: int = 10, high: int = 40) -> float:
    """max |scaled residual| over split..high divided by the max over low..split."""
    return _band_max(rows, split, high) / _band_max(rows, low, split)


def sign_asymmetry(rows: list[AsymptoticRow]) -> float:
    """max over n of |residual(n) - residual(-n)| * n^2."""
    by_n = {r.n: r.residual for r in rows}
    gaps = [abs(by_n[n] - by_n[-n]) * n**2 for n in by_n if n > 0 and -n in by_n]
    return max(gaps, default=0.0)
