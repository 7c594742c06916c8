"""Pydantic v2 models for report rows, diagnostics and the trace report."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

PqrsAt = Literal["mu0", "n"]


class _Record(BaseModel):
    model_config = ConfigDict(frozen=True)


# --- problem diagnostics ---


class SampleRow(_Record):
    """One sampled point of the coefficient functions."""

    piece: Literal["left", "right"]
    x: float
    q: float
    delay: float
    x_minus_delay: float


class DelayMargins(_Record):
    """Smallest sampled slack of each delay constraint (non-negative means satisfied)."""

    min_delay_left: float
    min_delay_right: float
    left_history_margin: float = Field(description="min over the left piece of x - delay(x)")
    right_history_margin: float = Field(description="min over the right piece of x - delay(x) - pi/2")


# --- characteristic function ---


class CharacteristicSample(_Record):
    """F and its unperturbed leading term at one spectral parameter."""

    mu: float
    f: float
    f0: float


# --- quadrature ---


class PQRSValues(_Record):
    """The four oscillatory integrals at one spectral parameter."""

    mu: float
    p_val: float
    q_val: float
    r_val: float
    s_val: float


# --- spectrum ---


class SuspectedDoubleRoot(_Record):
    """A near-tangency of F that the local rescan could not split into a sign change."""

    mu: float
    f_value: float
    local_scale: float


class SpectrumRow(_Record):
    """One labelled eigenvalue as written by the ``eigen`` command."""

    label: str
    mu: float
    mu0: float
    eps: float
    f_residual: float


# --- asymptotics ---


class AsymptoticRow(_Record):
    """Computed eigenvalue against its two-term asymptotic prediction."""

    n: int
    mu_computed: float
    mu_predicted: float
    residual: float
    scaled_residual: float


# --- trace ---


class TraceReport(_Record):
    """Truncated trace sums against the closed-form right-hand side."""

    n_max: int
    rhs: float
    c_const: float
    d_const: float
    partial_sums: list[float]
    residuals: list[float]
    decay_ratios: list[float | None]
    pqrs_at: PqrsAt
    warnings: list[str] = Field(default_factory=list)
