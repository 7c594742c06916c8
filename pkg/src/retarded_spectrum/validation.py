"""Input validation helpers for command-line parameters."""

from __future__ import annotations

import math

_VALID_COMMANDS = {"validate", "eigen", "charfn", "pqrs", "asym", "trace", "omega"}

_VALID_PQRS_AT = {"mu0", "n"}

# CLI spelling; "auto" picks the closed form only when q is the literal zero.
_VALID_METHODS = {"auto", "solver", "closed-form"}

MAX_SWEEP_POINTS = 1_000_000


def validate_command(command: str) -> None:
    if command not in _VALID_COMMANDS:
        valid = ", ".join(sorted(_VALID_COMMANDS))
        msg = f"Invalid command: {command!r}. Must be one of: {valid}"
        raise ValueError(msg)


def validate_pqrs_at(pqrs_at: str) -> None:
    """Validate where P and Q are evaluated for the asymptotic and trace reports."""
    if pqrs_at not in _VALID_PQRS_AT:
        valid = ", ".join(sorted(_VALID_PQRS_AT))
        msg = f"Invalid pqrs_at: {pqrs_at!r}. Must be one of: {valid}"
        raise ValueError(msg)


def validate_method(method: str) -> None:
    if method not in _VALID_METHODS:
        valid = ", ".join(sorted(_VALID_METHODS))
        msg = f"Invalid method: {method!r}. Must be one of: {valid}"
        raise ValueError(msg)


def validate_n_max(n_max: int, minimum: int) -> None:
    if n_max < minimum:
        msg = f"Invalid nmax: {n_max}. Must be at least {minimum}"
        raise ValueError(msg)


def validate_sweep(start: float | None, stop: float | None, step: float | None) -> None:
    """Validate a --from/--to/--step mu sweep."""
    if start is None or stop is None or step is None:
        msg = "A mu sweep needs --from, --to and --step"
        raise ValueError(msg)
    if not all(math.isfinite(v) for v in (start, stop, step)):
        msg = f"Sweep bounds must be finite, got from={start!r} to={stop!r} step={step!r}"
        raise ValueError(msg)
    if step <= 0.0:
        msg = f"Invalid step: {step!r}. Must be positive"
        raise ValueError(msg)
    if stop < start:
        msg = f"Invalid sweep: --to ({stop!r}) is below --from ({start!r})"
        raise ValueError(msg)
    if (stop - start) / step + 1 > MAX_SWEEP_POINTS:
        msg = f"Sweep has more than {MAX_SWEEP_POINTS} points"
        raise ValueError(msg)
