"""Shared test fixtures for all test modules."""

from __future__ import annotations

import math
from typing import Any

import pytest

from retarded_spectrum.config import ProblemConfig
from retarded_spectrum.problem import Problem, build_problem
from retarded_spectrum.spectral.spectrum import IndexedSpectrum, Label, SpectrumEntry, all_labels, unperturbed_zero

HALF_PI = 0.5 * math.pi

# The shipped problem. Every other test problem is this one with a few keys replaced, so a
# test states only what it changes.
_COSINE_DELAY: dict[str, Any] = {
    "a1": 1.0,
    "a1p": 1.0,
    "a2": 1.0,
    "a2p": 1.0,
    "b": HALF_PI,
    "delta": 1.0,
    "q_left": "cos(x)",
    "q_right": "cos(x)",
    "delay_left": "x/2",
    "delay_right": "(x - pi/2)/2",
}

# q = 0 with zero delay: F has a closed form to test against. This boundary data has a complex
# pair near the origin, so it cannot be fully labelled.
ZERO_Q: dict[str, Any] = {
    "a1": 1.0,
    "a1p": 0.0,
    "a2": 0.0,
    "a2p": 1.0,
    "q_left": "0",
    "q_right": "0",
    "delay_left": "0",
    "delay_right": "0",
}

# q = 0 again, with boundary data whose spectrum is entirely real
TRACE_CHECK: dict[str, Any] = {**ZERO_Q, "a1": -0.1, "a1p": 1.0}


# Factories go through ProblemConfig and build_problem rather than constructing Problem
# directly, so every test problem passes the same validation as a file loaded from disk.
def make_config(numerics: dict[str, Any] | None = None, **overrides: Any) -> ProblemConfig:
    """Factory: the cosine-delay problem with any problem keys replaced."""
    return ProblemConfig.model_validate({"problem": {**_COSINE_DELAY, **overrides}, "numerics": numerics or {}})


def make_problem(**overrides: Any) -> Problem:
    return build_problem(make_config(**overrides))


def problem_yaml(**overrides: Any) -> str:
    """Render a problem file for CLI tests."""
    fields = {**_COSINE_DELAY, "b": "pi/2", **overrides}
    lines = ["problem:"] + [f"  {k}: {v!r}" if isinstance(v, str) else f"  {k}: {v}" for k, v in fields.items()]
    return "\n".join(lines) + "\n"


@pytest.fixture
def shipped_problem() -> Problem:
    """q = cos x with delays x/2 and (x - pi/2)/2; every boundary coefficient 1."""
    return make_problem()


@pytest.fixture
def zero_q_problem() -> Problem:
    """q = 0 with a1 = 1, a1p = 0, a2 = 0, a2p = 1: F(mu) = mu (cos(mu pi) - mu^2 sin(mu pi))."""
    return make_problem(**ZERO_Q)


@pytest.fixture
def trace_problem() -> Problem:
    """q = 0 with a1p/a2p = 1 and a2 = 0; real spectrum, trace right-hand side 2/pi - 1."""
    return make_problem(**TRACE_CHECK)


# Synthetic spectra let trace and asymptotic sums be checked by hand without a root scan.
def exact_spectrum(n_max: int, overrides: dict[Label, float] | None = None) -> IndexedSpectrum:
    """A labelled spectrum sitting exactly on the unperturbed zeros, with optional replacements."""
    mus = {label: unperturbed_zero(label) for label in all_labels(n_max)}
    mus.update(overrides or {})
    entries = {
        label: SpectrumEntry(mu=mu, mu0=unperturbed_zero(label), eps=mu - unperturbed_zero(label))
        for label, mu in mus.items()
    }
    return IndexedSpectrum(n_max=n_max, entries=entries)
