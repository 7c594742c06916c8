"""Characteristic function F(mu) = cos(b) omega(pi) + mu sin(b) omega'(pi) and its closed forms."""

from __future__ import annotations

import math
from collections.abc import Callable
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

from retarded_spectrum.expr import FloatArray
from retarded_spectrum.models import CharacteristicSample
from retarded_spectrum.parallel import map_chunks
from retarded_spectrum.problem import Problem
from retarded_spectrum.spectral.dde import GridSpec, solve_batch, solve_omega
from retarded_spectrum.spectral.picard import picard_solve

Method = Literal["solver", "closed_form"]
CharFn = Callable[[FloatArray], FloatArray]


def _sin_cos_pi(mu: FloatArray) -> tuple[FloatArray, FloatArray]:
    """sin(pi mu) and cos(pi mu); the sine is exactly zero at integer mu."""
    # reduce to |frac| <= 1/2 first: np.sin(pi * k) is about 1e-16 * k, not zero, and the
    # root scan relies on exact zeros at the integers
    whole = np.round(mu)
    frac = mu - whole
    sign = np.where(np.mod(whole, 2.0) == 0.0, 1.0, -1.0)
    return sign * np.sin(math.pi * frac), sign * np.cos(math.pi * frac)


def _as_output(values: FloatArray, scalar: bool) -> float | FloatArray:
    return float(values) if scalar else values


def _combine(p: Problem, mu: FloatArray, y_end: FloatArray, yp_end: FloatArray) -> FloatArray:
    return math.cos(p.b) * y_end + mu * math.sin(p.b) * yp_end


def char_fn(p: Problem, mu: float, g: GridSpec) -> float:
    """F(mu) from the method-of-steps endpoint values."""
    y_end, yp_end = solve_omega(p, mu, g).endpoint()
    return math.cos(p.b) * y_end + mu * math.sin(p.b) * yp_end


def char_fn_many(p: Problem, mus: ArrayLike, g: GridSpec, threads: int = 1) -> FloatArray:
    """F on an array of mu; each chunk of mu is marched as one batch."""

    def chunk(values: FloatArray) -> FloatArray:
        y_end, yp_end = solve_batch(p, values, g).endpoints()
        return _combine(p, values, y_end, yp_end)

    return map_chunks(chunk, np.asarray(mus, dtype=np.float64), threads)


def char_fn_picard(p: Problem, mu: float, g: GridSpec) -> float:
    """F(mu) from the integral-equation oracle (mu != 0)."""
    y_end, yp_end = picard_solve(p, mu, g).endpoint()
    return math.cos(p.b) * y_end + mu * math.sin(p.b) * yp_end


def char_fn_unperturbed(p: Problem, mu: ArrayLike) -> float | FloatArray:
    """Leading large-mu term F0(mu) = -(mu^3 a2p / delta) sin(b) sin(pi mu)."""
    m = np.asarray(mu, dtype=np.float64)
    sin_pi, _ = _sin_cos_pi(m)
    return _as_output(-(m**3) * (p.a2p / p.delta) * math.sin(p.b) * sin_pi, m.ndim == 0)


def char_fn_zero_q(p: Problem, mu: ArrayLike) -> float | FloatArray:
    """Exact F(mu) when q vanishes identically, continued to mu = 0 by its limit."""
    m = np.asarray(mu, dtype=np.float64)
    sin_pi, cos_pi = _sin_cos_pi(m)
    amp = m * p.a2p + p.a2
    slope = m * p.a1p + p.a1
    # np.sinc(m) = sin(pi m) / (pi m), finite at m = 0 where sin(pi mu) / mu -> pi
    sin_over_mu = math.pi * np.sinc(m)
    y_end = (amp * cos_pi + slope * sin_over_mu) / p.delta
    yp_end = (slope * cos_pi - m * amp * sin_pi) / p.delta
    return _as_output(math.cos(p.b) * y_end + m * math.sin(p.b) * yp_end, m.ndim == 0)


def characteristic_function(p: Problem, g: GridSpec, method: Method = "solver", threads: int = 1) -> CharFn:
    """Vectorised F for the root scan.

    Args:
        p: The problem.
        g: Solver grid; unused by ``closed_form``.
        method: ``"solver"`` or ``"closed_form"``. The closed form is only valid when both q
            pieces are the literal 0.
        threads: Worker threads for the solver path.

    Returns:
        A function from an array of mu to the array of F values.

    Raises:
        ValueError: If ``closed_form`` is requested for a nonzero q.
    """
    if method == "closed_form":
        if not p.q.is_zero:
            msg = "the closed-form characteristic function requires q identically zero"
            raise ValueError(msg)
        return lambda mus: np.asarray(char_fn_zero_q(p, mus), dtype=np.float64)
    # the solver path batches each chunk of mu through one march
    return lambda mus: char_fn_many(p, mus, g, threads)


def characteristic_table(p: Problem, mus: ArrayLike, g: GridSpec, threads: int = 1) -> list[CharacteristicSample]:
    """(mu, F, F0) rows for a sweep of mu."""
    grid = np.asarray(mus, dtype=np.float64).ravel()
    f = char_fn_many(p, grid, g, threads)
    f0 = np.asarray(char_fn_unperturbed(p, grid), dtype=np.float64)
    return [
        CharacteristicSample(mu=float(m), f=float(fv), f0=float(f0v)) for m, fv, f0v in zip(grid, f, f0, strict=True)
    ]
