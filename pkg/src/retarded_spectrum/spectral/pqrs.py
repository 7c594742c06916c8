"""The oscillatory integrals P, Q, R, S by composite Gauss-Legendre quadrature split at pi/2.

    P = 1/2 int_0^pi q cos(mu delay)            R = 1/2 int_0^pi q sin(mu delay)
    Q = 1/2 int_0^pi q cos(mu (2 s - delay))    S = 1/2 int_0^pi q sin(mu (2 s - delay))

Gauss nodes are interior to every panel, so the integrands are never sampled at pi/2 where q and
the delay may jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from retarded_spectrum.expr import FloatArray
from retarded_spectrum.models import PQRSValues
from retarded_spectrum.problem import HALF_PI, Problem

PANEL_ORDER = 16
MIN_QUAD_POINTS = 32


@dataclass(frozen=True, eq=False)
class _Rule:
    theta: FloatArray
    weighted_q: FloatArray
    delay: FloatArray


def nodes_per_half(mu: float, quad_points: int) -> int:
    """max(quad_points, 16 * ceil(1 + |mu|)), rounded up to whole panels."""
    # about one 16-point panel per oscillation of the integrand, which has frequency up to 2 |mu|
    wanted = max(quad_points, PANEL_ORDER * math.ceil(1.0 + abs(mu)))
    return PANEL_ORDER * math.ceil(wanted / PANEL_ORDER)


def _composite(a: float, b: float, panels: int) -> tuple[FloatArray, FloatArray]:
    # map the reference rule on [-1, 1] onto every panel at once: rows are panels, columns nodes
    ref_x, ref_w = leggauss(PANEL_ORDER)
    edges = np.linspace(a, b, panels + 1)
    half_width = 0.5 * (edges[1:] - edges[:-1])
    centre = 0.5 * (edges[1:] + edges[:-1])
    x = (centre[:, None] + half_width[:, None] * ref_x[None, :]).ravel()
    w = (half_width[:, None] * ref_w[None, :]).ravel()
    return x, w


# The rule depends on mu only through the panel count, so q and the delay are evaluated once per
# (problem, panel count) and a sweep over mu reuses them. The 1/2 factor is folded into the weights.
@lru_cache(maxsize=256)
def _rule(p: Problem, per_half: int) -> _Rule:
    panels = per_half // PANEL_ORDER
    x_left, w_left = _composite(0.0, HALF_PI, panels)
    x_right, w_right = _composite(HALF_PI, math.pi, panels)
    q = np.concatenate([p.q.eval_left(x_left), p.q.eval_right(x_right)])
    delay = np.concatenate([p.delay.eval_left(x_left), p.delay.eval_right(x_right)])
    theta = np.concatenate([x_left, x_right])
    return _Rule(theta=theta, weighted_q=0.5 * q * np.concatenate([w_left, w_right]), delay=delay)


def _check_points(quad_points: int) -> None:
    if quad_points < MIN_QUAD_POINTS:
        msg = f"quad_points must be at least {MIN_QUAD_POINTS}, got {quad_points}"
        raise ValueError(msg)


def compute_pqrs(p: Problem, mu: float, quad_points: int) -> PQRSValues:
    """Evaluate P, Q, R, S at ``mu``.

    Args:
        p: The problem.
        mu: Spectral parameter.
        quad_points: Minimum quadrature nodes per half; raised for large |mu|.

    Returns:
        The four integrals.

    Raises:
        ValueError: If ``quad_points`` is below the minimum.
        EvalDomainError: If q or the delay cannot be evaluated at a quadrature node.
    """
    _check_points(quad_points)
    rule = _rule(p, nodes_per_half(mu, quad_points))
    own = mu * rule.delay
    reflected = mu * (2.0 * rule.theta - rule.delay)
    return PQRSValues(
        mu=mu,
        p_val=float(np.sum(rule.weighted_q * np.cos(own))),
        q_val=float(np.sum(rule.weighted_q * np.cos(reflected))),
        r_val=float(np.sum(rule.weighted_q * np.sin(own))),
        s_val=float(np.sum(rule.weighted_q * np.sin(reflected))),
    )


def pqrs_sweep(p: Problem, mus: FloatArray, quad_points: int) -> list[PQRSValues]:
    return [compute_pqrs(p, float(m), quad_points) for m in np.asarray(mus, dtype=np.float64).ravel()]


def half_abs_integral(p: Problem, quad_points: int) -> float:
    """1/2 int_0^pi |q|, the common bound on |P|, |Q|, |R| and |S|."""
    _check_points(quad_points)
    rule = _rule(p, nodes_per_half(0.0, quad_points))
    return float(np.sum(np.abs(rule.weighted_q)))
