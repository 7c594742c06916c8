"""Fixed-point iteration of the equivalent Volterra integral equations.

On each half the solution satisfies

    omega(x)  = A cos(mu t) + B sin(mu t)/mu - (1/mu) * int_{x0}^{x} q(s) sin(mu (x - s)) omega(s - delay(s)) ds
    omega'(x) = -mu A sin(mu t) + B cos(mu t) - int_{x0}^{x} q(s) cos(mu (x - s)) omega(s - delay(s)) ds

with t = x - x0 and (A, B) the half's initial data. The convolution kernels are split as
sin(mu (x - s)) = sin(mu t) cos(mu (s - x0)) - cos(mu t) sin(mu (s - x0)) so every iterate needs only two
cumulative trapezoid integrals over the history grid. The iteration is independent of the
method-of-steps solver and serves as its oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import structlog
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicHermiteSpline

from retarded_spectrum.errors import MuZeroError, NoConvergenceError
from retarded_spectrum.expr import FloatArray
from retarded_spectrum.problem import HALF_PI, Problem
from retarded_spectrum.spectral.dde import GridSpec, Trajectory

log = structlog.get_logger()


@dataclass(frozen=True)
class _Half:
    y: FloatArray
    yp: FloatArray
    ypp: FloatArray
    iterations: int
    residual: float


def _iterate_half(
    nodes: FloatArray,
    q: FloatArray,
    lagged: FloatArray,
    mu: float,
    start: tuple[float, float],
    g: GridSpec,
) -> _Half:
    """Iterate the integral equations on one half until the sup-norm change drops below tolerance.

    Args:
        nodes: History grid of the half, starting at its left end.
        q: q at the nodes.
        lagged: Retarded abscissae ``x - delay(x)`` at the nodes, inside the half.
        mu: Nonzero spectral parameter.
        start: (omega, omega') at the left end of the half.
        g: Tolerance and iteration cap.

    Returns:
        omega, omega', omega'' on the nodes with the iteration count and last change.

    Raises:
        NoConvergenceError: After ``g.picard_max_iter`` iterations.
    """
    t = nodes - nodes[0]
    cos_t = np.cos(mu * t)
    sin_t = np.sin(mu * t)
    amp, slope = start
    # the q = 0 solution is the first iterate
    free_y = amp * cos_t + slope * sin_t / mu
    free_yp = -mu * amp * sin_t + slope * cos_t

    y, yp = free_y, free_yp
    residual = float("inf")
    for iteration in range(1, g.picard_max_iter + 1):
        history = CubicHermiteSpline(nodes, y, yp)(lagged)
        forcing = q * history
        # With tau = s - x0 the kernels split as
        #   sin(mu (t - tau)) = sin(mu t) cos(mu tau) - cos(mu t) sin(mu tau)
        #   cos(mu (t - tau)) = cos(mu t) cos(mu tau) + sin(mu t) sin(mu tau)
        # Both tau factors live on the same grid as t, so cos_t and sin_t serve twice, and the
        # double integral collapses into two running sums shared by omega and omega'.
        int_cos = cumulative_trapezoid(forcing * cos_t, nodes, initial=0.0)
        int_sin = cumulative_trapezoid(forcing * sin_t, nodes, initial=0.0)
        y_next = free_y - (sin_t * int_cos - cos_t * int_sin) / mu
        yp_next = free_yp - (cos_t * int_cos + sin_t * int_sin)

        # relative sup-norm, the measure Trajectory.sup_distance uses
        scale = max(1.0, float(np.max(np.abs(y_next))), float(np.max(np.abs(yp_next))))
        residual = max(float(np.max(np.abs(y_next - y))), float(np.max(np.abs(yp_next - yp)))) / scale
        y, yp = y_next, yp_next
        if residual < g.picard_tol:
            history = CubicHermiteSpline(nodes, y, yp)(lagged)
            ypp = -mu * mu * y - q * history
            return _Half(y=y, yp=yp, ypp=ypp, iterations=iteration, residual=residual)

    raise NoConvergenceError(iterations=g.picard_max_iter, residual=residual)


def _half_grid(p: Problem, side: str, n: int) -> tuple[FloatArray, FloatArray, FloatArray]:
    x0 = 0.0 if side == "left" else HALF_PI
    nodes = x0 + (HALF_PI / n) * np.arange(n + 1)
    nodes[-1] = x0 + HALF_PI
    if side == "left":
        q, delay = p.q.eval_left(nodes), p.delay.eval_left(nodes)
    else:
        q, delay = p.q.eval_right(nodes), p.delay.eval_right(nodes)
    return nodes, q, np.clip(nodes - delay, x0, nodes)


def picard_solve(p: Problem, mu: float, g: GridSpec) -> Trajectory:
    """Solve by Picard iteration of the integral equations on the ``g`` history grid.

    Args:
        p: The problem.
        mu: Nonzero spectral parameter.
        g: History grid, tolerance and iteration cap.

    Returns:
        A trajectory on the same nodes as ``solve_omega`` for the same grid.

    Raises:
        MuZeroError: If ``mu`` is zero (the integral form divides by mu).
        NoConvergenceError: If the sup-norm change does not drop below ``g.picard_tol``.
    """
    if mu == 0.0:
        msg = "the integral-equation form is undefined at mu = 0"
        raise MuZeroError(msg)

    n = g.steps_per_half
    left_nodes, q_left, lag_left = _half_grid(p, "left", n)
    right_nodes, q_right, lag_right = _half_grid(p, "right", n)

    y0, yp0 = mu * p.a2p + p.a2, mu * p.a1p + p.a1
    left = _iterate_half(left_nodes, q_left, lag_left, mu, (y0, yp0), g)
    right_start = (float(left.y[-1]) / p.delta, float(left.yp[-1]) / p.delta)
    right = _iterate_half(right_nodes, q_right, lag_right, mu, right_start, g)

    log.debug(
        "picard_converged",
        mu=mu,
        left_iterations=left.iterations,
        right_iterations=right.iterations,
        residual=max(left.residual, right.residual),
    )
    return Trajectory(
        mu=mu,
        left_nodes=left_nodes,
        right_nodes=right_nodes,
        y_left=left.y,
        yp_left=left.yp,
        ypp_left=left.ypp,
        y_right=right.y,
        yp_right=right.yp,
        ypp_right=right.ypp,
    )
