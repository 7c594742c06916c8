"""Method-of-steps integration of y'' = -mu^2 y - q(x) y(x - delay(x)) on both half-intervals.

Each half is marched with classical RK4 on a uniform grid. The retarded value is read from the
already computed history by cubic Hermite interpolation on (y, y'). Interpolation "taps" (interval
index and the four Hermite weights) depend only on the problem and the grid, so they are computed
once per (problem, grid) and shared by every mu. A batch of mu values is marched together: every
solution array has one column per mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import structlog
from scipy.interpolate import CubicHermiteSpline

from retarded_spectrum.errors import NonFiniteStateError
from retarded_spectrum.expr import FloatArray
from retarded_spectrum.problem import HALF_PI, Problem

log = structlog.get_logger()

MAX_SWEEPS = 5


@dataclass(frozen=True)
class GridSpec:
    """Discretisation controls shared by the method-of-steps solver and the integral-equation oracle."""

    steps_per_half: int = 4096
    picard_max_iter: int = 50
    picard_tol: float = 1e-12

    def __post_init__(self) -> None:
        if self.steps_per_half < 16:
            msg = f"steps_per_half must be at least 16, got {self.steps_per_half}"
            raise ValueError(msg)
        if not self.picard_tol > 0.0:
            msg = f"picard_tol must be positive, got {self.picard_tol}"
            raise ValueError(msg)
        if self.picard_max_iter < 1:
            msg = f"picard_max_iter must be at least 1, got {self.picard_max_iter}"
            raise ValueError(msg)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Dense record of omega and omega' on [0, pi/2] and [pi/2, pi] for one mu.

    Both one-sided states at the interface are kept: ``y_left[-1]`` is the value at pi/2 from the
    left and ``y_right[0]`` the value after the jump.
    """

    mu: float
    left_nodes: FloatArray
    right_nodes: FloatArray
    y_left: FloatArray
    yp_left: FloatArray
    ypp_left: FloatArray
    y_right: FloatArray
    yp_right: FloatArray
    ypp_right: FloatArray

    def endpoint(self) -> tuple[float, float]:
        """(omega(pi), omega'(pi))."""
        return float(self.y_right[-1]), float(self.yp_right[-1])

    def evaluate(self, x: FloatArray | float) -> tuple[FloatArray, FloatArray]:
        """Hermite dense output; the interface abscissa itself takes the post-jump branch."""
        xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
        y = np.empty_like(xs)
        yp = np.empty_like(xs)
        left = xs < HALF_PI
        for mask, nodes, val, der, acc in (
            (left, self.left_nodes, self.y_left, self.yp_left, self.ypp_left),
            (~left, self.right_nodes, self.y_right, self.yp_right, self.ypp_right),
        ):
            if np.any(mask):
                y[mask] = CubicHermiteSpline(nodes, val, der)(xs[mask])
                yp[mask] = CubicHermiteSpline(nodes, der, acc)(xs[mask])
        return y, yp

    def sup_distance(self, other: Trajectory) -> float:
        """Relative sup-norm distance over the common nodes of both grids.

        Each of omega and omega' contributes max|difference| / max(1, max|value|); the larger wins.
        """
        fine, coarse = (self, other) if self.y_left.size >= other.y_left.size else (other, self)
        ratio, rem = divmod(fine.y_left.size - 1, coarse.y_left.size - 1)
        if rem:
            msg = "trajectory grids are not nested"
            raise ValueError(msg)
        worst = 0.0
        for name in ("y", "yp"):
            mine = np.concatenate([getattr(coarse, f"{name}_left"), getattr(coarse, f"{name}_right")])
            theirs = np.concatenate([getattr(fine, f"{name}_left")[::ratio], getattr(fine, f"{name}_right")[::ratio]])
            scale = max(1.0, float(np.max(np.abs(theirs))))
            worst = max(worst, float(np.max(np.abs(mine - theirs))) / scale)
        return worst

    def rows(self) -> list[tuple[float, float, float]]:
        """(x, y, y') for every node, left half first."""
        out: list[tuple[float, float, float]] = []
        halves = ((self.left_nodes, self.y_left, self.yp_left), (self.right_nodes, self.y_right, self.yp_right))
        for nodes, y, yp in halves:
            out.extend((float(a), float(b), float(c)) for a, b, c in zip(nodes, y, yp, strict=True))
        return out


@dataclass(frozen=True, eq=False)
class _HalfTaps:
    nodes: FloatArray
    h: float
    q_node: list[float]
    q_mid: list[float]
    node_j: list[int]
    node_w: list[tuple[float, float, float, float]]
    mid_j: list[int]
    mid_w: list[tuple[float, float, float, float]]
    implicit: list[bool]
    forced: bool


# A Hermite tap reads a retarded value from the history already on the grid. For an abscissa s
# in cell j with local coordinate t = (s - x_j) / h, the value is
#   h00(t) y_j + h h10(t) y'_j + h01(t) y_{j+1} + h h11(t) y'_{j+1}
# so each tap is one cell index plus four weights, independent of mu.
def _hermite_weights(t: FloatArray, h: float) -> list[tuple[float, float, float, float]]:
    t2 = t * t
    t3 = t2 * t
    h00 = 2 * t3 - 3 * t2 + 1
    h10 = t3 - 2 * t2 + t
    h01 = -2 * t3 + 3 * t2
    h11 = t3 - t2
    return [(float(a), float(b), float(c), float(d)) for a, b, c, d in zip(h00, h * h10, h01, h * h11, strict=True)]


# The last cell is closed on the right: s = x0 + pi/2 lands in cell n - 1 with t = 1.
def _locate(s: FloatArray, x0: float, h: float, n: int) -> tuple[FloatArray, FloatArray]:
    u = (s - x0) / h
    j = np.clip(np.floor(u), 0, n - 1)
    return j.astype(np.int64), u - j


# Taps depend on (problem, side, grid) only. Problem is frozen and hashable, so a root scan
# that marches hundreds of mu chunks builds them once per half.
@lru_cache(maxsize=64)
def _half_taps(p: Problem, side: str, n: int) -> _HalfTaps:
    """Precompute q and the retarded-value taps at every node and midpoint of one half.

    Args:
        p: The problem; only q and the delay are read.
        side: ``"left"`` for [0, pi/2] or ``"right"`` for [pi/2, pi].
        n: Steps on the half.

    Returns:
        Tap table for ``_march``.
    """
    x0 = 0.0 if side == "left" else HALF_PI
    h = HALF_PI / n
    nodes = x0 + h * np.arange(n + 1)
    # pin the last node so the interface and pi are hit exactly, not up to rounding in h * n
    nodes[-1] = x0 + HALF_PI
    mids = nodes[:-1] + 0.5 * h

    evaluate = p.q.eval_left if side == "left" else p.q.eval_right
    delay = p.delay.eval_left if side == "left" else p.delay.eval_right
    q_node = evaluate(nodes)
    q_mid = evaluate(mids)

    # retarded abscissae, clipped into the half's own history
    s_node = np.clip(nodes - delay(nodes), x0, nodes)
    s_mid = np.clip(mids - delay(mids), x0, mids)

    node_j, node_t = _locate(s_node, x0, h, n)
    # With zero delay at node i, _locate puts s = x_i at the start of cell i, which reads y_{i+1}
    # before it exists. Shift those taps back one cell so t = 1 on cell i - 1 gives the same point
    # from known data. Node 0 has no earlier cell and needs no history anyway.
    index = np.arange(n + 1)
    at_node = (node_j >= index) & (index >= 1)
    node_j = np.where(at_node, index - 1, node_j)
    node_t = np.where(at_node, (s_node - x0) / h - node_j, node_t)
    mid_j, mid_t = _locate(s_mid, x0, h, n)

    # Step k is implicit when a stage reads inside the cell being computed, [x_k, x_{k+1}]. Only
    # then does the RK4 step need y_{k+1} and y'_{k+1} before it has produced them.
    steps = np.arange(n)
    implicit = ((mid_j == steps) & (mid_t > 0.0)) | ((node_j[1:] == steps) & (node_t[1:] > 0.0))
    # q identically zero on this half: the retarded term drops out and every step is explicit
    forced = bool(np.any(q_node != 0.0) or np.any(q_mid != 0.0))
    return _HalfTaps(
        nodes=nodes,
        h=h,
        q_node=q_node.tolist(),
        q_mid=q_mid.tolist(),
        node_j=node_j.tolist(),
        node_w=_hermite_weights(node_t, h),
        mid_j=mid_j.tolist(),
        mid_w=_hermite_weights(mid_t, h),
        implicit=(implicit & forced).tolist(),
        forced=forced,
    )


@dataclass(frozen=True)
class _HalfSolution:
    y: FloatArray
    v: FloatArray
    a: FloatArray
    exhausted_steps: int


def _march(taps: _HalfTaps, mu2: FloatArray, y0: FloatArray, v0: FloatArray, tol: float) -> _HalfSolution:
    """RK4 over one half for a batch of mu (columns).

    The first-order system is y' = v, v' = -mu^2 y - q(x) y(x - delay(x)).

    Args:
        taps: Tap table from ``_half_taps``.
        mu2: mu squared, one entry per column.
        y0: Initial y per column.
        v0: Initial y' per column.
        tol: Relative change at which the within-step iteration stops.

    Returns:
        y, y' and y'' at every node, plus the number of steps whose iteration ran out of sweeps.
    """
    n = len(taps.node_j) - 1
    h = taps.h
    half = 0.5 * h
    sixth = h / 6.0
    y = np.zeros((n + 1, mu2.size))
    v = np.zeros((n + 1, mu2.size))
    a = np.zeros((n + 1, mu2.size))
    y[0] = y0
    v[0] = v0
    zero = np.zeros(mu2.size)

    def retarded(j: int, w: tuple[float, float, float, float]) -> FloatArray:
        return w[0] * y[j] + w[1] * v[j] + w[2] * y[j + 1] + w[3] * v[j + 1]

    exhausted = 0
    forced = taps.forced
    for k in range(n):
        yk = y[k]
        vk = v[k]
        qk = taps.q_node[k]
        qm = taps.q_mid[k]
        q1 = taps.q_node[k + 1]
        d1 = retarded(taps.node_j[k], taps.node_w[k]) if forced else zero
        k1v = -mu2 * yk - qk * d1
        a[k] = k1v

        # An implicit step reads history from its own cell. Seed y_{k+1}, v_{k+1} with a
        # second-order Taylor predictor, then repeat the RK4 stages, each sweep reading the
        # Hermite interpolant of the latest end-of-step values. A small lag makes this a
        # contraction with factor about |q| h^2, so a few sweeps reach rounding level.
        sweeps = MAX_SWEEPS if taps.implicit[k] else 1
        if sweeps > 1:
            y[k + 1] = yk + h * vk + (0.5 * h * h) * k1v
            v[k + 1] = vk + h * k1v
        for sweep in range(sweeps):
            dm = retarded(taps.mid_j[k], taps.mid_w[k]) if forced else zero
            d4 = retarded(taps.node_j[k + 1], taps.node_w[k + 1]) if forced else zero
            y2 = yk + half * vk
            v2 = vk + half * k1v
            k2v = -mu2 * y2 - qm * dm
            y3 = yk + half * v2
            v3 = vk + half * k2v
            k3v = -mu2 * y3 - qm * dm
            y4 = yk + h * v3
            v4 = vk + h * k3v
            k4v = -mu2 * y4 - q1 * d4
            y_new = yk + sixth * (vk + 2.0 * v2 + 2.0 * v3 + v4)
            v_new = vk + sixth * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            # the stop test is over the whole batch: one column that is still moving keeps every column sweeping
            if sweeps > 1:
                change = max(float(np.max(np.abs(y_new - y[k + 1]))), float(np.max(np.abs(v_new - v[k + 1]))))
                scale = max(1.0, float(np.max(np.abs(y_new))), float(np.max(np.abs(v_new))))
                y[k + 1] = y_new
                v[k + 1] = v_new
                if change <= tol * scale:
                    break
                if sweep == sweeps - 1:
                    exhausted += 1
            else:
                y[k + 1] = y_new
                v[k + 1] = v_new

    # y'' at the last node feeds the Hermite dense output of y'
    dn = retarded(taps.node_j[n], taps.node_w[n]) if forced else zero
    a[n] = -mu2 * y[n] - taps.q_node[n] * dn
    return _HalfSolution(y=y, v=v, a=a, exhausted_steps=exhausted)


def _check_finite(sol: _HalfSolution, nodes: FloatArray, mus: FloatArray) -> None:
    bad = ~(np.isfinite(sol.y) & np.isfinite(sol.v))
    if np.any(bad):
        row, col = np.unravel_index(int(np.argmax(bad)), bad.shape)
        raise NonFiniteStateError(abscissa=float(nodes[row]), mu=float(mus[col]))


@dataclass(frozen=True)
class BatchSolution:
    """Solutions for a batch of mu, one column per mu."""

    mus: FloatArray
    left_nodes: FloatArray
    right_nodes: FloatArray
    left: _HalfSolution
    right: _HalfSolution

    def endpoints(self) -> tuple[FloatArray, FloatArray]:
        return self.right.y[-1].copy(), self.right.v[-1].copy()

    def trajectory(self, column: int) -> Trajectory:
        return Trajectory(
            mu=float(self.mus[column]),
            left_nodes=self.left_nodes,
            right_nodes=self.right_nodes,
            y_left=self.left.y[:, column].copy(),
            yp_left=self.left.v[:, column].copy(),
            ypp_left=self.left.a[:, column].copy(),
            y_right=self.right.y[:, column].copy(),
            yp_right=self.right.v[:, column].copy(),
            ypp_right=self.right.a[:, column].copy(),
        )


def solve_batch(p: Problem, mus: FloatArray, g: GridSpec) -> BatchSolution:
    """March every mu in ``mus`` across both halves at once.

    Args:
        p: The problem.
        mus: Spectral parameters; any shape, flattened.
        g: Grid controls; ``picard_tol`` also bounds the within-step iteration.

    Returns:
        Both half solutions with one column per mu.

    Raises:
        NonFiniteStateError: Overflow or NaN; reports the first affected abscissa.
    """
    mus = np.asarray(mus, dtype=np.float64).ravel()
    mu2 = mus * mus
    n = g.steps_per_half
    left_taps = _half_taps(p, "left", n)
    right_taps = _half_taps(p, "right", n)
    y0, v0 = p.initial_values(mus)

    # overflow is reported once through _check_finite with its location, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        left = _march(left_taps, mu2, y0, v0, g.picard_tol)
        _check_finite(left, left_taps.nodes, mus)
        # the right half starts from the left limits divided by delta, and its history starts at pi/2
        right = _march(right_taps, mu2, left.y[-1] / p.delta, left.v[-1] / p.delta, g.picard_tol)
        _check_finite(right, right_taps.nodes, mus)

    exhausted = left.exhausted_steps + right.exhausted_steps
    if exhausted:
        log.debug("within_step_iteration_exhausted", steps=exhausted, sweeps=MAX_SWEEPS, batch=int(mus.size))
    return BatchSolution(mus=mus, left_nodes=left_taps.nodes, right_nodes=right_taps.nodes, left=left, right=right)


def solve_omega(p: Problem, mu: float, g: GridSpec) -> Trajectory:
    """Integrate the retarded equation for one mu (mu = 0 allowed).

    Args:
        p: The problem.
        mu: Spectral parameter.
        g: Grid controls.

    Returns:
        The dense trajectory on both halves.

    Raises:
        NonFiniteStateError: Overflow or NaN during integration.
    """
    return solve_batch(p, np.array([mu], dtype=np.float64), g).trajectory(0)


def observed_order(p: Problem, mu: float, steps: tuple[int, ...] = (1024, 2048, 4096)) -> list[float]:
    """Convergence orders log2(d(N, 2N) / d(2N, 4N)) over a doubling sequence of grids."""
    if len(steps) < 3:
        msg = "need at least three grids"
        raise ValueError(msg)
    trajectories = [solve_omega(p, mu, GridSpec(steps_per_half=n)) for n in steps]
    diffs = [a.sup_distance(b) for a, b in zip(trajectories, trajectories[1:], strict=False)]
    return [math.log2(d1 / d2) for d1, d2 in zip(diffs, diffs[1:], strict=False)]
