"""Boundary-value problem assembly and validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import structlog

from retarded_spectrum.config import ProblemConfig
from retarded_spectrum.errors import EvalDomainError, ProblemValidationError
from retarded_spectrum.expr import Expr, FloatArray, eval_array, eval_expr, is_zero_constant, parse_expr
from retarded_spectrum.models import DelayMargins, SampleRow

log = structlog.get_logger()

HALF_PI = 0.5 * math.pi
VALIDATION_SAMPLES = 1024
_SLACK = 1e-12
_SIN_B_FLOOR = 1e-12
_WARN_IF_ZERO = ("a1", "a1p", "a2")


@dataclass(frozen=True)
class PiecewiseFn:
    """A function given by one expression on [0, pi/2) and another on (pi/2, pi]."""

    left: Expr
    right: Expr
    left_limit_at_mid: float
    right_limit_at_mid: float

    def eval_left(self, x: FloatArray) -> FloatArray:
        return eval_array(self.left, x)

    def eval_right(self, x: FloatArray) -> FloatArray:
        return eval_array(self.right, x)

    @property
    def is_zero(self) -> bool:
        return is_zero_constant(self.left) and is_zero_constant(self.right)


@dataclass(frozen=True)
class Problem:
    """The retarded boundary-value problem on [0, pi] with an interface at pi/2."""

    a1: float
    a1p: float
    a2: float
    a2p: float
    b: float
    delta: float
    q: PiecewiseFn
    delay: PiecewiseFn
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def initial_values(self, mu: FloatArray) -> tuple[FloatArray, FloatArray]:
        """Left-end data: omega(0) = mu*a2p + a2, omega'(0) = mu*a1p + a1."""
        return mu * self.a2p + self.a2, mu * self.a1p + self.a1


# Each piece is evaluated at pi/2 to record its one-sided limit. Both halves of the march use
# pi/2 as an end node, so a piece that blows up there (say 1/(x - pi/2)) is rejected up front.
def _piecewise(name: str, left_src: str, right_src: str) -> PiecewiseFn:
    left = parse_expr(left_src)
    right = parse_expr(right_src)
    limits: list[float] = []
    for side, tree in (("left", left), ("right", right)):
        try:
            limits.append(float(eval_expr(tree, HALF_PI)))
        except EvalDomainError as exc:
            msg = f"{name}_{side} has no finite limit at pi/2: {exc}"
            raise ProblemValidationError(msg, invariant=f"{name}_finite_limit", abscissa=HALF_PI) from exc
    return PiecewiseFn(left=left, right=right, left_limit_at_mid=limits[0], right_limit_at_mid=limits[1])


def _piece_grids(m: int) -> tuple[FloatArray, FloatArray]:
    return np.linspace(0.0, HALF_PI, m + 1), np.linspace(HALF_PI, math.pi, m + 1)


def _sampled(fn: PiecewiseFn, name: str, side: str, x: FloatArray) -> FloatArray:
    try:
        return fn.eval_left(x) if side == "left" else fn.eval_right(x)
    except EvalDomainError as exc:
        msg = f"{name}_{side} is not finite on its piece: {exc}"
        raise ProblemValidationError(msg, invariant=f"{name}_finite", abscissa=exc.x) from exc


def _require_at_least(values: FloatArray, x: FloatArray, bound: float, message: str, invariant: str) -> None:
    # _SLACK absorbs rounding in x - delay(x) for delays that touch the bound, e.g. x/2 at x = 0
    bad = values < bound - _SLACK
    if np.any(bad):
        idx = int(np.argmax(bad))
        at = float(x[idx])
        msg = f"{message}: {values[idx]:.6g} at x={at!r}"
        raise ProblemValidationError(msg, invariant=invariant, abscissa=at)


def _check_delay_constraints(p: Problem, m: int) -> None:
    x_left, x_right = _piece_grids(m)
    _sampled(p.q, "q", "left", x_left)
    _sampled(p.q, "q", "right", x_right)
    d_left = _sampled(p.delay, "delay", "left", x_left)
    d_right = _sampled(p.delay, "delay", "right", x_right)

    _require_at_least(d_left, x_left, 0.0, "delay must be non-negative on the left piece", "delay_nonnegative")
    _require_at_least(d_right, x_right, 0.0, "delay must be non-negative on the right piece", "delay_nonnegative")
    _require_at_least(
        x_left - d_left, x_left, 0.0, "x - delay(x) must be >= 0 on the left piece", "left_history_in_domain"
    )
    _require_at_least(
        x_right - d_right,
        x_right,
        HALF_PI,
        "x - delay(x) must be >= pi/2 on the right piece",
        "right_history_after_interface",
    )


def build_problem(cfg: ProblemConfig, samples: int = VALIDATION_SAMPLES) -> Problem:
    """Assemble and validate a problem from its configuration.

    Args:
        cfg: Parsed problem file.
        samples: Points per half on which the delay constraints are checked.

    Returns:
        The immutable problem, with zero-coefficient warnings attached.

    Raises:
        ProblemValidationError: A hard invariant fails (delta, a2p or sin(b) vanish, a coefficient
            function is not finite, or a sampled delay constraint is violated).
    """
    sec = cfg.problem
    if sec.delta == 0.0:
        raise ProblemValidationError("delta must be nonzero", invariant="delta_nonzero")
    if sec.a2p == 0.0:
        raise ProblemValidationError("a2p must be nonzero", invariant="a2p_nonzero")
    if abs(math.sin(sec.b)) < _SIN_B_FLOOR:
        msg = f"sin(b) must be nonzero (b={sec.b!r})"
        raise ProblemValidationError(msg, invariant="sin_b_nonzero")

    # zero a1, a1p or a2 is legal but often a typo, so it is logged and carried, not raised
    warnings: list[str] = []
    for name in _WARN_IF_ZERO:
        if getattr(sec, name) == 0.0:
            log.warning("coefficient_zero", coefficient=name)
            warnings.append(f"{name} is zero")

    problem = Problem(
        a1=sec.a1,
        a1p=sec.a1p,
        a2=sec.a2,
        a2p=sec.a2p,
        b=sec.b,
        delta=sec.delta,
        q=_piecewise("q", sec.q_left, sec.q_right),
        delay=_piecewise("delay", sec.delay_left, sec.delay_right),
        warnings=tuple(warnings),
    )
    _check_delay_constraints(problem, samples)
    return problem


def sample_problem(p: Problem, m: int) -> list[SampleRow]:
    """Tabulate q, delay and x - delay at ``m`` points per half-interval.

    The interface abscissa appears twice: first as the left limit, then as the right limit.
    """
    if m < 2:
        msg = f"m must be at least 2, got {m}"
        raise ValueError(msg)
    rows: list[SampleRow] = []
    sides: tuple[Literal["left", "right"], ...] = ("left", "right")
    for side in sides:
        x = np.linspace(0.0, HALF_PI, m) if side == "left" else np.linspace(HALF_PI, math.pi, m)
        q = _sampled(p.q, "q", side, x)
        d = _sampled(p.delay, "delay", side, x)
        rows.extend(
            SampleRow(piece=side, x=float(xi), q=float(qi), delay=float(di), x_minus_delay=float(xi - di))
            for xi, qi, di in zip(x, q, d, strict=True)
        )
    return rows


def delay_margins(p: Problem, m: int = VALIDATION_SAMPLES) -> DelayMargins:
    """Smallest sampled slack of each delay constraint."""
    x_left, x_right = _piece_grids(m)
    d_left = _sampled(p.delay, "delay", "left", x_left)
    d_right = _sampled(p.delay, "delay", "right", x_right)
    return DelayMargins(
        min_delay_left=float(d_left.min()),
        min_delay_right=float(d_right.min()),
        left_history_margin=float((x_left - d_left).min()),
        right_history_margin=float((x_right - d_right).min() - HALF_PI),
    )
