"""Tests for problem assembly, validation and sampling."""

from __future__ import annotations

import math

import pytest

from retarded_spectrum.errors import ProblemValidationError
from retarded_spectrum.problem import HALF_PI, build_problem, delay_margins, sample_problem
from tests.conftest import make_config, make_problem


class TestBuildProblem:
    def test_shipped_problem_is_valid(self) -> None:
        p = make_problem()
        assert p.delta == 1.0
        assert p.b == pytest.approx(HALF_PI)
        assert p.warnings == ()
        assert not p.q.is_zero

    def test_interface_limits(self) -> None:
        p = make_problem()
        assert p.q.left_limit_at_mid == pytest.approx(0.0, abs=1e-15)
        assert p.delay.left_limit_at_mid == pytest.approx(math.pi / 4)
        assert p.delay.right_limit_at_mid == 0.0

    def test_zero_q_flag(self) -> None:
        assert make_problem(q_left="0", q_right="0").q.is_zero

    @pytest.mark.parametrize(
        ("overrides", "invariant", "match"),
        [
            ({"delta": 0.0}, "delta_nonzero", "delta must be nonzero"),
            ({"a2p": 0.0}, "a2p_nonzero", "a2p must be nonzero"),
            ({"b": 0.0}, "sin_b_nonzero", r"sin\(b\) must be nonzero"),
            ({"b": math.pi}, "sin_b_nonzero", r"sin\(b\) must be nonzero"),
        ],
    )
    def test_hard_coefficient_invariants(self, overrides: dict[str, float], invariant: str, match: str) -> None:
        with pytest.raises(ProblemValidationError, match=match) as excinfo:
            make_problem(**overrides)
        assert excinfo.value.invariant == invariant

    def test_right_history_crossing_the_interface(self) -> None:
        with pytest.raises(ProblemValidationError, match=r"must be >= pi/2 on the right piece") as excinfo:
            make_problem(delay_right="x")
        assert excinfo.value.invariant == "right_history_after_interface"
        assert excinfo.value.abscissa == HALF_PI

    def test_negative_delay(self) -> None:
        with pytest.raises(ProblemValidationError, match="non-negative on the left piece") as excinfo:
            make_problem(delay_left="x - 1")
        assert excinfo.value.invariant == "delay_nonnegative"
        assert excinfo.value.abscissa == 0.0

    def test_left_history_before_zero(self) -> None:
        with pytest.raises(ProblemValidationError) as excinfo:
            make_problem(delay_left="2*x")
        assert excinfo.value.invariant == "left_history_in_domain"

    def test_coefficient_pole_at_interface(self) -> None:
        with pytest.raises(ProblemValidationError, match="no finite limit at pi/2") as excinfo:
            make_problem(q_left="1/(x - pi/2)")
        assert excinfo.value.invariant == "q_finite_limit"

    def test_coefficient_not_finite_on_piece(self) -> None:
        with pytest.raises(ProblemValidationError, match="not finite on its piece") as excinfo:
            make_problem(q_left="log(x)")
        assert excinfo.value.invariant == "q_finite"
        assert excinfo.value.abscissa == 0.0

    def test_verdict_stable_under_denser_sampling(self) -> None:
        build_problem(make_config(), samples=1024)
        build_problem(make_config(), samples=2048)
        for samples in (1024, 2048):
            with pytest.raises(ProblemValidationError):
                build_problem(make_config(delay_right="x"), samples=samples)

    @pytest.mark.parametrize("name", ["a1", "a1p", "a2"])
    def test_zero_boundary_coefficient_warns(self, name: str) -> None:
        p = make_problem(**{name: 0.0})
        assert p.warnings == (f"{name} is zero",)

    def test_warnings_do_not_affect_equality(self) -> None:
        assert make_problem(a1=0.0) == make_problem(a1=0.0)

    def test_initial_values(self) -> None:
        p = make_problem(a1=0.5, a1p=2.0, a2=-1.0, a2p=3.0)
        y0, yp0 = p.initial_values(2.0)
        assert (y0, yp0) == (5.0, 4.5)


class TestSampleProblem:
    def test_constant_coefficients(self) -> None:
        rows = sample_problem(make_problem(q_left="1", q_right="1", delay_left="0", delay_right="0"), 2)
        assert [r.piece for r in rows] == ["left", "left", "right", "right"]
        assert all(r.q == 1.0 and r.delay == 0.0 and r.x_minus_delay == r.x for r in rows)

    def test_interface_appears_twice(self) -> None:
        rows = sample_problem(make_problem(), 5)
        assert len(rows) == 10
        assert rows[4].x == rows[5].x == HALF_PI
        assert rows[4].delay == pytest.approx(math.pi / 4)
        assert rows[5].delay == 0.0

    def test_right_end(self) -> None:
        last = sample_problem(make_problem(), 3)[-1]
        assert last.x == math.pi
        assert last.q == pytest.approx(-1.0)
        assert last.delay == pytest.approx(math.pi / 4)
        assert last.x_minus_delay == pytest.approx(0.75 * math.pi)

    def test_too_few_points(self) -> None:
        with pytest.raises(ValueError, match="m must be at least 2"):
            sample_problem(make_problem(), 1)


class TestDelayMargins:
    def test_shipped_margins(self) -> None:
        margins = delay_margins(make_problem())
        assert margins.min_delay_left == 0.0
        assert margins.min_delay_right == 0.0
        assert margins.left_history_margin == 0.0
        assert margins.right_history_margin == pytest.approx(0.0, abs=1e-12)

    def test_slack_is_reported(self) -> None:
        margins = delay_margins(make_problem(delay_left="0", delay_right="0"))
        assert margins.right_history_margin == pytest.approx(0.0, abs=1e-15)
        assert margins.left_history_margin == 0.0
