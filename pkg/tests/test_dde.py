"""Tests for the method-of-steps solver."""

from __future__ import annotations

import math

import numpy as np
import pytest

from retarded_spectrum.errors import NonFiniteStateError
from retarded_spectrum.expr import FloatArray
from retarded_spectrum.problem import HALF_PI, Problem
from retarded_spectrum.spectral.dde import GridSpec, Trajectory, observed_order, solve_batch, solve_omega
from tests.conftest import ZERO_Q, make_problem

COARSE = GridSpec(steps_per_half=512)


def _free_solution(p: Problem, mu: float, x: FloatArray, omega: float) -> tuple[FloatArray, FloatArray]:
    """y'' = -omega^2 y from the left-end data of ``p`` at spectral parameter ``mu``."""
    amp, slope = p.initial_values(mu)
    if omega == 0.0:
        return amp + slope * x, np.full_like(x, slope)
    cos_t, sin_t = np.cos(omega * x), np.sin(omega * x)
    return amp * cos_t + slope * sin_t / omega, -amp * omega * sin_t + slope * cos_t


def _assert_free(traj: Trajectory, p: Problem, omega: float, tol: float) -> None:
    """Compare with the free oscillation, tolerance relative to the largest value."""
    y_left, yp_left = _free_solution(p, traj.mu, traj.left_nodes, omega)
    y_right, yp_right = _free_solution(p, traj.mu, traj.right_nodes, omega)
    atol = tol * max(1.0, float(np.max(np.abs(yp_left))), float(np.max(np.abs(y_left))))
    np.testing.assert_allclose(traj.y_left, y_left, rtol=0, atol=atol)
    np.testing.assert_allclose(traj.yp_left, yp_left, rtol=0, atol=atol)
    np.testing.assert_allclose(traj.y_right, y_right / p.delta, rtol=0, atol=atol)
    np.testing.assert_allclose(traj.yp_right, yp_right / p.delta, rtol=0, atol=atol)


class TestGridSpec:
    def test_defaults(self) -> None:
        g = GridSpec()
        assert (g.steps_per_half, g.picard_max_iter, g.picard_tol) == (4096, 50, 1e-12)

    @pytest.mark.parametrize("kwargs", [{"steps_per_half": 8}, {"picard_tol": 0.0}, {"picard_max_iter": 0}])
    def test_rejects_bad_values(self, kwargs: dict[str, float]) -> None:
        with pytest.raises(ValueError, match="must be"):
            GridSpec(**kwargs)  # type: ignore[arg-type]


class TestZeroPotential:
    def test_closed_form_at_mu_one(self, zero_q_problem: Problem) -> None:
        # y(0) = y'(0) = 1 at mu = 1, so y = cos x + sin x and (y, y') = (1, -1) at pi/2
        traj = solve_omega(zero_q_problem, 1.0, GridSpec())
        assert traj.y_left[-1] == pytest.approx(1.0, abs=1e-10)
        assert traj.yp_left[-1] == pytest.approx(-1.0, abs=1e-10)

    @pytest.mark.parametrize("mu", [0.5, 3.0, -2.5])
    def test_matches_free_oscillation(self, zero_q_problem: Problem, mu: float) -> None:
        _assert_free(solve_omega(zero_q_problem, mu, GridSpec()), zero_q_problem, abs(mu), 1e-10)

    def test_mu_zero_is_linear(self) -> None:
        p = make_problem(**{**ZERO_Q, "a2": 0.5, "a1": 2.0})
        traj = solve_omega(p, 0.0, GridSpec())
        np.testing.assert_allclose(traj.y_left, 0.5 + 2.0 * traj.left_nodes, rtol=0, atol=1e-12)
        np.testing.assert_allclose(traj.yp_right, np.full_like(traj.right_nodes, 2.0), rtol=0, atol=1e-12)


class TestUndelayedPotential:
    """With delay 0 and constant q the equation is y'' = -(mu^2 + q) y, which exercises implicit steps."""

    @pytest.mark.parametrize("mu", [0.5, 2.0, 6.0])
    def test_matches_shifted_frequency(self, mu: float) -> None:
        p = make_problem(q_left="1", q_right="1", delay_left="0", delay_right="0", delta=1.5)
        _assert_free(solve_omega(p, mu, GridSpec()), p, math.sqrt(mu * mu + 1.0), 1e-9)


class TestInterfaceJump:
    @pytest.mark.parametrize("delta", [2.0, 3.0, -0.7])
    def test_right_start_is_left_end_over_delta(self, delta: float) -> None:
        traj = solve_omega(make_problem(delta=delta), 1.3, COARSE)
        assert traj.y_right[0] == traj.y_left[-1] / delta
        assert traj.yp_right[0] == traj.yp_left[-1] / delta

    def test_left_half_does_not_depend_on_delta(self) -> None:
        one = solve_omega(make_problem(delta=1.0), 2.0, COARSE)
        other = solve_omega(make_problem(delta=-4.0), 2.0, COARSE)
        np.testing.assert_array_equal(one.y_left, other.y_left)

    def test_right_half_scales_with_delta(self) -> None:
        one = solve_omega(make_problem(delta=1.0), 2.0, COARSE)
        other = solve_omega(make_problem(delta=2.5), 2.0, COARSE)
        scale = float(np.max(np.abs(one.y_right)))
        np.testing.assert_allclose(2.5 * other.y_right, one.y_right, rtol=0, atol=1e-12 * scale)


class TestLinearity:
    def test_scaling_boundary_data_scales_solution(self) -> None:
        c = 2.5
        base = solve_omega(make_problem(), 3.0, COARSE)
        scaled = solve_omega(make_problem(a1=c, a1p=c, a2=c, a2p=c), 3.0, COARSE)
        for name in ("y_left", "yp_left", "y_right", "yp_right"):
            ref = getattr(base, name)
            scale = float(np.max(np.abs(ref)))
            np.testing.assert_allclose(getattr(scaled, name), c * ref, rtol=0, atol=1e-12 * c * scale)


class TestBatch:
    def test_columns_match_single_solves(self, shipped_problem: Problem) -> None:
        mus = np.array([-4.0, 0.0, 1.5, 7.25])
        batch = solve_batch(shipped_problem, mus, COARSE)
        y_end, _ = batch.endpoints()
        for col, mu in enumerate(mus):
            single = solve_omega(shipped_problem, float(mu), COARSE)
            assert y_end[col] == pytest.approx(single.endpoint()[0], rel=1e-12, abs=1e-12)
            assert batch.trajectory(col).mu == mu


class TestNonFinite:
    def test_overflow_reports_abscissa(self) -> None:
        # y'' = (1e300 - mu^2) y grows like exp(1e150 x), so the first step already overflows
        p = make_problem(q_left="-1e300", q_right="-1e300", delay_left="0", delay_right="0")
        with pytest.raises(NonFiniteStateError) as excinfo:
            solve_omega(p, 1.0, COARSE)
        assert 0.0 < excinfo.value.abscissa <= HALF_PI
        assert excinfo.value.mu == 1.0


class TestTrajectory:
    def test_rows_list_interface_twice(self, shipped_problem: Problem) -> None:
        traj = solve_omega(shipped_problem, 2.0, GridSpec(steps_per_half=16))
        rows = traj.rows()
        # 17 nodes per half, and pi/2 is listed once per side
        assert len(rows) == 34
        assert rows[16][0] == rows[17][0] == HALF_PI
        assert rows[0][0] == 0.0
        assert rows[-1][0] == math.pi

    def test_evaluate_reproduces_nodes(self, shipped_problem: Problem) -> None:
        traj = solve_omega(shipped_problem, 2.0, COARSE)
        y, yp = traj.evaluate(traj.left_nodes[:-1])
        np.testing.assert_allclose(y, traj.y_left[:-1], rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(yp, traj.yp_left[:-1], rtol=1e-13, atol=1e-13)

    def test_evaluate_takes_post_jump_branch_at_interface(self) -> None:
        traj = solve_omega(make_problem(delta=2.0), 2.0, COARSE)
        y, _ = traj.evaluate(HALF_PI)
        assert y[0] == pytest.approx(traj.y_right[0], abs=1e-14)

    def test_sup_distance_to_itself(self, shipped_problem: Problem) -> None:
        traj = solve_omega(shipped_problem, 2.0, COARSE)
        assert traj.sup_distance(traj) == 0.0

    def test_sup_distance_needs_nested_grids(self, shipped_problem: Problem) -> None:
        a = solve_omega(shipped_problem, 2.0, GridSpec(steps_per_half=96))
        b = solve_omega(shipped_problem, 2.0, GridSpec(steps_per_half=64))
        with pytest.raises(ValueError, match="not nested"):
            a.sup_distance(b)


class TestConvergence:
    def test_fourth_order_on_shipped_problem(self, shipped_problem: Problem) -> None:
        orders = observed_order(shipped_problem, 5.0)
        assert orders[0] >= 3.5
        # RK4 with cubic Hermite history is fourth order; 3.5 leaves room for pre-asymptotic noise

    def test_needs_three_grids(self, shipped_problem: Problem) -> None:
        with pytest.raises(ValueError, match="three grids"):
            observed_order(shipped_problem, 1.0, steps=(64, 128))
