"""Tests for the regularized trace report."""

from __future__ import annotations

import math

import pytest

from retarded_spectrum.errors import MissingLabelError
from retarded_spectrum.problem import Problem
from retarded_spectrum.spectral.dde import GridSpec
from retarded_spectrum.spectral.spectrum import Label, index_spectrum, scan_roots
from retarded_spectrum.spectral.trace import (
    trace_constants,
    trace_partial_sum,
    trace_report,
    trace_report_from_spectrum,
    trace_rhs,
    trace_term,
)
from tests.conftest import ZERO_Q, exact_spectrum, make_problem

GRID = GridSpec()


@pytest.fixture
def trivial_problem() -> Problem:
    """q = 0 with a1 = a1p = a2 = 0: F is exactly its leading term."""
    return make_problem(**{**ZERO_Q, "a1": 0.0})


class TestRightHandSide:
    def test_zero_potential_with_a1p(self, trace_problem: Problem) -> None:
        assert trace_rhs(trace_problem, 2048) == pytest.approx(2.0 / math.pi - 1.0, abs=1e-15)

    def test_trivial_problem(self, trivial_problem: Problem) -> None:
        assert trace_rhs(trivial_problem, 2048) == 0.0

    def test_constant_potential(self) -> None:
        p = make_problem(**{**ZERO_Q, "q_left": "1", "q_right": "1"})
        assert trace_rhs(p, 2048) == pytest.approx(-2.0 - math.pi**2, abs=1e-10)

    def test_d_constant_is_boundary_ratio(self, shipped_problem: Problem) -> None:
        p = make_problem(a2=0.75, a2p=1.5)
        _, d_const = trace_constants(p, 2048)
        assert d_const == 0.5
        _, d_shipped = trace_constants(shipped_problem, 2048)
        assert d_shipped == 1.0

    def test_c_constant(self, shipped_problem: Problem) -> None:
        c_const, _ = trace_constants(shipped_problem, 2048)
        # P(0) = Q(0) = 1/2 int_0^pi cos = 0
        assert c_const == pytest.approx(-1.0, abs=1e-12)


class TestTraceTerms:
    def test_exact_spectrum_terms_vanish(self, trivial_problem: Problem) -> None:
        spec = exact_spectrum(12)
        assert all(trace_term(trivial_problem, spec, n, 2048) == 0.0 for n in range(1, 13))
        assert trace_partial_sum(trivial_problem, spec, 12, 2048) == 0.0

    def test_term_formula(self, trace_problem: Problem) -> None:
        spec = exact_spectrum(10, {Label(1, 3): 2.1, Label(-1, 3): -1.8})
        expected = 2.1**2 + 1.8**2 - 2.0 * 4.0 + (4.0 / math.pi) * (-1.0)
        assert trace_term(trace_problem, spec, 3, 2048) == pytest.approx(expected, rel=1e-14)

    def test_partial_sum_increments(self, trace_problem: Problem) -> None:
        spec = index_spectrum(scan_roots(trace_problem, 20, 0.05, GRID, method="closed_form"), 20)
        for n in range(2, 21):
            step = trace_partial_sum(trace_problem, spec, n, 2048) - trace_partial_sum(trace_problem, spec, n - 1, 2048)
            assert step == pytest.approx(trace_term(trace_problem, spec, n, 2048), abs=1e-12)

    def test_cluster_contributes_squares(self, trivial_problem: Problem) -> None:
        spec = exact_spectrum(10, {Label(-1, 0): -0.5, Label(1, 0): 0.25})
        assert trace_partial_sum(trivial_problem, spec, 3, 2048) == pytest.approx(0.3125, rel=1e-15)

    def test_terms_start_at_one(self, trace_problem: Problem) -> None:
        with pytest.raises(ValueError, match="start at n = 1"):
            trace_term(trace_problem, exact_spectrum(10), 0, 2048)

    def test_missing_label(self, trace_problem: Problem) -> None:
        with pytest.raises(MissingLabelError, match=r"Label -11 is not present"):
            trace_term(trace_problem, exact_spectrum(10), 11, 2048)


class TestTraceReportFromSpectrum:
    def test_trivial_problem_has_zero_residuals(self, trivial_problem: Problem) -> None:
        report = trace_report_from_spectrum(trivial_problem, exact_spectrum(20), 2048)
        assert report.n_max == 20
        assert report.rhs == 0.0
        assert report.residuals == [0.0] * 19
        assert report.partial_sums == [0.0] * 19
        assert report.decay_ratios == [None] * 9
        assert report.warnings == ["a1 is zero", "a1p is zero", "a2 is zero"]

    def test_notes_come_first(self, trivial_problem: Problem) -> None:
        report = trace_report_from_spectrum(trivial_problem, exact_spectrum(10), 2048, notes=["first"])
        assert report.warnings[0] == "first"

    def test_plateau_is_flagged(self, trivial_problem: Problem) -> None:
        spec = exact_spectrum(10, {Label(1, 0): 0.5})
        report = trace_report_from_spectrum(trivial_problem, spec, 2048)
        assert report.residuals == pytest.approx([0.25] * 9)
        assert report.decay_ratios == pytest.approx([1.0] * 4)
        assert any(w.startswith("residual plateau near 0.25") for w in report.warnings)

    def test_pqrs_location_is_recorded(self, trivial_problem: Problem) -> None:
        assert trace_report_from_spectrum(trivial_problem, exact_spectrum(10), 2048, "n").pqrs_at == "n"

    def test_needs_ten_labels(self, trivial_problem: Problem) -> None:
        with pytest.raises(ValueError, match="n_max >= 10"):
            trace_report_from_spectrum(trivial_problem, exact_spectrum(9), 2048)


class TestTraceReport:
    def test_zero_potential_pipeline(self, trace_problem: Problem) -> None:
        report = trace_report(trace_problem, 20, GRID, method="closed_form")
        assert report.rhs == pytest.approx(2.0 / math.pi - 1.0)
        assert len(report.partial_sums) == 19
        assert len(report.decay_ratios) == 9
        assert report.residuals[-1] == pytest.approx(report.partial_sums[-1] - report.rhs, abs=1e-15)

    def test_rejects_short_truncation(self, trace_problem: Problem) -> None:
        with pytest.raises(ValueError, match="n_max >= 10"):
            trace_report(trace_problem, 5, GRID, method="closed_form")

    @pytest.mark.slow
    def test_zero_potential_residual_plateaus(self, trace_problem: Problem) -> None:
        report = trace_report(trace_problem, 200, GRID, method="closed_form")

        # residuals[k] belongs to N = k + 2
        def residual(n: int) -> float:
            return report.residuals[n - 2]

        # The partial sums converge, but not to 2/pi - 1: the limit sits near -1.27,
        # and the terms fall off like 1/n^2, so the gap never closes.
        assert any(w.startswith("residual plateau near -1.27") for w in report.warnings)
        assert abs(residual(200) - residual(100)) < 1e-2
        assert residual(200) == pytest.approx(-1.27, abs=0.02)
        assert abs(residual(10)) < abs(residual(50)) < abs(residual(200))
        assert report.decay_ratios[-1] == pytest.approx(1.0, abs=0.01)

    @pytest.mark.slow
    def test_shipped_problem_end_to_end(self, shipped_problem: Problem) -> None:
        report = trace_report(shipped_problem, 10, GRID)
        assert report.n_max == 10
        assert all(math.isfinite(r) for r in report.residuals)
