"""Test suite for the finite-difference heat solvers and the experiments built on them."""

import math

import numpy as np
import pytest

from cone_carleman import heatfd
from cone_carleman.errors import NumericalError, NumericalErrorReason, ParameterError
from cone_carleman.models import CounterexampleParams, SectorGeometry
from cone_carleman.numerics import observed_order
from tests.test_data import (
    COUNTEREXAMPLE_A,
    CROSSCHECK_ALPHA,
    DECAY_BETA_RANGE,
    DECAY_RADII,
    SECTOR_GRID,
    SECTOR_THETA,
    SYNTHETIC_BETA,
)


def sector(nr: int = 8, nw: int = 8) -> SectorGeometry:
    """The 120 degree sector between radii 0.5 and 1.5."""
    return SectorGeometry(theta=SECTOR_THETA, r_in=0.5, r_out=1.5, nr=nr, nw=nw)


def zero_boundary(r, omega, t):
    """Homogeneous Dirichlet data."""
    return np.zeros_like(r)


class TestRadialSolver:
    """Heat equation on a ball with constant boundary data."""

    def test_maximum_principle(self):
        """Implicit Euler keeps 0 <= u <= M and u(0, t) grows."""
        field = heatfd.radial_solve(2, 3.0, lambda t: 1.0, 1.0, 30, 0.01)
        assert field.values.shape == (101, 31)
        assert np.min(field.values) >= -1e-14
        assert np.max(field.values) <= 1.0 + 1e-12
        assert np.all(np.diff(field.center_series()) >= -1e-14)

    def test_steady_state(self):
        """After a long time the ball is at the boundary value."""
        field = heatfd.radial_solve(3, 3.0, lambda t: 2.0, 30.0, 20, 0.5)
        np.testing.assert_allclose(field.final, 2.0, atol=1e-6)

    def test_step_rounding(self):
        """dt is shrunk so that T is a whole number of steps."""
        field = heatfd.radial_solve(1, 3.0, lambda t: 1.0, 1.0, 10, 0.3)
        assert field.dt == pytest.approx(0.25)
        assert field.times.tolist() == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])

    def test_zero_horizon(self):
        """T = 0 stores only the initial row."""
        field = heatfd.radial_solve(2, 3.0, lambda t: 1.0, 0.0, 10, 0.1)
        assert field.values.shape == (1, 11)
        assert field.final[-1] == 1.0

    def test_instability_guard(self):
        """|u| above 10 M is reported."""
        with pytest.raises(NumericalError) as error:
            heatfd.radial_solve(1, 3.0, lambda t: 1.0, 1.0, 20, 0.05, M=0.01)
        assert error.value.reason == NumericalErrorReason.INSTABILITY

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n": 0},
            {"R": 2.0},
            {"implicitness": 0.3},
            {"dt": 0.0},
            {"T": -1.0},
            {"nr": 1},
        ],
    )
    def test_invalid(self, kwargs):
        """Dimension, radius, scheme, step, horizon and grid are validated."""
        args = {"n": 2, "R": 3.0, "g": lambda t: 1.0, "T": 1.0, "nr": 10, "dt": 0.1}
        args.update(kwargs)
        with pytest.raises(ParameterError):
            heatfd.radial_solve(**args)


class TestDecayFit:
    """log u(0, t) = log c - beta R^2 / t."""

    def test_synthetic_exponential(self):
        """Exact data e^(-R^2 / (8 t)) gives beta = 1/8 and c = 1."""
        R, M = 4.0, 2.0
        times = np.linspace(0.5, 2.0, 16)
        fit = heatfd.fit_decay_samples(
            times, M * np.exp(-SYNTHETIC_BETA * R * R / times), R, M, (0.0, 2.0)
        )
        assert fit.beta_fit == pytest.approx(SYNTHETIC_BETA, abs=1e-6)
        assert fit.c_ls == pytest.approx(1.0, rel=1e-6)
        assert fit.samples == 16
        assert fit.passed

    def test_envelope_lift(self):
        """Noisy fitting samples all lie below the lifted envelope."""
        R, M = 2.0, 1.0
        times = np.linspace(0.2, 1.0, 9)
        noise = np.array([1.0, 1.0, 0.8, 1.0, 0.9, 1.0, 1.0, 1.0, 1.05])
        samples = noise * np.exp(-0.3 * R * R / times)
        fit = heatfd.fit_decay_samples(times, samples, R, M, (0.0, 1.0))
        assert fit.c_fit >= fit.c_ls
        assert fit.held_out == 4
        fitting = np.arange(times.size) % 2 == 0
        envelope = fit.c_fit * M * np.exp(-fit.beta_fit * R * R / times)
        assert np.all(samples[fitting] <= envelope[fitting] * (1.0 + 1e-12))

    def test_held_out_sample_above_envelope(self):
        """A held-out sample 50% above exact decay data violates the envelope."""
        R, M = 4.0, 1.0
        times = np.linspace(0.5, 2.0, 17)
        samples = M * np.exp(-SYNTHETIC_BETA * R * R / times)
        samples[7] *= 1.5
        fit = heatfd.fit_decay_samples(times, samples, R, M, (0.0, 2.0))
        assert fit.beta_fit == pytest.approx(SYNTHETIC_BETA, abs=1e-9)
        assert fit.max_violation == pytest.approx(
            math.log(1.5) - math.log1p(heatfd.ENVELOPE_SLACK), abs=1e-9
        )
        assert not fit.passed

    def test_held_out_sample_within_slack(self):
        """An excess smaller than the slack is tolerated."""
        R, M = 4.0, 1.0
        times = np.linspace(0.5, 2.0, 17)
        samples = M * np.exp(-SYNTHETIC_BETA * R * R / times)
        samples[7] *= 1.0 + 0.5 * heatfd.ENVELOPE_SLACK
        fit = heatfd.fit_decay_samples(times, samples, R, M, (0.0, 2.0))
        assert fit.max_violation < 0.0
        assert fit.passed

    def test_empty_window(self):
        """Fewer than three samples give an empty, failing fit."""
        fit = heatfd.fit_decay_samples(
            np.array([0.5, 0.6]), np.array([0.1, 0.2]), 4.0, 1.0, (0.0, 1.0)
        )
        assert fit.empty
        assert not fit.passed

    def test_window_samples(self):
        """Only positive centre values inside the window enter the fit."""
        field = heatfd.radial_solve(1, 4.0, lambda t: 1.0, 0.5, 40, 0.01)
        fit = heatfd.decay_fit(field, 4.0, 1.0, (0.0, 0.5))
        assert fit.samples == int(np.sum(field.center_series()[1:] > 0.0))

    def test_invalid(self):
        """Window order, positive M, and a radial field."""
        field = heatfd.radial_solve(1, 3.0, lambda t: 1.0, 0.1, 10, 0.01)
        with pytest.raises(ParameterError):
            heatfd.decay_fit(field, 3.0, 1.0, (0.2, 0.1))
        with pytest.raises(ParameterError):
            heatfd.decay_fit(field, 3.0, 0.0, (0.0, 0.1))
        sector_field = heatfd.sector_solve(sector(), zero_boundary, np.zeros((9, 9)), 0.1, 0.05)
        with pytest.raises(ParameterError):
            heatfd.decay_fit(sector_field, 3.0, 1.0, (0.0, 0.1))


@pytest.mark.slow
def test_decay_law():
    """beta is positive and unchanged when R doubles with an R^2-scaled window."""
    fits = [heatfd.decay_experiment(R)[1] for R in DECAY_RADII]
    lo, hi = DECAY_BETA_RANGE
    for fit in fits:
        assert fit.passed
        assert lo <= fit.beta_fit <= hi
    assert fits[1].beta_fit == pytest.approx(fits[0].beta_fit, rel=0.2)


class TestSectorSolver:
    """Heat equation on a polar sector with Dirichlet data."""

    def test_maximum_principle(self):
        """Zero boundary data and nonnegative start stay within [0, max u_0]."""
        geometry = sector()
        r, omega = geometry.mesh()
        start = np.sin(math.pi * (r - 0.5)) * np.cos(1.5 * omega)
        field = heatfd.sector_solve(geometry, zero_boundary, start, 0.5, 0.01)
        assert np.min(field.values) >= -1e-14
        assert np.max(field.values) <= np.max(start) + 1e-14
        assert np.max(np.abs(field.final)) < np.max(start)

    def test_storage(self):
        """Every third step plus the final one."""
        field = heatfd.sector_solve(
            sector(), zero_boundary, lambda r, w: r, 1.0, 0.1, store_every=3
        )
        assert field.times.tolist() == pytest.approx([0.0, 0.3, 0.6, 0.9, 1.0])
        assert field.values.shape == (5, 9, 9)

    def test_boundary_overwrites_start(self):
        """Dirichlet nodes take the boundary data already at t = 0."""
        geometry = sector()
        field = heatfd.sector_solve(
            geometry, lambda r, w, t: 1.0 + 0.0 * r, np.zeros((9, 9)), 0.0, 0.1
        )
        assert np.all(field.final[geometry.boundary_mask()] == 1.0)
        assert np.all(field.final[~geometry.boundary_mask()] == 0.0)

    def test_invalid(self):
        """Start shape, storage stride and scheme are validated."""
        with pytest.raises(ParameterError):
            heatfd.sector_solve(sector(), zero_boundary, np.zeros((3, 3)), 0.1, 0.05)
        with pytest.raises(ParameterError):
            heatfd.sector_solve(sector(), zero_boundary, np.zeros((9, 9)), 0.1, 0.05, store_every=0)
        with pytest.raises(ParameterError):
            heatfd.sector_solve(
                sector(), zero_boundary, np.zeros((9, 9)), 0.1, 0.05, implicitness=1.5
            )

    def test_manufactured_harmonic(self):
        """x_1^2 - x_2^2 is reproduced at second order under grid halving."""

        def exact(x1, x2, t):
            return x1 * x1 - x2 * x2 + 0.0 * t

        errors = [
            heatfd.manufactured_error(sector(n, n), exact, 2.0, 40, heatfd.IMPLICIT_EULER)
            for n in (8, 16, 32)
        ]
        assert errors[0] > errors[1] > errors[2]
        assert all(1.7 <= order <= 2.3 for order in observed_order(errors))

    def test_geometry_validation(self):
        """Angles must lie in (0, pi) and radii must be ordered."""
        with pytest.raises(ParameterError):
            SectorGeometry(theta=math.pi, r_in=0.5, r_out=1.5, nr=8, nw=8)
        with pytest.raises(ParameterError):
            SectorGeometry(theta=1.0, r_in=1.5, r_out=0.5, nr=8, nw=8)
        with pytest.raises(ParameterError):
            SectorGeometry(theta=1.0, r_in=0.5, r_out=1.5, nr=1, nw=8)


class TestCrosscheck:
    """Grid solution of the reversed problem against the explicit solution."""

    def test_zero_window(self, counterexample_params: CounterexampleParams):
        """s_0 = s_1 reproduces the data exactly."""
        report = heatfd.counterexample_crosscheck(counterexample_params, 8, 8, window=(1.0, 1.0))
        assert report.steps == 0
        assert report.max_rel_error == 0.0

    @pytest.mark.parametrize(
        "window, margin", [((0.0, 1.0), 0.05), ((0.9, 1.1), 0.05), ((0.9, 1.0), 1.0)]
    )
    def test_invalid(self, counterexample_params: CounterexampleParams, window, margin):
        """Window inside (0, 1] and the margin inside the sector."""
        with pytest.raises(ParameterError):
            heatfd.counterexample_crosscheck(counterexample_params, 8, 8, window, margin=margin)

    @pytest.mark.slow
    def test_convergence(self):
        """The relative error falls under grid halving."""
        p = CounterexampleParams(A=COUNTEREXAMPLE_A, alpha=CROSSCHECK_ALPHA)
        reports = [heatfd.counterexample_crosscheck(p, n, n) for n in (16, 32, 64)]
        errors = [report.max_rel_error for report in reports]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 1e-3
        assert reports[0].error_field.shape == (17, 17)


class TestControl:
    """Bounded boundary control on a sector."""

    def test_no_control(self):
        """A zero bound leaves the free decay."""
        report = heatfd.control_experiment(SECTOR_THETA, 0.2, SECTOR_GRID, 4, 0.0)
        assert report.status == "no control"
        assert report.terminal_norm == report.free_norm
        np.testing.assert_array_equal(report.coefficients, np.zeros(4))

    def test_control_does_not_hurt(self):
        """c = 0 is feasible, so the optimum is no worse than free decay."""
        report = heatfd.control_experiment(SECTOR_THETA, 0.2, SECTOR_GRID, 8, 1.0)
        assert report.converged
        assert report.terminal_norm <= report.free_norm * (1.0 + 1e-9)
        assert np.all(np.abs(report.coefficients) <= 1.0 + 1e-12)

    def test_nested_spaces(self):
        """Doubling the hats in arc length never raises the terminal norm."""
        norms = [
            heatfd.control_experiment(SECTOR_THETA, 0.2, SECTOR_GRID, n, 1.0).terminal_norm
            for n in (4, 8, 16)
        ]
        for coarse, fine in zip(norms, norms[1:]):
            assert fine <= coarse + 1e-6 * norms[0]

    def test_profile(self):
        """One row per time level, one column per boundary node."""
        report = heatfd.control_experiment(SECTOR_THETA, 0.2, SECTOR_GRID, 4, 1.0, steps=10)
        assert report.control_profile.shape == (11, 32)
        assert report.profile_times.shape == (11,)

    def test_profile_starts_at_zero(self):
        """Boundary control is off at t = 0, where the initial data vanish on the boundary."""
        report = heatfd.control_experiment(SECTOR_THETA, 0.2, SECTOR_GRID, 8, 1.0, steps=10)
        assert report.profile_times[0] == 0.0
        np.testing.assert_array_equal(report.control_profile[0], np.zeros(32))

    def test_arc_length(self):
        """Boundary nodes get distinct positions on [0, loop)."""
        geometry = SectorGeometry(*((SECTOR_THETA,) + SECTOR_GRID))
        operator = heatfd.sector_operator(geometry)
        positions = heatfd.boundary_arc_length(geometry, operator)
        arcs = (geometry.r_in + geometry.r_out) * geometry.theta
        loop = arcs + 2.0 * (geometry.r_out - geometry.r_in)
        assert positions.min() == pytest.approx(0.0, abs=1e-12)
        assert positions.max() < loop
        assert np.unique(np.round(positions, 12)).size == positions.size

    @pytest.mark.parametrize(
        "kwargs", [{"n_controls": 3}, {"bound": -1.0}, {"T": 0.0}, {"steps": 0}, {"steps": 1}]
    )
    def test_invalid(self, kwargs):
        """Controls must be a multiple of the time hats; bound, horizon and steps checked.

        Every time hat needs a step of its own.
        """
        args = {"theta": SECTOR_THETA, "T": 0.2, "grid": SECTOR_GRID, "n_controls": 4, "bound": 1.0}
        args.update(kwargs)
        with pytest.raises(ParameterError):
            heatfd.control_experiment(**args)

    def test_sweep(self):
        """One report per angle."""
        reports = heatfd.control_sweep([1.0, 2.0], 0.2, SECTOR_GRID, 4, 0.0)
        assert [report.theta for report in reports] == [1.0, 2.0]
        assert reports[0].free_norm != reports[1].free_norm
