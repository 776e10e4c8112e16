"""Test suite for the shared numerical kernels."""

import math

import numpy as np
import pytest

from cone_carleman.numerics import (
    central_gradient,
    central_hessian,
    central_laplacian,
    fd_step,
    jacobi_eigenvalues,
    log_pow,
    observed_order,
    relative_error,
    stable_norm,
)


def test_stable_norm():
    """Norms along the last axis, including huge components and empty vectors."""
    assert stable_norm(np.array([3.0, 4.0])) == pytest.approx(5.0)
    assert stable_norm(np.array([1e200, 1e200])) == pytest.approx(math.sqrt(2.0) * 1e200)
    assert stable_norm(np.zeros(3)) == 0.0
    np.testing.assert_allclose(stable_norm(np.array([[3.0, 4.0], [0.0, 2.0]])), [5.0, 2.0])
    assert stable_norm(np.empty((4, 0))).shape == (4,)


def test_log_pow():
    """base**exponent through logarithms, with 0**positive = 0."""
    assert float(log_pow(4.0, 0.5)) == pytest.approx(2.0)
    assert float(log_pow(0.0, 2.0)) == 0.0
    np.testing.assert_allclose(log_pow(np.array([0.5, 2.0]), 3.0), [0.125, 8.0])


def test_fd_step_scales_with_coordinate():
    """The step grows with |x| once |x| exceeds 1."""
    np.testing.assert_allclose(fd_step(np.array([0.1, -3.0])), [1e-4, 3e-4])


def test_observed_order():
    """Errors that drop by 4 under halving have order 2."""
    np.testing.assert_allclose(observed_order([1.0, 0.25, 0.0625]), [2.0, 2.0])


def test_relative_error_floor():
    """Small exact values are compared absolutely."""
    np.testing.assert_allclose(relative_error([1.5, 1e-3], [1.0, 0.0]), [0.5, 1e-3])


class TestFiniteDifferences:
    """Central-difference gradient, Hessian and Laplacian."""

    @staticmethod
    def cubic(x):
        """x_1^3 + x_1 x_2^2."""
        return x[..., 0] ** 3 + x[..., 0] * x[..., 1] ** 2

    def test_gradient(self):
        """Gradient of a cubic at two points."""
        x = np.array([[1.0, 2.0], [-0.5, 0.3]])
        exact = np.stack([3 * x[:, 0] ** 2 + x[:, 1] ** 2, 2 * x[:, 0] * x[:, 1]], axis=-1)
        np.testing.assert_allclose(central_gradient(self.cubic, x), exact, rtol=1e-7, atol=1e-7)

    def test_hessian_is_symmetric(self):
        """Mixed partials agree and match the closed form."""
        x = np.array([1.0, 2.0])
        hess = central_hessian(self.cubic, x)
        exact = np.array([[6.0, 4.0], [4.0, 2.0]])
        np.testing.assert_allclose(hess, exact, atol=1e-5)
        assert hess[0, 1] == hess[1, 0]

    def test_laplacian(self):
        """Laplacian of a harmonic polynomial is 0."""
        x = np.array([[1.0, 2.0], [0.3, -0.7]])
        values = central_laplacian(lambda y: y[..., 0] ** 2 - y[..., 1] ** 2, x)
        np.testing.assert_allclose(values, 0.0, atol=1e-5)


class TestJacobi:
    """Batched Jacobi eigenvalues."""

    def test_matches_numpy(self):
        """Eigenvalues of random symmetric matrices agree with numpy."""
        rng = np.random.default_rng(3)
        matrices = rng.standard_normal((20, 3, 3))
        matrices = matrices + np.swapaxes(matrices, -1, -2)
        np.testing.assert_allclose(
            jacobi_eigenvalues(matrices), np.linalg.eigvalsh(matrices), atol=1e-10
        )

    def test_diagonal_input(self):
        """A diagonal matrix needs no rotation and comes back sorted."""
        np.testing.assert_allclose(jacobi_eigenvalues(np.diag([3.0, -1.0])), [-1.0, 3.0])

    def test_batch_shape(self):
        """Leading batch axes are preserved."""
        matrices = np.broadcast_to(np.eye(2), (4, 5, 2, 2))
        assert jacobi_eigenvalues(matrices).shape == (4, 5, 2)
