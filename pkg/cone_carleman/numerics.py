"""Shared numerical kernels.

Central-difference oracles, observed convergence orders, a numerically stable norm and a
batched cyclic Jacobi eigenvalue routine for the tiny symmetric matrices of the weight
Hessians.
"""

import logging
from typing import Callable

import numpy as np

_LOGGER = logging.getLogger(__name__)

FD_BASE_STEP = 1e-4
"""Base finite-difference step, scaled by max(1, |coordinate|)."""

JACOBI_OFF_DIAGONAL_TARGET = 1e-13
JACOBI_MAX_SWEEPS = 60


def stable_norm(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Euclidean norm along `axis`, scaled by the largest component first.

    Args:
        values: Array of vectors.
        axis: Axis holding the vector components.

    Returns:
        The norms, with the reduced axis removed. Empty vectors have norm 0.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[axis] == 0:
        return np.zeros(tuple(np.delete(np.array(values.shape), axis % values.ndim)))
    scale = np.max(np.abs(values), axis=axis, keepdims=True)
    safe = np.where(scale > 0.0, scale, 1.0)
    norm = safe * np.sqrt(np.sum((values / safe) ** 2, axis=axis, keepdims=True))
    return np.squeeze(np.where(scale > 0.0, norm, 0.0), axis=axis)


def log_pow(base, exponent) -> np.ndarray:
    """Return base**exponent computed as exp(exponent * log(base)).

    A zero base maps to 0 for positive exponents, which is the limit the certificate
    m(alpha, eps) needs at eps = 0.
    """
    base = np.asarray(base, dtype=float)
    with np.errstate(divide="ignore"):
        logged = np.log(np.where(base > 0.0, base, 1.0))
    return np.where(base > 0.0, np.exp(np.asarray(exponent) * logged), 0.0)


def fd_step(x, base: float = FD_BASE_STEP) -> np.ndarray:
    """Step size base * max(1, |x|), per coordinate."""
    return base * np.maximum(1.0, np.abs(np.asarray(x, dtype=float)))


def central_difference(fn: Callable, x, h) -> np.ndarray:
    """Second-order central first derivative of a vectorised scalar function."""
    x = np.asarray(x, dtype=float)
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def second_difference(fn: Callable, x, h) -> np.ndarray:
    """Second-order central second derivative of a vectorised scalar function."""
    x = np.asarray(x, dtype=float)
    return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / (h * h)


def central_gradient(fn: Callable, x, h=None) -> np.ndarray:
    """Central-difference gradient of fn: (..., n) -> (...).

    Args:
        fn: Vectorised function of points stored along the last axis.
        x: Points, shape (..., n).
        h: Step, scalar or broadcastable to x. Defaults to `fd_step(x)`.

    Returns:
        Array of shape (..., n).
    """
    x = np.asarray(x, dtype=float)
    steps = fd_step(x) if h is None else np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    grad = np.empty_like(x)
    for k in range(x.shape[-1]):
        shift = np.zeros_like(x)
        shift[..., k] = steps[..., k]
        grad[..., k] = (fn(x + shift) - fn(x - shift)) / (2.0 * steps[..., k])
    return grad


def central_hessian(fn: Callable, x, h=None) -> np.ndarray:
    """Central-difference Hessian of fn: (..., n) -> (...), shape (..., n, n)."""
    x = np.asarray(x, dtype=float)
    steps = fd_step(x) if h is None else np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    n = x.shape[-1]
    hess = np.empty(x.shape + (n,))
    center = fn(x)
    for k in range(n):
        e_k = np.zeros_like(x)
        e_k[..., k] = steps[..., k]
        hess[..., k, k] = (fn(x + e_k) - 2.0 * center + fn(x - e_k)) / steps[..., k] ** 2
        for l in range(k + 1, n):
            e_l = np.zeros_like(x)
            e_l[..., l] = steps[..., l]
            mixed = (
                fn(x + e_k + e_l) - fn(x + e_k - e_l) - fn(x - e_k + e_l) + fn(x - e_k - e_l)
            ) / (4.0 * steps[..., k] * steps[..., l])
            hess[..., k, l] = mixed
            hess[..., l, k] = mixed
    return hess


def central_laplacian(fn: Callable, x, h=None) -> np.ndarray:
    """Central-difference Laplacian of fn: (..., n) -> (...)."""
    return np.trace(central_hessian(fn, x, h), axis1=-2, axis2=-1)


def relative_error(approx, exact, floor: float = 1.0) -> np.ndarray:
    """|approx - exact| / max(floor, |exact|), elementwise."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    return np.abs(approx - exact) / np.maximum(floor, np.abs(exact))


def observed_order(errors, factor: float = 2.0) -> np.ndarray:
    """Observed convergence orders log(e_i / e_{i+1}) / log(factor).

    Args:
        errors: Error magnitudes for successively refined steps.
        factor: Refinement factor between consecutive steps.

    Returns:
        One order per consecutive pair.
    """
    errors = np.asarray(errors, dtype=float)
    return np.log(errors[:-1] / errors[1:]) / np.log(factor)


def jacobi_eigenvalues(
    matrices,
    tol: float = JACOBI_OFF_DIAGONAL_TARGET,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> np.ndarray:
    """Eigenvalues of a batch of small symmetric matrices by cyclic Jacobi rotations.

    Every (p, q) rotation is applied to the whole batch at once, so the cost is a
    handful of (batch, n, n) matrix products per sweep.

    Args:
        matrices: Array of shape (..., n, n); symmetrised before rotating.
        tol: Target for the off-diagonal Frobenius norm, relative to max(1, ||A||_F).
        max_sweeps: Sweep cap.

    Returns:
        Eigenvalues sorted ascending, shape (..., n).
    """
    a = np.array(matrices, dtype=float)
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    n = a.shape[-1]
    batch_shape = a.shape[:-2]
    a = a.reshape((-1, n, n))
    scale = np.maximum(1.0, np.sqrt(np.sum(a * a, axis=(-2, -1))))
    off_mask = ~np.eye(n, dtype=bool)

    for sweep in range(max_sweeps):
        off = np.sqrt(np.sum(np.where(off_mask, a * a, 0.0), axis=(-2, -1)))
        if np.all(off <= tol * scale):
            _LOGGER.debug("Jacobi converged after %d sweeps", sweep)
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                active = np.abs(apq) > 0.0
                safe_apq = np.where(active, apq, 1.0)
                theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe_apq)
                sign = np.where(theta >= 0.0, 1.0, -1.0)
                t = sign / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                c = np.where(active, 1.0 / np.sqrt(t * t + 1.0), 1.0)
                s = np.where(active, t * c, 0.0)
                rot = np.broadcast_to(np.eye(n), a.shape).copy()
                rot[:, p, p] = c
                rot[:, q, q] = c
                rot[:, p, q] = s
                rot[:, q, p] = -s
                a = np.swapaxes(rot, -1, -2) @ a @ rot
    else:
        _LOGGER.warning("Jacobi eigenvalues hit the %d sweep cap", max_sweeps)

    eigenvalues = np.sort(np.diagonal(a, axis1=-2, axis2=-1), axis=-1)
    return eigenvalues.reshape(batch_shape + (n,))
