"""Convexity certificate m(alpha, eps), the minimal exponent alpha*(eps), the critical
angle, and sampled positivity scans for the cubic term A_3 and the Hessian of varphi.
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy import optimize

from cone_carleman import geometry, weights
from cone_carleman.errors import NumericalError, NumericalErrorReason, ParameterError
from cone_carleman.models.certificate import (
    A3ScanReport,
    AlphaCurvePoint,
    HessianScanReport,
    MonotonicityReport,
    ScanReport,
)
from cone_carleman.models.cone import SamplingRegion
from cone_carleman.models.weight import EPS_CRITICAL, WeightParams
from cone_carleman.numerics import jacobi_eigenvalues, log_pow, stable_norm

_LOGGER = logging.getLogger(__name__)

PRINTED_CRITICAL_ANGLE_DEGREES = 109.52
"""Critical angle as it is usually quoted; differs from the computed value by ~0.05 deg."""

ALPHA_BRACKET = (1.0 + 1e-9, 2.0)
BISECTION_MAX_ITER = 200
PSD_TOLERANCE = 1e-10
A3_TOLERANCE = 1e-10
PARTIAL_STEP = 1e-6


def m(alpha, eps):
    """Certificate m(alpha, eps) = (alpha - 1 - 2E)(1 - E)^2 - 2 eps^(alpha+2)(1 - eps^2).

    E = eps^alpha is formed as exp(alpha log eps); eps = 0 gives alpha - 1.

    Args:
        alpha: Exponent(s) in (1, 2].
        eps: Half-angle cosine(s) in [0, 1).

    Returns:
        A float for scalar input, otherwise an array.
    """
    alpha_arr = np.asarray(alpha, dtype=float)
    eps_arr = np.asarray(eps, dtype=float)
    e_a = log_pow(eps_arr, alpha_arr)
    value = (alpha_arr - 1.0 - 2.0 * e_a) * (1.0 - e_a) ** 2 - 2.0 * e_a * eps_arr**2 * (
        1.0 - eps_arr**2
    )
    return float(value) if value.ndim == 0 else value


def m_partials(alpha, eps, step: float = PARTIAL_STEP) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference partial derivatives (dm/dalpha, dm/deps)."""
    alpha = np.asarray(alpha, dtype=float)
    eps = np.asarray(eps, dtype=float)
    d_alpha = (np.asarray(m(alpha + step, eps)) - np.asarray(m(alpha - step, eps))) / (2.0 * step)
    d_eps = (np.asarray(m(alpha, eps + step)) - np.asarray(m(alpha, eps - step))) / (2.0 * step)
    return d_alpha, d_eps


def monotonicity_audit(steps: int = 50) -> MonotonicityReport:
    """Check dm/dalpha > 0 and dm/deps < 0 on an interior steps x steps grid of
    (1, 2) x (0, 1/sqrt(3)).
    """
    alpha = np.linspace(1.0, 2.0, steps + 2)[1:-1]
    eps = np.linspace(0.0, EPS_CRITICAL, steps + 2)[1:-1]
    alpha_grid, eps_grid = np.meshgrid(alpha, eps, indexing="ij")
    d_alpha, d_eps = m_partials(alpha_grid, eps_grid)
    report = MonotonicityReport(
        steps=steps,
        min_dm_dalpha=float(np.min(d_alpha)),
        max_dm_deps=float(np.max(d_eps)),
        passed=bool(np.min(d_alpha) > 0.0 and np.max(d_eps) < 0.0),
    )
    _LOGGER.debug("Monotonicity audit: %s", report)
    return report


def alpha_star(eps: float, tol: float = 1e-12) -> AlphaCurvePoint:
    """Smallest alpha in (1, 2] with m(alpha, eps) >= 0, by bisection.

    m is increasing in alpha, so the root of m(., eps) is the threshold.

    Args:
        eps: Half-angle cosine in (0, 1/sqrt(3)).
        tol: Bracket width at which bisection stops.

    Returns:
        The curve point with residual |m(alpha_star, eps)|.

    Raises:
        NumericalError: NO_SIGN_CHANGE when m(., eps) keeps its sign on the bracket,
            which happens for eps >= 1/sqrt(3).
    """
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    if not tol > 0.0:
        raise ParameterError(f"tolerance must be positive, got {tol}")
    lo, hi = ALPHA_BRACKET
    m_lo, m_hi = m(lo, eps), m(hi, eps)
    if m_hi == 0.0:
        return AlphaCurvePoint(eps=eps, alpha_star=hi, residual=0.0)
    if m_lo * m_hi > 0.0:
        raise NumericalError(
            f"m(., {eps}) does not change sign on [{lo}, {hi}]",
            NumericalErrorReason.NO_SIGN_CHANGE,
            {"eps": eps, "m_lo": m_lo, "m_hi": m_hi},
        )
    root, result = optimize.bisect(
        m,
        lo,
        hi,
        args=(eps,),
        xtol=tol,
        rtol=4.0 * np.finfo(float).eps,
        maxiter=BISECTION_MAX_ITER,
        full_output=True,
        disp=False,
    )
    if not result.converged:
        raise NumericalError(
            f"bisection for alpha*({eps}) did not converge",
            NumericalErrorReason.NON_CONVERGENCE,
            {"eps": eps, "iterations": result.iterations},
        )
    _LOGGER.debug("alpha*(%g) = %.15g after %d iterations", eps, root, result.iterations)
    return AlphaCurvePoint(
        eps=eps, alpha_star=root, residual=abs(m(root, eps)), iterations=result.iterations
    )


def alpha_curve(
    eps_min: float, eps_max: float, steps: int, tol: float = 1e-12
) -> list[AlphaCurvePoint]:
    """alpha*(eps) at `steps` equally spaced eps values from eps_min to eps_max."""
    if steps < 1:
        raise ParameterError(f"steps must be at least 1, got {steps}")
    if not 0.0 < eps_min <= eps_max < EPS_CRITICAL:
        raise ParameterError(
            f"need 0 < eps_min <= eps_max < 1/sqrt(3), got {eps_min}, {eps_max}"
        )
    return [alpha_star(float(eps), tol) for eps in np.linspace(eps_min, eps_max, steps)]


def critical_angle_degrees() -> float:
    """2 arccos(1/sqrt(3)) in degrees, 109.4712206..."""
    return math.degrees(geometry.CRITICAL_ANGLE)


def is_admissible(w: WeightParams) -> bool:
    """eps < 1/sqrt(3) and m(alpha, eps) >= 0."""
    return w.below_critical_eps and m(w.alpha, w.eps) >= 0.0


def psd_eigenvalues(x, w: WeightParams) -> np.ndarray:
    """Ascending eigenvalues of D^2 varphi + f I at points (..., n)."""
    spatial = weights.varphi_eval(x, w.alpha, w.eps)
    f_value, _, _ = weights.f_eval(x, w.alpha, w.eps)
    matrices = spatial.hess_x + f_value[..., None, None] * np.eye(w.n)
    return jacobi_eigenvalues(matrices)


def hessian_psd_scan(
    w: WeightParams,
    count: int,
    seed: int,
    region: Optional[SamplingRegion] = None,
    tolerance: float = PSD_TOLERANCE,
) -> HessianScanReport:
    """Smallest eigenvalue of D^2 varphi + f I over seeded points of the cone with x_1 > 1.

    Args:
        w: Weight parameters; `a` plays no role.
        count: Number of sampled points, >= 1.
        seed: Sampling seed.
        region: Sampling box; the default box when omitted.
        tolerance: Passing floor for the smallest eigenvalue is -tolerance.

    Returns:
        The scan report.
    """
    if count < 1:
        raise ParameterError(f"count must be at least 1, got {count}")
    x, t = geometry.sample_arrays(w.cone, region or SamplingRegion(), count, seed)
    smallest = psd_eigenvalues(x, w)[:, 0]
    worst = int(np.argmin(smallest))
    report = HessianScanReport(
        params=w,
        points_checked=count,
        min_eigenvalue=float(smallest[worst]),
        argmin_point=tuple(float(v) for v in np.append(x[worst], t[worst])),
        tolerance=tolerance,
        passed=bool(smallest[worst] >= -tolerance),
    )
    _LOGGER.debug("PSD scan at %s: min eigenvalue %g", w, report.min_eigenvalue)
    return report


def a3_lower_bound_at(x, t, w: WeightParams) -> tuple[np.ndarray, np.ndarray]:
    """Lower bound 4 a^3 Lambda^3 alpha^3 r^(3 alpha - 4) eps^(2 alpha - 2) m(alpha, eps).

    Returns:
        (bound, scale) where scale is the bound without the factor m.
    """
    x = np.asarray(x, dtype=float)
    big_lambda, _, _ = weights.lam(t, w.alpha)
    r = stable_norm(x)
    scale = (
        4.0
        * w.a**3
        * big_lambda**3
        * w.alpha**3
        * r ** (3.0 * w.alpha - 4.0)
        * math.exp((2.0 * w.alpha - 2.0) * math.log(w.eps))
    )
    return scale * m(w.alpha, w.eps), scale


def a3_scan(  # pylint: disable=too-many-arguments
    w: WeightParams,
    count: int,
    seed: int,
    region: Optional[SamplingRegion] = None,
    boundary_band: Optional[float] = None,
    tolerance: float = A3_TOLERANCE,
) -> A3ScanReport:
    """Sample Q_theta and compare A_3 with zero and with its certificate lower bound.

    Args:
        w: Weight parameters, admissible or not.
        count: Number of sampled points, >= 1.
        seed: Sampling seed.
        region: Sampling box; the default box when omitted.
        boundary_band: When given, sample only eps < x_1/|x| <= eps + boundary_band,
            which is where A_3 turns negative for eps > 1/sqrt(3).
        tolerance: Relative slack for both comparisons.

    Returns:
        The scan report; passed iff A_3 >= 0 and A_3 >= bound everywhere.
    """
    if count < 1:
        raise ParameterError(f"count must be at least 1, got {count}")
    region = region or SamplingRegion()
    if boundary_band is None:
        x, t = geometry.sample_arrays(w.cone, region, count, seed)
    else:
        x, t = geometry.sample_boundary_band(w.cone, region, count, seed, boundary_band)
    a3, _, _, _ = weights.a_terms_at(x, t, w)
    bound, scale = a3_lower_bound_at(x, t, w)
    floor = tolerance * np.maximum(1.0, scale)

    certificate = m(w.alpha, w.eps)
    negative = a3 < -floor
    below = a3 < bound - floor
    gap = (a3 - bound) / np.maximum(1.0, np.abs(bound))
    worst = int(np.argmin(a3))
    report = A3ScanReport(
        params=w,
        points_checked=count,
        certificate=certificate,
        min_a3=float(a3[worst]),
        argmin_point=tuple(float(v) for v in np.append(x[worst], t[worst])),
        negative_count=int(np.count_nonzero(negative)),
        violations=int(np.count_nonzero(below)),
        min_bound_gap=float(np.min(gap)),
        passed=not (np.any(negative) or np.any(below)),
    )
    if not report.passed:
        _LOGGER.debug(
            "A3 scan at %s: %d negative, %d below bound",
            w,
            report.negative_count,
            report.violations,
        )
    return report


def lower_order_scan(
    w: WeightParams, count: int, seed: int, region: Optional[SamplingRegion] = None
) -> ScanReport:
    """Check (A_2 - |grad phi|^2) + A_1 >= -(a^2/4) Lambda Lambda' x_1^(2 alpha - 2)
    + a (alpha - 1) varphi on Q_theta.

    The inequality needs a large enough `a`; the scan reports, it does not assume.
    """
    x, t = geometry.sample_arrays(w.cone, region or SamplingRegion(), count, seed)
    _, a2, a1, _ = weights.a_terms_at(x, t, w)
    weight = weights.phi_total_at(x, t, w)
    spatial = weights.varphi_eval(x, w.alpha, w.eps)
    big_lambda, first, _ = weights.lam(t, w.alpha)
    lhs = a2 - np.sum(weight.grad_x**2, axis=-1) + a1
    rhs = (
        -0.25 * w.a * w.a * big_lambda * first * x[:, 0] ** (2.0 * w.alpha - 2.0)
        + w.a * (w.alpha - 1.0) * spatial.value
    )
    return weights.margin_report("lower-order", w, x, t, lhs, rhs)
