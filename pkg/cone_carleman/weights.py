"""Carleman weights and the operators built from them.

The weight of the cone estimate is

    phi(x, t) = a Lambda(t) varphi(x) + t^2,
    Lambda(t) = (1 - t) / t^(alpha/2),
    varphi(x) = x_1^alpha - eps^alpha |x|^alpha,

and the conjugated heat operator L splits into the symmetric part
S v = Laplacian v + |grad phi|^2 v - phi_t v and the skew part
A v = v_t - 2 grad phi . grad v - (Laplacian phi) v.

Every evaluator comes in an array form (suffix `_at`, points along the last axis of
`x`, times broadcast against the batch shape) and, for the operations that act on a
single space-time point, a `SpaceTimePoint` form.
"""

import logging
import math
from typing import Optional, Protocol

import numpy as np

from cone_carleman import geometry
from cone_carleman.errors import ParameterError
from cone_carleman.models.certificate import (
    MAX_REPORTED_VIOLATIONS,
    GCheckReport,
    LambdaScanReport,
    ScanReport,
)
from cone_carleman.models.cone import SamplingRegion, SpaceTimePoint
from cone_carleman.models.weight import Jet, WeightEval, WeightParams
from cone_carleman.numerics import stable_norm

_LOGGER = logging.getLogger(__name__)

LOG_H_THREE_HALVES = math.log(1.5) - 1.0 / 6.0
"""log h(3/2)."""

SCAN_TOLERANCE = 1e-10
"""Relative slack below which a scanned margin counts as a violation."""

G_CHECK_TOLERANCE = 1e-12


class SpaceTimeField(Protocol):
    """A scalar field with exact first time derivative, gradient and Laplacian."""

    def jet(self, x: np.ndarray, t: np.ndarray) -> Jet:
        """Evaluate the field and its derivatives at points (..., n) and times (...)."""
        ...  # pylint: disable=unnecessary-ellipsis


def _positive_times(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0.0)):
        raise ParameterError("time must be positive")
    return t


def log_h(t) -> np.ndarray:
    """log h(t) = log t + (1 - t) / 3."""
    t = _positive_times(t)
    return np.log(t) + (1.0 - t) / 3.0


def h(t):
    """h(t) = t exp((1 - t) / 3), for t > 0."""
    t = _positive_times(t)
    return t * np.exp((1.0 - t) / 3.0)


def h_prime(t):
    """h'(t) = exp((1 - t) / 3) (1 - t / 3)."""
    t = _positive_times(t)
    return np.exp((1.0 - t) / 3.0) * (1.0 - t / 3.0)


def lam(t, alpha: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lambda(t) = (1 - t) t^(-alpha/2) with its first two derivatives.

    The negative powers of t are formed as exp(-k log t), once per power.

    Args:
        t: Times, t > 0.
        alpha: Exponent of the weight.

    Returns:
        (Lambda, Lambda', Lambda'').
    """
    t = _positive_times(t)
    half = 0.5 * alpha
    log_t = np.log(t)
    t_p0 = np.exp(-half * log_t)
    t_p1 = np.exp(-(half + 1.0) * log_t)
    t_p2 = np.exp(-(half + 2.0) * log_t)
    value = (1.0 - t) * t_p0
    first = -half * t_p1 - (1.0 - half) * t_p0
    second = half * (half + 1.0) * t_p2 + half * (1.0 - half) * t_p1
    return value, first, second


def _eps_power(eps: float, alpha: float) -> float:
    return math.exp(alpha * math.log(eps)) if eps > 0.0 else 0.0


def varphi_value(x, alpha: float, eps: float) -> np.ndarray:
    """varphi(x) alone, for integrands that need no derivatives."""
    x = np.asarray(x, dtype=float)
    x1 = x[..., 0]
    if np.any(~(x1 > 0.0)):
        raise ParameterError("varphi is only evaluated where x_1 > 0")
    return x1**alpha - _eps_power(eps, alpha) * stable_norm(x) ** alpha


def varphi_eval(x, alpha: float, eps: float) -> WeightEval:
    """Spatial weight varphi(x) = x_1^alpha - eps^alpha r^alpha and its derivatives.

    Args:
        x: Points of shape (..., n) with x_1 > 0.
        alpha: Exponent.
        eps: Half-angle cosine of the cone.

    Returns:
        A `WeightEval` with zero time derivatives. `bilaplacian` is
        alpha(alpha-1)(alpha-2)(alpha-3) x_1^(alpha-4)
        - eps^alpha alpha(alpha+n-2)(alpha-2)(alpha+n-4) r^(alpha-4).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    x1 = x[..., 0]
    if np.any(~(x1 > 0.0)):
        raise ParameterError("varphi is only evaluated where x_1 > 0")
    r = stable_norm(x)
    e_a = _eps_power(eps, alpha)

    radial = alpha * e_a * r ** (alpha - 2.0)
    value = x1**alpha - e_a * r**alpha

    grad = -radial[..., None] * x
    grad[..., 0] += alpha * x1 ** (alpha - 1.0)

    hess = -radial[..., None, None] * np.eye(n)
    hess += (alpha * (2.0 - alpha) * e_a * r ** (alpha - 4.0))[..., None, None] * (
        x[..., :, None] * x[..., None, :]
    )
    hess[..., 0, 0] += alpha * (alpha - 1.0) * x1 ** (alpha - 2.0)

    laplacian = alpha * (alpha - 1.0) * x1 ** (alpha - 2.0) - e_a * alpha * (
        alpha + n - 2.0
    ) * r ** (alpha - 2.0)
    bilaplacian = alpha * (alpha - 1.0) * (alpha - 2.0) * (alpha - 3.0) * x1 ** (
        alpha - 4.0
    ) - e_a * alpha * (alpha + n - 2.0) * (alpha - 2.0) * (alpha + n - 4.0) * r ** (alpha - 4.0)

    zero = np.zeros_like(value)
    return WeightEval(
        value=value,
        grad_x=grad,
        hess_x=hess,
        dt=zero,
        laplacian=laplacian,
        bilaplacian=bilaplacian,
        dtt=zero,
        dt_grad_sq=zero,
    )


def f_eval(x, alpha: float, eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """f(x) = alpha eps^alpha r^(alpha-2), with gradient and Laplacian.

    Raises:
        ParameterError: At r = 0.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    r = stable_norm(x)
    if np.any(~(r > 0.0)):
        raise ParameterError("f is singular at the origin")
    scale = alpha * _eps_power(eps, alpha)
    value = scale * r ** (alpha - 2.0)
    grad = (scale * (alpha - 2.0) * r ** (alpha - 4.0))[..., None] * x
    laplacian = scale * (alpha - 2.0) * (alpha + n - 4.0) * r ** (alpha - 4.0)
    return value, grad, laplacian


def _check_dimension(x: np.ndarray, w: WeightParams) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != w.n:
        raise ParameterError(f"point dimension {x.shape[-1]} does not match weight dimension {w.n}")
    return x


def big_f_at(x, t, w: WeightParams) -> np.ndarray:
    """Compensator F = 4 a Lambda(t) f(x) + 1."""
    x = _check_dimension(x, w)
    value, _, _ = f_eval(x, w.alpha, w.eps)
    big_lambda, _, _ = lam(t, w.alpha)
    return 4.0 * w.a * big_lambda * value + 1.0


def big_f(p: SpaceTimePoint, w: WeightParams) -> float:
    """Compensator F at one point of Q_theta."""
    return float(big_f_at(*p.as_arrays(), w))


def phi_total_at(x, t, w: WeightParams) -> WeightEval:
    """Full weight a Lambda(t) varphi(x) + t^2 with its space and time derivatives.

    Time enters the spatial part only through Lambda, so
    d/dt |grad phi|^2 = 2 a^2 Lambda Lambda' |grad varphi|^2.
    """
    x = _check_dimension(x, w)
    t = np.asarray(t, dtype=float)
    spatial = varphi_eval(x, w.alpha, w.eps)
    big_lambda, first, second = lam(t, w.alpha)
    a_lam = w.a * big_lambda
    grad_sq = np.sum(spatial.grad_x**2, axis=-1)
    return WeightEval(
        value=a_lam * spatial.value + t * t,
        grad_x=a_lam[..., None] * spatial.grad_x,
        hess_x=a_lam[..., None, None] * spatial.hess_x,
        dt=w.a * first * spatial.value + 2.0 * t,
        laplacian=a_lam * spatial.laplacian,
        bilaplacian=a_lam * spatial.bilaplacian,
        dtt=w.a * second * spatial.value + 2.0,
        dt_grad_sq=2.0 * w.a * w.a * big_lambda * first * grad_sq,
    )


def phi_total(p: SpaceTimePoint, w: WeightParams) -> WeightEval:
    """Full weight evaluated at one space-time point."""
    return phi_total_at(*p.as_arrays(), w)


def _jet_at(v: SpaceTimeField, p: SpaceTimePoint) -> tuple[Jet, np.ndarray, np.ndarray]:
    x, t = p.as_arrays()
    return v.jet(x, np.asarray(t)), x, np.asarray(t)


def op_s_at(jet: Jet, weight: WeightEval) -> np.ndarray:
    """S v = Laplacian v + |grad phi|^2 v - phi_t v."""
    grad_sq = np.sum(weight.grad_x**2, axis=-1)
    return jet.laplacian + (grad_sq - weight.dt) * jet.value


def op_a_at(jet: Jet, weight: WeightEval) -> np.ndarray:
    """A v = v_t - 2 grad phi . grad v - (Laplacian phi) v."""
    return jet.dt - 2.0 * np.sum(weight.grad_x * jet.grad, axis=-1) - weight.laplacian * jet.value


def commutator_integrand_at(jet: Jet, weight: WeightEval) -> np.ndarray:
    """Pointwise integrand of ([S, A] v, v).

    4 phi_kl v_k v_l + (4 phi_k phi_kl phi_l - Bilaplacian phi + phi_tt
    - 2 d/dt |grad phi|^2) v^2.
    """
    hess_grad = np.einsum("...kl,...l->...k", weight.hess_x, jet.grad)
    gradient_form = np.sum(jet.grad * hess_grad, axis=-1)
    weight_form = np.einsum("...k,...kl,...l->...", weight.grad_x, weight.hess_x, weight.grad_x)
    potential = 4.0 * weight_form - weight.bilaplacian + weight.dtt - 2.0 * weight.dt_grad_sq
    return 4.0 * gradient_form + potential * jet.value**2


# pylint: disable-next=invalid-name
def op_S(v: SpaceTimeField, p: SpaceTimePoint, w: WeightParams) -> float:
    """Symmetric part of the conjugated operator at one point."""
    jet, x, t = _jet_at(v, p)
    return float(op_s_at(jet, phi_total_at(x, t, w)))


# pylint: disable-next=invalid-name
def op_A(v: SpaceTimeField, p: SpaceTimePoint, w: WeightParams) -> float:
    """Skew part of the conjugated operator at one point."""
    jet, x, t = _jet_at(v, p)
    return float(op_a_at(jet, phi_total_at(x, t, w)))


# pylint: disable-next=invalid-name
def op_L(v: SpaceTimeField, p: SpaceTimePoint, w: WeightParams) -> float:
    """L v = S v + A v at one point."""
    jet, x, t = _jet_at(v, p)
    weight = phi_total_at(x, t, w)
    return float(op_s_at(jet, weight) + op_a_at(jet, weight))


def commutator_integrand(v: SpaceTimeField, p: SpaceTimePoint, w: WeightParams) -> float:
    """Integrand of ([S, A] v, v) at one point."""
    jet, x, t = _jet_at(v, p)
    return float(commutator_integrand_at(jet, phi_total_at(x, t, w)))


class ConjugatedField:
    """v = e^phi u for a field u with exact derivatives.

    For this v, L v = e^phi (u_t + Laplacian u).
    """

    def __init__(self, u: SpaceTimeField, w: WeightParams) -> None:
        """Wrap `u` with the weight `w`."""
        self.u = u
        self.w = w

    def jet(self, x: np.ndarray, t: np.ndarray) -> Jet:
        """Derivatives of e^phi u by the product rule."""
        weight = phi_total_at(x, t, self.w)
        inner = self.u.jet(x, t)
        scale = np.exp(weight.value)
        grad_sq = np.sum(weight.grad_x**2, axis=-1)
        cross = np.sum(weight.grad_x * inner.grad, axis=-1)
        return Jet(
            value=scale * inner.value,
            dt=scale * (inner.dt + weight.dt * inner.value),
            grad=scale[..., None] * (inner.grad + weight.grad_x * inner.value[..., None]),
            laplacian=scale
            * (inner.laplacian + 2.0 * cross + (weight.laplacian + grad_sq) * inner.value),
        )


def a_terms_at(x, t, w: WeightParams) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Grouped coefficients (A_3, A_2, A_1, A_0) of the commutator lower bound.

    A_3 = 4 a^3 Lambda^3 (varphi_kl varphi_k varphi_l - f |grad varphi|^2)
    A_2 = -4 a^2 Lambda Lambda' |grad varphi|^2 + 4 a^2 Lambda Lambda' varphi f
          - 4 a^2 Lambda^2 f^2 - a^2 Lambda^2 |grad varphi|^2
    A_1 = -a Lambda Bilaplacian varphi + a Lambda'' varphi - 2 a Lambda Laplacian f
          + a Lambda' varphi - 2 a Lambda f + 8 a t Lambda f
    A_0 = 7/4 + 2 t
    """
    x = _check_dimension(x, w)
    t = np.asarray(t, dtype=float)
    a = w.a
    spatial = varphi_eval(x, w.alpha, w.eps)
    f_value, _, f_laplacian = f_eval(x, w.alpha, w.eps)
    big_lambda, first, second = lam(t, w.alpha)

    grad_sq = np.sum(spatial.grad_x**2, axis=-1)
    hess_form = np.einsum("...k,...kl,...l->...", spatial.grad_x, spatial.hess_x, spatial.grad_x)
    a3 = 4.0 * a**3 * big_lambda**3 * (hess_form - f_value * grad_sq)
    a2 = (
        -4.0 * a * a * big_lambda * first * grad_sq
        + 4.0 * a * a * big_lambda * first * spatial.value * f_value
        - 4.0 * a * a * big_lambda**2 * f_value**2
        - a * a * big_lambda**2 * grad_sq
    )
    a1 = (
        -a * big_lambda * spatial.bilaplacian
        + a * second * spatial.value
        - 2.0 * a * big_lambda * f_laplacian
        + a * first * spatial.value
        - 2.0 * a * big_lambda * f_value
        + 8.0 * a * t * big_lambda * f_value
    )
    a0 = 1.75 + 2.0 * t
    return a3, a2, a1, np.broadcast_to(a0, np.shape(a3)).copy()


def a_terms(p: SpaceTimePoint, w: WeightParams) -> tuple[float, float, float, float]:
    """(A_3, A_2, A_1, A_0) at one point of Q_theta."""
    return tuple(float(term) for term in a_terms_at(*p.as_arrays(), w))


def margin_report(  # pylint: disable=too-many-arguments
    name: str,
    params: Optional[WeightParams],
    x: np.ndarray,
    t: np.ndarray,
    lhs: np.ndarray,
    rhs: np.ndarray,
    tolerance: float = SCAN_TOLERANCE,
) -> ScanReport:
    """Summarise lhs >= rhs over sampled points.

    Margins are (lhs - rhs) / max(1, |rhs|); a margin below -tolerance is a violation.
    """
    margin = (lhs - rhs) / np.maximum(1.0, np.abs(rhs))
    bad = np.flatnonzero(margin < -tolerance)
    if margin.size == 0:
        return ScanReport(name, params, 0, math.inf, (), 0, True)
    worst = int(np.argmin(margin))
    points = np.concatenate([x, t[:, None]], axis=1)
    return ScanReport(
        name=name,
        params=params,
        points_checked=int(margin.size),
        min_margin=float(margin[worst]),
        argmin_point=tuple(float(v) for v in points[worst]),
        violations=int(bad.size),
        passed=bad.size == 0,
        violation_points=[
            tuple(float(v) for v in points[i]) for i in bad[:MAX_REPORTED_VIOLATIONS]
        ],
    )


def a2_bound_scan(
    w: WeightParams, count: int, seed: int, region: Optional[SamplingRegion] = None
) -> ScanReport:
    """Check A_2 - |grad phi|^2 >= -(a^2/2) Lambda Lambda' x_1^(2 alpha - 2) on Q_theta."""
    x, t = geometry.sample_arrays(w.cone, region or SamplingRegion(), count, seed)
    _, a2, _, _ = a_terms_at(x, t, w)
    weight = phi_total_at(x, t, w)
    big_lambda, first, _ = lam(t, w.alpha)
    lhs = a2 - np.sum(weight.grad_x**2, axis=-1)
    rhs = -0.5 * w.a * w.a * big_lambda * first * x[:, 0] ** (2.0 * w.alpha - 2.0)
    report = margin_report("a2-bound", w, x, t, lhs, rhs)
    _LOGGER.debug("A2 bound scan: %d violations of %d", report.violations, count)
    return report


def _open_unit_grid(points: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, points + 2)[1:-1]


def lambda_ratio_scan(alpha: float, points: int = 10_000) -> LambdaScanReport:
    """Grid check of |Lambda / Lambda'| < 1 / (2 alpha) on (0, 1)."""
    t = _open_unit_grid(points)
    value, first, _ = lam(t, alpha)
    margin = 1.0 / (2.0 * alpha) - np.abs(value / first)
    worst = int(np.argmin(margin))
    return LambdaScanReport(
        name="lambda-ratio",
        alpha=alpha,
        points_checked=points,
        min_margin=float(margin[worst]),
        argmin_t=float(t[worst]),
        passed=bool(margin[worst] > 0.0),
    )


def lambda_sum_scan(alpha: float, points: int = 10_000) -> LambdaScanReport:
    """Grid check of Lambda'' + Lambda' > alpha - 1 and |Lambda'| >= 1 on (0, 1).

    The reported margin is the smaller of the two.
    """
    t = _open_unit_grid(points)
    _, first, second = lam(t, alpha)
    sum_margin = second + first - (alpha - 1.0)
    slope_margin = np.abs(first) - 1.0
    margin = np.minimum(sum_margin, slope_margin)
    worst = int(np.argmin(margin))
    return LambdaScanReport(
        name="lambda-sum",
        alpha=alpha,
        points_checked=points,
        min_margin=float(margin[worst]),
        argmin_t=float(t[worst]),
        passed=bool(np.min(sum_margin) > 0.0 and np.min(slope_margin) >= -1e-14),
    )


def lemma22_g_check(
    beta: float,
    rho: float,
    a: Optional[float] = None,
    grid_points: int = 20_000,
) -> GCheckReport:
    """Scan g(s) = h(s)^(-2a) exp(-rho^2 / (32 s)) and g'(s) on (0, 2].

    With a = beta rho^2 / (2 log h(3/2)), g' >= 0 on (0, 2] holds exactly when
    beta <= log h(3/2) / 24; the printed sufficient bound log h(3/2) / 64 is reported
    alongside but not enforced.

    Args:
        beta: Decay rate, > 0.
        rho: Radius parameter, > 2.
        a: Carleman strength; must equal beta rho^2 / (2 log h(3/2)) when given.
        grid_points: Number of uniformly spaced s values in (0, 2].

    Returns:
        The report; passed iff g(2) < 1 and min g' >= -1e-12.
    """
    if not rho > 2.0:
        raise ParameterError(f"rho must exceed 2, got {rho}")
    if not beta > 0.0:
        raise ParameterError(f"beta must be positive, got {beta}")
    expected_a = beta * rho * rho / (2.0 * LOG_H_THREE_HALVES)
    if a is None:
        a = expected_a
    elif not math.isclose(a, expected_a, rel_tol=1e-9):
        raise ParameterError(f"a must equal beta rho^2 / (2 log h(3/2)) = {expected_a}, got {a}")

    s = np.linspace(2.0 / grid_points, 2.0, grid_points)
    log_g = -2.0 * a * log_h(s) - rho * rho / (32.0 * s)
    g = np.exp(log_g)
    g_prime = g * (-2.0 * a * (1.0 / s - 1.0 / 3.0) + rho * rho / (32.0 * s * s))
    worst = int(np.argmin(g_prime))
    g_at_2 = float(g[-1])
    report = GCheckReport(
        a=a,
        beta=beta,
        rho=rho,
        g_at_2=g_at_2,
        min_gprime=float(g_prime[worst]),
        argmin_s=float(s[worst]),
        beta_bound=LOG_H_THREE_HALVES / 64.0,
        grid_points=grid_points,
        passed=bool(g_at_2 < 1.0 and g_prime[worst] >= -G_CHECK_TOLERANCE),
    )
    _LOGGER.debug("g check beta=%g rho=%g: %s", beta, rho, report)
    return report
