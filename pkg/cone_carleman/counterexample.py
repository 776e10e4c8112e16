"""Heat kernel, Appell transformation and the explicit bounded backward-heat solution
in a sector that vanishes at s = 0.

The solution is

    v(y, s) = Re (1/s) exp(-A z^alpha / s^alpha + |z|^2 / (4 s)),  z = (y_1 + shift) + i y_2,

with the principal branch of z^alpha. All exponents are handled in log space: the real
part above `EXPONENT_CLAMP` is clamped (and flagged), below -`EXPONENT_CLAMP` the value is
exactly 0.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from cone_carleman.errors import ParameterError
from cone_carleman.models.counterexample import (
    CounterexampleParams,
    ResidualReport,
    SectorBoundReport,
    VanishingReport,
)
from cone_carleman.numerics import observed_order

_LOGGER = logging.getLogger(__name__)

EXPONENT_CLAMP = 700.0
RESIDUAL_STEPS = (0.01, 0.005, 0.0025)
ORDER_WINDOW = (1.7, 2.3)
VANISHING_TIMES = (1e-1, 1e-2, 1e-3)
VANISHING_THRESHOLD = 1e-8

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]
"""Vectorised field (y of shape (..., n), s of shape (...)) -> values (...)."""


def _positive(s, name: str = "s") -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(~(s > 0.0)):
        raise ParameterError(f"{name} must be positive")
    return s


def heat_kernel(x, t, n: int) -> np.ndarray:
    """Gaussian kernel (4 pi t)^(-n/2) exp(-|x|^2 / (4 t)).

    Args:
        x: Points, shape (..., n).
        t: Times, t > 0.
        n: Dimension, must match the last axis of x.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise ParameterError(f"point dimension {x.shape[-1]} does not match n={n}")
    t = _positive(t, "t")
    return (4.0 * math.pi * t) ** (-0.5 * n) * np.exp(-np.sum(x * x, axis=-1) / (4.0 * t))


@dataclass(frozen=True)
class AppellTransform:
    """v(y, s) = u(y/s, 1/s) / Gamma(y/s, 1/s) for a forward heat solution u.

    If u solves u_t = Laplacian u then v solves v_s + Laplacian v = 0.
    """

    source: Evaluator
    n: int

    def __call__(self, y, s) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        s = _positive(s)
        x = y / s[..., None]
        t = 1.0 / s
        log_inverse_kernel = 0.5 * self.n * np.log(4.0 * math.pi / s) + np.sum(
            y * y, axis=-1
        ) / (4.0 * s)
        return self.source(x, t) * np.exp(log_inverse_kernel)


def appell(u: Evaluator, n: int) -> AppellTransform:
    """Backward-heat evaluator obtained from the forward heat solution `u`."""
    return AppellTransform(source=u, n=n)


def _shifted(y1, y2, p: CounterexampleParams) -> np.ndarray:
    z = (np.asarray(y1, dtype=float) + p.shift) + 1j * np.asarray(y2, dtype=float)
    if np.any(z == 0.0):
        raise ParameterError("the shifted point z must not be 0")
    return z


def escauriaza_exponent(y1, y2, s, p: CounterexampleParams) -> np.ndarray:
    """Complex exponent -A exp(alpha (Log z - log s)) + |z|^2 / (4 s) - log s."""
    s = _positive(s)
    z = _shifted(y1, y2, p)
    log_s = np.log(s)
    power = np.exp(p.alpha * (np.log(z) - log_s))
    return -p.A * power + (np.abs(z) ** 2) / (4.0 * s) - log_s


def escauriaza_log_modulus(y1, y2, s, p: CounterexampleParams) -> np.ndarray:
    """Real part of the exponent, i.e. log of the envelope of |v|."""
    return np.real(escauriaza_exponent(y1, y2, s, p))


def escauriaza_eval(y1, y2, s, p: CounterexampleParams) -> tuple[np.ndarray, bool, bool]:
    """Values of v with overflow and underflow flags.

    Returns:
        (values, saturated, underflowed).
    """
    exponent = escauriaza_exponent(y1, y2, s, p)
    real = np.real(exponent)
    saturated = bool(np.any(real > EXPONENT_CLAMP))
    underflowed = bool(np.any(real < -EXPONENT_CLAMP))
    if saturated:
        _LOGGER.warning("Exponent above %g clamped", EXPONENT_CLAMP)
    clamped = np.minimum(real, EXPONENT_CLAMP)
    values = np.where(
        real < -EXPONENT_CLAMP, 0.0, np.exp(clamped) * np.cos(np.imag(exponent))
    )
    return values, saturated, underflowed


def escauriaza_v(y1, y2, s, p: CounterexampleParams):
    """v(y, s) = Re (1/s) exp(-A z^alpha / s^alpha + |z|^2 / (4 s)).

    Returns:
        A float for scalar input, otherwise an array.
    """
    values, _, _ = escauriaza_eval(y1, y2, s, p)
    return float(values) if np.ndim(values) == 0 else values


def escauriaza_field(p: CounterexampleParams) -> Evaluator:
    """The solution as an `Evaluator` of y with shape (..., 2)."""

    def evaluate(y, s):
        y = np.asarray(y, dtype=float)
        values, _, _ = escauriaza_eval(y[..., 0], y[..., 1], s, p)
        return values

    return evaluate


def in_sector(y1, y2, p: CounterexampleParams, margin: float = 0.0):
    """Whether |arg z| <= pi / (2 alpha) - margin for z = (y_1 + shift) + i y_2."""
    z = (np.asarray(y1, dtype=float) + p.shift) + 1j * np.asarray(y2, dtype=float)
    inside = (np.abs(np.angle(z)) <= p.half_angle - margin) & (z != 0.0)
    return bool(inside) if inside.ndim == 0 else inside


def backward_residual(evaluator: Evaluator, y, s, step: float) -> np.ndarray:
    """Central-difference v_s + Laplacian v with one step size for every axis.

    Args:
        evaluator: The field.
        y: Points, shape (m, n).
        s: Times, shape (m,).
        step: Difference step.
    """
    y = np.asarray(y, dtype=float)
    s = np.asarray(s, dtype=float)
    center = evaluator(y, s)
    v_s = (evaluator(y, s + step) - evaluator(y, s - step)) / (2.0 * step)
    laplacian = np.zeros_like(center)
    for k in range(y.shape[-1]):
        shift = np.zeros_like(y)
        shift[..., k] = step
        laplacian += (evaluator(y + shift, s) - 2.0 * center + evaluator(y - shift, s)) / step**2
    return v_s + laplacian


def residual_order(
    evaluator: Evaluator, y, s, steps: Sequence[float] = RESIDUAL_STEPS
) -> ResidualReport:
    """RMS backward residual under step halving and the observed orders between levels."""
    residuals = [
        float(np.sqrt(np.mean(backward_residual(evaluator, y, s, h) ** 2))) for h in steps
    ]
    orders = [float(v) for v in observed_order(residuals, steps[0] / steps[1])]
    lo, hi = ORDER_WINDOW
    return ResidualReport(
        points=int(np.shape(s)[0]),
        steps=list(steps),
        rms_residuals=residuals,
        orders=orders,
        passed=all(lo <= order <= hi for order in orders),
    )


def sample_sector(  # pylint: disable=too-many-arguments
    p: CounterexampleParams,
    count: int,
    seed: int,
    angle_range: tuple[float, float],
    radius_range: tuple[float, float],
    s_range: tuple[float, float] = (0.0, 1.0),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded (y_1, y_2, s) with |arg z| in angle_range, |z| in radius_range, s in (s_lo, s_hi].

    The sign of arg z is drawn independently of its magnitude.
    """
    rng = np.random.default_rng(seed)
    angle = rng.uniform(angle_range[0], angle_range[1], count) * rng.choice((-1.0, 1.0), count)
    radius = rng.uniform(radius_range[0], radius_range[1], count)
    s = s_range[1] - (s_range[1] - s_range[0]) * rng.random(count)
    return radius * np.cos(angle) - p.shift, radius * np.sin(angle), s


def _log_abs_v(y1, y2, s, p: CounterexampleParams) -> np.ndarray:
    exponent = escauriaza_exponent(y1, y2, s, p)
    with np.errstate(divide="ignore"):
        return np.real(exponent) + np.log(np.abs(np.cos(np.imag(exponent))))


def bisector_log_sup(
    p: CounterexampleParams, s: float, r_min: float, r_max: float
) -> float:
    """max over r in [r_min, r_max] of the exponent along arg z = 0.

    The interior critical point is r* = (s^(alpha-1) / (2 A alpha))^(1/(alpha-2)); the
    bounded 1D optimiser is checked against it.
    """
    if not 0.0 < r_min < r_max:
        raise ParameterError(f"need 0 < r_min < r_max, got {r_min}, {r_max}")
    s = float(_positive(s))

    def negative_exponent(r: float) -> float:
        return p.A * (r / s) ** p.alpha - r * r / (4.0 * s) + math.log(s)

    result = optimize.minimize_scalar(
        negative_exponent, bounds=(r_min, r_max), method="bounded", options={"xatol": 1e-12}
    )
    critical = (s ** (p.alpha - 1.0) / (2.0 * p.A * p.alpha)) ** (1.0 / (p.alpha - 2.0))
    candidates = [r_min, r_max, float(result.x), min(max(critical, r_min), r_max)]
    return -min(negative_exponent(r) for r in candidates)


def _sup_outside(
    p: CounterexampleParams, margin: float, count: int, seed: int, radius_cap: float
) -> tuple[float, bool]:
    y1, y2, s = sample_sector(
        p,
        count,
        seed,
        (p.half_angle + margin, p.half_angle + 2.0 * margin),
        (p.shift if p.shift > 0.0 else 1.0, radius_cap),
    )
    log_values = _log_abs_v(y1, y2, s, p)
    saturated = bool(np.any(escauriaza_log_modulus(y1, y2, s, p) > EXPONENT_CLAMP))
    return float(np.max(log_values)), saturated


def sector_bound_scan(
    p: CounterexampleParams,
    margin: float,
    count: int,
    seed: int,
    radius_cap: float = 4.0,
) -> SectorBoundReport:
    """Sampled sup of |v| inside the shrunken sector and just outside the sector.

    Inside: |arg z| <= pi/(2 alpha) - margin, shift <= |z| <= radius_cap, s in (0, 1].
    Outside: |arg z| in [pi/(2 alpha) + margin, pi/(2 alpha) + 2 margin], same radii,
    repeated with the radius cap doubled. The outside suprema are kept as logarithms.

    Args:
        p: Solution parameters.
        margin: Angular margin in (0, pi/(2 alpha)).
        count: Samples per region.
        seed: Sampling seed.
        radius_cap: Largest |z| sampled.
    """
    if not 0.0 < margin < p.half_angle:
        raise ParameterError(f"margin must lie in (0, {p.half_angle}), got {margin}")
    r_min = p.shift if p.shift > 0.0 else 1.0
    if not radius_cap > r_min:
        raise ParameterError(f"radius cap must exceed {r_min}, got {radius_cap}")

    y1, y2, s = sample_sector(p, count, seed, (0.0, p.half_angle - margin), (r_min, radius_cap))
    inside, saturated_in, underflowed = escauriaza_eval(y1, y2, s, p)
    log_out, saturated_out = _sup_outside(p, margin, count, seed, radius_cap)
    log_out_doubled, saturated_doubled = _sup_outside(p, margin, count, seed, 2.0 * radius_cap)

    report = SectorBoundReport(
        params=p,
        margin=margin,
        count=count,
        radius_cap=radius_cap,
        sup_inside=float(np.max(np.abs(inside))),
        log_sup_outside=log_out,
        log_sup_outside_doubled=log_out_doubled,
        bisector_log_sup=bisector_log_sup(p, 1.0, r_min, radius_cap),
        saturated=saturated_in or saturated_out or saturated_doubled,
        underflowed=underflowed,
    )
    _LOGGER.debug("Sector bound scan: %s", report)
    return report


def sector_slice(
    p: CounterexampleParams, s: float, radius: float, nr: int, nw: int
) -> list[tuple[float, float, float, float]]:
    """Rows (y_1, y_2, s, v) on a polar grid of the bounded sector around z = shift.

    Radii run over (0, radius] from the shifted origin and angles over the closed sector.
    """
    radii = np.linspace(radius / nr, radius, nr)
    angles = np.linspace(-p.half_angle, p.half_angle, nw + 1)
    r_grid, w_grid = np.meshgrid(radii, angles, indexing="ij")
    y1 = (r_grid * np.cos(w_grid) - p.shift).ravel()
    y2 = (r_grid * np.sin(w_grid)).ravel()
    values, _, _ = escauriaza_eval(y1, y2, np.full(y1.shape, s), p)
    return [(float(a), float(b), float(s), float(v)) for a, b, v in zip(y1, y2, values)]


def vanishing_sweep(  # pylint: disable=too-many-arguments
    p: CounterexampleParams,
    margin: float,
    count: int,
    seed: int,
    s_values: Sequence[float] = VANISHING_TIMES,
    radius_cap: float = 2.0,
) -> VanishingReport:
    """max |v| over `count` fixed in-sector points for each s in decreasing `s_values`."""
    if not 0.0 < margin < p.half_angle:
        raise ParameterError(f"margin must lie in (0, {p.half_angle}), got {margin}")
    r_min = p.shift if p.shift > 0.0 else 1.0
    y1, y2, _ = sample_sector(p, count, seed, (0.0, p.half_angle - margin), (r_min, radius_cap))
    s_values = sorted((float(s) for s in s_values), reverse=True)
    max_abs = []
    for s in s_values:
        values, _, _ = escauriaza_eval(y1, y2, np.full(y1.shape, s), p)
        max_abs.append(float(np.max(np.abs(values))) if values.size else 0.0)
    return VanishingReport(
        params=p,
        points=count,
        s_values=s_values,
        max_abs=max_abs,
        threshold=VANISHING_THRESHOLD,
    )
