"""Cone domains, distance to the boundary, the truncated space-time domain Q_theta and
deterministic sampling inside these sets.

All predicates accept a single point (shape (n,)) or a batch (shape (..., n)); a single
point gives a plain `bool`/`float`, a batch gives an array.
"""

import logging
import math
from typing import Union

import numpy as np

from cone_carleman.errors import NumericalError, NumericalErrorReason, ParameterError
from cone_carleman.models.cone import ConeSpec, SamplingRegion, SpaceTimePoint
from cone_carleman.numerics import stable_norm

_LOGGER = logging.getLogger(__name__)

CRITICAL_ANGLE = 2.0 * math.acos(1.0 / math.sqrt(3.0))
"""2 arccos(1/sqrt(3)) in radians."""

SAMPLING_DRAW_CAP = 1_000_000
"""Maximum number of candidate draws per sampling request."""

_MIN_BATCH = 1024


def _points(cone: ConeSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != cone.n:
        raise ParameterError(
            f"point dimension {x.shape[-1] if x.ndim else 0} does not match cone dimension {cone.n}"
        )
    return x


def _scalar_or_array(result: np.ndarray, x: np.ndarray) -> Union[bool, float, np.ndarray]:
    if x.ndim == 1:
        return result.item()
    return result


def cone_contains(cone: ConeSpec, x) -> Union[bool, np.ndarray]:
    """Whether x_1 > |x| * eps (strict, so the boundary ray is outside)."""
    x = _points(cone, x)
    return _scalar_or_array(x[..., 0] > stable_norm(x) * cone.eps, x)


def distance_to_boundary(cone: ConeSpec, x) -> Union[float, np.ndarray]:
    """Signed distance d_theta(x) = x_1 sin(theta/2) - |x'| cos(theta/2).

    Negative values mark exterior points.
    """
    x = _points(cone, x)
    return _scalar_or_array(x[..., 0] * cone.sin_half - stable_norm(x[..., 1:]) * cone.eps, x)


def offset_cone_contains(cone: ConeSpec, c: float, x) -> Union[bool, np.ndarray]:
    """Whether d_theta(x) > c, i.e. membership in the offset cone O_theta^{+c}."""
    if c < 0.0:
        raise ParameterError(f"offset must be non-negative, got {c}")
    x = _points(cone, x)
    return _scalar_or_array(
        np.asarray(distance_to_boundary(cone, x.reshape((-1, cone.n)))).reshape(x.shape[:-1]) > c,
        x,
    )


def q_theta_mask(cone: ConeSpec, x, t) -> np.ndarray:
    """Vectorised membership in Q_theta = (O_theta and {x_1 > 1}) x (0, 1)."""
    x = _points(cone, x)
    t = np.asarray(t, dtype=float)
    inside = x[..., 0] > stable_norm(x) * cone.eps
    return inside & (x[..., 0] > 1.0) & (t > 0.0) & (t < 1.0)


def q_theta_contains(cone: ConeSpec, p: SpaceTimePoint) -> bool:
    """Whether the point lies in Q_theta."""
    x, t = p.as_arrays()
    return bool(q_theta_mask(cone, x, t))


def median_angle(theta: float) -> float:
    """Midpoint delta of theta and the critical angle 2 arccos(1/sqrt(3)).

    Args:
        theta: Opening angle in (2 arccos(1/sqrt(3)), pi].

    Returns:
        (theta + 2 arccos(1/sqrt(3))) / 2.
    """
    if not CRITICAL_ANGLE < theta <= math.pi:
        raise ParameterError(
            f"theta must lie in ({CRITICAL_ANGLE}, pi] for the median angle, got {theta}"
        )
    return 0.5 * (theta + CRITICAL_ANGLE)


def beta_prime(beta: float, theta: float, delta: float) -> float:
    """Decay rate beta * sin^2((theta - delta) / 2) inherited by the smaller cone."""
    if not 0.0 < delta < theta:
        raise ParameterError(f"need 0 < delta < theta, got delta={delta}, theta={theta}")
    return beta * math.sin(0.5 * (theta - delta)) ** 2


def sample_arrays(
    cone: ConeSpec, region: SamplingRegion, count: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded rejection sampling of Q_theta points with d_theta >= region.d_min.

    Args:
        cone: The cone.
        region: Candidate box and distance floor.
        count: Number of points wanted.
        seed: Seed for `numpy.random.default_rng`.

    Returns:
        (x, t) with shapes (count, n) and (count,).

    Raises:
        NumericalError: EMPTY_REGION when `SAMPLING_DRAW_CAP` draws do not produce
            `count` points.
    """
    if count < 0:
        raise ParameterError(f"count must be non-negative, got {count}")
    if count == 0:
        return np.empty((0, cone.n)), np.empty(0)

    x1_lo, x1_hi = region.x1_range
    t_lo, t_hi = region.t_range
    if not (x1_lo < x1_hi and t_lo < t_hi):
        raise ParameterError(f"degenerate sampling region {region}")
    half_width = x1_hi if region.xp_half_width is None else region.xp_half_width

    rng = np.random.default_rng(seed)
    batch = max(_MIN_BATCH, 4 * count)
    accepted_x, accepted_t = [], []
    have, drawn = 0, 0
    while have < count:
        if drawn >= SAMPLING_DRAW_CAP:
            raise NumericalError(
                f"only {have} of {count} points found in {drawn} draws",
                NumericalErrorReason.EMPTY_REGION,
                {"region": region, "cone": cone},
            )
        size = min(batch, SAMPLING_DRAW_CAP - drawn)
        x = np.empty((size, cone.n))
        x[:, 0] = rng.uniform(x1_lo, x1_hi, size)
        x[:, 1:] = rng.uniform(-half_width, half_width, (size, cone.n - 1))
        t = rng.uniform(t_lo, t_hi, size)
        drawn += size
        keep = q_theta_mask(cone, x, t) & (distance_to_boundary(cone, x) >= region.d_min)
        accepted_x.append(x[keep])
        accepted_t.append(t[keep])
        have += int(np.count_nonzero(keep))

    _LOGGER.debug("Sampled %d points of Q_theta in %d draws", count, drawn)
    return np.concatenate(accepted_x)[:count], np.concatenate(accepted_t)[:count]


def sample_boundary_band(
    cone: ConeSpec, region: SamplingRegion, count: int, seed: int, band: float
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded points of Q_theta with eps < x_1 / |x| <= eps + band.

    x_1 is drawn from region.x1_range and t from region.t_range; the direction of x'
    is uniform on the sphere of R^(n-1).
    """
    if not 0.0 < band <= 1.0 - cone.eps:
        raise ParameterError(f"band must lie in (0, 1 - eps], got {band}")
    if count < 0:
        raise ParameterError(f"count must be non-negative, got {count}")
    rng = np.random.default_rng(seed)
    cosine = cone.eps + band * (1.0 - rng.random(count))
    # Q_theta needs x_1 > 1 and t > 0 strictly; uniform draws include their lower end
    x1 = rng.uniform(max(region.x1_range[0], np.nextafter(1.0, np.inf)), region.x1_range[1], count)
    t = rng.uniform(max(region.t_range[0], np.nextafter(0.0, 1.0)), region.t_range[1], count)
    direction = rng.standard_normal((count, cone.n - 1))
    direction /= np.maximum(stable_norm(direction), np.finfo(float).tiny)[:, None]
    x = np.empty((count, cone.n))
    x[:, 0] = x1
    x[:, 1:] = (x1 * np.sqrt(1.0 - cosine**2) / cosine)[:, None] * direction
    return x, t


def sample_points(
    cone: ConeSpec, region: SamplingRegion, count: int, seed: int
) -> list[SpaceTimePoint]:
    """Seeded list of points of Q_theta with d_theta >= region.d_min.

    See `sample_arrays` for the array form used by the scans.
    """
    x, t = sample_arrays(cone, region, count, seed)
    return [SpaceTimePoint.from_array(xi, ti) for xi, ti in zip(x, t)]
