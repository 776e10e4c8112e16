"""Classes describing cones, space-time points and sampling regions."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from cone_carleman.errors import ParameterError


@dataclass(frozen=True)
class ConeSpec:
    """The open cone {x : x_1 > |x| cos(theta/2)} in R^n.

    `eps` and `sin_half` are cached; for theta = pi they are exactly 0 and 1 so the
    half-space case is free of rounding.
    """

    n: int
    """Spatial dimension, at least 2."""
    theta: float
    """Opening angle in radians, in (0, pi]."""
    eps: float = field(init=False)
    """cos(theta / 2)."""
    sin_half: float = field(init=False)
    """sin(theta / 2)."""

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"cone dimension must be an integer >= 2, got {self.n}")
        if not 0.0 < self.theta <= math.pi:
            raise ParameterError(f"opening angle must lie in (0, pi], got {self.theta}")
        if self.theta == math.pi:
            eps, sin_half = 0.0, 1.0
        else:
            eps, sin_half = math.cos(self.theta / 2.0), math.sin(self.theta / 2.0)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "sin_half", sin_half)

    @staticmethod
    def from_eps(n: int, eps: float) -> "ConeSpec":
        """Build the cone whose half-angle cosine is `eps`."""
        if not 0.0 <= eps < 1.0:
            raise ParameterError(f"eps must lie in [0, 1), got {eps}")
        return ConeSpec(n=n, theta=math.pi if eps == 0.0 else 2.0 * math.acos(eps))

    @property
    def degrees(self) -> float:
        """Opening angle in degrees."""
        return math.degrees(self.theta)


@dataclass(frozen=True)
class SpaceTimePoint:
    """A point (x, t) of R^n x (0, T)."""

    x: tuple[float, ...]
    t: float

    @staticmethod
    def from_array(x, t: float) -> "SpaceTimePoint":
        """Build a point from any sequence of coordinates."""
        return SpaceTimePoint(x=tuple(float(v) for v in np.ravel(x)), t=float(t))

    def as_arrays(self) -> tuple[np.ndarray, float]:
        """Return (x as a float array, t)."""
        return np.asarray(self.x, dtype=float), self.t


@dataclass(frozen=True)
class SamplingRegion:
    """Box in which `geometry.sample_points` draws candidates before rejection."""

    x1_range: tuple[float, float] = (1.0, 10.0)
    t_range: tuple[float, float] = (1e-3, 1.0 - 1e-3)
    d_min: float = 0.0
    """Minimum distance to the cone boundary."""
    xp_half_width: Optional[float] = None
    """Half-width of the box for x_2..x_n; defaults to the upper end of x1_range."""
