"""Classes describing the explicit backward-heat solution and its scans."""

import math
from dataclasses import dataclass, field

from cone_carleman.errors import ParameterError


@dataclass(frozen=True)
class CounterexampleParams:
    """Parameters of v(y, s) = Re (1/s) exp(-A z^alpha / s^alpha + |z|^2 / (4 s))."""

    A: float  # pylint: disable=invalid-name
    """Amplitude of the decaying term, > 0."""
    alpha: float
    """Sector exponent, > 2."""
    shift: float = 1.0
    """Translation of y_1, >= 0."""

    def __post_init__(self) -> None:
        if not self.A > 0.0:
            raise ParameterError(f"A must be positive, got {self.A}")
        if not self.alpha > 2.0:
            raise ParameterError(f"alpha must exceed 2, got {self.alpha}")
        if self.shift < 0.0:
            raise ParameterError(f"shift must be non-negative, got {self.shift}")

    @property
    def half_angle(self) -> float:
        """pi / (2 alpha), the half-angle of the sector where v stays bounded."""
        return math.pi / (2.0 * self.alpha)


@dataclass
class SectorBoundReport:  # pylint: disable=too-many-instance-attributes
    """Sampled suprema of |v| inside and just outside the bounded sector."""

    params: CounterexampleParams
    margin: float
    count: int
    radius_cap: float
    sup_inside: float
    log_sup_outside: float
    """log of the outside supremum; finite even when the value itself overflows."""
    log_sup_outside_doubled: float
    """Same supremum with the radius cap doubled."""
    bisector_log_sup: float
    """Maximum of the exponent along arg z = 0 from a 1D optimiser."""
    saturated: bool
    """Some exponent exceeded the clamp."""
    underflowed: bool = False
    """Some exponent fell below the clamp and evaluated to 0."""

    @property
    def sup_outside_sample(self) -> float:
        """exp(log_sup_outside), capped at exp(700)."""
        return math.exp(min(self.log_sup_outside, 700.0))

    @property
    def outside_growth(self) -> float:
        """log10 of the ratio between the doubled-cap and the plain outside supremum."""
        return (self.log_sup_outside_doubled - self.log_sup_outside) / math.log(10.0)


@dataclass
class ResidualReport:
    """Backward-heat residual |v_s + Laplacian v| under step halving."""

    points: int
    steps: list[float]
    rms_residuals: list[float]
    orders: list[float] = field(default_factory=list)
    passed: bool = False


@dataclass
class VanishingReport:
    """max |v| over fixed in-sector points as s decreases towards 0."""

    params: CounterexampleParams
    points: int
    s_values: list[float]
    max_abs: list[float]
    threshold: float

    @property
    def passed(self) -> bool:
        """Nonincreasing as s decreases and below `threshold` at the smallest s."""
        return bool(
            self.max_abs
            and all(b <= a for a, b in zip(self.max_abs, self.max_abs[1:]))
            and self.max_abs[-1] < self.threshold
        )
