"""Reports produced by the weight and positivity scans."""

from dataclasses import dataclass, field
from typing import Optional

from cone_carleman.models.weight import WeightParams

MAX_REPORTED_VIOLATIONS = 10
"""Number of violating points kept verbatim in a scan report."""


@dataclass(frozen=True)
class AlphaCurvePoint:
    """Smallest admissible exponent for one eps."""

    eps: float
    alpha_star: float
    """Root of m(., eps) in (1, 2]."""
    residual: float
    """|m(alpha_star, eps)|."""
    iterations: int = 0


@dataclass
class ScanReport:
    """Outcome of a pointwise inequality scan over sampled points.

    `min_margin` is the smallest value of (left side - right side); a negative value is a
    violation.
    """

    name: str
    params: Optional[WeightParams]
    points_checked: int
    min_margin: float
    argmin_point: tuple[float, ...]
    violations: int
    passed: bool
    violation_points: list[tuple[float, ...]] = field(default_factory=list)
    """Up to `MAX_REPORTED_VIOLATIONS` offending points as (x_1..x_n, t)."""


@dataclass
class HessianScanReport:
    """Smallest eigenvalue of D^2 varphi + f I over a sample of the cone."""

    params: WeightParams
    points_checked: int
    min_eigenvalue: float
    argmin_point: tuple[float, ...]
    tolerance: float
    passed: bool


@dataclass
class A3ScanReport:  # pylint: disable=too-many-instance-attributes
    """A_3 against zero and against its certificate lower bound."""

    params: WeightParams
    points_checked: int
    certificate: float
    """m(alpha, eps) for the scanned parameters."""
    min_a3: float
    argmin_point: tuple[float, ...]
    negative_count: int
    """Points with A_3 < 0."""
    violations: int
    """Points with A_3 below the lower bound, whatever the sign of m."""
    min_bound_gap: float
    """min(A_3 - bound), relative to max(1, |bound|)."""
    passed: bool


@dataclass
class LambdaScanReport:
    """Grid scan of one of the Lambda inequalities on (0, 1)."""

    name: str
    alpha: float
    points_checked: int
    min_margin: float
    argmin_t: float
    passed: bool


@dataclass
class MonotonicityReport:
    """Signs of the partial derivatives of m on an (alpha, eps) grid."""

    steps: int
    min_dm_dalpha: float
    max_dm_deps: float
    passed: bool


@dataclass
class GCheckReport:  # pylint: disable=too-many-instance-attributes
    """Monotonicity of g(s) = h(s)^(-2a) exp(-rho^2 / (32 s)) on (0, 2]."""

    a: float
    beta: float
    rho: float
    g_at_2: float
    min_gprime: float
    argmin_s: float
    beta_bound: float
    """(1/64) log h(3/2); reported, not enforced."""
    grid_points: int
    passed: bool
