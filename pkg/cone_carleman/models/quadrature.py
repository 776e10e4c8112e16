"""Classes related to test functions, quadrature and the integral checks."""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from cone_carleman.models.weight import WeightParams

PRODUCT_BUMP = "product-bump"
RADIAL_BUMP = "radial-bump"

PASSED = "passed"
VIOLATED = "violated"
UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class Modulation:
    """Trigonometric factor cos(k . x + omega t + phase)."""

    wave: tuple[float, ...]
    omega: float = 0.0
    phase: float = 0.0


@dataclass(frozen=True)
class BumpSpec:
    """Centre, support half-widths and optional modulation of a bump.

    For a product bump every spatial axis has its own half-width; for a radial bump
    only `radii[0]` is used as the spatial radius.
    """

    center: tuple[float, ...]
    t_center: float
    radii: tuple[float, ...]
    t_radius: float
    kind: str = PRODUCT_BUMP
    modulation: Optional[Modulation] = None
    amplitude: float = 1.0

    @property
    def n(self) -> int:
        """Spatial dimension."""
        return len(self.center)

    def spec_hash(self) -> str:
        """Short stable digest identifying the bump in reports."""
        payload = json.dumps(asdict(self), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class QuadratureResult:
    """Integral over a box from the finest refinement level."""

    value: float
    error_estimate: float
    """|I_L - I_(L-1)| between the two finest levels, or the summed cell estimates of an
    adaptive run."""
    evals: int
    levels: int = 0
    resolved: Optional[bool] = None
    """Whether the adaptive run met its tolerance; None without a tolerance."""
    cells: int = 0


@dataclass
class CarlemanCheckReport:  # pylint: disable=too-many-instance-attributes
    """One weighted inequality evaluated for one test function."""

    kind: str
    """"prop21", "prop23" or "prop23-intermediate"."""
    bump_hash: str
    a: float
    lhs: float
    rhs: float
    ratio: float
    lhs_error: float
    rhs_error: float
    log_scale: float
    """Exponent factored out of both integrals."""
    bound: Optional[float] = None
    """Asserted ceiling for the ratio, if any."""
    params: Optional[WeightParams] = None
    rtol: float = 0.0
    """Relative error both sides had to reach."""
    resolved: bool = True
    """Whether lhs_error <= rtol |lhs| and rhs_error <= rtol |rhs|."""

    @property
    def status(self) -> str:
        """"unresolved" when the quadrature missed rtol, else "passed" or "violated"."""
        if not self.resolved:
            return UNRESOLVED
        if self.ratio != self.ratio or self.ratio == float("inf"):
            return VIOLATED
        return PASSED if self.bound is None or self.ratio <= self.bound else VIOLATED

    @property
    def passed(self) -> bool:
        """Resolved, with a finite ratio within `bound` (when one applies)."""
        return self.status == PASSED


@dataclass
class EnergyIdentityReport:  # pylint: disable=too-many-instance-attributes
    """The four integrals of int |Lv|^2 = int |Sv|^2 + int |Av|^2 + int ([S, A] v) v."""

    bump_hash: str
    params: WeightParams
    lhs_l2: float
    s_l2: float
    a_l2: float
    commutator_integral: float
    discrepancy: float
    error_estimates: list[float]
    tolerance: float
    passed: bool
    """Resolved and discrepancy <= tolerance."""
    resolved: bool = True


@dataclass
class ASweepReport:
    """Ratios of the constant-4 inequality across a range of a."""

    a_values: list[float]
    max_ratios: list[float]
    """Largest ratio over the suite for each a."""
    a_min: Optional[float]
    """Smallest a from which every ratio stays within the bound."""
    bound: float
    ratios: list[list[float]] = field(default_factory=list)
    """Per a, per bump."""
    resolved: list[bool] = field(default_factory=list)
    """Per a, whether every bump's quadrature met its tolerance."""

    @property
    def passed(self) -> bool:
        """The two largest a values are resolved and satisfy the bound."""
        if not self.max_ratios:
            return False
        resolved = self.resolved or [True] * len(self.max_ratios)
        return all(
            ok and ratio <= self.bound
            for ok, ratio in zip(resolved[-2:], self.max_ratios[-2:])
        )
