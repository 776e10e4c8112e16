"""Classes related to the Carleman weight family and field evaluations."""

import math
from dataclasses import dataclass

import numpy as np

from cone_carleman.errors import ParameterError
from cone_carleman.models.cone import ConeSpec

EPS_CRITICAL = 1.0 / math.sqrt(3.0)
"""cos of half the critical opening angle."""


@dataclass(frozen=True)
class WeightParams:
    """Parameters (a, alpha, eps) of the weight a * Lambda(t) * varphi(x) + t^2.

    Admissibility (eps < 1/sqrt(3) and m(alpha, eps) >= 0) is not a constructor
    invariant so that inadmissible parameters can be scanned on purpose; see
    `positivity.is_admissible`.
    """

    a: float
    """Carleman strength, a >= 0 (a = 0 leaves only the t^2 part)."""
    alpha: float
    """Exponent in (1, 2]."""
    eps: float
    """cos(theta / 2), in (0, 1)."""
    n: int = 2
    """Spatial dimension."""

    def __post_init__(self) -> None:
        if self.a < 0.0:
            raise ParameterError(f"a must be non-negative, got {self.a}")
        if not 1.0 < self.alpha <= 2.0:
            raise ParameterError(f"alpha must lie in (1, 2], got {self.alpha}")
        if not 0.0 < self.eps < 1.0:
            raise ParameterError(f"eps must lie in (0, 1), got {self.eps}")
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"dimension must be an integer >= 2, got {self.n}")

    @property
    def cone(self) -> ConeSpec:
        """The cone O_theta with cos(theta / 2) = eps."""
        return ConeSpec.from_eps(self.n, self.eps)

    @property
    def below_critical_eps(self) -> bool:
        """Whether eps < 1/sqrt(3), i.e. theta exceeds the critical angle."""
        return self.eps < EPS_CRITICAL


@dataclass
class WeightEval:
    """Value and derivatives of a weight at a batch of points.

    Scalar fields have the batch shape (...); `grad_x` is (..., n) and `hess_x` is
    (..., n, n).
    """

    value: np.ndarray
    grad_x: np.ndarray
    hess_x: np.ndarray
    dt: np.ndarray
    laplacian: np.ndarray
    bilaplacian: np.ndarray
    dtt: np.ndarray = 0.0
    """Second time derivative."""
    dt_grad_sq: np.ndarray = 0.0
    """Time derivative of |grad_x|^2."""


@dataclass
class Jet:
    """Value, time derivative, spatial gradient and Laplacian of a field."""

    value: np.ndarray
    dt: np.ndarray
    grad: np.ndarray
    laplacian: np.ndarray

    def __mul__(self, factor: float) -> "Jet":
        return Jet(
            value=self.value * factor,
            dt=self.dt * factor,
            grad=self.grad * factor,
            laplacian=self.laplacian * factor,
        )

    __rmul__ = __mul__
