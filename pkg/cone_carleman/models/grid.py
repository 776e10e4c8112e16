"""Classes describing finite-difference grids, solutions on them and experiment reports."""

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from cone_carleman.errors import ParameterError
from cone_carleman.models.counterexample import CounterexampleParams


@dataclass(frozen=True)
class RadialGeometry:
    """Uniform radial grid r_i = i * R / nr, i = 0..nr, on the ball B_R."""

    R: float  # pylint: disable=invalid-name
    nr: int

    def __post_init__(self) -> None:
        if not self.R > 0.0:
            raise ParameterError(f"radius must be positive, got {self.R}")
        if self.nr < 2:
            raise ParameterError(f"need at least 2 radial intervals, got {self.nr}")

    @property
    def dr(self) -> float:
        """Radial spacing."""
        return self.R / self.nr

    @property
    def r(self) -> np.ndarray:
        """Node radii."""
        return np.linspace(0.0, self.R, self.nr + 1)


@dataclass(frozen=True)
class SectorGeometry:
    """Polar grid on {r_in <= r <= r_out, |omega| <= theta / 2}.

    Nodes are r_i = r_in + i dr (i = 0..nr) and omega_j = -theta/2 + j domega
    (j = 0..nw). Rows i in {0, nr} and columns j in {0, nw} are Dirichlet nodes.
    """

    theta: float
    r_in: float
    r_out: float
    nr: int
    nw: int

    def __post_init__(self) -> None:
        if not 0.0 < self.theta < np.pi:
            raise ParameterError(f"sector angle must lie in (0, pi), got {self.theta}")
        if not 0.0 < self.r_in < self.r_out:
            raise ParameterError(f"need 0 < r_in < r_out, got {self.r_in}, {self.r_out}")
        if self.nr < 2 or self.nw < 2:
            raise ParameterError(f"need at least 2 intervals per axis, got {self.nr}x{self.nw}")

    @property
    def dr(self) -> float:
        """Radial spacing."""
        return (self.r_out - self.r_in) / self.nr

    @property
    def dw(self) -> float:
        """Angular spacing."""
        return self.theta / self.nw

    @property
    def r(self) -> np.ndarray:
        """Node radii."""
        return np.linspace(self.r_in, self.r_out, self.nr + 1)

    @property
    def omega(self) -> np.ndarray:
        """Node angles."""
        return np.linspace(-0.5 * self.theta, 0.5 * self.theta, self.nw + 1)

    @property
    def shape(self) -> tuple[int, int]:
        """(nr + 1, nw + 1)."""
        return (self.nr + 1, self.nw + 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(r, omega) node arrays of shape `shape`."""
        return np.meshgrid(self.r, self.omega, indexing="ij")

    def cartesian(self) -> tuple[np.ndarray, np.ndarray]:
        """(x_1, x_2) node arrays of shape `shape`."""
        r, omega = self.mesh()
        return r * np.cos(omega), r * np.sin(omega)

    def boundary_mask(self) -> np.ndarray:
        """True on Dirichlet nodes."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return mask


Geometry = Union[RadialGeometry, SectorGeometry]


@dataclass
class GridField:
    """Discrete solution history on a radial or sector grid.

    `values[k]` holds the nodal values at `times[k]`.
    """

    geometry: Geometry
    dt: float
    times: np.ndarray
    values: np.ndarray
    implicitness: float = 1.0
    """Theta of the time stepping: 1 implicit Euler, 0.5 Crank-Nicolson."""

    @property
    def final(self) -> np.ndarray:
        """Values at the last stored time."""
        return self.values[-1]

    def center_series(self) -> np.ndarray:
        """u(0, t) for a radial field."""
        if not isinstance(self.geometry, RadialGeometry):
            raise ParameterError("center series is only defined on a radial grid")
        return self.values[:, 0]


@dataclass
class DecayFit:  # pylint: disable=too-many-instance-attributes
    """Fit of log|u(0, t)| = log c - beta R^2 / t over a small-time window."""

    beta_fit: float
    c_fit: float
    """Envelope constant: every fitting sample lies on or below c_fit exp(-beta R^2/t)."""
    c_ls: float
    """Least-squares constant before lifting to an envelope."""
    max_violation: float
    """Largest log-excess of a held-out sample over the envelope with its slack."""
    samples: int
    t_window: tuple[float, float]
    empty: bool = False
    """Too few nonzero samples on the window, so no fit exists."""
    held_out: int = 0
    """Samples kept out of the fit to validate the envelope."""

    @property
    def passed(self) -> bool:
        """A positive decay rate whose envelope is not exceeded."""
        return not self.empty and self.beta_fit > 0.0 and self.max_violation <= 0.0


@dataclass
class CrosscheckReport:  # pylint: disable=too-many-instance-attributes
    """Grid solution of the reversed backward-heat problem against the closed form."""

    params: CounterexampleParams
    geometry: SectorGeometry
    window: tuple[float, float]
    steps: int
    max_rel_error: float
    """Max interior |u - v| over max |v| at the end of the window."""
    argmax_node: tuple[float, float]
    """(r, omega) of the largest error."""
    error_field: Optional[np.ndarray] = None


@dataclass
class ControlReport:  # pylint: disable=too-many-instance-attributes
    """Bounded boundary control driving a sector solution towards zero."""

    theta: float
    T: float  # pylint: disable=invalid-name
    geometry: SectorGeometry
    n_controls: int
    bound: float
    terminal_norm: float
    free_norm: float
    """Terminal norm with all controls switched off."""
    coefficients: np.ndarray
    converged: bool
    status: str
    tikhonov: float
    control_profile: Optional[np.ndarray] = None
    """Boundary data, shape (time samples, boundary nodes)."""
    profile_times: np.ndarray = field(default_factory=lambda: np.empty(0))
