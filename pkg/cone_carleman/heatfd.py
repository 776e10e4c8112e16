"""Finite-difference heat solvers on a ball (radial) and on a polar sector.

Both use the theta-method in time: implicitness 1 is implicit Euler (monotone, used
wherever the maximum principle is checked), 0.5 is Crank-Nicolson (used for order
studies). The radial system is tridiagonal and solved with `scipy.linalg.solve_banded`;
the sector system is factored once with `scipy.sparse.linalg.splu`.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import optimize, sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import splu

from cone_carleman.counterexample import escauriaza_field
from cone_carleman.errors import NumericalError, NumericalErrorReason, ParameterError
from cone_carleman.models.counterexample import CounterexampleParams
from cone_carleman.models.grid import (
    ControlReport,
    CrosscheckReport,
    DecayFit,
    GridField,
    RadialGeometry,
    SectorGeometry,
)

_LOGGER = logging.getLogger(__name__)

IMPLICIT_EULER = 1.0
CRANK_NICOLSON = 0.5
INSTABILITY_FACTOR = 10.0
TIKHONOV = 1e-12
ENVELOPE_SLACK = 0.01
"""Relative excess of a held-out sample over the decay envelope that still counts as on it."""

BoundaryData = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
"""(r, omega, t) on the boundary nodes -> Dirichlet values."""


def _time_steps(T: float, dt: float) -> tuple[int, float]:  # pylint: disable=invalid-name
    if T < 0.0 or not dt > 0.0:
        raise ParameterError(f"need T >= 0 and dt > 0, got T={T}, dt={dt}")
    if T == 0.0:
        return 0, dt
    steps = max(1, int(math.ceil(T / dt - 1e-9)))
    return steps, T / steps


def _check_implicitness(implicitness: float) -> None:
    if not 0.5 <= implicitness <= 1.0:
        raise ParameterError(f"implicitness must lie in [0.5, 1], got {implicitness}")


def _guard(values: np.ndarray, limit: float, step: int) -> None:
    if not np.all(np.isfinite(values)):
        raise NumericalError(
            f"non-finite values at step {step}", NumericalErrorReason.NON_FINITE, {"step": step}
        )
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    if peak > limit:
        raise NumericalError(
            f"|u| = {peak:g} exceeds {limit:g} at step {step}",
            NumericalErrorReason.INSTABILITY,
            {"step": step, "peak": peak, "limit": limit},
        )


def radial_operator(geometry: RadialGeometry, n: int) -> tuple[np.ndarray, ...]:
    """Tridiagonal Laplacian u_rr + (n-1)/r u_r on nodes 0..nr-1.

    Row 0 is the symmetric centre stencil 2n (u_1 - u_0) / dr^2; interior rows use the
    conservative form [r_(i+1/2)^(n-1) (u_(i+1) - u_i) - r_(i-1/2)^(n-1) (u_i - u_(i-1))]
    / (r_i^(n-1) dr^2).

    Returns:
        (lower, diag, upper, boundary_coefficient); lower[i] multiplies u_(i-1),
        upper[i] multiplies u_(i+1) and boundary_coefficient multiplies u_nr in the
        last row.
    """
    dr = geometry.dr
    size = geometry.nr
    lower, diag, upper = np.zeros(size), np.zeros(size), np.zeros(size)
    diag[0] = -2.0 * n / dr**2
    upper[0] = 2.0 * n / dr**2
    r_i = geometry.r[1:size]
    outer = (r_i + 0.5 * dr) ** (n - 1)
    inner = (r_i - 0.5 * dr) ** (n - 1)
    scale = r_i ** (n - 1) * dr**2
    lower[1:] = inner / scale
    upper[1:] = outer / scale
    diag[1:] = -(inner + outer) / scale
    boundary_coefficient = upper[-1]
    upper[-1] = 0.0
    return lower, diag, upper, boundary_coefficient


def radial_solve(  # pylint: disable=too-many-arguments,too-many-locals
    n: int,
    R: float,  # pylint: disable=invalid-name
    g: Callable[[float], float],
    T: float,  # pylint: disable=invalid-name
    nr: int,
    dt: float,
    implicitness: float = IMPLICIT_EULER,
    M: Optional[float] = None,  # pylint: disable=invalid-name
) -> GridField:
    """Solve u_t = u_rr + (n-1)/r u_r on the ball B_R from zero initial data.

    Args:
        n: Spatial dimension (1 is the interval (-R, R) with even symmetry).
        R: Ball radius, > 2.
        g: Dirichlet data u(R, t) = g(t).
        T: Final time.
        nr: Number of radial intervals.
        dt: Requested step; rounded down so that T is a whole number of steps.
        implicitness: 1 implicit Euler, 0.5 Crank-Nicolson.
        M: Bound on |g|; defaults to the largest |g| at the step times.

    Returns:
        The full history, one row per step.

    Raises:
        NumericalError: INSTABILITY when |u| exceeds 10 M.
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"dimension must be a positive integer, got {n}")
    if not R > 2.0:
        raise ParameterError(f"ball radius must exceed 2, got {R}")
    _check_implicitness(implicitness)
    geometry = RadialGeometry(R=R, nr=nr)
    steps, dt = _time_steps(T, dt)
    times = np.linspace(0.0, steps * dt, steps + 1)
    data = np.array([float(g(t)) for t in times])
    limit = INSTABILITY_FACTOR * (float(np.max(np.abs(data))) if M is None else M)

    lower, diag, upper, edge = radial_operator(geometry, n)
    banded = np.zeros((3, nr))
    banded[0, 1:] = -implicitness * dt * upper[:-1]
    banded[1, :] = 1.0 - implicitness * dt * diag
    banded[2, :-1] = -implicitness * dt * lower[1:]

    values = np.zeros((steps + 1, nr + 1))
    values[0, -1] = data[0]
    u = np.zeros(nr)
    explicit = (1.0 - implicitness) * dt
    for k in range(steps):
        applied = diag * u
        applied[1:] += lower[1:] * u[:-1]
        applied[:-1] += upper[:-1] * u[1:]
        applied[-1] += edge * data[k]
        rhs = u + explicit * applied
        rhs[-1] += implicitness * dt * edge * data[k + 1]
        u = solve_banded((1, 1), banded, rhs)
        _guard(u, limit, k + 1)
        values[k + 1, :-1] = u
        values[k + 1, -1] = data[k + 1]
    _LOGGER.debug("Radial solve n=%d R=%g nr=%d steps=%d", n, R, nr, steps)
    return GridField(
        geometry=geometry, dt=dt, times=times, values=values, implicitness=implicitness
    )


def decay_fit(
    field: GridField,
    R: float,  # pylint: disable=invalid-name
    M: float,  # pylint: disable=invalid-name
    t_window: tuple[float, float],
) -> DecayFit:
    """Fit log(u(0, t) / M) = log c - beta R^2 / t over t_lo < t <= t_hi.

    Samples with u(0, t) <= 0 carry no logarithm and are skipped. See
    `fit_decay_samples` for how the envelope is fitted and validated.
    """
    t_lo, t_hi = t_window
    if not 0.0 <= t_lo < t_hi:
        raise ParameterError(f"bad fit window {t_window}")
    if not M > 0.0:
        raise ParameterError(f"M must be positive, got {M}")
    center = field.center_series()
    keep = (field.times > t_lo) & (field.times <= t_hi) & (center > 0.0)
    return fit_decay_samples(field.times[keep], center[keep], R, M, t_window)


def fit_decay_samples(
    times: np.ndarray,
    center: np.ndarray,
    R: float,  # pylint: disable=invalid-name
    M: float,  # pylint: disable=invalid-name
    t_window: tuple[float, float],
) -> DecayFit:
    """Decay fit on given positive samples, validated on held-out ones.

    Every other interior sample is held out. The rest, which include both ends of the
    window, give the least-squares line with constant `c_ls`, lifted to the envelope
    constant `c_fit` so that none of them lies above c_fit M exp(-beta R^2 / t).
    `max_violation` is the largest log-excess of a held-out sample over
    (1 + ENVELOPE_SLACK) times that envelope.
    """
    times = np.asarray(times, dtype=float)
    center = np.asarray(center, dtype=float)
    if times.size < 3:
        return DecayFit(
            beta_fit=0.0,
            c_fit=0.0,
            c_ls=0.0,
            max_violation=0.0,
            samples=int(times.size),
            t_window=t_window,
            empty=True,
        )
    held_out = np.zeros(times.size, dtype=bool)
    held_out[1:-1:2] = True
    x = -R * R / times
    y = np.log(center / M)
    slope, intercept = np.polyfit(x[~held_out], y[~held_out], 1)
    residual = y - (intercept + slope * x)
    lift = float(np.max(residual[~held_out]))
    excess = float(np.max(residual[held_out])) - lift - math.log1p(ENVELOPE_SLACK)
    return DecayFit(
        beta_fit=float(slope),
        c_fit=math.exp(intercept + lift),
        c_ls=math.exp(intercept),
        max_violation=excess,
        samples=int(times.size),
        t_window=t_window,
        held_out=int(np.count_nonzero(held_out)),
    )


def decay_experiment(  # pylint: disable=too-many-arguments
    R: float,  # pylint: disable=invalid-name
    M: float = 1.0,  # pylint: disable=invalid-name
    n: int = 1,
    nr: int = 200,
    steps_per_r2: int = 4096,
    window: tuple[float, float] = (1.0 / 64.0, 1.0 / 16.0),
) -> tuple[GridField, DecayFit]:
    """Ball of radius R with constant boundary data M, zero start, implicit Euler.

    The step is R^2 / steps_per_r2 and the fit window is `window` times R^2, so runs
    at different R are exact rescalings of each other.
    """
    t_window = (window[0] * R * R, window[1] * R * R)
    field = radial_solve(
        n, R, lambda t: M, t_window[1], nr, R * R / steps_per_r2, IMPLICIT_EULER, M
    )
    return field, decay_fit(field, R, M, t_window)


@dataclass(frozen=True)
class SectorOperator:
    """Polar Laplacian restricted to interior rows, split into interior and boundary
    columns.
    """

    geometry: SectorGeometry
    interior: np.ndarray
    """Flat indices of interior nodes."""
    boundary: np.ndarray
    """Flat indices of Dirichlet nodes."""
    a_ii: sparse.csr_matrix
    a_ib: sparse.csr_matrix


def sector_operator(geometry: SectorGeometry) -> SectorOperator:
    """Assemble the 5-point polar stencil

    [r_(i+1/2) (u_(i+1,j) - u_ij) - r_(i-1/2) (u_ij - u_(i-1,j))] / (r_i dr^2)
    + (u_(i,j+1) - 2 u_ij + u_(i,j-1)) / (r_i^2 domega^2).
    """
    dr, dw = geometry.dr, geometry.dw
    index = np.arange(np.prod(geometry.shape)).reshape(geometry.shape)
    i, j = np.meshgrid(
        np.arange(1, geometry.nr), np.arange(1, geometry.nw), indexing="ij"
    )
    r_i = geometry.r[i]
    outer = (r_i + 0.5 * dr) / (r_i * dr * dr)
    inner = (r_i - 0.5 * dr) / (r_i * dr * dr)
    angular = 1.0 / (r_i * r_i * dw * dw)
    rows = index[i, j]
    stencil = [
        (index[i + 1, j], outer),
        (index[i - 1, j], inner),
        (index[i, j + 1], angular),
        (index[i, j - 1], angular),
        (rows, -(outer + inner + 2.0 * angular)),
    ]
    size = index.size
    matrix = sparse.coo_matrix(
        (
            np.concatenate([coef.ravel() for _, coef in stencil]),
            (
                np.concatenate([rows.ravel()] * len(stencil)),
                np.concatenate([cols.ravel() for cols, _ in stencil]),
            ),
        ),
        shape=(size, size),
    ).tocsr()
    mask = geometry.boundary_mask().ravel()
    interior = np.flatnonzero(~mask)
    boundary = np.flatnonzero(mask)
    rows_matrix = matrix[interior]
    return SectorOperator(
        geometry=geometry,
        interior=interior,
        boundary=boundary,
        a_ii=rows_matrix[:, interior].tocsr(),
        a_ib=rows_matrix[:, boundary].tocsr(),
    )


def _march(  # pylint: disable=too-many-arguments
    operator: SectorOperator,
    u_interior: np.ndarray,
    boundary_at: Callable[[int], np.ndarray],
    steps: int,
    dt: float,
    implicitness: float,
    limit: float,
    on_step: Optional[Callable[[int, np.ndarray, np.ndarray], None]] = None,
) -> np.ndarray:
    """Advance interior values (one column per independent problem) by `steps` steps.

    (I - th dt A_II) u^(k+1) = u^k + (1 - th) dt (A_II u^k + A_IB b^k) + th dt A_IB b^(k+1)
    """
    if steps == 0:
        return u_interior
    identity = sparse.identity(operator.interior.size, format="csc")
    factor = splu((identity - implicitness * dt * operator.a_ii).tocsc())
    explicit = (1.0 - implicitness) * dt
    b_now = boundary_at(0)
    u = u_interior
    for k in range(steps):
        b_next = boundary_at(k + 1)
        rhs = u + implicitness * dt * (operator.a_ib @ b_next)
        if explicit:
            rhs = rhs + explicit * (operator.a_ii @ u + operator.a_ib @ b_now)
        u = factor.solve(rhs)
        _guard(u, limit, k + 1)
        if on_step is not None:
            on_step(k + 1, u, b_next)
        b_now = b_next
    return u


def sector_solve(  # pylint: disable=too-many-arguments,too-many-locals
    geometry: SectorGeometry,
    boundary: BoundaryData,
    init: Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]],
    T: float,  # pylint: disable=invalid-name
    dt: float,
    implicitness: float = IMPLICIT_EULER,
    store_every: int = 1,
) -> GridField:
    """Forward heat solve on a polar sector with Dirichlet data on both rays and arcs.

    Args:
        geometry: The sector grid.
        boundary: Dirichlet data as a function of (r, omega, t) on boundary nodes.
        init: Initial values of shape `geometry.shape`, or a function of (r, omega).
            Boundary nodes are overwritten by the boundary data at t = 0.
        T: Final time, >= 0.
        dt: Requested step.
        implicitness: 1 implicit Euler, 0.5 Crank-Nicolson.
        store_every: Keep every k-th step; the final step is always kept.

    Raises:
        NumericalError: INSTABILITY when |u| exceeds 10 times the largest datum.
    """
    _check_implicitness(implicitness)
    if store_every < 1:
        raise ParameterError(f"store_every must be >= 1, got {store_every}")
    steps, dt = _time_steps(T, dt)
    operator = sector_operator(geometry)
    r, omega = (grid.ravel() for grid in geometry.mesh())
    r_b, omega_b = r[operator.boundary], omega[operator.boundary]
    times = np.linspace(0.0, steps * dt, steps + 1)
    data = [np.asarray(boundary(r_b, omega_b, t), dtype=float) for t in times]

    start = init(*geometry.mesh()) if callable(init) else np.asarray(init, dtype=float)
    if start.shape != geometry.shape:
        raise ParameterError(f"initial field shape {start.shape} != grid shape {geometry.shape}")
    start = start.ravel().copy()
    start[operator.boundary] = data[0]
    scale = max(float(np.max(np.abs(start))), max(float(np.max(np.abs(b))) for b in data))
    limit = INSTABILITY_FACTOR * scale

    stored_times = [0.0]
    stored = [start.reshape(geometry.shape).copy()]

    def keep(step: int, u_interior: np.ndarray, b_values: np.ndarray) -> None:
        if step % store_every == 0 or step == steps:
            full = np.empty(start.shape)
            full[operator.interior] = u_interior
            full[operator.boundary] = b_values
            stored_times.append(times[step])
            stored.append(full.reshape(geometry.shape))

    _march(
        operator,
        start[operator.interior],
        lambda k: data[k],
        steps,
        dt,
        implicitness,
        limit,
        keep,
    )
    _LOGGER.debug("Sector solve %dx%d, %d steps", geometry.nr, geometry.nw, steps)
    return GridField(
        geometry=geometry,
        dt=dt,
        times=np.array(stored_times),
        values=np.array(stored),
        implicitness=implicitness,
    )


def manufactured_error(  # pylint: disable=too-many-arguments
    geometry: SectorGeometry,
    exact: Callable[[np.ndarray, np.ndarray, float], np.ndarray],
    T: float,  # pylint: disable=invalid-name
    steps: int,
    implicitness: float = CRANK_NICOLSON,
) -> float:
    """Max interior error at T of a sector solve fed with an exact heat solution.

    `exact` takes Cartesian (x_1, x_2, t).
    """

    def polar(r, omega, t):
        return exact(r * np.cos(omega), r * np.sin(omega), t)

    field = sector_solve(
        geometry, polar, lambda r, w: polar(r, w, 0.0), T, T / steps, implicitness, steps
    )
    x1, x2 = geometry.cartesian()
    interior = ~geometry.boundary_mask()
    return float(np.max(np.abs(field.final - exact(x1, x2, T))[interior]))


def counterexample_crosscheck(  # pylint: disable=too-many-arguments,too-many-locals
    p: CounterexampleParams,
    nr: int,
    nw: int,
    window: tuple[float, float] = (0.9, 1.0),
    r_in: float = 0.1,
    r_out: float = 0.5,
    margin: float = 0.05,
    steps: Optional[int] = None,
    implicitness: float = CRANK_NICOLSON,
) -> CrosscheckReport:
    """Solve the reversed problem on a sector around z = 0 and compare with v.

    With tau = s_1 - s the backward equation becomes w_tau = Laplacian w. The grid is
    polar in z = (y_1 + shift) + i y_2 with half-angle pi/(2 alpha) - margin; v supplies
    the data at tau = 0 and on the boundary. The error is measured at s = s_0 and
    divided by max |v| on the grid.

    Args:
        p: Solution parameters.
        nr: Radial intervals.
        nw: Angular intervals.
        window: (s_0, s_1) inside (0, 1].
        r_in: Inner radius in the z-plane.
        r_out: Outer radius in the z-plane.
        margin: Angular margin inside the bounded sector.
        steps: Time steps; defaults to nr.
        implicitness: Time scheme.
    """
    s_0, s_1 = window
    if not 0.0 < s_0 <= s_1 <= 1.0:
        raise ParameterError(f"window must satisfy 0 < s_0 <= s_1 <= 1, got {window}")
    if not 0.0 < margin < p.half_angle:
        raise ParameterError(f"margin must lie in (0, {p.half_angle}), got {margin}")
    geometry = SectorGeometry(
        theta=2.0 * (p.half_angle - margin), r_in=r_in, r_out=r_out, nr=nr, nw=nw
    )
    v = escauriaza_field(p)

    def solution(r, omega, s):
        y = np.stack([r * np.cos(omega) - p.shift, r * np.sin(omega)], axis=-1)
        return v(y, np.full(np.shape(r), s))

    duration = s_1 - s_0
    steps = nr if steps is None else steps
    field = sector_solve(
        geometry,
        lambda r, omega, tau: solution(r, omega, s_1 - tau),
        lambda r, omega: solution(r, omega, s_1),
        duration,
        duration / steps if duration > 0.0 else 1.0,
        implicitness,
        store_every=max(1, steps),
    )
    exact = solution(*geometry.mesh(), s_0)
    error = np.abs(field.final - exact)
    error[geometry.boundary_mask()] = 0.0
    scale = float(np.max(np.abs(exact)))
    worst = np.unravel_index(int(np.argmax(error)), error.shape)
    return CrosscheckReport(
        params=p,
        geometry=geometry,
        window=window,
        steps=steps if duration > 0.0 else 0,
        max_rel_error=float(error[worst]) / scale if scale > 0.0 else float(error[worst]),
        argmax_node=(float(geometry.r[worst[0]]), float(geometry.omega[worst[1]])),
        error_field=error / scale if scale > 0.0 else error,
    )


def boundary_arc_length(geometry: SectorGeometry, operator: SectorOperator) -> np.ndarray:
    """Arc-length position of every boundary node along the closed loop
    inner arc -> upper ray -> outer arc -> lower ray.
    """
    r, omega = (grid.ravel()[operator.boundary] for grid in geometry.mesh())
    half = 0.5 * geometry.theta
    inner_len = geometry.r_in * geometry.theta
    ray_len = geometry.r_out - geometry.r_in
    outer_len = geometry.r_out * geometry.theta
    on_inner = np.isclose(r, geometry.r_in)
    on_outer = np.isclose(r, geometry.r_out)
    on_upper = np.isclose(omega, half)
    position = np.where(
        on_inner,
        geometry.r_in * (omega + half),
        np.where(
            on_upper,
            inner_len + (r - geometry.r_in),
            np.where(
                on_outer,
                inner_len + ray_len + geometry.r_out * (half - omega),
                inner_len + ray_len + outer_len + (geometry.r_out - r),
            ),
        ),
    )
    return position


def _hats(positions: np.ndarray, count: int, length: float, periodic: bool) -> np.ndarray:
    """Hat functions on `count` equally spaced nodes, evaluated at `positions`.

    Periodic hats live on a loop of the given length; otherwise the nodes include both
    ends of [0, length].
    """
    if periodic:
        spacing = length / count
        centers = spacing * np.arange(count)
        distance = np.abs(positions[:, None] - centers[None, :])
        distance = np.minimum(distance, length - distance)
    else:
        if count == 1:
            return np.ones((positions.size, 1))
        spacing = length / (count - 1)
        centers = spacing * np.arange(count)
        distance = np.abs(positions[:, None] - centers[None, :])
    return np.maximum(0.0, 1.0 - distance / spacing)


def weighted_norm(geometry: SectorGeometry, values: np.ndarray, interior: np.ndarray) -> float:
    """sqrt(sum u^2 r dr domega) over interior nodes."""
    r = geometry.mesh()[0].ravel()[interior]
    return float(np.sqrt(np.sum(values**2 * r) * geometry.dr * geometry.dw))


def control_experiment(  # pylint: disable=too-many-arguments,too-many-locals
    theta: float,
    T: float,  # pylint: disable=invalid-name
    grid: tuple[float, float, int, int],
    n_controls: int,
    bound: float,
    steps: int = 40,
    n_time: int = 2,
    tikhonov: float = TIKHONOV,
) -> ControlReport:
    """Bounded boundary control that pushes a sector solution towards zero at time T.

    The control space is spanned by periodic hats in boundary arc length times hats in
    time (n_controls = n_space * n_time); doubling n_space gives nested spaces. The time
    hats have their nodes spread over [dt, T] and vanish at t = 0, where the initial
    data already vanish on the boundary. The terminal map is assembled from one implicit
    Euler solve per basis function (run as columns of one batched solve), then
    min ||u(T)|| subject to |c_k| <= bound is solved by bounded-variable least squares
    with a Tikhonov block.

    Args:
        theta: Sector opening angle in (0, pi).
        T: Control horizon.
        grid: (r_in, r_out, nr, nw).
        n_controls: Number of basis functions, a multiple of n_time.
        bound: Coefficient bound, >= 0; 0 means free decay.
        steps: Time steps.
        n_time: Hats per unit of arc length in time.
        tikhonov: Regularisation weight.

    Returns:
        The report; `converged` is False if the least-squares solver stopped early.
    """
    if n_controls < 1 or n_time < 1 or n_controls % n_time:
        raise ParameterError(
            f"n_controls={n_controls} must be a positive multiple of n_time={n_time}"
        )
    if bound < 0.0:
        raise ParameterError(f"bound must be non-negative, got {bound}")
    if not T > 0.0 or steps < max(1, n_time):
        raise ParameterError(
            f"need T > 0 and steps >= max(1, n_time), got T={T}, steps={steps}, n_time={n_time}"
        )
    r_in, r_out, nr, nw = grid
    geometry = SectorGeometry(theta=theta, r_in=r_in, r_out=r_out, nr=nr, nw=nw)
    operator = sector_operator(geometry)
    dt = T / steps
    n_space = n_controls // n_time

    r, omega = geometry.mesh()
    initial = (np.sin(np.pi * (r - r_in) / (r_out - r_in)) * np.cos(np.pi * omega / theta)).ravel()
    loop = (r_in + r_out) * theta + 2.0 * (r_out - r_in)
    space_basis = _hats(boundary_arc_length(geometry, operator), n_space, loop, periodic=True)
    times = np.linspace(0.0, T, steps + 1)
    time_basis = np.zeros((steps + 1, n_time))
    time_basis[1:] = _hats(times[1:] - dt, n_time, T - dt, periodic=False)
    space_index = np.repeat(np.arange(n_space), n_time)
    time_index = np.tile(np.arange(n_time), n_space)

    free = _march(
        operator,
        initial[operator.interior],
        lambda k: np.zeros(operator.boundary.size),
        steps,
        dt,
        IMPLICIT_EULER,
        INSTABILITY_FACTOR,
    )
    free_norm = weighted_norm(geometry, free, operator.interior)

    if bound == 0.0:
        coefficients = np.zeros(n_controls)
        terminal, converged, status = free, True, "no control"
    else:
        responses = _march(
            operator,
            np.zeros((operator.interior.size, n_controls)),
            lambda k: space_basis[:, space_index] * time_basis[k, time_index],
            steps,
            dt,
            IMPLICIT_EULER,
            INSTABILITY_FACTOR,
        )
        weight = np.sqrt(r.ravel()[operator.interior] * geometry.dr * geometry.dw)
        system = np.vstack([weight[:, None] * responses, math.sqrt(tikhonov) * np.eye(n_controls)])
        target = np.concatenate([-weight * free, np.zeros(n_controls)])
        result = optimize.lsq_linear(
            system,
            target,
            bounds=(-bound, bound),
            method="bvls",
            max_iter=10 * n_controls,
        )
        coefficients = result.x
        terminal = free + responses @ coefficients
        converged, status = bool(result.success), str(result.message)
        if not converged:
            _LOGGER.warning("Control least squares stopped early: %s", status)

    profile = (space_basis[:, space_index] * coefficients) @ time_basis[:, time_index].T
    report = ControlReport(
        theta=theta,
        T=T,
        geometry=geometry,
        n_controls=n_controls,
        bound=bound,
        terminal_norm=weighted_norm(geometry, terminal, operator.interior),
        free_norm=free_norm,
        coefficients=coefficients,
        converged=converged,
        status=status,
        tikhonov=tikhonov,
        control_profile=profile.T,
        profile_times=times,
    )
    _LOGGER.debug(
        "Control theta=%g n=%d: terminal %g (free %g)",
        theta,
        n_controls,
        report.terminal_norm,
        free_norm,
    )
    return report


def control_sweep(  # pylint: disable=too-many-arguments
    thetas: Sequence[float],
    T: float,  # pylint: disable=invalid-name
    grid: tuple[float, float, int, int],
    n_controls: int,
    bound: float,
    steps: int = 40,
    n_time: int = 2,
    tikhonov: float = TIKHONOV,
) -> list[ControlReport]:
    """`control_experiment` for each opening angle, on the same grid."""
    return [
        control_experiment(theta, T, grid, n_controls, bound, steps, n_time, tikhonov)
        for theta in thetas
    ]
