"""The `cone-carleman` command.

Each subcommand resolves its options (defaults < `--config` file < flags), runs the
matching library operation and writes a JSON report, optional CSV tables and a
`manifest.json` to the output directory. Exit codes: 0 when every contract holds, 1
when a mathematical contract is violated (swapped by `--expect-violation`), 2 when the
tool itself failed.
"""

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field, fields as dataclass_fields
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from cone_carleman import counterexample, geometry, heatfd, positivity, verify, weights
from cone_carleman.config import COMMANDS, SCHEMA_VERSION, CommonOptions, RunConfig, load_config
from cone_carleman.errors import ConfigError, NumericalError, ParameterError
from cone_carleman.models import (
    ConeSpec,
    CounterexampleParams,
    SamplingRegion,
    WeightParams,
)
from cone_carleman.models.weight import EPS_CRITICAL
from cone_carleman.utils import normalize_key, to_jsonable

_LOGGER = logging.getLogger(__name__)

DISTRIBUTION = "cone-carleman"
EXIT_PASSED = 0
EXIT_VIOLATED = 1
EXIT_FAILED = 2

ALPHA_CURVE_RESIDUAL = 1e-10
DEFAULT_A3_BAND = 0.05
REFINEMENT_STABILITY = 0.1
CONTROL_SLACK = 1e-9
MAX_PRINCIPLE_SLACK = 1e-10


@dataclass
class Outcome:
    """What a subcommand produced."""

    passed: bool
    summary: dict[str, Any]
    tables: dict[str, tuple[Sequence[str], list[Sequence[Any]]]] = field(default_factory=dict)
    """CSV name -> (header, rows)."""


def artifact_version() -> str:
    """Installed version of the distribution, or "unknown" from a source tree."""
    try:
        return version(DISTRIBUTION)
    except PackageNotFoundError:
        return "unknown"


def _weight(options: Any, a: float) -> WeightParams:
    return WeightParams(a=a, alpha=options.alpha, eps=options.eps, n=options.n)


def run_alpha_curve(config: RunConfig) -> Outcome:
    """alpha*(eps) curve, critical angle and monotonicity audit."""
    options = config.params
    curve = positivity.alpha_curve(options.eps_min, options.eps_max, options.steps, options.tol)
    audit = positivity.monotonicity_audit()
    stars = [point.alpha_star for point in curve]
    residual_ok = all(abs(point.residual) <= ALPHA_CURVE_RESIDUAL for point in curve)
    monotone = all(b >= a for a, b in zip(stars, stars[1:]))
    angle = positivity.critical_angle_degrees()
    return Outcome(
        passed=residual_ok and monotone and audit.passed,
        summary={
            "critical_angle_degrees": angle,
            "printed_critical_angle_degrees": positivity.PRINTED_CRITICAL_ANGLE_DEGREES,
            "printed_angle_rounding": positivity.PRINTED_CRITICAL_ANGLE_DEGREES - angle,
            "curve_points": len(curve),
            "max_abs_residual": max(abs(point.residual) for point in curve),
            "nondecreasing": monotone,
            "monotonicity": audit,
        },
        tables={
            "alpha_curve": (
                ("eps", "alpha_star", "residual"),
                [(point.eps, point.alpha_star, point.residual) for point in curve],
            )
        },
    )


def _random_admissible(rng: np.random.Generator) -> tuple[float, float]:
    eps = float(rng.uniform(0.05, EPS_CRITICAL - 0.01))
    low = positivity.alpha_star(eps).alpha_star
    return float(rng.uniform(low, 2.0)), eps


def run_psd_scan(config: RunConfig) -> Outcome:
    """Smallest eigenvalue of D^2 varphi + f I at the chosen and at random admissible pairs."""
    options = config.params
    rng = np.random.default_rng(config.seed)
    pairs = [(options.alpha, options.eps)] + [
        _random_admissible(rng) for _ in range(options.pairs)
    ]
    reports = [
        positivity.hessian_psd_scan(
            WeightParams(a=0.0, alpha=alpha, eps=eps, n=options.n),
            options.count,
            config.seed + index,
            tolerance=options.tolerance,
        )
        for index, (alpha, eps) in enumerate(pairs)
    ]
    return Outcome(
        passed=all(report.passed for report in reports),
        summary={"scans": reports},
        tables={
            "psd_scan": (
                ("alpha", "eps", "min_eigenvalue"),
                [(r.params.alpha, r.params.eps, r.min_eigenvalue) for r in reports],
            )
        },
    )


def run_a3_scan(config: RunConfig) -> Outcome:
    """Sign of A_3 and its certificate bound; near the boundary above the critical eps."""
    options = config.params
    w = _weight(options, options.a)
    band = options.band
    if band is None and not w.below_critical_eps:
        band = DEFAULT_A3_BAND
    report = positivity.a3_scan(
        w, options.count, config.seed, boundary_band=band, tolerance=options.tolerance
    )
    return Outcome(passed=report.passed, summary={"scan": report, "boundary_band": band})


def _prop21(config: RunConfig) -> Outcome:
    options = config.params
    suite = verify.prop21_suite(config.seed, options.bumps, options.n)
    rows, sups, refined = [], [], []
    resolved = True
    for a in options.a_sweep:
        reports = [
            verify.check_prop21(u, a, options.levels, options.order, options.rtol) for u in suite
        ]
        finer = [
            verify.check_prop21(u, a, options.levels + 1, options.order, options.rtol)
            for u in suite
        ]
        rows.extend((a, r.bump_hash, r.ratio, r.lhs_error, r.rhs_error, r.status) for r in reports)
        sups.append(max(r.ratio for r in reports))
        refined.append(max(r.ratio for r in finer))
        resolved = resolved and all(r.resolved for r in reports + finer)
    finite = all(math.isfinite(row[2]) for row in rows)
    stable = all(
        abs(fine - coarse) <= REFINEMENT_STABILITY * abs(coarse)
        for coarse, fine in zip(sups, refined)
    )
    return Outcome(
        passed=finite and stable and resolved,
        summary={
            "a_values": list(options.a_sweep),
            "sup_ratios": sups,
            "sup_ratios_refined": refined,
            "finite": finite,
            "refinement_stable": stable,
            "resolved": resolved,
        },
        tables={"prop21": (("a", "bump", "ratio", "lhs_error", "rhs_error", "status"), rows)},
    )


def _prop23(config: RunConfig) -> Outcome:
    options = config.params
    if not options.a_sweep:
        raise ParameterError("a_sweep needs at least one value")
    w = _weight(options, options.a_sweep[0])
    suite = verify.default_suite(
        config.seed, options.bumps, options.modulated, w.cone.theta, options.n
    )
    sweep = verify.a_sweep(
        suite, w, options.a_sweep, options.levels, options.order, options.variant, options.rtol
    )
    rows = [
        (a, u.spec.spec_hash(), ratio)
        for a, row in zip(sweep.a_values, sweep.ratios)
        for u, ratio in zip(suite, row)
    ]
    return Outcome(
        passed=sweep.passed,
        summary={"variant": options.variant, "params": w, "sweep": sweep},
        tables={
            "a_sweep": (
                ("a", "max_ratio", "resolved"),
                list(zip(sweep.a_values, sweep.max_ratios, sweep.resolved)),
            ),
            "prop23": (("a", "bump", "ratio"), rows),
        },
    )


def run_check_carleman(config: RunConfig) -> Outcome:
    """Quadrature ratios of the Gaussian (21) or cone (23) weighted inequality."""
    return _prop21(config) if config.params.prop == 21 else _prop23(config)


def run_check_identity(config: RunConfig) -> Outcome:
    """|Lv|^2 = |Sv|^2 + |Av|^2 + ([S, A] v, v) on seeded bumps."""
    options = config.params
    w = _weight(options, options.a)
    suite = verify.default_suite(config.seed, options.bumps, 0, w.cone.theta, options.n)
    reports = [
        verify.check_energy_identity(u, w, options.levels, options.order, options.rtol)
        for u in suite
    ]
    return Outcome(
        passed=all(report.passed for report in reports),
        summary={"params": w, "identities": reports},
    )


def run_counterexample(config: RunConfig) -> Outcome:
    """Residual order, vanishing as s -> 0, sector suprema and a plotting slice."""
    options = config.params
    p = CounterexampleParams(A=options.amplitude, alpha=options.alpha, shift=options.shift)
    r_min = p.shift if p.shift > 0.0 else 1.0
    y1, y2, s = counterexample.sample_sector(
        p,
        options.count,
        config.seed,
        (0.0, p.half_angle - options.margin),
        (r_min, 1.4 * r_min),
        (0.8, 1.0),
    )
    residual = counterexample.residual_order(
        counterexample.escauriaza_field(p), np.stack([y1, y2], axis=-1), s
    )
    vanishing = counterexample.vanishing_sweep(
        p, options.margin, options.vanishing_points, config.seed
    )
    bounds = counterexample.sector_bound_scan(
        p, options.margin, options.count, config.seed, options.radius_cap
    )
    slice_rows = counterexample.sector_slice(
        p, options.slice_s, options.slice_radius, options.slice_nr, options.slice_nw
    )
    return Outcome(
        passed=residual.passed and vanishing.passed and math.isfinite(bounds.sup_inside),
        summary={"residual": residual, "vanishing": vanishing, "sector_bounds": bounds},
        tables={"counterexample_slice": (("y1", "y2", "s", "v"), slice_rows)},
    )


def run_crosscheck(config: RunConfig) -> Outcome:
    """Grid solution of the reversed problem against v on refining sector grids."""
    options = config.params
    p = CounterexampleParams(A=options.amplitude, alpha=options.alpha, shift=options.shift)
    reports = [
        heatfd.counterexample_crosscheck(
            p,
            size,
            size,
            (options.s_start, options.s_end),
            options.r_in,
            options.r_out,
            options.margin,
        )
        for size in options.grids
    ]
    errors = [report.max_rel_error for report in reports]
    finest = reports[-1]
    r, omega = finest.geometry.mesh()
    return Outcome(
        passed=all(b < a for a, b in zip(errors, errors[1:])),
        summary={
            "levels": [
                {
                    "grid": size,
                    "steps": report.steps,
                    "max_rel_error": report.max_rel_error,
                    "argmax_node": report.argmax_node,
                }
                for size, report in zip(options.grids, reports)
            ],
            "ratios": [a / b if b > 0.0 else float("inf") for a, b in zip(errors, errors[1:])],
        },
        tables={
            "crosscheck": (("grid", "max_rel_error"), list(zip(options.grids, errors))),
            "crosscheck_error_field": (
                ("r", "omega", "rel_error"),
                list(zip(r.ravel(), omega.ravel(), finest.error_field.ravel())),
            ),
        },
    )


def run_decay(config: RunConfig) -> Outcome:
    """Fitted small-time decay rate at the centre of balls of several radii."""
    options = config.params
    window = (options.window_lo, options.window_hi)
    fits, tables, peaks = [], {}, []
    for radius in options.radii:
        field_, fit = heatfd.decay_experiment(
            radius, options.bound, options.n, options.nr, options.steps_per_r2, window
        )
        fits.append(fit)
        peaks.append(float(np.max(np.abs(field_.values))))
        tables[f"decay_R{radius:g}"] = (
            ("t", "u_at_center"),
            list(zip(field_.times, field_.center_series())),
        )

    reference = options.radii[0]
    times = np.linspace(window[0], window[1], 50)[1:] * reference**2
    synthetic = heatfd.fit_decay_samples(
        times,
        options.bound * np.exp(-options.synthetic_beta * reference**2 / times),
        reference,
        options.bound,
        (window[0] * reference**2, window[1] * reference**2),
    )
    betas = [fit.beta_fit for fit in fits]
    stable = all(abs(b - betas[0]) <= options.stability * abs(betas[0]) for b in betas)
    bounded = all(peak <= options.bound * (1.0 + MAX_PRINCIPLE_SLACK) for peak in peaks)
    synthetic_ok = abs(synthetic.beta_fit - options.synthetic_beta) <= 1e-6
    return Outcome(
        passed=all(fit.passed and fit.beta_fit > options.min_beta for fit in fits)
        and stable
        and bounded
        and synthetic_ok,
        summary={
            "fits": [
                {"R": radius, "fit": fit, "max_abs_u": peak}
                for radius, fit, peak in zip(options.radii, fits, peaks)
            ],
            "beta_stable": stable,
            "maximum_principle": bounded,
            "synthetic": synthetic,
            "synthetic_beta": options.synthetic_beta,
        },
        tables=tables,
    )


def run_control(config: RunConfig) -> Outcome:
    """Terminal norms of bounded boundary control over angles and basis sizes."""
    options = config.params
    grid = (options.r_in, options.r_out, options.nr, options.nw)
    rows, profile_rows, summary, monotone = [], [], [], True
    for degrees in options.thetas:
        reports = [
            heatfd.control_experiment(
                math.radians(degrees),
                options.horizon,
                grid,
                n_controls,
                options.bound,
                options.steps,
                options.n_time,
                options.tikhonov,
            )
            for n_controls in options.n_controls
        ]
        norms = [report.terminal_norm for report in reports]
        monotone &= all(b <= a + CONTROL_SLACK for a, b in zip(norms, norms[1:]))
        rows.extend(
            (degrees, r.n_controls, r.terminal_norm, r.free_norm, r.converged) for r in reports
        )
        last = reports[-1]
        profile_rows.extend(
            (degrees, t, node, value)
            for t, values in zip(last.profile_times, last.control_profile)
            for node, value in enumerate(values)
        )
        summary.append(
            {
                "theta_degrees": degrees,
                "free_norm": reports[0].free_norm,
                "runs": [
                    {
                        "n_controls": r.n_controls,
                        "terminal_norm": r.terminal_norm,
                        "converged": r.converged,
                        "status": r.status,
                        "coefficients": r.coefficients,
                    }
                    for r in reports
                ],
            }
        )
    return Outcome(
        passed=monotone,
        summary={"bound": options.bound, "tikhonov": options.tikhonov, "angles": summary},
        tables={
            "control_sweep": (
                ("theta", "n_controls", "terminal_norm", "free_norm", "converged"),
                rows,
            ),
            "control_profile": (("theta", "t", "boundary_node", "value"), profile_rows),
        },
    )


def run_g_check(config: RunConfig) -> Outcome:
    """Monotonicity of the auxiliary function on (0, 2]."""
    options = config.params
    report = weights.lemma22_g_check(options.beta, options.rho, options.a, options.grid_points)
    return Outcome(passed=report.passed, summary={"check": report})


def run_sample(config: RunConfig) -> Outcome:
    """Seeded points of Q_theta with their distance to the cone boundary."""
    options = config.params
    cone = ConeSpec(n=options.n, theta=min(math.radians(options.theta), math.pi))
    region = SamplingRegion(x1_range=(options.x1_min, options.x1_max), d_min=options.d_min)
    x, t = geometry.sample_arrays(cone, region, options.count, config.seed)
    distance = geometry.distance_to_boundary(cone, x) if len(x) else np.empty(0)
    header = tuple(f"x{k + 1}" for k in range(cone.n)) + ("t", "d_theta")
    rows = [tuple(xi) + (ti, di) for xi, ti, di in zip(x, t, np.atleast_1d(distance))]
    return Outcome(
        passed=True,
        summary={"cone": cone, "region": region, "count": len(rows)},
        tables={"samples": (header, rows)},
    )


RUNNERS: dict[str, Callable[[RunConfig], Outcome]] = {
    "alpha-curve": run_alpha_curve,
    "psd-scan": run_psd_scan,
    "a3-scan": run_a3_scan,
    "check-carleman": run_check_carleman,
    "check-identity": run_check_identity,
    "counterexample": run_counterexample,
    "crosscheck": run_crosscheck,
    "decay": run_decay,
    "control": run_control,
    "g-check": run_g_check,
    "sample": run_sample,
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per entry of `COMMANDS`.

    Option flags default to `argparse.SUPPRESS` so only values given explicitly reach
    the override layer.
    """
    parser = argparse.ArgumentParser(
        prog=DISTRIBUTION,
        description="Numerical checks for backward uniqueness of the heat equation in cones.",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="log level for messages on stderr",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, options in COMMANDS.items():
        sub = subparsers.add_parser(command, help=(options.__doc__ or "").split("\n")[0])
        sub.add_argument("--config", type=Path, default=None, help="key = value or JSON file")
        for field_info in dataclass_fields(CommonOptions):
            if field_info.name == "expect_violation":
                sub.add_argument(
                    _flag(field_info.name),
                    dest=field_info.name,
                    action="store_const",
                    const="true",
                    default=argparse.SUPPRESS,
                )
            else:
                sub.add_argument(
                    _flag(field_info.name), dest=field_info.name, default=argparse.SUPPRESS
                )
        for field_info in dataclass_fields(options):
            key = field_info.metadata.get("key", field_info.name)
            flags = [_flag(field_info.name)]
            if key != field_info.name:
                flags.append("-" + key if len(key) == 1 else _flag(key))
            sub.add_argument(*flags, dest=key, default=argparse.SUPPRESS, metavar="VALUE")
    return parser


def _write_csv(path: Path, header: Sequence[str], rows: list[Sequence[Any]]) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(value) for value in row])


def _csv_cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    return value


def _dump_json(path: Path, data: Any) -> None:
    path.write_text(
        json.dumps(to_jsonable(data), sort_keys=True, indent=2, allow_nan=False) + "\n",
        encoding="utf-8",
    )


def write_reports(config: RunConfig, outcome: Outcome) -> list[str]:
    """Write the JSON report, CSV tables and manifest; return the written file names."""
    stem = config.command.replace("-", "_")
    directory = config.output_dir
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in config.formats:
        name = f"{stem}.json"
        _dump_json(
            directory / name,
            {
                "schema_version": SCHEMA_VERSION,
                "command": config.command,
                "seed": config.seed,
                "passed": outcome.passed,
                "report": outcome.summary,
            },
        )
        written.append(name)
    if "csv" in config.formats:
        for table, (header, rows) in sorted(outcome.tables.items()):
            name = f"{stem}_{table}.csv" if table != stem else f"{stem}.csv"
            _write_csv(directory / name, header, rows)
            written.append(name)
    _dump_json(
        directory / "manifest.json",
        {
            "schema_version": SCHEMA_VERSION,
            "version": artifact_version(),
            "command": config.command,
            "config": {"common": config.common, "params": config.params},
            "passed": outcome.passed,
            "files": sorted(written),
        },
    )
    return written


def _overrides(namespace: argparse.Namespace) -> dict[str, Any]:
    skip = {"command", "config", "log_level"}
    return {normalize_key(key): value for key, value in vars(namespace).items() if key not in skip}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line and return the exit code.

    Args:
        argv: Arguments without the program name; `sys.argv[1:]` when None.

    Returns:
        0 all contracts passed, 1 a contract was violated, 2 the tool failed.
    """
    parser = build_parser()
    try:
        namespace = parser.parse_args(argv)
    except SystemExit as error:
        return EXIT_PASSED if error.code in (0, None) else EXIT_FAILED

    logging.basicConfig(
        level=getattr(logging, namespace.log_level),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(namespace.config, namespace.command, _overrides(namespace))
        _LOGGER.info("Running %s with %s", config.command, config.params)
        outcome = RUNNERS[config.command](config)
        write_reports(config, outcome)
    except ConfigError as error:
        _LOGGER.error("Configuration error: %s", error)
        return EXIT_FAILED
    except (ParameterError, NumericalError) as error:
        _LOGGER.error("%s failed: %s", namespace.command, error)
        return EXIT_FAILED
    except OSError as error:
        _LOGGER.error("Cannot write reports: %s", error)
        return EXIT_FAILED

    violated = not outcome.passed
    if config.common.expect_violation:
        if not violated:
            _LOGGER.warning("%s: expected a violation but every contract held", config.command)
        return EXIT_PASSED if violated else EXIT_VIOLATED
    if violated:
        _LOGGER.warning("%s: a contract was violated", config.command)
    return EXIT_VIOLATED if violated else EXIT_PASSED


def main() -> None:
    """Console entry point."""
    sys.exit(run())
