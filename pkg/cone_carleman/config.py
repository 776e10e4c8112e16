"""Run configuration for the `cone-carleman` command.

Every subcommand has a parameter dataclass whose fields carry a `converter` in their
metadata (and optionally a `key` when the config key differs from the field name). The
same metadata drives config files and command-line overrides, so the precedence
defaults < file < flags is applied field by field.
"""

import json
import logging
import os
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path
from typing import Any, Optional, Type

from cone_carleman.errors import ConfigError
from cone_carleman.positivity import A3_TOLERANCE, PSD_TOLERANCE
from cone_carleman.utils import (
    map_config_fields,
    normalize_key,
    parse_bool,
    parse_float_list,
    parse_int_list,
    parse_optional_float,
    parse_str_list,
)
from cone_carleman.verify import (
    CONSTANT_4,
    GAUSS_ORDER,
    INTERMEDIATE,
    LEVELS,
    RESOLUTION_RTOL,
)

_LOGGER = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "CONE_CARLEMAN_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"
FORMATS = ("json", "csv")
SCHEMA_VERSION = 1


def default_output_dir() -> str:
    """Output directory from `CONE_CARLEMAN_OUTPUT_DIR`, else `results`."""
    return os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR


def parse_formats(value: Any) -> tuple[str, ...]:
    """Subset of json,csv in canonical order."""
    requested = set(parse_str_list(value))
    unknown = requested - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown formats {sorted(unknown)}; choose from {list(FORMATS)}")
    return tuple(fmt for fmt in FORMATS if fmt in requested)


def parse_variant(value: Any) -> str:
    """Name of the weighted inequality form checked by check-carleman."""
    text = str(value).strip()
    if text not in (CONSTANT_4, INTERMEDIATE):
        raise ValueError(f"variant must be {CONSTANT_4!r} or {INTERMEDIATE!r}, got {text!r}")
    return text


def parse_prop(value: Any) -> int:
    """Which Carleman inequality to check: 21 (Gaussian weight) or 23 (cone weight)."""
    prop = int(value)
    if prop not in (21, 23):
        raise ValueError(f"prop must be 21 or 23, got {prop}")
    return prop


@dataclass(frozen=True)
class CommonOptions:
    """Keys shared by every subcommand."""

    seed: int = field(default=0, metadata={"converter": int})
    output_dir: str = field(default_factory=default_output_dir, metadata={"converter": str})
    formats: tuple[str, ...] = field(default=FORMATS, metadata={"converter": parse_formats})
    expect_violation: bool = field(default=False, metadata={"converter": parse_bool})
    """Invert the contract exit code: a violated contract exits 0."""


@dataclass(frozen=True)
class AlphaCurveOptions:
    """alpha-curve: the minimal admissible exponent over a range of eps."""

    eps_min: float = field(default=0.05, metadata={"converter": float})
    eps_max: float = field(default=0.55, metadata={"converter": float})
    steps: int = field(default=50, metadata={"converter": int})
    tol: float = field(default=1e-12, metadata={"converter": float})


@dataclass(frozen=True)
class PsdScanOptions:
    """psd-scan: D^2 varphi + f I over the cone at (alpha, eps) and at random pairs."""

    eps: float = field(default=0.5, metadata={"converter": float})
    alpha: float = field(default=1.85, metadata={"converter": float})
    n: int = field(default=2, metadata={"converter": int})
    count: int = field(default=10_000, metadata={"converter": int})
    pairs: int = field(default=10, metadata={"converter": int})
    """Additional seeded admissible (alpha, eps) pairs."""
    tolerance: float = field(default=PSD_TOLERANCE, metadata={"converter": float})


@dataclass(frozen=True)
class A3ScanOptions:
    """a3-scan: sign of the cubic term and its certificate lower bound."""

    eps: float = field(default=0.5, metadata={"converter": float})
    alpha: float = field(default=1.85, metadata={"converter": float})
    a: float = field(default=10.0, metadata={"converter": float})
    n: int = field(default=2, metadata={"converter": int})
    count: int = field(default=10_000, metadata={"converter": int})
    band: Optional[float] = field(default=None, metadata={"converter": parse_optional_float})
    """Sample only eps < x_1/|x| <= eps + band; above the critical eps 0.05 is used
    when unset."""
    tolerance: float = field(default=A3_TOLERANCE, metadata={"converter": float})


@dataclass(frozen=True)
class CheckCarlemanOptions:  # pylint: disable=too-many-instance-attributes
    """check-carleman: quadrature ratios of the weighted inequalities."""

    prop: int = field(default=23, metadata={"converter": parse_prop})
    eps: float = field(default=0.5, metadata={"converter": float})
    alpha: float = field(default=1.85, metadata={"converter": float})
    a_sweep: tuple[float, ...] = field(
        default=(5.0, 10.0, 20.0, 50.0, 100.0), metadata={"converter": parse_float_list}
    )
    bumps: int = field(default=20, metadata={"converter": int})
    modulated: int = field(default=5, metadata={"converter": int})
    n: int = field(default=2, metadata={"converter": int})
    levels: int = field(default=LEVELS, metadata={"converter": int})
    order: int = field(default=GAUSS_ORDER, metadata={"converter": int})
    variant: str = field(default=CONSTANT_4, metadata={"converter": parse_variant})
    rtol: float = field(default=RESOLUTION_RTOL, metadata={"converter": float})


@dataclass(frozen=True)
class CheckIdentityOptions:  # pylint: disable=too-many-instance-attributes
    """check-identity: the energy identity of the conjugated operator."""

    eps: float = field(default=0.5, metadata={"converter": float})
    alpha: float = field(default=1.85, metadata={"converter": float})
    a: float = field(default=10.0, metadata={"converter": float})
    bumps: int = field(default=10, metadata={"converter": int})
    n: int = field(default=2, metadata={"converter": int})
    levels: int = field(default=LEVELS, metadata={"converter": int})
    order: int = field(default=GAUSS_ORDER, metadata={"converter": int})
    rtol: float = field(default=RESOLUTION_RTOL, metadata={"converter": float})


@dataclass(frozen=True)
class CounterexampleOptions:  # pylint: disable=too-many-instance-attributes
    """counterexample: residual order, vanishing, sector suprema and a plotting slice."""

    amplitude: float = field(default=0.5, metadata={"converter": float, "key": "A"})
    alpha: float = field(default=3.0, metadata={"converter": float})
    shift: float = field(default=1.0, metadata={"converter": float})
    margin: float = field(default=0.05, metadata={"converter": float})
    count: int = field(default=100, metadata={"converter": int})
    radius_cap: float = field(default=4.0, metadata={"converter": float})
    vanishing_points: int = field(default=20, metadata={"converter": int})
    slice_s: float = field(default=0.5, metadata={"converter": float})
    slice_radius: float = field(default=2.0, metadata={"converter": float})
    slice_nr: int = field(default=20, metadata={"converter": int})
    slice_nw: int = field(default=16, metadata={"converter": int})


@dataclass(frozen=True)
class CrosscheckOptions:  # pylint: disable=too-many-instance-attributes
    """crosscheck: sector grid solution of the reversed problem against v."""

    amplitude: float = field(default=0.5, metadata={"converter": float, "key": "A"})
    alpha: float = field(default=4.0, metadata={"converter": float})
    shift: float = field(default=1.0, metadata={"converter": float})
    grids: tuple[int, ...] = field(default=(16, 32, 64), metadata={"converter": parse_int_list})
    s_start: float = field(default=0.9, metadata={"converter": float})
    s_end: float = field(default=1.0, metadata={"converter": float})
    r_in: float = field(default=0.1, metadata={"converter": float})
    r_out: float = field(default=0.5, metadata={"converter": float})
    margin: float = field(default=0.05, metadata={"converter": float})


@dataclass(frozen=True)
class DecayOptions:  # pylint: disable=too-many-instance-attributes
    """decay: small-time decay at the centre of a ball with constant boundary data."""

    radii: tuple[float, ...] = field(default=(4.0, 8.0), metadata={"converter": parse_float_list})
    bound: float = field(default=1.0, metadata={"converter": float, "key": "M"})
    n: int = field(default=1, metadata={"converter": int})
    nr: int = field(default=200, metadata={"converter": int})
    steps_per_r2: int = field(default=4096, metadata={"converter": int})
    window_lo: float = field(default=1.0 / 64.0, metadata={"converter": float})
    """Fit window start as a multiple of R^2."""
    window_hi: float = field(default=1.0 / 16.0, metadata={"converter": float})
    min_beta: float = field(default=0.05, metadata={"converter": float})
    stability: float = field(default=0.2, metadata={"converter": float})
    """Allowed relative change of the fitted rate between radii."""
    synthetic_beta: float = field(default=0.125, metadata={"converter": float})


@dataclass(frozen=True)
class ControlOptions:  # pylint: disable=too-many-instance-attributes
    """control: bounded boundary control across opening angles and basis sizes."""

    thetas: tuple[float, ...] = field(
        default=(60.0, 90.0, 120.0, 150.0), metadata={"converter": parse_float_list}
    )
    """Opening angles in degrees."""
    horizon: float = field(default=0.1, metadata={"converter": float, "key": "T"})
    r_in: float = field(default=0.5, metadata={"converter": float})
    r_out: float = field(default=1.5, metadata={"converter": float})
    nr: int = field(default=16, metadata={"converter": int})
    nw: int = field(default=16, metadata={"converter": int})
    n_controls: tuple[int, ...] = field(default=(4, 8, 16), metadata={"converter": parse_int_list})
    bound: float = field(default=5.0, metadata={"converter": float})
    steps: int = field(default=40, metadata={"converter": int})
    n_time: int = field(default=2, metadata={"converter": int})
    tikhonov: float = field(default=1e-12, metadata={"converter": float})


@dataclass(frozen=True)
class GCheckOptions:
    """g-check: monotonicity of the auxiliary decay function."""

    beta: float = field(default=0.003, metadata={"converter": float})
    rho: float = field(default=10.0, metadata={"converter": float})
    a: Optional[float] = field(default=None, metadata={"converter": parse_optional_float})
    grid_points: int = field(default=20_000, metadata={"converter": int})


@dataclass(frozen=True)
class SampleOptions:
    """sample: seeded points of Q_theta with their boundary distance."""

    theta: float = field(default=120.0, metadata={"converter": float})
    """Opening angle in degrees."""
    n: int = field(default=2, metadata={"converter": int})
    count: int = field(default=100, metadata={"converter": int})
    x1_min: float = field(default=1.0, metadata={"converter": float})
    x1_max: float = field(default=10.0, metadata={"converter": float})
    d_min: float = field(default=0.0, metadata={"converter": float})


COMMANDS: dict[str, Type] = {
    "alpha-curve": AlphaCurveOptions,
    "psd-scan": PsdScanOptions,
    "a3-scan": A3ScanOptions,
    "check-carleman": CheckCarlemanOptions,
    "check-identity": CheckIdentityOptions,
    "counterexample": CounterexampleOptions,
    "crosscheck": CrosscheckOptions,
    "decay": DecayOptions,
    "control": ControlOptions,
    "g-check": GCheckOptions,
    "sample": SampleOptions,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one run."""

    command: str
    params: Any
    """The command's options dataclass."""
    common: CommonOptions = field(default_factory=CommonOptions)

    @property
    def seed(self) -> int:
        """Seed for every random draw of the run."""
        return self.common.seed

    @property
    def output_dir(self) -> Path:
        """Directory reports are written to."""
        return Path(self.common.output_dir)

    @property
    def formats(self) -> tuple[str, ...]:
        """Report formats to write."""
        return self.common.formats


def options_type(command: str) -> Type:
    """The options dataclass of a subcommand."""
    try:
        return COMMANDS[command]
    except KeyError as error:
        raise ConfigError(f"unknown command '{command}'") from error


def parse_config_text(text: str) -> tuple[dict[str, Any], dict[str, int]]:
    """Parse a JSON object or `key = value` lines into normalized raw values.

    Returns:
        (values, lines): raw values by normalized key, and the 1-based line of every key.

    Raises:
        ConfigError: malformed line, duplicate key or a JSON document that is not an
            object.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            document = json.loads(stripped)
        except json.JSONDecodeError as error:
            raise ConfigError(f"invalid JSON: {error.msg}", error.lineno) from error
        if not isinstance(document, dict):
            raise ConfigError("JSON config must be an object")
        values = {normalize_key(key): value for key, value in document.items()}
        return values, {}

    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        key, separator, value = content.partition("=")
        key = normalize_key(key)
        if not separator or not key or not value.strip():
            raise ConfigError(f"expected 'key = value', got {line.strip()!r}", number)
        if key in values:
            raise ConfigError(f"duplicate key '{key}'", number)
        values[key] = value.strip()
        lines[key] = number
    return values, lines


def _split(raw: dict[str, Any], options: Type) -> tuple[dict[str, Any], dict[str, Any]]:
    common_keys = {field_info.name for field_info in dataclass_fields(CommonOptions)}
    common = {key: value for key, value in raw.items() if key in common_keys}
    params = {key: value for key, value in raw.items() if key not in common_keys}
    # config keys such as "A", "M" and "T" keep their case
    option_keys = {
        normalize_key(field_info.metadata.get("key", field_info.name)): field_info.metadata.get(
            "key", field_info.name
        )
        for field_info in dataclass_fields(options)
    }
    return common, {option_keys.get(key, key): value for key, value in params.items()}


def resolve_config(
    command: str,
    file_values: Optional[dict[str, Any]] = None,
    overrides: Optional[dict[str, Any]] = None,
    lines: Optional[dict[str, int]] = None,
) -> RunConfig:
    """Apply defaults, then config-file values, then command-line overrides.

    Args:
        command: Subcommand name.
        file_values: Normalized raw values from a config file.
        overrides: Normalized raw values given explicitly on the command line.
        lines: Line number of every file key, for error messages.

    Raises:
        ConfigError: an unknown key or an unconvertible value.
    """
    options = options_type(command)
    file_common, file_params = _split(file_values or {}, options)
    flag_common, flag_params = _split(overrides or {}, options)

    common = map_config_fields(file_common, CommonOptions, lines=lines)
    common = map_config_fields(flag_common, CommonOptions, base=common)
    params = map_config_fields(file_params, options, lines=lines)
    params = map_config_fields(flag_params, options, base=params)
    return RunConfig(command=command, params=params, common=common)


def load_config(
    path: Optional[Path], command: str, overrides: Optional[dict[str, Any]] = None
) -> RunConfig:
    """Read a UTF-8 config file and resolve it for `command`.

    Args:
        path: Config file; None means defaults only.
        command: Subcommand name.
        overrides: Explicit command-line values, which win over the file.

    Returns:
        The resolved run configuration.

    Raises:
        ConfigError: unreadable file, malformed line or unknown key.
    """
    file_values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as error:
            raise ConfigError(f"cannot read config {path}: {error}") from error
        file_values, lines = parse_config_text(text)
        _LOGGER.debug("Read %d config keys from %s", len(file_values), path)
    return resolve_config(command, file_values, overrides, lines)

