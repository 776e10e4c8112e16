"""Configures pytest for all tests, providing various fixtures"""

import math
from pathlib import Path

import pytest

from cone_carleman.config import OUTPUT_DIR_ENV
from cone_carleman.models import (
    BumpSpec,
    ConeSpec,
    CounterexampleParams,
    WeightParams,
)
from cone_carleman.verify import TestFunction, make_bump
from tests.oracle_test_object import OracleTestObject
from tests.test_data import (
    ADMISSIBLE_A,
    ADMISSIBLE_ALPHA,
    ADMISSIBLE_EPS,
    BUMP_CENTER,
    BUMP_RADII,
    BUMP_T_CENTER,
    BUMP_T_RADIUS,
    COUNTEREXAMPLE_A,
    COUNTEREXAMPLE_ALPHA,
    COUNTEREXAMPLE_SHIFT,
)


@pytest.fixture(name="weight")
def fixture_weight() -> WeightParams:
    """Admissible weight parameters in two dimensions."""
    return WeightParams(a=ADMISSIBLE_A, alpha=ADMISSIBLE_ALPHA, eps=ADMISSIBLE_EPS)


@pytest.fixture(name="cone")
def fixture_cone() -> ConeSpec:
    """The 120 degree cone in the plane."""
    return ConeSpec(n=2, theta=2.0 * math.pi / 3.0)


@pytest.fixture(name="bump")
def fixture_bump(cone: ConeSpec) -> TestFunction:
    """A product bump supported well inside Q_theta."""
    spec = BumpSpec(
        center=BUMP_CENTER, t_center=BUMP_T_CENTER, radii=BUMP_RADII, t_radius=BUMP_T_RADIUS
    )
    return make_bump(spec, cone)


@pytest.fixture(name="counterexample_params")
def fixture_counterexample_params() -> CounterexampleParams:
    """Parameters of the explicit solution with sector half-angle pi / 6."""
    return CounterexampleParams(
        A=COUNTEREXAMPLE_A, alpha=COUNTEREXAMPLE_ALPHA, shift=COUNTEREXAMPLE_SHIFT
    )


@pytest.fixture(name="oracle")
def fixture_oracle() -> OracleTestObject:
    """Provide an OracleTestObject with the default finite-difference step."""
    return OracleTestObject()


@pytest.fixture(name="output_dir")
def fixture_output_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Point the report directory environment variable at a temporary directory."""
    directory = tmp_path / "results"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(directory))
    return directory
