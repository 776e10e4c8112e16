"""Test suite for the cone-carleman command line."""

import csv
import json
from pathlib import Path

import pytest

from cone_carleman import cli
from tests.test_data import G_CHECK_FAILING_BETA, G_CHECK_PASSING_BETA, G_CHECK_RHO


def read_json(path: Path) -> dict:
    """Load a report file."""
    return json.loads(path.read_text(encoding="utf-8"))


class TestGCheck:
    """The cheapest subcommand, used to exercise reporting and exit codes."""

    def test_passing_run(self, output_dir: Path):
        """Exit 0, a JSON report and a manifest listing it."""
        code = cli.run(["g-check", "--beta", str(G_CHECK_PASSING_BETA), "--rho", str(G_CHECK_RHO)])
        assert code == cli.EXIT_PASSED
        report = read_json(output_dir / "g_check.json")
        assert report["passed"] is True
        assert report["command"] == "g-check"
        assert report["schema_version"] == 1
        manifest = read_json(output_dir / "manifest.json")
        assert manifest["files"] == ["g_check.json"]
        assert manifest["config"]["params"]["beta"] == G_CHECK_PASSING_BETA
        assert isinstance(manifest["version"], str)

    def test_violation(self, output_dir: Path):
        """A violated contract exits 1 and still writes its report."""
        code = cli.run(["g-check", "--beta", str(G_CHECK_FAILING_BETA)])
        assert code == cli.EXIT_VIOLATED
        assert read_json(output_dir / "g_check.json")["passed"] is False

    def test_expect_violation(self, output_dir: Path):
        """--expect-violation swaps the contract exit codes."""
        assert cli.run(["g-check", "--beta", str(G_CHECK_FAILING_BETA), "--expect-violation"]) == 0
        assert cli.run(["g-check", "--beta", str(G_CHECK_PASSING_BETA), "--expect-violation"]) == 1
        assert (output_dir / "g_check.json").exists()

    def test_parameter_error(self, output_dir: Path):
        """rho <= 2 is a tool failure."""
        assert cli.run(["g-check", "--rho", "1"]) == cli.EXIT_FAILED
        assert not (output_dir / "manifest.json").exists()

    def test_config_file(self, output_dir: Path, tmp_path: Path):
        """Values come from the file unless a flag overrides them."""
        path = tmp_path / "g.cfg"
        path.write_text(f"beta = {G_CHECK_FAILING_BETA}\nrho = 12\n", encoding="utf-8")
        assert cli.run(["g-check", "--config", str(path)]) == cli.EXIT_VIOLATED
        assert cli.run(["g-check", "--config", str(path), "--beta", "0.001"]) == cli.EXIT_PASSED
        assert read_json(output_dir / "manifest.json")["config"]["params"]["rho"] == 12.0

    def test_bad_config(self, output_dir: Path, tmp_path: Path):
        """Unknown keys exit 2."""
        path = tmp_path / "g.cfg"
        path.write_text("beta = 0.003\nzeta = 1\n", encoding="utf-8")
        assert cli.run(["g-check", "--config", str(path)]) == cli.EXIT_FAILED


@pytest.mark.parametrize(
    "argv", [["plot"], ["g-check", "--beta"], [], ["g-check", "--formats", "xml"]]
)
def test_bad_arguments(argv, output_dir: Path):
    """Unknown commands, missing values and bad formats exit 2."""
    assert cli.run(argv) == cli.EXIT_FAILED


def test_sample_csv(output_dir: Path):
    """The sample table has one row per point and a d_theta column."""
    assert cli.run(["sample", "--count", "5", "--seed", "3", "--formats", "csv"]) == 0
    assert not (output_dir / "sample.json").exists()
    with (output_dir / "sample_samples.csv").open(encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["x1", "x2", "t", "d_theta"]
    assert len(rows) == 6
    assert all(float(row[3]) > 0.0 for row in rows[1:])
    assert read_json(output_dir / "manifest.json")["files"] == ["sample_samples.csv"]


def test_a3_scan_above_critical_eps(output_dir: Path):
    """eps = 0.6 produces negative A_3 near the boundary ray."""
    argv = ["a3-scan", "--eps", "0.6", "--alpha", "1.9", "--count", "2000", "--seed", "3"]
    assert cli.run(argv) == cli.EXIT_VIOLATED
    report = read_json(output_dir / "a3_scan.json")["report"]
    assert report["boundary_band"] == cli.DEFAULT_A3_BAND
    assert report["scan"]["negative_count"] > 0
    assert cli.run(argv + ["--expect-violation"]) == cli.EXIT_PASSED


@pytest.mark.slow
def test_decay(output_dir: Path):
    """The decay law and the synthetic fit hold; -M sets the boundary value."""
    assert cli.run(["decay", "-M", "2", "--radii", "4,8"]) == cli.EXIT_PASSED
    report = read_json(output_dir / "decay.json")["report"]
    assert report["beta_stable"] is True
    assert report["maximum_principle"] is True
    assert [entry["R"] for entry in report["fits"]] == [4.0, 8.0]
    assert (output_dir / "decay_decay_R4.csv").exists()
    assert (output_dir / "decay_decay_R8.csv").exists()


def snapshot(directory: Path) -> dict[str, bytes]:
    """Every file in a report directory by name."""
    return {path.name: path.read_bytes() for path in sorted(directory.iterdir())}


@pytest.mark.parametrize(
    "argv",
    [
        ["psd-scan", "--count", "300", "--pairs", "2", "--seed", "7"],
        ["sample", "--count", "50", "--seed", "11", "--n", "3"],
        ["alpha-curve", "--steps", "10"],
    ],
)
def test_reruns_are_byte_identical(argv, output_dir: Path):
    """Same options and seed write the same bytes."""
    assert cli.run(argv) != cli.EXIT_FAILED
    first = snapshot(output_dir)
    assert cli.run(argv) != cli.EXIT_FAILED
    assert snapshot(output_dir) == first
    assert "manifest.json" in first
    assert any(name.endswith(".csv") for name in first)


def test_alpha_curve(output_dir: Path):
    """The curve passes its residual, monotonicity and audit checks."""
    assert cli.run(["alpha-curve", "--steps", "20"]) == cli.EXIT_PASSED
    report = read_json(output_dir / "alpha_curve.json")["report"]
    assert report["curve_points"] == 20
    assert report["nondecreasing"] is True
    assert report["max_abs_residual"] <= cli.ALPHA_CURVE_RESIDUAL
    with (output_dir / "alpha_curve.csv").open(encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["eps", "alpha_star", "residual"]
    assert len(rows) == 21


def test_psd_scan(output_dir: Path):
    """The chosen pair plus two random admissible pairs all scan positive."""
    argv = ["psd-scan", "--count", "500", "--pairs", "2", "--seed", "7"]
    assert cli.run(argv) == cli.EXIT_PASSED
    report = read_json(output_dir / "psd_scan.json")["report"]
    assert len(report["scans"]) == 3
    assert report["scans"][0]["params"]["alpha"] == 1.85
    assert read_json(output_dir / "manifest.json")["files"] == ["psd_scan.csv", "psd_scan.json"]


@pytest.mark.slow
def test_check_carleman_cone_weight(output_dir: Path):
    """Two suite bumps at the two largest default a values stay within 4 and resolve."""
    argv = ["check-carleman", "--bumps", "2", "--modulated", "0", "--a-sweep", "50,100"]
    assert cli.run(argv) == cli.EXIT_PASSED
    sweep = read_json(output_dir / "check_carleman.json")["report"]["sweep"]
    assert sweep["a_values"] == [50.0, 100.0]
    assert sweep["resolved"] == [True, True]
    assert all(ratio <= 4.0 for ratio in sweep["max_ratios"])
    with (output_dir / "check_carleman_a_sweep.csv").open(encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["a", "max_ratio", "resolved"]
    assert [row[2] for row in rows[1:]] == ["True", "True"]
    with (output_dir / "check_carleman_prop23.csv").open(encoding="utf-8") as handle:
        assert len(list(csv.reader(handle))) == 5


@pytest.mark.slow
def test_check_carleman_gaussian_weight(output_dir: Path):
    """Finite, refinement-stable and resolved ratios for the Gaussian weight."""
    argv = ["check-carleman", "--prop", "21", "--bumps", "2", "--a-sweep", "2,5"]
    assert cli.run(argv) == cli.EXIT_PASSED
    report = read_json(output_dir / "check_carleman.json")["report"]
    assert report["finite"] is True
    assert report["refinement_stable"] is True
    assert report["resolved"] is True
    with (output_dir / "check_carleman_prop21.csv").open(encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["a", "bump", "ratio", "lhs_error", "rhs_error", "status"]
    assert {row[5] for row in rows[1:]} == {"passed"}


def test_counterexample(output_dir: Path):
    """Second-order residual, vanishing at s -> 0 and a finite sector supremum."""
    assert cli.run(["counterexample", "--slice-nr", "5", "--slice-nw", "4"]) == cli.EXIT_PASSED
    report = read_json(output_dir / "counterexample.json")["report"]
    assert report["residual"]["passed"] is True
    assert report["vanishing"]["passed"] is True
    with (output_dir / "counterexample_counterexample_slice.csv").open(encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["y1", "y2", "s", "v"]
    assert len(rows) > 1


@pytest.mark.slow
def test_crosscheck(output_dir: Path):
    """The grid error falls from 16 to 32 cells per direction."""
    assert cli.run(["crosscheck", "--grids", "16,32"]) == cli.EXIT_PASSED
    report = read_json(output_dir / "crosscheck.json")["report"]
    assert [level["grid"] for level in report["levels"]] == [16, 32]
    assert report["ratios"][0] > 1.0
    assert (output_dir / "crosscheck.csv").exists()
    assert (output_dir / "crosscheck_crosscheck_error_field.csv").exists()


@pytest.mark.slow
def test_control(output_dir: Path):
    """One angle, two basis sizes; the control never does worse than free decay."""
    argv = ["control", "--thetas", "120", "-T", "0.2", "--nr", "8", "--nw", "8"]
    argv += ["--n-controls", "4,8", "--bound", "1"]
    assert cli.run(argv) != cli.EXIT_FAILED
    angles = read_json(output_dir / "control.json")["report"]["angles"]
    assert [entry["theta_degrees"] for entry in angles] == [120.0]
    runs = angles[0]["runs"]
    assert [run["n_controls"] for run in runs] == [4, 8]
    for run in runs:
        assert run["terminal_norm"] <= angles[0]["free_norm"] * (1.0 + 1e-9)
    with (output_dir / "control_control_profile.csv").open(encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["theta", "t", "boundary_node", "value"]
    assert all(float(row[3]) == 0.0 for row in rows[1:] if float(row[1]) == 0.0)
    assert (output_dir / "control_control_sweep.csv").exists()
