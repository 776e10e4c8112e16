"""Test suite for run configuration parsing and precedence."""

from pathlib import Path

import pytest

from cone_carleman import config
from cone_carleman.errors import ConfigError
from cone_carleman.verify import INTERMEDIATE
from tests.test_data import CONFIG_JSON, CONFIG_TEXT


class TestParseConfigText:
    """key = value lines and JSON objects."""

    def test_key_value_lines(self):
        """Comments are dropped, keys normalized and line numbers kept."""
        values, lines = config.parse_config_text(CONFIG_TEXT)
        assert values == {"radii": "4, 8", "m": "2.5", "window_lo": "0.02", "seed": "7"}
        assert lines == {"radii": 2, "m": 3, "window_lo": 4, "seed": 5}

    def test_json(self):
        """A JSON object keeps its native value types."""
        values, lines = config.parse_config_text(CONFIG_JSON)
        assert values == {"beta": 0.002, "rho": 12, "formats": ["json"]}
        assert not lines

    def test_duplicate_key(self):
        """The second occurrence is reported with its line."""
        with pytest.raises(ConfigError) as error:
            config.parse_config_text("seed = 1\n\nSeed = 2\n")
        assert error.value.line == 3
        assert "duplicate key 'seed'" in str(error.value)

    @pytest.mark.parametrize("text", ["seed 1", "= 3", "seed ="])
    def test_malformed_line(self, text: str):
        """Every non-comment line needs a key, '=' and a value."""
        with pytest.raises(ConfigError) as error:
            config.parse_config_text(text)
        assert error.value.line == 1

    def test_invalid_json(self):
        """JSON syntax errors carry the JSON line number."""
        with pytest.raises(ConfigError) as error:
            config.parse_config_text('{"beta": }')
        assert error.value.line == 1


class TestResolveConfig:
    """defaults < file < flags."""

    def test_file_values(self):
        """File values replace the defaults, including the case-sensitive M key."""
        values, lines = config.parse_config_text(CONFIG_TEXT)
        run = config.resolve_config("decay", values, lines=lines)
        assert run.params.radii == (4.0, 8.0)
        assert run.params.bound == 2.5
        assert run.params.window_lo == 0.02
        assert run.params.window_hi == pytest.approx(1.0 / 16.0)
        assert run.seed == 7

    def test_flags_win(self):
        """An explicit flag overrides the file."""
        values, lines = config.parse_config_text(CONFIG_TEXT)
        run = config.resolve_config("decay", values, {"m": "3", "seed": "9"}, lines)
        assert run.params.bound == 3.0
        assert run.seed == 9
        assert run.params.radii == (4.0, 8.0)

    def test_json_values(self):
        """JSON numbers and lists pass through the converters."""
        values, _ = config.parse_config_text(CONFIG_JSON)
        run = config.resolve_config("g-check", values)
        assert run.params.beta == 0.002
        assert run.params.rho == 12.0
        assert run.formats == ("json",)
        assert run.params.a is None

    def test_single_letter_keys(self):
        """A and T map onto amplitude and horizon."""
        assert config.resolve_config("counterexample", {"a": "0.7"}).params.amplitude == 0.7
        assert config.resolve_config("control", {"t": "0.3"}).params.horizon == 0.3

    def test_unknown_key(self):
        """An unknown file key is an error with its line."""
        values, lines = config.parse_config_text("# header\nradius = 4\n")
        with pytest.raises(ConfigError) as error:
            config.resolve_config("decay", values, lines=lines)
        assert error.value.line == 2
        assert "unknown key 'radius'" in str(error.value)

    def test_bad_value(self):
        """Converter failures name the key."""
        with pytest.raises(ConfigError) as error:
            config.resolve_config("sample", {"count": "many"})
        assert "bad value for 'count'" in str(error.value)

    def test_variant_and_prop(self):
        """check-carleman validates its variant and inequality number."""
        run = config.resolve_config("check-carleman", {"variant": INTERMEDIATE, "prop": "21"})
        assert run.params.variant == INTERMEDIATE
        assert run.params.prop == 21
        with pytest.raises(ConfigError):
            config.resolve_config("check-carleman", {"prop": "22"})
        with pytest.raises(ConfigError):
            config.resolve_config("check-carleman", {"variant": "constant-2"})

    def test_unknown_command(self):
        """Only the documented subcommands."""
        with pytest.raises(ConfigError):
            config.resolve_config("plot")

    def test_output_dir_from_environment(self, output_dir: Path):
        """CONE_CARLEMAN_OUTPUT_DIR replaces the default directory."""
        assert config.resolve_config("sample").output_dir == output_dir

    def test_output_dir_default(self, monkeypatch: pytest.MonkeyPatch):
        """Without the variable reports go to results/."""
        monkeypatch.delenv(config.OUTPUT_DIR_ENV, raising=False)
        assert config.resolve_config("sample").output_dir == Path(config.DEFAULT_OUTPUT_DIR)


def test_parse_formats():
    """Formats come back in canonical order; unknown ones fail."""
    assert config.parse_formats("csv,json") == ("json", "csv")
    assert config.parse_formats(["csv"]) == ("csv",)
    with pytest.raises(ValueError):
        config.parse_formats("json,xml")


def test_load_config(tmp_path: Path):
    """Files are read as UTF-8; a missing file is a configuration error."""
    path = tmp_path / "decay.cfg"
    path.write_text(CONFIG_TEXT, encoding="utf-8")
    run = config.load_config(path, "decay", {"radii": "2.5,5"})
    assert run.params.radii == (2.5, 5.0)
    assert run.params.bound == 2.5
    assert config.load_config(None, "decay").params.radii == (4.0, 8.0)
    with pytest.raises(ConfigError):
        config.load_config(tmp_path / "missing.cfg", "decay")
