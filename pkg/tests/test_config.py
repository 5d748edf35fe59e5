import pytest

from blindguide.config.parser import ConfigParser
from blindguide.config.settings import RunConfig, load_config, validate_mapping
from blindguide.config.validator import ConfigValidator
from blindguide.exceptions import ConfigurationError


class TestParser:
    def test_flat_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nT = 50\n\nlambda_weights = 0.8, 0.2  # trailing\nT = 60\n")
        assert ConfigParser().parse(str(path)) == {"T": "60", "lambda_weights": "0.8, 0.2"}

    def test_flat_syntax_error(self):
        with pytest.raises(ValueError, match="Line 2"):
            ConfigParser.parse_flat("T = 5\njust words\n")

    def test_yaml_file(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("T: 50\nlambda_weights: [0.8, 0.2]\n")
        assert ConfigParser().parse(str(path)) == {"T": 50, "lambda_weights": [0.8, 0.2]}

    def test_nested_yaml_is_rejected(self, tmp_path):
        path = tmp_path / "run.yml"
        path.write_text("schedule:\n  T: 50\n")
        with pytest.raises(ValueError, match="schedule"):
            ConfigParser().parse(str(path))

    def test_environment_substitution(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BG_ARTIFACTS", "/data/artifacts")
        path = tmp_path / "run.cfg"
        path.write_text("prior_path = ${BG_ARTIFACTS}/prior\ndsst_path = ${BG_UNSET_VARIABLE}/t.tsv\n")
        config = ConfigParser().parse(str(path))
        assert config["prior_path"] == "/data/artifacts/prior"
        assert config["dsst_path"] == "${BG_UNSET_VARIABLE}/t.tsv"

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            ConfigParser().parse(str(tmp_path / "absent.cfg"))


class TestValidator:
    def test_converts_strings(self):
        result = ConfigValidator().validate({"T": "50", "tol": "1e-4", "lambda_weights": "0.8, 0.2",
                                             "log_level": "debug", "image_size": "16"})
        assert result.is_valid
        assert result.values == {"T": 50, "tol": 1e-4, "lambda_weights": [0.8, 0.2],
                                 "log_level": "DEBUG", "image_size": 16}

    @pytest.mark.parametrize("mapping,fragment", [
        ({"T": "1"}, "T must be >= 2"),
        ({"T": "2.5"}, "T must be an integer"),
        ({"tol": "0"}, "tol must be > 0.0"),
        ({"adjuster": "learned"}, "adjuster has unsupported value"),
        ({"gamma": "1, 2"}, "gamma must have exactly 4 entries"),
        ({"lambda_weights": "0.2, 0.8"}, "lambda_weights must be non-increasing"),
        ({"beta_start": "0.1", "beta_end": "0.01"}, "beta_start must not exceed beta_end"),
        ({"variance_window": "4"}, "variance_window must be odd"),
        ({"n_guidance": "3", "std_offsets": "0, 1"}, "std_offsets needs at least n_guidance=3 entries"),
        ({"colour": "red"}, "Unknown configuration key: colour"),
        ({"prior_kind": "kde"}, "prior_kind has unsupported value"),
        ({"exemplar_variance": "0"}, "exemplar_variance must be > 0.0"),
        ({"corpus_grain": "0.8"}, "corpus_grain must be <= 0.5"),
    ])
    def test_errors(self, mapping, fragment):
        result = ConfigValidator().validate(mapping)
        assert not result.is_valid
        assert any(fragment in error for error in result.errors)

    def test_warnings(self):
        result = validate_mapping({"adjuster": "dgsa"})
        assert result.is_valid
        assert result.warnings == ["adjuster is dgsa but no dgsa_path is set"]


class TestRunConfig:
    def test_defaults(self):
        config = load_config(None)
        assert config.T == 1000
        assert config.guidance_weights == [0.7, 0.2, 0.1]
        assert config.guidance_offsets == [0.0, 1.0, 2.0]
        assert (config.prior_kind, config.exemplar_variance, config.corpus_grain) == ("fitted", 1e-3, 0.0)
        assert config.std_lr == 0.02

    def test_from_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("T = 50\nn_guidance = 2\nlambda_weights = 0.8, 0.2\n")
        config = RunConfig.from_file(str(path))
        assert (config.T, config.n_guidance, config.guidance_weights) == (50, 2, [0.8, 0.2])

    def test_invalid_file_collects_every_error(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("T = 1\ntol = -1\n")
        with pytest.raises(ConfigurationError) as info:
            RunConfig.from_file(str(path))
        assert len(info.value.errors) == 2

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            RunConfig.from_file(str(tmp_path / "absent.cfg"))

    def test_too_few_weights(self):
        with pytest.raises(ConfigurationError):
            RunConfig(n_guidance=3, lambda_weights=[1.0])

    def test_overrides_are_validated(self):
        config = RunConfig().with_overrides(T=50, seed=None)
        assert config.T == 50 and config.seed == 0
        with pytest.raises(ConfigurationError):
            RunConfig().with_overrides(T=0)

    def test_flat_text_round_trip(self, tmp_path):
        config = RunConfig(T=50, n_guidance=2, lambda_weights=[0.8, 0.2], trace_path="out/trace.tsv")
        path = tmp_path / "run.cfg"
        path.write_text(config.to_flat_text())
        assert RunConfig.from_file(str(path)) == config
