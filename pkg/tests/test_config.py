"""Tests for plateau_cli.config module"""

from unittest.mock import patch

import pytest

from plateau_cli import config as config_module
from plateau_cli.boundary import preset_curve
from plateau_cli.config import (
    ExperimentConfig,
    get_output_root,
    get_threads,
    parse_int,
)
from plateau_cli.errors import ConfigError


class TestParseInt:
    """Tests for integer parsing"""

    @pytest.mark.parametrize(
        ("text", "value"), [("16384", 16384), ("2^14", 16384), ("2**10", 1024), (" 1_000 ", 1000)]
    )
    def test_valid(self, text, value):
        assert parse_int(text) == value

    @pytest.mark.parametrize("text", ["", "1.5", "two", "2^"])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_int(text)


class TestExperimentConfig:
    """Tests for experiment files"""

    def test_parses_complete_file(self, experiment_text):
        experiment = ExperimentConfig.from_text(experiment_text, name="tiny")

        assert experiment.name == "tiny"
        assert experiment.profile == "desk"
        cfg = experiment.training
        assert (cfg.batch_size, cfg.adam_epochs, cfg.n_data) == (8, 3, 32)
        assert (cfg.n_lbfgs, cfg.lbfgs_iters, cfg.history, cfg.seed) == (16, 2, 5, 5)
        assert experiment.model.width == 4
        assert experiment.model.init_seed == 3
        assert experiment.evaluation.samples == 4
        assert experiment.intersect.grid_res == 32
        assert experiment.intersect.epsilon == 0.2

    def test_profile_defaults(self):
        text = "[model]\ninit_seed = 0\n[training]\nprofile = desk\nseed = 1\n[eval]\nseed = 2\n"
        experiment = ExperimentConfig.from_text(text)
        assert experiment.training.n_data == 2**12
        assert experiment.training.adam_epochs == 2000
        assert experiment.model.width == 32
        assert experiment.curve.preset == "unknot"

    def test_inline_comments(self, experiment_text):
        text = experiment_text.replace("width = 4", "width = 4  # narrow")
        assert ExperimentConfig.from_text(text).model.width == 4

    def test_power_notation(self, experiment_text):
        text = experiment_text.replace("n_data = 32", "n_data = 2^5")
        assert ExperimentConfig.from_text(text).training.n_data == 32

    @pytest.mark.parametrize(
        ("old", "new"),
        [
            ("seed = 5\n", ""),
            ("init_seed = 3\n", ""),
            ("seed = 2\n", ""),
        ],
    )
    def test_seeds_are_required(self, experiment_text, old, new):
        with pytest.raises(ConfigError, match="seed"):
            ExperimentConfig.from_text(experiment_text.replace(old, new, 1))

    def test_unknown_section(self, experiment_text):
        with pytest.raises(ConfigError, match="unknown section"):
            ExperimentConfig.from_text(experiment_text + "\n[plotting]\ndpi = 100\n")

    @pytest.mark.parametrize(
        ("old", "new"),
        [
            ("width = 4", "widht = 4"),
            ("b = 8", "batch = 8"),
            ("grid_res = 32", "grid = 32"),
            ("preset = unknot", "preset = unknot\nshape = round"),
        ],
    )
    def test_unknown_keys(self, experiment_text, old, new):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text(experiment_text.replace(old, new))

    def test_threads_not_configurable_per_experiment(self, experiment_text):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text(experiment_text.replace("m = 5", "m = 5\nthreads = 4"))

    def test_unknown_profile(self, experiment_text):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text(experiment_text.replace("profile = desk", "profile = huge"))

    def test_unknown_init(self, experiment_text):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text(experiment_text.replace("init_seed = 3", "init_seed = 3\ninit = he"))

    def test_malformed_file(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text("not an ini file")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_file(tmp_path / "missing.ini")


class TestCurves:
    """Tests for curve construction from experiment files"""

    def _experiment(self, curve_section, extra=""):
        text = f"[curve]\n{curve_section}\n[model]\ninit_seed = 0\n[training]\nseed = 1\n[eval]\nseed = 2\n{extra}"
        return ExperimentConfig.from_text(text)

    def test_torus_with_mirror(self):
        curve = self._experiment("torus = 3, 2\nmirror = true").build_curve()
        assert curve.label == "3_1*"
        assert curve.ambient_dim == 3

    def test_torus_radii(self):
        experiment = self._experiment("torus = 5, 2\nr_major = 3.0\nr_minor = 1.0")
        assert (experiment.curve.R, experiment.curve.r) == (3.0, 1.0)
        assert experiment.build_curve().label == "5_1"
        assert experiment.resolved["curve"]["r_major"] == 3.0

    def test_label_override(self):
        assert self._experiment("preset = figure8\nlabel = 4_1*").build_curve().label == "4_1*"

    def test_perturbation_requires_seed(self):
        with pytest.raises(ConfigError):
            self._experiment("preset = trefoil", "[perturbation]\nsigma = 0.1\n")

    def test_perturbation_applied(self):
        plain = self._experiment("preset = trefoil").build_curve()
        moved = self._experiment(
            "preset = trefoil", "[perturbation]\nsigma = 0.1\nk = 2\nseed = 4\n"
        ).build_curve()
        assert moved.label == plain.label
        assert not (moved.coeffs.shape == plain.coeffs.shape and (moved.coeffs == plain.coeffs).all())

    def test_table_relative_to_file(self, tmp_path):
        preset_curve("figure8").save(tmp_path / "curve.txt")
        ini = tmp_path / "run.ini"
        ini.write_text(
            "[curve]\ntable = curve.txt\n[model]\ninit_seed = 0\n[training]\nseed = 1\n[eval]\nseed = 2\n"
        )
        experiment = ExperimentConfig.from_file(ini)
        assert experiment.name == "run"
        assert experiment.build_curve().label == "4_1"

    def test_single_curve_source(self):
        with pytest.raises(ConfigError):
            self._experiment("preset = trefoil\ntorus = 3, 2")

    @pytest.mark.parametrize("torus", ["3", "3, 2, 1", "a, b"])
    def test_bad_torus(self, torus):
        with pytest.raises(ConfigError):
            self._experiment(f"torus = {torus}")

    def test_planar_model(self):
        model = self._experiment("preset = circle2d").build_model()
        assert model.arch.output_dim == 3
        assert model.arch.dims == (2, 64, 64, 64, 64, 3)


class TestResolution:
    """Tests for derived settings and the config echo"""

    def test_build_model_dimensions(self, experiment_text):
        model = ExperimentConfig.from_text(experiment_text).build_model()
        assert model.arch.dims == (2, 4, 4, 4)
        assert model.k == 2

    def test_thread_override(self, experiment_text):
        experiment = ExperimentConfig.from_text(experiment_text)
        assert experiment.train_config(3).threads == 3
        assert experiment.train_config().threads == 1
        assert experiment.train_config(3).seed == experiment.training.seed

    def test_output_dir(self, experiment_text, tmp_path):
        experiment = ExperimentConfig.from_text(experiment_text, name="tiny")
        assert experiment.resolve_output_dir(tmp_path) == tmp_path / "tiny"
        named = ExperimentConfig.from_text(experiment_text + "\n[output]\nname = other\n")
        assert named.resolve_output_dir(tmp_path) == tmp_path / "other"

    def test_echo_contains_raw_and_resolved(self, experiment_text):
        echo = ExperimentConfig.from_text(experiment_text).echo()
        assert echo.startswith(experiment_text)
        assert "# --- resolved values ---" in echo
        assert "# [training]" in echo
        assert "# adam_epochs = 3" in echo
        assert "# eta0 = 0.001" in echo


class TestUserConfig:
    """Tests for the user-level config.ini layer"""

    def test_output_root_from_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv("PLATEAU_OUTPUT_ROOT", str(tmp_path))
        assert get_output_root() == tmp_path

    def test_output_root_default(self, monkeypatch):
        monkeypatch.delenv("PLATEAU_OUTPUT_ROOT", raising=False)
        with patch.object(config_module, "config") as mock_config:
            mock_config.get.return_value = "runs"
            assert str(get_output_root()) == "runs"

    def test_threads_from_config(self):
        with patch.object(config_module, "config") as mock_config:
            mock_config.get.return_value = "3"
            assert get_threads() == 3
            mock_config.get.return_value = "many"
            assert get_threads() >= 1
