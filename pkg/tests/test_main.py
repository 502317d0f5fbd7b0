"""Tests for plateau_cli.main module"""

from unittest.mock import patch

import pytest

from plateau_cli import __version__, verbose_logger
from plateau_cli.checkpoint import Checkpoint
from plateau_cli.errors import CheckpointError, ConfigError, TrainingAborted
from plateau_cli.exporting import read_json, read_table, write_json
from plateau_cli.main import (
    _build_parser,
    eval_command,
    export_surface_command,
    fixture_command,
    intersect_command,
    main,
    report_command,
    train_command,
)
from plateau_cli.training import TrainReport


@pytest.fixture
def fixture_checkpoint(tmp_path):
    """one_crossing fixture written to tmp_path/fixture/model.json"""
    with patch("plateau_cli.main.print"):
        return fixture_command("one_crossing", tmp_path / "fixture" / "model.json")


@pytest.fixture
def trefoil_checkpoint(tmp_path, trefoil_config, random_params):
    checkpoint = Checkpoint.from_model(trefoil_config, random_params, {"perturbed": True})
    return checkpoint.save(tmp_path / "trefoil" / "model.json")


@pytest.fixture
def experiment_file(tmp_path, experiment_text):
    path = tmp_path / "tiny.ini"
    path.write_text(experiment_text.replace("preset = unknot", "torus = 3, 2"))
    return path


class TestParser:
    """Tests for the argument parser"""

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            _build_parser().parse_args(["--version"])
        assert exc.value.code == 0
        assert f"plateau-cli {__version__}" in capsys.readouterr().out

    def test_intersect_options(self):
        args = _build_parser().parse_args(
            ["--threads", "2", "intersect", "model.json", "--grid", "65", "--eps", "0.1"]
        )
        assert (args.command, args.grid_res, args.epsilon, args.threads) == (
            "intersect",
            65,
            0.1,
            2,
        )
        assert args.tau_img is None

    def test_unknown_fixture_rejected(self):
        with pytest.raises(SystemExit):
            _build_parser().parse_args(["fixture", "three_crossing", "out.json"])

    def test_export_defaults(self):
        args = _build_parser().parse_args(["export-surface", "model.json"])
        assert (args.model, args.rings, args.output) == ("halfspace", 64, None)


class TestFixtureWorkflow:
    """Tests for intersect and report on analytic fixtures"""

    def test_fixture_command(self, fixture_checkpoint):
        assert Checkpoint.load(fixture_checkpoint).knot == "one_crossing"

    def test_intersect_writes_results(self, fixture_checkpoint):
        with patch("plateau_cli.main.print"):
            summary = intersect_command(fixture_checkpoint, grid_res=65, threads=1)

        assert summary["knot"] == "one_crossing"
        assert summary["self_intersection_number"] == 1
        assert summary["signed_sum"] == 1
        directory = fixture_checkpoint.parent
        assert read_json(directory / "intersections.json") == summary
        records = read_table(directory / "records.csv")
        assert records.shape == (1, 13)
        assert records[0, 11] == 1.0
        assert (directory / "proximity.csv").exists()
        assert (directory / "candidates.csv").exists()

    def test_intersect_output_directory(self, fixture_checkpoint, tmp_path):
        with patch("plateau_cli.main.print"):
            intersect_command(fixture_checkpoint, grid_res=65, output=tmp_path / "elsewhere")
        assert (tmp_path / "elsewhere" / "intersections.json").exists()

    def test_report_without_verdict(self, fixture_checkpoint):
        """Fixtures have no stored polynomial, so the report carries no verdict"""
        with patch("plateau_cli.main.print"), patch("plateau_cli.main.console"):
            intersect_command(fixture_checkpoint, grid_res=65, threads=1)
            row = report_command(fixture_checkpoint)

        assert row["d"] == 1
        assert row["verdict"] == "-"
        assert "homfly" not in row

    def test_report_needs_results(self, fixture_checkpoint):
        with pytest.raises(ConfigError, match="intersect"):
            report_command(fixture_checkpoint)

    def test_fixture_cannot_be_evaluated(self, fixture_checkpoint):
        with pytest.raises(CheckpointError):
            eval_command(fixture_checkpoint, seed=1)

    def test_export_fixture_mesh(self, fixture_checkpoint):
        with patch("plateau_cli.main.print"):
            out_dir = export_surface_command(fixture_checkpoint, rings=3)
        assert out_dir == fixture_checkpoint.parent / "mesh_halfspace"
        assert read_table(out_dir / "faces.csv").shape == (12 + 2 * 12 * 2, 3)


class TestReport:
    """Tests for the HOMFLY consistency report"""

    def test_consistent(self, trefoil_checkpoint):
        with patch("plateau_cli.main.print"), patch("plateau_cli.main.console") as console:
            row = report_command(trefoil_checkpoint, d=1)

        assert row["knot"] == "3_1"
        assert row["verdict"] == "CONSISTENT"
        assert row["term"] == "2a²"
        assert row["mc"] == "-"
        console.print.assert_called_once()

    def test_not_predicted(self, trefoil_checkpoint):
        with patch("plateau_cli.main.print"), patch("plateau_cli.main.console"):
            row = report_command(trefoil_checkpoint, d=0)
        assert row["verdict"] == "NOT PREDICTED"
        assert row["term"] == "-"

    def test_sidecars(self, trefoil_checkpoint):
        directory = trefoil_checkpoint.parent
        write_json(directory / "intersections.json", {"self_intersection_number": 1})
        write_json(directory / "eval.json", {"formatted": "1.00e-05 ± 1.00e-07 (1.10e-05)"})
        with patch("plateau_cli.main.print"), patch("plateau_cli.main.console"):
            row = report_command(trefoil_checkpoint)
        assert row["d"] == 1
        assert row["mc"] == "1.00e-05 ± 1.00e-07 (1.10e-05)"

    def test_unresolved_multiplicity(self, trefoil_checkpoint):
        sidecar = trefoil_checkpoint.parent / "intersections.json"
        write_json(sidecar, {"self_intersection_number": None})
        with patch("plateau_cli.main.print"), patch("plateau_cli.main.console"):
            row = report_command(trefoil_checkpoint)
        assert row["d"] is None
        assert row["verdict"] == "INDETERMINATE"


@pytest.mark.integration
class TestTrainingWorkflow:
    """End-to-end training, evaluation and export on a tiny network"""

    def test_train_eval_export(self, experiment_file, tmp_path):
        out_dir = tmp_path / "run"
        with patch("plateau_cli.main.print"):
            path = train_command(experiment_file, output=out_dir, threads=1)

            assert path == out_dir / "model.json"
            checkpoint = Checkpoint.load(path)
            assert checkpoint.knot == "3_1"
            assert checkpoint.metadata["train_seed"] == 5
            assert checkpoint.metadata["eval"]["seed"] == 2
            assert checkpoint.config.arch.dims == (2, 4, 4, 4)
            assert "torus = 3, 2" in checkpoint.config_text
            assert "# --- resolved values ---" in (out_dir / "config_echo.ini").read_text()
            assert (out_dir / "train_report.txt").read_text().startswith("adam.phase = adam")
            assert read_table(out_dir / "loss_curve.csv")[0, 0] == 0.0

            summary = eval_command(path, threads=1)
            assert summary["samples"] == 4
            assert summary["size"] == 16
            assert summary["seed"] == 2
            assert summary["std"] >= 0.0
            assert read_json(out_dir / "eval.json") == summary
            assert (out_dir / "heatmap.csv").exists()

            mesh_dir = export_surface_command(path, model="ball", rings=2)
            vertices = read_table(mesh_dir / "vertices.csv")
            assert vertices.shape == (1 + 2 * 8, 6)

    def test_eval_is_reproducible(self, experiment_file, tmp_path):
        with patch("plateau_cli.main.print"):
            path = train_command(experiment_file, output=tmp_path / "run", threads=1)
            first = eval_command(path, samples=3, size=8, heatmap_res=8, threads=1)
            second = eval_command(path, samples=3, size=8, heatmap_res=8, threads=2)
        assert first == second

    def test_aborted_phase_is_reported(self, experiment_file, tmp_path):
        report = TrainReport("adam", losses=[1.0], reason="non_finite")
        with (
            patch("plateau_cli.main.print"),
            patch("plateau_cli.main.train", side_effect=TrainingAborted("boom", report)),
            pytest.raises(TrainingAborted),
        ):
            train_command(experiment_file, output=tmp_path / "run", threads=1)
        assert "reason = non_finite" in (tmp_path / "run" / "adam_aborted.txt").read_text()


class TestMain:
    """Tests for the main entry point"""

    def test_no_command_prints_help(self, capsys):
        main([])
        assert "plateau-cli" in capsys.readouterr().out

    def test_fixture(self, tmp_path):
        out = tmp_path / "embedded.json"
        with patch("plateau_cli.main.print"):
            main(["fixture", "embedded", str(out)])
        assert Checkpoint.load(out).knot == "embedded"

    def test_dispatches_intersect(self):
        with patch("plateau_cli.main.intersect_command") as mock_intersect:
            main(["--threads", "3", "intersect", "model.json", "--grid", "65"])
        mock_intersect.assert_called_once_with("model.json", 65, None, None, None, None, 3)

    def test_error_exits_with_status_1(self, tmp_path):
        with patch("plateau_cli.main.print") as mock_print, pytest.raises(SystemExit) as exc:
            main(["intersect", str(tmp_path / "missing.json")])
        assert exc.value.code == 1
        assert "Error" in mock_print.call_args[0][0]

    def test_verbose_log_file(self, tmp_path):
        log_file = tmp_path / "verbose.log"
        try:
            with patch("plateau_cli.main.print"), patch("plateau_cli.verbose_logger.console"):
                main(
                    [
                        "--verbose",
                        "--log-file",
                        str(log_file),
                        "fixture",
                        "embedded",
                        str(tmp_path / "fixture.json"),
                    ]
                )
        finally:
            verbose_logger.set_verbose(False)
        text = log_file.read_text(encoding="utf-8")
        assert text.startswith("=== plateau-cli Verbose Log ===")
        assert "✓ Done" in text
