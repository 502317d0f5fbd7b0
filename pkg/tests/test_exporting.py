"""Tests for plateau_cli.exporting module"""

import numpy as np
import pytest

from plateau_cli.errors import ConfigError
from plateau_cli.exporting import (
    polar_mesh,
    read_json,
    read_table,
    residual_heatmap,
    surface_mesh,
    train_report_text,
    write_candidates,
    write_heatmap,
    write_json,
    write_loss_curve,
    write_mesh,
    write_proximity,
    write_records,
    write_train_report,
)
from plateau_cli.fixtures import get_fixture
from plateau_cli.intersections import Candidate, DoublePointRecord, ProximityField
from plateau_cli.network import init_params
from plateau_cli.surface import ModelSurface
from plateau_cli.training import TrainingRun, TrainReport


@pytest.fixture
def training_run():
    adam = TrainReport(
        "adam",
        losses=[3.0, 2.0, 1.0],
        batch_losses=[3.5, 2.5, 1.5],
        learning_rates=[1e-3, 5e-4, 0.0],
        initial_loss=4.0,
        best_epoch=2,
        best_loss=1.0,
    )
    lbfgs = TrainReport(
        "lbfgs", losses=[0.9, 0.1 + 0.2], initial_loss=1.0, best_epoch=1, best_loss=0.1 + 0.2
    )
    return TrainingRun(adam, lbfgs)


class TestTrainingExports:
    """Tests for loss curves and training reports"""

    def test_loss_curve(self, tmp_path, training_run):
        path = write_loss_curve(tmp_path / "out" / "loss_curve.csv", training_run)
        header = path.read_text().splitlines()[0]
        assert header == "phase,step,loss,batch_loss,learning_rate"

        table = read_table(path)
        assert table.shape == (5, 5)
        np.testing.assert_array_equal(table[:, 0], [0, 0, 0, 1, 1])
        np.testing.assert_array_equal(table[:, 1], [0, 1, 2, 0, 1])
        assert table[4, 2] == 0.1 + 0.2
        assert np.isnan(table[3, 3]) and np.isnan(table[4, 4])
        assert table[1, 4] == 5e-4

    def test_report_text(self, tmp_path, training_run):
        text = train_report_text(training_run)
        assert "adam.steps = 3" in text
        assert "lbfgs.best_epoch = 1" in text
        assert text.endswith(f"final_loss = {0.1 + 0.2!r}\n")
        assert write_train_report(tmp_path / "report.txt", training_run).read_text() == text

    def test_json(self, tmp_path):
        path = write_json(tmp_path / "a" / "eval.json", {"mean": 0.1 + 0.2, "seed": 3})
        assert read_json(path) == {"mean": 0.1 + 0.2, "seed": 3}


class TestFieldExports:
    """Tests for heatmaps, proximity fields, candidates and records"""

    def test_heatmap_of_hemisphere(self, tmp_path, unknot_config):
        params = init_params(unknot_config.arch, "zero")
        grid, values = residual_heatmap(unknot_config, params, 16)
        assert grid.shape == (values.size, 2)
        assert np.max(values) < 1e-18

        table = read_table(write_heatmap(tmp_path / "heatmap.csv", grid, values))
        assert table.shape == (values.size, 4)
        np.testing.assert_array_equal(table[:, :2], grid)

    def test_heatmap_log_floor(self, tmp_path):
        grid = np.array([[0.0, 0.0], [0.5, 0.0]])
        table = read_table(write_heatmap(tmp_path / "h.csv", grid, np.array([0.0, 1e-4])))
        np.testing.assert_allclose(table[:, 3], [-300.0, -4.0])

    def test_proximity(self, tmp_path):
        grid = np.array([[0.0, 0.0], [0.5, 0.5]])
        field = ProximityField(grid, 0.2, np.array([1e-3, 10.0]), 3)
        path = write_proximity(tmp_path / "proximity.csv", field)
        assert path.read_text().startswith("x,y,log10_mu\n")
        np.testing.assert_allclose(read_table(path)[:, 2], [-3.0, 1.0])

    def test_candidates(self, tmp_path):
        candidates = [Candidate((-0.375, 0.0), (0.375, 0.0), 0.01)]
        table = read_table(write_candidates(tmp_path / "candidates.csv", candidates))
        np.testing.assert_array_equal(table, [[-0.375, 0.0, 0.375, 0.0, 0.01]])

    def test_empty_candidates_keep_header(self, tmp_path):
        path = write_candidates(tmp_path / "candidates.csv", [])
        assert path.read_text().strip() == "x1,y1,x2,y2,image_distance"

    def test_records(self, tmp_path):
        record = DoublePointRecord(
            (-0.375, 0.0), (0.375, 0.0), (0.140625, 0.0, 0.0, 0.0), 1e-16, -2.5, -0.8, -1, 4
        )
        path = write_records(tmp_path / "records.csv", [record])
        header = path.read_text().splitlines()[0].split(",")
        assert header[4:8] == ["X", "Y1", "Y2", "Y3"]
        assert header[-2:] == ["sign", "newton_iters"]
        np.testing.assert_array_equal(read_table(path)[0], record.as_row())


class TestMeshes:
    """Tests for triangulated surface export"""

    @pytest.mark.parametrize(("rings", "sectors"), [(1, 8), (3, 12), (5, None)])
    def test_polar_mesh_counts(self, rings, sectors):
        vertices, faces = polar_mesh(rings, sectors)
        sectors = sectors or max(8, 4 * rings)
        assert vertices.shape == (1 + rings * sectors, 2)
        assert faces.shape == (sectors + 2 * sectors * (rings - 1), 3)
        assert faces.min() == 0 and faces.max() == vertices.shape[0] - 1
        np.testing.assert_allclose(np.hypot(*vertices[-sectors:].T), 1.0)

    def test_faces_are_counter_clockwise(self):
        vertices, faces = polar_mesh(4)
        a, b, c = (vertices[faces[:, i]] for i in range(3))
        cross = (b - a)[:, 0] * (c - a)[:, 1] - (b - a)[:, 1] * (c - a)[:, 0]
        assert np.all(cross > 0)

    def test_no_rings(self):
        with pytest.raises(ConfigError):
            polar_mesh(0)

    def test_hemisphere_in_ball_model(self, unknot_config):
        surface = ModelSurface(unknot_config, init_params(unknot_config.arch, "zero"))
        disc, image, faces = surface_mesh(surface, 4, "ball")
        assert image.shape == (disc.shape[0], 4)
        np.testing.assert_allclose(image[:, 0], 0.0, atol=1e-12)

    def test_fixture_mesh_files(self, tmp_path):
        disc, image, faces = surface_mesh(get_fixture("one_crossing"), 3)
        vertices, faces_path = write_mesh(tmp_path / "mesh", disc, image, faces, "halfspace")
        assert vertices.read_text().startswith("x,y,X,Y1,Y2,Y3\n")
        np.testing.assert_array_equal(read_table(faces_path).astype(int), faces)

    def test_unknown_model(self):
        with pytest.raises(ConfigError):
            surface_mesh(get_fixture("embedded"), 2, "klein")
