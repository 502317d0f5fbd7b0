"""Plain-text exports: loss curves, reports, heatmaps, proximity fields, records, meshes.

Every numeric file is comma-separated with a header line and 17 significant
digits, so it parses back to the same doubles.
"""

from __future__ import annotations

import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .intersections import Candidate, DoublePointRecord, ProximityField, disc_grid
from .network import ParameterVector
from .residual import sq_norm_field
from .surface import DEFAULT_CHUNK, ModelConfig, SurfaceMap, to_ball_model
from .training import TrainingRun, TrainReport

FLOAT_FMT = "%.17g"
MESH_MODELS = ("halfspace", "ball")


def _savetxt(path: str | Path, data: np.ndarray, columns: Sequence[str], fmt=FLOAT_FMT) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.asarray(data, dtype=np.float64).reshape(-1, len(columns))
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=",".join(columns), comments="")
    return path


def read_table(path: str | Path) -> np.ndarray:
    """Numeric body of a file written by this module"""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_json(path: str | Path, data: dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    return path


def read_json(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _phase_rows(index: int, report: TrainReport) -> np.ndarray:
    steps = len(report.losses)
    rows = np.full((steps, 5), np.nan)
    rows[:, 0] = index
    rows[:, 1] = np.arange(steps)
    rows[:, 2] = report.losses
    if report.batch_losses:
        rows[:, 3] = report.batch_losses
    if report.learning_rates:
        rows[:, 4] = report.learning_rates
    return rows


def write_loss_curve(path: str | Path, run: TrainingRun) -> Path:
    """Columns phase (0 Adam, 1 L-BFGS), step, loss, batch_loss, learning_rate"""
    rows = np.concatenate([_phase_rows(0, run.adam), _phase_rows(1, run.lbfgs)], axis=0)
    return _savetxt(path, rows, ["phase", "step", "loss", "batch_loss", "learning_rate"])


def train_report_text(run: TrainingRun) -> str:
    lines = []
    for report in (run.adam, run.lbfgs):
        for line in report.to_text().splitlines():
            lines.append(f"{report.phase}.{line}")
    lines.append(f"final_loss = {run.final_loss!r}")
    return "\n".join(lines) + "\n"


def write_train_report(path: str | Path, run: TrainingRun) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(train_report_text(run), encoding="utf-8")
    return path


def residual_heatmap(
    config: ModelConfig,
    params: ParameterVector,
    grid_res: int,
    chunk_size: int = DEFAULT_CHUNK,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Squared tension norm on the masked Cartesian disc grid"""
    grid = disc_grid(grid_res)
    return grid, sq_norm_field(config, params, grid, chunk_size, threads)


def write_heatmap(path: str | Path, grid: np.ndarray, values: np.ndarray) -> Path:
    log = np.log10(np.maximum(values, 1e-300))
    return _savetxt(
        path, np.column_stack([grid, values, log]), ["x", "y", "sq_norm", "log10_sq_norm"]
    )


def write_proximity(path: str | Path, field: ProximityField) -> Path:
    return _savetxt(path, np.column_stack([field.grid, field.log10()]), ["x", "y", "log10_mu"])


def write_candidates(path: str | Path, candidates: Sequence[Candidate]) -> Path:
    rows = np.array([[*c.p1, *c.p2, c.distance] for c in candidates]).reshape(-1, 5)
    return _savetxt(path, rows, ["x1", "y1", "x2", "y2", "image_distance"])


def write_records(path: str | Path, records: Sequence[DoublePointRecord], dim: int = 4) -> Path:
    image = ["X"] + [f"Y{k}" for k in range(1, dim)]
    columns = ["x1", "y1", "x2", "y2", *image]
    columns += ["residual", "jac_det", "normalized_det", "sign", "newton_iters"]
    rows = np.array([r.as_row() for r in records]).reshape(-1, len(columns))
    return _savetxt(path, rows, columns)


def polar_mesh(rings: int, sectors: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Closed-disc polar grid: the centre, then ``rings`` circles of ``sectors`` points.

    The outermost ring is the unit circle. Faces are counter-clockwise
    vertex index triples.
    """
    if rings < 1:
        raise ConfigError(f"mesh needs at least one ring, got {rings}")
    sectors = sectors or max(8, 4 * rings)
    theta = 2.0 * np.pi * np.arange(sectors) / sectors
    radii = np.arange(1, rings + 1) / rings
    ring_pts = np.stack(
        [np.outer(radii, np.cos(theta)).ravel(), np.outer(radii, np.sin(theta)).ravel()], axis=1
    )
    vertices = np.concatenate([np.zeros((1, 2)), ring_pts], axis=0)

    def vid(ring: int, k: int) -> int:
        return 1 + ring * sectors + k % sectors

    faces = [(0, vid(0, k), vid(0, k + 1)) for k in range(sectors)]
    for ring in range(rings - 1):
        for k in range(sectors):
            a, b = vid(ring, k), vid(ring, k + 1)
            c, d = vid(ring + 1, k), vid(ring + 1, k + 1)
            faces.append((a, c, d))
            faces.append((a, d, b))
    return vertices, np.array(faces, dtype=np.int64)


def surface_mesh(
    surface: SurfaceMap, rings: int, model: str = "halfspace"
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(disc vertices, image vertices, faces) of the image surface"""
    if model not in MESH_MODELS:
        raise ConfigError(f"unknown mesh model {model!r}; choose from {MESH_MODELS}")
    disc, faces = polar_mesh(rings)
    image = surface.points(disc)
    if model == "ball":
        image = to_ball_model(image)
    return disc, image, faces


def write_mesh(
    directory: str | Path, disc: np.ndarray, image: np.ndarray, faces: np.ndarray, model: str
) -> tuple[Path, Path]:
    directory = Path(directory)
    if model == "ball":
        coords = [f"b{k}" for k in range(image.shape[1])]
    else:
        coords = ["X"] + [f"Y{k}" for k in range(1, image.shape[1])]
    vertices = _savetxt(
        directory / "vertices.csv", np.column_stack([disc, image]), ["x", "y", *coords]
    )
    faces_path = _savetxt(directory / "faces.csv", faces, ["i", "j", "k"], fmt="%d")
    return vertices, faces_path
