"""Pytest configuration and fixtures for plateau-cli tests"""

from unittest.mock import patch

import numpy as np
import pytest

from plateau_cli.boundary import preset_curve, torus_knot
from plateau_cli.network import MlpArchitecture, ParameterVector, param_count
from plateau_cli.surface import ModelConfig


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def mock_signal_handler():
    """Mock signal handler to prevent interference during tests"""
    with patch("plateau_cli.main.setup_signal_handler"):
        yield


@pytest.fixture
def tiny_arch():
    """Two hidden layers of width 6 into R^4"""
    return MlpArchitecture((6, 6), 4)


@pytest.fixture
def unknot_config(tiny_arch):
    """Round unknot in R^3 with a tiny network"""
    return ModelConfig(preset_curve("unknot"), arch=tiny_arch)


@pytest.fixture
def trefoil_config(tiny_arch):
    return ModelConfig(torus_knot(3, 2), arch=tiny_arch)


@pytest.fixture
def circle_config():
    """Planar unit circle, disc in hyperbolic 3-space"""
    return ModelConfig(preset_curve("circle2d"), arch=MlpArchitecture((5,), 3))


def random_parameters(arch, seed=0, scale=0.3):
    rng = np.random.default_rng(seed)
    return ParameterVector(rng.normal(scale=scale, size=param_count(arch)), arch)


@pytest.fixture
def random_params(tiny_arch):
    return random_parameters(tiny_arch, seed=1)


MODEL_VARIANTS = (
    ("stereographic", "stereobiharmonic", 2),
    ("one_minus_r2", "stereobiharmonic", 2),
    ("stereographic", "stereoharmonic", 1),
    ("stereographic", "stereographic", 1),
)


@pytest.fixture
def random_model():
    """Factory for seeded (config, params, points) with varied curve, architecture and extension"""
    curves = (preset_curve("unknot"), torus_knot(3, 2), preset_curve("figure8"))

    def build(seed, n_points=4):
        rng = np.random.default_rng([seed, 17])
        widths = tuple(int(w) for w in rng.integers(2, 9, size=int(rng.integers(1, 4))))
        activation = ("tanh", "silu")[int(rng.integers(2))]
        rho_kind, ext_kind, k = MODEL_VARIANTS[int(rng.integers(len(MODEL_VARIANTS)))]
        curve = curves[int(rng.integers(len(curves)))]
        arch = MlpArchitecture(widths, curve.ambient_dim + 1, activation)
        config = ModelConfig(curve, rho_kind=rho_kind, ext_kind=ext_kind, k=k, arch=arch)
        r = rng.uniform(0.1, 0.8, size=n_points)
        phi = rng.uniform(0.0, 2 * np.pi, size=n_points)
        points = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
        return config, random_parameters(arch, seed=seed), points

    return build


@pytest.fixture
def interior_points():
    """A few points well inside the unit disc"""
    return np.array([[0.0, 0.0], [0.3, -0.2], [-0.5, 0.4], [0.1, 0.7], [-0.6, -0.55]])


@pytest.fixture
def experiment_text():
    """Small but complete experiment file"""
    return """[curve]
preset = unknot

[model]
width = 4
depth = 2
init_seed = 3

[training]
profile = desk
seed = 5
b = 8
t_adam = 3
n_data = 32
n_lbfgs = 16
t_lbfgs = 2
m = 5

[eval]
samples = 4
size = 16
seed = 2
heatmap_res = 16

[intersect]
grid_res = 32
"""
