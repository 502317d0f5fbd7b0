"""Self-describing JSON checkpoints for trained models and analytic fixtures.

Floats are written with ``repr`` precision by the json module, so loading
a saved checkpoint reproduces every parameter bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .boundary import KnotCurve
from .errors import CheckpointError, PlateauError
from .fixtures import get_fixture
from .network import MlpArchitecture, ParameterVector
from .surface import DEFAULT_CHUNK, ModelConfig, ModelSurface, SurfaceMap

FORMAT_VERSION = 1
KINDS = ("model", "fixture")


@dataclass
class Checkpoint:
    kind: str
    config: ModelConfig | None = None
    params: ParameterVector | None = None
    fixture: str | None = None
    metadata: dict[str, Any] = field(default_factory=dict)
    config_text: str = ""

    @classmethod
    def from_model(
        cls,
        config: ModelConfig,
        params: ParameterVector,
        metadata: dict[str, Any] | None = None,
        config_text: str = "",
    ) -> Checkpoint:
        if params.arch != config.arch:
            raise CheckpointError("parameter architecture does not match the model config")
        return cls("model", config, params, None, dict(metadata or {}), config_text)

    @classmethod
    def from_fixture(cls, name: str, metadata: dict[str, Any] | None = None) -> Checkpoint:
        get_fixture(name)
        return cls("fixture", fixture=name, metadata=dict(metadata or {}))

    @property
    def knot(self) -> str:
        if self.kind == "fixture":
            return str(self.fixture)
        return self.config.curve.label

    def surface(self, chunk_size: int = DEFAULT_CHUNK, threads: int = 1) -> SurfaceMap:
        if self.kind == "fixture":
            return get_fixture(self.fixture)
        return ModelSurface(self.config, self.params, chunk_size, threads)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"format_version": FORMAT_VERSION, "kind": self.kind}
        if self.kind == "fixture":
            data["fixture"] = self.fixture
        else:
            data["curve"] = {"label": self.config.curve.label, "table": self.config.curve.to_table()}
            data["model"] = {
                "rho_kind": self.config.rho_kind,
                "ext_kind": self.config.ext_kind,
                "k": self.config.k,
            }
            data["architecture"] = self.config.arch.to_dict()
            data["params"] = [float(v) for v in self.params.values]
        data["metadata"] = self.metadata
        data["config_text"] = self.config_text
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Checkpoint:
        version = data.get("format_version")
        if version != FORMAT_VERSION:
            raise CheckpointError(
                f"checkpoint format version {version!r} is not supported (expected {FORMAT_VERSION})"
            )
        kind = data.get("kind")
        if kind not in KINDS:
            raise CheckpointError(f"unknown checkpoint kind {kind!r}")
        metadata = dict(data.get("metadata", {}))
        config_text = data.get("config_text", "")
        try:
            if kind == "fixture":
                return cls.from_fixture(data["fixture"], metadata)
            curve = KnotCurve.from_table(data["curve"]["table"], data["curve"]["label"])
            arch = MlpArchitecture.from_dict(data["architecture"])
            model = data["model"]
            config = ModelConfig(curve, model["rho_kind"], model["ext_kind"], int(model["k"]), arch)
            params = ParameterVector(np.array(data["params"], dtype=np.float64), arch)
        except KeyError as e:
            raise CheckpointError(f"checkpoint is missing field {e}") from e
        except PlateauError as e:
            if isinstance(e, CheckpointError):
                raise
            raise CheckpointError(f"checkpoint content is invalid: {e}") from e
        return cls("model", config, params, None, metadata, config_text)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path) -> Checkpoint:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise CheckpointError(f"checkpoint {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise CheckpointError(f"checkpoint {path} does not hold a JSON object")
        return cls.from_dict(data)
