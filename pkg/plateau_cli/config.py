"""Configuration management for plateau-cli"""

from __future__ import annotations

import configparser
import io
import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .boundary import KnotCurve, mirror_curve, perturb, preset_curve, torus_knot
from .errors import ConfigError
from .network import INIT_SCHEMES, MlpArchitecture
from .surface import ModelConfig
from .training import PROFILES, TrainConfig
from .utils import available_threads

OUTPUT_ROOT_ENV = "PLATEAU_OUTPUT_ROOT"


def get_config_dir() -> Path:
    """Get the config directory path (~/.config/plateau-cli/)"""
    config_dir = Path.home() / ".config" / "plateau-cli"
    config_dir.mkdir(parents=True, exist_ok=True)
    return config_dir


def get_config_path() -> str:
    """Get the full path to config.ini"""
    return str(get_config_dir() / "config.ini")


config = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
config.read(get_config_path())


def get_config_value(section, key, fallback=None):
    """Get a value from the config"""
    return config.get(section, key, fallback=fallback)


def get_threads() -> int:
    """Worker threads for numerical kernels (default: all available cores)"""
    try:
        return max(1, int(get_config_value("general", "threads", str(available_threads()))))
    except ValueError:
        return available_threads()


def get_output_root() -> Path:
    """Root directory for run outputs; $PLATEAU_OUTPUT_ROOT wins over config.ini"""
    env = os.environ.get(OUTPUT_ROOT_ENV)
    if env:
        return Path(env)
    return Path(get_config_value("general", "output_root", "runs"))


PROFILE_WIDTHS = {"full": 64, "desk": 32, "custom": 64}

# short names accepted in [training]; configparser lower-cases keys
TRAINING_ALIASES = {
    "b": "batch_size",
    "t_adam": "adam_epochs",
    "t": "adam_epochs",
    "t_lbfgs": "lbfgs_iters",
    "m": "history",
}

SECTIONS = ("curve", "perturbation", "model", "training", "intersect", "eval", "output")


def parse_int(text: str) -> int:
    """Integer literal, optionally written as a power such as ``2^14`` or ``2**14``"""
    value = text.strip().replace("_", "")
    power = re.fullmatch(r"(\d+)\s*(?:\^|\*\*)\s*(\d+)", value)
    try:
        if power:
            return int(power.group(1)) ** int(power.group(2))
        return int(value)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _float(section: configparser.SectionProxy, key: str, default: float) -> float:
    try:
        return section.getfloat(key, fallback=default)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} must be a number") from None


def _int(section: configparser.SectionProxy, key: str, default: int) -> int:
    return parse_int(section[key]) if key in section else default


def _bool(section: configparser.SectionProxy, key: str, default: bool) -> bool:
    try:
        return section.getboolean(key, fallback=default)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} must be true or false") from None


def _required_seed(section: configparser.SectionProxy, key: str) -> int:
    if key not in section:
        raise ConfigError(f"[{section.name}] {key} is required: every run needs explicit seeds")
    return parse_int(section[key])


def _check_keys(section: configparser.SectionProxy, allowed: set[str]) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section.name}]: {', '.join(unknown)}")


@dataclass(frozen=True)
class CurveSpec:
    preset: str | None = None
    torus: tuple[int, int] | None = None
    R: float = 2.0
    r: float = 0.5
    table: Path | None = None
    mirror: bool = False
    label: str | None = None


@dataclass(frozen=True)
class PerturbationSpec:
    sigma: float = 0.0
    K: int = 3
    seed: int | None = None


@dataclass(frozen=True)
class ModelSpec:
    rho_kind: str = "stereographic"
    ext_kind: str = "stereobiharmonic"
    k: int = 2
    width: int = 64
    depth: int = 4
    activation: str = "tanh"
    init: str = "glorot_zero_head"
    init_seed: int = 0


@dataclass(frozen=True)
class IntersectSpec:
    grid_res: int = 256
    epsilon: float = 0.2
    tau_img: float = 0.05
    cap: int = 100_000


@dataclass(frozen=True)
class EvalSpec:
    samples: int = 1000
    size: int = 2**14
    seed: int = 0
    heatmap_res: int = 128


@dataclass
class ExperimentConfig:
    """A parsed experiment INI file together with its raw text"""

    name: str
    curve: CurveSpec
    perturbation: PerturbationSpec
    model: ModelSpec
    profile: str
    training: TrainConfig
    intersect: IntersectSpec
    evaluation: EvalSpec
    output_dir: Path
    raw_text: str = ""
    resolved: dict[str, dict[str, Any]] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> ExperimentConfig:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read experiment config {path}: {e}") from e
        return cls.from_text(text, name=path.stem, base_dir=path.parent)

    @classmethod
    def from_text(
        cls, text: str, name: str = "experiment", base_dir: str | Path = "."
    ) -> ExperimentConfig:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigError(f"malformed experiment config: {e}") from e
        unknown = sorted(set(parser.sections()) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
        for section in SECTIONS:
            if not parser.has_section(section):
                parser.add_section(section)

        curve = _curve_spec(parser["curve"], Path(base_dir))
        perturbation = _perturbation_spec(parser["perturbation"])
        profile = parser["training"].get("profile", "full").strip()
        if profile not in PROFILE_WIDTHS:
            raise ConfigError(f"unknown training profile {profile!r}; choose full, desk or custom")
        model = _model_spec(parser["model"], PROFILE_WIDTHS[profile])
        training = _train_config(parser["training"], profile)
        intersect = _intersect_spec(parser["intersect"])
        evaluation = _eval_spec(parser["eval"])

        output = parser["output"]
        _check_keys(output, {"name", "directory"})
        run_name = output.get("name", name)
        output_dir = Path(output.get("directory", run_name))

        experiment = cls(
            run_name,
            curve,
            perturbation,
            model,
            profile,
            training,
            intersect,
            evaluation,
            output_dir,
            raw_text=text,
        )
        experiment.resolved = experiment._resolved_values()
        return experiment

    def build_curve(self) -> KnotCurve:
        spec = self.curve
        if spec.table is not None:
            curve = KnotCurve.load(spec.table)
        elif spec.torus is not None:
            curve = torus_knot(*spec.torus, R=spec.R, r=spec.r)
        else:
            curve = preset_curve(spec.preset or "unknot")
        if spec.mirror:
            curve = mirror_curve(curve)
        if spec.label:
            curve = KnotCurve(curve.coeffs, spec.label)
        p = self.perturbation
        if p.sigma > 0:
            curve = perturb(curve, p.sigma, p.K, p.seed)
        return curve

    def build_model(self) -> ModelConfig:
        curve = self.build_curve()
        m = self.model
        arch = MlpArchitecture.uniform(curve.ambient_dim, m.width, m.depth, m.activation)
        return ModelConfig(curve, m.rho_kind, m.ext_kind, m.k, arch)

    def train_config(self, threads: int | None = None) -> TrainConfig:
        if threads is None:
            return self.training
        values = self.training.to_dict()
        values["threads"] = threads
        return TrainConfig(**values)

    def resolve_output_dir(self, root: str | Path | None = None) -> Path:
        if self.output_dir.is_absolute():
            return self.output_dir
        return Path(root if root is not None else get_output_root()) / self.output_dir

    def _resolved_values(self) -> dict[str, dict[str, Any]]:
        c = self.curve
        curve: dict[str, Any] = {"mirror": c.mirror}
        if c.table is not None:
            curve["table"] = c.table
        elif c.torus is not None:
            curve.update(torus=f"{c.torus[0]},{c.torus[1]}", r_major=c.R, r_minor=c.r)
        else:
            curve["preset"] = c.preset
        if c.label:
            curve["label"] = c.label
        training = {"profile": self.profile, **self.training.to_dict()}
        return {
            "curve": curve,
            "perturbation": {k: v for k, v in vars(self.perturbation).items() if v is not None},
            "model": vars(self.model),
            "training": training,
            "intersect": vars(self.intersect),
            "eval": vars(self.evaluation),
            "output": {"name": self.name, "directory": str(self.output_dir)},
        }

    def echo(self) -> str:
        """Raw text followed by every resolved value"""
        resolved = configparser.ConfigParser()
        for section, values in self.resolved.items():
            resolved[section] = {key: str(value) for key, value in values.items()}
        buffer = io.StringIO()
        resolved.write(buffer)
        body = "\n".join(f"# {line}" if line else "#" for line in buffer.getvalue().splitlines())
        raw = self.raw_text if self.raw_text.endswith("\n") else self.raw_text + "\n"
        return f"{raw}\n# --- resolved values ---\n{body}\n"


def _curve_spec(section: configparser.SectionProxy, base_dir: Path) -> CurveSpec:
    _check_keys(section, {"preset", "torus", "r_major", "r_minor", "table", "mirror", "label"})
    sources = [key for key in ("preset", "torus", "table") if key in section]
    if len(sources) > 1:
        raise ConfigError(f"[curve] takes one of preset, torus or table, got {', '.join(sources)}")
    torus = None
    if "torus" in section:
        parts = [p.strip() for p in section["torus"].split(",")]
        if len(parts) != 2:
            raise ConfigError(f"[curve] torus must be 'p, q', got {section['torus']!r}")
        torus = (parse_int(parts[0]), parse_int(parts[1]))
    table = None
    if "table" in section:
        table = Path(section["table"])
        if not table.is_absolute():
            table = base_dir / table
    return CurveSpec(
        preset=section.get("preset", None if sources else "unknot"),
        torus=torus,
        R=_float(section, "r_major", 2.0),
        r=_float(section, "r_minor", 0.5),
        table=table,
        mirror=_bool(section, "mirror", False),
        label=section.get("label"),
    )


def _perturbation_spec(section: configparser.SectionProxy) -> PerturbationSpec:
    _check_keys(section, {"sigma", "k", "seed"})
    sigma = _float(section, "sigma", 0.0)
    seed = _required_seed(section, "seed") if sigma > 0 else None
    if seed is None and "seed" in section:
        seed = parse_int(section["seed"])
    return PerturbationSpec(sigma, _int(section, "k", 3), seed)


def _model_spec(section: configparser.SectionProxy, default_width: int) -> ModelSpec:
    _check_keys(
        section,
        {"rho_kind", "ext_kind", "k", "width", "depth", "activation", "init", "init_seed"},
    )
    init = section.get("init", "glorot_zero_head")
    if init not in INIT_SCHEMES:
        raise ConfigError(f"unknown init scheme {init!r}; choose from {INIT_SCHEMES}")
    return ModelSpec(
        rho_kind=section.get("rho_kind", "stereographic"),
        ext_kind=section.get("ext_kind", "stereobiharmonic"),
        k=_int(section, "k", 2),
        width=_int(section, "width", default_width),
        depth=_int(section, "depth", 4),
        activation=section.get("activation", "tanh"),
        init=init,
        init_seed=_required_seed(section, "init_seed"),
    )


def _train_config(section: configparser.SectionProxy, profile: str) -> TrainConfig:
    names = {f.name: f.type for f in fields(TrainConfig)}
    overrides: dict[str, Any] = {}
    for key, text in section.items():
        if key == "profile":
            continue
        target = TRAINING_ALIASES.get(key, key)
        if target not in names or target == "threads":
            raise ConfigError(f"unknown key in [training]: {key}")
        if target in ("eta0", "eta_min", "delta_g", "delta_theta"):
            overrides[target] = _float(section, key, 0.0)
        else:
            overrides[target] = parse_int(text)
    overrides["seed"] = _required_seed(section, "seed")
    factory = PROFILES.get(profile, TrainConfig.full)
    return factory(**overrides)


def _intersect_spec(section: configparser.SectionProxy) -> IntersectSpec:
    _check_keys(section, {"grid_res", "epsilon", "tau_img", "cap"})
    return IntersectSpec(
        grid_res=_int(section, "grid_res", 256),
        epsilon=_float(section, "epsilon", 0.2),
        tau_img=_float(section, "tau_img", 0.05),
        cap=_int(section, "cap", 100_000),
    )


def _eval_spec(section: configparser.SectionProxy) -> EvalSpec:
    _check_keys(section, {"samples", "size", "seed", "heatmap_res"})
    return EvalSpec(
        samples=_int(section, "samples", 1000),
        size=_int(section, "size", 2**14),
        seed=_required_seed(section, "seed"),
        heatmap_res=_int(section, "heatmap_res", 128),
    )
