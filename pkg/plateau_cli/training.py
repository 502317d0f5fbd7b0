"""Collocation sampling, the two optimisation phases and Monte Carlo evaluation.

Random streams are derived from the configured seed with a fixed tag per
use, so every phase is reproducible on its own:

    [seed, 1]     Adam collocation pool
    [seed, 2]     per-epoch mini-batch shuffles
    [seed, 3]     L-BFGS collocation pool
    [seed, 4, i]  i-th Monte Carlo sample
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .errors import (
    ConfigError,
    DegenerateImmersionError,
    JetDomainError,
    NonFiniteError,
    TrainingAborted,
)
from .network import ParameterVector
from .optim import AdamState, adam_update, lbfgs_minimize
from .residual import loss_and_grad, loss_value
from .surface import DEFAULT_CHUNK, ModelConfig

logger = logging.getLogger(__name__)

POOL_STREAM = 1
SHUFFLE_STREAM = 2
LBFGS_STREAM = 3
MONTE_CARLO_STREAM = 4

MAX_RADIUS = 1.0 - 1e-9

NUMERICAL_FAILURES = (NonFiniteError, JetDomainError, DegenerateImmersionError)

Progress = Callable[[str, int, float, float | None], None]


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; the defaults are the full reproduction profile"""

    n_data: int = 2**14
    batch_size: int = 2**10
    adam_epochs: int = 10000
    eta0: float = 1e-3
    eta_min: float = 1e-5
    n_lbfgs: int = 2**14
    lbfgs_iters: int = 10000
    history: int = 100
    delta_g: float = 1e-12
    delta_theta: float = 1e-14
    seed: int = 0
    chunk_size: int = DEFAULT_CHUNK
    threads: int = 1

    def __post_init__(self):
        for name in ("n_data", "batch_size", "n_lbfgs", "history", "chunk_size", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}")
        for name in ("adam_epochs", "lbfgs_iters"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not self.eta0 >= self.eta_min >= 0:
            raise ConfigError(
                f"learning rates must satisfy eta0 >= eta_min >= 0, got {self.eta0}, {self.eta_min}"
            )

    @classmethod
    def full(cls, **overrides) -> TrainConfig:
        return cls(**overrides)

    @classmethod
    def desk(cls, **overrides) -> TrainConfig:
        values = {"n_data": 2**12, "adam_epochs": 2000, "n_lbfgs": 2**12, "lbfgs_iters": 500}
        values.update(overrides)
        return cls(**values)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


PROFILES = {"full": TrainConfig.full, "desk": TrainConfig.desk}


@dataclass
class TrainReport:
    """Loss history and outcome of one optimisation phase"""

    phase: str
    losses: list[float] = field(default_factory=list)
    batch_losses: list[float] = field(default_factory=list)
    learning_rates: list[float] = field(default_factory=list)
    initial_loss: float = math.nan
    best_epoch: int = -1
    best_loss: float = math.nan
    reason: str = "completed"
    wall_time: float = 0.0
    evaluations: int = 0

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else self.initial_loss

    def to_dict(self) -> dict[str, Any]:
        return {
            "phase": self.phase,
            "steps": len(self.losses),
            "initial_loss": self.initial_loss,
            "final_loss": self.final_loss,
            "best_epoch": self.best_epoch,
            "best_loss": self.best_loss,
            "reason": self.reason,
            "wall_time": self.wall_time,
            "evaluations": self.evaluations,
        }

    def to_text(self) -> str:
        """``key = value`` lines"""
        lines = []
        for key, value in self.to_dict().items():
            text = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"


def sample_disc(N: int, seed: int | Sequence[int]) -> np.ndarray:
    """N uniform points of the open unit disc, r = sqrt(U), phi = 2 pi V"""
    if N < 1:
        raise ConfigError(f"sample size must be at least 1, got {N}")
    rng = np.random.default_rng(seed)
    U = rng.random(N)
    V = rng.random(N)
    r = np.minimum(np.sqrt(U), MAX_RADIUS)
    phi = 2.0 * np.pi * V
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)


def cosine_lr(t: int, cfg: TrainConfig) -> float:
    """eta_min + (eta0 - eta_min)(1 + cos(pi t / T))/2 with exact endpoints"""
    T = cfg.adam_epochs
    if t <= 0 or T == 0:
        return cfg.eta0
    if t >= T:
        return cfg.eta_min
    return cfg.eta_min + 0.5 * (cfg.eta0 - cfg.eta_min) * (1.0 + math.cos(math.pi * t / T))


def adam_phase(
    config: ModelConfig,
    params: ParameterVector,
    cfg: TrainConfig,
    progress: Progress | None = None,
) -> tuple[ParameterVector, TrainReport]:
    """Mini-batch Adam with per-epoch cosine annealing; returns the best epoch's parameters.

    The epoch loss is the full-pool loss after the epoch's last step, so the
    returned snapshot re-evaluates to exactly the recorded best loss.
    """
    started = time.perf_counter()
    report = TrainReport("adam")
    pool = sample_disc(cfg.n_data, [cfg.seed, POOL_STREAM])
    shuffler = np.random.default_rng([cfg.seed, SHUFFLE_STREAM])
    values = params.values.copy()
    state = AdamState.zeros(values.size)

    def evaluate(v: np.ndarray) -> float:
        return loss_value(config, v, pool, cfg.chunk_size, cfg.threads)

    try:
        report.initial_loss = evaluate(values)
        best_values, report.best_loss = values.copy(), report.initial_loss
        for epoch in range(cfg.adam_epochs):
            lr = cosine_lr(epoch, cfg)
            order = shuffler.permutation(cfg.n_data)
            batch_total, batches = 0.0, 0
            for start in range(0, cfg.n_data, cfg.batch_size):
                batch = pool[order[start : start + cfg.batch_size]]
                f, g = loss_and_grad(config, values, batch, cfg.chunk_size, cfg.threads)
                values = adam_update(values, g, state, lr)
                batch_total += f
                batches += 1
            epoch_loss = evaluate(values)
            report.losses.append(epoch_loss)
            report.batch_losses.append(batch_total / batches)
            report.learning_rates.append(lr)
            if report.best_epoch < 0 or epoch_loss < report.best_loss:
                best_values, report.best_loss, report.best_epoch = values.copy(), epoch_loss, epoch
            if progress is not None:
                progress("adam", epoch, epoch_loss, lr)
    except NUMERICAL_FAILURES as e:
        report.reason = "non_finite"
        report.wall_time = time.perf_counter() - started
        raise TrainingAborted(f"Adam phase aborted: {e}", report) from e

    report.wall_time = time.perf_counter() - started
    return params.with_values(best_values), report


def lbfgs_phase(
    config: ModelConfig,
    params: ParameterVector,
    cfg: TrainConfig,
    progress: Progress | None = None,
) -> tuple[ParameterVector, TrainReport]:
    """Full-batch L-BFGS on a fresh collocation pool"""
    started = time.perf_counter()
    report = TrainReport("lbfgs")
    pool = sample_disc(cfg.n_lbfgs, [cfg.seed, LBFGS_STREAM])
    probing = {"first": True}

    def fun_and_grad(v: np.ndarray) -> tuple[float, np.ndarray]:
        try:
            return loss_and_grad(config, v, pool, cfg.chunk_size, cfg.threads)
        except NUMERICAL_FAILURES as e:
            if probing["first"]:
                raise
            # an unusable trial step; the line search backs off from it
            logger.debug("L-BFGS trial point rejected: %s", e)
            return math.inf, np.zeros_like(v)

    def on_iteration(iteration: int, f: float, g: np.ndarray) -> None:
        if progress is not None:
            progress("lbfgs", iteration, f, None)

    try:
        report.initial_loss, _ = fun_and_grad(params.values)
    except NUMERICAL_FAILURES as e:
        report.reason = "non_finite"
        raise TrainingAborted(f"L-BFGS phase aborted: {e}", report) from e
    probing["first"] = False

    result = lbfgs_minimize(
        fun_and_grad,
        params.values,
        history_size=cfg.history,
        max_iter=cfg.lbfgs_iters,
        grad_tol=cfg.delta_g,
        param_tol=cfg.delta_theta,
        callback=on_iteration,
    )
    report.losses = result.f_history[1:]
    report.reason = result.reason
    report.evaluations = result.evaluations
    if report.losses:
        report.best_epoch = int(np.argmin(report.losses))
        report.best_loss = report.losses[report.best_epoch]
    else:
        report.best_loss = report.initial_loss
    report.wall_time = time.perf_counter() - started
    return params.with_values(result.x), report


@dataclass
class TrainingRun:
    adam: TrainReport
    lbfgs: TrainReport

    @property
    def final_loss(self) -> float:
        return self.lbfgs.best_loss if self.lbfgs.losses else self.adam.best_loss


def train(
    config: ModelConfig,
    params: ParameterVector,
    cfg: TrainConfig,
    progress: Progress | None = None,
) -> tuple[ParameterVector, TrainingRun]:
    """Adam followed by L-BFGS"""
    params, adam_report = adam_phase(config, params, cfg, progress)
    params, lbfgs_report = lbfgs_phase(config, params, cfg, progress)
    return params, TrainingRun(adam_report, lbfgs_report)


@dataclass(frozen=True)
class MonteCarloResult:
    mean: float
    std: float
    max: float
    losses: tuple[float, ...]

    def format(self) -> str:
        return f"{self.mean:.2e} ± {self.std:.2e} ({self.max:.2e})"

    def to_dict(self) -> dict[str, Any]:
        return {"mean": self.mean, "std": self.std, "max": self.max, "samples": len(self.losses)}


def monte_carlo_eval(
    config: ModelConfig,
    params: ParameterVector | np.ndarray,
    S: int,
    N: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK,
    threads: int = 1,
) -> MonteCarloResult:
    """Loss over S independent uniform samples of size N: mean, sample std, max"""
    if S < 2:
        raise ConfigError(f"Monte Carlo evaluation needs at least 2 samples, got {S}")
    losses = tuple(
        loss_value(
            config, params, sample_disc(N, [seed, MONTE_CARLO_STREAM, i]), chunk_size, threads
        )
        for i in range(S)
    )
    arr = np.asarray(losses)
    return MonteCarloResult(float(arr.mean()), float(arr.std(ddof=1)), float(arr.max()), losses)
