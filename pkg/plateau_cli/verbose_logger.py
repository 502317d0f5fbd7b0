"""Verbose output for plateau-cli: rich tables on the console, plain lines in the log file"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from pathlib import Path
from typing import TYPE_CHECKING

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from rich.tree import Tree

if TYPE_CHECKING:
    from .config import ExperimentConfig
    from .intersections import DoublePointAnalysis, DoublePointRecord
    from .training import MonteCarloResult, TrainingRun

console = Console()

_VERBOSE = False
_LOG_PATH: Path | None = None
_HANDLER: logging.Handler | None = None

PROGRESS_EVERY = 100
RULE = "─" * 60

# marker and rich style per status line
_MARKS = {
    "info": ("ℹ", "blue", "dim"),
    "success": ("✓", "green", "green"),
    "warning": ("⚠", "yellow", "yellow"),
}


def set_verbose(enabled: bool, log_file: str | None = None):
    """Switch verbose output; the ``plateau_cli`` loggers go through rich while it is on"""
    global _VERBOSE, _LOG_PATH, _HANDLER
    _VERBOSE = enabled
    _LOG_PATH = Path(log_file) if log_file else None

    package_logger = logging.getLogger("plateau_cli")
    if _HANDLER is not None:
        package_logger.removeHandler(_HANDLER)
        _HANDLER = None
    if enabled:
        _HANDLER = RichHandler(console=console, show_path=False)
        package_logger.addHandler(_HANDLER)
    package_logger.setLevel(logging.DEBUG if enabled else logging.WARNING)


def _append(message: str):
    if _LOG_PATH is None:
        return
    try:
        with _LOG_PATH.open("a", encoding="utf-8") as f:
            f.write(f"[{time.strftime('%Y-%m-%d %H:%M:%S')}] {message}\n")
    except OSError:
        pass


def log_section(title: str, emoji: str = "📋"):
    if not _VERBOSE:
        return
    console.print(f"\n[bold cyan]{RULE}\n{emoji} {title}\n{RULE}[/bold cyan]")
    _append(f"\n{RULE}\n{emoji} {title}\n{RULE}")


def log_step(step: str, detail: str = ""):
    """One timestamped progress line, ``step: detail``"""
    if not _VERBOSE:
        return
    stamp = time.strftime("%H:%M:%S")
    suffix = f": [yellow]{detail}[/yellow]" if detail else ""
    console.print(f"[dim]{stamp}[/dim] [cyan]▶[/cyan] {step}{suffix}")
    _append(f"{stamp} ▶ {step}" + (f": {detail}" if detail else ""))


def _status(kind: str, message: str):
    if not _VERBOSE:
        return
    mark, mark_style, text_style = _MARKS[kind]
    stamp = time.strftime("%H:%M:%S")
    console.print(
        f"[dim]{stamp}[/dim]   [{mark_style}]{mark}[/{mark_style}] "
        f"[{text_style}]{message}[/{text_style}]"
    )
    _append(f"{stamp}   {mark} {message}")


def log_info(message: str):
    _status("info", message)


def log_success(message: str):
    _status("success", message)


def log_warning(message: str):
    _status("warning", message)


def log_experiment_config(experiment: ExperimentConfig):
    """Log the resolved experiment configuration as a tree"""
    if not _VERBOSE:
        return

    log_section("Experiment", "🧪")
    tree = Tree(f"[bold cyan]{experiment.name}[/bold cyan]")
    for section, values in experiment.resolved.items():
        branch = tree.add(f"[bold]{section}[/bold]")
        for key, value in values.items():
            branch.add(f"[dim]{key}[/dim] = [yellow]{value}[/yellow]")
    console.print(tree)
    _append(f"Experiment {experiment.name}: {experiment.resolved}")


def log_training_progress(phase: str, step: int, loss: float, lr: float | None = None):
    """Log one epoch (Adam) or iteration (L-BFGS), thinned to every PROGRESS_EVERY steps"""
    if not _VERBOSE or step % PROGRESS_EVERY:
        return

    detail = f"loss={loss:.3e}" + (f" lr={lr:.2e}" if lr is not None else "")
    log_step(f"{phase} {step}", detail)


def log_training_summary(run: TrainingRun):
    """Log both optimisation phases side by side"""
    if not _VERBOSE:
        return

    log_section("Training Summary", "📉")
    table = Table(show_header=True, header_style="bold magenta", show_lines=False)
    table.add_column("Phase", style="cyan")
    table.add_column("Steps", justify="right")
    table.add_column("Initial", style="dim")
    table.add_column("Best", style="green")
    table.add_column("Best step", justify="right")
    table.add_column("Stop", style="yellow")
    table.add_column("Time", style="dim")

    for report in (run.adam, run.lbfgs):
        table.add_row(
            report.phase,
            str(len(report.losses)),
            f"{report.initial_loss:.3e}",
            f"{report.best_loss:.3e}",
            str(report.best_epoch),
            report.reason,
            f"{report.wall_time:.1f}s",
        )

    console.print(table)
    _append(f"Training finished with loss {run.final_loss:.6e}")


def log_double_points(records: Sequence[DoublePointRecord], limit: int = 20):
    """Log refined double points in a table"""
    if not _VERBOSE:
        return

    log_section("Double Points", "✖")
    if not records:
        log_info("No double points found")
        return

    table = Table(show_header=True, header_style="bold magenta", show_lines=False)
    table.add_column("#", style="dim", width=3)
    table.add_column("p1", style="cyan")
    table.add_column("p2", style="cyan")
    table.add_column("Residual", style="dim")
    table.add_column("det (normalised)", style="yellow")
    table.add_column("Sign", justify="right")

    for i, r in enumerate(records[:limit], 1):
        sign = "[green]+1[/green]" if r.sign > 0 else "[red]-1[/red]"
        table.add_row(
            str(i),
            f"({r.p1[0]:+.6f}, {r.p1[1]:+.6f})",
            f"({r.p2[0]:+.6f}, {r.p2[1]:+.6f})",
            f"{r.residual:.1e}",
            f"{r.normalized_det:+.3e}",
            sign,
        )

    if len(records) > limit:
        table.add_row("...", f"+ {len(records) - limit} more", "", "", "", "")

    console.print(table)
    _append(f"Found {len(records)} double point(s)")


def log_intersection_analysis(analysis: DoublePointAnalysis):
    if not _VERBOSE:
        return

    log_step("Self-proximity minimum", f"{analysis.proximity.minimum:.3e}")
    log_info(f"Candidates: {len(analysis.candidates)}")
    if analysis.failures:
        log_warning(f"{len(analysis.failures)} Newton refinement(s) rejected")
    log_double_points(analysis.records)
    if analysis.clusters:
        log_warning(f"{len(analysis.clusters)} cluster(s) of coinciding double points")


def log_monte_carlo(result: MonteCarloResult, samples: int, size: int):
    """Log a Monte Carlo loss evaluation"""
    if not _VERBOSE:
        return

    log_section("Monte Carlo Evaluation", "🎲")
    log_info(f"{samples} samples of size {size}")
    log_success(f"MC error ± std (MC max): {result.format()}")


def print_verbose_summary():
    """Banner shown once when verbose mode is on"""
    if not _VERBOSE:
        return
    banner = "━" * 58
    target = f"\n[green]Logging to file: {_LOG_PATH}[/green]" if _LOG_PATH else ""
    console.print(
        f"\n[bold green]{banner}\nVerbose logging enabled[/bold green]{target}"
        f"\n[bold green]{banner}[/bold green]\n"
    )
