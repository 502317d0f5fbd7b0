"""Main entry point and subcommands for plateau-cli"""

import argparse
import sys
import time
from pathlib import Path
from typing import Any

from rich import print
from rich.table import Table

from . import __version__
from .checkpoint import Checkpoint
from .config import ExperimentConfig, get_threads
from .errors import CheckpointError, ConfigError, PlateauError, TrainingAborted, UnknownKnotError
from .exporting import (
    read_json,
    residual_heatmap,
    surface_mesh,
    write_candidates,
    write_heatmap,
    write_json,
    write_loss_curve,
    write_mesh,
    write_proximity,
    write_records,
    write_train_report,
)
from .fixtures import FIXTURES
from .intersections import find_double_points
from .invariants import consistency_check, homfly_table, reference_for
from .network import init_params
from .training import TrainingRun, monte_carlo_eval, train
from .utils import setup_signal_handler
from .verbose_logger import (
    console,
    log_experiment_config,
    log_info,
    log_intersection_analysis,
    log_monte_carlo,
    log_section,
    log_step,
    log_success,
    log_training_progress,
    log_training_summary,
    log_warning,
    print_verbose_summary,
    set_verbose,
)

CHECKPOINT_NAME = "model.json"
EVAL_SIDECAR = "eval.json"
INTERSECT_SIDECAR = "intersections.json"


def _setting(value: Any, checkpoint: Checkpoint, section: str, key: str, default: Any) -> Any:
    """Command-line value, else the value stored with the checkpoint, else the default"""
    if value is not None:
        return value
    return checkpoint.metadata.get(section, {}).get(key, default)


def _output_dir(output: str | None, checkpoint_path: Path) -> Path:
    directory = Path(output) if output else checkpoint_path.parent
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def train_command(config_path, output=None, threads=None) -> Path:
    """Train a disc for an experiment file; returns the checkpoint path"""
    experiment = ExperimentConfig.from_file(config_path)
    log_experiment_config(experiment)
    out_dir = Path(output) if output else experiment.resolve_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config_echo.ini").write_text(experiment.echo(), encoding="utf-8")

    model = experiment.build_model()
    params = init_params(model.arch, experiment.model.init, experiment.model.init_seed)
    cfg = experiment.train_config(threads or get_threads())

    log_section("Training", "🏋")
    log_step("Knot", model.curve.label)
    log_step("Architecture", "-".join(str(d) for d in model.arch.dims))
    log_info(f"{len(params)} parameters, {cfg.threads} thread(s)")
    print(
        f"[cyan]Training {experiment.name} ({model.curve.label}, "
        f"profile {experiment.profile})[/cyan]"
    )

    started = time.perf_counter()
    try:
        params, run = train(model, params, cfg, progress=log_training_progress)
    except TrainingAborted as e:
        if e.report is not None:
            (out_dir / f"{e.report.phase}_aborted.txt").write_text(
                e.report.to_text(), encoding="utf-8"
            )
        raise

    metadata = {
        "experiment": experiment.name,
        "profile": experiment.profile,
        "init": experiment.model.init,
        "init_seed": experiment.model.init_seed,
        "train_seed": cfg.seed,
        "perturbed": experiment.perturbation.sigma > 0,
        "perturbation": {k: v for k, v in vars(experiment.perturbation).items() if v is not None},
        "final_loss": run.final_loss,
        "adam": run.adam.to_dict(),
        "lbfgs": run.lbfgs.to_dict(),
        "phase_reached": "lbfgs",
        "eval": vars(experiment.evaluation),
        "intersect": vars(experiment.intersect),
        "version": __version__,
    }
    checkpoint = Checkpoint.from_model(model, params, metadata, experiment.raw_text)
    path = checkpoint.save(out_dir / CHECKPOINT_NAME)
    write_train_report(out_dir / "train_report.txt", run)
    write_loss_curve(out_dir / "loss_curve.csv", run)

    log_training_summary(run)
    _print_training_result(run, time.perf_counter() - started)
    print(f"[green]✓ Checkpoint written to {path}[/green]")
    return path


def _print_training_result(run: TrainingRun, elapsed: float):
    print(
        f"[green]Adam best loss {run.adam.best_loss:.3e} (epoch {run.adam.best_epoch}), "
        f"L-BFGS {run.lbfgs.best_loss:.3e} ({run.lbfgs.reason}) in {elapsed:.1f}s[/green]"
    )


def eval_command(
    checkpoint_path, samples=None, size=None, seed=None, heatmap_res=None, output=None, threads=None
) -> dict:
    """Monte Carlo loss statistics of a trained checkpoint"""
    checkpoint_path = Path(checkpoint_path)
    checkpoint = Checkpoint.load(checkpoint_path)
    if checkpoint.kind != "model":
        raise CheckpointError("eval needs a trained model checkpoint, not a fixture")
    samples = _setting(samples, checkpoint, "eval", "samples", 1000)
    size = _setting(size, checkpoint, "eval", "size", 2**14)
    seed = _setting(seed, checkpoint, "eval", "seed", None)
    if seed is None:
        raise ConfigError("eval needs a seed (--seed or an [eval] seed in the experiment)")
    heatmap_res = _setting(heatmap_res, checkpoint, "eval", "heatmap_res", 128)
    threads = threads or get_threads()
    out_dir = _output_dir(output, checkpoint_path)

    result = monte_carlo_eval(
        checkpoint.config, checkpoint.params, samples, size, seed, threads=threads
    )
    log_monte_carlo(result, samples, size)

    grid, values = residual_heatmap(
        checkpoint.config, checkpoint.params, heatmap_res, threads=threads
    )
    write_heatmap(out_dir / "heatmap.csv", grid, values)

    summary = {**result.to_dict(), "size": size, "seed": seed, "formatted": result.format()}
    write_json(out_dir / EVAL_SIDECAR, summary)
    print(f"[green]MC error ± std (MC max): {result.format()}[/green]")
    return summary


def intersect_command(
    checkpoint_path, grid_res=None, epsilon=None, tau_img=None, cap=None, output=None, threads=None
) -> dict:
    """Double-point search on a checkpoint (trained model or fixture)"""
    checkpoint_path = Path(checkpoint_path)
    checkpoint = Checkpoint.load(checkpoint_path)
    grid_res = _setting(grid_res, checkpoint, "intersect", "grid_res", 256)
    epsilon = _setting(epsilon, checkpoint, "intersect", "epsilon", 0.2)
    tau_img = _setting(tau_img, checkpoint, "intersect", "tau_img", 0.05)
    cap = _setting(cap, checkpoint, "intersect", "cap", 100_000)
    threads = threads or get_threads()
    out_dir = _output_dir(output, checkpoint_path)

    log_section("Double-Point Search", "🔍")
    log_step("Grid", f"{grid_res} x {grid_res}, epsilon={epsilon:g}, tau={tau_img:g}")
    surface = checkpoint.surface(threads=threads)
    analysis = find_double_points(
        surface, grid_res, epsilon, tau_img, cap=cap, threads=threads
    )
    log_intersection_analysis(analysis)

    write_proximity(out_dir / "proximity.csv", analysis.proximity)
    write_candidates(out_dir / "candidates.csv", analysis.candidates)
    write_records(out_dir / "records.csv", analysis.records, surface.dim)
    summary = {"knot": checkpoint.knot, **analysis.summary()}
    write_json(out_dir / INTERSECT_SIDECAR, summary)

    count = analysis.self_intersection_number
    print(f"[cyan]{len(analysis.records)} double point(s) found[/cyan]")
    for i, record in enumerate(analysis.records, 1):
        sign = "[green]+1[/green]" if record.sign > 0 else "[red]-1[/red]"
        print(
            f"  [{i}] ({record.p1[0]:+.6f}, {record.p1[1]:+.6f}) ~ "
            f"({record.p2[0]:+.6f}, {record.p2[1]:+.6f})  residual {record.residual:.1e}  {sign}"
        )
    if count is None:
        print("[yellow]⚠ Coinciding double points: multiplicity left unresolved[/yellow]")
    else:
        print(f"[green]Self-intersection number: {count}[/green]")
    return summary


def report_command(checkpoint_path, records=None, evaluation=None, d=None) -> dict:
    """Compare the computed self-intersection number with the HOMFLY prediction"""
    checkpoint_path = Path(checkpoint_path)
    checkpoint = Checkpoint.load(checkpoint_path)
    records_path = Path(records) if records else checkpoint_path.parent / INTERSECT_SIDECAR
    eval_path = Path(evaluation) if evaluation else checkpoint_path.parent / EVAL_SIDECAR

    if d is None and records_path.exists():
        d = read_json(records_path).get("self_intersection_number")
        unresolved = d is None
    else:
        unresolved = False
    if d is None and not unresolved:
        raise ConfigError(
            f"no double-point results at {records_path}; run 'intersect' first or pass --d"
        )
    mc = read_json(eval_path).get("formatted", "-") if eval_path.exists() else "-"

    knot = checkpoint.knot
    row: dict[str, Any] = {"knot": knot, "d": d, "mc": mc, "term": "-", "verdict": "-"}
    try:
        poly = homfly_table(knot)
    except UnknownKnotError as e:
        print(f"[yellow]{e}; reporting without a verdict[/yellow]")
        poly = None
    if poly is not None:
        check = consistency_check(d, poly, knot)
        row.update(
            homfly=poly.render(),
            term=check.term or "-",
            verdict=check.verdict,
            verdict_text=check.text(),
        )

    perturbed = checkpoint.metadata.get("perturbed", True)
    reference = reference_for(knot, perturbed=perturbed)
    _print_report(row, reference)
    return row


def _print_report(row: dict, reference):
    table = Table(show_header=True, header_style="bold magenta", show_lines=False)
    table.add_column("", style="dim")
    table.add_column("Knot", style="cyan")
    table.add_column("HOMFLY term", style="yellow")
    table.add_column("Self-intersection")
    table.add_column("MC error ± std (MC max)", style="dim")
    table.add_column("Verdict")

    d_text = "unresolved" if row["d"] is None else str(row["d"])
    verdict = row.get("verdict_text", row["verdict"])
    colour = "green" if row["verdict"] == "CONSISTENT" else "yellow"
    table.add_row(
        "computed", row["knot"], row["term"], d_text, row["mc"], f"[{colour}]{verdict}[/{colour}]"
    )
    if reference is not None:
        table.add_row(
            "published",
            reference.label,
            reference.term,
            reference.self_intersection_text,
            reference.mc,
            "",
        )
    console.print(table)
    if "homfly" in row:
        print(f"P({row['knot']}) = {row['homfly']}")


def export_surface_command(checkpoint_path, model="halfspace", rings=64, output=None) -> Path:
    """Triangulated image of the disc in half-space or ball coordinates"""
    checkpoint_path = Path(checkpoint_path)
    checkpoint = Checkpoint.load(checkpoint_path)
    out_dir = _output_dir(output, checkpoint_path) / f"mesh_{model}"
    disc, image, faces = surface_mesh(checkpoint.surface(), rings, model)
    vertices, faces_path = write_mesh(out_dir, disc, image, faces, model)
    print(
        f"[green]✓ Mesh with {len(disc)} vertices and {len(faces)} faces: "
        f"{vertices.parent}[/green]"
    )
    log_info(f"Faces written to {faces_path}")
    return out_dir


def fixture_command(name, output) -> Path:
    """Write an analytic fixture checkpoint"""
    path = Checkpoint.from_fixture(name).save(output)
    print(f"[green]✓ Fixture '{name}' written to {path}[/green]")
    return path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plateau-cli",
        description="plateau-cli 🫧 - Minimal discs in hyperbolic space bounded by knots",
        epilog="""
Examples:
  %(prog)s train configs/unknot_desk.ini             Train a disc (Adam, then L-BFGS)
  %(prog)s eval runs/unknot_desk/model.json           Monte Carlo loss statistics
  %(prog)s intersect runs/trefoil/model.json --grid 128
  %(prog)s report runs/trefoil/model.json             Compare with the HOMFLY prediction
  %(prog)s export-surface runs/trefoil/model.json --model ball
  %(prog)s fixture one_crossing fixture.json          Analytic double-point test map
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )

    # Global options (available for all commands)
    parser.add_argument("--version", "-v", action="version", version=f"plateau-cli {__version__}")
    parser.add_argument(
        "--verbose", action="store_true", help="Enable verbose output with detailed logging"
    )
    parser.add_argument("--log-file", help="Also append verbose output to this file")
    parser.add_argument(
        "--threads", type=int, help="Worker threads (default: config.ini or all cores)"
    )

    subparsers = parser.add_subparsers(
        dest="command",
        help="Available commands: train, eval, intersect, report, export-surface, fixture",
    )

    train_parser = subparsers.add_parser("train", help="Train a minimal disc")
    train_parser.add_argument("config", help="Experiment INI file")
    train_parser.add_argument("--output", "-o", help="Output directory (default: output root)")

    eval_parser = subparsers.add_parser("eval", help="Monte Carlo evaluation of the loss")
    eval_parser.add_argument("checkpoint")
    eval_parser.add_argument("--samples", type=int, help="Number of samples S")
    eval_parser.add_argument("--size", type=int, help="Sample size N")
    eval_parser.add_argument("--seed", type=int)
    eval_parser.add_argument("--heatmap", type=int, dest="heatmap_res", help="Heatmap grid size")
    eval_parser.add_argument("--output", "-o")

    intersect_parser = subparsers.add_parser("intersect", help="Find and sign double points")
    intersect_parser.add_argument("checkpoint")
    intersect_parser.add_argument("--grid", type=int, dest="grid_res")
    intersect_parser.add_argument("--eps", type=float, dest="epsilon")
    intersect_parser.add_argument("--tau", type=float, dest="tau_img")
    intersect_parser.add_argument("--cap", type=int)
    intersect_parser.add_argument("--output", "-o")

    report_parser = subparsers.add_parser("report", help="HOMFLY consistency report")
    report_parser.add_argument("checkpoint")
    report_parser.add_argument("--records", help="intersections.json from 'intersect'")
    report_parser.add_argument("--eval", dest="evaluation", help="eval.json from 'eval'")
    report_parser.add_argument("--d", type=int, help="Self-intersection number to check")

    export_parser = subparsers.add_parser("export-surface", help="Export the image surface mesh")
    export_parser.add_argument("checkpoint")
    export_parser.add_argument("--model", choices=["halfspace", "ball"], default="halfspace")
    export_parser.add_argument("--rings", type=int, default=64)
    export_parser.add_argument("--output", "-o")

    fixture_parser = subparsers.add_parser("fixture", help="Write an analytic fixture checkpoint")
    fixture_parser.add_argument("name", choices=sorted(FIXTURES))
    fixture_parser.add_argument("output")

    return parser


def _dispatch(args):
    if args.command == "train":
        train_command(args.config, args.output, args.threads)
    elif args.command == "eval":
        eval_command(
            args.checkpoint,
            args.samples,
            args.size,
            args.seed,
            args.heatmap_res,
            args.output,
            args.threads,
        )
    elif args.command == "intersect":
        intersect_command(
            args.checkpoint,
            args.grid_res,
            args.epsilon,
            args.tau_img,
            args.cap,
            args.output,
            args.threads,
        )
    elif args.command == "report":
        report_command(args.checkpoint, args.records, args.evaluation, args.d)
    elif args.command == "export-surface":
        export_surface_command(args.checkpoint, args.model, args.rings, args.output)
    elif args.command == "fixture":
        fixture_command(args.name, args.output)


def main(argv=None):
    """Main CLI entry point"""
    setup_signal_handler()
    parser = _build_parser()
    args = parser.parse_args(argv)

    set_verbose(args.verbose, args.log_file)
    if args.verbose and args.log_file:
        try:
            with open(args.log_file, "w", encoding="utf-8") as f:
                f.write("=== plateau-cli Verbose Log ===\n")
                f.write(f"Started at: {time.strftime('%Y-%m-%d %H:%M:%S')}\n")
                f.write("=" * 50 + "\n\n")
        except OSError as e:
            print(f"[red]Could not create log file: {e}[/red]")
    if args.verbose:
        print_verbose_summary()

    if args.command is None:
        parser.print_help()
        return

    try:
        _dispatch(args)
    except PlateauError as e:
        log_warning(f"{type(e).__name__}")
        print(f"[red]Error: {e}[/red]")
        sys.exit(1)
    log_success("Done")


if __name__ == "__main__":
    main()
