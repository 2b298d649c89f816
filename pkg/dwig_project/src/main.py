#!/usr/bin/env python3
"""
Double-Wound Induction Generator Toolkit - Command Line
=======================================================

Runs open-loop experiments, adaptive closed-loop regulation, (lambda, rho)
tuning sweeps and offline identification of logged runs.

Exit codes: 0 ok, 2 configuration or input error, 3 simulation diverged,
4 sweep finished with failed cells.
"""

import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

import click
import pandas as pd
from rich.console import Console
from rich.logging import RichHandler

# Add the project root to path for imports
sys.path.append(str(Path(__file__).resolve().parent.parent))

from dwig_engine import __version__
from dwig_engine.config import ScenarioSpec, load_scenario
from dwig_engine.engine_models import TimeSeriesLog
from dwig_engine.errors import ConfigError, DivergedState
from dwig_engine.loop import run_closed_loop, run_open_loop, sweep
from dwig_engine.metrics import compute_metrics
from src.core.log_identifier import identify_from_log
from src.core.run_reporter import (
    RANKING_NOTE, read_log_csv, render_metrics_table, write_log_csv, write_manifest,
    write_metrics_csv, write_run_plots,
)

logger = logging.getLogger("dwig")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_PARTIAL = 4

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


def configure_logging(level: str = "INFO", log_file: Optional[Path] = None) -> None:
    """Rich console handler plus an optional plain-text run log."""
    root = logging.getLogger()
    for handler in [h for h in root.handlers if getattr(h, "_dwig_handler", False)]:
        root.removeHandler(handler)
        handler.close()
    root.setLevel(getattr(logging, level.upper(), logging.INFO))

    console = RichHandler(console=Console(stderr=True), show_path=False, markup=False)
    console.setFormatter(logging.Formatter("%(message)s"))
    console._dwig_handler = True
    root.addHandler(console)

    if log_file is not None:
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        file_handler._dwig_handler = True
        root.addHandler(file_handler)


def _fail(message: str, code: int) -> None:
    logger.error("❌ %s", message)
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _parse_floats(text: Optional[str], option: str) -> List[float]:
    if not text:
        return []
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        _fail(f"{option} must be a comma-separated list of numbers, got '{text}'", EXIT_CONFIG)


class ScenarioRunner:
    """Loads one scenario, prepares the output directory and writes every artifact of a run"""

    def __init__(self, scenario_path: str, out_dir: str, log_level: str,
                 seed: Optional[int] = None, ts: Optional[float] = None, h: Optional[float] = None):
        self.scenario_path = Path(scenario_path)
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        configure_logging(log_level, self.out_dir / "run.log")
        self.started_at = datetime.now(timezone.utc)
        try:
            self.spec: ScenarioSpec = load_scenario(self.scenario_path).with_overrides(
                seed=seed, ts=ts, h=h)
        except ConfigError as e:
            _fail(str(e), EXIT_CONFIG)

    def require_mode(self, mode: str) -> None:
        if self.spec.mode != mode:
            _fail(f"{self.scenario_path}: mode is '{self.spec.mode}', this command needs '{mode}'",
                  EXIT_CONFIG)

    def simulate(self, runner) -> TimeSeriesLog:
        try:
            return runner(self.spec)
        except DivergedState as e:
            _fail(f"simulation diverged: {e}", EXIT_DIVERGED)
        except ConfigError as e:
            _fail(str(e), EXIT_CONFIG)

    def write_run(self, log: TimeSeriesLog, metrics: Optional[pd.DataFrame] = None) -> dict:
        name = self.spec.name
        csv_path = write_log_csv(log.frame, self.out_dir / f"{name}.csv")
        outputs = {"log": str(csv_path)}
        for n, plot in enumerate(write_run_plots(log, self.out_dir, name)):
            outputs[f"plot_{n}"] = str(plot)
        if metrics is not None:
            outputs["metrics"] = str(write_metrics_csv(metrics, self.out_dir / f"{name}_metrics.csv"))
        manifest = write_manifest(self.out_dir / f"{name}.manifest.json", self.scenario_path,
                                  self.spec.seed, self.started_at, outputs,
                                  extra={"diagnostics": log.diagnostics})
        logger.info("💾 wrote %s and %s", csv_path.name, manifest.name)
        return outputs


def scenario_options(func):
    """Options shared by the simulation commands."""
    func = click.option("--h", "h", type=float, default=None, help="Override the integration step [s].")(func)
    func = click.option("--ts", type=float, default=None, help="Override the sample period [s].")(func)
    func = click.option("--seed", type=int, default=None, help="Override the scenario seed.")(func)
    func = click.option("--out", "out_dir", type=click.Path(file_okay=False), default="runs",
                        show_default=True, help="Output directory.")(func)
    func = click.option("--scenario", "scenario_path", type=click.Path(dir_okay=False), required=True,
                        help="Scenario YAML file.")(func)
    return func


@click.group()
@click.version_option(__version__)
@click.option("--log-level", default="INFO", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.pass_context
def cli(ctx, log_level):
    """Double-wound induction generator simulation and adaptive voltage control."""
    ctx.ensure_object(dict)
    ctx.obj["log_level"] = log_level


@cli.command("open-loop")
@scenario_options
@click.pass_context
def cmd_open_loop(ctx, scenario_path, out_dir, seed, ts, h):
    """Run an open-loop scenario and write its log, plots and manifest."""
    runner = ScenarioRunner(scenario_path, out_dir, ctx.obj["log_level"], seed, ts, h)
    runner.require_mode("open_loop")
    log = runner.simulate(run_open_loop)
    runner.write_run(log)
    click.echo(f"open-loop run '{runner.spec.name}': {len(log.frame)} samples -> {runner.out_dir}")
    sys.exit(EXIT_OK)


@cli.command("closed-loop")
@scenario_options
@click.pass_context
def cmd_closed_loop(ctx, scenario_path, out_dir, seed, ts, h):
    """Run a closed-loop scenario and write its log, metrics, plots and manifest."""
    runner = ScenarioRunner(scenario_path, out_dir, ctx.obj["log_level"], seed, ts, h)
    runner.require_mode("closed_loop")
    spec = runner.spec
    log = runner.simulate(run_closed_loop)
    metrics = compute_metrics(log, spec.metrics.band_fraction, spec.metrics_event_time(),
                              spec.metrics.final_window)
    row = {"scenario": spec.name, "lambda": spec.lam, "rho": spec.rho, "seed": spec.seed}
    row.update(metrics.as_row())
    table = pd.DataFrame([row])
    runner.write_run(log, table)
    render_metrics_table(table, f"closed loop: {spec.name}")
    sys.exit(EXIT_OK)


@cli.command("sweep")
@scenario_options
@click.option("--lambdas", default=None, help="Comma-separated forgetting factors.")
@click.option("--rhos", default=None, help="Comma-separated penalty factors.")
@click.option("--workers", type=int, default=None, help="Parallel worker processes.")
@click.pass_context
def cmd_sweep(ctx, scenario_path, out_dir, seed, ts, h, lambdas, rhos, workers):
    """Run a (lambda, rho) grid and write the ranked metrics table."""
    runner = ScenarioRunner(scenario_path, out_dir, ctx.obj["log_level"], seed, ts, h)
    runner.require_mode("closed_loop")
    spec = runner.spec
    grid = spec.sweep
    lam_list = _parse_floats(lambdas, "--lambdas")
    rho_list = _parse_floats(rhos, "--rhos")
    cells = []
    if not lam_list and not rho_list and grid is not None:
        lam_list, rho_list, cells = list(grid.lambdas), list(grid.rhos), list(grid.cells)
    if bool(lam_list) != bool(rho_list) and not cells:
        _fail("--lambdas and --rhos must be given together", EXIT_CONFIG)
    seed_mode = grid.seed_mode if grid is not None else "xor"
    n_workers = workers or (grid.workers if grid is not None else 1)
    try:
        table = sweep(spec, lam_list, rho_list, cells=cells, seed_mode=seed_mode, workers=n_workers)
    except ConfigError as e:
        _fail(str(e), EXIT_CONFIG)

    path = write_metrics_csv(table, runner.out_dir / f"{spec.name}_sweep.csv", note=RANKING_NOTE)
    write_manifest(runner.out_dir / f"{spec.name}_sweep.manifest.json", runner.scenario_path,
                   spec.seed, runner.started_at, {"metrics": str(path)},
                   extra={"seed_mode": seed_mode})
    render_metrics_table(table.drop(columns=["error"]), f"sweep: {spec.name}", caption=RANKING_NOTE)
    failed = int((table["status"] != "ok").sum())
    if failed:
        _fail(f"{failed} of {len(table)} sweep cells failed (see {path.name})", EXIT_PARTIAL)
    sys.exit(EXIT_OK)


@cli.command("identify")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), required=True, help="CSV log to replay.")
@click.option("--order", type=click.IntRange(2, 8), default=5, show_default=True)
@click.option("--lambda", "lam", type=float, default=1.0, show_default=True)
@click.option("--p0", type=float, default=1e6, show_default=True, help="Initial covariance scale.")
@click.option("--u-column", default="u_applied_v", show_default=True)
@click.option("--y-column", default="y_measured_v", show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Optional CSV file for the fit report.")
@click.pass_context
def cmd_identify(ctx, log_path, order, lam, p0, u_column, y_column, out_path):
    """Replay recursive least squares offline over a logged run."""
    configure_logging(ctx.obj["log_level"])
    try:
        frame = read_log_csv(log_path)
        report = identify_from_log(frame, order=order, lam=lam, p0=p0,
                                   u_column=u_column, y_column=y_column)
    except ConfigError as e:
        _fail(str(e), EXIT_CONFIG)

    table = pd.DataFrame([report.as_row()])
    if out_path:
        write_metrics_csv(table, out_path)
    render_metrics_table(table, f"identification: {Path(log_path).name}")
    click.echo(f"stable: {report.stable}; root magnitudes: "
               + ", ".join(f"{m:.6f}" for m in report.root_magnitudes))
    sys.exit(EXIT_OK)


def main():
    """Main entry point"""
    cli(obj={})


if __name__ == "__main__":
    main()
