"""
Run Output Writers
CSV logs, run manifests, metrics tables and the standard plots of a run
"""

import hashlib
import json
import logging
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
from rich.console import Console
from rich.table import Table

from dwig_engine import __version__
from dwig_engine.engine_models import LoopMode, TimeSeriesLog
from dwig_engine.errors import ConfigError

from .plotting import plot_series

logger = logging.getLogger(__name__)

# 17 significant digits round-trip every IEEE double exactly
FLOAT_FORMAT = "%.17g"

RANKING_NOTE = (
    "Ranking rule: settled cells first, then shorter settling time, then smaller overshoot. "
    "Labels are this codified rule applied to the default plant; they need not match "
    "published Best/Good/Poor labels."
)


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _atomic_write_text(path: Path, text: str) -> None:
    """Write to a temporary file in the same directory, then rename into place."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_log_csv(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    _atomic_write_text(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))
    return path


def read_log_csv(path) -> pd.DataFrame:
    """Read a log back with exact float round-tripping."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as e:
        raise ConfigError(f"log file not found: {path}") from e
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ConfigError(f"{path}: malformed CSV: {e}") from e
    if frame.empty:
        raise ConfigError(f"{path}: log has no data rows")
    return frame


def write_manifest(path, scenario_path, seed: int, started_at: datetime,
                   outputs: Dict[str, str], extra: Optional[dict] = None) -> Path:
    path = Path(path)
    manifest = {
        "tool_version": __version__,
        "scenario_file": str(scenario_path),
        "scenario_sha256": file_sha256(scenario_path),
        "seed": seed,
        "started_at": started_at.astimezone(timezone.utc).isoformat(),
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    _atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def write_metrics_csv(frame: pd.DataFrame, path, note: Optional[str] = None) -> Path:
    """Metrics table; ``note`` becomes a leading '#' comment line."""
    path = Path(path)
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    _atomic_write_text(path, (f"# {note}\n" if note else "") + body)
    return path


def read_metrics_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", float_precision="round_trip")


def render_metrics_table(frame: pd.DataFrame, title: str, console: Optional[Console] = None,
                         caption: Optional[str] = None) -> None:
    console = console or Console()
    table = Table(title=title, caption=caption)
    for column in frame.columns:
        table.add_column(str(column), justify="right" if frame[column].dtype.kind in "fi" else "left")
    for _, row in frame.iterrows():
        table.add_row(*(f"{v:.6g}" if isinstance(v, float) else str(v) for v in row.tolist()))
    console.print(table)


def write_run_plots(log: TimeSeriesLog, out_dir: Path, name: str) -> List[Path]:
    """Terminal voltage for every run; excitation and estimates for closed loop."""
    frame = log.frame
    t = frame["time_s"]
    written = [plot_series(out_dir / f"{name}_terminal_voltage.svg", t,
                           {"terminal voltage": frame["vt_v"]},
                           "terminal voltage [V]", f"{name}: terminal voltage")]
    if log.mode is LoopMode.CLOSED_LOOP:
        written.append(plot_series(
            out_dir / f"{name}_excitation.svg", t,
            {"applied": frame["u_applied_v"], "unclamped": frame["u_unclamped_v"]},
            "excitation voltage [V]", f"{name}: excitation voltage"))
        theta = {c.replace("theta_", ""): frame[c] for c in frame.columns if c.startswith("theta_")}
        written.append(plot_series(out_dir / f"{name}_estimates.svg", t, theta,
                                   "estimate [-]", f"{name}: parameter estimates"))
    else:
        written.append(plot_series(out_dir / f"{name}_relative_voltage.svg", t,
                                   {"relative variation": frame["vt_rel"]},
                                   "relative terminal voltage [p.u.]",
                                   f"{name}: relative terminal voltage variation"))
    return written
