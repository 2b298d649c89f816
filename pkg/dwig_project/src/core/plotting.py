"""
Line Charts for Simulation Logs
Terminal voltage, excitation and parameter-estimate charts saved as SVG
"""

import logging
from pathlib import Path
from typing import Dict, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

FIGURE_SIZE = (9, 4.2)


def plot_series(path, time: Sequence[float], series: Dict[str, Sequence[float]],
                y_label: str, title: str = "", x_label: str = "time [s]") -> Path:
    """Plot every entry of ``series`` against ``time`` on one axis and save to ``path``."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    try:
        for label, values in series.items():
            ax.plot(time, values, linewidth=1.0, label=label)
        ax.set_xlabel(x_label)
        ax.set_ylabel(y_label)
        if title:
            ax.set_title(title)
        ax.grid(True, alpha=0.3)
        if len(series) > 1:
            ax.legend(loc="center left", bbox_to_anchor=(1.01, 0.5), fontsize=9)
        fig.tight_layout()
        fig.savefig(path, format=path.suffix.lstrip(".") or "svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    logger.debug("plot written to %s", path)
    return path
