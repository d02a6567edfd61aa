from __future__ import annotations

import logging
from typing import Sequence, TYPE_CHECKING

import matplotlib # type: ignore
matplotlib.use("Agg")
import matplotlib.pyplot as plt # type: ignore

import colors
from event_kinds import EventKind
from exceptions import DomainError

if TYPE_CHECKING:
    from simulation_log import SimulationLog

logger = logging.getLogger(__name__)

def emit_plot(
    log: SimulationLog,
    path: str,
    columns: Sequence[str] = ("x1", "x2"),
    title: str = "",
    mark_samples: bool = False,
) -> None:
    """Static line plot of log columns against t, written as SVG."""
    if log.rows == 0:
        raise DomainError("cannot plot an empty log")
    if not columns:
        raise DomainError("nothing to plot")

    fig, ax = plt.subplots(figsize = (8, 4.5))
    try:
        for name in columns:
            ax.plot(log.t, log.column(name), label = name, color = colors.hex_color(colors.column_color(name)), linewidth = 1.2)

        if mark_samples:
            for t in log.t[log.event_rows(EventKind.SAMPLE)]:
                ax.axvline(t, color = colors.hex_color(colors.sample_marker), linewidth = 0.3)

        ax.set_xlabel("t [s]")
        ax.grid(True, color = colors.hex_color(colors.grid))
        ax.legend(loc = "upper right")
        ax.set_title(title or log.name)
        fig.tight_layout()
        fig.savefig(path, format = "svg")
    finally:
        plt.close(fig)
    logger.info("wrote %s (%s)", path, ", ".join(columns))
