"""Experiment statistics: rows, summaries, runner and report output."""

from .metrics import InstanceRow, ModeDiff, ModeSummary, Report, Spread

# The runner pulls in the whole simulator; import it from .manager directly.

__all__ = [
    "InstanceRow",
    "ModeDiff",
    "ModeSummary",
    "Report",
    "Spread",
]
