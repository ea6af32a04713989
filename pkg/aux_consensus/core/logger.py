"""
Custom logger for experiment runs.

Provides level-gated logging plus structured JSON-lines records of instance
results and run summaries, written to an optional event log file.
"""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from typing import Any, Optional

from .config import ExperimentConfig, async_log_to_file, log_to_file

_LOGGER = logging.getLogger(__name__)


class SimLogger:
    """A logger for experiment runs with configurable levels and event logging."""

    def __init__(self, config: ExperimentConfig) -> None:
        """Initialize the simulation logger."""
        self._config = config
        self._level = self._parse_level(config.log_level)
        self._logger = logging.getLogger(__name__)

    def _parse_level(self, level_str: str) -> int:
        """Parse log level string to logging level constant."""
        return {
            "none": logging.NOTSET,
            "error": logging.ERROR,
            "warning": logging.WARNING,
            "info": logging.INFO,
            "debug": logging.DEBUG,
            "trace": logging.DEBUG,  # Map trace to debug
        }.get((level_str or "").lower(), logging.ERROR)

    @property
    def level(self) -> int:
        return self._level

    @property
    def event_log_path(self) -> Optional[str]:
        return self._config.event_log_path

    def _safe_json(self, data: dict, max_len: int) -> str:
        """Safely convert dict to JSON string, truncating if necessary."""
        try:
            json_str = json.dumps(data, ensure_ascii=False)
            if max_len > 0 and len(json_str) > max_len:
                return (
                    f"{json_str[:max_len]}... (truncated, total {len(json_str)} chars)"
                )
            return json_str
        except TypeError:
            return "<failed to serialize payload>"

    def should_log(self, level: int) -> bool:
        """Check if a message at a given level should be logged."""
        return self._level != logging.NOTSET and self._level <= level

    def error(self, msg: str, *args: Any, **kwargs: Any) -> None:
        """Log an error message."""
        if self.should_log(logging.ERROR):
            self._logger.error(msg, *args, **kwargs)

    def warning(self, msg: str, *args: Any, **kwargs: Any) -> None:
        """Log a warning message."""
        if self.should_log(logging.WARNING):
            self._logger.warning(msg, *args, **kwargs)

    def info(self, msg: str, *args: Any, **kwargs: Any) -> None:
        """Log an info message."""
        if self.should_log(logging.INFO):
            self._logger.info(msg, *args, **kwargs)

    def debug(self, msg: str, *args: Any, **kwargs: Any) -> None:
        """Log a debug message."""
        if self.should_log(logging.DEBUG):
            self._logger.debug(msg, *args, **kwargs)

    def _record(self, kind: str, payload: dict[str, Any]) -> dict[str, Any]:
        return {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "type": kind,
            **payload,
        }

    def log_instance(self, row: dict[str, Any]) -> None:
        """Write one instance row to the event log, or to debug output."""
        if self._config.event_log_path:
            log_to_file(self._config.event_log_path, self._record("instance", row))
        else:
            self.debug("Instance row: %s", self._safe_json(row, 2000))

    async def async_log_instance(self, row: dict[str, Any]) -> None:
        """Async variant of `log_instance`."""
        if self._config.event_log_path:
            await async_log_to_file(
                self._config.event_log_path, self._record("instance", row)
            )
        else:
            self.debug("Instance row: %s", self._safe_json(row, 2000))

    async def log_summary(self, label: str, summary: dict[str, Any]) -> None:
        """Log a per-(n, mode) aggregate."""
        if self._config.event_log_path:
            await async_log_to_file(
                self._config.event_log_path,
                self._record("summary", {"label": label, "summary": summary}),
            )
        self.info("Summary %s: %s", label, self._safe_json(summary, 4000))

    def log_violation(self, instance: int, violations: list[str]) -> None:
        """Violations are always worth an error line."""
        for violation in violations:
            self.error("Instance %d violated: %s", instance, violation)
        if self._config.event_log_path:
            log_to_file(
                self._config.event_log_path,
                self._record(
                    "violation", {"instance": instance, "violations": violations}
                ),
            )
