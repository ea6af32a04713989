"""
Experiment runner.

Expands an ExperimentConfig into seeded instances per grid point, executes
them (optionally on a thread pool), checks every finished instance for
safety and liveness violations and aggregates the rows into a Report.

Tracks:
- decision and participation rounds
- messages and bytes sent by honest processes
- drop, defer and proof-request counters
- property violations
"""

from __future__ import annotations

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from ..core.config import ExperimentConfig
from ..core.exceptions import ModeMismatch
from ..core.logger import SimLogger
from ..core.state import ProtocolMode
from ..sim.faults import parse_fault_spec
from ..sim.properties import check_all
from ..sim.simulator import InstanceConfig, run_instance
from .metrics import InstanceRow, ModeDiff, Report

_LOGGER = logging.getLogger(__name__)


def trace_path(trace_dir: str, instance: InstanceConfig) -> Path:
    """<trace_dir>/n<n>-<mode>/instance-<index>.trace"""
    slug = instance.mode.label.replace("/", "-")
    return Path(trace_dir) / f"n{instance.n}-{slug}" / f"instance-{instance.index}.trace"


class ExperimentRunner:
    """
    Runs measured (and warmup) instances for every n of a config.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        logger: Optional[SimLogger] = None,
    ) -> None:
        """
        Initialize the runner.

        Args:
            config: validated experiment configuration
            logger: event logger (built from the config when omitted)

        Raises:
            ConfigError: the configuration is invalid
        """
        self._config = config.ensure_valid()
        self._logger = logger or SimLogger(config)

        _LOGGER.info(
            "ExperimentRunner initialized: n=%s, instances=%d, warmup=%d, mode=%s",
            config.n_values,
            config.instances,
            config.warmup,
            self.mode.label,
        )

    @property
    def config(self) -> ExperimentConfig:
        return self._config

    @property
    def mode(self) -> ProtocolMode:
        cfg = self._config
        return ProtocolMode(
            combine_messages=cfg.combine_messages,
            include_proofs=cfg.include_proofs,
            lazy_stop=cfg.lazy_stop,
        )

    def instance_config(self, n: int, index: int) -> InstanceConfig:
        """Seeded instance for grid point n; warmup instances use negative indices."""
        cfg = self._config
        t = cfg.t_for(n)
        return InstanceConfig.build(
            n,
            t,
            index=index,
            seed=cfg.seed,
            proposals=cfg.proposals,
            mode=self.mode,
            coin=cfg.coin,
            adversary=cfg.adversary,
            fairness_factor=cfg.fairness_factor,
            faults=parse_fault_spec(cfg.faults, n, t),
            provider=cfg.provider,
            step_cap=cfg.step_cap,
            coin_horizon=cfg.coin_horizon,
        )

    def run_one(self, instance: InstanceConfig) -> InstanceRow:
        """Execute, check and (when measured and configured) persist one trace."""
        result = run_instance(instance)
        violations = check_all(result)
        if violations:
            self._logger.log_violation(instance.index, violations)
        if self._config.trace_dir and instance.index >= 0 and result.trace is not None:
            result.trace.write(trace_path(self._config.trace_dir, instance))
        result.trace = None
        return InstanceRow.from_result(result, violations)

    async def _run_batch(self, instances: Sequence[InstanceConfig]) -> list[InstanceRow]:
        workers = self._config.max_workers
        if workers <= 1:
            return [self.run_one(instance) for instance in instances]

        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = await asyncio.gather(
                *(loop.run_in_executor(pool, self.run_one, i) for i in instances)
            )
        return sorted(rows, key=lambda row: row.index)

    async def run_grid_point(self, n: int) -> list[InstanceRow]:
        cfg = self._config
        warmup = [self.instance_config(n, -(k + 1)) for k in range(cfg.warmup)]
        if warmup:
            discarded = await self._run_batch(warmup)
            _LOGGER.debug("n=%d: %d warmup instances discarded", n, len(discarded))

        measured = [self.instance_config(n, k) for k in range(cfg.instances)]
        rows = await self._run_batch(measured)
        for row in rows:
            await self._logger.async_log_instance(row.to_dict())
        return rows

    async def run_experiment(self) -> Report:
        """Run every grid point and aggregate the measured rows."""
        rows: list[InstanceRow] = []
        for n in self._config.n_values:
            rows.extend(await self.run_grid_point(n))

        report = Report.from_rows(self._config.to_dict(), rows)
        for summary in report.summaries:
            await self._logger.log_summary(
                f"n={summary.n} {summary.mode}", summary.to_dict()
            )

        if report.green:
            _LOGGER.info("Experiment finished: %d rows, no violations", len(rows))
        else:
            _LOGGER.warning(
                "Experiment finished: %d rows, %d violation(s)",
                len(rows),
                len(report.violations),
            )
        return report

    async def compare_modes(self, strict: bool = True) -> ModeDiff:
        """
        Run base and combined modes over identical seeds and coins.

        Raises:
            ModeMismatch: some paired instance decided different values
                (only when `strict`)
        """
        base = await ExperimentRunner(
            self._config.with_mode(combine_messages=False), self._logger
        ).run_experiment()
        combined = await ExperimentRunner(
            self._config.with_mode(combine_messages=True), self._logger
        ).run_experiment()

        combined_values = {(r.n, r.index): r.decided_value for r in combined.rows}
        mismatches = [
            (row.n, row.index)
            for row in base.rows
            if combined_values.get((row.n, row.index)) != row.decided_value
        ]
        diff = ModeDiff(base=base, combined=combined, mismatches=mismatches)

        _LOGGER.info(
            "Mode comparison: %d/%d decided values match",
            diff.value_matches,
            diff.pairs,
        )
        if mismatches and strict:
            raise ModeMismatch(mismatches, diff)
        return diff


def run_experiment(config: ExperimentConfig) -> Report:
    """Blocking convenience wrapper around `ExperimentRunner.run_experiment`."""
    return asyncio.run(ExperimentRunner(config).run_experiment())


def compare_modes(config: ExperimentConfig, strict: bool = True) -> ModeDiff:
    """Blocking convenience wrapper around `ExperimentRunner.compare_modes`."""
    return asyncio.run(ExperimentRunner(config).compare_modes(strict=strict))
