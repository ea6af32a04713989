"""
Experiment configuration management.

Centralizes all configuration access and provides type-safe getters.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional, Union

from ..const import (
    ADVERSARIES,
    COIN_MODES,
    CONF_ADVERSARY,
    CONF_COIN,
    CONF_COIN_HORIZON,
    CONF_COMBINE_MESSAGES,
    CONF_EVENT_LOG_PATH,
    CONF_FAIRNESS_FACTOR,
    CONF_FAULTS,
    CONF_INCLUDE_PROOFS,
    CONF_INSTANCES,
    CONF_LAZY_STOP,
    CONF_LOG_LEVEL,
    CONF_MAX_WORKERS,
    CONF_N,
    CONF_OUTPUT_FORMAT,
    CONF_OUTPUT_PATH,
    CONF_PROPOSALS,
    CONF_PROVIDER,
    CONF_SEED,
    CONF_STEP_CAP,
    CONF_T,
    CONF_TRACE_DIR,
    CONF_WARMUP,
    DEFAULT_ADVERSARY,
    DEFAULT_COIN,
    DEFAULT_COIN_HORIZON,
    DEFAULT_FAIRNESS_FACTOR,
    DEFAULT_INSTANCES,
    DEFAULT_LOG_LEVEL,
    DEFAULT_MAX_WORKERS,
    DEFAULT_OUTPUT_FORMAT,
    DEFAULT_PROPOSALS,
    DEFAULT_SEED,
    DEFAULT_STEP_CAP,
    DEFAULT_WARMUP,
    GRID_FAST,
    OUTPUT_FORMATS,
    PROVIDER_MOCK_PRF,
)
from ..utils.validators import assign_faults, parse_n_values, validate_config_data
from .exceptions import ConfigError

_LOGGER = logging.getLogger(__name__)


def default_t(n: int) -> int:
    """Largest t with n >= 3t+1."""
    return max(0, (n - 1) // 3)


@dataclass
class ExperimentConfig:
    """
    Configuration for a batch of consensus instances.

    Every field has a default so a bare `ExperimentConfig()` describes the
    fast grid with seeded random proposals and override coins.
    """

    # Grid
    n_values: list[int] = field(default_factory=lambda: list(GRID_FAST))
    t: Optional[int] = None  # None -> default_t(n) per grid point

    # Instances
    instances: int = DEFAULT_INSTANCES
    warmup: int = DEFAULT_WARMUP
    seed: int = DEFAULT_SEED
    proposals: str = DEFAULT_PROPOSALS  # "random" | bit string such as "0101"
    coin: str = DEFAULT_COIN

    # Protocol mode
    combine_messages: bool = False
    include_proofs: bool = True
    lazy_stop: bool = True

    # Network and faults
    adversary: str = DEFAULT_ADVERSARY
    fairness_factor: int = DEFAULT_FAIRNESS_FACTOR
    faults: str = ""
    provider: str = PROVIDER_MOCK_PRF
    step_cap: int = DEFAULT_STEP_CAP
    coin_horizon: int = DEFAULT_COIN_HORIZON

    # Output
    output_format: str = DEFAULT_OUTPUT_FORMAT
    output_path: Optional[str] = None
    trace_dir: Optional[str] = None
    event_log_path: Optional[str] = None

    # Runtime
    log_level: str = DEFAULT_LOG_LEVEL
    max_workers: int = DEFAULT_MAX_WORKERS

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        """
        Create configuration from a dictionary (config file or parsed flags).

        Unknown keys raise ConfigError. Unparsable values fall back to
        defaults; call `validate()` afterwards to surface range problems.
        """
        unknown = sorted(set(data) - set(cls().to_dict()))
        if unknown:
            raise ConfigError(
                f"unknown config keys: {unknown}", [str(key) for key in unknown]
            )

        def get_str(key: str, default: str) -> str:
            val = data.get(key)
            return str(val).strip() if val not in (None, "") else default

        def get_opt_str(key: str) -> Optional[str]:
            val = data.get(key)
            return str(val).strip() if val not in (None, "") else None

        def get_int(key: str, default: int) -> int:
            val = data.get(key)
            if isinstance(val, bool):
                return int(val)
            if isinstance(val, (int, float)):
                return int(val)
            if isinstance(val, str):
                try:
                    return int(float(val.strip()))
                except (ValueError, AttributeError):
                    return default
            return default

        def get_bool(key: str, default: bool) -> bool:
            val = data.get(key)
            if isinstance(val, bool):
                return val
            if isinstance(val, (int, float)):
                return val != 0
            if isinstance(val, str):
                v = val.strip().lower()
                if v in ("1", "true", "on", "yes", "y"):
                    return True
                if v in ("0", "false", "off", "no", "n"):
                    return False
            return default

        def get_n_values() -> list[int]:
            val = data.get(CONF_N)
            if val is None:
                return list(GRID_FAST)
            try:
                return parse_n_values(val)
            except Exception:  # noqa: BLE001
                _LOGGER.warning("Ignoring unreadable n value %r", val)
                return list(GRID_FAST)

        t_raw = data.get(CONF_T)
        return cls(
            n_values=get_n_values(),
            t=None if t_raw is None else get_int(CONF_T, 0),
            instances=get_int(CONF_INSTANCES, DEFAULT_INSTANCES),
            warmup=get_int(CONF_WARMUP, DEFAULT_WARMUP),
            seed=get_int(CONF_SEED, DEFAULT_SEED),
            proposals=get_str(CONF_PROPOSALS, DEFAULT_PROPOSALS).lower(),
            coin=get_str(CONF_COIN, DEFAULT_COIN),
            combine_messages=get_bool(CONF_COMBINE_MESSAGES, False),
            include_proofs=get_bool(CONF_INCLUDE_PROOFS, True),
            lazy_stop=get_bool(CONF_LAZY_STOP, True),
            adversary=get_str(CONF_ADVERSARY, DEFAULT_ADVERSARY),
            fairness_factor=get_int(CONF_FAIRNESS_FACTOR, DEFAULT_FAIRNESS_FACTOR),
            faults=get_str(CONF_FAULTS, ""),
            provider=get_str(CONF_PROVIDER, PROVIDER_MOCK_PRF),
            step_cap=get_int(CONF_STEP_CAP, DEFAULT_STEP_CAP),
            coin_horizon=get_int(CONF_COIN_HORIZON, DEFAULT_COIN_HORIZON),
            output_format=get_str(CONF_OUTPUT_FORMAT, DEFAULT_OUTPUT_FORMAT),
            output_path=get_opt_str(CONF_OUTPUT_PATH),
            trace_dir=get_opt_str(CONF_TRACE_DIR),
            event_log_path=get_opt_str(CONF_EVENT_LOG_PATH),
            log_level=get_str(CONF_LOG_LEVEL, DEFAULT_LOG_LEVEL).lower(),
            max_workers=get_int(CONF_MAX_WORKERS, DEFAULT_MAX_WORKERS),
        )

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> ExperimentConfig:
        """Load a JSON config file, checking it against CONFIG_SCHEMA."""
        try:
            with open(path, encoding="utf-8") as f:
                raw = json.load(f)
        except OSError as err:
            raise ConfigError(f"cannot read config file {path}: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file {path} is not valid JSON: {err}") from err

        config = cls.from_dict(validate_config_data(raw))
        _LOGGER.debug("Loaded config from %s: %s", path, config.to_dict())
        return config

    def merge_overrides(self, overrides: dict[str, Any]) -> ExperimentConfig:
        """
        Return a copy with `overrides` applied on top.

        Keys use the config-file names; None values mean "flag not given".
        """
        given = {key: value for key, value in overrides.items() if value is not None}
        if not given:
            return replace(self)
        merged = self.to_dict()
        merged.update(validate_config_data(given))
        return ExperimentConfig.from_dict(merged)

    def t_for(self, n: int) -> int:
        return default_t(n) if self.t is None else self.t

    def validate(self) -> list[str]:
        """
        Validate configuration and return list of errors.

        Returns:
            List of error messages (empty if valid)
        """
        errors = []

        if not self.n_values:
            errors.append("at least one n is required")
        for n in self.n_values:
            t = self.t_for(n)
            if n < 1:
                errors.append(f"n must be > 0, got {n}")
            elif n < 3 * t + 1:
                errors.append(f"n must be >= 3t+1 (n={n}, t={t})")

        if self.t is not None and self.t < 0:
            errors.append(f"t must be >= 0, got {self.t}")

        if self.instances < 1:
            errors.append(f"instances must be >= 1, got {self.instances}")

        if self.warmup < 0:
            errors.append(f"warmup must be >= 0, got {self.warmup}")

        if self.proposals != "random":
            if set(self.proposals) - {"0", "1"} or not self.proposals:
                errors.append(
                    f"proposals must be 'random' or a bit string, got {self.proposals!r}"
                )
            else:
                for n in self.n_values:
                    if len(self.proposals) not in (1, n):
                        errors.append(
                            f"proposals {self.proposals!r} needs 1 or {n} bits for n={n}"
                        )

        if self.coin not in COIN_MODES:
            errors.append(f"coin must be one of {COIN_MODES}, got {self.coin!r}")

        if self.adversary not in ADVERSARIES:
            errors.append(
                f"adversary must be one of {ADVERSARIES}, got {self.adversary!r}"
            )

        if self.fairness_factor < 1:
            errors.append(f"fairness_factor must be > 0, got {self.fairness_factor}")

        for n in self.n_values:
            try:
                assign_faults(self.faults, n, self.t_for(n))
            except Exception as err:  # noqa: BLE001
                errors.append(f"faults: {err}")
                break

        if self.step_cap < 1:
            errors.append(f"step_cap must be > 0, got {self.step_cap}")

        if self.coin_horizon < 1:
            errors.append(f"coin_horizon must be > 0, got {self.coin_horizon}")

        if self.output_format not in OUTPUT_FORMATS:
            errors.append(
                f"format must be one of {OUTPUT_FORMATS}, got {self.output_format!r}"
            )

        if self.max_workers < 1:
            errors.append(f"max_workers must be > 0, got {self.max_workers}")

        return errors

    def ensure_valid(self) -> ExperimentConfig:
        """Raise ConfigError listing every problem, or return self."""
        errors = self.validate()
        if errors:
            raise ConfigError("; ".join(errors), errors)
        return self

    def to_dict(self) -> dict[str, Any]:
        """
        Convert configuration to dictionary.

        Key order is stable; trace headers and reports embed this verbatim.
        """
        return {
            CONF_N: list(self.n_values),
            CONF_T: self.t,
            CONF_INSTANCES: self.instances,
            CONF_WARMUP: self.warmup,
            CONF_SEED: self.seed,
            CONF_PROPOSALS: self.proposals,
            CONF_COIN: self.coin,
            CONF_COMBINE_MESSAGES: self.combine_messages,
            CONF_INCLUDE_PROOFS: self.include_proofs,
            CONF_LAZY_STOP: self.lazy_stop,
            CONF_ADVERSARY: self.adversary,
            CONF_FAIRNESS_FACTOR: self.fairness_factor,
            CONF_FAULTS: self.faults,
            CONF_PROVIDER: self.provider,
            CONF_STEP_CAP: self.step_cap,
            CONF_COIN_HORIZON: self.coin_horizon,
            CONF_OUTPUT_FORMAT: self.output_format,
            CONF_OUTPUT_PATH: self.output_path,
            CONF_TRACE_DIR: self.trace_dir,
            CONF_EVENT_LOG_PATH: self.event_log_path,
            CONF_LOG_LEVEL: self.log_level,
            CONF_MAX_WORKERS: self.max_workers,
        }

    def with_mode(
        self, combine_messages: bool, include_proofs: Optional[bool] = None
    ) -> ExperimentConfig:
        """Copy with protocol mode flags changed (used for paired runs)."""
        return replace(
            self,
            n_values=list(self.n_values),
            combine_messages=combine_messages,
            include_proofs=(
                self.include_proofs if include_proofs is None else include_proofs
            ),
        )


def _append_line(file_path: str, line: str) -> None:
    """Blocking I/O operation to write to the file."""
    try:
        parent_dir = os.path.dirname(os.path.abspath(file_path))
        os.makedirs(parent_dir, exist_ok=True)
        with open(file_path, "a", encoding="utf-8") as f:
            f.write(line + "\n")
    except Exception as e:  # noqa: BLE001
        _LOGGER.error("Failed to write to custom log file %s: %r", file_path, e)


def log_to_file(file_path: str, data: dict[str, Any]) -> None:
    """Append one JSON line to a custom log file."""
    _append_line(file_path, json.dumps(data, ensure_ascii=False, sort_keys=False))


async def async_log_to_file(file_path: str, data: dict[str, Any]) -> None:
    """Log structured data to a custom file asynchronously."""
    line = json.dumps(data, ensure_ascii=False, sort_keys=False)
    await asyncio.to_thread(_append_line, file_path, line)
