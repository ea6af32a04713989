"""Validators for experiment configuration files and CLI flags."""

from __future__ import annotations

import re
from typing import Any, Union

import voluptuous as vol

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
    FAULT_KINDS,
    OUTPUT_FORMATS,
)
from ..core.exceptions import ConfigError

LOG_LEVELS = ["none", "error", "warning", "info", "debug", "trace"]

_FAULT_ENTRY = re.compile(
    r"^(?:(?P<index>\d+):)?(?P<kind>[a-z-]+)(?:@(?P<step>\d+))?$"
)
_PROPOSALS = re.compile(r"^(random|[01]+)$")


def parse_n_values(value: Union[int, str, list, tuple]) -> list[int]:
    """Accept 7, "4,7,10" or [4, 7, 10]."""
    if isinstance(value, bool):
        raise vol.Invalid("n must be an integer or a list of integers")
    if isinstance(value, int):
        items = [value]
    elif isinstance(value, str):
        items = [part for part in value.replace(" ", "").split(",") if part]
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        raise vol.Invalid(f"cannot read n from {value!r}")

    try:
        result = [int(item) for item in items]
    except (TypeError, ValueError) as err:
        raise vol.Invalid(f"n values must be integers: {value!r}") from err
    if not result or any(n < 1 for n in result):
        raise vol.Invalid(f"n values must be positive: {value!r}")
    return result


def fault_entries(spec: str) -> list[tuple[int | None, str, int | None]]:
    """
    Split a fault string into (index, kind, step) triples.

    Syntax: comma-separated entries of the form `[index:]kind[@step]`,
    e.g. "3:crash@0,2:equivocate" or just "silent". Only `crash` takes a step.
    """
    entries: list[tuple[int | None, str, int | None]] = []
    if not spec or spec.strip().lower() == "none":
        return entries

    for raw in spec.split(","):
        part = raw.strip()
        if not part:
            continue
        match = _FAULT_ENTRY.match(part)
        if match is None:
            raise vol.Invalid(f"cannot parse fault entry {part!r}")
        kind = match.group("kind")
        if kind not in FAULT_KINDS:
            raise vol.Invalid(f"unknown fault kind {kind!r} (choose from {FAULT_KINDS})")
        step = match.group("step")
        if step is not None and kind != "crash":
            raise vol.Invalid(f"only crash faults take a step, got {part!r}")
        index = match.group("index")
        entries.append(
            (
                None if index is None else int(index),
                kind,
                None if step is None else int(step),
            )
        )
    return entries


def assign_faults(spec: str, n: int, t: int) -> dict[int, tuple[str, int | None]]:
    """
    Map process index -> (kind, crash step) for one grid point.

    A bare kind (no index) applies to the highest t indices. At most t
    processes may be faulty.
    """
    assigned: dict[int, tuple[str, int | None]] = {}
    for index, kind, step in fault_entries(spec):
        targets = range(n - t, n) if index is None else [index]
        for target in targets:
            if not 0 <= target < n:
                raise vol.Invalid(f"fault index {target} outside [0, {n})")
            assigned[target] = (kind, step)
    if len(assigned) > t:
        raise vol.Invalid(
            f"{len(assigned)} faulty processes exceed t={t} for n={n}"
        )
    return dict(sorted(assigned.items()))


def _fault_string(value: Any) -> str:
    if value is None:
        return ""
    text = str(value)
    fault_entries(text)
    return text


def _proposals(value: Any) -> str:
    text = str(value).strip().lower()
    if not _PROPOSALS.match(text):
        raise vol.Invalid("proposals must be 'random' or a string of 0/1 bits")
    return text


CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_N): parse_n_values,
        vol.Optional(CONF_T): vol.Any(None, vol.All(vol.Coerce(int), vol.Range(min=0))),
        vol.Optional(CONF_INSTANCES): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_WARMUP): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional(CONF_SEED): vol.Coerce(int),
        vol.Optional(CONF_PROPOSALS): _proposals,
        vol.Optional(CONF_COIN): vol.In(COIN_MODES),
        vol.Optional(CONF_COMBINE_MESSAGES): vol.Boolean(),
        vol.Optional(CONF_INCLUDE_PROOFS): vol.Boolean(),
        vol.Optional(CONF_LAZY_STOP): vol.Boolean(),
        vol.Optional(CONF_ADVERSARY): vol.In(ADVERSARIES),
        vol.Optional(CONF_FAIRNESS_FACTOR): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_FAULTS): _fault_string,
        vol.Optional(CONF_PROVIDER): str,
        vol.Optional(CONF_STEP_CAP): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_COIN_HORIZON): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_OUTPUT_FORMAT): vol.In(OUTPUT_FORMATS),
        vol.Optional(CONF_OUTPUT_PATH): vol.Any(None, str),
        vol.Optional(CONF_TRACE_DIR): vol.Any(None, str),
        vol.Optional(CONF_EVENT_LOG_PATH): vol.Any(None, str),
        vol.Optional(CONF_LOG_LEVEL): vol.All(str, vol.Lower, vol.In(LOG_LEVELS)),
        vol.Optional(CONF_MAX_WORKERS): vol.All(vol.Coerce(int), vol.Range(min=1)),
    },
    extra=vol.PREVENT_EXTRA,
)


def validate_config_data(data: Any) -> dict[str, Any]:
    """Run CONFIG_SCHEMA, turning voluptuous errors into a ConfigError."""
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    try:
        return CONFIG_SCHEMA(data)
    except vol.MultipleInvalid as err:
        messages = [str(error) for error in err.errors]
        raise ConfigError(f"invalid config: {'; '.join(messages)}", messages) from err
    except vol.Invalid as err:
        raise ConfigError(f"invalid config: {err}", [str(err)]) from err
