"""Constants for the signed-AUX binary consensus simulator."""

from __future__ import annotations

from typing import Final, List

# Package domain (mixed into instance tags)
DOMAIN: Final[str] = "aux_consensus"

# Protocol values
C_VAL: Final[int] = 2
BIN_VALUES: Final[tuple[int, int]] = (0, 1)

# Wire format
INSTANCE_TAG_SIZE: Final[int] = 32
DIGEST_SIZE: Final[int] = 32

# Configuration keys (config file / CLI flags) - CONF_* convention
CONF_N: Final[str] = "n"
CONF_T: Final[str] = "t"
CONF_INSTANCES: Final[str] = "instances"
CONF_WARMUP: Final[str] = "warmup"
CONF_SEED: Final[str] = "seed"
CONF_PROPOSALS: Final[str] = "proposals"
CONF_COIN: Final[str] = "coin"
CONF_COMBINE_MESSAGES: Final[str] = "combine_messages"
CONF_INCLUDE_PROOFS: Final[str] = "include_proofs"
CONF_LAZY_STOP: Final[str] = "lazy_stop"
CONF_ADVERSARY: Final[str] = "adversary"
CONF_FAIRNESS_FACTOR: Final[str] = "fairness_factor"
CONF_FAULTS: Final[str] = "faults"
CONF_PROVIDER: Final[str] = "provider"
CONF_STEP_CAP: Final[str] = "step_cap"
CONF_COIN_HORIZON: Final[str] = "coin_horizon"
CONF_OUTPUT_FORMAT: Final[str] = "format"
CONF_OUTPUT_PATH: Final[str] = "out"
CONF_TRACE_DIR: Final[str] = "trace_dir"
CONF_EVENT_LOG_PATH: Final[str] = "event_log_path"
CONF_LOG_LEVEL: Final[str] = "log_level"
CONF_MAX_WORKERS: Final[str] = "max_workers"

# Coin modes
COIN_REAL: Final[str] = "real"
COIN_OVERRIDE: Final[str] = "override"
COIN_MODES: Final[List[str]] = [COIN_REAL, COIN_OVERRIDE]

# Adversaries
ADVERSARY_FIFO: Final[str] = "fifo"
ADVERSARY_RANDOM: Final[str] = "random"
ADVERSARY_HEURISTIC: Final[str] = "heuristic"
ADVERSARIES: Final[List[str]] = [ADVERSARY_FIFO, ADVERSARY_RANDOM, ADVERSARY_HEURISTIC]

# Fault kinds
FAULT_CRASH: Final[str] = "crash"
FAULT_SILENT: Final[str] = "silent"
FAULT_EQUIVOCATE: Final[str] = "equivocate"
FAULT_GARBAGE: Final[str] = "garbage"
FAULT_FLIP_VALUE: Final[str] = "flip-value"
FAULT_KINDS: Final[List[str]] = [
    FAULT_CRASH,
    FAULT_SILENT,
    FAULT_EQUIVOCATE,
    FAULT_GARBAGE,
    FAULT_FLIP_VALUE,
]

# Crypto providers
PROVIDER_MOCK_PRF: Final[str] = "mock-prf"

# Output formats
FORMAT_JSON: Final[str] = "json"
FORMAT_CSV: Final[str] = "csv"
FORMAT_TEXT: Final[str] = "text"
OUTPUT_FORMATS: Final[List[str]] = [FORMAT_JSON, FORMAT_CSV, FORMAT_TEXT]

# Experiment grids
GRID_FAST: Final[List[int]] = [4, 7, 10]
GRID_LARGE: Final[List[int]] = [10, 20, 40, 80]

# Defaults
DEFAULT_INSTANCES: Final[int] = 50
DEFAULT_WARMUP: Final[int] = 5
DEFAULT_SEED: Final[int] = 1
DEFAULT_PROPOSALS: Final[str] = "random"
DEFAULT_COIN: Final[str] = COIN_OVERRIDE
DEFAULT_ADVERSARY: Final[str] = ADVERSARY_FIFO
DEFAULT_FAIRNESS_FACTOR: Final[int] = 50
DEFAULT_STEP_CAP: Final[int] = 1_000_000
DEFAULT_COIN_HORIZON: Final[int] = 64
DEFAULT_LOG_LEVEL: Final[str] = "error"
DEFAULT_OUTPUT_FORMAT: Final[str] = FORMAT_JSON
DEFAULT_MAX_WORKERS: Final[int] = 1

# Proof sets larger than this multiple of n are rejected on the wire
PROOF_CAP_FACTOR: Final[int] = 2
