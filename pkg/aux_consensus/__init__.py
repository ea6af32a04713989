"""
Randomized asynchronous binary Byzantine consensus with signed votes.

Processes exchange signed AUX votes carrying validity proofs and derive a
common coin from threshold signatures. The package ships a deterministic
adversarial simulator and an experiment harness around the protocol.
"""

from __future__ import annotations

# core first: its config module pulls in utils, which needs core.exceptions
from .core import ConfigError, ConsensusError, ExperimentConfig
from .core.process import ConsensusProcess
from .core.state import Decision, Phase, ProtocolMode
from .sim import InstanceConfig, InstanceResult, replay, run_instance

__version__ = "1.0.0"

__all__ = [
    "ConfigError",
    "ConsensusError",
    "ConsensusProcess",
    "Decision",
    "ExperimentConfig",
    "InstanceConfig",
    "InstanceResult",
    "Phase",
    "ProtocolMode",
    "__version__",
    "replay",
    "run_instance",
]
