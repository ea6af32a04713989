# ============================================================================
# core/__init__.py
# ============================================================================
"""Core modules for the consensus simulator."""

from .config import ExperimentConfig
from .exceptions import (
    ConfigError,
    ConsensusError,
    InsufficientStore,
    MalformedMessage,
    ModeMismatch,
    ProtocolStateError,
    ReplayDivergence,
)
from .interfaces import ByzantineBehavior, CryptoProvider
from .logger import SimLogger

__all__ = [
    "ByzantineBehavior",
    "ConfigError",
    "ConsensusError",
    "CryptoProvider",
    "ExperimentConfig",
    "InsufficientStore",
    "MalformedMessage",
    "ModeMismatch",
    "ProtocolStateError",
    "ReplayDivergence",
    "SimLogger",
]
