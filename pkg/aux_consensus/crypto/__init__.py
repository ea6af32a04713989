"""Signing, threshold aggregation and coin derivation."""

from .keyring import KeyRing, Signature, ThresholdSignature
from .provider import (
    MockPrfProvider,
    ProcessSigner,
    available_providers,
    get_provider,
    register_provider,
)

__all__ = [
    "KeyRing",
    "MockPrfProvider",
    "ProcessSigner",
    "Signature",
    "ThresholdSignature",
    "available_providers",
    "get_provider",
    "register_provider",
]
