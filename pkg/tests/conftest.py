"""Global test configuration for the consensus simulator tests."""

import os
import sys

# -----------------------------------------------------------------------------
# 1. Path Setup (MUST be first)
# -----------------------------------------------------------------------------
# Add the project root (up one level from 'tests') so we can import 'aux_consensus'
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
sys.path.insert(0, project_root)

# -----------------------------------------------------------------------------
# 2. Imports (Now safe to import local modules)
# -----------------------------------------------------------------------------
from typing import Callable, Optional  # noqa: E402

import pytest  # noqa: E402

from aux_consensus.core.process import ConsensusProcess  # noqa: E402
from aux_consensus.core.state import ProtocolMode  # noqa: E402
from aux_consensus.crypto.keyring import KeyRing  # noqa: E402
from aux_consensus.crypto.provider import MockPrfProvider  # noqa: E402
from aux_consensus.protocol.codec import aux_payload  # noqa: E402
from aux_consensus.protocol.coin import CoinOverride  # noqa: E402
from aux_consensus.protocol.messages import AuxMsg, AuxProofMsg, SignedAux  # noqa: E402

INSTANCE = bytes(range(32))

# -----------------------------------------------------------------------------
# 3. Fixtures & Configuration
# -----------------------------------------------------------------------------


def pytest_configure(config):
    """Add markers."""
    config.addinivalue_line(
        "markers", "slow: long statistical sweeps (deselect with -m 'not slow')"
    )


@pytest.fixture(scope="session")
def anyio_backend():
    """Select asyncio as the backend for anyio tests."""
    return "asyncio"


@pytest.fixture
def instance() -> bytes:
    """A fixed 32-byte instance tag."""
    return INSTANCE


@pytest.fixture
def keyring() -> KeyRing:
    """Keys for n=4, t=1."""
    return KeyRing.generate(4, 1, 7)


@pytest.fixture
def provider(keyring) -> MockPrfProvider:
    return MockPrfProvider(keyring)


@pytest.fixture
def signed_aux(provider, instance) -> Callable[..., SignedAux]:
    """Factory: signed_aux(signer, round, value) -> SignedAux."""

    def _make(signer: int, round_: int, value: int) -> SignedAux:
        aux = AuxMsg(instance=instance, round=round_, value=value)
        return SignedAux(aux=aux, signature=provider.sign(signer, aux_payload(aux)))

    return _make


@pytest.fixture
def aux_msg(signed_aux) -> Callable[..., AuxProofMsg]:
    """Factory: aux_msg(signer, round, value, proofs=()) -> AuxProofMsg."""

    def _make(signer: int, round_: int, value: int, proofs=()) -> AuxProofMsg:
        return AuxProofMsg(
            signed=signed_aux(signer, round_, value), proofs=frozenset(proofs)
        )

    return _make


@pytest.fixture
def make_process(provider, instance) -> Callable[..., ConsensusProcess]:
    """Factory: make_process(index, mode=None, coin_seed=3) -> ConsensusProcess."""

    def _make(
        index: int = 0,
        mode: Optional[ProtocolMode] = None,
        coin_seed: Optional[int] = 3,
    ) -> ConsensusProcess:
        override = CoinOverride(coin_seed) if coin_seed is not None else None
        return ConsensusProcess(
            provider.signer_for(index), instance, mode=mode, override=override
        )

    return _make
