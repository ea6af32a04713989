"""Wire messages, canonical codec, vote tallies, validity and the common coin."""

from .codec import decode, encode, kind_of
from .coin import CoinOverride, CoinState, make_share, verify_share
from .messages import (
    AuxMsg,
    AuxProofMsg,
    CoinShare,
    CombinedMsg,
    DecisionProof,
    ProofRequest,
    ProofResponse,
    SignedAux,
)
from .tally import AuxStore, Tally
from .validity import Validity, build_proofs, is_valid, prev_r

__all__ = [
    "AuxMsg",
    "AuxProofMsg",
    "AuxStore",
    "CoinOverride",
    "CoinShare",
    "CoinState",
    "CombinedMsg",
    "DecisionProof",
    "ProofRequest",
    "ProofResponse",
    "SignedAux",
    "Tally",
    "Validity",
    "build_proofs",
    "decode",
    "encode",
    "is_valid",
    "kind_of",
    "make_share",
    "prev_r",
    "verify_share",
]
