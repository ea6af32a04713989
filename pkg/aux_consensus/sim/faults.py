"""
Byzantine fault injection.

Faulty processes only hold their own signing capability: they can sign
anything as themselves, but never forge another process's signature or
aggregate a coin below threshold.

Kinds:
- crash@k: honest until delivery step k, then gone
- silent: never sends anything
- equivocate: signs both values in every round it observes
- garbage: emits malformed bytes and badly signed messages
- flip-value: runs the honest algorithm but votes for the negated estimate
  whenever it can attach proofs for it
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import voluptuous as vol

from ..const import FAULT_CRASH
from ..core.exceptions import ConfigError, ConsensusError, InsufficientStore
from ..core.interfaces import ByzantineBehavior
from ..core.process import ConsensusProcess
from ..core.state import Outbound
from ..crypto.keyring import Signature
from ..crypto.provider import ProcessSigner
from ..protocol.codec import aux_payload, decode
from ..protocol.coin import CoinOverride, CoinState, make_share, verify_share
from ..protocol.messages import (
    AuxMsg,
    AuxProofMsg,
    CoinShare,
    CombinedMsg,
    ProofRequest,
    ProofResponse,
    ProtocolMessage,
    SignedAux,
    is_bin,
    negate,
)
from ..protocol.tally import AuxStore
from ..protocol.validity import build_proofs, resolve_value
from ..utils.validators import assign_faults

_LOGGER = logging.getLogger(__name__)


class FaultKind(str, Enum):
    """Supported faulty behaviors."""

    CRASH = "crash"
    SILENT = "silent"
    EQUIVOCATE = "equivocate"
    GARBAGE = "garbage"
    FLIP_VALUE = "flip-value"


@dataclass(frozen=True)
class FaultSpec:
    """Behavior assigned to one faulty process."""

    index: int
    kind: FaultKind
    crash_step: Optional[int] = None

    @property
    def runs_protocol(self) -> bool:
        """Crash and flip-value faults are driven by a protocol process."""
        return self.kind in (FaultKind.CRASH, FaultKind.FLIP_VALUE)

    def to_list(self) -> list:
        return [self.index, self.kind.value, self.crash_step]

    @classmethod
    def from_list(cls, item: list) -> FaultSpec:
        index, kind, step = item
        return cls(index=int(index), kind=FaultKind(kind), crash_step=step)


def parse_fault_spec(spec: str, n: int, t: int) -> tuple[FaultSpec, ...]:
    """
    Parse "3:crash@0,2:equivocate" (or a bare kind such as "silent", which
    applies to the highest t indices) into FaultSpecs.
    """
    try:
        assigned = assign_faults(spec, n, t)
    except vol.Invalid as err:
        raise ConfigError(f"invalid fault spec {spec!r}: {err}") from err

    faults = []
    for index, (kind, step) in assigned.items():
        if kind == FAULT_CRASH and step is None:
            step = 0
        faults.append(FaultSpec(index=index, kind=FaultKind(kind), crash_step=step))
    return tuple(faults)


def _round_of(message: ProtocolMessage) -> Optional[int]:
    if isinstance(message, CombinedMsg):
        return message.aux.round
    if isinstance(message, (AuxProofMsg, CoinShare)):
        return message.round
    return None


class SilentBehavior(ByzantineBehavior):
    """Sends nothing, ever."""

    def __init__(self, index: int) -> None:
        self.index = index

    def start(self, proposal: int) -> list[Outbound]:
        return []

    def step(self, origin: int, payload: bytes) -> list[Outbound]:
        return []


class EquivocatingBehavior(ByzantineBehavior):
    """
    Votes for both values in every round it sees.

    Keeps its own view of signed votes and coin shares so it can attach
    whatever proofs it is able to assemble; votes it cannot back still go
    out and are left to the receivers' validation.
    """

    def __init__(
        self,
        signer: ProcessSigner,
        instance: bytes,
        override: Optional[CoinOverride] = None,
        coin_horizon: int = 64,
    ) -> None:
        self.index = signer.index
        self._signer = signer
        self._instance = instance
        self._n = signer.keyring.n
        self._t = signer.keyring.t
        self._store = AuxStore()
        self._coin = CoinState(signer, instance, override=override, horizon=coin_horizon)
        self._rounds: set[int] = set()
        self._sent_proofs: dict[tuple[int, int], frozenset[SignedAux]] = {}

    def start(self, proposal: int) -> list[Outbound]:
        return self._equivocate(0)

    def step(self, origin: int, payload: bytes) -> list[Outbound]:
        try:
            message = decode(payload)
        except ConsensusError:
            return []

        if isinstance(message, ProofRequest):
            proofs = self._sent_proofs.get((message.round, message.value))
            if proofs is None or not self._signer.keyring.has_signer(message.requester):
                return []
            response = ProofResponse(
                instance=self._instance,
                round=message.round,
                value=message.value,
                responder=self.index,
                proofs=proofs,
            )
            return [Outbound(message=response, target=message.requester)]

        self._absorb(message)
        round_ = _round_of(message)
        if round_ is None or round_ in self._rounds:
            return []
        return self._equivocate(round_)

    def _absorb(self, message: ProtocolMessage) -> None:
        if isinstance(message, CombinedMsg):
            self._absorb(message.share)
            self._absorb(message.aux)
            return
        if isinstance(message, CoinShare):
            if verify_share(self._signer, message, self._instance):
                current = max(self._rounds, default=0)
                self._coin.add_share(message, current_round=current)
            return
        if isinstance(message, AuxProofMsg):
            for vote in (message.signed, *message.proofs):
                if vote.aux.instance != self._instance:
                    continue
                if not self._signer.verify(
                    vote.signature, vote.signer, aux_payload(vote.aux)
                ):
                    continue
                resolved = resolve_value(vote.round, vote.value, self._coin.coin_map)
                if resolved is not None:
                    self._store.add(vote, resolved)

    def _equivocate(self, round_: int) -> list[Outbound]:
        self._rounds.add(round_)
        out: list[Outbound] = []
        for value in (0, 1):
            try:
                proofs = build_proofs(
                    round_, value, self._store, self._coin.coin_map, self._n, self._t
                )
            except InsufficientStore:
                proofs = frozenset()
            self._sent_proofs[(round_, value)] = proofs
            aux = AuxMsg(instance=self._instance, round=round_, value=value)
            signed = SignedAux(aux=aux, signature=self._signer.sign(aux_payload(aux)))
            out.append(Outbound(message=AuxProofMsg(signed=signed, proofs=proofs)))
        if round_ >= 1:
            out.append(Outbound(message=make_share(self._signer, self._instance, round_)))
        return out


class GarbageBehavior(ByzantineBehavior):
    """Once per observed round: random bytes plus badly signed votes and shares."""

    def __init__(self, signer: ProcessSigner, instance: bytes, seed: int) -> None:
        self.index = signer.index
        self._instance = instance
        self._rng = random.Random(f"garbage:{seed}:{signer.index}")
        self._rounds: set[int] = set()

    def start(self, proposal: int) -> list[Outbound]:
        return self._spray(0)

    def step(self, origin: int, payload: bytes) -> list[Outbound]:
        try:
            round_ = _round_of(decode(payload))
        except ConsensusError:
            return []
        if round_ is None or round_ in self._rounds:
            return []
        return self._spray(round_)

    def _bad_signature(self) -> Signature:
        return Signature(signer=self.index, digest=self._rng.randbytes(32))

    def _spray(self, round_: int) -> list[Outbound]:
        self._rounds.add(round_)
        rng = self._rng
        aux = AuxMsg(instance=self._instance, round=round_, value=rng.getrandbits(1))
        out = [
            Outbound(message=rng.randbytes(rng.randint(1, 64))),
            Outbound(
                message=AuxProofMsg(
                    signed=SignedAux(aux=aux, signature=self._bad_signature())
                )
            ),
        ]
        if round_ >= 1:
            share = CoinShare(
                instance=self._instance, round=round_, signature=self._bad_signature()
            )
            out.append(Outbound(message=share))
        return out


class FlippingProcess(ConsensusProcess):
    """Honest state machine that votes for the negated estimate when provable."""

    def start(self, proposal: int):
        return super().start(negate(proposal))

    def _prepare_aux(self, r: int, est: int) -> AuxProofMsg:
        st = self.state
        if is_bin(est):
            flipped = negate(est)
            try:
                proofs = build_proofs(
                    r,
                    flipped,
                    st.store,
                    st.coin_map,
                    st.n,
                    st.t,
                    combined=st.mode.combine_messages,
                )
            except InsufficientStore:
                pass
            else:
                st.sent_proofs[(r, flipped)] = proofs
                wire = proofs if st.mode.include_proofs else frozenset()
                return AuxProofMsg(signed=self._sign_aux(r, flipped), proofs=wire)
        try:
            return super()._prepare_aux(r, est)
        except InsufficientStore:
            return AuxProofMsg(signed=self._sign_aux(r, est))


def build_behavior(
    spec: FaultSpec,
    signer: ProcessSigner,
    instance: bytes,
    seed: int,
    override: Optional[CoinOverride] = None,
    coin_horizon: int = 64,
) -> ByzantineBehavior:
    """Message-level behavior for faults that do not run the protocol."""
    if spec.kind is FaultKind.SILENT:
        return SilentBehavior(signer.index)
    if spec.kind is FaultKind.EQUIVOCATE:
        return EquivocatingBehavior(signer, instance, override, coin_horizon)
    if spec.kind is FaultKind.GARBAGE:
        return GarbageBehavior(signer, instance, seed)
    raise ConfigError(f"fault {spec.kind.value} is driven by a protocol process")


def byzantine_step(
    behavior: ByzantineBehavior, origin: int, payload: bytes
) -> list[Outbound]:
    """Let a faulty behavior react to one delivery; it never raises."""
    try:
        return behavior.step(origin, payload)
    except ConsensusError as err:
        _LOGGER.debug("Faulty p%d swallowed %r", behavior.index, err)
        return []

