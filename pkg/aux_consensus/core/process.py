"""
Event-driven consensus process.

The blocking round loop (wait for n-t AUX votes, flip the coin, decide or
continue) is expressed as phase guards that are re-checked after every
delivered message. Each transition runs atomically and returns a
`ProtocolOutput` describing the messages to send and any decision.

Modes:
- base: AUX(r) and COIN(r) are separate broadcasts
- combined: COIN(r) travels with AUX(r+1), which may carry C_VAL
- proofs-on-request: AUX votes travel without proofs; receivers validate from
  their own store and ask the signer when that is not enough
"""

from __future__ import annotations

import logging
from typing import Callable, Optional

from ..const import C_VAL, DEFAULT_COIN_HORIZON, PROOF_CAP_FACTOR
from ..crypto.provider import ProcessSigner
from ..protocol.codec import aux_payload, coin_payload, decode, encode_vote
from ..protocol.coin import CoinOverride, CoinState, make_share, verify_share
from ..protocol.messages import (
    AuxMsg,
    AuxProofMsg,
    CoinShare,
    CombinedMsg,
    DecisionProof,
    ProofRequest,
    ProofResponse,
    ProtocolMessage,
    SignedAux,
    is_bin,
    sorted_signed,
)
from ..protocol.tally import AuxStore
from ..protocol.validity import (
    Validity,
    build_proofs,
    is_valid,
    minimize_on_receive,
    missing_coins,
    prev_r,
    resolve_value,
)
from .exceptions import MalformedMessage, ProtocolStateError
from .state import (
    Decision,
    PendingAux,
    Phase,
    ProcessState,
    ProtocolMode,
    ProtocolOutput,
)

_LOGGER = logging.getLogger(__name__)

# observer(kind, peer, payload) - lets the simulator trace internal events
Observer = Callable[[str, int, bytes], None]


class ConsensusProcess:
    """
    One honest participant in a binary consensus instance.

    Responsibilities:
    - admit or drop inbound messages (signatures, instance tag, mode)
    - validate votes, deferring those whose coins are still unknown
    - advance rounds when the AUX and coin thresholds are met
    - decide, then stop lazily or eagerly with a DecisionProof
    """

    def __init__(
        self,
        signer: ProcessSigner,
        instance: bytes,
        mode: Optional[ProtocolMode] = None,
        override: Optional[CoinOverride] = None,
        coin_horizon: int = DEFAULT_COIN_HORIZON,
        observer: Optional[Observer] = None,
    ) -> None:
        keyring = signer.keyring
        self._signer = signer
        self._observer = observer
        self.state = ProcessState(
            index=signer.index,
            n=keyring.n,
            t=keyring.t,
            instance=instance,
            mode=mode or ProtocolMode(),
            store=AuxStore(),
            coin=CoinState(signer, instance, override=override, horizon=coin_horizon),
        )

    # ------------------------------------------------------------------
    # Read-only views
    # ------------------------------------------------------------------

    @property
    def index(self) -> int:
        return self.state.index

    @property
    def phase(self) -> Phase:
        return self.state.phase

    @property
    def decision(self) -> Optional[Decision]:
        return self.state.decision

    @property
    def mode(self) -> ProtocolMode:
        return self.state.mode

    def digest(self) -> str:
        return self.state.digest()

    # ------------------------------------------------------------------
    # Entry points
    # ------------------------------------------------------------------

    def start(self, proposal: int) -> ProtocolOutput:
        """Broadcast the round-0 proposal."""
        st = self.state
        if st.phase is not Phase.UNSET:
            raise ProtocolStateError(f"process {st.index} already started")
        if not is_bin(proposal):
            raise ValueError(f"proposal must be 0 or 1, got {proposal!r}")

        st.proposal = proposal
        st.est = proposal
        st.round = 0
        st.phase = Phase.AWAIT_ROUND0
        st.phase_round = 0
        st.sent_proofs[(0, proposal)] = frozenset()

        out = ProtocolOutput()
        out.broadcast(AuxProofMsg(signed=self._sign_aux(0, proposal)))
        _LOGGER.debug("p%d proposes %d", st.index, proposal)
        return out

    def receive(self, origin: int, data: bytes) -> ProtocolOutput:
        """Decode wire bytes and handle them; malformed input is dropped."""
        if self.state.phase is Phase.STOPPED:
            return ProtocolOutput()
        try:
            message = decode(data)
        except MalformedMessage:
            self._drop("malformed", origin)
            return ProtocolOutput()
        return self.handle(origin, message)

    def handle(self, origin: int, message: ProtocolMessage) -> ProtocolOutput:
        """Dispatch a decoded message delivered from `origin`."""
        if isinstance(message, CombinedMsg):
            return self.on_combined(message, origin)
        if isinstance(message, AuxProofMsg):
            return self.on_aux(message, origin)
        if isinstance(message, CoinShare):
            return self.on_coin_share(message, origin)
        if isinstance(message, DecisionProof):
            return self.on_decision_proof(message, origin)
        if isinstance(message, ProofRequest):
            return self.on_proof_request(message, origin)
        if isinstance(message, ProofResponse):
            return self.on_proof_response(message, origin)
        self._drop("unknown", origin)
        return ProtocolOutput()

    def on_aux(self, msg: AuxProofMsg, origin: Optional[int] = None) -> ProtocolOutput:
        """Receive an AUX vote with its proofs."""
        st = self.state
        out = ProtocolOutput()
        if st.phase is Phase.STOPPED:
            return out
        if not self._admit_aux(msg, origin):
            return out
        if st.phase is Phase.DECIDED:
            return self._lazy_trigger_aux(msg, origin)
        if msg.signed in st.store or msg.signed in st.deferred:
            return out

        item = st.pending_support.pop(msg.signed, None)
        if item is not None:
            item.extra = frozenset(item.extra | msg.proofs)
        else:
            item = PendingAux(msg=msg, origin=origin)
        self._validate(item, out)
        self._drain_pending(out)
        self._evaluate_guards(out)
        return out

    def on_coin_share(
        self, share: CoinShare, origin: Optional[int] = None
    ) -> ProtocolOutput:
        """Receive a coin share; may reveal a coin and finish a round."""
        st = self.state
        out = ProtocolOutput()
        if st.phase is Phase.STOPPED:
            return out
        if not (
            st.instance == share.instance
            and self._signer.keyring.has_signer(share.signer)
            and verify_share(self._signer, share, st.instance)
        ):
            self._drop("bad_coin_share", origin)
            return out

        if st.phase is Phase.DECIDED:
            if (
                share.signer != st.index
                and st.decision is not None
                and share.round > st.decision.round
            ):
                return self._fire_decision_proof()
            return out

        bit = st.coin.add_share(share, current_round=st.round)
        if bit is not None:
            self._emit("coin", share.signer, encode_vote(share.round, bit))
            _LOGGER.debug("p%d revealed coin %d = %d", st.index, share.round, bit)
        self._drain_pending(out)
        self._evaluate_guards(out)
        return out

    def on_combined(
        self, bundle: CombinedMsg, origin: Optional[int] = None
    ) -> ProtocolOutput:
        """COIN(r) share first, then the AUX(r+1) vote."""
        if not self.state.mode.combine_messages:
            self._drop("mode_mismatch", origin)
            return ProtocolOutput()
        out = self.on_coin_share(bundle.share, origin)
        return out.extend(self.on_aux(bundle.aux, origin))

    def advance_round(self) -> ProtocolOutput:
        """Enter the next round and broadcast the AUX vote for it."""
        st = self.state
        if st.est not in (0, 1):
            raise ProtocolStateError(
                f"process {st.index} cannot broadcast estimate {st.est!r} in base mode"
            )
        out = ProtocolOutput()
        st.round += 1
        st.participation_round = st.round
        out.broadcast(self._prepare_aux(st.round, st.est))
        st.stats.round_broadcasts += 1
        st.phase = Phase.AWAIT_AUX
        st.phase_round = st.round
        return out

    def on_decide(self) -> ProtocolOutput:
        """Stopping rule after an own decision."""
        st = self.state
        if st.decision is None or st.decision_proof is None:
            raise ProtocolStateError(f"process {st.index} has not decided")
        if not st.mode.lazy_stop:
            return self._fire_decision_proof()
        st.phase = Phase.DECIDED
        return ProtocolOutput()

    def on_decision_proof(
        self, proof: DecisionProof, origin: Optional[int] = None
    ) -> ProtocolOutput:
        """Adopt a verified decision and stop."""
        st = self.state
        out = ProtocolOutput()
        if st.phase in (Phase.DECIDED, Phase.STOPPED):
            return out
        if not self._verify_decision_proof(proof):
            self._drop("bad_decision_proof", origin)
            return out

        if st.mode.combine_messages:
            reported = max(1, st.round - 1)
        else:
            reported = max(1, st.round)
        st.decision = Decision(
            value=proof.value,
            round=reported,
            basis_round=proof.round,
            adopted=True,
        )
        st.decision_proof = proof
        st.phase = Phase.STOPPED
        out.decision = st.decision
        out.stopped = True
        self._emit("decide", st.index, encode_vote(proof.round, proof.value))
        self._emit("stop", st.index, b"")
        _LOGGER.debug(
            "p%d adopted decision %d from round %d", st.index, proof.value, proof.round
        )
        return out

    def on_proof_request(
        self, request: ProofRequest, origin: Optional[int] = None
    ) -> ProtocolOutput:
        """Answer with the proofs this process attached to its own vote."""
        st = self.state
        out = ProtocolOutput()
        if st.mode.include_proofs:
            self._drop("mode_mismatch", origin)
            return out
        if st.phase is Phase.STOPPED:
            return out
        if (
            request.instance != st.instance
            or request.requester == st.index
            or not self._signer.keyring.has_signer(request.requester)
        ):
            self._drop("bad_proof_request", origin)
            return out

        proofs = st.sent_proofs.get((request.round, request.value))
        if proofs is None:
            st.stats.requests_ignored += 1
            return out

        out.send(
            request.requester,
            ProofResponse(
                instance=st.instance,
                round=request.round,
                value=request.value,
                responder=st.index,
                proofs=proofs,
            ),
        )
        st.stats.proof_responses_sent += 1
        return out

    def on_proof_response(
        self, response: ProofResponse, origin: Optional[int] = None
    ) -> ProtocolOutput:
        """Merge requested proofs into the pending vote they belong to."""
        st = self.state
        out = ProtocolOutput()
        if st.mode.include_proofs:
            self._drop("mode_mismatch", origin)
            return out
        if st.phase in (Phase.DECIDED, Phase.STOPPED):
            return out
        if response.instance != st.instance or not self._proofs_ok(
            response.proofs, response.round
        ):
            self._drop("bad_proof_response", origin)
            return out

        key = next(
            (
                signed
                for signed in st.pending_support
                if signed.signer == response.responder
                and signed.round == response.round
                and signed.value == response.value
            ),
            None,
        )
        if key is None:
            return out

        item = st.pending_support.pop(key)
        item.extra = frozenset(item.extra | response.proofs)
        self._validate(item, out)
        if item.msg.signed in st.store:
            st.stats.requests_resolved += 1
        else:
            st.stats.responses_unresolved += 1
        self._drain_pending(out)
        self._evaluate_guards(out)
        return out

    def quiesce(self) -> ProtocolOutput:
        """Network drained: an armed lazy decider simply stops."""
        st = self.state
        if st.phase is Phase.DECIDED:
            st.phase = Phase.STOPPED
            self._emit("stop", st.index, b"")
            return ProtocolOutput(stopped=True)
        return ProtocolOutput()

    # ------------------------------------------------------------------
    # Admission and validation
    # ------------------------------------------------------------------

    def _admit_aux(self, msg: AuxProofMsg, origin: Optional[int]) -> bool:
        st = self.state
        keyring = self._signer.keyring
        value = msg.value
        if msg.instance != st.instance:
            self._drop("foreign_instance", origin)
            return False
        if msg.round == 0 and not is_bin(value):
            self._drop("illegal_value", origin)
            return False
        if value == C_VAL and (not st.mode.combine_messages or msg.round < 2):
            self._drop("illegal_value", origin)
            return False
        if not (is_bin(value) or value == C_VAL):
            self._drop("illegal_value", origin)
            return False
        if len(msg.proofs) > PROOF_CAP_FACTOR * st.n:
            self._drop("proof_cap", origin)
            return False
        if not keyring.has_signer(msg.signer) or not self._signer.verify(
            msg.signed.signature, msg.signer, aux_payload(msg.signed.aux)
        ):
            self._drop("bad_signature", origin)
            return False
        if not self._proofs_ok(msg.proofs, msg.round):
            self._drop("bad_proof", origin)
            return False
        return True

    def _proofs_ok(self, proofs, round_: int) -> bool:
        st = self.state
        if len(proofs) > PROOF_CAP_FACTOR * st.n:
            return False
        for vote in proofs:
            if (
                vote.aux.instance != st.instance
                or vote.round >= round_
                or not self._signer.keyring.has_signer(vote.signer)
                or not self._signer.verify(
                    vote.signature, vote.signer, aux_payload(vote.aux)
                )
            ):
                return False
        return True

    def _local_support(self, round_: int, value: int) -> frozenset[SignedAux]:
        """Votes from the own store that could back (round, value)."""
        st = self.state
        resolved = resolve_value(round_, value, st.coin_map)
        if resolved is None or missing_coins(round_, st.coin_map):
            return frozenset()
        rounds = {0}
        if round_ > 1:
            rounds.add(prev_r(round_, resolved, st.coin_map))
        return frozenset(
            vote for r in sorted(rounds) for vote in st.store.support(r, resolved)
        )

    def _validate(self, item: PendingAux, out: ProtocolOutput) -> Validity:
        st = self.state
        msg = item.msg
        candidates = frozenset(msg.proofs | item.extra)
        if not st.mode.include_proofs:
            candidates = candidates | self._local_support(msg.round, msg.value)

        outcome = is_valid(msg.round, msg.value, candidates, st.coin_map, st.n, st.t)

        if outcome.status is Validity.VALID:
            self._accept(msg, candidates)
            return outcome.status

        if outcome.status is Validity.DEFERRED:
            item.missing = outcome.missing
            if not item.counted_deferred:
                item.counted_deferred = True
                st.stats.deferred += 1
                self._emit("defer", msg.signer, encode_vote(msg.round, msg.value))
            st.deferred[msg.signed] = item
            return outcome.status

        if st.mode.include_proofs:
            self._drop("invalid", item.origin)
            return outcome.status

        # Proofs-on-request: keep the vote and ask its signer for support.
        item.checked_at = st.store.version
        st.pending_support[msg.signed] = item
        if not item.requested and msg.signer != st.index:
            item.requested = True
            out.send(
                msg.signer,
                ProofRequest(
                    instance=st.instance,
                    round=msg.round,
                    value=msg.value,
                    requester=st.index,
                ),
            )
            st.stats.proof_requests_sent += 1
        return outcome.status

    def _accept(self, msg: AuxProofMsg, candidates: frozenset[SignedAux]) -> None:
        st = self.state
        kept = minimize_on_receive(
            msg,
            st.coin_map,
            st.n,
            st.t,
            combined=st.mode.combine_messages,
            candidates=candidates,
        )
        for vote in sorted_signed(kept):
            resolved = resolve_value(vote.round, vote.value, st.coin_map)
            if resolved is not None:
                st.store.add(vote, resolved)
        st.stats.accepted += 1
        resolved = resolve_value(msg.round, msg.value, st.coin_map)
        self._emit("valid", msg.signer, encode_vote(msg.round, resolved))

    def _drain_pending(self, out: ProtocolOutput) -> None:
        """Re-run buffered votes until neither coins nor the store change."""
        st = self.state
        while True:
            version = st.store.version
            ready = [
                item
                for item in st.deferred.values()
                if item.missing.issubset(st.coin_map)
            ]
            for item in ready:
                del st.deferred[item.msg.signed]
                self._validate(item, out)

            if not st.mode.include_proofs:
                stale = [
                    item
                    for item in st.pending_support.values()
                    if item.checked_at < st.store.version
                ]
                for item in stale:
                    del st.pending_support[item.msg.signed]
                    self._validate(item, out)

            if st.store.version == version:
                return

    # ------------------------------------------------------------------
    # Round progression
    # ------------------------------------------------------------------

    def _evaluate_guards(self, out: ProtocolOutput) -> None:
        st = self.state
        tally = st.store.tally
        while True:
            if st.phase is Phase.AWAIT_ROUND0:
                if len(tally.round_union(0)) < st.quorum:
                    return
                zeros = len(tally.cell(0, 0))
                st.est = 0 if zeros >= st.t + 1 else 1
                out.extend(self.advance_round())
                continue

            if st.phase is Phase.AWAIT_AUX:
                r = st.round
                if len(tally.round_union(r)) < st.quorum:
                    return
                winners = [b for b in (0, 1) if len(tally.cell(r, b)) >= st.quorum]
                st.est = winners[0] if winners else C_VAL
                self._enter_coin_phase(out)
                continue

            if st.phase is Phase.AWAIT_COIN:
                bit = st.coin_map.get(st.phase_round)
                if bit is None:
                    return
                self._finish_round(st.phase_round, bit, out)
                continue

            return

    def _enter_coin_phase(self, out: ProtocolOutput) -> None:
        st = self.state
        r = st.round
        share = make_share(self._signer, st.instance, r)
        if st.mode.combine_messages:
            st.round = r + 1
            st.participation_round = st.round
            out.broadcast(CombinedMsg(share=share, aux=self._prepare_aux(r + 1, st.est)))
        else:
            out.broadcast(share)
        st.stats.round_broadcasts += 1
        st.phase = Phase.AWAIT_COIN
        st.phase_round = r

    def _finish_round(self, r: int, bit: int, out: ProtocolOutput) -> None:
        st = self.state
        if st.decision is None and len(st.store.tally.cell(r, bit)) >= st.quorum:
            self._decide(r, bit, out)
            return

        if st.est == C_VAL:
            st.est = bit
        self._drain_pending(out)

        if st.mode.combine_messages:
            st.phase = Phase.AWAIT_AUX
            st.phase_round = st.round
        else:
            out.extend(self.advance_round())

    def _prepare_aux(self, r: int, est: int) -> AuxProofMsg:
        st = self.state
        proofs = build_proofs(
            r,
            est,
            st.store,
            st.coin_map,
            st.n,
            st.t,
            combined=st.mode.combine_messages,
        )
        st.sent_proofs[(r, est)] = proofs
        wire = proofs if st.mode.include_proofs else frozenset()
        return AuxProofMsg(signed=self._sign_aux(r, est), proofs=wire)

    def _decide(self, r: int, bit: int, out: ProtocolOutput) -> None:
        st = self.state
        votes = st.store.support(r, bit)[: st.quorum]
        prior = None
        if any(vote.value == C_VAL for vote in votes):
            prior = st.coin.aggregates.get(r - 1)
        st.decision_proof = DecisionProof(
            instance=st.instance,
            round=r,
            value=bit,
            aux_set=frozenset(votes),
            coin=st.coin.aggregates[r],
            prior_coin=prior,
        )
        st.decision = Decision(value=bit, round=r, basis_round=r)
        out.decision = st.decision
        self._emit("decide", st.index, encode_vote(r, bit))
        _LOGGER.debug("p%d decided %d in round %d", st.index, bit, r)
        out.extend(self.on_decide())

    # ------------------------------------------------------------------
    # Stopping
    # ------------------------------------------------------------------

    def _lazy_trigger_aux(
        self, msg: AuxProofMsg, origin: Optional[int]
    ) -> ProtocolOutput:
        st = self.state
        sender = msg.signer if origin is None else origin
        if sender == st.index or msg.signer == st.index:
            return ProtocolOutput()
        if msg.round <= st.participation_round:
            return ProtocolOutput()
        candidates = frozenset(msg.proofs) | self._local_support(msg.round, msg.value)
        outcome = is_valid(msg.round, msg.value, candidates, st.coin_map, st.n, st.t)
        if outcome.status is Validity.INVALID and st.mode.include_proofs:
            return ProtocolOutput()
        return self._fire_decision_proof()

    def _fire_decision_proof(self) -> ProtocolOutput:
        st = self.state
        out = ProtocolOutput(stopped=True)
        out.broadcast(st.decision_proof)
        st.stats.decision_proofs_sent += 1
        st.phase = Phase.STOPPED
        self._emit("stop", st.index, b"")
        return out

    def _verify_decision_proof(self, proof: DecisionProof) -> bool:
        st = self.state
        if proof.instance != st.instance or not is_bin(proof.value) or proof.round < 1:
            return False
        if not self._signer.verify_threshold(
            proof.coin, coin_payload(st.instance, proof.round)
        ):
            return False
        if st.coin.bit_for(proof.round, proof.coin) != proof.value:
            return False

        prior_bit = None
        if proof.prior_coin is not None:
            if proof.round < 2 or not self._signer.verify_threshold(
                proof.prior_coin, coin_payload(st.instance, proof.round - 1)
            ):
                return False
            prior_bit = st.coin.bit_for(proof.round - 1, proof.prior_coin)

        signers: set[int] = set()
        for vote in proof.aux_set:
            if vote.aux.instance != st.instance or vote.round != proof.round:
                continue
            if not self._signer.verify(vote.signature, vote.signer, aux_payload(vote.aux)):
                continue
            value = prior_bit if vote.value == C_VAL else vote.value
            if value == proof.value:
                signers.add(vote.signer)
        return len(signers) >= st.quorum

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def _sign_aux(self, r: int, value: int) -> SignedAux:
        aux = AuxMsg(instance=self.state.instance, round=r, value=value)
        return SignedAux(aux=aux, signature=self._signer.sign(aux_payload(aux)))

    def _drop(self, reason: str, origin: Optional[int]) -> None:
        self.state.stats.drop(reason)
        self._emit("drop", -1 if origin is None else origin, reason.encode("ascii"))
        _LOGGER.debug("p%d dropped message from %s: %s", self.index, origin, reason)

    def _emit(self, kind: str, peer: int, payload: bytes) -> None:
        if self._observer is not None:
            self._observer(kind, peer, payload)
