"""
Validity engine.

`is_valid` decides whether a vote (r, est) is backed by enough prior signed
votes:

- round 0 is always valid
- round 1 needs t+1 distinct round-0 votes for est
- round r > 1 looks up prev_r, the latest round below r whose coin was the
  negation of est; with none it needs t+1 round-0 votes for est, otherwise
  n-t round-prev_r votes for est

A C_VAL vote for round p carries the estimate adopted from the coin of round
p-1; it counts toward value b iff coin_map[p-1] = b.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional

from ..const import C_VAL
from ..core.exceptions import InsufficientStore
from .messages import AuxProofMsg, SignedAux, is_bin
from .tally import AuxStore

CoinMap = Mapping[int, int]


class Validity(str, Enum):
    """Validation verdicts."""

    VALID = "valid"
    INVALID = "invalid"
    DEFERRED = "deferred"


@dataclass(frozen=True)
class ValidationOutcome:
    """Result of `is_valid`; `missing` lists coin rounds blocking a verdict."""

    status: Validity
    missing: frozenset[int] = frozenset()

    @property
    def is_valid(self) -> bool:
        return self.status is Validity.VALID

    @property
    def is_deferred(self) -> bool:
        return self.status is Validity.DEFERRED

    @classmethod
    def deferred(cls, missing: Iterable[int]) -> ValidationOutcome:
        return cls(Validity.DEFERRED, frozenset(missing))


VALID = ValidationOutcome(Validity.VALID)
INVALID = ValidationOutcome(Validity.INVALID)


def missing_coins(r: int, coin_map: CoinMap) -> frozenset[int]:
    """Coin rounds in 1..r-1 not yet revealed."""
    return frozenset(p for p in range(1, r) if p not in coin_map)


def resolve_value(round_: int, value: int, coin_map: CoinMap) -> Optional[int]:
    """Binary value a vote stands for, or None while its coin is unknown."""
    if is_bin(value):
        return value
    if value == C_VAL and round_ >= 2:
        return coin_map.get(round_ - 1)
    return None


def prev_r(r: int, est: int, coin_map: CoinMap) -> int:
    """Largest round p < r with coin_map[p] = not est, or 0."""
    if not is_bin(est):
        raise ValueError(f"prev_r needs a binary estimate, got {est!r}")
    missing = missing_coins(r, coin_map)
    if missing:
        raise ValueError(f"coin_map lacks rounds {sorted(missing)}")
    negated = 1 - est
    for p in range(r - 1, 0, -1):
        if coin_map[p] == negated:
            return p
    return 0


def support(
    proofs: Iterable[SignedAux], round_: int, value: int, coin_map: CoinMap
) -> dict[int, SignedAux]:
    """Signer -> canonically smallest vote counting toward (round, value)."""
    chosen: dict[int, SignedAux] = {}
    for vote in proofs:
        if vote.round != round_ or resolve_value(vote.round, vote.value, coin_map) != value:
            continue
        current = chosen.get(vote.signer)
        if current is None or vote.sort_key() < current.sort_key():
            chosen[vote.signer] = vote
    return chosen


def required_support(
    r: int, est: int, coin_map: CoinMap, n: int, t: int
) -> tuple[int, int]:
    """(round, distinct signers) a minimal proof set for (r, est) must hold."""
    if r == 1:
        return 0, t + 1
    p = prev_r(r, est, coin_map)
    if p == 0:
        return 0, t + 1
    return p, n - t


def is_valid(
    r: int,
    est: int,
    proofs: Iterable[SignedAux],
    coin_map: CoinMap,
    n: int,
    t: int,
) -> ValidationOutcome:
    """Evaluate the validity predicate for a vote (r, est)."""
    if r == 0:
        return VALID if is_bin(est) else INVALID

    if est == C_VAL:
        if r < 2:
            return INVALID
        missing = missing_coins(r, coin_map)
        if missing:
            return ValidationOutcome.deferred(missing)
        est = coin_map[r - 1]
    elif not is_bin(est):
        return INVALID

    proofs = tuple(proofs)
    if r == 1:
        return VALID if len(support(proofs, 0, est, coin_map)) >= t + 1 else INVALID

    missing = missing_coins(r, coin_map)
    if missing:
        return ValidationOutcome.deferred(missing)

    p = prev_r(r, est, coin_map)
    if p == 0 and len(support(proofs, 0, est, coin_map)) >= t + 1:
        return VALID
    if len(support(proofs, p, est, coin_map)) >= n - t:
        return VALID
    return INVALID


def minimize_proofs(
    r: int,
    est: int,
    proofs: Iterable[SignedAux],
    coin_map: CoinMap,
    n: int,
    t: int,
) -> frozenset[SignedAux]:
    """Smallest satisfying subset, lowest signer indices first."""
    if r == 0:
        return frozenset()
    if est == C_VAL:
        est = coin_map[r - 1]
    round_, count = required_support(r, est, coin_map, n, t)
    chosen = support(proofs, round_, est, coin_map)
    if len(chosen) < count:
        raise InsufficientStore(
            f"only {len(chosen)} of {count} votes for ({round_}, {est}) available"
        )
    return frozenset(chosen[signer] for signer in sorted(chosen)[:count])


def _minimal_from_store(
    r: int, est: int, store: AuxStore, coin_map: CoinMap, n: int, t: int
) -> frozenset[SignedAux]:
    missing = missing_coins(r, coin_map)
    if missing:
        raise InsufficientStore(f"coins for rounds {sorted(missing)} are unknown")
    round_, count = required_support(r, est, coin_map, n, t)
    votes = store.support(round_, est)
    if len(votes) < count:
        raise InsufficientStore(
            f"store holds {len(votes)} of {count} votes for ({round_}, {est})"
        )
    return frozenset(votes[:count])


def _assume_coin(coin_map: CoinMap, round_: int, bit: int) -> dict[int, int]:
    assumed = dict(coin_map)
    assumed[round_] = bit
    return assumed


def build_proofs(
    r: int,
    est: int,
    store: AuxStore,
    coin_map: CoinMap,
    n: int,
    t: int,
    combined: bool = False,
) -> frozenset[SignedAux]:
    """
    Minimal proof set for broadcasting (r, est) from the local store.

    In combined mode the coin of round r-1 may still be hidden when the vote
    leaves; the result then covers both possible coin values, one minimal set
    per outcome the store can prove.
    """
    if r == 0:
        return frozenset()
    if est == C_VAL and (r - 1) in coin_map:
        est = coin_map[r - 1]

    if combined and r >= 2 and (r - 1) not in coin_map:
        result: set[SignedAux] = set()
        proved = False
        for bit in (0, 1):
            value = bit if est == C_VAL else est
            try:
                result |= _minimal_from_store(
                    r, value, store, _assume_coin(coin_map, r - 1, bit), n, t
                )
                proved = True
            except InsufficientStore:
                continue
        if not proved:
            raise InsufficientStore(f"no coin outcome of round {r - 1} is provable")
        return frozenset(result)

    if est == C_VAL:
        raise InsufficientStore("C_VAL vote needs the previous coin or combined mode")
    return _minimal_from_store(r, est, store, coin_map, n, t)


def minimize_on_receive(
    msg: AuxProofMsg,
    coin_map: CoinMap,
    n: int,
    t: int,
    combined: bool = False,
    candidates: Optional[Iterable[SignedAux]] = None,
) -> frozenset[SignedAux]:
    """
    Votes to merge into the store for a validated message.

    Keeps the message's own vote plus a minimal satisfying subset of its
    proofs. In combined mode one minimal subset is kept per coin outcome of
    round r-1 the proofs satisfy.
    """
    pool = tuple(msg.proofs if candidates is None else candidates)
    r = msg.round
    kept: set[SignedAux] = {msg.signed}
    if r == 0:
        return frozenset(kept)

    if combined and r >= 2 and (r - 1) not in coin_map:
        for bit in (0, 1):
            assumed = _assume_coin(coin_map, r - 1, bit)
            value = bit if msg.value == C_VAL else msg.value
            if is_valid(r, value, pool, assumed, n, t).is_valid:
                kept |= minimize_proofs(r, value, pool, assumed, n, t)
        return frozenset(kept)

    kept |= minimize_proofs(r, msg.value, pool, coin_map, n, t)
    return frozenset(kept)
