"""Counting structures over received votes and coin shares."""

from __future__ import annotations

from typing import Iterable, Optional, Union

from .messages import CoinShare, SignedAux


class Tally:
    """
    Distinct-signer sets per (round, value) cell and per coin round.

    An equivocating signer may sit in both value cells of one round, but
    never twice in the same cell.
    """

    def __init__(self) -> None:
        self._cells: dict[tuple[int, int], set[int]] = {}
        self._coin: dict[int, set[int]] = {}

    def record(
        self, msg: Union[SignedAux, CoinShare], value: Optional[int] = None
    ) -> bool:
        """
        Add the message's signer to its cell.

        `value` overrides the vote's own value (used for resolved C_VAL votes).
        Returns True if the tally changed.
        """
        if isinstance(msg, CoinShare):
            signers = self._coin.setdefault(msg.round, set())
        else:
            key = (msg.round, msg.value if value is None else value)
            signers = self._cells.setdefault(key, set())

        if msg.signer in signers:
            return False
        signers.add(msg.signer)
        return True

    def cell(self, round_: int, value: int) -> frozenset[int]:
        return frozenset(self._cells.get((round_, value), ()))

    def round_union(self, round_: int) -> frozenset[int]:
        """Distinct signers over every value cell of one round."""
        union: set[int] = set()
        for (cell_round, _), signers in self._cells.items():
            if cell_round == round_:
                union |= signers
        return frozenset(union)

    def coin_signers(self, round_: int) -> frozenset[int]:
        return frozenset(self._coin.get(round_, ()))

    def cells(self) -> dict[tuple[int, int], frozenset[int]]:
        return {key: frozenset(v) for key, v in sorted(self._cells.items())}

    def max_round(self) -> int:
        return max((r for r, _ in self._cells), default=-1)


class AuxStore:
    """
    The aux_values store: validated votes indexed by (round, resolved value).

    C_VAL votes are stored under the binary value they resolved to. For each
    signer and cell the canonically smallest vote is kept, which keeps proof
    selection independent of arrival order.
    """

    def __init__(self) -> None:
        self.tally = Tally()
        self._votes: dict[tuple[int, int], dict[int, SignedAux]] = {}
        self._known: set[SignedAux] = set()
        self.version = 0

    def __len__(self) -> int:
        return len(self._known)

    def __contains__(self, signed: object) -> bool:
        return signed in self._known

    def add(self, signed: SignedAux, resolved: int) -> bool:
        """Store one vote under its resolved value. Returns True if new."""
        if signed in self._known:
            return False
        self._known.add(signed)
        by_signer = self._votes.setdefault((signed.round, resolved), {})
        current = by_signer.get(signed.signer)
        if current is None or signed.sort_key() < current.sort_key():
            by_signer[signed.signer] = signed
        self.tally.record(signed, resolved)
        self.version += 1
        return True

    def add_all(self, items: Iterable[tuple[SignedAux, int]]) -> int:
        added = 0
        for signed, resolved in sorted(items, key=lambda item: item[0].sort_key()):
            added += int(self.add(signed, resolved))
        return added

    def support(self, round_: int, value: int) -> list[SignedAux]:
        """One vote per signer for the cell, ordered by signer index."""
        by_signer = self._votes.get((round_, value), {})
        return [by_signer[signer] for signer in sorted(by_signer)]
