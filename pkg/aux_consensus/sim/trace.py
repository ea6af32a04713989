"""
Replayable execution traces.

File format: the first line is a JSON object (the instance header: config,
mode and seeds); every further line is one JSON array

    [step, kind, process, peer, payload_hex, digest]

`digest` is the process state digest after a `start` or `deliver` record and
empty otherwise.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Union

from ..core.exceptions import MalformedMessage

_LOGGER = logging.getLogger(__name__)

# Record kinds
START = "start"
SEND = "send"
DELIVER = "deliver"
DROP = "drop"
DISCARD = "discard"
FLUSH = "flush"
DEFER = "defer"
VALID = "valid"
DECIDE = "decide"
STOP = "stop"
COIN = "coin"
CRASH = "crash"

RECORD_KINDS = frozenset(
    {
        START,
        SEND,
        DELIVER,
        DROP,
        DISCARD,
        FLUSH,
        DEFER,
        VALID,
        DECIDE,
        STOP,
        COIN,
        CRASH,
    }
)


@dataclass(frozen=True)
class TraceRecord:
    step: int
    kind: str
    process: int
    peer: int
    payload: bytes = b""
    digest: str = ""

    def to_line(self) -> str:
        return json.dumps(
            [
                self.step,
                self.kind,
                self.process,
                self.peer,
                self.payload.hex(),
                self.digest,
            ],
            separators=(",", ":"),
        )

    @classmethod
    def from_line(cls, line: str) -> TraceRecord:
        try:
            step, kind, process, peer, payload_hex, digest = json.loads(line)
            return cls(
                step=int(step),
                kind=str(kind),
                process=int(process),
                peer=int(peer),
                payload=bytes.fromhex(payload_hex),
                digest=str(digest),
            )
        except (TypeError, ValueError) as err:
            raise MalformedMessage(f"bad trace record {line[:80]!r}: {err}") from err


@dataclass
class Trace:
    """Header plus ordered records of one instance."""

    header: dict[str, Any]
    records: list[TraceRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def append(
        self,
        step: int,
        kind: str,
        process: int,
        peer: int,
        payload: bytes = b"",
        digest: str = "",
    ) -> None:
        self.records.append(TraceRecord(step, kind, process, peer, payload, digest))

    def of_kind(self, *kinds: str) -> Iterable[TraceRecord]:
        wanted = set(kinds)
        return (record for record in self.records if record.kind in wanted)

    def to_text(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True, separators=(",", ":"))]
        lines.extend(record.to_line() for record in self.records)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Trace:
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise MalformedMessage("empty trace")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as err:
            raise MalformedMessage(f"bad trace header: {err}") from err
        if not isinstance(header, dict):
            raise MalformedMessage("trace header must be a JSON object")
        return cls(header=header, records=[TraceRecord.from_line(l) for l in lines[1:]])

    def write(self, path: Union[str, Path]) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.to_text(), encoding="utf-8")
        _LOGGER.debug("Trace with %d records written to %s", len(self), target)
        return target

    @classmethod
    def read(cls, path: Union[str, Path]) -> Trace:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))
