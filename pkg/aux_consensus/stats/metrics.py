"""
Dataclasses for experiment statistics.
Defines per-instance rows, per-(n, mode) aggregates and the paired-mode diff.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Sequence

from ..sim.simulator import InstanceResult


@dataclass
class InstanceRow:
    """Metrics for a single measured instance."""

    n: int
    t: int
    index: int
    mode: str
    proposals: str

    # Outcome
    decided_value: Optional[int] = None
    decision_round: int = 0
    participation_round: int = 0
    terminated: bool = False
    stalled: bool = False

    # Traffic (honest senders, network sends only)
    messages_sent: int = 0
    bytes_sent: int = 0
    steps: int = 0
    broadcasts_per_round: float = 0.0

    # Protocol counters summed over honest processes
    decision_proofs_sent: int = 0
    proof_requests_sent: int = 0
    proof_responses_sent: int = 0
    requests_resolved: int = 0
    responses_unresolved: int = 0
    dropped: int = 0
    deferred: int = 0

    # Property checks
    violations: List[str] = field(default_factory=list)

    @classmethod
    def from_result(
        cls, result: InstanceResult, violations: Sequence[str] = ()
    ) -> InstanceRow:
        config = result.config
        return cls(
            n=config.n,
            t=config.t,
            index=config.index,
            mode=config.mode.label,
            proposals="".join(str(p) for p in config.proposals),
            decided_value=result.decided_value,
            decision_round=result.decision_round,
            participation_round=result.participation_round,
            terminated=result.terminated,
            stalled=result.stalled,
            messages_sent=result.messages_sent,
            bytes_sent=result.bytes_sent,
            steps=result.steps,
            broadcasts_per_round=round(result.broadcasts_per_round, 4),
            decision_proofs_sent=result.counter("decision_proofs_sent"),
            proof_requests_sent=result.counter("proof_requests_sent"),
            proof_responses_sent=result.counter("proof_responses_sent"),
            requests_resolved=result.counter("requests_resolved"),
            responses_unresolved=result.counter("responses_unresolved"),
            dropped=result.dropped(),
            deferred=result.counter("deferred"),
            violations=list(violations),
        )

    @property
    def green(self) -> bool:
        return not self.violations and self.terminated

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> InstanceRow:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def csv_fields(cls) -> List[str]:
        return [f.name for f in fields(cls)]


@dataclass
class Spread:
    """min / avg / max of one measurement."""

    min: float = 0.0
    avg: float = 0.0
    max: float = 0.0

    @classmethod
    def of(cls, values: Sequence[float]) -> Spread:
        if not values:
            return cls()
        return cls(
            min=min(values),
            avg=round(sum(values) / len(values), 6),
            max=max(values),
        )


@dataclass
class ModeSummary:
    """Aggregated statistics for one (n, mode) grid point."""

    n: int
    t: int
    mode: str
    instances: int = 0

    decision_round: Spread = field(default_factory=Spread)
    participation_round: Spread = field(default_factory=Spread)
    steps: Spread = field(default_factory=Spread)

    total_messages: int = 0
    avg_messages: float = 0.0
    total_bytes: int = 0
    avg_bytes: float = 0.0
    avg_broadcasts_per_round: float = 0.0

    decision_proofs_sent: int = 0
    proof_requests_sent: int = 0
    requests_resolved: int = 0
    dropped: int = 0
    deferred: int = 0

    stalled: int = 0
    violations: int = 0

    @classmethod
    def from_rows(cls, rows: Sequence[InstanceRow]) -> ModeSummary:
        if not rows:
            raise ValueError("cannot summarize an empty set of rows")
        first = rows[0]
        count = len(rows)
        total_messages = sum(r.messages_sent for r in rows)
        total_bytes = sum(r.bytes_sent for r in rows)
        return cls(
            n=first.n,
            t=first.t,
            mode=first.mode,
            instances=count,
            decision_round=Spread.of([r.decision_round for r in rows]),
            participation_round=Spread.of([r.participation_round for r in rows]),
            steps=Spread.of([r.steps for r in rows]),
            total_messages=total_messages,
            avg_messages=round(total_messages / count, 6),
            total_bytes=total_bytes,
            avg_bytes=round(total_bytes / count, 6),
            avg_broadcasts_per_round=round(
                sum(r.broadcasts_per_round for r in rows) / count, 6
            ),
            decision_proofs_sent=sum(r.decision_proofs_sent for r in rows),
            proof_requests_sent=sum(r.proof_requests_sent for r in rows),
            requests_resolved=sum(r.requests_resolved for r in rows),
            dropped=sum(r.dropped for r in rows),
            deferred=sum(r.deferred for r in rows),
            stalled=sum(1 for r in rows if r.stalled),
            violations=sum(len(r.violations) for r in rows),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Report:
    """
    Result of one experiment: the config, every measured row and the
    per-(n, mode) summaries recomputed from those rows.
    """

    config: Dict[str, Any]
    rows: List[InstanceRow] = field(default_factory=list)
    summaries: List[ModeSummary] = field(default_factory=list)

    @classmethod
    def from_rows(cls, config: Dict[str, Any], rows: Sequence[InstanceRow]) -> Report:
        ordered = sorted(rows, key=lambda r: (r.n, r.mode, r.index))
        groups: Dict[tuple, List[InstanceRow]] = {}
        for row in ordered:
            groups.setdefault((row.n, row.mode), []).append(row)
        summaries = [ModeSummary.from_rows(group) for group in groups.values()]
        return cls(config=dict(config), rows=list(ordered), summaries=summaries)

    @property
    def violations(self) -> List[str]:
        return [
            f"n={row.n} {row.mode} #{row.index}: {violation}"
            for row in self.rows
            for violation in row.violations
        ]

    @property
    def green(self) -> bool:
        """True iff no instance violated a property or failed to terminate."""
        return bool(self.rows) and all(row.green for row in self.rows)

    def summary_for(self, n: int, mode: Optional[str] = None) -> ModeSummary:
        for summary in self.summaries:
            if summary.n == n and (mode is None or summary.mode == mode):
                return summary
        raise KeyError(f"no summary for n={n} mode={mode}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "green": self.green,
            "summaries": [s.to_dict() for s in self.summaries],
            "rows": [r.to_dict() for r in self.rows],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Report:
        rows = [InstanceRow.from_dict(item) for item in data.get("rows", [])]
        return cls.from_rows(data.get("config", {}), rows)


@dataclass
class ModeDiff:
    """Paired base/combined runs over identical seeds and coins."""

    base: Report
    combined: Report
    mismatches: List[tuple] = field(default_factory=list)

    @property
    def pairs(self) -> int:
        return len(self.base.rows)

    @property
    def value_matches(self) -> int:
        return self.pairs - len(self.mismatches)

    @property
    def green(self) -> bool:
        return not self.mismatches and self.base.green and self.combined.green

    def deltas(self) -> List[Dict[str, Any]]:
        """Per-n averages of both modes and their difference (combined - base)."""
        out = []
        for base in self.base.summaries:
            combined = self.combined.summary_for(base.n)
            out.append(
                {
                    "n": base.n,
                    "base_mode": base.mode,
                    "combined_mode": combined.mode,
                    "decision_round_base": base.decision_round.avg,
                    "decision_round_combined": combined.decision_round.avg,
                    "decision_round_delta": round(
                        combined.decision_round.avg - base.decision_round.avg, 6
                    ),
                    "participation_round_delta": round(
                        combined.participation_round.avg
                        - base.participation_round.avg,
                        6,
                    ),
                    "avg_messages_delta": round(
                        combined.avg_messages - base.avg_messages, 6
                    ),
                    "broadcasts_per_round_base": base.avg_broadcasts_per_round,
                    "broadcasts_per_round_combined": combined.avg_broadcasts_per_round,
                }
            )
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pairs": self.pairs,
            "value_matches": self.value_matches,
            "mismatches": [list(m) for m in self.mismatches],
            "green": self.green,
            "deltas": self.deltas(),
            "base": self.base.to_dict(),
            "combined": self.combined.to_dict(),
        }
