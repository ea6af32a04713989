"""
Report formatting and persistence.

Formats:
    json   full report (config, summaries, rows); stable key order
    csv    one row per measured instance
    text   human-readable summary per (n, mode)

Emitting the same report twice yields identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from ..const import FORMAT_CSV, FORMAT_JSON, FORMAT_TEXT, OUTPUT_FORMATS
from ..core.exceptions import ConfigError
from .metrics import InstanceRow, ModeDiff, ModeSummary, Report

_LOGGER = logging.getLogger(__name__)

_RULE = "=" * 80
_THIN = "-" * 80
_VIOLATION_SEP = " | "


class ReportAnalyzer:
    """Formats, writes and loads experiment reports."""

    def format_output(self, report: Report, format: str = FORMAT_TEXT) -> str:
        """Format a report."""
        if format == FORMAT_JSON:
            return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"
        if format == FORMAT_CSV:
            return self._format_csv(report.rows)
        if format == FORMAT_TEXT:
            return self._format_text(report)
        raise ConfigError(f"format must be one of {OUTPUT_FORMATS}, got {format!r}")

    def format_diff(self, diff: ModeDiff, format: str = FORMAT_TEXT) -> str:
        """Format a paired-mode comparison."""
        if format == FORMAT_JSON:
            return json.dumps(diff.to_dict(), indent=2, ensure_ascii=False) + "\n"
        if format == FORMAT_CSV:
            return self._format_csv(diff.base.rows + diff.combined.rows)
        if format == FORMAT_TEXT:
            return self._format_diff_text(diff)
        raise ConfigError(f"format must be one of {OUTPUT_FORMATS}, got {format!r}")

    def report_emit(
        self,
        report: Union[Report, ModeDiff],
        format: str = FORMAT_JSON,
        path: Optional[Union[str, Path]] = None,
    ) -> str:
        """
        Render a report and write it to `path` when given.

        Returns the rendered text.

        Raises:
            ConfigError: unknown format
            OSError: the file cannot be written
        """
        if isinstance(report, ModeDiff):
            output = self.format_diff(report, format)
        else:
            output = self.format_output(report, format)

        if path is not None:
            target = Path(path)
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, "w", encoding="utf-8", newline="") as f:
                f.write(output)
            _LOGGER.info("Report written to %s (%s)", target, format)
        return output

    def load_report(self, path: Union[str, Path]) -> Report:
        """
        Load a report emitted as json or csv.

        Summaries are always recomputed from the rows.
        """
        source = Path(path)
        if not source.exists():
            raise FileNotFoundError(f"Report file not found: {source}")
        text = source.read_text(encoding="utf-8")

        if source.suffix.lower() == ".csv":
            return Report.from_rows({}, self._parse_csv(text))
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ValueError(f"{source} is neither a csv nor a json report: {err}") from err
        if "rows" not in data:
            raise ValueError(f"{source} holds no instance rows")
        return Report.from_dict(data)

    # ------------------------------------------------------------------ csv

    def _format_csv(self, rows: List[InstanceRow]) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(
            buffer, fieldnames=InstanceRow.csv_fields(), lineterminator="\n"
        )
        writer.writeheader()
        for row in rows:
            data = row.to_dict()
            data["violations"] = _VIOLATION_SEP.join(row.violations)
            data["decided_value"] = "" if row.decided_value is None else row.decided_value
            writer.writerow(data)
        return buffer.getvalue()

    def _parse_csv(self, text: str) -> List[InstanceRow]:
        types = {f.name: f.type for f in fields(InstanceRow)}
        rows = []
        for raw in csv.DictReader(io.StringIO(text)):
            data: Dict[str, Any] = {}
            for key, value in raw.items():
                kind = str(types.get(key, "str"))
                if key == "violations":
                    data[key] = value.split(_VIOLATION_SEP) if value else []
                elif key == "decided_value":
                    data[key] = int(value) if value != "" else None
                elif kind == "int":
                    data[key] = int(value)
                elif kind == "float":
                    data[key] = float(value)
                elif kind == "bool":
                    data[key] = value == "True"
                else:
                    data[key] = value
            rows.append(InstanceRow.from_dict(data))
        return rows

    # ------------------------------------------------------------------ text

    def _summary_lines(self, summary: ModeSummary) -> List[str]:
        dr = summary.decision_round
        pr = summary.participation_round
        return [
            f"n={summary.n} t={summary.t} mode={summary.mode} "
            f"instances={summary.instances}",
            _THIN,
            f"Decision Round:       min {dr.min:g}  avg {dr.avg:.3f}  max {dr.max:g}",
            f"Participation Round:  min {pr.min:g}  avg {pr.avg:.3f}  max {pr.max:g}",
            f"Messages:             {summary.total_messages:,} "
            f"(avg {summary.avg_messages:.1f}/instance)",
            f"Bytes:                {summary.total_bytes:,} "
            f"(avg {summary.avg_bytes:.1f}/instance)",
            f"Broadcasts/Round:     {summary.avg_broadcasts_per_round:.3f}",
            f"Decision Proofs:      {summary.decision_proofs_sent:,}",
            f"Proof Requests:       {summary.proof_requests_sent:,} "
            f"(resolved {summary.requests_resolved:,})",
            f"Dropped / Deferred:   {summary.dropped:,} / {summary.deferred:,}",
            f"Stalled:              {summary.stalled}",
            f"Violations:           {summary.violations}",
            "",
        ]

    def _format_text(self, report: Report) -> str:
        lines = [_RULE, "Binary Consensus - Experiment Report", _RULE]
        for summary in report.summaries:
            lines.extend(self._summary_lines(summary))

        lines.append(_RULE)
        if report.green:
            lines.append("RESULT: green (no violations)")
        else:
            lines.append(f"RESULT: {len(report.violations)} violation(s)")
            lines.extend(f"  {v}" for v in report.violations)
        lines.append(_RULE)
        return "\n".join(lines) + "\n"

    def _format_diff_text(self, diff: ModeDiff) -> str:
        lines = [
            _RULE,
            "Binary Consensus - Mode Comparison",
            _RULE,
            f"Pairs:                {diff.pairs}",
            f"Value Matches:        {diff.value_matches}",
            "",
        ]
        for delta in diff.deltas():
            lines.extend(
                [
                    f"n={delta['n']}: {delta['base_mode']} vs {delta['combined_mode']}",
                    _THIN,
                    f"Decision Round:       {delta['decision_round_base']:.3f} -> "
                    f"{delta['decision_round_combined']:.3f} "
                    f"({delta['decision_round_delta']:+.3f})",
                    f"Participation Delta:  {delta['participation_round_delta']:+.3f}",
                    f"Messages Delta:       {delta['avg_messages_delta']:+.1f}/instance",
                    f"Broadcasts/Round:     {delta['broadcasts_per_round_base']:.3f} -> "
                    f"{delta['broadcasts_per_round_combined']:.3f}",
                    "",
                ]
            )
        lines.append(_RULE)
        if diff.mismatches:
            lines.append(f"MISMATCHES: {[list(m) for m in diff.mismatches]}")
        lines.append("RESULT: green" if diff.green else "RESULT: failed")
        lines.append(_RULE)
        return "\n".join(lines) + "\n"
