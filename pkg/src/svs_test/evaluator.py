"""Map run records to PASS / WARNING / SILENT_FAIL and summarize them per scenario."""

from __future__ import annotations

import enum
import json
import re
from collections import defaultdict
from dataclasses import dataclass, field

from .harness import TIMEOUT, RunRecord
from .testlib import SCENARIOS, Expectation, scenario_of


class Verdict(str, enum.Enum):
    PASS = "PASS"
    WARNING = "WARNING"
    SILENT_FAIL = "SILENT_FAIL"


class IncompleteSuite(ValueError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("incomplete result set; missing: " + (", ".join(self.missing) or "all results"))


@dataclass(frozen=True)
class Outcome:
    verdict: Verdict
    needs_review: bool = False
    evidence: tuple[str, ...] = ()

    def __post_init__(self):
        if self.needs_review and self.verdict is not Verdict.SILENT_FAIL:
            raise ValueError("needs_review only applies to SILENT_FAIL")


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    adapter_name: str
    outcome: Outcome
    notes: str = ""

    def to_json(self) -> dict:
        return {
            "case_id": self.case_id,
            "adapter_name": self.adapter_name,
            "verdict": self.outcome.verdict.value,
            "needs_review": self.outcome.needs_review,
            "evidence": list(self.outcome.evidence),
            "notes": self.notes,
        }

    @classmethod
    def from_json(cls, d: dict) -> CaseResult:
        outcome = Outcome(Verdict(d["verdict"]), d.get("needs_review", False), tuple(d.get("evidence", ())))
        return cls(d["case_id"], d["adapter_name"], outcome, d.get("notes", ""))


@dataclass(frozen=True)
class ScenarioSummary:
    number: int
    name: str
    verdicts: dict[str, tuple[Verdict, ...]] = field(default_factory=dict)
    interpretation: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "scenario": self.number,
            "name": self.name,
            "verdicts": {a: [v.value for v in vs] for a, vs in self.verdicts.items()},
            "interpretation": self.interpretation,
        }


# ---------------------------------------------------------------- text extraction

# Sections of a JSON report that list what was deliberately *not* reported.
_HIDDEN_SECTIONS = {"suppressed", "suppressions", "ignoredmatches", "ignored", "ignored_matches"}
_DIAGNOSTIC_LINE = re.compile(r"^\s*\[?(warn(ing)?|error|info|debug|note|fatal)\b", re.I)
GENERIC_WARNING_LIKE = re.compile(r"(?i)\b(warn|error|fail)\w*")


def _scalars(node, prune: bool):
    if isinstance(node, dict):
        for k, v in node.items():
            if prune and str(k).lower() in _HIDDEN_SECTIONS:
                continue
            yield from _scalars(v, prune)
    elif isinstance(node, list):
        for v in node:
            yield from _scalars(v, prune)
    elif node is not None and not isinstance(node, bool):
        yield str(node)


def _report_lines(report_text: str, prune: bool) -> list[str]:
    try:
        doc = json.loads(report_text)
    except ValueError:
        return report_text.splitlines()
    if not isinstance(doc, (dict, list)):
        return report_text.splitlines()
    return list(_scalars(doc, prune))


def finding_text(record: RunRecord) -> str:
    """Text searched for vulnerability ids: active report content and non-diagnostic stderr."""
    lines = _report_lines(record.report_text, prune=True)
    lines += [ln for ln in record.stderr_text.splitlines() if not _DIAGNOSTIC_LINE.match(ln)]
    return "\n".join(lines)


def message_lines(record: RunRecord) -> list[str]:
    """Lines searched for warnings and rejection messages."""
    return _report_lines(record.report_text, prune=False) + record.stderr_text.splitlines()


def _mentions(line: str, subjects) -> bool:
    return any(re.search(rf"(?<![\w-]){re.escape(s)}(?![\w-])", line) for s in subjects)


# ---------------------------------------------------------------- evaluation


def evaluate_case(record: RunRecord, expectation: Expectation) -> CaseResult:
    text = finding_text(record)
    lines = message_lines(record)

    def result(verdict, notes, evidence=(), review=False):
        return CaseResult(record.case_id, record.adapter_name, Outcome(verdict, review, tuple(evidence)), notes)

    forbidden_hits = [m.group(0) for p in expectation.forbidden_findings if (m := re.search(p, text))]
    required = [re.search(p, text) for p in expectation.required_findings]
    if expectation.required_findings or expectation.forbidden_findings:
        if all(required) and not forbidden_hits:
            return result(Verdict.PASS, "expected findings observed", [m.group(0) for m in required])

    if expectation.rejection_accepted:
        if isinstance(record.exit_status, int) and record.exit_status != 0:
            return result(Verdict.PASS, f"rejection: exit status {record.exit_status}", [f"exit {record.exit_status}"])
        for matcher in expectation.accepted_warnings:
            if not matcher.rejection:
                continue
            hit = next((ln for ln in lines if re.search(matcher.pattern, ln)), None)
            if hit is not None:
                return result(Verdict.PASS, "rejection: message matched", [hit.strip()])

    for matcher in expectation.accepted_warnings:
        if matcher.rejection:
            continue
        for ln in lines:
            if not re.search(matcher.pattern, ln):
                continue
            if matcher.must_reference_component and not _mentions(ln, expectation.subject_components):
                continue
            note = "accepted warning"
            if forbidden_hits:
                note += f"; forbidden finding reported: {', '.join(forbidden_hits)}"
            return result(Verdict.WARNING, note, [ln.strip()])

    why = []
    if forbidden_hits:
        why.append(f"forbidden finding reported: {', '.join(forbidden_hits)}")
    if not all(required):
        missing = [p for p, m in zip(expectation.required_findings, required) if not m]
        why.append(f"missing: {', '.join(missing)}")
    if record.exit_status == TIMEOUT:
        why.append("timed out")
    generic = [ln.strip() for ln in lines if GENERIC_WARNING_LIKE.search(ln)]
    if generic:
        why.append("unaccepted warning-like output")
        return result(Verdict.SILENT_FAIL, "; ".join(why), generic, review=True)
    return result(Verdict.SILENT_FAIL, "; ".join(why) or "expected outcome not observed")


def evaluate_run(records: list[RunRecord], expectations: dict[str, Expectation]) -> list[CaseResult]:
    return [evaluate_case(r, expectations[r.case_id]) for r in records if r.case_id in expectations]


# ---------------------------------------------------------------- scenario interpretation

_P, _W, _S = Verdict.PASS, Verdict.WARNING, Verdict.SILENT_FAIL


def _interpret(number: int, verdicts: dict[str, Verdict]) -> str:
    """Fixed rule table from a scenario's verdict vector to a behavior label."""
    v = verdicts
    values = set(v.values())
    if values == {_P}:
        return "fully conformant"
    explicit = _S not in values
    suffix = " (explicit warnings)" if explicit else " (silent)"
    if number == 1:
        if v.get("an7esfjj") != _P and v.get("dmszq6mv") == _P:
            return "CPE unsupported" + suffix
        if v.get("dmszq6mv") != _P and v.get("an7esfjj") == _P:
            return "purl unsupported" + suffix
        return "identifier support incomplete" + suffix
    if number == 2:
        failing = [c for c in ("u8h8dnoj", "fayptrma", "b5mxq45i") if v.get(c) != _P]
        return "CPE without concrete version not matched: " + ", ".join(failing) + suffix
    if number == 3:
        return "versionless purl not matched" + suffix
    if number == 4:
        cpe_wins = {c for c in ("2lb5zfps", "9xhb7rgj") if v.get(c) == _P}
        purl_wins = {c for c in ("pq3cy9or", "5q46iw4f") if v.get(c) == _P}
        if purl_wins and not cpe_wins:
            label = "purl preferred over CPE"
        elif cpe_wins and not purl_wins:
            label = "CPE preferred over purl"
        else:
            label = "identifier priority depends on key order"
        return label + suffix
    if number == 5:
        return "no CPE construction for identifier-less components" + suffix
    if number == 6:
        return "non-canonical purl prefix not handled" + suffix
    if number == 7:
        if v.get("0vo0efli") != _P and v.get("qbqy99do") == _P:
            return "VEX not applied" + suffix
        return "VEX handling incorrect" + suffix
    if number == 8:
        return "accepts invalid BOM" + suffix
    return "unexpected behavior" + suffix


def summarize_scenarios(results: list[CaseResult], case_ids: list[str] | None = None) -> list[ScenarioSummary]:
    if not results:
        raise IncompleteSuite([])
    expected = case_ids or [c for s in SCENARIOS for c in s.case_ids]
    by_adapter: dict[str, dict[str, Verdict]] = defaultdict(dict)
    for r in results:
        by_adapter[r.adapter_name][r.case_id] = r.outcome.verdict
    missing = [f"{a}:{c}" for a, got in sorted(by_adapter.items()) for c in expected if c not in got]
    if missing:
        raise IncompleteSuite(missing)
    summaries = []
    for s in SCENARIOS:
        ids = [c for c in s.case_ids if c in expected]
        if not ids:
            continue
        verdicts = {a: tuple(got[c] for c in ids) for a, got in by_adapter.items()}
        notes = {a: _interpret(s.number, {c: got[c] for c in ids}) for a, got in by_adapter.items()}
        summaries.append(ScenarioSummary(s.number, s.name, verdicts, notes))
    return summaries


# ---------------------------------------------------------------- matrix rendering

SYMBOLS = {Verdict.PASS: "✓", Verdict.WARNING: "⚠", Verdict.SILENT_FAIL: "✗"}


def cell(result: CaseResult | None) -> str:
    if result is None:
        return "?"
    sym = SYMBOLS[result.outcome.verdict]
    return f"({sym})" if result.outcome.needs_review else sym


def matrix(results: list[CaseResult]) -> dict:
    adapters = list(dict.fromkeys(r.adapter_name for r in results))
    index = {(r.case_id, r.adapter_name): r for r in results}
    present = {r.case_id for r in results}
    rows = []
    for s in SCENARIOS:
        for cid in s.case_ids:
            if cid not in present:
                continue
            rows.append({"scenario": s.number, "case_id": cid, "cells": {a: cell(index.get((cid, a))) for a in adapters}})
    return {"adapters": adapters, "rows": rows}


def render_matrix(results: list[CaseResult], fmt: str = "markdown") -> str:
    m = matrix(results)
    if fmt == "json":
        return json.dumps(m, indent=2, ensure_ascii=False) + "\n"
    if fmt != "markdown":
        raise ValueError(f"unknown format {fmt!r}")
    head = ["Scenario", "Test Case", *m["adapters"]]
    out = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    last = None
    for row in m["rows"]:
        scen = str(row["scenario"]) if row["scenario"] != last else ""
        last = row["scenario"]
        out.append("| " + " | ".join([scen, row["case_id"], *(row["cells"][a] for a in m["adapters"])]) + " |")
    out.append("")
    out.append("✓ pass, ⚠ explicit warning, ✗ silent failure, (✗) silent failure with unaccepted warning-like output")
    return "\n".join(out) + "\n"


def parse_markdown_matrix(text: str) -> dict:
    """Inverse of the markdown rendering (used to check the two forms agree)."""
    lines = [ln for ln in text.splitlines() if ln.startswith("|")]
    head = [c.strip() for c in lines[0].strip("|").split("|")]
    adapters = head[2:]
    rows, scen = [], None
    for ln in lines[2:]:
        cells = [c.strip() for c in ln.strip("|").split("|")]
        scen = int(cells[0]) if cells[0] else scen
        rows.append({"scenario": scen, "case_id": cells[1], "cells": dict(zip(adapters, cells[2:]))})
    return {"adapters": adapters, "rows": rows}


def results_to_json(results: list[CaseResult]) -> dict:
    return {"schema": "svs-test/results/1", "results": [r.to_json() for r in results]}


def results_from_json(d: dict) -> list[CaseResult]:
    return [CaseResult.from_json(x) for x in d["results"]]


def scenario_number(case_id: str) -> int:
    return scenario_of(case_id).number


__all__ = [
    "CaseResult",
    "IncompleteSuite",
    "Outcome",
    "ScenarioSummary",
    "Verdict",
    "evaluate_case",
    "evaluate_run",
    "finding_text",
    "matrix",
    "message_lines",
    "parse_markdown_matrix",
    "render_matrix",
    "results_from_json",
    "results_to_json",
    "summarize_scenarios",
]
