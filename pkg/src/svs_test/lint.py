"""Detect SBOM conditions that trigger known scanner failure modes, with corpus statistics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .identifiers import MalformedPurl, Wfn, parse_purl
from .identifiers.cpe import split_fields
from .sbom import Bom, Component, IssueCode, NotCycloneDx, NotJson, parse_bom

STATS_SCHEMA = "svs-test/lint-stats/1"


class UnreadableFile(OSError):
    pass


@dataclass(frozen=True)
class Detector:
    id: str
    description: str
    scenario_link: int


DETECTORS: tuple[Detector, ...] = (
    Detector("D_CPE_BLANK", "CPE with a blank version attribute", 2),
    Detector("D_CPE_ASTERISK", "CPE with an asterisk (ANY) version attribute", 2),
    Detector("D_CPE_HYPHEN", "CPE with a hyphen (NA) token in any attribute", 2),
    Detector("D_PURL_NO_VERSION", "purl without a version", 3),
    Detector("D_NO_IDENTIFIER", "component with neither CPE nor purl", 5),
    Detector("D_NO_VERSION_FIELD", "component without the CycloneDX version field", 1),
    Detector("D_ROOT_ORDER", "root-level elements out of schema order", 8),
    Detector("D_UNKNOWN_ROOT", "unknown root-level element", 8),
    Detector("D_VEX_PRESENT", "embedded VEX statement", 7),
    Detector("D_METADATA_AT_END", "metadata is the last root-level element", 8),
)
DETECTOR_IDS = tuple(d.id for d in DETECTORS)


@dataclass(frozen=True)
class LintFinding:
    file: str
    detector_id: str
    locator: str
    detail: str
    reconstructable: bool | None = None

    def __post_init__(self):
        if not self.locator:
            raise ValueError("locator must be non-empty")


@dataclass
class CorpusStats:
    files_scanned: int = 0
    files_unparsable: int = 0
    files_not_cyclonedx: int = 0
    counts: dict[str, int] = field(default_factory=lambda: dict.fromkeys(DETECTOR_IDS, 0))
    file_counts: dict[str, int] = field(default_factory=lambda: dict.fromkeys(DETECTOR_IDS, 0))
    no_identifier_reconstructable: int = 0

    def to_json(self) -> dict:
        return {
            "schema": STATS_SCHEMA,
            "files_scanned": self.files_scanned,
            "files_unparsable": self.files_unparsable,
            "files_not_cyclonedx": self.files_not_cyclonedx,
            "counts": dict(self.counts),
            "file_counts": dict(self.file_counts),
            "no_identifier_reconstructable": self.no_identifier_reconstructable,
        }


def _raw_cpe_tokens(cpe: str) -> list[str] | None:
    if not cpe.startswith("cpe:2.3:"):
        return None
    fields = split_fields(cpe)
    return fields[2:] if len(fields) == 13 else None


def _component_findings(path: str, comp: Component) -> list[LintFinding]:
    out = []
    loc = comp.ref

    def add(det, detail, **kw):
        out.append(LintFinding(path, det, loc, f"{comp.name}: {detail}", **kw))

    if comp.cpe:
        tokens = _raw_cpe_tokens(comp.cpe)
        if tokens is not None:
            version = tokens[Wfn.ATTRIBUTES.index("version")]
            if version == "":
                add("D_CPE_BLANK", f"blank version in {comp.cpe}")
            elif version == "*":
                add("D_CPE_ASTERISK", f"asterisk version in {comp.cpe}")
            hyphens = [a for a, t in zip(Wfn.ATTRIBUTES, tokens) if t == "-"]
            if hyphens:
                add("D_CPE_HYPHEN", f"hyphen in {', '.join(hyphens)} of {comp.cpe}")
    if comp.purl:
        try:
            if parse_purl(comp.purl).version is None:
                add("D_PURL_NO_VERSION", f"purl {comp.purl} has no version")
        except MalformedPurl:
            pass
    if not comp.cpe and not comp.purl:
        ok = bool(comp.publisher and comp.name and comp.effective_version())
        add("D_NO_IDENTIFIER", "no CPE or purl" + (" (CPE reconstructable)" if ok else ""), reconstructable=ok)
    if not comp.version_field:
        add("D_NO_VERSION_FIELD", "no version field")
    return out


def lint_bom(bom: Bom, path: str) -> list[LintFinding]:
    out = []
    for comp in bom.components:
        out.extend(_component_findings(path, comp))
    for issue in bom.issues(IssueCode.ROOT_ORDER):
        out.append(LintFinding(path, "D_ROOT_ORDER", issue.location, issue.detail))
    for issue in bom.issues(IssueCode.UNKNOWN_ROOT_KEY):
        out.append(LintFinding(path, "D_UNKNOWN_ROOT", issue.location, issue.detail))
    for i, stmt in enumerate(bom.vulnerabilities):
        if stmt.affects or stmt.analysis_state:
            out.append(LintFinding(path, "D_VEX_PRESENT", f"/vulnerabilities/{i}", f"VEX for {stmt.vuln_id}"))
    if len(bom.root_keys) > 1 and bom.root_keys[-1] == "metadata":
        out.append(LintFinding(path, "D_METADATA_AT_END", "metadata", "metadata is the last root element"))
    return out


def lint_file(path: str | Path) -> list[LintFinding]:
    """Apply every detector to one file. Raises UnreadableFile, NotJson or NotCycloneDx."""
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise UnreadableFile(str(exc)) from exc
    return lint_bom(parse_bom(raw), str(p))


def lint_corpus(directory: str | Path) -> CorpusStats:
    stats = CorpusStats()
    files = sorted(Path(directory).rglob("*.json"))
    for f in files:
        try:
            findings = lint_file(f)
        except NotCycloneDx:
            # valid JSON of another kind (manifests, reports) is tallied, not scanned
            stats.files_not_cyclonedx += 1
            continue
        except (UnreadableFile, NotJson):
            stats.files_unparsable += 1
            continue
        stats.files_scanned += 1
        per = Counter(x.detector_id for x in findings)
        for det, n in per.items():
            stats.counts[det] += n
            stats.file_counts[det] += 1
        stats.no_identifier_reconstructable += sum(1 for x in findings if x.reconstructable)
    return stats


__all__ = [
    "DETECTORS",
    "DETECTOR_IDS",
    "STATS_SCHEMA",
    "CorpusStats",
    "Detector",
    "LintFinding",
    "UnreadableFile",
    "lint_bom",
    "lint_corpus",
    "lint_file",
]
