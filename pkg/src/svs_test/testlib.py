"""The 16-case SBOM test library, its expectations and scenario grouping.

The SBOMs are reconstructions from prose descriptions: byte-exact originals are
not available, so every token chosen here (bom-refs, CPE vendors, serials) is
ours and kept consistent with the shipped vulnerability seed.
"""

from __future__ import annotations

import hashlib
import json
import re
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path

SPEC_VERSION = "1.6"
SCHEMA_URL = "http://cyclonedx.org/schema/bom-1.6.schema.json"
FIXTURE_TIMESTAMP = "2025-01-01T00:00:00Z"
_SERIAL_NS = uuid.uuid5(uuid.NAMESPACE_URL, "https://svs-test.invalid/cases")

DICER_CVE = "CVE-2022-24434"
DICER_ALIASES = ("GHSA-wm7h-9275-46v2",)
LUCENE_CVE = "CVE-2024-45772"

DICER_CPE = "cpe:2.3:a:dicer_project:dicer:{v}:*:*:*:*:*:*:*"
LUCENE_CPE = "cpe:2.3:a:apache:lucene-replicator:{v}:*:*:*:*:*:*:*"
LUCENE_PURL = "pkg:maven/org.apache.lucene/lucene-replicator@{v}"

# Any explicit info/warning/error line; whether it is actionable is decided by
# the component reference check in the evaluator.
GENERIC_WARNING = r"(?i)\b(warn(ing)?|error|info)\b"
REJECTION_PHRASES = (
    r"(?i)(invalid bom|bom rejected|rejected bom|schema validation failed|"
    r"error (in )?uploading the bom|bom segment|root[- ]level element|out of order)"
)
VEX_UNSUPPORTED = r"(?i)\b(vex|vulnerabilit(y|ies) section|analysis)\b.*\b(ignored|not (supported|processed|applied)|unsupported)\b"


class IoFailure(OSError):
    pass


@dataclass(frozen=True)
class WarningMatcher:
    pattern: str
    must_reference_component: bool = True
    rejection: bool = False

    def __post_init__(self):
        re.compile(self.pattern)

    @property
    def regex(self) -> re.Pattern:
        return re.compile(self.pattern)


@dataclass(frozen=True)
class Expectation:
    required_findings: tuple[str, ...] = ()
    forbidden_findings: tuple[str, ...] = ()
    accepted_warnings: tuple[WarningMatcher, ...] = ()
    rejection_accepted: bool = False
    # bom-refs and names an actionable warning has to mention
    subject_components: tuple[str, ...] = ()

    def __post_init__(self):
        overlap = set(self.required_findings) & set(self.forbidden_findings)
        if overlap:
            raise ValueError(f"required and forbidden findings overlap: {sorted(overlap)}")
        for p in self.required_findings + self.forbidden_findings:
            re.compile(p)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> Expectation:
        return cls(
            required_findings=tuple(d.get("required_findings", ())),
            forbidden_findings=tuple(d.get("forbidden_findings", ())),
            accepted_warnings=tuple(WarningMatcher(**m) for m in d.get("accepted_warnings", ())),
            rejection_accepted=bool(d.get("rejection_accepted", False)),
            subject_components=tuple(d.get("subject_components", ())),
        )


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # keep pytest from collecting this class

    id: str
    scenario: int
    title: str
    bom_bytes: bytes = field(repr=False)
    expectation: Expectation
    rationale: str

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.bom_bytes).hexdigest()


@dataclass(frozen=True)
class Scenario:
    number: int
    name: str
    case_ids: tuple[str, ...]
    interpretation_note: str


def vuln_pattern(vuln_id: str, aliases: tuple[str, ...] = ()) -> str:
    """Regex accepting a vulnerability id or any of its equivalent identifiers."""
    def lit(x):
        return x if re.fullmatch(r"[A-Za-z0-9-]+", x) else re.escape(x)

    return "|".join(rf"\b{lit(x)}\b" for x in (vuln_id, *aliases))


DICER_PATTERN = vuln_pattern(DICER_CVE, DICER_ALIASES)
LUCENE_PATTERN = vuln_pattern(LUCENE_CVE)


# ---------------------------------------------------------------- components


def _component(name, ref, *, group=None, publisher=None, version=None, ids=()):
    """Ordered component object; ``ids`` is a sequence of ("cpe"|"purl", value)."""
    c = {"type": "library", "bom-ref": ref}
    if publisher:
        c["publisher"] = publisher
    if group:
        c["group"] = group
    c["name"] = name
    if version:
        c["version"] = version
    for key, value in ids:
        c[key] = value
    return c


def dicer(*ids, version=None, publisher=None):
    return _component("dicer", "component-dicer", ids=ids, version=version, publisher=publisher)


def multer(*ids, version=None, publisher=None):
    return _component("multer", "component-multer", ids=ids, version=version, publisher=publisher)


def lucene(*ids, version=None):
    return _component(
        "lucene-replicator", "component-lucene-replicator", group="org.apache.lucene", ids=ids, version=version
    )


def _document(case_id, components, *, order=None, extra=None, vulnerabilities=None):
    """Build the ordered BOM object. ``order`` lists root keys after ``version``."""
    refs = [c["bom-ref"] for c in components]
    app = f"application-{case_id}"
    sections = {
        "metadata": {
            "timestamp": FIXTURE_TIMESTAMP,
            "component": {"type": "application", "bom-ref": app, "name": f"svs-test-{case_id}", "version": "1.0.0"},
        },
        "components": components,
        "dependencies": [{"ref": app, "dependsOn": refs}] + [{"ref": r, "dependsOn": []} for r in refs],
    }
    if vulnerabilities is not None:
        sections["vulnerabilities"] = vulnerabilities
    sections.update(extra or {})
    if order is None:
        order = [k for k in ("metadata", "components", "dependencies", "vulnerabilities") if k in sections]
    doc = {
        "$schema": SCHEMA_URL,
        "bomFormat": "CycloneDX",
        "specVersion": SPEC_VERSION,
        "serialNumber": f"urn:uuid:{uuid.uuid5(_SERIAL_NS, case_id)}",
        "version": 1,
    }
    for key in order:
        doc[key] = sections[key]
    return doc


def serialize(doc: dict) -> bytes:
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _vex(state, status, justification=None):
    analysis = {"state": state}
    if justification:
        analysis["justification"] = justification
    return [
        {
            "bom-ref": "vex-lucene-replicator",
            "id": LUCENE_CVE,
            "source": {"name": "NVD", "url": f"https://nvd.nist.gov/vuln/detail/{LUCENE_CVE}"},
            "analysis": analysis,
            "affects": [
                {
                    "ref": "component-lucene-replicator",
                    "versions": [{"version": "8.11.4", "status": status}],
                }
            ],
        }
    ]


# ---------------------------------------------------------------- expectations


def _subjects(components) -> tuple[str, ...]:
    out = []
    for c in components:
        out += [c["bom-ref"], c["name"]]
    return tuple(out)


def _expect(components, *, required=(), forbidden=(), extra_matchers=(), rejection=False):
    matchers = (WarningMatcher(GENERIC_WARNING), *extra_matchers)
    return Expectation(
        required_findings=tuple(required),
        forbidden_findings=tuple(forbidden),
        accepted_warnings=matchers,
        rejection_accepted=rejection,
        subject_components=_subjects(components),
    )


SCENARIOS = (
    Scenario(1, "Component Identifier Support", ("an7esfjj", "dmszq6mv"),
             "Baseline support for CPE and purl identifiers."),
    Scenario(2, "CPE: No Component Version", ("u8h8dnoj", "fayptrma", "b5mxq45i"),
             "CPE matching with a blank, asterisk (ANY) or hyphen (NA) version."),
    Scenario(3, "purl: No Component Version", ("9a7iknu4",),
             "purl matching when the optional version is absent."),
    Scenario(4, "Component Identifier Priority", ("2lb5zfps", "9xhb7rgj", "pq3cy9or", "5q46iw4f"),
             "Which identifier wins when CPE and purl disagree, and whether key order matters."),
    Scenario(5, "No Component Identifier", ("sqs4tbob",),
             "Behavior for components carrying neither CPE nor purl."),
    Scenario(6, "purl: Non-canonical prefix", ("hawmnwbz",),
             "Handling of the specification-compliant pkg:// slash variant."),
    Scenario(7, "VEX Exploitability Data", ("qbqy99do", "0vo0efli"),
             "Whether embedded CycloneDX VEX suppresses a vulnerability."),
    Scenario(8, "Invalid Input SBOM", ("omwcmwv1", "3fvslnon"),
             "Out-of-order and unknown root-level elements."),
)


def _case(case_id, scenario, title, doc, expectation, rationale):
    return TestCase(case_id, scenario, title, serialize(doc), expectation, rationale)


def build_library() -> list[TestCase]:
    cases = []

    def add(case_id, scenario, title, components, rationale, *, required=(), forbidden=(),
            extra_matchers=(), rejection=False, **doc_kw):
        doc = _document(case_id, components, **doc_kw)
        exp = _expect(components, required=required, forbidden=forbidden,
                      extra_matchers=extra_matchers, rejection=rejection)
        cases.append(_case(case_id, scenario, title, doc, exp, rationale))

    # Scenario 1
    add("an7esfjj", 1, "CPE support", [dicer(("cpe", DICER_CPE.format(v="0.3.0")))],
        "Valid CPE only; a CPE-less tool must warn that the component was not scanned.",
        required=[DICER_PATTERN])
    add("dmszq6mv", 1, "purl support", [dicer(("purl", "pkg:npm/dicer@0.3.0"))],
        "Valid versioned purl only.", required=[DICER_PATTERN])

    # Scenario 2: identical to an7esfjj except for the CPE version token
    for cid, token, title in (("u8h8dnoj", "", "CPE component version blank"),
                              ("fayptrma", "*", "CPE component version asterisk"),
                              ("b5mxq45i", "-", "CPE component version hyphen")):
        add(cid, 2, title, [dicer(("cpe", DICER_CPE.format(v=token)))],
            f"CPE version token {token or '(blank)'!r}; ANY must match, NA is read as unknown.",
            required=[DICER_PATTERN])

    # Scenario 3
    add("9a7iknu4", 3, "purl without component version", [dicer(("purl", "pkg:npm/dicer"))],
        "The purl version is optional; all versions of dicer are affected.", required=[DICER_PATTERN])

    # Scenario 4: CPE/purl values x key order
    vuln_cpe_first = [("cpe", LUCENE_CPE.format(v="8.11.4")), ("purl", LUCENE_PURL.format(v="9.12.0"))]
    vuln_purl_first = [("purl", LUCENE_PURL.format(v="8.11.4")), ("cpe", LUCENE_CPE.format(v="9.12.0"))]
    add("2lb5zfps", 4, "vulnerable CPE before purl", [lucene(*vuln_cpe_first)],
        "CPE 8.11.4 (affected) listed before purl 9.12.0 (fixed).", required=[LUCENE_PATTERN])
    add("9xhb7rgj", 4, "purl before vulnerable CPE", [lucene(*vuln_cpe_first[::-1])],
        "purl 9.12.0 (fixed) listed before CPE 8.11.4 (affected).", required=[LUCENE_PATTERN])
    add("pq3cy9or", 4, "CPE before vulnerable purl", [lucene(*vuln_purl_first[::-1])],
        "CPE 9.12.0 (fixed) listed before purl 8.11.4 (affected).", required=[LUCENE_PATTERN])
    add("5q46iw4f", 4, "vulnerable purl before CPE", [lucene(*vuln_purl_first)],
        "purl 8.11.4 (affected) listed before CPE 9.12.0 (fixed).", required=[LUCENE_PATTERN])

    # Scenario 5
    add("sqs4tbob", 5, "no component identifier string",
        [dicer(version="0.3.0", publisher="dicer_project"), multer(version="1.4.4", publisher="expressjs")],
        "No identifiers, but publisher, name and version suffice to construct a CPE.",
        required=[DICER_PATTERN])

    # Scenario 6
    add("hawmnwbz", 6, "non canonical purl string",
        [lucene(("purl", "pkg://maven/org.apache.lucene/lucene-replicator@8.11.4"))],
        "pkg:// is valid; parsers must drop the extra slashes.", required=[LUCENE_PATTERN])

    # Scenario 7
    both = [("cpe", LUCENE_CPE.format(v="8.11.4")), ("purl", LUCENE_PURL.format(v="8.11.4"))]
    add("qbqy99do", 7, "CDX VEX with no influence", [lucene(*both)],
        "Embedded VEX confirms 8.11.4 is affected; the finding must remain.",
        required=[LUCENE_PATTERN], vulnerabilities=_vex("exploitable", "affected"))
    add("0vo0efli", 7, "CDX VEX to suppress vuln.", [lucene(*both)],
        "Embedded VEX marks 8.11.4 unaffected; the finding must be suppressed.",
        forbidden=[LUCENE_PATTERN], extra_matchers=(WarningMatcher(VEX_UNSUPPORTED),),
        vulnerabilities=_vex("not_affected", "unaffected", "code_not_reachable"))

    # Scenario 8
    s8 = [dicer(("cpe", DICER_CPE.format(v="0.3.0")), ("purl", "pkg:npm/dicer@0.3.0")),
          multer(("purl", "pkg:npm/multer@1.4.4"))]
    reject = (WarningMatcher(REJECTION_PHRASES, must_reference_component=False, rejection=True),)
    add("omwcmwv1", 8, "Out of order BOM segments", s8,
        "Root elements ordered metadata, vulnerabilities, dependencies, components. Rejection passes; "
        "because JSON does not guarantee order, reporting the dicer vulnerability is also tolerated.",
        required=[DICER_PATTERN], extra_matchers=reject, rejection=True,
        order=["metadata", "vulnerabilities", "dependencies", "components"], vulnerabilities=[])
    add("3fvslnon", 8, "Invalid root-lvl BOM segment", s8,
        "licenses placed at the root instead of inside metadata; the BOM must be rejected.",
        extra_matchers=reject, rejection=True,
        order=["metadata", "licenses", "components", "dependencies", "properties"],
        extra={"licenses": [{"license": {"id": "MIT"}}],
               "properties": [{"name": "svs-test:case", "value": "3fvslnon"}]})

    return cases


def library_by_id() -> dict[str, TestCase]:
    return {c.id: c for c in build_library()}


def scenario_of(case_id: str) -> Scenario:
    for s in SCENARIOS:
        if case_id in s.case_ids:
            return s
    raise KeyError(case_id)


def fixture_manifest(cases: list[TestCase]) -> dict:
    return {
        "cases": [{"id": c.id, "file": f"{c.id}.cdx.json", "sha256": c.sha256} for c in cases],
    }


def library_digest(cases: list[TestCase] | None = None) -> str:
    cases = build_library() if cases is None else cases
    text = json.dumps(fixture_manifest(cases), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(text.encode()).hexdigest()


def expectations_json(cases: list[TestCase]) -> dict:
    return {
        c.id: {"scenario": c.scenario, "title": c.title, "expectation": c.expectation.to_json()} for c in cases
    }


def emit_sbom_files(directory: str | Path, cases: list[TestCase] | None = None) -> dict:
    """Write ``<id>.cdx.json`` files plus ``manifest.json`` and ``expectations.json``."""
    cases = build_library() if cases is None else cases
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for c in cases:
            (out / f"{c.id}.cdx.json").write_bytes(c.bom_bytes)
        manifest = fixture_manifest(cases)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        (out / "expectations.json").write_text(json.dumps(expectations_json(cases), indent=2) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return manifest


def load_cases(directory: str | Path) -> list[TestCase]:
    """Read an emitted case directory back, verifying file hashes against the manifest."""
    root = Path(directory)
    try:
        manifest = json.loads((root / "manifest.json").read_text())
        expectations = json.loads((root / "expectations.json").read_text())
        cases = []
        for entry in manifest["cases"]:
            data = (root / entry["file"]).read_bytes()
            if hashlib.sha256(data).hexdigest() != entry["sha256"]:
                raise IoFailure(f"{entry['file']}: hash does not match manifest")
            meta = expectations[entry["id"]]
            cases.append(
                TestCase(entry["id"], meta["scenario"], meta["title"], data,
                         Expectation.from_json(meta["expectation"]), "")
            )
    except (OSError, KeyError, ValueError) as exc:
        if isinstance(exc, IoFailure):
            raise
        raise IoFailure(str(exc)) from exc
    return cases


__all__ = [
    "DICER_CVE",
    "LUCENE_CVE",
    "SCENARIOS",
    "Expectation",
    "IoFailure",
    "Scenario",
    "TestCase",
    "WarningMatcher",
    "build_library",
    "emit_sbom_files",
    "expectations_json",
    "library_by_id",
    "library_digest",
    "load_cases",
    "scenario_of",
    "serialize",
    "vuln_pattern",
]
