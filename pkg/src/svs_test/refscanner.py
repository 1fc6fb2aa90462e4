"""Reference SBOM vulnerability scanner and its degraded profiles.

The IDEAL profile uses every identifier, applies embedded VEX, rejects invalid
BOMs and never skips a component without saying so. The other profiles each
switch off one capability to emulate a failure mode seen in real scanners.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

from .identifiers import (
    CpeAttribute,
    MalformedCpe,
    MalformedPurl,
    NaVersionPolicy,
    Wfn,
    format_cpe,
    parse_cpe,
    parse_purl,
)
from .sbom import Bom, Component, IssueCode, dangling_vex_refs, vex_suppressions
from .vulndb import Snapshot, VersionlessPolicy, lookup_by_cpe, lookup_by_purl


class MatchedVia(str, enum.Enum):
    CPE = "CPE"
    PURL = "PURL"


class WarnCode(str, enum.Enum):
    INVALID_BOM = "INVALID_BOM"
    NO_IDENTIFIER = "NO_IDENTIFIER"
    NO_VERSION = "NO_VERSION"
    CPE_UNSUPPORTED = "CPE_UNSUPPORTED"
    INVALID_CPE = "INVALID_CPE"
    INVALID_PURL = "INVALID_PURL"
    PURL_UNSUPPORTED = "PURL_UNSUPPORTED"
    CPE_RECONSTRUCTED = "CPE_RECONSTRUCTED"
    VEX_IGNORED = "VEX_IGNORED"
    VEX_DANGLING = "VEX_DANGLING"
    UNRESOLVED = "UNRESOLVED"


# Codes that mean "this component was not looked up at all".
SKIP_CODES = frozenset(
    {
        WarnCode.NO_IDENTIFIER,
        WarnCode.NO_VERSION,
        WarnCode.CPE_UNSUPPORTED,
        WarnCode.PURL_UNSUPPORTED,
        WarnCode.INVALID_CPE,
        WarnCode.INVALID_PURL,
    }
)


@dataclass(frozen=True)
class ScanConfig:
    use_cpe: bool = True
    use_purl: bool = True
    versionless_purl_policy: VersionlessPolicy = VersionlessPolicy.WILDCARD
    na_version_policy: NaVersionPolicy = NaVersionPolicy.TREAT_NA_VERSION_AS_UNKNOWN
    reconstruct_cpe_if_none: bool = True
    require_version_field: bool = False
    process_vex: bool = True
    reject_invalid_root: bool = True
    reject_root_order: bool = True
    # False collapses every component-specific warning into one generic line
    explicit_warnings: bool = True

    def __post_init__(self):
        if not (self.use_cpe or self.use_purl):
            raise ValueError("at least one of use_cpe/use_purl must be enabled")

    def to_json(self) -> dict:
        return {k: (v.name if isinstance(v, enum.Enum) else v) for k, v in self.__dict__.items()}

    def with_overrides(self, overrides: dict) -> ScanConfig:
        """Copy with fields replaced; enum fields accept member names."""
        changes = {}
        for key, value in overrides.items():
            if key not in self.__dataclass_fields__:
                raise ValueError(f"unknown scan option {key!r}")
            current = getattr(self, key)
            if isinstance(current, enum.Enum) and isinstance(value, str):
                value = type(current)[value]
            changes[key] = value
        return replace(self, **changes)


class ProfileName(str, enum.Enum):
    IDEAL = "IDEAL"
    PURL_ONLY = "PURL_ONLY"
    VERSION_FIELD_DEPENDENT = "VERSION_FIELD_DEPENDENT"
    NO_VEX = "NO_VEX"
    LENIENT = "LENIENT"


@dataclass(frozen=True)
class Profile:
    name: ProfileName
    config: ScanConfig
    description: str


_IDEAL = ScanConfig()
PROFILES: dict[ProfileName, Profile] = {
    p.name: p
    for p in (
        Profile(ProfileName.IDEAL, _IDEAL, "all identifiers, VEX applied, invalid BOMs rejected"),
        Profile(ProfileName.PURL_ONLY, replace(_IDEAL, use_cpe=False), "ignores CPE identifiers"),
        Profile(
            ProfileName.VERSION_FIELD_DEPENDENT,
            replace(_IDEAL, require_version_field=True),
            "reads the version only from the CycloneDX version field",
        ),
        Profile(ProfileName.NO_VEX, replace(_IDEAL, process_vex=False), "ignores embedded VEX data"),
        Profile(
            ProfileName.LENIENT,
            replace(_IDEAL, reject_invalid_root=False, reject_root_order=False),
            "accepts structurally invalid BOMs",
        ),
    )
}


def get_profile(name: str | ProfileName) -> Profile:
    try:
        return PROFILES[ProfileName(str(name).upper() if isinstance(name, str) else name)]
    except ValueError:
        raise KeyError(f"unknown profile {name!r}; choose from {', '.join(p.value for p in ProfileName)}") from None


@dataclass(frozen=True)
class Finding:
    vuln_id: str
    component_ref: str
    matched_via: MatchedVia
    suppressed_by_vex: bool = False
    aliases: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "vuln_id": self.vuln_id,
            "aliases": list(self.aliases),
            "component_ref": self.component_ref,
            "matched_via": self.matched_via.value,
            "suppressed_by_vex": self.suppressed_by_vex,
        }


@dataclass(frozen=True)
class ScanWarning:
    code: WarnCode
    message: str
    component_ref: str | None = None

    def __post_init__(self):
        if self.component_ref and self.component_ref not in self.message:
            raise ValueError("warning message must name its component")

    def to_json(self) -> dict:
        return {"code": self.code.value, "component_ref": self.component_ref, "message": self.message}


@dataclass(frozen=True)
class ScanStats:
    components_total: int = 0
    components_tested: int = 0
    components_skipped: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class ScanReport:
    findings: tuple[Finding, ...] = ()
    suppressed: tuple[Finding, ...] = ()
    warnings: tuple[ScanWarning, ...] = ()
    stats: ScanStats = field(default_factory=ScanStats)
    rejected: str | None = None
    skipped_refs: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "findings": [f.to_json() for f in self.findings],
            "suppressed": [f.to_json() for f in self.suppressed],
            "warnings": [w.to_json() for w in self.warnings],
            "stats": self.stats.to_json(),
            "rejected": self.rejected,
        }


# ---------------------------------------------------------------- scanning


def _rejection_reason(bom: Bom, config: ScanConfig) -> str | None:
    reasons = []
    if config.reject_root_order:
        reasons += [f"root element order violated at {i.location!r}" for i in bom.issues(IssueCode.ROOT_ORDER)]
    if config.reject_invalid_root:
        reasons += [f"unknown root-level element {i.location!r}" for i in bom.issues(IssueCode.UNKNOWN_ROOT_KEY)]
        reasons += [f"schema violation at {i.location}" for i in bom.issues(IssueCode.SCHEMA)]
    return "; ".join(reasons) or None


def reconstruct_cpe(component: Component) -> Wfn:
    """CPE from publisher (vendor), name (product) and the effective version."""

    def token(text):
        return CpeAttribute.from_text(text.strip().lower().replace(" ", "_"))

    version = component.effective_version()
    return Wfn(
        part=CpeAttribute.from_text("a"),
        vendor=token(component.publisher) if component.publisher else CpeAttribute.any(),
        product=token(component.name),
        version=CpeAttribute.from_text(version) if version else CpeAttribute.any(),
    )


@dataclass
class _ComponentScan:
    hits: list[tuple[str, tuple[str, ...], MatchedVia]] = field(default_factory=list)
    notes: list[ScanWarning] = field(default_factory=list)
    skip: ScanWarning | None = None


def _scan_component(comp: Component, snapshot: Snapshot, config: ScanConfig) -> _ComponentScan:
    out = _ComponentScan()
    label = comp.label

    def warn(code, text):
        return ScanWarning(code, f"component {label}: {text}", comp.ref)

    if config.require_version_field and not comp.version_field:
        out.skip = warn(WarnCode.NO_VERSION, "no CycloneDX version field; component not scanned")
        return out

    queries: list[tuple[MatchedVia, object]] = []
    problems: list[tuple[WarnCode, str]] = []

    if comp.purl:
        if not config.use_purl:
            problems.append((WarnCode.PURL_UNSUPPORTED, "purl identifiers are not supported"))
        else:
            try:
                p = parse_purl(comp.purl)
            except MalformedPurl as exc:
                problems.append((WarnCode.INVALID_PURL, f"invalid purl {comp.purl!r} ({exc})"))
            else:
                if config.require_version_field:
                    p = replace(p, version=comp.version_field)
                elif p.version is None and comp.version_field:
                    p = replace(p, version=comp.version_field)
                if p.version is None and config.versionless_purl_policy is VersionlessPolicy.SKIP:
                    problems.append((WarnCode.NO_VERSION, f"purl {comp.purl!r} has no version"))
                else:
                    queries.append((MatchedVia.PURL, p))

    if comp.cpe:
        if not config.use_cpe:
            problems.append((WarnCode.CPE_UNSUPPORTED, "CPE identifiers are not supported, component must have a purl"))
        else:
            try:
                w = parse_cpe(comp.cpe)
            except MalformedCpe as exc:
                problems.append((WarnCode.INVALID_CPE, f"invalid CPE {comp.cpe!r} ({exc})"))
            else:
                if config.require_version_field:
                    w = w.replace(version=CpeAttribute.from_text(comp.version_field))
                queries.append((MatchedVia.CPE, w))

    if not comp.cpe and not comp.purl:
        if config.use_cpe and config.reconstruct_cpe_if_none:
            w = reconstruct_cpe(comp)
            out.notes.append(warn(WarnCode.CPE_RECONSTRUCTED, f"no identifier, using constructed CPE {format_cpe(w)}"))
            queries.append((MatchedVia.CPE, w))
        else:
            out.skip = warn(WarnCode.NO_IDENTIFIER, "no testable component identifier; component not scanned")
            return out

    if not queries:
        text = "; ".join(t for _, t in problems)
        out.skip = warn(problems[0][0], f"{text}; component not scanned")
        return out
    out.notes.extend(warn(code, text) for code, text in problems)

    for via, query in queries:
        if via is MatchedVia.PURL:
            hits = lookup_by_purl(snapshot, query, config.versionless_purl_policy)
        else:
            hits = lookup_by_cpe(snapshot, query, config.na_version_policy)
        out.hits.extend((rec.id, rec.aliases, via) for rec, _ in hits)
    return out


def scan(bom: Bom, snapshot: Snapshot, config: ScanConfig) -> ScanReport:
    total = len(bom.components)
    reason = _rejection_reason(bom, config)
    if reason:
        refs = ", ".join(c.ref for c in bom.components) or "none"
        msg = f"invalid BOM rejected: {reason}; components not scanned: {refs}"
        return ScanReport(
            warnings=(ScanWarning(WarnCode.INVALID_BOM, msg),),
            stats=ScanStats(total, 0, total),
            rejected=reason,
            skipped_refs=tuple(c.ref for c in bom.components),
        )

    best: dict[tuple[str, str], Finding] = {}
    warnings: list[ScanWarning] = []
    skipped: list[str] = []
    for comp in bom.components:
        result = _scan_component(comp, snapshot, config)
        if result.skip:
            warnings.append(result.skip)
            skipped.append(comp.ref)
            continue
        warnings.extend(result.notes)
        for vuln_id, aliases, via in result.hits:
            key = (vuln_id, comp.ref)
            if key not in best or via is MatchedVia.PURL:
                best[key] = Finding(vuln_id, comp.ref, via, aliases=aliases)

    suppressions = {}
    if bom.vulnerabilities:
        if config.process_vex:
            suppressions = vex_suppressions(bom)
            for ref, vuln_id in dangling_vex_refs(bom):
                warnings.append(
                    ScanWarning(WarnCode.VEX_DANGLING, f"VEX statement for {vuln_id} references unknown component {ref}")
                )
        else:
            for stmt in bom.vulnerabilities:
                for aff in stmt.affects or ():
                    warnings.append(
                        ScanWarning(
                            WarnCode.VEX_IGNORED,
                            f"component {aff.ref}: VEX analysis for {stmt.vuln_id} ignored (VEX not supported)",
                            aff.ref,
                        )
                    )

    def suppressed(f: Finding) -> bool:
        ids = (f.vuln_id, *f.aliases)
        return any(suppressions.get((f.component_ref, i)) == "suppressed" for i in ids)

    ordered = sorted(best.values(), key=lambda f: (f.vuln_id, f.component_ref))
    active = tuple(f for f in ordered if not suppressed(f))
    hidden = tuple(replace(f, suppressed_by_vex=True) for f in ordered if suppressed(f))

    if not config.explicit_warnings and warnings:
        warnings = [ScanWarning(WarnCode.UNRESOLVED, "At least one component could not be resolved")]

    return ScanReport(
        findings=active,
        suppressed=hidden,
        warnings=tuple(warnings),
        stats=ScanStats(total, total - len(skipped), len(skipped)),
        skipped_refs=tuple(skipped),
    )


def serialize_report(report: ScanReport) -> bytes:
    return (json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n").encode("utf-8")


def render_text(report: ScanReport) -> str:
    lines = []
    for f in report.findings:
        lines.append(f"FINDING: {f.vuln_id} in {f.component_ref} (via {f.matched_via.value})")
    for f in report.suppressed:
        lines.append(f"SUPPRESSED: {f.vuln_id} in {f.component_ref} (VEX)")
    lines.extend(warning_lines(report))
    s = report.stats
    lines.append(f"components: {s.components_total} total, {s.components_tested} tested, {s.components_skipped} skipped")
    return "\n".join(lines) + "\n"


def warning_lines(report: ScanReport) -> list[str]:
    return [f"WARN: {w.code.value}: {w.message}" for w in report.warnings]


__all__ = [
    "PROFILES",
    "SKIP_CODES",
    "Finding",
    "MatchedVia",
    "Profile",
    "ProfileName",
    "ScanConfig",
    "ScanReport",
    "ScanStats",
    "ScanWarning",
    "WarnCode",
    "get_profile",
    "reconstruct_cpe",
    "render_text",
    "scan",
    "serialize_report",
    "warning_lines",
]
