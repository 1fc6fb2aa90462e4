"""CycloneDX JSON reader with root-order and root-key validation.

Parsing is lenient: structural problems become ``ValidationIssue`` entries and
everything that can still be extracted is extracted. Whether a BOM with issues
is rejected is the consumer's call.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .identifiers import MalformedCpe, MalformedPurl, parse_cpe, parse_purl

# Root-level property order of the CycloneDX 1.6 JSON schema.
ROOT_ORDER = (
    "$schema",
    "bomFormat",
    "specVersion",
    "serialNumber",
    "version",
    "metadata",
    "components",
    "services",
    "externalReferences",
    "dependencies",
    "compositions",
    "properties",
    "vulnerabilities",
    "annotations",
    "formulation",
    "declarations",
    "definitions",
    "signature",
)
_ROOT_RANK = {k: i for i, k in enumerate(ROOT_ORDER)}

VEX_STATUSES = ("affected", "unaffected", "unknown")
_SUPPRESSING_STATES = {"not_affected", "false_positive", "resolved"}


class NotJson(ValueError):
    pass


class NotCycloneDx(ValueError):
    pass


class IssueCode(str, enum.Enum):
    ROOT_ORDER = "ROOT_ORDER"
    UNKNOWN_ROOT_KEY = "UNKNOWN_ROOT_KEY"
    SCHEMA = "SCHEMA"


@dataclass(frozen=True)
class ValidationIssue:
    code: IssueCode
    detail: str
    location: str


@dataclass(frozen=True)
class Component:
    name: str
    ctype: str = "library"
    bom_ref: str | None = None
    publisher: str | None = None
    version_field: str | None = None
    cpe: str | None = None
    purl: str | None = None
    raw_order: tuple[tuple[str, int], ...] = ()
    index: int = 0

    @property
    def ref(self) -> str:
        """bom-ref, or the 1-based position when the component has none."""
        return self.bom_ref or f"#{self.index + 1}"

    @property
    def label(self) -> str:
        if self.bom_ref:
            return f"{self.bom_ref} ({self.name})"
        return f"#{self.index + 1} ({self.name})"

    def effective_version(self) -> str | None:
        if self.version_field:
            return self.version_field
        if self.purl:
            try:
                v = parse_purl(self.purl).version
            except MalformedPurl:
                v = None
            if v:
                return v
        if self.cpe:
            try:
                attr = parse_cpe(self.cpe).version
            except MalformedCpe:
                return None
            if attr.is_literal and not attr.has_wildcards:
                return attr.text
        return None


@dataclass(frozen=True)
class Metadata:
    timestamp: str | None = None
    component: Component | None = None
    tools: tuple[str, ...] = ()


@dataclass(frozen=True)
class DependencyEdge:
    ref: str
    depends_on: tuple[str, ...] = ()


@dataclass(frozen=True)
class VersionStatus:
    version: str
    status: str


@dataclass(frozen=True)
class Affects:
    ref: str
    versions: tuple[VersionStatus, ...] = ()


@dataclass(frozen=True)
class VexStatement:
    vuln_id: str
    source_name: str | None = None
    analysis_state: str | None = None
    affects: tuple[Affects, ...] = ()


@dataclass(frozen=True)
class Bom:
    spec_version: str
    serial_number: str | None = None
    metadata: Metadata | None = None
    components: tuple[Component, ...] = ()
    dependencies: tuple[DependencyEdge, ...] = ()
    vulnerabilities: tuple[VexStatement, ...] = ()
    validation_issues: tuple[ValidationIssue, ...] = ()
    root_keys: tuple[str, ...] = field(default=(), compare=False)

    def issues(self, *codes: IssueCode) -> list[ValidationIssue]:
        return [i for i in self.validation_issues if not codes or i.code in codes]


class _Obj(dict):
    """dict that remembers source key order, duplicates included."""

    keys_in_order: list[str]
    duplicates: list[str]


def _pairs_hook(pairs):
    obj = _Obj()
    obj.keys_in_order = [k for k, _ in pairs]
    obj.duplicates = []
    for k, v in pairs:
        if k in obj:
            obj.duplicates.append(k)
        obj[k] = v
    return obj


def _walk_duplicates(node, pointer, issues):
    if isinstance(node, _Obj):
        for k in dict.fromkeys(node.duplicates):
            issues.append(ValidationIssue(IssueCode.SCHEMA, f"duplicate key {k!r} (last value wins)", f"{pointer}/{_escape_pointer(k)}"))
        for k, v in node.items():
            _walk_duplicates(v, f"{pointer}/{_escape_pointer(k)}", issues)
    elif isinstance(node, list):
        for i, v in enumerate(node):
            _walk_duplicates(v, f"{pointer}/{i}", issues)


def _escape_pointer(key: str) -> str:
    return key.replace("~", "~0").replace("/", "~1")


def _opt_str(obj, key):
    v = obj.get(key)
    return v if isinstance(v, str) and v else None


def _check_root(keys: list[str], issues: list[ValidationIssue]) -> None:
    for k in keys:
        if k not in _ROOT_RANK:
            issues.append(ValidationIssue(IssueCode.UNKNOWN_ROOT_KEY, f"unknown root-level element {k!r}", k))
    known = [k for k in dict.fromkeys(keys) if k in _ROOT_RANK]
    highest = -1
    for k in known:
        if _ROOT_RANK[k] < highest:
            expected = sorted(known, key=_ROOT_RANK.__getitem__)
            issues.append(
                ValidationIssue(
                    IssueCode.ROOT_ORDER,
                    f"root elements out of order: found {known}, expected {expected}",
                    k,
                )
            )
            return
        highest = _ROOT_RANK[k]


def _component(obj, pointer, index, issues) -> Component | None:
    if not isinstance(obj, dict):
        issues.append(ValidationIssue(IssueCode.SCHEMA, "component is not an object", pointer))
        return None
    name = _opt_str(obj, "name")
    if name is None:
        issues.append(ValidationIssue(IssueCode.SCHEMA, "component without name", pointer))
        return None
    ctype = obj.get("type")
    if not isinstance(ctype, str):
        issues.append(ValidationIssue(IssueCode.SCHEMA, "component without type", pointer))
        ctype = "library"
    publisher = _opt_str(obj, "publisher")
    if publisher is None and isinstance(obj.get("supplier"), dict):
        publisher = _opt_str(obj["supplier"], "name")
    order = getattr(obj, "keys_in_order", list(obj))
    raw_order = tuple((k, order.index(k)) for k in ("cpe", "purl") if k in order)
    return Component(
        name=name,
        ctype=ctype,
        bom_ref=_opt_str(obj, "bom-ref"),
        publisher=publisher,
        version_field=_opt_str(obj, "version"),
        cpe=_opt_str(obj, "cpe"),
        purl=_opt_str(obj, "purl"),
        raw_order=raw_order,
        index=index,
    )


def _components(items, pointer, issues, out):
    if items is None:
        return
    if not isinstance(items, list):
        issues.append(ValidationIssue(IssueCode.SCHEMA, "components is not an array", pointer))
        return
    for i, obj in enumerate(items):
        comp = _component(obj, f"{pointer}/{i}", len(out), issues)
        if comp is not None:
            out.append(comp)
        if isinstance(obj, dict):
            _components(obj.get("components"), f"{pointer}/{i}/components", issues, out)


def _vex(items, issues) -> list[VexStatement]:
    if items is None:
        return []
    if not isinstance(items, list):
        issues.append(ValidationIssue(IssueCode.SCHEMA, "vulnerabilities is not an array", "/vulnerabilities"))
        return []
    out = []
    for i, v in enumerate(items):
        ptr = f"/vulnerabilities/{i}"
        if not isinstance(v, dict) or not _opt_str(v, "id"):
            issues.append(ValidationIssue(IssueCode.SCHEMA, "vulnerability without id", ptr))
            continue
        analysis = v.get("analysis") if isinstance(v.get("analysis"), dict) else {}
        source = v.get("source") if isinstance(v.get("source"), dict) else {}
        affects = []
        for j, a in enumerate(v.get("affects") or []):
            if not isinstance(a, dict) or not _opt_str(a, "ref"):
                issues.append(ValidationIssue(IssueCode.SCHEMA, "affects entry without ref", f"{ptr}/affects/{j}"))
                continue
            versions = []
            for k, vs in enumerate(a.get("versions") or []):
                status = vs.get("status", "affected") if isinstance(vs, dict) else None
                if status not in VEX_STATUSES:
                    issues.append(ValidationIssue(IssueCode.SCHEMA, f"bad version status {status!r}", f"{ptr}/affects/{j}/versions/{k}"))
                    continue
                if _opt_str(vs, "version"):
                    versions.append(VersionStatus(vs["version"], status))
            affects.append(Affects(a["ref"], tuple(versions)))
        out.append(
            VexStatement(
                vuln_id=v["id"],
                source_name=_opt_str(source, "name"),
                analysis_state=_opt_str(analysis, "state"),
                affects=tuple(affects),
            )
        )
    return out


def parse_bom(raw: bytes | str) -> Bom:
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise NotJson(f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(raw, object_pairs_hook=_pairs_hook)
    except json.JSONDecodeError as exc:
        raise NotJson(str(exc)) from None
    if not isinstance(doc, dict) or doc.get("bomFormat") != "CycloneDX":
        raise NotCycloneDx('missing bomFormat "CycloneDX"')

    issues: list[ValidationIssue] = []
    _walk_duplicates(doc, "", issues)
    _check_root(doc.keys_in_order, issues)

    spec_version = doc.get("specVersion")
    if not isinstance(spec_version, str):
        issues.append(ValidationIssue(IssueCode.SCHEMA, "missing specVersion", "/specVersion"))
        spec_version = ""

    metadata = None
    if isinstance(doc.get("metadata"), dict):
        md = doc["metadata"]
        md_comp = _component(md["component"], "/metadata/component", -1, issues) if "component" in md else None
        tools = md.get("tools")
        if isinstance(tools, dict):
            tools = tools.get("components", [])
        names = tuple(t["name"] for t in tools or [] if isinstance(t, dict) and isinstance(t.get("name"), str))
        metadata = Metadata(timestamp=_opt_str(md, "timestamp"), component=md_comp, tools=names)

    components: list[Component] = []
    _components(doc.get("components"), "/components", issues, components)

    deps = []
    for i, d in enumerate(doc.get("dependencies") or []):
        if isinstance(d, dict) and _opt_str(d, "ref"):
            deps.append(DependencyEdge(d["ref"], tuple(x for x in d.get("dependsOn") or [] if isinstance(x, str))))
        else:
            issues.append(ValidationIssue(IssueCode.SCHEMA, "dependency without ref", f"/dependencies/{i}"))

    return Bom(
        spec_version=spec_version,
        serial_number=_opt_str(doc, "serialNumber"),
        metadata=metadata,
        components=tuple(components),
        dependencies=tuple(deps),
        vulnerabilities=tuple(_vex(doc.get("vulnerabilities"), issues)),
        validation_issues=tuple(issues),
        root_keys=tuple(doc.keys_in_order),
    )


def _resolve(bom: Bom) -> dict[str, Component]:
    return {c.bom_ref: c for c in bom.components if c.bom_ref}


def vex_suppressions(bom: Bom) -> dict[tuple[str, str], str]:
    """Map (component bom-ref, vulnerability id) to ``suppressed`` or ``confirmed``."""
    by_ref = _resolve(bom)
    out: dict[tuple[str, str], str] = {}
    for stmt in bom.vulnerabilities:
        for aff in stmt.affects:
            comp = by_ref.get(aff.ref)
            if comp is None:
                continue
            key = (aff.ref, stmt.vuln_id)
            version = comp.effective_version()
            if aff.versions:
                for vs in aff.versions:
                    if version is not None and vs.version == version:
                        if vs.status == "unaffected":
                            out[key] = "suppressed"
                        elif vs.status == "affected":
                            out[key] = "confirmed"
            elif stmt.analysis_state in _SUPPRESSING_STATES:
                out[key] = "suppressed"
            elif stmt.analysis_state:
                out[key] = "confirmed"
    return out


def dangling_vex_refs(bom: Bom) -> list[tuple[str, str]]:
    """(ref, vulnerability id) pairs whose ref names no component."""
    by_ref = _resolve(bom)
    return [(a.ref, s.vuln_id) for s in bom.vulnerabilities for a in s.affects if a.ref not in by_ref]


__all__ = [
    "Affects",
    "Bom",
    "Component",
    "DependencyEdge",
    "IssueCode",
    "Metadata",
    "NotCycloneDx",
    "NotJson",
    "ROOT_ORDER",
    "ValidationIssue",
    "VersionStatus",
    "VexStatement",
    "dangling_vex_refs",
    "parse_bom",
    "vex_suppressions",
]
