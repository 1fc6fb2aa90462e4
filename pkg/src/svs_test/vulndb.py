"""Local vulnerability snapshot: CPE and purl criteria, lookups, OSV ingestion."""

from __future__ import annotations

import enum
import functools
import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable

from .identifiers import (
    MalformedCpe,
    MalformedPurl,
    NaVersionPolicy,
    Purl,
    Wfn,
    cpe_names_match,
    format_cpe,
    parse_cpe,
    parse_purl,
    purl_coordinates_match,
)

log = logging.getLogger(__name__)

SNAPSHOT_SCHEMA = "svs-test/vulndb/1"


class VersionlessPolicy(enum.Enum):
    WILDCARD = "WILDCARD"
    SKIP = "SKIP"


class MalformedOsvRecord(ValueError):
    pass


# ---------------------------------------------------------------- versions

_PRE_SPLIT = re.compile(r"-(?=[A-Za-z])")


def _segment_key(seg: str) -> tuple:
    return tuple(int(r) if r.isdigit() else r.casefold() for r in re.findall(r"\d+|\D+", seg))


def _segments(part: str) -> list[tuple]:
    return [_segment_key(s) for s in re.split(r"[.\-]", part) if s != ""]


def _cmp_runs(a: tuple, b: tuple) -> int:
    for x, y in zip(a, b):
        if x == y:
            continue
        if isinstance(x, int) != isinstance(y, int):
            return -1 if isinstance(x, int) else 1
        return -1 if x < y else 1
    return (len(a) > len(b)) - (len(a) < len(b))


def _cmp_lists(a: list[tuple], b: list[tuple]) -> int:
    for x, y in zip(a, b):
        c = _cmp_runs(x, y)
        if c:
            return c
    return (len(a) > len(b)) - (len(a) < len(b))


def _split_pre(v: str) -> tuple[str, str]:
    parts = _PRE_SPLIT.split(v, 1)
    return parts[0], parts[1] if len(parts) > 1 else ""


def compare_versions(a: str, b: str) -> int:
    """Order two version strings; returns -1, 0 or 1.

    Segments split on ``.`` and ``-`` compare numerically where numeric and
    case-insensitively otherwise; an equal prefix makes the shorter version
    smaller. A ``-`` followed by a letter starts a pre-release tag, which
    sorts before the same version without one (``1.0.0-rc1 < 1.0.0``).
    """
    main_a, pre_a = _split_pre(a)
    main_b, pre_b = _split_pre(b)
    c = _cmp_lists(_segments(main_a), _segments(main_b))
    if c:
        return c
    if bool(pre_a) != bool(pre_b):
        return -1 if pre_a else 1
    return _cmp_lists(_segments(pre_a), _segments(pre_b))


version_key = functools.cmp_to_key(compare_versions)


@dataclass(frozen=True)
class VersionRange:
    introduced: str = "0"
    fixed: str | None = None
    last_affected: str | None = None

    def __post_init__(self):
        if self.fixed is not None and self.last_affected is not None:
            raise ValueError("at most one of fixed / last_affected")
        bound = self.fixed or self.last_affected
        if bound is not None and self.introduced != "0" and compare_versions(self.introduced, bound) > 0:
            raise ValueError(f"introduced {self.introduced} after bound {bound}")

    def contains(self, version: str) -> bool:
        if self.introduced != "0" and compare_versions(version, self.introduced) < 0:
            return False
        if self.fixed is not None:
            return compare_versions(version, self.fixed) < 0
        if self.last_affected is not None:
            return compare_versions(version, self.last_affected) <= 0
        return True

    def to_json(self) -> dict:
        out = {"introduced": self.introduced}
        if self.fixed is not None:
            out["fixed"] = self.fixed
        if self.last_affected is not None:
            out["last_affected"] = self.last_affected
        return out

    @classmethod
    def from_json(cls, d: dict) -> VersionRange:
        return cls(d.get("introduced", "0"), d.get("fixed"), d.get("last_affected"))


# ---------------------------------------------------------------- records


@dataclass(frozen=True)
class CpeCriterion:
    pattern: Wfn
    version_range: VersionRange | None = None

    def to_json(self) -> dict:
        return {
            "pattern": format_cpe(self.pattern),
            "version_range": self.version_range.to_json() if self.version_range else None,
        }


@dataclass(frozen=True)
class PurlCriterion:
    coordinates: Purl
    ranges: tuple[VersionRange, ...] = ()
    explicit_versions: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.coordinates.version is not None:
            raise ValueError("purl criterion coordinates must not carry a version")

    def affects(self, version: str) -> bool:
        if self.explicit_versions and version in self.explicit_versions:
            return True
        if not self.ranges and not self.explicit_versions:
            return True
        return any(r.contains(version) for r in self.ranges)

    def to_json(self) -> dict:
        return {
            "coordinates": str(self.coordinates),
            "ranges": [r.to_json() for r in self.ranges],
            "explicit_versions": list(self.explicit_versions) if self.explicit_versions is not None else None,
        }


def _canon(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class VulnRecord:
    id: str
    aliases: tuple[str, ...] = ()
    summary: str = ""
    cpe_criteria: tuple[CpeCriterion, ...] = ()
    purl_criteria: tuple[PurlCriterion, ...] = ()

    @property
    def identifiers(self) -> tuple[str, ...]:
        return (self.id, *self.aliases)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "aliases": sorted(self.aliases),
            "summary": self.summary,
            "cpe_criteria": sorted((c.to_json() for c in self.cpe_criteria), key=_canon),
            "purl_criteria": sorted((c.to_json() for c in self.purl_criteria), key=_canon),
        }

    @classmethod
    def from_json(cls, d: dict) -> VulnRecord:
        return cls(
            id=d["id"],
            aliases=tuple(d.get("aliases", ())),
            summary=d.get("summary", ""),
            cpe_criteria=tuple(
                CpeCriterion(
                    parse_cpe(c["pattern"]),
                    VersionRange.from_json(c["version_range"]) if c.get("version_range") else None,
                )
                for c in d.get("cpe_criteria", ())
            ),
            purl_criteria=tuple(
                PurlCriterion(
                    parse_purl(c["coordinates"]),
                    tuple(VersionRange.from_json(r) for r in c.get("ranges", ())),
                    tuple(c["explicit_versions"]) if c.get("explicit_versions") is not None else None,
                )
                for c in d.get("purl_criteria", ())
            ),
        )


def content_digest(records: Iterable[VulnRecord]) -> str:
    body = _canon(sorted((r.to_json() for r in records), key=lambda d: d["id"]))
    return "sha256:" + hashlib.sha256(body.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Snapshot:
    records: tuple[VulnRecord, ...]
    created_at: str = ""
    snapshot_id: str = field(default="", init=False)

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate record id in snapshot")
        taken = set(ids)
        for r in self.records:
            clash = taken.intersection(a for a in r.aliases if a != r.id)
            if clash:
                raise ValueError(f"alias {sorted(clash)} of {r.id} collides with a record id")
        object.__setattr__(self, "records", tuple(sorted(self.records, key=lambda r: r.id)))
        object.__setattr__(self, "snapshot_id", content_digest(self.records))

    def get(self, vuln_id: str) -> VulnRecord | None:
        for r in self.records:
            if vuln_id in r.identifiers:
                return r
        return None

    def to_json(self) -> dict:
        return {
            "schema": SNAPSHOT_SCHEMA,
            "snapshot_id": self.snapshot_id,
            "created_at": self.created_at,
            "records": [r.to_json() for r in self.records],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, d: dict) -> Snapshot:
        if d.get("schema") != SNAPSHOT_SCHEMA:
            raise ValueError(f"unsupported snapshot schema {d.get('schema')!r}")
        snap = cls(tuple(VulnRecord.from_json(r) for r in d.get("records", ())), d.get("created_at", ""))
        if d.get("snapshot_id") and d["snapshot_id"] != snap.snapshot_id:
            raise ValueError("snapshot_id does not match record content")
        return snap


def load_snapshot(path: str | Path) -> Snapshot:
    return Snapshot.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def save_snapshot(snapshot: Snapshot, path: str | Path) -> None:
    Path(path).write_text(snapshot.dumps(), encoding="utf-8")


def seed_snapshot() -> Snapshot:
    """Ground-truth snapshot shipped with the package, consistent with the test library."""
    text = resources.files("svs_test").joinpath("data/seed_snapshot.json").read_text(encoding="utf-8")
    return Snapshot.from_json(json.loads(text))


# ---------------------------------------------------------------- lookups


def lookup_by_cpe(
    snapshot: Snapshot,
    component: Wfn,
    policy: NaVersionPolicy = NaVersionPolicy.TREAT_NA_VERSION_AS_UNKNOWN,
) -> list[tuple[VulnRecord, CpeCriterion]]:
    concrete = component.version.is_literal and not component.version.has_wildcards
    hits = []
    for rec in snapshot.records:
        for crit in rec.cpe_criteria:
            if not cpe_names_match(component, crit.pattern, policy):
                continue
            if crit.version_range and concrete and not crit.version_range.contains(component.version.text):
                continue
            hits.append((rec, crit))
            break
    return hits


def lookup_by_purl(
    snapshot: Snapshot,
    component: Purl,
    versionless_policy: VersionlessPolicy = VersionlessPolicy.WILDCARD,
) -> list[tuple[VulnRecord, PurlCriterion]]:
    if component.version is None and versionless_policy is VersionlessPolicy.SKIP:
        return []
    hits = []
    for rec in snapshot.records:
        for crit in rec.purl_criteria:
            if not purl_coordinates_match(component, crit.coordinates):
                continue
            if component.version is not None and not crit.affects(component.version):
                continue
            hits.append((rec, crit))
            break
    return hits


# ---------------------------------------------------------------- OSV ingestion

_ECOSYSTEM_TYPES = {
    "npm": "npm",
    "pypi": "pypi",
    "maven": "maven",
    "go": "golang",
    "crates.io": "cargo",
    "rubygems": "gem",
    "nuget": "nuget",
    "packagist": "composer",
    "hex": "hex",
    "pub": "pub",
    "swifturl": "swift",
}
_DISTRO_TYPES = {"debian": ("deb", "debian"), "ubuntu": ("deb", "ubuntu"), "alpine": ("apk", "alpine")}


@dataclass
class IngestProblem:
    source: str
    detail: str


def _package_purl(pkg: dict) -> Purl:
    if pkg.get("purl"):
        try:
            return parse_purl(pkg["purl"]).without_version()
        except MalformedPurl as exc:
            raise MalformedOsvRecord(f"bad package purl: {exc}") from None
    eco = pkg.get("ecosystem")
    name = pkg.get("name")
    if not isinstance(eco, str) or not isinstance(name, str) or not name:
        raise MalformedOsvRecord("package needs ecosystem and name, or purl")
    base = eco.split(":", 1)[0].lower()
    if base in _DISTRO_TYPES:
        ptype, ns = _DISTRO_TYPES[base]
        return Purl(type=ptype, namespace=ns, name=name)
    if base not in _ECOSYSTEM_TYPES:
        raise MalformedOsvRecord(f"unsupported ecosystem {eco!r}")
    ptype = _ECOSYSTEM_TYPES[base]
    if ptype == "maven":
        group, sep, artifact = name.partition(":")
        if not sep:
            raise MalformedOsvRecord(f"maven name must be group:artifact, got {name!r}")
        return Purl(type="maven", namespace=group, name=artifact)
    if ptype == "npm" and name.startswith("@") and "/" in name:
        scope, _, pkg_name = name.partition("/")
        return Purl(type="npm", namespace=scope, name=pkg_name)
    if ptype == "golang" and "/" in name:
        ns, _, last = name.rpartition("/")
        return Purl(type="golang", namespace=ns, name=last)
    return parse_purl(f"pkg:{ptype}/{name}").without_version()


def _ranges(affected: dict) -> list[VersionRange]:
    out = []
    for rng in affected.get("ranges") or []:
        if rng.get("type") not in ("ECOSYSTEM", "SEMVER"):
            continue
        start = None
        for ev in rng.get("events") or []:
            if "introduced" in ev:
                start = str(ev["introduced"])
            elif "fixed" in ev and start is not None:
                out.append(VersionRange(start, fixed=str(ev["fixed"])))
                start = None
            elif "last_affected" in ev and start is not None:
                out.append(VersionRange(start, last_affected=str(ev["last_affected"])))
                start = None
            elif "limit" in ev:
                continue
        if start is not None:
            out.append(VersionRange(start))
    return list(dict.fromkeys(out))


def _record_from_osv(doc: dict) -> VulnRecord:
    if not isinstance(doc, dict) or not isinstance(doc.get("id"), str) or not doc["id"]:
        raise MalformedOsvRecord("missing id")
    aliases = [a for a in doc.get("aliases") or [] if isinstance(a, str)]
    rec_id = doc["id"]
    if not rec_id.startswith("CVE-"):
        cves = sorted(a for a in aliases if a.startswith("CVE-"))
        if cves:
            aliases = [rec_id] + [a for a in aliases if a != cves[0]]
            rec_id = cves[0]
    affected = doc.get("affected")
    if not isinstance(affected, list) or not affected:
        raise MalformedOsvRecord(f"{doc['id']}: no affected entries")
    purl_criteria, cpe_criteria = [], []
    for aff in affected:
        if not isinstance(aff, dict):
            raise MalformedOsvRecord(f"{doc['id']}: affected entry is not an object")
        ranges = _ranges(aff)
        versions = [str(v) for v in aff.get("versions") or []]
        if isinstance(aff.get("package"), dict):
            purl_criteria.append(
                PurlCriterion(_package_purl(aff["package"]), tuple(ranges), tuple(sorted(set(versions))) or None)
            )
        cpes = (aff.get("database_specific") or {}).get("cpes") or []
        for cpe in cpes:
            try:
                pattern = parse_cpe(cpe)
            except MalformedCpe as exc:
                raise MalformedOsvRecord(f"{doc['id']}: {exc}") from None
            if pattern.version.is_any and ranges:
                cpe_criteria.extend(CpeCriterion(pattern, r) for r in ranges)
            else:
                cpe_criteria.append(CpeCriterion(pattern))
    return VulnRecord(
        id=rec_id,
        aliases=tuple(sorted(set(aliases) - {rec_id})),
        summary=str(doc.get("summary") or ""),
        cpe_criteria=tuple(cpe_criteria),
        purl_criteria=tuple(purl_criteria),
    )


def _merge(a: VulnRecord, b: VulnRecord) -> VulnRecord:
    def union(xs, ys):
        return tuple(sorted(set(xs) | set(ys), key=lambda c: _canon(c.to_json())))

    return VulnRecord(
        id=a.id,
        aliases=tuple(sorted(set(a.aliases) | set(b.aliases))),
        summary=min((s for s in (a.summary, b.summary) if s), default=""),
        cpe_criteria=union(a.cpe_criteria, b.cpe_criteria),
        purl_criteria=union(a.purl_criteria, b.purl_criteria),
    )


def ingest_osv_documents(
    documents: Iterable[tuple[str, object]],
    *,
    created_at: str | None = None,
    problems: list[IngestProblem] | None = None,
) -> Snapshot:
    """Build a snapshot from ``(source name, parsed JSON)`` pairs.

    A source may hold one OSV document or an array of them. Malformed
    documents are skipped and reported through ``problems``.
    """
    merged: dict[str, VulnRecord] = {}
    for source, payload in documents:
        docs = payload if isinstance(payload, list) else [payload]
        for doc in docs:
            try:
                rec = _record_from_osv(doc)
            except (MalformedOsvRecord, ValueError) as exc:
                log.warning("skipping OSV record from %s: %s", source, exc)
                if problems is not None:
                    problems.append(IngestProblem(source, str(exc)))
                continue
            merged[rec.id] = _merge(merged[rec.id], rec) if rec.id in merged else rec
    # aliases that name another record are dropped rather than colliding
    ids = set(merged)
    records = tuple(
        VulnRecord(r.id, tuple(a for a in r.aliases if a not in ids), r.summary, r.cpe_criteria, r.purl_criteria)
        for r in merged.values()
    )
    if created_at is None:
        created_at = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return Snapshot(records, created_at)


def ingest_osv(
    paths: Iterable[str | Path],
    *,
    created_at: str | None = None,
    problems: list[IngestProblem] | None = None,
) -> Snapshot:
    docs = []
    for p in paths:
        p = Path(p)
        try:
            docs.append((str(p), json.loads(p.read_text(encoding="utf-8"))))
        except (OSError, ValueError) as exc:
            log.warning("cannot read OSV file %s: %s", p, exc)
            if problems is not None:
                problems.append(IngestProblem(str(p), f"unreadable: {exc}"))
    return ingest_osv_documents(docs, created_at=created_at, problems=problems)
