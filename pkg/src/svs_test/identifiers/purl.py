"""Package URL parsing, canonical serialization and coordinate matching."""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from urllib.parse import quote, unquote


class MalformedPurl(ValueError):
    """The string cannot be read as a package URL."""


_TYPE_RE = re.compile(r"[a-z.+-][a-z0-9.+-]*")
_QUALIFIER_KEY_RE = re.compile(r"[a-z.\-_][a-z0-9.\-_]*")

# Types whose spec mandates case folding of namespace and/or name.
_LOWER_NAMESPACE = {"github", "bitbucket", "composer", "deb", "apk"}
_LOWER_NAME = {"github", "bitbucket", "composer", "deb", "apk", "pypi"}


@dataclass(frozen=True)
class Purl:
    type: str
    name: str
    namespace: str | None = None
    version: str | None = None
    qualifiers: tuple[tuple[str, str], ...] = ()
    subpath: str | None = None

    def __post_init__(self):
        if not self.type or not self.name:
            raise MalformedPurl("a purl needs at least a type and a name")

    def without_version(self) -> Purl:
        return replace(self, version=None)

    def __str__(self):
        return canonicalize_purl(self)


def _encode(segment: str) -> str:
    return quote(segment, safe="").replace("%3A", ":")


def _normalize(ptype: str, namespace: str | None, name: str) -> tuple[str | None, str]:
    if namespace and ptype in _LOWER_NAMESPACE:
        namespace = namespace.lower()
    if ptype in _LOWER_NAME:
        name = name.lower()
    if ptype == "pypi":
        name = name.replace("_", "-")
    return namespace, name


def _clean_subpath(raw: str) -> str | None:
    segs = [unquote(s) for s in raw.strip("/").split("/")]
    segs = [s for s in segs if s not in ("", ".", "..")]
    return "/".join(segs) or None


def parse_purl(text: str) -> Purl:
    if not isinstance(text, str):
        raise MalformedPurl(f"not a string: {text!r}")
    scheme, sep, rest = text.partition(":")
    if not sep or scheme.lower() != "pkg":
        raise MalformedPurl(f"missing pkg: scheme: {text!r}")
    rest = rest.lstrip("/")

    subpath = None
    if "#" in rest:
        rest, raw_subpath = rest.split("#", 1)
        subpath = _clean_subpath(raw_subpath)

    qualifiers: dict[str, str] = {}
    if "?" in rest:
        rest, raw_q = rest.split("?", 1)
        for pair in raw_q.split("&"):
            if not pair:
                continue
            key, eq, value = pair.partition("=")
            key = key.lower()
            if not eq or not _QUALIFIER_KEY_RE.fullmatch(key):
                raise MalformedPurl(f"bad qualifier {pair!r} in {text!r}")
            if key in qualifiers:
                raise MalformedPurl(f"duplicate qualifier {key!r} in {text!r}")
            value = unquote(value)
            if value:
                qualifiers[key] = value

    rest = rest.strip("/")
    ptype, slash, path = rest.partition("/")
    ptype = ptype.lower()
    if not _TYPE_RE.fullmatch(ptype):
        raise MalformedPurl(f"missing or invalid type in {text!r}")
    if not slash or not path:
        raise MalformedPurl(f"missing name in {text!r}")

    head, _, last = path.rpartition("/")
    version = None
    if "@" in last:
        last, version = last.rsplit("@", 1)
        version = unquote(version) or None
    name = unquote(last)
    if not name:
        raise MalformedPurl(f"missing name in {text!r}")
    ns_segments = [unquote(s) for s in head.split("/") if s]
    namespace = "/".join(ns_segments) or None
    namespace, name = _normalize(ptype, namespace, name)

    return Purl(
        type=ptype,
        namespace=namespace,
        name=name,
        version=version,
        qualifiers=tuple(sorted(qualifiers.items())),
        subpath=subpath,
    )


def canonicalize_purl(p: Purl) -> str:
    out = ["pkg:", p.type, "/"]
    if p.namespace:
        out.append("/".join(_encode(s) for s in p.namespace.split("/")))
        out.append("/")
    out.append(_encode(p.name))
    if p.version:
        out.append("@" + _encode(p.version))
    if p.qualifiers:
        out.append("?" + "&".join(f"{k}={_encode(v)}" for k, v in sorted(p.qualifiers)))
    if p.subpath:
        out.append("#" + "/".join(_encode(s) for s in p.subpath.split("/")))
    return "".join(out)


def purl_coordinates_match(component: Purl, criterion: Purl) -> bool:
    """Same type, namespace and name; versions, qualifiers and subpath ignored."""
    def key(p):
        return (p.type, (p.namespace or "").casefold(), p.name.casefold())

    return key(component) == key(criterion)
