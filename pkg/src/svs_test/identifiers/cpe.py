"""CPE 2.3 formatted-string binding and attribute-level name matching.

Literal attribute values are kept in well-formed-name (WFN) form: every
non-alphanumeric character other than ``_`` is backslash-quoted, while the
unquoted metacharacters ``*`` and ``?`` are wildcards. Blank formatted-string
fields are read as logical ANY.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, fields
from functools import lru_cache


class MalformedCpe(ValueError):
    """The string is not a usable CPE 2.3 formatted string."""


class AttrKind(enum.Enum):
    ANY = "ANY"
    NA = "NA"
    LITERAL = "LITERAL"


class MatchRelation(enum.Enum):
    EQUAL = "EQUAL"
    SUBSET = "SUBSET"
    SUPERSET = "SUPERSET"
    DISJOINT = "DISJOINT"


class NaVersionPolicy(enum.Enum):
    TREAT_NA_VERSION_AS_UNKNOWN = "TREAT_NA_VERSION_AS_UNKNOWN"
    STRICT = "STRICT"


def _is_plain(ch: str) -> bool:
    return ch.isascii() and (ch.isalnum() or ch == "_")


@dataclass(frozen=True)
class CpeAttribute:
    kind: AttrKind
    literal: str | None = None

    def __post_init__(self):
        if (self.kind is AttrKind.LITERAL) != (self.literal is not None):
            raise ValueError("literal must be set iff kind is LITERAL")
        if self.kind is AttrKind.LITERAL:
            _check_wfn_literal(self.literal)

    @classmethod
    def any(cls) -> CpeAttribute:
        return _ANY

    @classmethod
    def na(cls) -> CpeAttribute:
        return _NA

    @classmethod
    def from_text(cls, text: str) -> CpeAttribute:
        """Literal from plain text; every special character is quoted."""
        if not text:
            raise ValueError("empty literal")
        return cls(AttrKind.LITERAL, "".join(c if _is_plain(c) else "\\" + c for c in text))

    @classmethod
    def from_token(cls, token: str) -> CpeAttribute:
        """Read one formatted-string field."""
        if token in ("", "*"):
            return _ANY
        if token == "-":
            return _NA
        out = []
        i = 0
        while i < len(token):
            ch = token[i]
            if ch == "\\":
                if i + 1 >= len(token):
                    raise MalformedCpe(f"dangling escape in {token!r}")
                out.append("\\" + token[i + 1])
                i += 2
                continue
            if ch in "*?" or _is_plain(ch):
                out.append(ch)
            elif ch.isspace() or not ch.isprintable():
                raise MalformedCpe(f"illegal character {ch!r} in {token!r}")
            else:
                out.append("\\" + ch)
            i += 1
        try:
            return cls(AttrKind.LITERAL, "".join(out))
        except ValueError as exc:
            raise MalformedCpe(str(exc)) from None

    @property
    def is_any(self) -> bool:
        return self.kind is AttrKind.ANY

    @property
    def is_na(self) -> bool:
        return self.kind is AttrKind.NA

    @property
    def is_literal(self) -> bool:
        return self.kind is AttrKind.LITERAL

    @property
    def has_wildcards(self) -> bool:
        if not self.is_literal:
            return False
        lead, _, trail = _split_wildcards(self.literal)
        return bool(lead or trail)

    @property
    def text(self) -> str | None:
        """Literal with quoting removed (wildcards shown as-is)."""
        if not self.is_literal:
            return None
        return re.sub(r"\\(.)", r"\1", self.literal)

    def to_token(self) -> str:
        if self.is_any:
            return "*"
        if self.is_na:
            return "-"
        token = re.sub(r"\\([-._])", r"\1", self.literal)
        # a lone hyphen would read back as NA
        return "\\-" if token == "-" else token

    def __repr__(self):
        if self.is_literal:
            return f"CpeAttribute({self.literal!r})"
        return f"CpeAttribute.{self.kind.value}"


_ANY = CpeAttribute(AttrKind.ANY)
_NA = CpeAttribute(AttrKind.NA)


def _tokens(wfn: str) -> list[tuple[bool, str]]:
    """(is_wildcard, text) per logical character; quoted pairs stay together."""
    out = []
    i = 0
    while i < len(wfn):
        if wfn[i] == "\\":
            if i + 1 >= len(wfn):
                raise ValueError(f"dangling escape in {wfn!r}")
            out.append((False, wfn[i : i + 2]))
            i += 2
        else:
            out.append((wfn[i] in "*?", wfn[i]))
            i += 1
    return out


def _split_wildcards(wfn: str) -> tuple[str, str, str]:
    """Split a WFN literal into (leading wildcards, body, trailing wildcards)."""
    toks = _tokens(wfn)
    i = 0
    while i < len(toks) and toks[i][0]:
        i += 1
    j = len(toks)
    while j > i and toks[j - 1][0]:
        j -= 1
    join = lambda ts: "".join(t for _, t in ts)  # noqa: E731
    return join(toks[:i]), join(toks[i:j]), join(toks[j:])


def _check_wfn_literal(wfn: str) -> None:
    if not wfn:
        raise ValueError("empty literal")
    lead, body, trail = _split_wildcards(wfn)
    if any(w for w, _ in _tokens(body)):
        raise ValueError(f"wildcard only allowed at start or end: {wfn!r}")
    for run in (lead, trail):
        if run and run != "*" and set(run) != {"?"}:
            raise ValueError(f"mixed or repeated wildcards: {wfn!r}")
    if not body and lead and trail:
        raise ValueError(f"ambiguous wildcard run: {wfn!r}")
    if wfn == "*":
        raise ValueError("bare asterisk is logical ANY, not a literal")


@dataclass(frozen=True)
class Wfn:
    """CPE well-formed name: eleven attributes, each ANY/NA/literal."""

    part: CpeAttribute = _ANY
    vendor: CpeAttribute = _ANY
    product: CpeAttribute = _ANY
    version: CpeAttribute = _ANY
    update: CpeAttribute = _ANY
    edition: CpeAttribute = _ANY
    language: CpeAttribute = _ANY
    sw_edition: CpeAttribute = _ANY
    target_sw: CpeAttribute = _ANY
    target_hw: CpeAttribute = _ANY
    other: CpeAttribute = _ANY

    ATTRIBUTES = (
        "part", "vendor", "product", "version", "update", "edition",
        "language", "sw_edition", "target_sw", "target_hw", "other",
    )

    def __post_init__(self):
        if self.part.is_literal and self.part.literal not in ("a", "o", "h"):
            raise ValueError(f"part must be a, o or h, got {self.part.text!r}")

    def values(self) -> tuple[CpeAttribute, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))

    def replace(self, **changes: CpeAttribute) -> Wfn:
        return Wfn(**{**{n: getattr(self, n) for n in self.ATTRIBUTES}, **changes})


def split_fields(s: str) -> list[str]:
    out, cur, i = [], [], 0
    while i < len(s):
        ch = s[i]
        if ch == "\\" and i + 1 < len(s):
            cur.append(s[i : i + 2])
            i += 2
            continue
        if ch == ":":
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
        i += 1
    out.append("".join(cur))
    return out


def parse_cpe(formatted: str) -> Wfn:
    if not isinstance(formatted, str) or not formatted.lower().startswith("cpe:2.3:"):
        raise MalformedCpe(f"not a CPE 2.3 formatted string: {formatted!r}")
    parts = split_fields(formatted)
    if len(parts) != 13:
        raise MalformedCpe(f"expected 13 colon-separated fields, got {len(parts)}: {formatted!r}")
    attrs = [CpeAttribute.from_token(tok) for tok in parts[2:]]
    if attrs[0].is_literal:
        attrs[0] = CpeAttribute.from_token(attrs[0].literal.lower())
    try:
        return Wfn(*attrs)
    except ValueError as exc:
        raise MalformedCpe(str(exc)) from None


def format_cpe(wfn: Wfn) -> str:
    return "cpe:2.3:" + ":".join(a.to_token() for a in wfn.values())


@lru_cache(maxsize=1024)
def _wildcard_regex(wfn: str) -> re.Pattern:
    lead, body, trail = _split_wildcards(wfn)

    def wild(run: str) -> str:
        return ".*" if run == "*" else "." * len(run)

    literal_body = re.sub(r"\\(.)", r"\1", body)
    return re.compile(wild(lead) + re.escape(literal_body) + wild(trail), re.IGNORECASE | re.DOTALL)


def compare_attribute(source: CpeAttribute, target: CpeAttribute) -> MatchRelation:
    if source.is_any:
        return MatchRelation.EQUAL if target.is_any else MatchRelation.SUPERSET
    if target.is_any:
        return MatchRelation.SUBSET
    if source.is_na or target.is_na:
        return MatchRelation.EQUAL if source.is_na and target.is_na else MatchRelation.DISJOINT
    if source.literal.casefold() == target.literal.casefold():
        return MatchRelation.EQUAL
    if source.has_wildcards and not target.has_wildcards:
        if _wildcard_regex(source.literal).fullmatch(target.text):
            return MatchRelation.SUPERSET
    elif target.has_wildcards and not source.has_wildcards:
        if _wildcard_regex(target.literal).fullmatch(source.text):
            return MatchRelation.SUBSET
    return MatchRelation.DISJOINT


def cpe_names_match(
    component: Wfn,
    criterion: Wfn,
    policy: NaVersionPolicy = NaVersionPolicy.TREAT_NA_VERSION_AS_UNKNOWN,
) -> bool:
    if policy is NaVersionPolicy.TREAT_NA_VERSION_AS_UNKNOWN and component.version.is_na:
        component = component.replace(version=_ANY)
    return all(
        compare_attribute(crit, comp) is not MatchRelation.DISJOINT
        for crit, comp in zip(criterion.values(), component.values())
    )
