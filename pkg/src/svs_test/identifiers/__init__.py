"""CPE 2.3 and package URL identifiers."""

from .cpe import (
    AttrKind,
    CpeAttribute,
    MalformedCpe,
    MatchRelation,
    NaVersionPolicy,
    Wfn,
    compare_attribute,
    cpe_names_match,
    format_cpe,
    parse_cpe,
)
from .purl import MalformedPurl, Purl, canonicalize_purl, parse_purl, purl_coordinates_match

__all__ = [
    "AttrKind",
    "CpeAttribute",
    "MalformedCpe",
    "MalformedPurl",
    "MatchRelation",
    "NaVersionPolicy",
    "Purl",
    "Wfn",
    "canonicalize_purl",
    "compare_attribute",
    "cpe_names_match",
    "format_cpe",
    "parse_cpe",
    "parse_purl",
    "purl_coordinates_match",
]
