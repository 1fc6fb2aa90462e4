"""Shared helpers for running the library through built-in scanner configurations."""

import json
from pathlib import Path

from svs_test.evaluator import cell, evaluate_case
from svs_test.harness import AdapterConfig, AdapterKind, execute_suite
from svs_test.testlib import build_library

GOLDEN = Path(__file__).parent / "golden"


def golden(name):
    return json.loads((GOLDEN / name).read_text())


def adapter_for(key: str) -> AdapterConfig:
    """Adapter for ``PROFILE`` or ``PROFILE/generic-warnings``."""
    name, _, variant = key.partition("/")
    overrides = {"explicit_warnings": False} if variant == "generic-warnings" else {}
    return AdapterConfig(name=key, kind=AdapterKind.BUILTIN, profile=name, overrides=overrides)


def run_cells(key: str, cases=None, snapshot=None) -> dict:
    """Evaluate every case under one configuration; returns {case_id: cell symbol}."""
    cases = build_library() if cases is None else cases
    by_id = {c.id: c for c in cases}
    records = execute_suite(cases, adapter_for(key), snapshot=snapshot, run_id="t")
    return {r.case_id: cell(evaluate_case(r, by_id[r.case_id].expectation)) for r in records}
