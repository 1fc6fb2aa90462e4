"""Acceptance criteria 1-8. Each test prints one ``ACCEPTANCE <n>: PASS|FAIL`` line."""

import json
import random
import time
from pathlib import Path

from helpers import adapter_for, golden, run_cells
from purl_fixtures import FIXTURE_PURLS
from test_cpe import GRID_KEYS, RELATION_GRID, grid_attr
from svs_test.evaluator import Verdict, evaluate_run, summarize_scenarios
from svs_test.harness import builtin_adapter, execute_suite, load_runs, persist_run
from svs_test.identifiers import canonicalize_purl, compare_attribute, parse_purl
from svs_test.lint import lint_corpus
from svs_test.refscanner import PROFILES, scan
from svs_test.sbom import IssueCode, ROOT_ORDER, parse_bom
from svs_test.testlib import SCENARIOS, emit_sbom_files, library_by_id, load_cases
from svs_test.vulndb import ingest_osv, seed_snapshot

LIB = library_by_id()
OSV_DIR = Path(__file__).resolve().parents[1] / "src" / "svs_test" / "data" / "osv"
LINES: list[str] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def _findings(report_):
    return sorted((f.vuln_id, f.component_ref, f.matched_via.value) for f in report_.findings)


# 1 -------------------------------------------------------------------------


def test_criterion_1_ideal_full_pass(tmp_path):
    start = time.monotonic()
    emit_sbom_files(tmp_path / "cases")
    cases = load_cases(tmp_path / "cases")
    adapter = builtin_adapter("IDEAL")
    persist_run(execute_suite(cases, adapter), tmp_path / "runs", adapter)
    ((_, records),) = load_runs(tmp_path / "runs")
    results = evaluate_run(records, {c.id: c.expectation for c in cases})
    elapsed = time.monotonic() - start

    verdicts = {r.case_id: r.outcome.verdict for r in results}
    notes = {r.case_id: r.notes for r in results}
    conformant = all(
        note == "fully conformant" for s in summarize_scenarios(results) for note in s.interpretation.values()
    )
    ok = (
        len(verdicts) == 16
        and set(verdicts.values()) == {Verdict.PASS}
        and notes["0vo0efli"] == "expected findings observed"
        and notes["omwcmwv1"].startswith("rejection")
        and notes["3fvslnon"].startswith("rejection")
        and conformant
        and elapsed < 10
    )
    report(1, ok, f"IDEAL {sum(v is Verdict.PASS for v in verdicts.values())}/16 PASS in {elapsed:.2f}s")


# 2 -------------------------------------------------------------------------

PURL_ONLY_FAIL = ["an7esfjj", "u8h8dnoj", "fayptrma", "b5mxq45i", "2lb5zfps", "9xhb7rgj"]
PURL_ONLY_PASS = ["dmszq6mv", "9a7iknu4", "pq3cy9or", "5q46iw4f", "hawmnwbz"]


def _with_version(case_id, version):
    doc = json.loads(LIB[case_id].bom_bytes)
    if version is None:
        doc["components"][0].pop("version", None)
    else:
        doc["components"][0]["version"] = version
    raw = json.dumps(doc, indent=2).encode()
    case = LIB[case_id]
    return type(case)(case.id, case.scenario, case.title, raw, case.expectation, case.rationale)


def test_criterion_2_profile_patterns():
    problems = []
    matrices = golden("profile_matrix.json")
    for key, want in matrices.items():
        if key.startswith("_"):
            continue
        got = run_cells(key)
        if got != want:
            problems.append(f"{key} differs at {[c for c in want if got.get(c) != want[c]]}")

    for key in ("PURL_ONLY", "PURL_ONLY/generic-warnings"):
        cells = run_cells(key)
        if any(cells[c] == "✓" for c in PURL_ONLY_FAIL) or any(cells[c] != "✓" for c in PURL_ONLY_PASS):
            problems.append(f"{key} pattern")

    for cid in ("dmszq6mv", "9a7iknu4"):
        stripped = run_cells("VERSION_FIELD_DEPENDENT", [_with_version(cid, None)])[cid]
        with_field = run_cells("VERSION_FIELD_DEPENDENT", [_with_version(cid, "0.3.0")])[cid]
        if stripped == "✓" or with_field != "✓":
            problems.append(f"VERSION_FIELD_DEPENDENT {cid}: stripped {stripped}, set {with_field}")

    for key in ("NO_VEX", "NO_VEX/generic-warnings"):
        records = execute_suite([LIB["0vo0efli"]], adapter_for(key))
        reported = "CVE-2024-45772" in json.dumps(json.loads(records[0].report_text)["findings"])
        if run_cells(key, [LIB["0vo0efli"]])["0vo0efli"] == "✓" or not reported:
            problems.append(f"{key} on 0vo0efli")

    n = sum(1 for k in matrices if not k.startswith("_"))
    report(2, not problems, f"{n} golden matrices exact; " + ("; ".join(problems) or "patterns hold"))


# 3 -------------------------------------------------------------------------


def test_criterion_3_cpe_relation_grid():
    pairs = [(s, t, rel) for s, row in RELATION_GRID.items() for t, rel in zip(GRID_KEYS, row)]
    wrong = [(s, t) for s, t, rel in pairs if compare_attribute(grid_attr(s), grid_attr(t)) is not rel]
    report(3, len(pairs) >= 25 and not wrong, f"{len(pairs) - len(wrong)}/{len(pairs)} relation pairs match")


# 4 -------------------------------------------------------------------------


def _slash_variants(purl: str) -> list[str]:
    rest = purl.split(":", 1)[1].lstrip("/")
    return [f"pkg:{rest}", f"pkg:/{rest}", f"pkg://{rest}"]


def test_criterion_4_purl_robustness():
    bad = []
    for text in FIXTURE_PURLS:
        p = parse_purl(text)
        canon = canonicalize_purl(p)
        if parse_purl(canon) != p or canonicalize_purl(parse_purl(canon)) != canon:
            bad.append(text)
        if len({parse_purl(v) for v in _slash_variants(text)}) != 1:
            bad.append(text)
    report(4, len(FIXTURE_PURLS) == 50 and not bad, f"{50 - len(set(bad))}/{len(FIXTURE_PURLS)} purls robust")


# 5 -------------------------------------------------------------------------

RANK = {k: i for i, k in enumerate(ROOT_ORDER)}


def _reorder(doc: dict, keys: list[str]) -> bytes:
    return json.dumps({k: doc[k] for k in keys}, indent=2).encode()


def _in_schema_order(keys) -> bool:
    ranks = [RANK[k] for k in keys if k in RANK]
    return ranks == sorted(ranks)


def _permute_identifiers(doc: dict, rnd: random.Random) -> dict:
    doc = json.loads(json.dumps(doc))
    for i, comp in enumerate(doc["components"]):
        keys = list(comp)
        rnd.shuffle(keys)
        doc["components"][i] = {k: comp[k] for k in keys}
    return doc


def test_criterion_5_order_sensitivity_split():
    rnd = random.Random(20250101)
    snap = seed_snapshot()
    ideal, lenient = PROFILES["IDEAL"].config, PROFILES["LENIENT"].config
    early = [c for s in SCENARIOS if s.number <= 7 for c in s.case_ids]
    root_bad, id_bad, reordered = [], [], 0
    for trial in range(100):
        cid = rnd.choice(early)
        doc = json.loads(LIB[cid].bom_bytes)
        baseline = {name: _findings(scan(parse_bom(LIB[cid].bom_bytes), snap, p.config)) for name, p in PROFILES.items()}

        keys = list(doc)
        rnd.shuffle(keys)
        bom = parse_bom(_reorder(doc, keys))
        out_of_order = not _in_schema_order(keys)
        reordered += out_of_order
        flagged = bool(bom.issues(IssueCode.ROOT_ORDER))
        other_issues = [i for i in bom.validation_issues if i.code is not IssueCode.ROOT_ORDER]
        rejected = scan(bom, snap, ideal).rejected is not None
        lenient_same = _findings(scan(bom, snap, lenient)) == baseline["LENIENT"]
        if flagged != out_of_order or rejected != out_of_order or other_issues or not lenient_same:
            root_bad.append((trial, cid))

        perm = parse_bom(json.dumps(_permute_identifiers(doc, rnd)))
        for name, p in PROFILES.items():
            if _findings(scan(perm, snap, p.config)) != baseline[name]:
                id_bad.append((trial, cid, name))
    ok = not root_bad and not id_bad and reordered > 0
    report(
        5,
        ok,
        f"100 root permutations ({reordered} out of order, {len(root_bad)} violations); "
        f"identifier permutations x {len(PROFILES)} profiles ({len(id_bad)} violations)",
    )


# 6 -------------------------------------------------------------------------


def test_criterion_6_lint_counts(tmp_path):
    emit_sbom_files(tmp_path)
    stats = lint_corpus(tmp_path)
    want = golden("lint_stats.json")
    ok = (
        stats.files_scanned == want["files_scanned"]
        and stats.counts == want["counts"]
        and stats.no_identifier_reconstructable == want["no_identifier_reconstructable"]
    )
    diff = {k: (stats.counts.get(k), v) for k, v in want["counts"].items() if stats.counts.get(k) != v}
    report(6, ok, f"{stats.files_scanned} files, {sum(stats.counts.values())} findings; mismatches: {diff or 'none'}")


# 7 -------------------------------------------------------------------------


def test_criterion_7_osv_ingestion_equivalence():
    files = sorted(OSV_DIR.glob("*.json"))
    seed = seed_snapshot()
    snaps = [ingest_osv(files, created_at=f"2025-01-0{i + 1}T00:00:00Z") for i in range(3)]
    ids = {s.snapshot_id for s in snaps}
    config = PROFILES["IDEAL"].config
    differ = [
        c.id
        for c in LIB.values()
        if _findings(scan(parse_bom(c.bom_bytes), snaps[0], config)) != _findings(scan(parse_bom(c.bom_bytes), seed, config))
    ]
    ok = len(files) == 2 and len(ids) == 1 and not differ
    report(7, ok, f"{16 - len(differ)}/16 cases identical under IDEAL; {len(ids)} distinct id over 3 ingestions")


# 8 -------------------------------------------------------------------------


def test_criterion_8_no_silent_skip():
    snap = seed_snapshot()
    violations, checked = [], 0
    for name, profile in PROFILES.items():
        for cid, case in LIB.items():
            bom = parse_bom(case.bom_bytes)
            r = scan(bom, snap, profile.config)
            s = r.stats
            checked += 1
            if s.components_tested + s.components_skipped != s.components_total or s.components_total != len(bom.components):
                violations.append((name, cid, "stats"))
            for ref in r.skipped_refs:
                if not any(ref in w.message for w in r.warnings):
                    violations.append((name, cid, ref))
    report(8, not violations, f"{checked} profile x fixture scans, {len(violations)} violations")
