import json
from pathlib import Path

import pytest

from svs_test.cli import main
from svs_test.testlib import library_digest
from svs_test.vulndb import seed_snapshot

OSV = Path(__file__).resolve().parents[1] / "src" / "svs_test" / "data" / "osv"


@pytest.fixture
def cases(tmp_path):
    out = tmp_path / "cases"
    assert main(["gen-cases", "--out", str(out)]) == 0
    return out


def test_version(capsys):
    assert main(["--version"]) == 0
    out = capsys.readouterr().out
    assert library_digest() in out and seed_snapshot().snapshot_id in out


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 2
    assert "subcommand" in capsys.readouterr().err


def test_bad_option_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["report", "--results", "x", "--format", "html"])
    assert exc.value.code == 2


def test_unknown_profile_is_usage_error(cases, capsys):
    assert main(["scan", "--sbom", str(cases / "an7esfjj.cdx.json"), "--profile", "FAST"]) == 2


def test_gen_cases(cases):
    assert len(list(cases.glob("*.cdx.json"))) == 16
    assert (cases / "manifest.json").exists() and (cases / "expectations.json").exists()


def test_scan(cases, capsys):
    assert main(["scan", "--sbom", str(cases / "an7esfjj.cdx.json"), "--profile", "PURL_ONLY"]) == 0
    out, err = capsys.readouterr()
    assert json.loads(out)["findings"] == []
    assert err.startswith("WARN: CPE_UNSUPPORTED:")


def test_scan_generic_warnings(cases, capsys):
    main(["scan", "--sbom", str(cases / "an7esfjj.cdx.json"), "--profile", "PURL_ONLY", "--generic-warnings"])
    err = capsys.readouterr().err
    assert "component-dicer" not in err and "UNRESOLVED" in err


def test_scan_non_json_fails(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    assert main(["scan", "--sbom", str(bad)]) == 1


def test_ingest_matches_seed(tmp_path, capsys):
    snap = tmp_path / "snap.json"
    assert main(["ingest-osv", str(OSV), "--out", str(snap), "--created-at", "2025-01-01T00:00:00Z"]) == 0
    assert seed_snapshot().snapshot_id in capsys.readouterr().out


def test_run_eval_report_ideal(cases, tmp_path, capsys):
    runs, results = tmp_path / "runs", tmp_path / "results.json"
    assert main(["run", "--cases", str(cases), "--builtin", "IDEAL", "--out", str(runs)]) == 0
    assert main(["eval", "--runs", str(runs), "--cases", str(cases), "--out", str(results)]) == 0
    capsys.readouterr()
    assert main(["report", "--results", str(results), "--summary"]) == 0
    out = capsys.readouterr().out
    assert "| 1 | an7esfjj | ✓ |" in out and "fully conformant" in out


def test_silent_failure_exit_code(cases, tmp_path, capsys):
    runs, results = tmp_path / "runs", tmp_path / "results.json"
    adapters = tmp_path / "adapters.json"
    adapters.write_text(json.dumps([{"name": "generic", "profile": "PURL_ONLY", "overrides": {"explicit_warnings": False}}]))
    assert main(["run", "--cases", str(cases), "--adapters", str(adapters), "--builtin", "LENIENT", "--out", str(runs)]) == 0
    assert main(["eval", "--runs", str(runs), "--cases", str(cases), "--out", str(results)]) == 3
    doc = json.loads(results.read_text())
    assert len(doc["results"]) == 32 and len(doc["scenarios"]) == 8
    capsys.readouterr()
    assert main(["report", "--results", str(results), "--format", "json"]) == 3
    m = json.loads(capsys.readouterr().out)
    assert sorted(m["adapters"]) == ["builtin-lenient", "generic"]


def test_run_missing_executable(cases, tmp_path, capsys):
    adapters = tmp_path / "adapters.json"
    adapters.write_text(json.dumps([{"name": "gone", "kind": "EXTERNAL", "invoke_template": "/nonexistent {sbom}"}]))
    assert main(["run", "--cases", str(cases), "--adapters", str(adapters), "--out", str(tmp_path / "r")]) == 1
    assert "gone" in capsys.readouterr().err


def test_run_needs_adapter(cases, tmp_path):
    assert main(["run", "--cases", str(cases), "--out", str(tmp_path / "r")]) == 1


def test_eval_empty_runs(cases, tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["eval", "--runs", str(tmp_path / "empty"), "--cases", str(cases)]) == 1


def test_lint_corpus_and_file(cases, tmp_path, capsys):
    stats = tmp_path / "stats.json"
    assert main(["lint", "--corpus", str(cases), "--out", str(stats)]) == 0
    assert json.loads(stats.read_text())["files_scanned"] == 16
    assert main(["lint", "--file", str(cases / "u8h8dnoj.cdx.json")]) == 0
    assert "D_CPE_BLANK" in capsys.readouterr().out


def test_profiles(capsys):
    assert main(["profiles", "-v"]) == 0
    out = capsys.readouterr().out
    for name in ("IDEAL", "PURL_ONLY", "VERSION_FIELD_DEPENDENT", "NO_VEX", "LENIENT"):
        assert name in out
