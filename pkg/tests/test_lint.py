import json

import pytest

from svs_test.lint import DETECTOR_IDS, DETECTORS, STATS_SCHEMA, UnreadableFile, lint_bom, lint_corpus, lint_file
from svs_test.sbom import NotJson, parse_bom
from svs_test.testlib import emit_sbom_files, library_by_id

from helpers import golden

LIB = library_by_id()


def ids(cid):
    return sorted(f.detector_id for f in lint_bom(parse_bom(LIB[cid].bom_bytes), cid))


def test_blank_cpe_version():
    assert ids("u8h8dnoj") == ["D_CPE_BLANK", "D_NO_VERSION_FIELD"]


def test_versionless_purl():
    assert ids("9a7iknu4") == ["D_NO_VERSION_FIELD", "D_PURL_NO_VERSION"]


def test_purl_version_without_field():
    (f,) = lint_bom(parse_bom(LIB["dmszq6mv"].bom_bytes), "x.json")
    assert (f.detector_id, f.locator, f.file) == ("D_NO_VERSION_FIELD", "component-dicer", "x.json")


def test_identifierless_components_reconstructable():
    findings = lint_bom(parse_bom(LIB["sqs4tbob"].bom_bytes), "s")
    assert [f.detector_id for f in findings] == ["D_NO_IDENTIFIER", "D_NO_IDENTIFIER"]
    assert all(f.reconstructable for f in findings)


def test_root_order_located():
    (f,) = [x for x in lint_bom(parse_bom(LIB["omwcmwv1"].bom_bytes), "o") if x.detector_id == "D_ROOT_ORDER"]
    assert f.locator == "dependencies"


def test_clean_bom_has_no_findings():
    doc = json.loads(LIB["an7esfjj"].bom_bytes)
    doc["components"][0]["version"] = "0.3.0"
    assert lint_bom(parse_bom(json.dumps(doc)), "clean") == []


def test_metadata_at_end():
    doc = json.loads(LIB["an7esfjj"].bom_bytes)
    doc["metadata"] = doc.pop("metadata")
    found = {f.detector_id for f in lint_bom(parse_bom(json.dumps(doc)), "m")}
    assert {"D_METADATA_AT_END", "D_ROOT_ORDER"} <= found


def test_hyphen_in_other_attribute():
    doc = json.loads(LIB["an7esfjj"].bom_bytes)
    doc["components"][0]["cpe"] = "cpe:2.3:a:dicer_project:dicer:0.3.0:-:*:*:*:*:*:*"
    (f,) = [x for x in lint_bom(parse_bom(json.dumps(doc)), "h") if x.detector_id == "D_CPE_HYPHEN"]
    assert "update" in f.detail


def test_detector_registry():
    assert len(DETECTOR_IDS) == len(set(DETECTOR_IDS)) == 10
    assert all(1 <= d.scenario_link <= 8 for d in DETECTORS if d.scenario_link)


def test_corpus_golden(tmp_path):
    emit_sbom_files(tmp_path)
    stats = lint_corpus(tmp_path)
    want = golden("lint_stats.json")
    assert stats.files_scanned == want["files_scanned"]
    assert stats.counts == want["counts"]
    assert stats.no_identifier_reconstructable == want["no_identifier_reconstructable"]
    assert stats.files_not_cyclonedx == 2  # manifest.json, expectations.json
    assert stats.to_json()["schema"] == STATS_SCHEMA


def test_corpus_deterministic(tmp_path):
    emit_sbom_files(tmp_path)
    assert lint_corpus(tmp_path).to_json() == lint_corpus(tmp_path).to_json()


def test_empty_corpus(tmp_path):
    stats = lint_corpus(tmp_path)
    assert stats.files_scanned == 0 and set(stats.counts.values()) == {0}


def test_unparsable_files_tallied(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "a.json").write_bytes(LIB["u8h8dnoj"].bom_bytes)
    stats = lint_corpus(tmp_path)
    assert (stats.files_scanned, stats.files_unparsable) == (1, 1)
    assert stats.counts["D_CPE_BLANK"] == 1


def test_lint_file_errors(tmp_path):
    with pytest.raises(UnreadableFile):
        lint_file(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("nope")
    with pytest.raises(NotJson):
        lint_file(tmp_path / "bad.json")
