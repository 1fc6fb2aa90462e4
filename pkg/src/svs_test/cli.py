"""Command-line interface: ``svs-test <subcommand>``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .evaluator import (
    IncompleteSuite,
    Verdict,
    evaluate_run,
    render_matrix,
    results_from_json,
    results_to_json,
    summarize_scenarios,
)
from .harness import AdapterUnavailable, builtin_adapter, execute_suite, load_adapters, load_runs, persist_run
from .lint import lint_corpus, lint_file
from .refscanner import PROFILES, get_profile, scan, serialize_report, warning_lines
from .sbom import NotCycloneDx, NotJson, parse_bom
from .testlib import IoFailure, emit_sbom_files, library_digest, load_cases
from .vulndb import IngestProblem, ingest_osv, load_snapshot, save_snapshot, seed_snapshot

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_SILENT_FAIL = 0, 1, 2, 3


class CliError(Exception):
    pass


def _version_text() -> str:
    return (
        f"svs-test {__version__}\n"
        f"fixture-library {library_digest()}\n"
        f"seed-snapshot {seed_snapshot().snapshot_id}"
    )


def _snapshot(path):
    return load_snapshot(path) if path else seed_snapshot()


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- subcommands


def cmd_gen_cases(args) -> int:
    manifest = emit_sbom_files(args.out)
    print(f"wrote {len(manifest['cases'])} cases to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_ingest_osv(args) -> int:
    files = []
    for p in map(Path, args.files):
        files += sorted(p.glob("*.json")) if p.is_dir() else [p]
    problems: list[IngestProblem] = []
    created = args.created_at or datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    snap = ingest_osv(files, created_at=created, problems=problems)
    save_snapshot(snap, args.out)
    for p in problems:
        print(f"WARN: skipped {p.source}: {p.detail}", file=sys.stderr)
    print(f"{snap.snapshot_id} ({len(snap.records)} records)")
    return EXIT_OK


def cmd_scan(args) -> int:
    config = get_profile(args.profile).config
    if args.generic_warnings:
        config = replace(config, explicit_warnings=False)
    try:
        bom = parse_bom(Path(args.sbom).read_bytes())
    except (NotJson, NotCycloneDx) as exc:
        raise CliError(f"{args.sbom}: {exc}") from exc
    report = scan(bom, _snapshot(args.db), config)
    sys.stdout.write(serialize_report(report).decode())
    for line in warning_lines(report):
        print(line, file=sys.stderr)
    return EXIT_OK


def cmd_run(args) -> int:
    cases = load_cases(args.cases)
    adapters = []
    if args.adapters:
        adapters += load_adapters(args.adapters)
    adapters += [builtin_adapter(get_profile(p).name.value) for p in args.builtin or ()]
    if not adapters:
        raise CliError("nothing to run: give --adapters and/or --builtin")
    snapshot = _snapshot(args.db)
    failed = False
    for adapter in adapters:
        try:
            records = execute_suite(cases, adapter, snapshot=snapshot)
        except AdapterUnavailable as exc:
            print(f"ERROR: adapter {adapter.name}: {exc}", file=sys.stderr)
            failed = True
            continue
        manifest = persist_run(records, args.out, adapter)
        print(f"{adapter.name}: {len(records)} records in {Path(args.out) / manifest['run_id']}")
    return EXIT_ERROR if failed else EXIT_OK


def _has_silent(results) -> bool:
    return any(r.outcome.verdict is Verdict.SILENT_FAIL for r in results)


def cmd_eval(args) -> int:
    cases = load_cases(args.cases)
    expectations = {c.id: c.expectation for c in cases}
    runs = load_runs(args.runs)
    if not runs:
        raise CliError(f"no runs found under {args.runs}")
    results = []
    for _manifest, records in runs:
        results += evaluate_run(records, expectations)
    doc = results_to_json(results)
    try:
        doc["scenarios"] = [s.to_json() for s in summarize_scenarios(results, [c.id for c in cases])]
    except IncompleteSuite as exc:
        print(f"WARN: {exc}", file=sys.stderr)
    _write(args.out, json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    if args.out:
        sys.stdout.write(render_matrix(results))
    return EXIT_SILENT_FAIL if _has_silent(results) else EXIT_OK


def cmd_report(args) -> int:
    results = results_from_json(json.loads(Path(args.results).read_text()))
    text = render_matrix(results, args.format)
    if args.format == "markdown" and args.summary:
        lines = ["", "Scenario interpretation:"]
        for s in summarize_scenarios(results):
            for adapter, note in s.interpretation.items():
                lines.append(f"- {s.number}. {s.name} [{adapter}]: {note}")
        text += "\n".join(lines) + "\n"
    _write(args.out, text)
    return EXIT_SILENT_FAIL if _has_silent(results) else EXIT_OK


def cmd_lint(args) -> int:
    if args.file:
        findings = lint_file(args.file)
        for f in findings:
            print(f"{f.detector_id}\t{f.locator}\t{f.detail}")
        return EXIT_OK
    stats = lint_corpus(args.corpus)
    _write(args.out, json.dumps(stats.to_json(), indent=2) + "\n")
    return EXIT_OK


def cmd_profiles(args) -> int:
    for p in PROFILES.values():
        print(f"{p.name.value}: {p.description}")
        if args.verbose:
            print("  " + json.dumps(p.config.to_json(), sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svs-test", description="SBOM vulnerability scanner conformance harness")
    parser.add_argument("--version", action="store_true", help="print tool, fixture-library and seed-snapshot ids")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("gen-cases", help="write the 16 test-case SBOMs, manifest and expectations")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_cases)

    p = sub.add_parser("ingest-osv", help="build a vulnerability snapshot from OSV JSON files")
    p.add_argument("files", nargs="+", help="OSV JSON files or directories containing them")
    p.add_argument("--out", required=True, help="snapshot file to write")
    p.add_argument("--created-at", help="timestamp to record (default: now; not part of the snapshot id)")
    p.set_defaults(func=cmd_ingest_osv)

    p = sub.add_parser("scan", help="scan one SBOM with the reference scanner")
    p.add_argument("--sbom", required=True, help="CycloneDX JSON file")
    p.add_argument("--db", help="snapshot file (default: bundled seed)")
    p.add_argument("--profile", default="IDEAL", help="scanner profile (see `profiles`)")
    p.add_argument("--generic-warnings", action="store_true",
                   help="collapse component warnings into one generic line")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("run", help="execute the case library against adapters")
    p.add_argument("--cases", required=True, help="directory written by gen-cases")
    p.add_argument("--adapters", help="adapters.json (JSON array of adapter configs)")
    p.add_argument("--builtin", action="append", metavar="PROFILE", help="add a built-in profile adapter")
    p.add_argument("--db", help="snapshot for built-in adapters (default: bundled seed)")
    p.add_argument("--out", required=True, help="runs directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="evaluate runs against case expectations")
    p.add_argument("--runs", required=True, help="runs directory or a single run directory")
    p.add_argument("--cases", required=True, help="directory written by gen-cases")
    p.add_argument("--out", help="results JSON file (default: stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render a results matrix")
    p.add_argument("--results", required=True, help="results JSON written by eval")
    p.add_argument("--format", choices=("markdown", "json"), default="markdown")
    p.add_argument("--summary", action="store_true", help="append scenario interpretations (markdown only)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("lint", help="detect failure-triggering conditions in SBOM files")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--corpus", help="directory of CycloneDX JSON files")
    g.add_argument("--file", help="single SBOM; prints findings")
    p.add_argument("--out", help="stats JSON file (default: stdout)")
    p.set_defaults(func=cmd_lint)

    p = sub.add_parser("profiles", help="list built-in scanner profiles")
    p.add_argument("-v", "--verbose", action="store_true", help="show each profile's configuration")
    p.set_defaults(func=cmd_profiles)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.version:
        print(_version_text())
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        print("svs-test: error: a subcommand is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except KeyError as exc:
        print(f"svs-test: error: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (CliError, IoFailure, OSError, ValueError, IncompleteSuite) as exc:
        print(f"svs-test: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
