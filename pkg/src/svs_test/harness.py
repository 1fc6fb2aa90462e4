"""Execute test cases against built-in profiles or external scanners and persist runs."""

from __future__ import annotations

import enum
import hashlib
import json
import os
import re
import shlex
import subprocess
import tempfile
import uuid
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .refscanner import ScanConfig, get_profile, scan, serialize_report, warning_lines
from .sbom import NotCycloneDx, NotJson, parse_bom
from .testlib import IoFailure, TestCase
from .vulndb import Snapshot, seed_snapshot

TIMEOUT = "timeout"
DEFAULT_TIMEOUT = 60.0
TIMEOUT_ENV = "SVS_TEST_TIMEOUT_DEFAULT"
_SAFE = re.compile(r"[^A-Za-z0-9._-]+")


class AdapterUnavailable(RuntimeError):
    pass


class AdapterKind(str, enum.Enum):
    BUILTIN = "BUILTIN"
    EXTERNAL = "EXTERNAL"


class ReportSource(str, enum.Enum):
    STDOUT = "STDOUT"
    FILE = "FILE"


def default_timeout() -> float:
    raw = os.environ.get(TIMEOUT_ENV)
    if raw:
        try:
            return float(raw)
        except ValueError:
            pass
    return DEFAULT_TIMEOUT


@dataclass(frozen=True)
class AdapterConfig:
    name: str
    kind: AdapterKind = AdapterKind.BUILTIN
    profile: str | None = None
    invoke_template: str | None = None
    report_source: ReportSource = ReportSource.STDOUT
    report_path_template: str | None = None
    version_command: str | None = None
    reset_command: str | None = None
    timeout: float | None = None
    env: dict[str, str] = field(default_factory=dict)
    # BUILTIN only: ScanConfig fields to change relative to the profile
    overrides: dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind is AdapterKind.BUILTIN:
            self.scan_config()
        else:
            if not self.invoke_template or self.invoke_template.count("{sbom}") != 1:
                raise ValueError(f"adapter {self.name}: invoke_template must contain {{sbom}} exactly once")
            if self.report_source is ReportSource.FILE and not self.report_path_template:
                raise ValueError(f"adapter {self.name}: FILE report source needs report_path_template")

    def scan_config(self) -> ScanConfig:
        return get_profile(self.profile or "").config.with_overrides(self.overrides)

    @property
    def effective_timeout(self) -> float:
        return self.timeout if self.timeout is not None else default_timeout()

    def to_json(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["report_source"] = self.report_source.value
        d["env"] = dict(sorted(self.env.items()))
        d["overrides"] = dict(sorted(self.overrides.items()))
        return d

    @classmethod
    def from_json(cls, d: dict) -> AdapterConfig:
        d = dict(d)
        d["kind"] = AdapterKind(d.get("kind", "BUILTIN"))
        d["report_source"] = ReportSource(d.get("report_source", "STDOUT"))
        d["env"] = dict(d.get("env") or {})
        d["overrides"] = dict(d.get("overrides") or {})
        return cls(**d)

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(text.encode()).hexdigest()


def builtin_adapter(profile: str) -> AdapterConfig:
    return AdapterConfig(name=f"builtin-{profile.lower()}", kind=AdapterKind.BUILTIN, profile=profile.upper())


def load_adapters(path: str | Path) -> list[AdapterConfig]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise ValueError("adapters file must contain a JSON array")
    return [AdapterConfig.from_json(d) for d in data]


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    adapter_name: str
    tool_version: str
    case_id: str
    started_at: str
    finished_at: str
    exit_status: int | str
    report_text: str
    stderr_text: str
    db_snapshot_id: str | None
    config_digest: str

    @property
    def timed_out(self) -> bool:
        return self.exit_status == TIMEOUT

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> RunRecord:
        return cls(**d)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def _run_shell(command: str, env: dict, timeout: float) -> subprocess.CompletedProcess:
    try:
        return subprocess.run(
            shlex.split(command),
            capture_output=True,
            text=True,
            env={**os.environ, **env},
            timeout=timeout,
            check=False,
        )
    except (FileNotFoundError, PermissionError) as exc:
        raise AdapterUnavailable(f"cannot execute {command!r}: {exc}") from exc


def _tool_version(adapter: AdapterConfig) -> str:
    if adapter.kind is AdapterKind.BUILTIN:
        return f"svs-test {__version__} ({adapter.profile})"
    if not adapter.version_command:
        return "unknown"
    try:
        proc = _run_shell(adapter.version_command, adapter.env, adapter.effective_timeout)
    except subprocess.TimeoutExpired:
        return "unknown"
    text = (proc.stdout or proc.stderr).strip()
    return text.splitlines()[0] if proc.returncode == 0 and text else "unknown"


def _run_builtin(case: TestCase, adapter: AdapterConfig, snapshot: Snapshot) -> tuple[int, str, str]:
    config = adapter.scan_config()
    try:
        bom = parse_bom(case.bom_bytes)
    except (NotJson, NotCycloneDx) as exc:
        return 1, "", f"ERROR: cannot parse SBOM: {exc}\n"
    report = scan(bom, snapshot, config)
    lines = warning_lines(report)
    return 0, serialize_report(report).decode("utf-8"), "".join(f"{x}\n" for x in lines)


def _run_external(case: TestCase, adapter: AdapterConfig, workdir: Path) -> tuple[int | str, str, str]:
    sbom_path = workdir / f"{case.id}.cdx.json"
    sbom_path.write_bytes(case.bom_bytes)
    command = adapter.invoke_template.replace("{sbom}", shlex.quote(str(sbom_path)))
    report_path = None
    if adapter.report_source is ReportSource.FILE:
        report_path = Path(adapter.report_path_template.format(case=case.id, workdir=workdir))
        command = command.replace("{report}", shlex.quote(str(report_path)))
    try:
        proc = _run_shell(command, adapter.env, adapter.effective_timeout)
    except subprocess.TimeoutExpired as exc:
        out = exc.stdout.decode() if isinstance(exc.stdout, bytes) else (exc.stdout or "")
        err = exc.stderr.decode() if isinstance(exc.stderr, bytes) else (exc.stderr or "")
        return TIMEOUT, out, err
    report = proc.stdout
    if report_path is not None:
        report = report_path.read_text(errors="replace") if report_path.exists() else ""
    return proc.returncode, report, proc.stderr


def execute_suite(
    cases: list[TestCase],
    adapter: AdapterConfig,
    snapshot: Snapshot | None = None,
    run_id: str | None = None,
) -> list[RunRecord]:
    """Run every case once, sequentially, resetting the tool between cases."""
    run_id = _SAFE.sub("-", run_id or f"{adapter.name}-{uuid.uuid4().hex[:12]}")
    digest = adapter.digest()
    builtin = adapter.kind is AdapterKind.BUILTIN
    if builtin and snapshot is None:
        snapshot = seed_snapshot()
    version = _tool_version(adapter)
    records = []
    with tempfile.TemporaryDirectory(prefix="svs-test-") as tmp:
        for i, case in enumerate(cases):
            if i and adapter.reset_command:
                try:
                    _run_shell(adapter.reset_command, adapter.env, adapter.effective_timeout)
                except subprocess.TimeoutExpired:
                    pass
            started = _now()
            if builtin:
                status, report, stderr = _run_builtin(case, adapter, snapshot)
            else:
                status, report, stderr = _run_external(case, adapter, Path(tmp))
            finished = _now()
            records.append(
                RunRecord(
                    run_id=run_id,
                    adapter_name=adapter.name,
                    tool_version=version,
                    case_id=case.id,
                    started_at=started,
                    finished_at=finished,
                    exit_status=status,
                    report_text=report,
                    stderr_text=stderr,
                    db_snapshot_id=snapshot.snapshot_id if builtin else None,
                    config_digest=digest,
                )
            )
    return records


def persist_run(records: list[RunRecord], directory: str | Path, adapter: AdapterConfig | None = None) -> dict:
    """Write ``<dir>/<run_id>/<case>.json`` plus ``run.json``; returns the run manifest."""
    if not records:
        raise ValueError("no records to persist")
    first = records[0]
    run_dir = Path(directory) / first.run_id
    manifest = {
        "run_id": first.run_id,
        "adapter": adapter.to_json() if adapter else {"name": first.adapter_name},
        "tool_version": first.tool_version,
        "tool_version_unknown": first.tool_version == "unknown",
        "config_digest": first.config_digest,
        "db_snapshot_id": first.db_snapshot_id,
        "started_at": min(r.started_at for r in records),
        "finished_at": max(r.finished_at for r in records),
        "cases": [r.case_id for r in records],
    }
    try:
        run_dir.mkdir(parents=True, exist_ok=False)
        for r in records:
            (run_dir / f"{r.case_id}.json").write_text(json.dumps(r.to_json(), indent=2) + "\n")
        (run_dir / "run.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return manifest


def load_run(run_dir: str | Path) -> tuple[dict, list[RunRecord]]:
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "run.json").read_text())
    records = [RunRecord.from_json(json.loads((run_dir / f"{c}.json").read_text())) for c in manifest["cases"]]
    return manifest, records


def load_runs(directory: str | Path) -> list[tuple[dict, list[RunRecord]]]:
    """Every run below ``directory`` (or the directory itself if it is a run)."""
    root = Path(directory)
    if (root / "run.json").exists():
        return [load_run(root)]
    return [load_run(p.parent) for p in sorted(root.glob("*/run.json"))]


__all__ = [
    "TIMEOUT",
    "TIMEOUT_ENV",
    "AdapterConfig",
    "AdapterKind",
    "AdapterUnavailable",
    "ReportSource",
    "RunRecord",
    "builtin_adapter",
    "default_timeout",
    "execute_suite",
    "load_adapters",
    "load_run",
    "load_runs",
    "persist_run",
]
