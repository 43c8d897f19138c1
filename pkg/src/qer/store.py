"""Versioned register persistence: append-only history with an audit trail.

Storage is a plain directory tree, not a database: every version is an
inspectable file, which is what an evidence pack wants.

    <root>/registry/index        version metadata + latest pointer (JSON)
    <root>/registry/v<N>/entries one register entry per line (JSONL)
    <root>/registry/v<N>/audit   one audit event per line (JSONL)

Committed versions are never mutated. Commits are serialized through an
exclusive lock file; a commit whose parent is no longer the latest version
loses the race and gets a conflict. Readers never block.
"""

from __future__ import annotations

import csv
import io
import os
import json
import time
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path

from .engine import QEREntry, ThreatScenario
from .errors import ConflictError, FormatError, InputError, LockedError, NotFoundError
from .ingest import CandidateAsset
from .jsonutil import canonical_json, format_ts, format_years, load_jsonl, parse_ts, utcnow
from .scan import FindingSource

CSV_COLUMNS = [
    "QER ID",
    "Asset/Service",
    "Domain",
    "Criticality C/I/A",
    "T_shelf",
    "T_migration",
    "T_threat",
    "Time-Exposed?",
    "Current Crypto",
    "Evidence Confidence",
    "Owner Biz/Tech",
    "Third-Party Dependency",
    "Crypto-Agility",
    "Target State",
    "Next Action",
    "Wave",
]


@dataclass(frozen=True)
class AuditEvent:
    timestamp: datetime
    actor: str
    action: str  # "commit" | "override"
    detail: str

    def to_dict(self) -> dict:
        return {
            "timestamp": format_ts(self.timestamp),
            "actor": self.actor,
            "action": self.action,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AuditEvent":
        return cls(parse_ts(d["timestamp"]), d["actor"], d["action"], d["detail"])


@dataclass(frozen=True)
class RegisterVersion:
    version_id: int
    created_at: datetime
    scenario: ThreatScenario
    entries: tuple[QEREntry, ...]
    parent_version: int | None
    audit_events: tuple[AuditEvent, ...]

    def entry(self, qer_id: str) -> QEREntry:
        for e in self.entries:
            if e.qer_id == qer_id:
                return e
        raise NotFoundError(f"no entry {qer_id!r} in version {self.version_id}")

    def to_dict(self) -> dict:
        return {
            "version_id": self.version_id,
            "created_at": format_ts(self.created_at),
            "scenario": self.scenario.to_dict(),
            "parent_version": self.parent_version,
            "audit_events": [e.to_dict() for e in self.audit_events],
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegisterVersion":
        return cls(
            version_id=d["version_id"],
            created_at=parse_ts(d["created_at"]),
            scenario=ThreatScenario.from_dict(d["scenario"]),
            entries=tuple(QEREntry.from_dict(e) for e in d["entries"]),
            parent_version=d.get("parent_version"),
            audit_events=tuple(AuditEvent.from_dict(e) for e in d.get("audit_events", [])),
        )


class ExceptionKind(str, Enum):
    UNMAPPED_EVIDENCE = "UNMAPPED_EVIDENCE"
    NO_ACCOUNTABLE_OWNER = "NO_ACCOUNTABLE_OWNER"
    NO_METADATA = "NO_METADATA"
    SCAN_SKIPPED = "SCAN_SKIPPED"


@dataclass(frozen=True)
class ExceptionRecord:
    kind: ExceptionKind
    subject: str
    detail: str
    first_seen: datetime
    last_seen: datetime

    def __post_init__(self) -> None:
        if self.last_seen < self.first_seen:
            raise InputError("exception last_seen predates first_seen")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "subject": self.subject,
            "detail": self.detail,
            "first_seen": format_ts(self.first_seen),
            "last_seen": format_ts(self.last_seen),
        }


@dataclass(frozen=True)
class CoverageMap:
    per_source: dict[str, int]
    total_assets: int

    def ratio(self, source: FindingSource) -> float:
        if self.total_assets == 0:
            return 0.0
        return self.per_source.get(source.value, 0) / self.total_assets

    def to_dict(self) -> dict:
        return {
            "per_source": dict(sorted(self.per_source.items())),
            "total_assets": self.total_assets,
            "ratios": {
                s.value: self.ratio(s) for s in FindingSource
            },
        }


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------

LOCK_TIMEOUT_S = 10.0


class RegisterStore:
    """Directory-backed register with integer version ids and a commit lock."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.registry = self.root / "registry"

    # -- paths ------------------------------------------------------------

    @property
    def _index_path(self) -> Path:
        return self.registry / "index"

    def _version_dir(self, version_id: int) -> Path:
        return self.registry / f"v{version_id}"

    @property
    def _lock_path(self) -> Path:
        return self.registry / ".lock"

    # -- index ------------------------------------------------------------

    def _read_index(self) -> dict:
        if not self._index_path.exists():
            return {"latest": None, "versions": []}
        try:
            return json.loads(self._index_path.read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise FormatError(f"register index corrupt: {exc}") from exc

    def _write_index(self, index: dict) -> None:
        tmp = self._index_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", "utf-8")
        os.replace(tmp, self._index_path)

    def history(self) -> list[dict]:
        return self._read_index()["versions"]

    def latest_id(self) -> int | None:
        return self._read_index()["latest"]

    # -- reads ------------------------------------------------------------

    def version(self, version_id: int) -> RegisterVersion:
        vdir = self._version_dir(version_id)
        if not vdir.is_dir():
            raise NotFoundError(f"register version {version_id} does not exist")
        meta = next(
            (m for m in self._read_index()["versions"] if m["version_id"] == version_id),
            None,
        )
        if meta is None:
            raise NotFoundError(f"register version {version_id} missing from index")
        entries = tuple(
            QEREntry.from_dict(rec) for rec in load_jsonl((vdir / "entries").read_text("utf-8"))
        )
        audit = tuple(
            AuditEvent.from_dict(rec) for rec in load_jsonl((vdir / "audit").read_text("utf-8"))
        )
        return RegisterVersion(
            version_id=version_id,
            created_at=parse_ts(meta["created_at"]),
            scenario=ThreatScenario.from_dict(meta["scenario"]),
            entries=entries,
            parent_version=meta.get("parent_version"),
            audit_events=audit,
        )

    def latest(self) -> RegisterVersion | None:
        latest_id = self.latest_id()
        return self.version(latest_id) if latest_id is not None else None

    # -- commits ----------------------------------------------------------

    def commit(
        self,
        entries: list[QEREntry],
        scenario: ThreatScenario,
        parent: int | None,
        actor: str = "pipeline",
        created_at: datetime | None = None,
    ) -> RegisterVersion:
        """Persist a new immutable version; one writer wins per parent."""
        for entry in entries:
            if entry.scenario != scenario:
                raise InputError(f"entry {entry.qer_id} evaluated under a different scenario")
        self.registry.mkdir(parents=True, exist_ok=True)
        self._acquire_lock()
        try:
            index = self._read_index()
            if index["latest"] != parent:
                raise ConflictError(
                    f"parent {parent} is stale: latest is {index['latest']}"
                )
            version_id = 1 if parent is None else parent + 1
            created = created_at or utcnow()
            audit = self._audit_events(entries, parent, actor, created)
            version = RegisterVersion(
                version_id=version_id,
                created_at=created,
                scenario=scenario,
                entries=tuple(entries),
                parent_version=parent,
                audit_events=tuple(audit),
            )
            self._write_version(version)
            index["latest"] = version_id
            index["versions"].append(
                {
                    "version_id": version_id,
                    "created_at": format_ts(created),
                    "scenario": scenario.to_dict(),
                    "parent_version": parent,
                    "entry_count": len(entries),
                }
            )
            self._write_index(index)
            return version
        finally:
            self._release_lock()

    def _audit_events(
        self,
        entries: list[QEREntry],
        parent: int | None,
        actor: str,
        created: datetime,
    ) -> list[AuditEvent]:
        events: list[AuditEvent] = []
        diff_summary = self._diff_against_parent(entries, parent)
        events.append(
            AuditEvent(
                timestamp=created,
                actor=actor,
                action="commit",
                detail=canonical_json({"parent_version": parent, **diff_summary}),
            )
        )
        # One override event per override record carried by this version's
        # entries: audit completeness is checkable per version.
        for entry in entries:
            if entry.override is not None:
                events.append(
                    AuditEvent(
                        timestamp=entry.override.timestamp,
                        actor=entry.override.actor,
                        action="override",
                        detail=canonical_json(
                            {
                                "qer_id": entry.qer_id,
                                "from_wave": entry.override.from_wave,
                                "to_wave": entry.override.to_wave,
                                "rationale": entry.override.rationale,
                            }
                        ),
                    )
                )
        return events

    def _diff_against_parent(self, entries: list[QEREntry], parent: int | None) -> dict:
        if parent is None:
            return {"added": len(entries), "removed": 0, "changed": 0}
        previous = {e.qer_id: e for e in self.version(parent).entries}
        current = {e.qer_id: e for e in entries}
        added = sorted(set(current) - set(previous))
        removed = sorted(set(previous) - set(current))
        changed = sorted(
            qer_id
            for qer_id in set(current) & set(previous)
            if current[qer_id].to_dict() != previous[qer_id].to_dict()
        )
        return {
            "added": len(added),
            "removed": len(removed),
            "changed": len(changed),
            "changed_ids": changed,
        }

    def _write_version(self, version: RegisterVersion) -> None:
        vdir = self._version_dir(version.version_id)
        staging = self.registry / f".staging-v{version.version_id}"
        if staging.exists():
            raise ConflictError(f"stale staging directory for version {version.version_id}")
        staging.mkdir(parents=True)
        entries_text = "".join(canonical_json(e.to_dict()) + "\n" for e in version.entries)
        audit_text = "".join(canonical_json(e.to_dict()) + "\n" for e in version.audit_events)
        (staging / "entries").write_text(entries_text, "utf-8")
        (staging / "audit").write_text(audit_text, "utf-8")
        os.rename(staging, vdir)

    # -- locking ----------------------------------------------------------

    def _acquire_lock(self, timeout: float = LOCK_TIMEOUT_S) -> None:
        deadline = time.monotonic() + timeout
        while True:
            try:
                fd = os.open(self._lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                os.write(fd, str(os.getpid()).encode())
                os.close(fd)
                return
            except FileExistsError:
                if time.monotonic() >= deadline:
                    raise LockedError("commit lock held by another writer") from None
                time.sleep(0.02)

    def _release_lock(self) -> None:
        try:
            os.unlink(self._lock_path)
        except FileNotFoundError:
            pass


def commit_version(
    store: RegisterStore,
    entries: list[QEREntry],
    scenario: ThreatScenario,
    parent: int | None,
    actor: str = "pipeline",
) -> RegisterVersion:
    return store.commit(entries, scenario, parent, actor=actor)


# ---------------------------------------------------------------------------
# Export / import
# ---------------------------------------------------------------------------


class ExportFormat(str, Enum):
    CSV = "CSV"
    STRUCTURED = "STRUCTURED"


def export_register(version: RegisterVersion, format: ExportFormat | str = ExportFormat.CSV) -> bytes:
    fmt = ExportFormat(format.upper() if isinstance(format, str) else format)
    if fmt is ExportFormat.STRUCTURED:
        return (json.dumps(version.to_dict(), sort_keys=True, indent=2) + "\n").encode("utf-8")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)
    for entry in version.entries:
        meta = entry.enriched.metadata
        candidate = entry.enriched.candidate
        writer.writerow(
            [
                entry.qer_id,
                candidate.display_name,
                meta.domain_label,
                meta.criticality.display(),
                format_years(meta.t_shelf_years),
                format_years(meta.t_migration_years),
                format_years(entry.scenario.t_threat_years),
                entry.exposure.display(),
                candidate.label(),
                entry.enriched.evidence.display(),
                meta.owner_display(),
                ", ".join(t for t, _ in candidate.dependency_edges),
                str(meta.crypto_agility),
                meta.target_state.display(),
                meta.next_action,
                f"Wave {entry.assigned_wave}",
            ]
        )
    return out.getvalue().encode("utf-8")


def import_register(data: bytes) -> RegisterVersion:
    """Inverse of the STRUCTURED export; the round trip is byte-identical."""
    try:
        return RegisterVersion.from_dict(json.loads(data.decode("utf-8")))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise FormatError(f"not a structured register document: {exc}") from exc


# ---------------------------------------------------------------------------
# Coverage and exceptions
# ---------------------------------------------------------------------------


def coverage_and_exceptions(
    version: RegisterVersion,
    candidates: list[CandidateAsset] | None = None,
    scan_skips: list[tuple[str, str]] = (),
) -> tuple[CoverageMap, list[ExceptionRecord]]:
    """Per-source evidence coverage plus the open governance exceptions."""
    per_source = {s.value: 0 for s in FindingSource}
    for entry in version.entries:
        sources = {f.source for f in entry.enriched.candidate.findings}
        for source in sources:
            per_source[source.value] += 1
    coverage = CoverageMap(per_source=per_source, total_assets=len(version.entries))

    seen = version.created_at
    exceptions: list[ExceptionRecord] = []
    for entry in version.entries:
        if not entry.enriched.ownership_known:
            exceptions.append(
                ExceptionRecord(
                    kind=ExceptionKind.NO_ACCOUNTABLE_OWNER,
                    subject=entry.qer_id,
                    detail="no accountable owner recorded in RACI",
                    first_seen=seen,
                    last_seen=seen,
                )
            )
        if entry.enriched.metadata_defaulted:
            exceptions.append(
                ExceptionRecord(
                    kind=ExceptionKind.NO_METADATA,
                    subject=entry.qer_id,
                    detail="governance metadata missing; conservative defaults applied",
                    first_seen=seen,
                    last_seen=seen,
                )
            )
    for candidate in candidates or []:
        if candidate.unmapped:
            hint = candidate.asset_id.removeprefix("unmapped:")
            exceptions.append(
                ExceptionRecord(
                    kind=ExceptionKind.UNMAPPED_EVIDENCE,
                    subject=hint,
                    detail="evidence matched no asset-keying rule",
                    first_seen=seen,
                    last_seen=seen,
                )
            )
    for path, reason in scan_skips:
        exceptions.append(
            ExceptionRecord(
                kind=ExceptionKind.SCAN_SKIPPED,
                subject=path,
                detail=reason,
                first_seen=seen,
                last_seen=seen,
            )
        )
    exceptions.sort(key=lambda e: (e.kind.value, e.subject))
    return coverage, exceptions
