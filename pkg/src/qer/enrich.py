"""Governance enrichment: join candidates with risk metadata into decision-grade records.

Assets with no governance row are never dropped. They get worst-case
defaults (all-high criticality, policy-maximum shelf life, lowest agility,
unknown ownership) and surface in the exception register, because excluding
low-visibility systems is how true exposures get ignored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import ConfigError, FormatError, InputError
from .ingest import CandidateAsset, fuse_evidence
from .model import CIATriple, EvidenceConfidence, LEVEL_ORDER, Level

# Fallbacks for assets with no governance row; shelf defers to the retention
# policy's own maximum when one is configured.
DEFAULT_SHELF_CAP_YEARS = 25.0
DEFAULT_MIGRATION_YEARS = 3.0


class RaciRole(str, Enum):
    RESPONSIBLE = "RESPONSIBLE"
    ACCOUNTABLE = "ACCOUNTABLE"
    CONSULTED = "CONSULTED"
    INFORMED = "INFORMED"


class TargetState(str, Enum):
    HYBRID = "HYBRID"
    PQC = "PQC"
    SUPPLIER_LED = "SUPPLIER_LED"
    COMPENSATING_CONTROLS = "COMPENSATING_CONTROLS"

    def display(self) -> str:
        return {
            TargetState.HYBRID: "Hybrid",
            TargetState.PQC: "PQC",
            TargetState.SUPPLIER_LED: "Supplier-led",
            TargetState.COMPENSATING_CONTROLS: "Compensating controls",
        }[self]


@dataclass(frozen=True)
class GovernanceMetadata:
    criticality: CIATriple
    t_shelf_years: float
    t_migration_years: float
    raci: tuple[tuple[RaciRole, tuple[str, ...]], ...]
    crypto_agility: int
    target_state: TargetState
    next_action: str
    domain_label: str
    retention_class: str | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.crypto_agility <= 5:
            raise InputError(f"crypto_agility must be 1..5, got {self.crypto_agility}")
        for value, name in ((self.t_shelf_years, "t_shelf"), (self.t_migration_years, "t_migration")):
            if not math.isfinite(value) or value < 0:
                raise InputError(f"{name} must be a finite non-negative number of years")

    def roles(self, role: RaciRole) -> tuple[str, ...]:
        for r, names in self.raci:
            if r is role:
                return names
        return ()

    def owner_display(self) -> str:
        return " / ".join(self.roles(RaciRole.ACCOUNTABLE))

    def to_dict(self) -> dict:
        return {
            "criticality": self.criticality.to_dict(),
            "t_shelf_years": self.t_shelf_years,
            "t_migration_years": self.t_migration_years,
            "raci": {r.value: list(names) for r, names in self.raci},
            "crypto_agility": self.crypto_agility,
            "target_state": self.target_state.value,
            "next_action": self.next_action,
            "domain_label": self.domain_label,
            "retention_class": self.retention_class,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GovernanceMetadata":
        return cls(
            criticality=_criticality_from(d["criticality"]),
            t_shelf_years=float(d["t_shelf_years"]),
            t_migration_years=float(d["t_migration_years"]),
            raci=_raci_from(d.get("raci", {})),
            crypto_agility=int(d["crypto_agility"]),
            target_state=TargetState(d["target_state"]),
            next_action=d.get("next_action", ""),
            domain_label=d.get("domain_label", ""),
            retention_class=d.get("retention_class"),
        )


def _criticality_from(value) -> CIATriple:
    if isinstance(value, str):
        parts = [p.strip().upper() for p in value.split("/")]
        if len(parts) != 3:
            raise FormatError(f"criticality string must be C/I/A, got {value!r}")
        return CIATriple(*(Level(p) for p in parts))
    return CIATriple.from_dict(value)


def _raci_from(mapping: dict) -> tuple[tuple[RaciRole, tuple[str, ...]], ...]:
    out = []
    for role in RaciRole:
        names = mapping.get(role.value, [])
        out.append((role, tuple(names)))
    return tuple(out)


@dataclass(frozen=True)
class EnrichedAsset:
    candidate: CandidateAsset
    metadata: GovernanceMetadata
    evidence: EvidenceConfidence
    ownership_known: bool
    metadata_defaulted: bool = False

    @property
    def asset_id(self) -> str:
        return self.candidate.asset_id

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate.to_dict(),
            "metadata": self.metadata.to_dict(),
            "evidence": self.evidence.value,
            "ownership_known": self.ownership_known,
            "metadata_defaulted": self.metadata_defaulted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnrichedAsset":
        return cls(
            candidate=CandidateAsset.from_dict(d["candidate"]),
            metadata=GovernanceMetadata.from_dict(d["metadata"]),
            evidence=Level(d["evidence"]),
            ownership_known=d["ownership_known"],
            metadata_defaulted=d.get("metadata_defaulted", False),
        )


# ---------------------------------------------------------------------------
# Shelf-life derivation
# ---------------------------------------------------------------------------


def derive_shelf_life(retention_class: str, policy_table: dict[str, float]) -> float:
    """Exact policy lookup; an unknown class is a configuration error, never a guess."""
    if retention_class not in policy_table:
        raise ConfigError(f"retention class {retention_class!r} missing from policy table")
    return float(policy_table[retention_class])


def estimate_migration_years(
    candidate: CandidateAsset,
    base_years: float = 1.0,
    per_dependency_years: float = 0.5,
) -> float:
    """Additive fallback when no migration estimate exists: base + dependencies.

    Off by default and deliberately crude; the coefficients are placeholders
    for organizational judgment (complexity, change windows, supplier
    readiness), not calibrated benchmarks. Prefer explicit per-asset values.
    """
    if base_years < 0 or per_dependency_years < 0:
        raise InputError("heuristic coefficients must be non-negative")
    return base_years + per_dependency_years * len(candidate.dependency_edges)


def load_policy_table(path: str | Path) -> dict[str, float]:
    doc = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(doc, dict):
        raise FormatError("retention policy must map class names to years")
    return {k: float(v) for k, v in doc.items()}


# ---------------------------------------------------------------------------
# Enrichment
# ---------------------------------------------------------------------------


def load_governance_file(
    path: str | Path,
    policy_table: dict[str, float] | None = None,
) -> dict[str, GovernanceMetadata]:
    """Rows may state t_shelf_years directly or name a retention_class to derive it."""
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
        rows = doc["rows"] if isinstance(doc, dict) else doc
    except (json.JSONDecodeError, KeyError) as exc:
        raise FormatError(f"governance dataset unreadable: {exc}") from exc
    table: dict[str, GovernanceMetadata] = {}
    for i, row in enumerate(rows):
        try:
            if row.get("t_shelf_years") is None and row.get("retention_class"):
                row = dict(row)
                row["t_shelf_years"] = derive_shelf_life(row["retention_class"], policy_table or {})
            table[row["asset_id"]] = GovernanceMetadata.from_dict(row)
        except (KeyError, ValueError, InputError) as exc:
            raise FormatError(f"bad governance row: {exc}", record_index=i) from exc
    return table


def conservative_default_metadata(policy_table: dict[str, float] | None = None) -> GovernanceMetadata:
    shelf = max(policy_table.values(), default=DEFAULT_SHELF_CAP_YEARS) if policy_table else DEFAULT_SHELF_CAP_YEARS
    return GovernanceMetadata(
        criticality=CIATriple(Level.HIGH, Level.HIGH, Level.HIGH),
        t_shelf_years=float(shelf),
        t_migration_years=DEFAULT_MIGRATION_YEARS,
        raci=_raci_from({}),
        crypto_agility=1,
        target_state=TargetState.COMPENSATING_CONTROLS,
        next_action="Assign accountable owner and complete governance metadata",
        domain_label="Unassigned",
    )


def enrich(
    candidates: list[CandidateAsset],
    metadata_by_id: dict[str, GovernanceMetadata],
    policy_table: dict[str, float] | None = None,
) -> list[EnrichedAsset]:
    """Join candidates with governance rows; gaps get conservative defaults.

    Never drops an asset: |result| == |candidates|. A row whose shelf life is
    unset but carries a retention class gets it derived from the policy table.
    """
    enriched: list[EnrichedAsset] = []
    for candidate in candidates:
        metadata = metadata_by_id.get(candidate.asset_id)
        defaulted = metadata is None
        if metadata is None:
            metadata = conservative_default_metadata(policy_table)
        fused = fuse_evidence(candidate)
        if defaulted and LEVEL_ORDER[Level.LOW] < LEVEL_ORDER[fused]:
            evidence = Level.LOW
        else:
            evidence = fused
        ownership_known = bool(metadata.roles(RaciRole.ACCOUNTABLE))
        enriched.append(
            EnrichedAsset(
                candidate=candidate,
                metadata=metadata,
                evidence=evidence,
                ownership_known=ownership_known,
                metadata_defaulted=defaulted,
            )
        )
    return enriched
