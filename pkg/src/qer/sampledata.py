"""Builders for the bundled twelve-asset demonstration estate.

The sample rows flow through the real pipeline: synthesized findings are
normalized, fused, enriched, and scored exactly like discovered evidence.
Rows whose committee wave differs from the computed band get a recorded
governance override, which is the point of the hybrid allocation model.
"""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from importlib import resources

from .engine import QEREntry, ThreatScenario, apply_override, build_entries
from .enrich import EnrichedAsset, GovernanceMetadata, RaciRole, TargetState, enrich
from .ingest import CandidateAsset, SystemContext
from .model import CIATriple, Level, parse_mechanism_labels
from .scan import DiscoveryFinding, FindingKind, FindingSource

SAMPLE_T0 = datetime(2026, 1, 15, tzinfo=timezone.utc)
OVERRIDE_ACTOR = "Architecture Board"


def sample_document() -> dict:
    raw = resources.files("qer.data").joinpath("sample_register.json").read_text("utf-8")
    return json.loads(raw)


def sample_scenario() -> ThreatScenario:
    doc = sample_document()
    return ThreatScenario(
        t_threat_years=doc["t_threat_years"],
        scenario_label=doc["scenario_label"],
        source_note=doc.get("source_note", ""),
    )


def sample_rows() -> list[dict]:
    return sample_document()["rows"]


def _findings_for_row(row: dict) -> list[DiscoveryFinding]:
    """Synthesize findings matching the row's evidence level.

    HIGH rows carry corroborating static+dynamic evidence, MED rows a single
    dynamic sighting, LOW rows only a supplier declaration.
    """
    qer_id = row["qer_id"]
    mechanisms = parse_mechanism_labels(row["current_crypto"])
    evidence = Level(row["evidence"])
    findings: list[DiscoveryFinding] = []

    def finding(source: FindingSource, location: str, mechanism, rule_id: str) -> DiscoveryFinding:
        return DiscoveryFinding(
            source=source,
            asset_hint=qer_id,
            location=location,
            mechanism=mechanism,
            kind=FindingKind.CONFIG_REFERENCE,
            observed_at=SAMPLE_T0,
            rule_id=rule_id,
            raw_excerpt=row["current_crypto"],
        )

    if evidence is Level.HIGH:
        for i, mech in enumerate(mechanisms):
            findings.append(
                finding(FindingSource.STATIC, f"{qer_id}/src:{i + 1}", mech, "sample-static")
            )
        findings.append(
            finding(
                FindingSource.DYNAMIC,
                f"{qer_id}.internal:443 handshake",
                mechanisms[0],
                "probe:handshake",
            )
        )
    elif evidence is Level.MED:
        findings.append(
            finding(
                FindingSource.DYNAMIC,
                f"{qer_id}.internal:443 handshake",
                mechanisms[0],
                "probe:handshake",
            )
        )
    else:
        findings.append(
            finding(FindingSource.SBOM, f"sbom:{qer_id}", mechanisms[0], f"sbom:{qer_id}")
        )
    return findings


def build_sample_candidates() -> list[CandidateAsset]:
    candidates = []
    for row in sample_rows():
        findings = _findings_for_row(row)
        mechanisms = tuple(
            sorted({f.mechanism for f in findings}, key=lambda m: (m.family.value, m.parameter or ""))
        )
        context = SystemContext(row["system_context"])
        edges = tuple((part.strip(), "supplier") for part in row["third_party_note"].split(","))
        candidates.append(
            CandidateAsset(
                asset_id=row["qer_id"],
                display_name=row["asset"],
                system_context=context,
                mechanisms=mechanisms,
                findings=tuple(findings),
                dependency_edges=edges,
                third_party=(
                    context is SystemContext.VENDOR_DEPENDENCY
                    or any(f.source is FindingSource.SBOM for f in findings)
                ),
                crypto_label=row["current_crypto"],
            )
        )
    return candidates


def sample_governance_table() -> dict[str, GovernanceMetadata]:
    table = {}
    for row in sample_rows():
        raci = {
            RaciRole.RESPONSIBLE.value: [row["owner_technical"]],
            RaciRole.ACCOUNTABLE.value: [row["owner_business"], row["owner_technical"]],
            RaciRole.CONSULTED.value: [],
            RaciRole.INFORMED.value: [],
        }
        table[row["qer_id"]] = GovernanceMetadata.from_dict(
            {
                "criticality": row["criticality"],
                "t_shelf_years": row["t_shelf_years"],
                "t_migration_years": row["t_migration_years"],
                "raci": raci,
                "crypto_agility": row["crypto_agility"],
                "target_state": row["target_state"],
                "next_action": row["next_action"],
                "domain_label": row["domain"],
            }
        )
    return table


def build_sample_enriched() -> list[EnrichedAsset]:
    return enrich(build_sample_candidates(), sample_governance_table())


def build_sample_entries(scenario: ThreatScenario | None = None) -> list[QEREntry]:
    """Entries under the bundled scenario, committee overrides applied."""
    scenario = scenario or sample_scenario()
    entries = build_entries(build_sample_enriched(), scenario)
    listed = {row["qer_id"]: row for row in sample_rows()}
    out = []
    for entry in entries:
        row = listed[entry.qer_id]
        if entry.priority.algorithmic_wave != row["wave"]:
            entry = apply_override(
                entry,
                to_wave=row["wave"],
                actor=OVERRIDE_ACTOR,
                rationale=row.get(
                    "override_rationale",
                    "Committee sequencing decision recorded during register review",
                ),
                at=SAMPLE_T0 + timedelta(days=1),
            )
        out.append(entry)
    return out


def expected_exposure_display() -> dict[str, str]:
    """Time-exposed column of the bundled rows (oracle for tests and demos)."""
    return {
        "QER-001": "Yes",
        "QER-002": "Yes",
        "QER-003": "No",
        "QER-004": "Yes",
        "QER-005": "Yes",
        "QER-006": "No",
        "QER-007": "Yes",
        "QER-008": "Yes",
        "QER-009": "Yes",
        "QER-010": "Borderline",
        "QER-011": "Yes",
        "QER-012": "Yes",
    }


__all__ = [
    "CIATriple",
    "TargetState",
    "build_sample_candidates",
    "build_sample_enriched",
    "build_sample_entries",
    "expected_exposure_display",
    "sample_governance_table",
    "sample_rows",
    "sample_scenario",
]
