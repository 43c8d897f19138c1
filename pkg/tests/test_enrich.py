"""Governance enrichment and shelf-life derivation."""

from __future__ import annotations

import pytest

from qer.enrich import (
    GovernanceMetadata,
    RaciRole,
    TargetState,
    conservative_default_metadata,
    derive_shelf_life,
    enrich,
    load_governance_file,
    load_policy_table,
)
from qer.errors import ConfigError, FormatError, InputError
from qer.ingest import CandidateAsset, SystemContext
from qer.model import Level
from qer.sampledata import (
    build_sample_candidates,
    build_sample_enriched,
    sample_governance_table,
    sample_rows,
)


class TestDeriveShelfLife:
    def test_exact_lookup(self):
        assert derive_shelf_life("identity-longterm", {"identity-longterm": 15}) == 15

    def test_zero_retention_class(self):
        assert derive_shelf_life("web-session", {"web-session": 0}) == 0

    def test_missing_class_is_configuration_error(self):
        with pytest.raises(ConfigError) as exc_info:
            derive_shelf_life("missing", {})
        assert "missing" in str(exc_info.value)


class TestGovernanceMetadata:
    def test_agility_bounds(self):
        row = sample_governance_table()["QER-001"]
        assert 1 <= row.crypto_agility <= 5
        with pytest.raises(InputError):
            GovernanceMetadata.from_dict({**row.to_dict(), "crypto_agility": 6})

    def test_negative_years_rejected(self):
        row = sample_governance_table()["QER-001"].to_dict()
        row["t_shelf_years"] = -1
        with pytest.raises(InputError):
            GovernanceMetadata.from_dict(row)

    def test_owner_display_joins_accountable(self):
        row = sample_governance_table()["QER-009"]
        assert row.owner_display() == "Chief Data Owner / Sec Eng"

    def test_round_trip(self):
        row = sample_governance_table()["QER-004"]
        assert GovernanceMetadata.from_dict(row.to_dict()) == row


class TestEnrich:
    def test_sample_kyc_vault_row(self):
        enriched = {a.asset_id: a for a in build_sample_enriched()}
        vault = enriched["QER-009"]
        assert vault.metadata.criticality.display() == "High / High / Med"
        assert vault.metadata.t_shelf_years == 15
        assert vault.metadata.t_migration_years == 4
        assert vault.evidence is Level.HIGH
        assert vault.ownership_known

    def test_never_drops_assets(self):
        candidates = build_sample_candidates()
        assert len(enrich(candidates, {})) == len(candidates)
        assert len(enrich(candidates, sample_governance_table())) == len(candidates)

    def test_missing_metadata_gets_conservative_defaults(self):
        candidates = build_sample_candidates()[:1]
        (asset,) = enrich(candidates, {}, policy_table={"archive": 20, "session": 1})
        assert asset.metadata_defaulted
        assert not asset.ownership_known
        assert asset.metadata.criticality.display() == "High / High / High"
        assert asset.metadata.t_shelf_years == 20  # policy maximum
        assert asset.metadata.crypto_agility == 1
        assert asset.metadata.target_state is TargetState.COMPENSATING_CONTROLS

    def test_defaulted_assets_score_evidence_low(self):
        candidates = build_sample_candidates()  # several would fuse HIGH
        for asset in enrich(candidates, {}):
            assert asset.evidence is Level.LOW

    def test_fused_evidence_matches_transcribed_column(self):
        expected = {row["qer_id"]: Level(row["evidence"]) for row in sample_rows()}
        for asset in build_sample_enriched():
            assert asset.evidence is expected[asset.asset_id], asset.asset_id

    def test_ownership_known_iff_accountable(self):
        table = sample_governance_table()
        orphanned = {
            k: (
                v
                if k != "QER-011"
                else GovernanceMetadata.from_dict(
                    {**v.to_dict(), "raci": {"ACCOUNTABLE": []}}
                )
            )
            for k, v in table.items()
        }
        enriched = {a.asset_id: a for a in enrich(build_sample_candidates(), orphanned)}
        assert not enriched["QER-011"].ownership_known
        assert enriched["QER-001"].ownership_known

    def test_empty_candidates(self):
        assert enrich([], sample_governance_table()) == []


class TestMigrationHeuristic:
    def test_additive_in_dependency_count(self):
        from qer.enrich import estimate_migration_years

        candidates = {c.asset_id: c for c in build_sample_candidates()}
        identity = candidates["QER-001"]  # two supplier edges
        assert estimate_migration_years(identity) == 1.0 + 0.5 * 2
        assert estimate_migration_years(identity, base_years=2, per_dependency_years=1) == 4

    def test_not_applied_by_enrich(self):
        # The heuristic is opt-in; enrich always uses the governance value.
        enriched = {a.asset_id: a for a in build_sample_enriched()}
        assert enriched["QER-001"].metadata.t_migration_years == 3

    def test_negative_coefficients_rejected(self):
        from qer.enrich import estimate_migration_years

        candidate = build_sample_candidates()[0]
        with pytest.raises(InputError):
            estimate_migration_years(candidate, base_years=-1)


class TestGovernanceFiles:
    def test_retention_class_derivation_on_load(self, tmp_path):
        policy = tmp_path / "policy.json"
        policy.write_text('{"identity-longterm": 15}')
        governance = tmp_path / "governance.json"
        governance.write_text(
            """[{"asset_id": "A-1", "criticality": "HIGH/HIGH/MED",
                 "retention_class": "identity-longterm", "t_migration_years": 3,
                 "raci": {"ACCOUNTABLE": ["Owner"]}, "crypto_agility": 2,
                 "target_state": "HYBRID", "next_action": "plan", "domain_label": "Identity"}]"""
        )
        table = load_governance_file(governance, load_policy_table(policy))
        assert table["A-1"].t_shelf_years == 15

    def test_unknown_retention_class_fails_loudly(self, tmp_path):
        governance = tmp_path / "governance.json"
        governance.write_text(
            """[{"asset_id": "A-1", "criticality": "HIGH/HIGH/MED",
                 "retention_class": "nope", "t_migration_years": 3,
                 "raci": {}, "crypto_agility": 2, "target_state": "HYBRID",
                 "next_action": "", "domain_label": ""}]"""
        )
        with pytest.raises((ConfigError, FormatError)):
            load_governance_file(governance, {})

    def test_malformed_file_is_format_error(self, tmp_path):
        bad = tmp_path / "governance.json"
        bad.write_text("not json")
        with pytest.raises(FormatError):
            load_governance_file(bad)
