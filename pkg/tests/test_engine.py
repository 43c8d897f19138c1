"""Exposure evaluation, priority scoring, wave assignment, and scenario analysis."""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from qer.engine import (
    EXPOSURE_ORDER,
    ExposureStatus,
    PriorityBand,
    ThreatScenario,
    apply_override,
    build_entries,
    criticality_score,
    diff_scenarios,
    evaluate_exposure,
    evidence_penalty,
    priority_score,
    run_scenario,
    time_exposure_score,
)
from qer.errors import InputError
from qer.model import CIATriple, Level
from qer.sampledata import (
    build_sample_enriched,
    build_sample_entries,
    expected_exposure_display,
    sample_scenario,
)

S8 = ThreatScenario(8)


class TestEvaluateExposure:
    def test_long_shelf_is_exposed(self):
        assert evaluate_exposure(15, 3, S8) is ExposureStatus.YES

    def test_short_horizon_not_exposed(self):
        assert evaluate_exposure(5, 2, S8) is ExposureStatus.NO

    def test_boundary_is_strict(self):
        # 7 + 1 = 8 and 8 > 8 is false: not exposed.
        assert evaluate_exposure(7, 1, S8) is ExposureStatus.NO

    def test_migration_tail_is_borderline(self):
        assert evaluate_exposure(8, 3, S8) is ExposureStatus.BORDERLINE

    def test_zero_lifetime_not_exposed(self):
        assert evaluate_exposure(0, 0, S8) is ExposureStatus.NO

    def test_negative_inputs_rejected(self):
        with pytest.raises(InputError):
            evaluate_exposure(-1, 3, S8)
        with pytest.raises(InputError):
            evaluate_exposure(3, -1, S8)

    def test_nonpositive_horizon_rejected(self):
        with pytest.raises(InputError):
            ThreatScenario(0)

    @settings(max_examples=300)
    @given(
        st.floats(min_value=0, max_value=50, allow_nan=False),
        st.floats(min_value=0, max_value=50, allow_nan=False),
        st.floats(min_value=0.1, max_value=50, allow_nan=False),
        st.floats(min_value=0.1, max_value=10, allow_nan=False),
    )
    def test_monotone_in_each_argument(self, shelf, migration, threat, delta):
        base = EXPOSURE_ORDER[evaluate_exposure(shelf, migration, ThreatScenario(threat))]
        more_shelf = EXPOSURE_ORDER[evaluate_exposure(shelf + delta, migration, ThreatScenario(threat))]
        more_migration = EXPOSURE_ORDER[
            evaluate_exposure(shelf, migration + delta, ThreatScenario(threat))
        ]
        more_threat = EXPOSURE_ORDER[
            evaluate_exposure(shelf, migration, ThreatScenario(threat + delta))
        ]
        assert more_shelf >= base
        assert more_migration >= base
        assert more_threat <= base


class TestComponentScores:
    def test_worked_example_criticality(self):
        assert criticality_score(CIATriple(Level.HIGH, Level.HIGH, Level.MED)) == 3

    def test_minimum_criticality(self):
        assert criticality_score(CIATriple(Level.LOW, Level.LOW, Level.LOW)) == 1

    def test_criticality_is_max_over_triple(self):
        mapping = {Level.HIGH: 3, Level.MED: 2, Level.LOW: 1}
        for triple in itertools.product(list(Level), repeat=3):
            expected = max(mapping[v] for v in triple)  # independent restatement
            assert criticality_score(CIATriple(*triple)) == expected

    def test_time_exposure_mapping(self):
        assert time_exposure_score(ExposureStatus.YES) == 3
        assert time_exposure_score(ExposureStatus.BORDERLINE) == 2
        assert time_exposure_score(ExposureStatus.NO) == 1

    def test_evidence_penalty_mapping(self):
        assert evidence_penalty(Level.HIGH) == 0
        assert evidence_penalty(Level.MED) == 1
        assert evidence_penalty(Level.LOW) == 2


class TestPriorityScore:
    def test_worked_example(self):
        result = priority_score(3, 3, 0)
        assert result.display() == "2.4"
        assert result.band is PriorityBand.CRITICAL_W1
        assert result.algorithmic_wave == 1

    def test_floor_of_range(self):
        result = priority_score(1, 1, 0)
        assert result.display() == "0.8"
        assert result.band is PriorityBand.LOW_W4

    def test_ceiling_of_range(self):
        result = priority_score(3, 3, 2)
        assert result.display() == "2.8"
        assert result.band is PriorityBand.CRITICAL_W1

    def test_mid_band(self):
        result = priority_score(3, 1, 0)
        assert result.display() == "1.6"
        assert result.band is PriorityBand.MEDIUM_W3

    def test_out_of_range_components(self):
        with pytest.raises(InputError):
            priority_score(0, 1, 0)
        with pytest.raises(InputError):
            priority_score(1, 4, 0)
        with pytest.raises(InputError):
            priority_score(1, 1, 3)

    def test_score_space_totality(self):
        achievable = set()
        for crit, exp, pen in itertools.product((1, 2, 3), (1, 2, 3), (0, 1, 2)):
            result = priority_score(crit, exp, pen)
            achievable.add(result.priority_tenths)
            # Exactly one band claims each achievable score.
            bands = [
                band
                for band, (lo, hi) in {
                    PriorityBand.LOW_W4: (8, 12),
                    PriorityBand.MEDIUM_W3: (13, 18),
                    PriorityBand.HIGH_W2: (19, 23),
                    PriorityBand.CRITICAL_W1: (24, 28),
                }.items()
                if lo <= result.priority_tenths <= hi
            ]
            assert bands == [result.band]
        assert achievable == set(range(8, 29, 2))
        assert min(achievable) == 8 and max(achievable) == 28

    def test_weights_sum_to_one_and_strictly_increasing(self):
        assert 0.4 + 0.4 + 0.2 == 1.0
        for crit, exp, pen in itertools.product((1, 2, 3), (1, 2, 3), (0, 1, 2)):
            base = priority_score(crit, exp, pen).priority_tenths
            if crit < 3:
                assert priority_score(crit + 1, exp, pen).priority_tenths > base
            if exp < 3:
                assert priority_score(crit, exp + 1, pen).priority_tenths > base
            if pen < 2:
                assert priority_score(crit, exp, pen + 1).priority_tenths > base


class TestBuildEntries:
    def test_sample_estate_exposure_statuses(self):
        entries = build_sample_entries()
        assert len(entries) == 12
        expected = expected_exposure_display()
        for entry in entries:
            assert entry.exposure.display() == expected[entry.qer_id], entry.qer_id

    def test_exposure_tally(self):
        entries = build_sample_entries()
        counts = {"Yes": 0, "Borderline": 0, "No": 0}
        for e in entries:
            counts[e.exposure.display()] += 1
        assert counts == {"Yes": 9, "Borderline": 1, "No": 2}

    def test_kyc_vault_scores_wave_one(self):
        entries = {e.qer_id: e for e in build_sample_entries()}
        vault = entries["QER-009"]
        assert vault.priority.display() == "2.4"
        assert vault.priority.algorithmic_wave == 1
        assert vault.assigned_wave == 1

    def test_sorted_by_priority_then_id(self):
        entries = build_sample_entries()
        keys = [(-e.priority.priority_tenths, e.qer_id) for e in entries]
        assert keys == sorted(keys)

    def test_empty_input(self):
        assert build_entries([], S8) == []

    def test_single_shared_scenario(self):
        entries = build_sample_entries()
        assert len({e.scenario for e in entries}) == 1


class TestApplyOverride:
    def _entry(self):
        return next(e for e in build_sample_entries() if e.qer_id == "QER-001")

    def test_override_preserves_algorithmic_wave(self):
        entry = self._entry()
        overridden = apply_override(entry, 2, "Risk Committee", "supplier constraint")
        assert overridden.assigned_wave == 2
        assert overridden.priority.algorithmic_wave == entry.priority.algorithmic_wave == 1
        assert overridden.override.from_wave == 1
        assert overridden.override.to_wave == 2
        assert overridden.override.actor == "Risk Committee"

    def test_re_override_replaces_record(self):
        entry = self._entry()
        first = apply_override(entry, 2, "Risk Committee", "first pass")
        second = apply_override(first, 3, "Risk Committee", "second pass")
        assert second.assigned_wave == 3
        assert second.override.from_wave == 2
        assert second.override.rationale == "second pass"

    def test_override_to_current_wave_allowed(self):
        entry = self._entry()
        same = apply_override(entry, entry.assigned_wave, "Risk Committee", "confirmed as-is")
        assert same.override is not None

    def test_empty_rationale_rejected(self):
        with pytest.raises(InputError):
            apply_override(self._entry(), 2, "Risk Committee", "   ")

    def test_wave_range_enforced(self):
        with pytest.raises(InputError):
            apply_override(self._entry(), 5, "Risk Committee", "why")

    def test_committee_overrides_in_sample(self):
        entries = {e.qer_id: e for e in build_sample_entries()}
        # The fleet scores into wave 1 but was sequenced into wave 2.
        fleet = entries["QER-007"]
        assert fleet.priority.algorithmic_wave == 1
        assert fleet.assigned_wave == 2
        assert fleet.override is not None and fleet.override.rationale


class TestScenarioAnalysis:
    def test_identical_scenarios_empty_diff(self):
        assets = build_sample_enriched()
        a = run_scenario(assets, ThreatScenario(8))
        b = run_scenario(assets, ThreatScenario(8))
        assert diff_scenarios(a, b) == []

    def test_horizon_8_vs_12_moves_gateway_to_borderline(self):
        assets = build_sample_enriched()
        diff = diff_scenarios(
            run_scenario(assets, ThreatScenario(8)), run_scenario(assets, ThreatScenario(12))
        )
        by_id = {c.qer_id: c for c in diff}
        gateway = by_id["QER-002"]
        assert gateway.exposure_before is ExposureStatus.YES
        assert gateway.exposure_after is ExposureStatus.BORDERLINE

    def test_horizon_20_leaves_only_pki_core_nonclear(self):
        assets = build_sample_enriched()
        result = run_scenario(assets, ThreatScenario(20))
        statuses = {e.qer_id: e.exposure for e in result.entries}
        assert statuses.pop("QER-005") is ExposureStatus.BORDERLINE
        assert all(status is ExposureStatus.NO for status in statuses.values())

    def test_scenario_changes_only_exposure_score_wave(self):
        assets = build_sample_enriched()
        a = {e.qer_id: e for e in run_scenario(assets, ThreatScenario(8)).entries}
        b = {e.qer_id: e for e in run_scenario(assets, ThreatScenario(20)).entries}
        for qer_id in a:
            assert a[qer_id].enriched == b[qer_id].enriched  # identity untouched

    def test_mismatched_asset_sets_rejected(self):
        assets = build_sample_enriched()
        a = run_scenario(assets, ThreatScenario(8))
        b = run_scenario(assets[:-1], ThreatScenario(8))
        with pytest.raises(InputError):
            diff_scenarios(a, b)
