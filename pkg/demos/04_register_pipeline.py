#!/usr/bin/env python3
"""The bundled twelve-asset estate, end to end.

Candidates with synthesized evidence flow through fusion, enrichment, and
exposure scoring; committee overrides reassign four waves with recorded
rationales; the result commits into a register store and exports as CSV.
"""

import tempfile

from qer.reporting import ReportTemplate, portfolio_stats, render_report
from qer.sampledata import build_sample_entries, sample_scenario
from qer.store import ExportFormat, RegisterStore, export_register


def main() -> None:
    entries = build_sample_entries()
    scenario = sample_scenario()

    print(f"Threat horizon: {scenario.t_threat_years:g} years ({scenario.scenario_label})\n")
    header = f"{'QER ID':<9} {'Exposure':<11} {'Priority':<9} {'Computed':<9} {'Assigned':<9} Evidence"
    print(header)
    print("-" * len(header))
    for e in entries:
        marker = "*" if e.override else " "
        print(
            f"{e.qer_id:<9} {e.exposure.display():<11} {e.priority.display():<9} "
            f"W{e.priority.algorithmic_wave:<8} W{e.assigned_wave}{marker:<7} "
            f"{e.enriched.evidence.display()}"
        )
    print("\n* committee override; both waves stay on record:")
    for e in entries:
        if e.override:
            print(f"  {e.qer_id}: W{e.override.from_wave} -> W{e.override.to_wave}: {e.override.rationale}")

    with tempfile.TemporaryDirectory() as tmp:
        store = RegisterStore(tmp)
        version = store.commit(entries, scenario, parent=None)
        print(f"\ncommitted version {version.version_id} with {len(version.audit_events)} audit events")

        print("\nCSV export (first three rows):")
        for line in export_register(version, ExportFormat.CSV).decode().split("\r\n")[:4]:
            print("  " + line[:120])

        print("\n" + render_report(version, portfolio_stats(version), ReportTemplate.SUMMARY))


if __name__ == "__main__":
    main()
