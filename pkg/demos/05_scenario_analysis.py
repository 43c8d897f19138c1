#!/usr/bin/env python3
"""What-if threat horizons over the bundled estate.

The committed register assumes one horizon; scenario analysis re-evaluates
the same assets under alternatives and reports exactly what moves. Nothing
is persisted: identity, ownership, and evidence never change, only exposure,
score, and computed wave.
"""

from qer.engine import ThreatScenario, diff_scenarios, run_scenario
from qer.sampledata import build_sample_enriched


def main() -> None:
    assets = build_sample_enriched()
    baseline = run_scenario(assets, ThreatScenario(8, scenario_label="committed"))

    print("horizon  Yes  Borderline  No   changes vs committed")
    print("-" * 56)
    for horizon in (5, 8, 10, 12, 15, 20):
        candidate = run_scenario(assets, ThreatScenario(horizon))
        counts = candidate.exposure_counts()
        changes = diff_scenarios(baseline, candidate)
        print(
            f"{horizon:>6}   {counts['YES']:<4} {counts['BORDERLINE']:<11} "
            f"{counts['NO']:<4} {len(changes)}"
        )

    print("\nDetail at a 20-year horizon:")
    for change in diff_scenarios(baseline, run_scenario(assets, ThreatScenario(20))):
        before, after = change.exposure_before.display(), change.exposure_after.display()
        print(f"  {change.qer_id}: {before} -> {after}, priority {change.priority_before} -> {change.priority_after}")


if __name__ == "__main__":
    main()
