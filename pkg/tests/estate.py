"""Shared helper: run a synthetic estate through the full pipeline."""

from __future__ import annotations

from pathlib import Path

from qer.engine import ThreatScenario, build_entries
from qer.enrich import enrich, load_governance_file
from qer.ingest import load_asset_rules, normalize
from qer.jsonutil import load_jsonl
from qer.model import Level
from qer.reporting import EstateParams, portfolio_stats, synthesize_estate
from qer.scan import DiscoveryFinding
from qer.store import RegisterStore

#: Parameter block mirrored by the acceptance suite at one-tenth field scale.
def desk_scale_params(n_assets: int, n_endpoints: int, n_certificates: int, seed: int = 42) -> EstateParams:
    return EstateParams(
        n_assets=n_assets,
        n_endpoints=n_endpoints,
        n_certificates=n_certificates,
        rsa_fraction=0.68,
        owner_unknown_fraction=0.40,
        shelf_distribution=((3, 0.49), (5, 0.35), (6, 0.14), (15, 0.02)),
        migration_distribution=((1, 0.4), (2, 0.4), (3, 0.2)),
        evidence_mix=((Level.HIGH, 0.5), (Level.MED, 0.3), (Level.LOW, 0.2)),
        seed=seed,
    )


def run_estate_pipeline(params: EstateParams, workdir: Path, t_threat: float = 8.0):
    """Generate, ingest, enrich, evaluate, commit; return (store, version, stats)."""
    paths = synthesize_estate(params, workdir / "estate")
    findings = [
        DiscoveryFinding.from_dict(rec)
        for rec in load_jsonl(paths["findings"].read_text("utf-8"))
    ]
    rules = load_asset_rules(paths["asset_rules"])
    candidates = normalize(findings, rules)
    governance = load_governance_file(paths["governance"])
    enriched = enrich(candidates, governance)
    scenario = ThreatScenario(t_threat, scenario_label="estate run")
    entries = build_entries(enriched, scenario)
    store = RegisterStore(workdir / "register")
    version = store.commit(entries, scenario, parent=None)
    return store, version, portfolio_stats(version)
