"""Command-line pipeline: scan, probe, ingest, enrich, evaluate, govern, report.

Each stage reads and writes plain files (JSON/JSONL), so any stage can be
rerun, diffed, or replaced by captured evidence without touching the others.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .api import serve
from .engine import QEREntry, ThreatScenario, apply_override, build_entries, diff_scenarios, run_scenario
from .enrich import EnrichedAsset, enrich, load_governance_file, load_policy_table
from .errors import QerError
from .ingest import (
    CandidateAsset,
    ingest_crypto_sbom,
    load_asset_rules,
    load_crypto_sbom,
    load_dependency_map,
    normalize_report,
    observations_to_findings,
)
from .jsonutil import canonical_json, dump_jsonl, load_jsonl
from .netdiscovery import ingest_observation_file, probe_deep, probe_many, read_targets_file
from .reporting import EstateParams, portfolio_stats, render_report, synthesize_estate
from .scan import DiscoveryFinding, default_rules, load_rules, scan_tree_report
from .store import RegisterStore, coverage_and_exceptions, export_register


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args) or 0
    except QerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qer",
        description="Cryptographic discovery and quantum exposure register toolkit",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("scan", help="static-scan a source/config tree for crypto usage")
    p.add_argument("--root", required=True)
    p.add_argument("--rules", help="rules file (defaults to the bundled ruleset)")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--report", help="optional scan report (skips, counts)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("probe", help="probe TLS endpoints from an allow-list file")
    p.add_argument("--targets", required=True)
    p.add_argument("--timeout-ms", type=int, default=5000)
    p.add_argument("--parallel", type=int, default=8)
    p.add_argument("--min-interval-ms", type=int, default=0)
    p.add_argument("--deep", action="store_true", help="retry across TLS version floors")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("ingest", help="normalize findings into candidate assets")
    p.add_argument("--findings", nargs="*", default=[])
    p.add_argument("--observations", nargs="*", default=[], help="probe output files")
    p.add_argument("--sbom", nargs="*", default=[], help="crypto-SBOM documents")
    p.add_argument("--deps", nargs="*", default=[], help="dependency map files")
    p.add_argument("--asset-rules", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("enrich", help="join candidates with governance metadata")
    p.add_argument("--candidates", required=True)
    p.add_argument("--governance", required=True)
    p.add_argument("--retention-policy")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("evaluate", help="evaluate exposure and scores under a horizon")
    p.add_argument("--assets", required=True, help="enriched assets file")
    p.add_argument("--t-threat", type=float, required=True)
    p.add_argument("--label", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("commit", help="commit an evaluated register into the store")
    p.add_argument("--register", required=True, help="register store directory")
    p.add_argument("--entries", required=True, help="file produced by evaluate")
    p.add_argument("--actor", default="pipeline")
    p.set_defaults(func=cmd_commit)

    p = sub.add_parser("override", help="reassign a wave with an audited rationale")
    p.add_argument("--register", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--wave", type=int, required=True)
    p.add_argument("--actor", required=True)
    p.add_argument("--why", required=True)
    p.set_defaults(func=cmd_override)

    p = sub.add_parser("scenario-diff", help="compare two threat horizons")
    p.add_argument("--assets", required=True, help="enriched assets file")
    p.add_argument("--t-threat-a", type=float, required=True)
    p.add_argument("--t-threat-b", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scenario_diff)

    p = sub.add_parser("export", help="export a committed version")
    p.add_argument("--register", required=True)
    p.add_argument("--version", type=int, required=True)
    p.add_argument("--format", choices=["csv", "structured"], default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("history", help="list committed versions")
    p.add_argument("--register", required=True)
    p.set_defaults(func=cmd_history)

    p = sub.add_parser("exceptions", help="coverage map and exception register")
    p.add_argument("--register", required=True)
    p.add_argument("--version", type=int)
    p.add_argument("--candidates", help="candidates file for unmapped-evidence entries")
    p.add_argument("--scan-report", help="scan report file for skip entries")
    p.set_defaults(func=cmd_exceptions)

    p = sub.add_parser("report", help="render a summary or committee report")
    p.add_argument("--register", required=True)
    p.add_argument("--version", type=int, required=True)
    p.add_argument("--template", choices=["summary", "committee"], default="summary")
    p.add_argument("--out", required=True)
    p.add_argument("--stats-out", help="machine-readable stats file")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="generate a synthetic estate for validation")
    p.add_argument("--params", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("serve", help="serve the register over HTTP")
    p.add_argument("--register", required=True)
    p.add_argument("--bind", default="127.0.0.1:8787")
    p.set_defaults(func=cmd_serve)

    return parser


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------


def cmd_scan(args) -> int:
    rules = load_rules(args.rules) if args.rules else default_rules()
    findings, report = scan_tree_report(args.root, rules, workers=args.workers)
    Path(args.out).write_text(dump_jsonl([f.to_dict() for f in findings]), "utf-8")
    if args.report:
        Path(args.report).write_text(
            json.dumps(
                {
                    "root": report.root,
                    "files_scanned": report.files_scanned,
                    "findings": report.findings,
                    "skips": [list(s) for s in report.skips],
                },
                indent=2,
            )
            + "\n",
            "utf-8",
        )
    print(f"{len(findings)} findings from {report.files_scanned} files; {len(report.skips)} skipped")
    return 0


def cmd_probe(args) -> int:
    targets = read_targets_file(args.targets)
    timeout = args.timeout_ms / 1000.0
    if args.deep:
        observations = [obs for t in targets for obs in probe_deep(t, timeout=timeout)]
        observations.sort(key=lambda o: (o.endpoint, o.observed_at))
    else:
        observations = probe_many(
            targets,
            timeout=timeout,
            parallel=args.parallel,
            min_interval_s=args.min_interval_ms / 1000.0,
        )
    Path(args.out).write_text(dump_jsonl([o.to_dict() for o in observations]), "utf-8")
    ok = sum(1 for o in observations if o.probe_outcome.value == "OK")
    print(f"{len(observations)} observations ({ok} handshakes OK) from {len(targets)} targets")
    return 0


def cmd_ingest(args) -> int:
    findings: list[DiscoveryFinding] = []
    for path in args.findings:
        findings.extend(
            DiscoveryFinding.from_dict(rec) for rec in load_jsonl(Path(path).read_text("utf-8"))
        )
    for path in args.observations:
        findings.extend(observations_to_findings(ingest_observation_file(path)))
    for path in args.sbom:
        doc = load_crypto_sbom(path)
        # Timestamp from the document file itself keeps reruns reproducible.
        from datetime import datetime, timezone

        observed = datetime.fromtimestamp(Path(path).stat().st_mtime, tz=timezone.utc)
        findings.extend(
            ingest_crypto_sbom(doc, f"supplier:{doc.supplier}", observed_at=observed)
        )
    edges: list[tuple[str, str, str]] = []
    for path in args.deps:
        dep_findings, dep_edges = load_dependency_map(path)
        findings.extend(dep_findings)
        edges.extend(dep_edges)
    rules = load_asset_rules(args.asset_rules)
    assets, stats = normalize_report(findings, rules, edges)
    Path(args.out).write_text(dump_jsonl([a.to_dict() for a in assets]), "utf-8")
    print(
        f"{len(assets)} candidate assets from {stats.input_findings} findings "
        f"({stats.duplicates_dropped} duplicates dropped, "
        f"{len(stats.unmapped_hints)} unmapped hints)"
    )
    return 0


def cmd_enrich(args) -> int:
    candidates = [
        CandidateAsset.from_dict(rec)
        for rec in load_jsonl(Path(args.candidates).read_text("utf-8"))
    ]
    policy = load_policy_table(args.retention_policy) if args.retention_policy else None
    governance = load_governance_file(args.governance, policy)
    enriched = enrich(candidates, governance, policy)
    Path(args.out).write_text(dump_jsonl([a.to_dict() for a in enriched]), "utf-8")
    defaulted = sum(1 for a in enriched if a.metadata_defaulted)
    unowned = sum(1 for a in enriched if not a.ownership_known)
    print(f"{len(enriched)} assets enriched ({defaulted} defaulted, {unowned} without owner)")
    return 0


def _load_enriched(path: str) -> list[EnrichedAsset]:
    return [EnrichedAsset.from_dict(rec) for rec in load_jsonl(Path(path).read_text("utf-8"))]


def cmd_evaluate(args) -> int:
    assets = _load_enriched(args.assets)
    scenario = ThreatScenario(args.t_threat, scenario_label=args.label)
    entries = build_entries(assets, scenario)
    doc = {"scenario": scenario.to_dict(), "entries": [e.to_dict() for e in entries]}
    Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")
    exposed = sum(1 for e in entries if e.exposure.value != "NO")
    print(f"{len(entries)} entries evaluated at T_threat={args.t_threat}: {exposed} exposed")
    return 0


def cmd_commit(args) -> int:
    doc = json.loads(Path(args.entries).read_text("utf-8"))
    scenario = ThreatScenario.from_dict(doc["scenario"])
    entries = [QEREntry.from_dict(rec) for rec in doc["entries"]]
    store = RegisterStore(args.register)
    version = store.commit(entries, scenario, parent=store.latest_id(), actor=args.actor)
    print(f"committed version {version.version_id} ({len(entries)} entries)")
    return 0


def cmd_override(args) -> int:
    store = RegisterStore(args.register)
    latest = store.latest()
    if latest is None:
        print("error: register has no committed versions", file=sys.stderr)
        return 1
    entries = list(latest.entries)
    index = next((i for i, e in enumerate(entries) if e.qer_id == args.id), None)
    if index is None:
        print(f"error: no entry {args.id} in version {latest.version_id}", file=sys.stderr)
        return 1
    entries[index] = apply_override(entries[index], args.wave, args.actor, args.why)
    version = store.commit(entries, latest.scenario, parent=latest.version_id, actor=args.actor)
    print(
        f"version {version.version_id}: {args.id} wave "
        f"{entries[index].override.from_wave} -> {args.wave} by {args.actor}"
    )
    return 0


def cmd_scenario_diff(args) -> int:
    assets = _load_enriched(args.assets)
    result_a = run_scenario(assets, ThreatScenario(args.t_threat_a))
    result_b = run_scenario(assets, ThreatScenario(args.t_threat_b))
    changes = diff_scenarios(result_a, result_b)
    payload = {
        "t_threat_a": args.t_threat_a,
        "t_threat_b": args.t_threat_b,
        "changes": [c.to_dict() for c in changes],
    }
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_export(args) -> int:
    store = RegisterStore(args.register)
    version = store.version(args.version)
    Path(args.out).write_bytes(export_register(version, args.format))
    print(f"exported version {args.version} as {args.format} to {args.out}")
    return 0


def cmd_history(args) -> int:
    store = RegisterStore(args.register)
    for meta in store.history():
        print(
            f"v{meta['version_id']}  {meta['created_at']}  "
            f"T_threat={meta['scenario']['t_threat_years']}  "
            f"entries={meta.get('entry_count')}  parent={meta.get('parent_version')}"
        )
    return 0


def cmd_exceptions(args) -> int:
    store = RegisterStore(args.register)
    version_id = args.version if args.version is not None else store.latest_id()
    if version_id is None:
        print("error: register has no committed versions", file=sys.stderr)
        return 1
    version = store.version(version_id)
    candidates = None
    if args.candidates:
        candidates = [
            CandidateAsset.from_dict(rec)
            for rec in load_jsonl(Path(args.candidates).read_text("utf-8"))
        ]
    skips: list[tuple[str, str]] = []
    if args.scan_report:
        report = json.loads(Path(args.scan_report).read_text("utf-8"))
        skips = [tuple(s) for s in report.get("skips", [])]
    coverage, exceptions = coverage_and_exceptions(version, candidates, skips)
    print(json.dumps(coverage.to_dict(), indent=2))
    for record in exceptions:
        print(f"[{record.kind.value}] {record.subject}: {record.detail}")
    print(f"{len(exceptions)} open exceptions")
    return 0


def cmd_report(args) -> int:
    store = RegisterStore(args.register)
    version = store.version(args.version)
    stats = portfolio_stats(version)
    text = render_report(version, stats, args.template)
    Path(args.out).write_text(text, "utf-8")
    if args.stats_out:
        Path(args.stats_out).write_text(canonical_json(stats.to_dict()) + "\n", "utf-8")
    print(f"report written to {args.out}")
    return 0


def cmd_synth(args) -> int:
    params = EstateParams.from_dict(json.loads(Path(args.params).read_text("utf-8")))
    paths = synthesize_estate(params, args.out_dir)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_serve(args) -> int:
    server = serve(args.register, args.bind, background=False)
    host, port = server.server_address[:2]
    print(f"serving register {args.register} on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
