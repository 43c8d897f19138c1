"""End-to-end pipeline driven through the command-line interface."""

from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from qer.cli import main
from qer.jsonutil import load_jsonl

from corpus import build_planted_tree
from tlsserver import start_tls_server, stop_tls_server


GOVERNANCE = [
    {
        "asset_id": "BILLING-APP",
        "criticality": "HIGH/HIGH/MED",
        "retention_class": "financial-records",
        "t_migration_years": 3,
        "raci": {"ACCOUNTABLE": ["Billing Owner", "Platform Lead"]},
        "crypto_agility": 2,
        "target_state": "HYBRID",
        "next_action": "Plan key rotation and hybrid TLS rollout",
        "domain_label": "Billing",
    },
    {
        "asset_id": "EDGE-TLS",
        "criticality": "MED/HIGH/MED",
        "t_shelf_years": 2,
        "t_migration_years": 1,
        "raci": {"ACCOUNTABLE": ["Edge Team"]},
        "crypto_agility": 4,
        "target_state": "HYBRID",
        "next_action": "Enable hybrid key exchange when supported",
        "domain_label": "Edge",
    },
]


@pytest.fixture()
def pipeline_dir(tmp_path):
    tree = tmp_path / "tree"
    tree.mkdir()
    build_planted_tree(tree)

    (tmp_path / "asset_rules.json").write_text(
        json.dumps(
            {
                "rules": [
                    {"pattern": f"{tree}/", "asset_id": "BILLING-APP"},
                    {"pattern": "127.0.0.1:", "asset_id": "EDGE-TLS"},
                    {
                        "pattern": "supplier:Acme",
                        "asset_id": "VENDOR-ACME",
                        "system_context": "VENDOR_DEPENDENCY",
                        "third_party": True,
                    },
                ]
            }
        )
    )
    (tmp_path / "governance.json").write_text(json.dumps(GOVERNANCE))
    (tmp_path / "retention.json").write_text(json.dumps({"financial-records": 10}))
    (tmp_path / "sbom.json").write_text(
        json.dumps(
            {
                "supplier": "Acme",
                "component": "hsm-driver",
                "declared_mechanisms": [
                    {"mechanism": "RSA-2048", "location": "key wrapping"},
                    {"mechanism": "AES-256", "location": "bulk"},
                ],
                "key_management_notes": "keys held in vendor HSM",
            }
        )
    )
    return tmp_path


def run_cli(*argv: str) -> int:
    return main(list(argv))


class TestPipeline:
    def test_full_pipeline(self, pipeline_dir, capsys):
        root = pipeline_dir
        tree = root / "tree"

        # scan
        assert run_cli(
            "scan",
            "--root", str(tree),
            "--out", str(root / "findings.jsonl"),
            "--report", str(root / "scan_report.json"),
        ) == 0
        findings = load_jsonl((root / "findings.jsonl").read_text())
        assert len(findings) == 14

        # probe a loopback TLS server
        server = start_tls_server(
            *__import__("tlsserver").make_self_signed("rsa", "edge.test")
        )
        try:
            (root / "targets.txt").write_text(f"{server.endpoint}\n")
            assert run_cli(
                "probe",
                "--targets", str(root / "targets.txt"),
                "--timeout-ms", "3000",
                "--parallel", "2",
                "--out", str(root / "observations.jsonl"),
            ) == 0
        finally:
            stop_tls_server(server)
        observations = load_jsonl((root / "observations.jsonl").read_text())
        assert len(observations) == 1 and observations[0]["probe_outcome"] == "OK"

        # ingest static + dynamic + sbom
        assert run_cli(
            "ingest",
            "--findings", str(root / "findings.jsonl"),
            "--observations", str(root / "observations.jsonl"),
            "--sbom", str(root / "sbom.json"),
            "--asset-rules", str(root / "asset_rules.json"),
            "--out", str(root / "candidates.jsonl"),
        ) == 0
        candidates = load_jsonl((root / "candidates.jsonl").read_text())
        ids = {c["asset_id"] for c in candidates}
        assert ids == {"BILLING-APP", "EDGE-TLS", "VENDOR-ACME"}

        # enrich (retention class drives the billing shelf life)
        assert run_cli(
            "enrich",
            "--candidates", str(root / "candidates.jsonl"),
            "--governance", str(root / "governance.json"),
            "--retention-policy", str(root / "retention.json"),
            "--out", str(root / "enriched.jsonl"),
        ) == 0
        enriched = {rec["candidate"]["asset_id"]: rec for rec in load_jsonl((root / "enriched.jsonl").read_text())}
        assert enriched["BILLING-APP"]["metadata"]["t_shelf_years"] == 10
        assert enriched["VENDOR-ACME"]["metadata_defaulted"] is True

        # evaluate + commit
        assert run_cli(
            "evaluate",
            "--assets", str(root / "enriched.jsonl"),
            "--t-threat", "8",
            "--label", "baseline",
            "--out", str(root / "register.json"),
        ) == 0
        assert run_cli("commit", "--register", str(root / "store"), "--entries", str(root / "register.json")) == 0

        # export CSV and check the billing row
        assert run_cli(
            "export",
            "--register", str(root / "store"),
            "--version", "1",
            "--format", "csv",
            "--out", str(root / "register.csv"),
        ) == 0
        rows = list(csv.DictReader((root / "register.csv").read_text().splitlines()))
        billing = next(r for r in rows if r["QER ID"] == "BILLING-APP")
        assert billing["T_shelf"] == "10"
        assert billing["Time-Exposed?"] == "Yes"
        assert billing["Owner Biz/Tech"] == "Billing Owner / Platform Lead"

        # governance override creates version 2
        assert run_cli(
            "override",
            "--register", str(root / "store"),
            "--id", "BILLING-APP",
            "--wave", "2",
            "--actor", "Risk Committee",
            "--why", "sequenced after PKI remediation",
        ) == 0

        # history shows two versions
        capsys.readouterr()
        assert run_cli("history", "--register", str(root / "store")) == 0
        history_lines = capsys.readouterr().out.strip().splitlines()
        assert len(history_lines) == 2
        assert history_lines[0].startswith("v1")

        # exceptions: vendor asset has defaulted metadata and no owner
        assert run_cli(
            "exceptions",
            "--register", str(root / "store"),
            "--candidates", str(root / "candidates.jsonl"),
            "--scan-report", str(root / "scan_report.json"),
        ) == 0
        out = capsys.readouterr().out
        assert "NO_METADATA" in out and "VENDOR-ACME" in out

        # report
        assert run_cli(
            "report",
            "--register", str(root / "store"),
            "--version", "2",
            "--template", "committee",
            "--out", str(root / "report.txt"),
            "--stats-out", str(root / "stats.json"),
        ) == 0
        report = (root / "report.txt").read_text()
        assert "BILLING-APP" in report
        assert "Governance overrides" in report
        stats = json.loads((root / "stats.json").read_text())
        assert stats["total_assets"] == 3

    def test_scenario_diff_command(self, pipeline_dir, capsys):
        root = pipeline_dir
        # Minimal enriched file via the sample estate
        from qer.jsonutil import dump_jsonl
        from qer.sampledata import build_sample_enriched

        (root / "enriched.jsonl").write_text(
            dump_jsonl([a.to_dict() for a in build_sample_enriched()])
        )
        assert run_cli(
            "scenario-diff",
            "--assets", str(root / "enriched.jsonl"),
            "--t-threat-a", "8",
            "--t-threat-b", "20",
        ) == 0
        payload = json.loads(capsys.readouterr().out)
        changed = {c["qer_id"]: c for c in payload["changes"]}
        assert changed["QER-005"]["exposure"] == ["Yes", "Borderline"]

    def test_synth_command(self, pipeline_dir):
        root = pipeline_dir
        (root / "params.json").write_text(
            json.dumps(
                {
                    "n_assets": 50,
                    "n_endpoints": 61,
                    "n_certificates": 100,
                    "rsa_fraction": 0.68,
                    "owner_unknown_fraction": 0.4,
                    "shelf_distribution": [[3, 0.5], [5, 0.3], [15, 0.2]],
                    "migration_distribution": [[1, 0.5], [2, 0.5]],
                    "evidence_mix": {"HIGH": 0.5, "MED": 0.3, "LOW": 0.2},
                    "seed": 7,
                }
            )
        )
        assert run_cli("synth", "--params", str(root / "params.json"), "--out-dir", str(root / "estate")) == 0
        assert (root / "estate" / "findings.jsonl").exists()
        assert (root / "estate" / "governance.json").exists()
        assert (root / "estate" / "asset_rules.json").exists()

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "qer.cli", "--help"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "scan" in proc.stdout and "serve" in proc.stdout

    def test_error_paths_return_nonzero(self, tmp_path, capsys):
        assert run_cli("export", "--register", str(tmp_path), "--version", "1", "--out", str(tmp_path / "x.csv")) == 1
        assert "error:" in capsys.readouterr().err
