"""Static scanner: secret detection, tree scanning, determinism, redaction."""

from __future__ import annotations

import math
import random
from collections import Counter

import pytest

from qer.errors import ScanIOError
from qer.jsonutil import dump_jsonl
from qer.model import MechanismFamily
from qer.scan import (
    DiscoveryFinding,
    FindingKind,
    FindingSource,
    default_rules,
    detect_embedded_secret,
    redact_excerpt,
    scan_tree,
    scan_tree_report,
)

from corpus import PEM_BLOCK, PLANTED, SECRET_TOKEN, build_clean_tree, build_planted_tree


def independent_entropy(text: str) -> float:
    # Deliberately restated here rather than imported from the scanner.
    return -sum((n / len(text)) * math.log2(n / len(text)) for n in Counter(text).values())


class TestDetectEmbeddedSecret:
    def test_pem_block_is_one_high_span(self):
        content = "# config\n" + PEM_BLOCK + "# done\n"
        spans = detect_embedded_secret(content)
        assert len(spans) == 1
        assert spans[0].confidence == "HIGH"
        assert content[spans[0].start : spans[0].end].startswith("-----BEGIN RSA")

    def test_low_entropy_run_ignored(self):
        spans = detect_embedded_secret("a" * 44)
        assert spans == []

    def test_random_base64_run_is_med(self):
        alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/"
        token = "".join(random.Random(3).choices(alphabet, k=64))
        assert independent_entropy(token) >= 4.5  # oracle precondition
        spans = detect_embedded_secret(f'secret = "{token}"')
        assert len(spans) == 1
        assert spans[0].confidence == "MED"

    def test_short_run_below_min_length_ignored(self):
        alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/"
        token = "".join(random.Random(3).choices(alphabet, k=39))
        assert detect_embedded_secret(f'x = "{token}"') == []

    def test_spans_non_overlapping(self):
        content = PEM_BLOCK + "\n" + f'TOKEN="{SECRET_TOKEN}"\n'
        spans = detect_embedded_secret(content)
        assert len(spans) == 2
        assert spans[0].end <= spans[1].start

    def test_fixture_token_entropy_meets_threshold(self):
        assert independent_entropy(SECRET_TOKEN) >= 4.5


class TestRedaction:
    def test_excerpt_keeps_only_prefix(self):
        line = f'TOKEN="{SECRET_TOKEN}"'
        excerpt = redact_excerpt(line)
        assert SECRET_TOKEN[:16] in excerpt
        assert SECRET_TOKEN[:17] not in excerpt
        assert "redacted" in excerpt

    def test_plain_text_untouched(self):
        assert redact_excerpt("ssl_ciphers RSA") == "ssl_ciphers RSA"


class TestScanTree:
    def test_planted_corpus_full_recall(self, tmp_path):
        planted = build_planted_tree(tmp_path)
        findings = scan_tree(tmp_path, default_rules())
        got = {(f.location, f.rule_id) for f in findings}
        for rel, line, rule_id in planted:
            assert (f"{tmp_path / rel}:{line}", rule_id) in got, (rel, line, rule_id)
        # No surprises beyond the hand-enumerated manifest either.
        assert len(findings) == len(planted)

    def test_clean_corpus_no_findings(self, tmp_path):
        build_clean_tree(tmp_path)
        assert scan_tree(tmp_path, default_rules()) == []

    def test_empty_directory(self, tmp_path):
        assert scan_tree(tmp_path, default_rules()) == []

    def test_deterministic_byte_for_byte(self, tmp_path):
        build_planted_tree(tmp_path)
        first = dump_jsonl([f.to_dict() for f in scan_tree(tmp_path, default_rules())])
        second = dump_jsonl([f.to_dict() for f in scan_tree(tmp_path, default_rules())])
        assert first == second

    def test_parallel_scan_matches_serial(self, tmp_path):
        build_planted_tree(tmp_path)
        serial = scan_tree(tmp_path, default_rules(), workers=1)
        parallel = scan_tree(tmp_path, default_rules(), workers=4)
        assert serial == parallel

    def test_ordering_by_path_then_line(self, tmp_path):
        build_planted_tree(tmp_path)
        findings = scan_tree(tmp_path, default_rules())
        keys = [(f.location.rsplit(":", 1)[0], int(f.location.rsplit(":", 1)[1])) for f in findings]
        assert keys == sorted(keys)

    def test_pem_finding_fields(self, tmp_path):
        build_planted_tree(tmp_path)
        findings = scan_tree(tmp_path, default_rules())
        pem = [f for f in findings if f.rule_id == "embedded-private-key"]
        assert len(pem) == 1
        assert pem[0].source is FindingSource.STATIC
        assert pem[0].kind is FindingKind.EMBEDDED_KEY
        assert pem[0].mechanism.family is MechanismFamily.RSA

    def test_no_excerpt_leaks_key_material(self, tmp_path):
        build_planted_tree(tmp_path)
        findings = scan_tree(tmp_path, default_rules())
        pem_body = PEM_BLOCK.splitlines()[1]  # first full base64 line of the key
        secrets = [pem_body, SECRET_TOKEN]
        for f in findings:
            for secret in secrets:
                for i in range(len(secret) - 16):
                    assert secret[i : i + 17] not in f.raw_excerpt

    def test_unreadable_root_raises(self, tmp_path):
        with pytest.raises(ScanIOError):
            scan_tree(tmp_path / "missing", default_rules())

    def test_binary_file_skipped_except_pem(self, tmp_path):
        (tmp_path / "blob.bin").write_bytes(b"\x00\x01md5\x02" * 100)
        (tmp_path / "embedded.bin").write_bytes(b"\x00\x01" + PEM_BLOCK.encode() + b"\x02")
        findings = scan_tree(tmp_path, default_rules())
        assert [f.rule_id for f in findings] == ["embedded-private-key"]
        assert findings[0].location.startswith(str(tmp_path / "embedded.bin"))

    def test_symlinks_not_followed(self, tmp_path):
        outside = tmp_path / "outside"
        outside.mkdir()
        (outside / "key.pem").write_text(PEM_BLOCK)
        scanned = tmp_path / "scanned"
        scanned.mkdir()
        (scanned / "link").symlink_to(outside / "key.pem")
        assert scan_tree(scanned, default_rules()) == []

    def test_unreadable_file_becomes_skip_entry(self, tmp_path, monkeypatch):
        from pathlib import Path

        good = tmp_path / "ok.conf"
        good.write_text("ssl_ciphers RSA;\n")
        bad = tmp_path / "locked.conf"
        bad.write_text("ssl_ciphers RSA;\n")

        real_open = Path.open

        def failing_open(self, *args, **kwargs):
            if self.name == "locked.conf":
                raise PermissionError("permission denied")
            return real_open(self, *args, **kwargs)

        monkeypatch.setattr(Path, "open", failing_open)
        findings, report = scan_tree_report(tmp_path, default_rules())
        assert len(findings) == 1
        assert len(report.skips) == 1
        assert report.skips[0][0] == str(bad)

    def test_round_trip_serialization(self, tmp_path):
        build_planted_tree(tmp_path)
        findings = scan_tree(tmp_path, default_rules())
        for f in findings:
            assert DiscoveryFinding.from_dict(f.to_dict()) == f
