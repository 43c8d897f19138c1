"""Static discovery: lexical scanning of source and configuration trees.

Rules live in a versioned JSON file, not in code, so coverage can grow
without a release. Two matching modes exist:

* line rules (API_CALL, CONFIG_REFERENCE, DEPRECATED_ALGORITHM) run their
  regex against each line of text files;
* block rules (EMBEDDED_KEY) select secret spans found by
  :func:`detect_embedded_secret` — a rule's pattern is matched against the
  armor header of each PEM block, and the reserved pattern ``@high-entropy``
  claims the entropy-detector spans. One finding per block.

Excerpts are redacted: no finding ever reproduces more than the first 16
characters of a detected secret.
"""

from __future__ import annotations

import fnmatch
import json
import math
import os
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import FormatError, InputError, ScanIOError
from .jsonutil import format_ts, parse_ts
from .model import CryptoMechanism, parse_mechanism_label, parse_mechanism_labels

# Files larger than this are scanned for PEM blocks only.
LINE_SCAN_CAP_BYTES = 1 * 1024 * 1024
# Entropy heuristic defaults; both are configurable per call.
SECRET_MIN_LENGTH = 40
SECRET_ENTROPY_THRESHOLD = 4.5
# Redaction: at most this many leading characters of a secret may survive.
SECRET_VISIBLE_PREFIX = 16

HIGH_ENTROPY_PATTERN = "@high-entropy"


class FindingSource(str, Enum):
    STATIC = "STATIC"
    DYNAMIC = "DYNAMIC"
    SBOM = "SBOM"
    DEPENDENCY = "DEPENDENCY"


class FindingKind(str, Enum):
    API_CALL = "API_CALL"
    CONFIG_REFERENCE = "CONFIG_REFERENCE"
    EMBEDDED_KEY = "EMBEDDED_KEY"
    DEPRECATED_ALGORITHM = "DEPRECATED_ALGORITHM"


@dataclass(frozen=True)
class DiscoveryFinding:
    """One piece of evidence tying a mechanism to a location on an asset."""

    source: FindingSource
    asset_hint: str
    location: str
    mechanism: CryptoMechanism
    kind: FindingKind
    observed_at: datetime
    rule_id: str  # scan rule id, or probe/document id for non-static sources
    raw_excerpt: str = ""

    def __post_init__(self) -> None:
        if not self.location:
            raise InputError("finding location must be nonempty")
        if len(self.raw_excerpt) > 256:
            object.__setattr__(self, "raw_excerpt", self.raw_excerpt[:256])

    def to_dict(self) -> dict:
        return {
            "source": self.source.value,
            "asset_hint": self.asset_hint,
            "location": self.location,
            "mechanism": self.mechanism.to_dict(),
            "kind": self.kind.value,
            "observed_at": format_ts(self.observed_at),
            "rule_id": self.rule_id,
            "raw_excerpt": self.raw_excerpt,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiscoveryFinding":
        return cls(
            source=FindingSource(d["source"]),
            asset_hint=d["asset_hint"],
            location=d["location"],
            mechanism=CryptoMechanism.from_dict(d["mechanism"]),
            kind=FindingKind(d["kind"]),
            observed_at=parse_ts(d["observed_at"]),
            rule_id=d["rule_id"],
            raw_excerpt=d.get("raw_excerpt", ""),
        )


@dataclass(frozen=True)
class ScanRule:
    id: str
    pattern: re.Pattern[str]
    kind: FindingKind
    mechanism_hint: CryptoMechanism | None = None
    file_glob: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ScanRule":
        raw_pattern = d["pattern"]
        if raw_pattern == HIGH_ENTROPY_PATTERN:
            compiled = re.compile(re.escape(HIGH_ENTROPY_PATTERN))
        else:
            try:
                compiled = re.compile(raw_pattern)
            except re.error as exc:
                raise FormatError(f"rule {d.get('id')!r}: bad pattern: {exc}") from exc
        hint = None
        if d.get("mechanism"):
            hint = parse_mechanism_label(d["mechanism"])
        return cls(
            id=d["id"],
            pattern=compiled,
            kind=FindingKind(d["kind"]),
            mechanism_hint=hint,
            file_glob=d.get("glob"),
        )

    @property
    def is_entropy_rule(self) -> bool:
        return self.pattern.pattern == re.escape(HIGH_ENTROPY_PATTERN)


def load_rules(path: str | os.PathLike) -> list[ScanRule]:
    doc = json.loads(Path(path).read_text("utf-8"))
    return _rules_from_doc(doc)


def default_rules() -> list[ScanRule]:
    raw = resources.files("qer.data").joinpath("default_rules.json").read_text("utf-8")
    return _rules_from_doc(json.loads(raw))


def _rules_from_doc(doc: dict) -> list[ScanRule]:
    rules = [ScanRule.from_dict(rec) for rec in doc["rules"]]
    ids = [r.id for r in rules]
    dupes = {i for i in ids if ids.count(i) > 1}
    if dupes:
        raise FormatError(f"duplicate rule ids: {sorted(dupes)}")
    if not rules:
        raise FormatError("ruleset is empty")
    return rules


# ---------------------------------------------------------------------------
# Secret detection
# ---------------------------------------------------------------------------

_PEM_RE = re.compile(
    r"-----BEGIN (?P<label>[A-Z0-9 ]+)-----(?P<body>[A-Za-z0-9+/=\s]+?)-----END (?P=label)-----"
)
_BASE64_RUN_RE = re.compile(r"[A-Za-z0-9+/]{%d,}={0,2}" % SECRET_MIN_LENGTH)


def shannon_entropy(text: str) -> float:
    if not text:
        return 0.0
    counts = Counter(text)
    total = len(text)
    return -sum((n / total) * math.log2(n / total) for n in counts.values())


@dataclass(frozen=True)
class SecretSpan:
    start: int
    end: int
    confidence: str  # HIGH (PEM armor) or MED (entropy heuristic)
    header: str = ""  # armor header line for PEM spans


def detect_embedded_secret(
    content: str,
    *,
    min_length: int = SECRET_MIN_LENGTH,
    entropy_threshold: float = SECRET_ENTROPY_THRESHOLD,
) -> list[SecretSpan]:
    """PEM blocks rate HIGH; long high-entropy base64 runs rate MED.

    Spans are non-overlapping, leftmost-longest: a PEM body never also
    reports as an entropy run.
    """
    candidates: list[SecretSpan] = []
    for m in _PEM_RE.finditer(content):
        header = content[m.start() : content.find("-----", m.start() + 5) + 5]
        candidates.append(SecretSpan(m.start(), m.end(), "HIGH", header))
    run_re = (
        _BASE64_RUN_RE
        if min_length == SECRET_MIN_LENGTH
        else re.compile(r"[A-Za-z0-9+/]{%d,}={0,2}" % min_length)
    )
    for m in run_re.finditer(content):
        if shannon_entropy(m.group(0)) >= entropy_threshold:
            candidates.append(SecretSpan(m.start(), m.end(), "MED"))
    candidates.sort(key=lambda s: (s.start, -(s.end - s.start)))
    chosen: list[SecretSpan] = []
    cursor = -1
    for span in candidates:
        if span.start > cursor:
            chosen.append(span)
            cursor = span.end - 1
    return chosen


def redact_excerpt(text: str, limit: int = 256) -> str:
    """Mask detected secrets in an excerpt down to their first 16 characters."""
    spans = detect_embedded_secret(text)
    if not spans:
        return text[:limit]
    out: list[str] = []
    pos = 0
    for span in spans:
        out.append(text[pos : span.start])
        secret = text[span.start : span.end]
        out.append(secret[:SECRET_VISIBLE_PREFIX])
        out.append(f"…[redacted {len(secret) - SECRET_VISIBLE_PREFIX} chars]")
        pos = span.end
    out.append(text[pos:])
    return "".join(out)[:limit]


# ---------------------------------------------------------------------------
# Tree scanning
# ---------------------------------------------------------------------------


@dataclass
class ScanReport:
    root: str
    files_scanned: int = 0
    findings: int = 0
    skips: list[tuple[str, str]] = field(default_factory=list)  # (path, reason)


def scan_tree(
    root: str | os.PathLike,
    rules: list[ScanRule],
    *,
    workers: int = 1,
) -> list[DiscoveryFinding]:
    findings, _ = scan_tree_report(root, rules, workers=workers)
    return findings


def scan_tree_report(
    root: str | os.PathLike,
    rules: list[ScanRule],
    *,
    workers: int = 1,
) -> tuple[list[DiscoveryFinding], ScanReport]:
    root_path = Path(root)
    if not rules:
        raise InputError("ruleset must be nonempty")
    if not root_path.is_dir() or not os.access(root_path, os.R_OK):
        raise ScanIOError(f"scan root not readable: {root_path}")
    report = ScanReport(root=str(root_path))

    paths: list[Path] = []
    for dirpath, dirnames, filenames in os.walk(root_path, followlinks=False):
        dirnames.sort()
        for name in sorted(filenames):
            p = Path(dirpath) / name
            if p.is_symlink():
                continue
            paths.append(p)

    def scan_one(path: Path) -> list[DiscoveryFinding]:
        try:
            return _scan_file(path, root_path, rules)
        except OSError as exc:
            report.skips.append((str(path), str(exc)))
            return []

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            nested = list(pool.map(scan_one, paths))
    else:
        nested = [scan_one(p) for p in paths]

    findings = [f for group in nested for f in group]
    findings.sort(key=_finding_sort_key)
    report.files_scanned = len(paths) - len(report.skips)
    report.findings = len(findings)
    return findings, report


def _finding_sort_key(f: DiscoveryFinding) -> tuple:
    path, _, line = f.location.rpartition(":")
    return (path, int(line) if line.isdigit() else 0, f.rule_id)


def _scan_file(path: Path, root: Path, rules: list[ScanRule]) -> list[DiscoveryFinding]:
    rel = path.relative_to(root).as_posix()
    size = path.stat().st_size
    observed = datetime.fromtimestamp(path.stat().st_mtime, tz=timezone.utc)
    applicable = [r for r in rules if r.file_glob is None or fnmatch.fnmatch(rel, r.file_glob)]
    if not applicable:
        return []
    block_rules = [r for r in applicable if r.kind is FindingKind.EMBEDDED_KEY]
    line_rules = [r for r in applicable if r.kind is not FindingKind.EMBEDDED_KEY]

    head = path.open("rb").read(8192)
    is_binary = b"\0" in head
    findings: list[DiscoveryFinding] = []

    if is_binary or size > LINE_SCAN_CAP_BYTES:
        # Large or binary content: PEM markers only.
        if block_rules:
            text = _read_capped_text(path)
            findings.extend(_block_findings(text, path, observed, block_rules, pem_only=True))
        return findings

    text = path.read_text("utf-8", errors="replace")
    if block_rules:
        findings.extend(_block_findings(text, path, observed, block_rules, pem_only=False))

    if line_rules:
        for lineno, line in enumerate(text.splitlines(), start=1):
            for rule in line_rules:
                m = rule.pattern.search(line)
                if m is None:
                    continue
                mechanism = rule.mechanism_hint
                if mechanism is None:
                    stripped = line.strip()
                    mechanism = (
                        parse_mechanism_labels(stripped)[0]
                        if stripped
                        else CryptoMechanism(raw=stripped or None)
                    )
                findings.append(
                    DiscoveryFinding(
                        source=FindingSource.STATIC,
                        asset_hint=str(path),
                        location=f"{path}:{lineno}",
                        mechanism=mechanism,
                        kind=rule.kind,
                        observed_at=observed,
                        rule_id=rule.id,
                        raw_excerpt=redact_excerpt(line.strip()),
                    )
                )
    return findings


def _read_capped_text(path: Path, cap: int = 64 * 1024 * 1024) -> str:
    data = path.open("rb").read(cap)
    return data.decode("utf-8", errors="replace")


def _block_findings(
    text: str,
    path: Path,
    observed: datetime,
    block_rules: list[ScanRule],
    *,
    pem_only: bool,
) -> list[DiscoveryFinding]:
    findings: list[DiscoveryFinding] = []
    for span in detect_embedded_secret(text):
        if span.confidence == "HIGH":
            rule = next(
                (r for r in block_rules if not r.is_entropy_rule and r.pattern.search(span.header)),
                None,
            )
            mechanism = parse_mechanism_label(span.header) if span.header else CryptoMechanism()
        else:
            if pem_only:
                continue
            rule = next((r for r in block_rules if r.is_entropy_rule), None)
            mechanism = CryptoMechanism(raw="high-entropy material")
        if rule is None:
            continue
        lineno = text.count("\n", 0, span.start) + 1
        secret = text[span.start : span.end]
        excerpt = secret[:SECRET_VISIBLE_PREFIX] + f"…[redacted {len(secret) - SECRET_VISIBLE_PREFIX} chars]"
        findings.append(
            DiscoveryFinding(
                source=FindingSource.STATIC,
                asset_hint=str(path),
                location=f"{path}:{lineno}",
                mechanism=mechanism,
                kind=FindingKind.EMBEDDED_KEY,
                observed_at=observed,
                rule_id=rule.id,
                raw_excerpt=excerpt,
            )
        )
    return findings
