"""Evidence normalization: findings from every discovery layer become candidate assets.

Asset keying is rule-driven (pattern → asset id), never inferred: ownership
attribution is the hard part of discovery, and evidence that matches no rule
must surface as an exception rather than vanish. Unmapped hints each become
a synthetic candidate flagged for the exception register.
"""

from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass, field, replace
from datetime import date, datetime
from enum import Enum
from pathlib import Path

from .errors import FormatError, InputError
from .jsonutil import load_jsonl
from .model import (
    CryptoMechanism,
    EvidenceConfidence,
    Level,
    MechanismFamily,
    ProtocolContext,
    parse_mechanism_label,
)
from .netdiscovery import ProbeOutcome, TlsObservation
from .scan import DiscoveryFinding, FindingKind, FindingSource


class SystemContext(str, Enum):
    APPLICATION = "APPLICATION"
    INFRASTRUCTURE = "INFRASTRUCTURE"
    VENDOR_DEPENDENCY = "VENDOR_DEPENDENCY"


@dataclass(frozen=True)
class CandidateAsset:
    asset_id: str
    display_name: str
    system_context: SystemContext
    mechanisms: tuple[CryptoMechanism, ...]
    findings: tuple[DiscoveryFinding, ...]
    dependency_edges: tuple[tuple[str, str], ...] = ()  # (target, relation)
    third_party: bool = False
    unmapped: bool = False
    crypto_label: str = ""  # display string for the register's crypto column

    def label(self) -> str:
        if self.crypto_label:
            return self.crypto_label
        return ", ".join(sorted({m.display() for m in self.mechanisms})) or "none observed"

    def to_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "display_name": self.display_name,
            "system_context": self.system_context.value,
            "mechanisms": [m.to_dict() for m in self.mechanisms],
            "findings": [f.to_dict() for f in self.findings],
            "dependency_edges": [list(e) for e in self.dependency_edges],
            "third_party": self.third_party,
            "unmapped": self.unmapped,
            "crypto_label": self.crypto_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CandidateAsset":
        return cls(
            asset_id=d["asset_id"],
            display_name=d["display_name"],
            system_context=SystemContext(d["system_context"]),
            mechanisms=tuple(CryptoMechanism.from_dict(m) for m in d["mechanisms"]),
            findings=tuple(DiscoveryFinding.from_dict(f) for f in d["findings"]),
            dependency_edges=tuple((e[0], e[1]) for e in d.get("dependency_edges", [])),
            third_party=d.get("third_party", False),
            unmapped=d.get("unmapped", False),
            crypto_label=d.get("crypto_label", ""),
        )


@dataclass(frozen=True)
class AssetRule:
    """First matching rule claims the hint. Globs allowed; plain text is a prefix."""

    pattern: str
    asset_id: str
    system_context: SystemContext = SystemContext.APPLICATION
    third_party: bool = False
    display_name: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "_is_glob", any(ch in self.pattern for ch in "*?["))

    def matches(self, hint: str) -> bool:
        if self._is_glob:  # type: ignore[attr-defined]
            return fnmatch.fnmatch(hint, self.pattern)
        return hint.startswith(self.pattern)


def load_asset_rules(path: str | Path) -> list[AssetRule]:
    doc = json.loads(Path(path).read_text("utf-8"))
    rules = []
    for i, rec in enumerate(doc["rules"] if isinstance(doc, dict) else doc):
        try:
            rules.append(
                AssetRule(
                    pattern=rec["pattern"],
                    asset_id=rec["asset_id"],
                    system_context=SystemContext(rec.get("system_context", "APPLICATION")),
                    third_party=rec.get("third_party", False),
                    display_name=rec.get("display_name"),
                )
            )
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad asset rule: {exc}", record_index=i) from exc
    return rules


@dataclass
class NormalizeStats:
    input_findings: int = 0
    duplicates_dropped: int = 0
    unmapped_hints: list[str] = field(default_factory=list)


def normalize(
    findings: list[DiscoveryFinding],
    asset_key_rules: list[AssetRule],
    dependency_edges: list[tuple[str, str, str]] | None = None,
) -> list[CandidateAsset]:
    assets, _ = normalize_report(findings, asset_key_rules, dependency_edges)
    return assets


def normalize_report(
    findings: list[DiscoveryFinding],
    asset_key_rules: list[AssetRule],
    dependency_edges: list[tuple[str, str, str]] | None = None,
) -> tuple[list[CandidateAsset], NormalizeStats]:
    """Group findings by resolved asset id; duplicates keep the earliest sighting."""
    stats = NormalizeStats(input_findings=len(findings))
    groups: dict[str, list[DiscoveryFinding]] = {}
    rule_for: dict[str, AssetRule | None] = {}
    resolved: dict[str, AssetRule | None] = {}  # hints repeat; resolve each once

    def resolve(hint: str) -> AssetRule | None:
        if hint not in resolved:
            resolved[hint] = next((r for r in asset_key_rules if r.matches(hint)), None)
        return resolved[hint]

    for finding in findings:
        if not finding.asset_hint:
            raise InputError(f"finding at {finding.location} carries no asset hint")
        rule = resolve(finding.asset_hint)
        if rule is None:
            asset_id = f"unmapped:{finding.asset_hint}"
            if asset_id not in groups:
                stats.unmapped_hints.append(finding.asset_hint)
        else:
            asset_id = rule.asset_id
        groups.setdefault(asset_id, []).append(finding)
        rule_for.setdefault(asset_id, rule)

    edges_by_asset: dict[str, list[tuple[str, str]]] = {}
    for source_hint, target, relation in dependency_edges or []:
        rule = resolve(source_hint)
        owner = rule.asset_id if rule else f"unmapped:{source_hint}"
        edges_by_asset.setdefault(owner, []).append((target, relation))

    assets: list[CandidateAsset] = []
    for asset_id in sorted(groups):
        batch = sorted(groups[asset_id], key=lambda f: (f.observed_at, f.location, f.rule_id))
        seen: dict[tuple, DiscoveryFinding] = {}
        for f in batch:
            key = (f.location, f.rule_id, f.mechanism)
            if key in seen:
                stats.duplicates_dropped += 1
                continue
            seen[key] = f
        kept = sorted(seen.values(), key=lambda f: (f.location, f.rule_id))
        rule = rule_for[asset_id]
        mechanisms = tuple(
            sorted({f.mechanism for f in kept}, key=lambda m: (m.family.value, m.parameter or ""))
        )
        context = rule.system_context if rule else SystemContext.APPLICATION
        third_party = (
            (rule.third_party if rule else False)
            or context is SystemContext.VENDOR_DEPENDENCY
            or any(f.source is FindingSource.SBOM for f in kept)
        )
        assets.append(
            CandidateAsset(
                asset_id=asset_id,
                display_name=(rule.display_name if rule and rule.display_name else asset_id),
                system_context=context,
                mechanisms=mechanisms,
                findings=tuple(kept),
                dependency_edges=tuple(edges_by_asset.get(asset_id, [])),
                third_party=third_party,
                unmapped=rule is None,
            )
        )
    return assets, stats


# ---------------------------------------------------------------------------
# Crypto-SBOM ingestion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CryptoSbomDocument:
    supplier: str
    component: str
    declared_mechanisms: tuple[tuple[CryptoMechanism, str], ...]  # (mechanism, location)
    key_management_notes: str = ""
    pqc_roadmap_date: date | None = None

    def __post_init__(self) -> None:
        if not self.declared_mechanisms:
            raise FormatError("crypto-SBOM must declare at least one mechanism")

    @classmethod
    def from_dict(cls, d: dict) -> "CryptoSbomDocument":
        try:
            declared = tuple(
                (parse_mechanism_label(rec["mechanism"]), rec.get("location", ""))
                for rec in d["declared_mechanisms"]
            )
            roadmap = d.get("pqc_roadmap_date")
            return cls(
                supplier=d["supplier"],
                component=d["component"],
                declared_mechanisms=declared,
                key_management_notes=d.get("key_management_notes", ""),
                pqc_roadmap_date=date.fromisoformat(roadmap) if roadmap else None,
            )
        except (KeyError, ValueError, InputError) as exc:
            raise FormatError(f"bad crypto-SBOM document: {exc}") from exc


def load_crypto_sbom(path: str | Path) -> CryptoSbomDocument:
    return CryptoSbomDocument.from_dict(json.loads(Path(path).read_text("utf-8")))


def ingest_crypto_sbom(
    doc: CryptoSbomDocument,
    supplier_asset_id: str,
    observed_at: datetime | None = None,
) -> list[DiscoveryFinding]:
    """One SBOM-source finding per declared mechanism, in declaration order."""
    from .jsonutil import utcnow

    ts = observed_at or utcnow()
    findings = []
    for mechanism, location in doc.declared_mechanisms:
        findings.append(
            DiscoveryFinding(
                source=FindingSource.SBOM,
                asset_hint=supplier_asset_id,
                location=f"sbom:{doc.supplier}/{doc.component}"
                + (f" at {location}" if location else ""),
                mechanism=mechanism,
                kind=FindingKind.CONFIG_REFERENCE,
                observed_at=ts,
                rule_id=f"sbom:{doc.supplier}/{doc.component}",
                raw_excerpt=mechanism.display(),
            )
        )
    return findings


# ---------------------------------------------------------------------------
# Dynamic observation adaptation
# ---------------------------------------------------------------------------

_KX_FAMILIES = {MechanismFamily.RSA, MechanismFamily.ECC, MechanismFamily.DH}


def observations_to_findings(observations: list[TlsObservation]) -> list[DiscoveryFinding]:
    """Successful probes become dynamic findings; failed probes contribute none."""
    findings: list[DiscoveryFinding] = []
    for obs in observations:
        if obs.probe_outcome is not ProbeOutcome.OK:
            continue
        protocol = obs.negotiated_version or ProtocolContext.TLS
        for cert in obs.certificate_chain:
            mechanism = replace(cert.public_key_algorithm, protocol_context=protocol)
            findings.append(
                DiscoveryFinding(
                    source=FindingSource.DYNAMIC,
                    asset_hint=obs.endpoint,
                    location=f"{obs.endpoint} cert sha256:{cert.fingerprint_sha256[:16]}",
                    mechanism=mechanism,
                    kind=FindingKind.CONFIG_REFERENCE,
                    observed_at=obs.observed_at,
                    rule_id="probe:certificate",
                    raw_excerpt=f"{cert.subject} key {mechanism.display()}",
                )
            )
        if obs.cipher_suite:
            # Pre-1.3 suite names encode the key exchange family; 1.3 names
            # do not, and the certificate finding already covers those.
            from .model import parse_mechanism_labels

            for mech in parse_mechanism_labels(obs.cipher_suite):
                if mech.family in _KX_FAMILIES:
                    findings.append(
                        DiscoveryFinding(
                            source=FindingSource.DYNAMIC,
                            asset_hint=obs.endpoint,
                            location=f"{obs.endpoint} handshake",
                            mechanism=replace(mech, protocol_context=protocol),
                            kind=FindingKind.CONFIG_REFERENCE,
                            observed_at=obs.observed_at,
                            rule_id="probe:handshake",
                            raw_excerpt=f"{protocol.value} {obs.cipher_suite}",
                        )
                    )
    return findings


# ---------------------------------------------------------------------------
# Dependency maps
# ---------------------------------------------------------------------------


def load_dependency_map(
    path: str | Path,
) -> tuple[list[DiscoveryFinding], list[tuple[str, str, str]]]:
    """Edge records: {source_hint, target, relation, mechanism?, observed_at?}."""
    from .jsonutil import parse_ts, utcnow

    findings: list[DiscoveryFinding] = []
    edges: list[tuple[str, str, str]] = []
    for i, rec in enumerate(load_jsonl(Path(path).read_text("utf-8"))):
        try:
            source_hint = rec["source_hint"]
            target = rec["target"]
            relation = rec.get("relation", "depends-on")
        except KeyError as exc:
            raise FormatError(f"dependency edge missing {exc}", record_index=i) from exc
        edges.append((source_hint, target, relation))
        if rec.get("mechanism"):
            findings.append(
                DiscoveryFinding(
                    source=FindingSource.DEPENDENCY,
                    asset_hint=source_hint,
                    location=f"dependency:{target}",
                    mechanism=parse_mechanism_label(rec["mechanism"]),
                    kind=FindingKind.CONFIG_REFERENCE,
                    observed_at=parse_ts(rec["observed_at"]) if rec.get("observed_at") else utcnow(),
                    rule_id=f"dependency:{relation}",
                    raw_excerpt=rec["mechanism"],
                )
            )
    return findings, edges


# ---------------------------------------------------------------------------
# Evidence fusion
# ---------------------------------------------------------------------------


def fuse_evidence(asset: CandidateAsset) -> EvidenceConfidence:
    """Collapse an asset's finding sources into one confidence level.

    HIGH when two distinct sources, at least one of them direct (static or
    dynamic), corroborate a common mechanism family; MED when exactly one
    direct source saw the asset and nothing contradicts it; LOW for
    indirect-only evidence (SBOM/dependency, however much of it), for
    contradicting sources (several sources identified families, none
    shared), and for no findings at all. UNKNOWN-family findings count as
    presence but neither corroborate nor contradict.
    """
    if not asset.findings:
        return Level.LOW
    families_by_source: dict[FindingSource, set[MechanismFamily]] = {}
    for f in asset.findings:
        families_by_source.setdefault(f.source, set())
        if f.mechanism.family is not MechanismFamily.UNKNOWN:
            families_by_source[f.source].add(f.mechanism.family)

    direct = set(families_by_source) & {FindingSource.STATIC, FindingSource.DYNAMIC}
    if not direct:
        return Level.LOW
    sourced = [fams for fams in families_by_source.values() if fams]
    all_families = set().union(*sourced) if sourced else set()
    for family in all_families:
        if sum(1 for fams in sourced if family in fams) >= 2:
            return Level.HIGH
    if len(sourced) >= 2:
        return Level.LOW  # contradiction: several sources, nothing in common
    if len(direct) == 1:
        return Level.MED
    return Level.LOW
