"""Portfolio analytics, committee reports, and the synthetic estate generator.

The generator exists so the pipeline's aggregation can be validated end to
end at desk scale against known ground truth: realized fractions are
quota-exact for a fixed seed, and a seed pins every byte of output. Reports
state explicitly that synthetic-estate statistics validate aggregation
against generator parameters, not external field data.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path

from .engine import ExposureStatus, PriorityBand
from .errors import InputError
from .jsonutil import canonical_json, dump_jsonl, format_years
from .model import Level, MechanismFamily, PUBLIC_KEY_FAMILIES
from .scan import FindingSource
from .store import RegisterVersion, coverage_and_exceptions

DEFAULT_LONG_LIVED_THRESHOLD_YEARS = 10.0

GENERATOR_EPOCH = datetime(2026, 1, 1, tzinfo=timezone.utc)

REPORT_FOOTER = (
    "Statistics describe this register snapshot only. For synthetic estates "
    "they validate pipeline aggregation against generator parameters, not "
    "externally observed field data."
)


# ---------------------------------------------------------------------------
# Portfolio statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PortfolioStats:
    total_assets: int
    mechanism_counts: dict[str, int]  # RSA / ECC / OTHER_PK asset counts
    mechanism_distribution: dict[str, float]  # fractions over the three buckets
    ownership_unknown_fraction: float | None
    exposed_yes_count: int
    exposed_borderline_count: int
    time_exposed_count: int
    time_exposed_fraction: float | None
    long_lived_count: int
    critical_exposed_count: int
    critical_exposed_fraction: float | None
    wave_counts: dict[int, int]
    certificate_count: int
    endpoint_count: int

    def to_dict(self) -> dict:
        return {
            "total_assets": self.total_assets,
            "mechanism_counts": self.mechanism_counts,
            "mechanism_distribution": self.mechanism_distribution,
            "ownership_unknown_fraction": self.ownership_unknown_fraction,
            "exposed_yes_count": self.exposed_yes_count,
            "exposed_borderline_count": self.exposed_borderline_count,
            "time_exposed_count": self.time_exposed_count,
            "time_exposed_fraction": self.time_exposed_fraction,
            "long_lived_count": self.long_lived_count,
            "critical_exposed_count": self.critical_exposed_count,
            "critical_exposed_fraction": self.critical_exposed_fraction,
            "wave_counts": {str(k): v for k, v in sorted(self.wave_counts.items())},
            "certificate_count": self.certificate_count,
            "endpoint_count": self.endpoint_count,
        }


def portfolio_stats(
    version: RegisterVersion,
    shelf_threshold: float = DEFAULT_LONG_LIVED_THRESHOLD_YEARS,
) -> PortfolioStats:
    """Pure function of the register version: no clock, no hidden state."""
    entries = version.entries
    total = len(entries)

    buckets = {"RSA": 0, "ECC": 0, "OTHER_PK": 0}
    for entry in entries:
        families = {m.family for m in entry.enriched.candidate.mechanisms}
        pk = families & PUBLIC_KEY_FAMILIES
        if MechanismFamily.RSA in pk:
            buckets["RSA"] += 1
        if MechanismFamily.ECC in pk:
            buckets["ECC"] += 1
        if pk - {MechanismFamily.RSA, MechanismFamily.ECC}:
            buckets["OTHER_PK"] += 1
    bucket_total = sum(buckets.values())
    distribution = (
        {k: v / bucket_total for k, v in buckets.items()} if bucket_total else {}
    )

    yes = sum(1 for e in entries if e.exposure is ExposureStatus.YES)
    borderline = sum(1 for e in entries if e.exposure is ExposureStatus.BORDERLINE)
    long_lived = sum(
        1 for e in entries if e.enriched.metadata.t_shelf_years >= shelf_threshold
    )
    critical_exposed = sum(
        1
        for e in entries
        if e.exposure is ExposureStatus.YES and e.priority.band is PriorityBand.CRITICAL_W1
    )
    unknown_owner = sum(1 for e in entries if not e.enriched.ownership_known)
    waves = {1: 0, 2: 0, 3: 0, 4: 0}
    for e in entries:
        waves[e.assigned_wave] += 1

    endpoints: set[str] = set()
    certificates: set[str] = set()
    for e in entries:
        for f in e.enriched.candidate.findings:
            if f.source is not FindingSource.DYNAMIC:
                continue
            endpoints.add(f.asset_hint)
            if f.rule_id == "probe:certificate":
                certificates.add(f.location)

    return PortfolioStats(
        total_assets=total,
        mechanism_counts=buckets,
        mechanism_distribution=distribution,
        ownership_unknown_fraction=(unknown_owner / total) if total else None,
        exposed_yes_count=yes,
        exposed_borderline_count=borderline,
        time_exposed_count=yes + borderline,
        time_exposed_fraction=((yes + borderline) / total) if total else None,
        long_lived_count=long_lived,
        critical_exposed_count=critical_exposed,
        critical_exposed_fraction=(critical_exposed / total) if total else None,
        wave_counts=waves,
        certificate_count=len(certificates),
        endpoint_count=len(endpoints),
    )


# ---------------------------------------------------------------------------
# Synthetic estate generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstateParams:
    n_assets: int
    n_endpoints: int
    n_certificates: int
    rsa_fraction: float
    owner_unknown_fraction: float
    shelf_distribution: tuple[tuple[float, float], ...]  # (years, weight)
    migration_distribution: tuple[tuple[float, float], ...]
    evidence_mix: tuple[tuple[Level, float], ...]
    seed: int

    def __post_init__(self) -> None:
        if min(self.n_assets, self.n_endpoints, self.n_certificates) <= 0:
            raise InputError("estate sizes must be positive")
        for frac, name in (
            (self.rsa_fraction, "rsa_fraction"),
            (self.owner_unknown_fraction, "owner_unknown_fraction"),
        ):
            if not 0 <= frac <= 1:
                raise InputError(f"{name} must lie in [0, 1]")
        for dist, name in (
            (self.shelf_distribution, "shelf_distribution"),
            (self.migration_distribution, "migration_distribution"),
            (self.evidence_mix, "evidence_mix"),
        ):
            if not dist or any(w <= 0 for _, w in dist):
                raise InputError(f"{name} weights must be positive and nonempty")

    @classmethod
    def from_dict(cls, d: dict) -> "EstateParams":
        return cls(
            n_assets=d["n_assets"],
            n_endpoints=d["n_endpoints"],
            n_certificates=d["n_certificates"],
            rsa_fraction=d["rsa_fraction"],
            owner_unknown_fraction=d["owner_unknown_fraction"],
            shelf_distribution=tuple((float(y), float(w)) for y, w in d["shelf_distribution"]),
            migration_distribution=tuple(
                (float(y), float(w)) for y, w in d["migration_distribution"]
            ),
            evidence_mix=tuple((Level(k), float(v)) for k, v in d["evidence_mix"].items()),
            seed=d["seed"],
        )


def _quota_sequence(options: list, weights: list[float], n: int, rng: random.Random) -> list:
    """n draws honoring the weights exactly (largest-remainder), then shuffled."""
    total_w = sum(weights)
    raw = [n * w / total_w for w in weights]
    counts = [int(r) for r in raw]
    shortfall = n - sum(counts)
    by_fraction = sorted(range(len(options)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in by_fraction[:shortfall]:
        counts[i] += 1
    sequence = [options[i] for i in range(len(options)) for _ in range(counts[i])]
    rng.shuffle(sequence)
    return sequence

# Criticality palette cycled across assets: three of five carry a HIGH rating.
_CRITICALITY_PALETTE = ["HIGH/HIGH/MED", "MED/HIGH/HIGH", "MED/MED/MED", "LOW/MED/LOW", "HIGH/MED/MED"]
_DOMAIN_PALETTE = ["Payments", "Identity", "Channels", "Core Banking", "Operations", "Compliance"]
_TARGET_PALETTE = ["HYBRID", "PQC", "SUPPLIER_LED", "COMPENSATING_CONTROLS"]


def synthesize_estate(params: EstateParams, out_dir: str | Path) -> dict[str, Path]:
    """Write findings, governance, and asset-rules files for a synthetic estate.

    Byte-identical for a fixed seed. Every asset gets exactly one public-key
    family (RSA or ECC by quota); evidence level decides which discovery
    layers saw it; endpoints and certificates spread round-robin across the
    dynamically visible assets.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(params.seed)
    n = params.n_assets

    families = _quota_sequence(
        ["RSA", "ECC"], [params.rsa_fraction, 1 - params.rsa_fraction], n, rng
    )
    owner_unknown = _quota_sequence(
        [True, False],
        [params.owner_unknown_fraction, 1 - params.owner_unknown_fraction],
        n,
        rng,
    )
    evidence = _quota_sequence(
        [level for level, _ in params.evidence_mix],
        [w for _, w in params.evidence_mix],
        n,
        rng,
    )
    shelves = _quota_sequence(
        [y for y, _ in params.shelf_distribution],
        [w for _, w in params.shelf_distribution],
        n,
        rng,
    )
    migrations = _quota_sequence(
        [y for y, _ in params.migration_distribution],
        [w for _, w in params.migration_distribution],
        n,
        rng,
    )

    asset_ids = [f"EST-{i:05d}" for i in range(n)]
    mech_label = {"RSA": "RSA-2048", "ECC": "ECC P-256"}

    findings: list[dict] = []
    rules: list[dict] = []
    governance_rows: list[dict] = []

    def finding_record(source: str, hint: str, location: str, label: str, rule_id: str, k: int) -> dict:
        ts = GENERATOR_EPOCH + timedelta(seconds=k)
        from .model import parse_mechanism_label

        mech = parse_mechanism_label(label)
        return {
            "source": source,
            "asset_hint": hint,
            "location": location,
            "mechanism": mech.to_dict(),
            "kind": "CONFIG_REFERENCE",
            "observed_at": ts.isoformat(),
            "rule_id": rule_id,
            "raw_excerpt": label,
        }

    dynamic_assets: list[int] = []
    serial = 0
    for i, asset_id in enumerate(asset_ids):
        label = mech_label[families[i]]
        path_hint = f"/estate/{asset_id}/src/crypto.py"
        rules.append(
            {
                "pattern": f"/estate/{asset_id}/",
                "asset_id": asset_id,
                "system_context": "APPLICATION",
                "third_party": False,
                "display_name": f"Synthetic service {asset_id}",
            }
        )
        rules.append(
            {
                "pattern": f"{asset_id.lower()}.internal:",
                "asset_id": asset_id,
                "system_context": "APPLICATION",
                "third_party": False,
            }
        )
        level = evidence[i]
        if level is Level.HIGH:
            findings.append(
                finding_record("STATIC", path_hint, f"{path_hint}:10", label, "sample-static", serial)
            )
            serial += 1
            dynamic_assets.append(i)
        elif level is Level.MED:
            dynamic_assets.append(i)
        else:
            findings.append(
                finding_record(
                    "SBOM",
                    f"/estate/{asset_id}/sbom",
                    f"sbom:{asset_id}",
                    label,
                    f"sbom:{asset_id}",
                    serial,
                )
            )
            serial += 1

        raci = {"ACCOUNTABLE": [] if owner_unknown[i] else [f"Owner {i % 97:02d}"]}
        governance_rows.append(
            {
                "asset_id": asset_id,
                "criticality": _CRITICALITY_PALETTE[i % len(_CRITICALITY_PALETTE)],
                "t_shelf_years": shelves[i],
                "t_migration_years": migrations[i],
                "raci": raci,
                "crypto_agility": 1 + (i % 5),
                "target_state": _TARGET_PALETTE[i % len(_TARGET_PALETTE)],
                "next_action": "Review migration plan",
                "domain_label": _DOMAIN_PALETTE[i % len(_DOMAIN_PALETTE)],
            }
        )

    if not dynamic_assets:
        raise InputError("evidence mix leaves no dynamically visible assets for endpoints")
    if params.n_endpoints < len(dynamic_assets):
        raise InputError(
            f"n_endpoints={params.n_endpoints} cannot cover the "
            f"{len(dynamic_assets)} dynamically visible assets; every "
            "direct-dynamic asset needs at least one endpoint"
        )

    endpoints: list[tuple[str, int]] = []  # (endpoint, owning asset index)
    for j in range(params.n_endpoints):
        i = dynamic_assets[j % len(dynamic_assets)]
        port = 443 + j // len(dynamic_assets)
        endpoint = f"{asset_ids[i].lower()}.internal:{port}"
        endpoints.append((endpoint, i))
        findings.append(
            finding_record(
                "DYNAMIC",
                endpoint,
                f"{endpoint} handshake",
                mech_label[families[i]],
                "probe:handshake",
                serial,
            )
        )
        serial += 1

    for k in range(params.n_certificates):
        endpoint, i = endpoints[k % len(endpoints)]
        fingerprint = hashlib.sha256(f"{params.seed}:{k}".encode()).hexdigest()
        findings.append(
            finding_record(
                "DYNAMIC",
                endpoint,
                f"{endpoint} cert sha256:{fingerprint[:16]}",
                mech_label[families[i]],
                "probe:certificate",
                serial,
            )
        )
        serial += 1

    paths = {
        "findings": out / "findings.jsonl",
        "governance": out / "governance.json",
        "asset_rules": out / "asset_rules.json",
        "params": out / "params.json",
    }
    paths["findings"].write_text(dump_jsonl(findings), "utf-8")
    paths["governance"].write_text(
        canonical_json(governance_rows) + "\n",
        "utf-8",
    )
    paths["asset_rules"].write_text(canonical_json({"rules": rules}) + "\n", "utf-8")
    paths["params"].write_text(
        canonical_json(
            {
                "n_assets": params.n_assets,
                "n_endpoints": params.n_endpoints,
                "n_certificates": params.n_certificates,
                "rsa_fraction": params.rsa_fraction,
                "owner_unknown_fraction": params.owner_unknown_fraction,
                "shelf_distribution": [list(p) for p in params.shelf_distribution],
                "migration_distribution": [list(p) for p in params.migration_distribution],
                "evidence_mix": {level.value: w for level, w in params.evidence_mix},
                "seed": params.seed,
            }
        )
        + "\n",
        "utf-8",
    )
    return paths


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------


class ReportTemplate(str, Enum):
    SUMMARY = "SUMMARY"
    COMMITTEE = "COMMITTEE"


def render_report(
    version: RegisterVersion,
    stats: PortfolioStats,
    template: ReportTemplate | str = ReportTemplate.SUMMARY,
) -> str:
    """Plain-text report; identical bytes for identical inputs."""
    tmpl = ReportTemplate(template.upper() if isinstance(template, str) else template)
    coverage, exceptions = coverage_and_exceptions(version)
    lines: list[str] = []
    title = "QUANTUM EXPOSURE REGISTER — " + (
        "SUMMARY" if tmpl is ReportTemplate.SUMMARY else "COMMITTEE REPORT"
    )
    lines.append(title)
    lines.append("=" * len(title))
    lines.append(
        f"Register version {version.version_id}, created {version.created_at.date().isoformat()}"
    )
    scenario = version.scenario
    label = f" ({scenario.scenario_label})" if scenario.scenario_label else ""
    lines.append(f"Threat horizon: {format_years(scenario.t_threat_years)} years{label}")
    lines.append(f"Assets: {stats.total_assets}")
    if stats.total_assets == 0:
        lines.append("")
        lines.append("No assets in this register version; zero assets to report.")
        lines.append("")
        lines.append(REPORT_FOOTER)
        return "\n".join(lines) + "\n"

    lines.append("")
    lines.append("Time-based exposure")
    lines.append(f"  Yes: {stats.exposed_yes_count}")
    lines.append(f"  Borderline: {stats.exposed_borderline_count}")
    lines.append(
        f"  No: {stats.total_assets - stats.time_exposed_count}"
    )
    lines.append("")
    lines.append("Migration waves (assigned)")
    for wave in (1, 2, 3, 4):
        lines.append(f"  Wave {wave}: {stats.wave_counts.get(wave, 0)}")
    lines.append("")
    lines.append("Mechanism families (public-key assets)")
    for bucket in ("RSA", "ECC", "OTHER_PK"):
        count = stats.mechanism_counts.get(bucket, 0)
        frac = stats.mechanism_distribution.get(bucket)
        shown = f"{frac:.1%}" if frac is not None else "n/a"
        lines.append(f"  {bucket}: {count} ({shown})")
    if stats.ownership_unknown_fraction is not None:
        lines.append("")
        lines.append(
            f"Ownership unclear: {stats.ownership_unknown_fraction:.1%} of assets"
        )
    lines.append(
        f"Long-lived confidentiality (>= {format_years(DEFAULT_LONG_LIVED_THRESHOLD_YEARS)}y shelf): "
        f"{stats.long_lived_count}"
    )
    lines.append(
        f"Critical and time-exposed: {stats.critical_exposed_count}"
        + (
            f" ({stats.critical_exposed_fraction:.1%} of assets)"
            if stats.critical_exposed_fraction is not None
            else ""
        )
    )
    lines.append("")
    lines.append("Discovery coverage")
    for source in FindingSource:
        count = coverage.per_source.get(source.value, 0)
        lines.append(
            f"  {source.value}: {count}/{coverage.total_assets} ({coverage.ratio(source):.1%})"
        )
    lines.append(
        f"Endpoints observed: {stats.endpoint_count}; certificates catalogued: {stats.certificate_count}"
    )

    if tmpl is ReportTemplate.COMMITTEE:
        lines.append("")
        lines.append("Register extract")
        header = (
            f"{'QER ID':<12} {'Exposure':<11} {'Priority':<9} {'Wave':<5} "
            f"{'Evidence':<9} {'Owner':<30} Asset"
        )
        lines.append(header)
        lines.append("-" * len(header))
        for entry in version.entries:
            owner = entry.enriched.metadata.owner_display() or "(unassigned)"
            wave = str(entry.assigned_wave)
            if entry.override is not None:
                wave += "*"
            lines.append(
                f"{entry.qer_id:<12} {entry.exposure.display():<11} "
                f"{entry.priority.display():<9} {wave:<5} "
                f"{entry.enriched.evidence.display():<9} {owner:<30} "
                f"{entry.enriched.candidate.display_name}"
            )
        overridden = [e for e in version.entries if e.override is not None]
        if overridden:
            lines.append("")
            lines.append("Governance overrides (* above)")
            for entry in overridden:
                o = entry.override
                lines.append(
                    f"  {entry.qer_id}: wave {o.from_wave} -> {o.to_wave} by {o.actor}: {o.rationale}"
                )
        lines.append("")
        lines.append("Exception register")
        if exceptions:
            for record in exceptions:
                lines.append(f"  [{record.kind.value}] {record.subject}: {record.detail}")
        else:
            lines.append("  (no open exceptions)")
        lines.append("")
        lines.append(
            "Scenario note: exposure statuses hold under the stated threat "
            "horizon only; rerun the evaluation when the horizon assumption "
            "changes."
        )

    lines.append("")
    lines.append(REPORT_FOOTER)
    return "\n".join(lines) + "\n"
