"""Temporal exposure evaluation, priority scoring, and wave assignment.

Exposure follows the threshold rule: an asset is exposed when its
confidentiality horizon plus migration duration exceeds the assumed threat
horizon (strict inequality). Exposed assets whose horizon alone does not
outlast the threat window rate BORDERLINE: only the migration tail pushes
them over.

Priority = 0.4·criticality + 0.4·time_exposure + 0.2·evidence_penalty.
Scores are computed in integer tenths, never binary floating point: the band
boundaries are decimal and must not be representation-sensitive. Weak
evidence raises the penalty term, and with it the priority.

Wave allocation is hybrid: the band yields an algorithmic wave, and
governance overrides may reassign it, preserving both values and an
auditable rationale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum

from .enrich import EnrichedAsset
from .errors import InputError
from .jsonutil import format_ts, parse_ts, utcnow
from .model import CIATriple, EvidenceConfidence, Level


@dataclass(frozen=True)
class ThreatScenario:
    t_threat_years: float
    scenario_label: str = ""
    source_note: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "t_threat_years", float(self.t_threat_years))
        if not self.t_threat_years > 0:
            raise InputError("threat horizon must be positive")

    def to_dict(self) -> dict:
        return {
            "t_threat_years": self.t_threat_years,
            "scenario_label": self.scenario_label,
            "source_note": self.source_note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThreatScenario":
        return cls(
            t_threat_years=float(d["t_threat_years"]),
            scenario_label=d.get("scenario_label", ""),
            source_note=d.get("source_note", ""),
        )


class ExposureStatus(str, Enum):
    YES = "YES"
    BORDERLINE = "BORDERLINE"
    NO = "NO"

    def display(self) -> str:
        return {"YES": "Yes", "BORDERLINE": "Borderline", "NO": "No"}[self.value]


#: Order used by the monotonicity property: NO < BORDERLINE < YES.
EXPOSURE_ORDER = {ExposureStatus.NO: 0, ExposureStatus.BORDERLINE: 1, ExposureStatus.YES: 2}


class PriorityBand(str, Enum):
    CRITICAL_W1 = "CRITICAL_W1"
    HIGH_W2 = "HIGH_W2"
    MEDIUM_W3 = "MEDIUM_W3"
    LOW_W4 = "LOW_W4"

    @property
    def wave(self) -> int:
        return {"CRITICAL_W1": 1, "HIGH_W2": 2, "MEDIUM_W3": 3, "LOW_W4": 4}[self.value]


def evaluate_exposure(
    t_shelf: float, t_migration: float, scenario: ThreatScenario
) -> ExposureStatus:
    """Threshold rule, strict inequality; BORDERLINE when only migration tips it over."""
    if t_shelf < 0 or t_migration < 0:
        raise InputError("shelf life and migration duration must be non-negative")
    t_threat = scenario.t_threat_years
    if t_shelf + t_migration <= t_threat:
        return ExposureStatus.NO
    if t_shelf > t_threat:
        return ExposureStatus.YES
    return ExposureStatus.BORDERLINE


def criticality_score(criticality: CIATriple) -> int:
    """Worst rating across the triple drives the score: High=3, Med=2, Low=1."""
    mapping = {Level.HIGH: 3, Level.MED: 2, Level.LOW: 1}
    return max(mapping[v] for v in criticality.as_tuple())


def time_exposure_score(exposure: ExposureStatus) -> int:
    return {ExposureStatus.YES: 3, ExposureStatus.BORDERLINE: 2, ExposureStatus.NO: 1}[exposure]


def evidence_penalty(evidence: EvidenceConfidence) -> int:
    return {Level.HIGH: 0, Level.MED: 1, Level.LOW: 2}[evidence]


@dataclass(frozen=True)
class PriorityResult:
    criticality_score: int
    time_exposure_score: int
    evidence_penalty: int
    priority_tenths: int
    band: PriorityBand

    @property
    def priority(self) -> float:
        return self.priority_tenths / 10

    @property
    def algorithmic_wave(self) -> int:
        return self.band.wave

    def display(self) -> str:
        return f"{self.priority_tenths // 10}.{self.priority_tenths % 10}"

    def to_dict(self) -> dict:
        return {
            "criticality_score": self.criticality_score,
            "time_exposure_score": self.time_exposure_score,
            "evidence_penalty": self.evidence_penalty,
            "priority": self.display(),
            "band": self.band.value,
            "algorithmic_wave": self.algorithmic_wave,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PriorityResult":
        whole, _, frac = d["priority"].partition(".")
        return cls(
            criticality_score=d["criticality_score"],
            time_exposure_score=d["time_exposure_score"],
            evidence_penalty=d["evidence_penalty"],
            priority_tenths=int(whole) * 10 + (int(frac[0]) if frac else 0),
            band=PriorityBand(d["band"]),
        )


def band_for_tenths(tenths: int) -> PriorityBand:
    # Published bands leave gaps (1.29→1.3 etc.); half-open closure covers
    # them, and no achievable score lands inside a gap anyway.
    if tenths >= 24:
        return PriorityBand.CRITICAL_W1
    if tenths >= 19:
        return PriorityBand.HIGH_W2
    if tenths >= 13:
        return PriorityBand.MEDIUM_W3
    return PriorityBand.LOW_W4


def priority_score(crit: int, exp: int, pen: int) -> PriorityResult:
    """Weighted sum in integer tenths: 4·crit + 4·exp + 2·pen."""
    if crit not in (1, 2, 3) or exp not in (1, 2, 3):
        raise InputError("criticality and exposure scores must be 1..3")
    if pen not in (0, 1, 2):
        raise InputError("evidence penalty must be 0..2")
    tenths = 4 * crit + 4 * exp + 2 * pen
    return PriorityResult(
        criticality_score=crit,
        time_exposure_score=exp,
        evidence_penalty=pen,
        priority_tenths=tenths,
        band=band_for_tenths(tenths),
    )


# ---------------------------------------------------------------------------
# Register entries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OverrideRecord:
    actor: str
    timestamp: datetime
    from_wave: int
    to_wave: int
    rationale: str

    def to_dict(self) -> dict:
        return {
            "actor": self.actor,
            "timestamp": format_ts(self.timestamp),
            "from_wave": self.from_wave,
            "to_wave": self.to_wave,
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OverrideRecord":
        return cls(
            actor=d["actor"],
            timestamp=parse_ts(d["timestamp"]),
            from_wave=d["from_wave"],
            to_wave=d["to_wave"],
            rationale=d["rationale"],
        )


@dataclass(frozen=True)
class QEREntry:
    qer_id: str
    enriched: EnrichedAsset
    scenario: ThreatScenario
    exposure: ExposureStatus
    priority: PriorityResult
    assigned_wave: int
    override: OverrideRecord | None = None

    def __post_init__(self) -> None:
        if self.override is None:
            if self.assigned_wave != self.priority.algorithmic_wave:
                raise InputError("assigned wave may differ from the computed wave only via override")
        else:
            if not self.override.rationale.strip():
                raise InputError("override rationale must be nonempty")
            if self.assigned_wave != self.override.to_wave:
                raise InputError("assigned wave must match the override record")

    def to_dict(self) -> dict:
        return {
            "qer_id": self.qer_id,
            "enriched": self.enriched.to_dict(),
            "scenario": self.scenario.to_dict(),
            "exposure": self.exposure.value,
            "priority": self.priority.to_dict(),
            "assigned_wave": self.assigned_wave,
            "override": self.override.to_dict() if self.override else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QEREntry":
        return cls(
            qer_id=d["qer_id"],
            enriched=EnrichedAsset.from_dict(d["enriched"]),
            scenario=ThreatScenario.from_dict(d["scenario"]),
            exposure=ExposureStatus(d["exposure"]),
            priority=PriorityResult.from_dict(d["priority"]),
            assigned_wave=d["assigned_wave"],
            override=OverrideRecord.from_dict(d["override"]) if d.get("override") else None,
        )


def build_entry(asset: EnrichedAsset, scenario: ThreatScenario) -> QEREntry:
    exposure = evaluate_exposure(
        asset.metadata.t_shelf_years, asset.metadata.t_migration_years, scenario
    )
    result = priority_score(
        criticality_score(asset.metadata.criticality),
        time_exposure_score(exposure),
        evidence_penalty(asset.evidence),
    )
    return QEREntry(
        qer_id=asset.asset_id,
        enriched=asset,
        scenario=scenario,
        exposure=exposure,
        priority=result,
        assigned_wave=result.algorithmic_wave,
    )


def build_entries(assets: list[EnrichedAsset], scenario: ThreatScenario) -> list[QEREntry]:
    """One entry per asset under one shared scenario; highest priority first."""
    entries = [build_entry(asset, scenario) for asset in assets]
    entries.sort(key=lambda e: (-e.priority.priority_tenths, e.qer_id))
    return entries


def apply_override(
    entry: QEREntry,
    to_wave: int,
    actor: str,
    rationale: str,
    at: datetime | None = None,
) -> QEREntry:
    """Reassign the wave while preserving the computed one; auditability requires a reason."""
    if not 1 <= to_wave <= 4:
        raise InputError("wave must be 1..4")
    if not rationale or not rationale.strip():
        raise InputError("override rationale must be nonempty")
    record = OverrideRecord(
        actor=actor,
        timestamp=at or utcnow(),
        from_wave=entry.assigned_wave,
        to_wave=to_wave,
        rationale=rationale,
    )
    return replace(entry, assigned_wave=to_wave, override=record)


# ---------------------------------------------------------------------------
# Scenario analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioResult:
    scenario: ThreatScenario
    entries: tuple[QEREntry, ...]

    def exposure_counts(self) -> dict[str, int]:
        counts = {status.value: 0 for status in ExposureStatus}
        for entry in self.entries:
            counts[entry.exposure.value] += 1
        return counts

    def wave_counts(self) -> dict[int, int]:
        counts = {1: 0, 2: 0, 3: 0, 4: 0}
        for entry in self.entries:
            counts[entry.priority.algorithmic_wave] += 1
        return counts


@dataclass(frozen=True)
class ScenarioChange:
    qer_id: str
    exposure_before: ExposureStatus
    exposure_after: ExposureStatus
    priority_before: str
    priority_after: str
    wave_before: int
    wave_after: int

    def to_dict(self) -> dict:
        return {
            "qer_id": self.qer_id,
            "exposure": [self.exposure_before.display(), self.exposure_after.display()],
            "priority": [self.priority_before, self.priority_after],
            "algorithmic_wave": [self.wave_before, self.wave_after],
        }


def run_scenario(assets: list[EnrichedAsset], scenario: ThreatScenario) -> ScenarioResult:
    return ScenarioResult(scenario=scenario, entries=tuple(build_entries(assets, scenario)))


def diff_scenarios(a: ScenarioResult, b: ScenarioResult) -> list[ScenarioChange]:
    """Every asset whose exposure, score, or computed wave differs between scenarios."""
    by_id_a = {e.qer_id: e for e in a.entries}
    by_id_b = {e.qer_id: e for e in b.entries}
    if set(by_id_a) != set(by_id_b):
        raise InputError("scenario results cover different asset sets")
    changes: list[ScenarioChange] = []
    for qer_id in sorted(by_id_a):
        ea, eb = by_id_a[qer_id], by_id_b[qer_id]
        if (
            ea.exposure is eb.exposure
            and ea.priority.priority_tenths == eb.priority.priority_tenths
            and ea.priority.algorithmic_wave == eb.priority.algorithmic_wave
        ):
            continue
        changes.append(
            ScenarioChange(
                qer_id=qer_id,
                exposure_before=ea.exposure,
                exposure_after=eb.exposure,
                priority_before=ea.priority.display(),
                priority_after=eb.priority.display(),
                wave_before=ea.priority.algorithmic_wave,
                wave_after=eb.priority.algorithmic_wave,
            )
        )
    return changes
