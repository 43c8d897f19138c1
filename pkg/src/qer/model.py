"""Core domain types: mechanism identity, normalization, and vulnerability classes.

Mechanism labels found in the wild ("RSA-2048 signatures, TLS", "ECC TLS
(P-256)") are free text. :func:`parse_mechanism_label` normalizes them into
:class:`CryptoMechanism` values that the rest of the pipeline can compare,
classify, and aggregate. Unrecognized input never aborts a run: it maps to
family ``UNKNOWN`` with the raw label preserved.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterable

from .errors import InputError


class MechanismFamily(str, Enum):
    RSA = "RSA"
    ECC = "ECC"
    DH = "DH"
    DSA = "DSA"
    AES = "AES"
    TDES = "TDES"
    SHA2 = "SHA2"
    SHA1 = "SHA1"
    MD5 = "MD5"
    ML_KEM = "ML-KEM"
    ML_DSA = "ML-DSA"
    SLH_DSA = "SLH-DSA"
    XMSS = "XMSS"
    LMS = "LMS"
    UNKNOWN = "UNKNOWN"


#: Families that are public-key mechanisms (classical or post-quantum);
#: portfolio statistics count assets against this set.
PUBLIC_KEY_FAMILIES = frozenset(
    {
        MechanismFamily.RSA,
        MechanismFamily.ECC,
        MechanismFamily.DH,
        MechanismFamily.DSA,
        MechanismFamily.ML_KEM,
        MechanismFamily.ML_DSA,
        MechanismFamily.SLH_DSA,
        MechanismFamily.XMSS,
        MechanismFamily.LMS,
    }
)


class ProtocolContext(str, Enum):
    TLS1_0 = "TLS1.0"
    TLS1_1 = "TLS1.1"
    TLS1_2 = "TLS1.2"
    TLS1_3 = "TLS1.3"
    # Unversioned TLS: labels such as "ECC TLS (P-256)" name the protocol
    # without a version; collapsing that to NONE would lose the context.
    TLS = "TLS"
    SSH = "SSH"
    IPSEC = "IPSEC"
    NONE = "NONE"


class UsageRole(str, Enum):
    SIGNING = "SIGNING"
    KEY_EXCHANGE = "KEY_EXCHANGE"
    ENCRYPTION = "ENCRYPTION"
    KEY_WRAPPING = "KEY_WRAPPING"
    HASHING = "HASHING"
    UNKNOWN = "UNKNOWN"


class VulnerabilityClass(str, Enum):
    QUANTUM_VULNERABLE = "QUANTUM_VULNERABLE"
    QUANTUM_WEAKENED = "QUANTUM_WEAKENED"
    CONVENTIONAL_SAFE = "CONVENTIONAL_SAFE"
    PQC = "PQC"


class Level(str, Enum):
    """Three-point rating shared by CIA criticality and evidence confidence."""

    HIGH = "HIGH"
    MED = "MED"
    LOW = "LOW"

    def display(self) -> str:
        return {"HIGH": "High", "MED": "Med", "LOW": "Low"}[self.value]


# Evidence confidence reuses the same three-point scale.
EvidenceConfidence = Level

#: Ordering helper: higher index = stronger evidence / higher criticality.
LEVEL_ORDER = {Level.LOW: 0, Level.MED: 1, Level.HIGH: 2}


@dataclass(frozen=True)
class CIATriple:
    confidentiality: Level
    integrity: Level
    availability: Level

    def as_tuple(self) -> tuple[Level, Level, Level]:
        return (self.confidentiality, self.integrity, self.availability)

    def display(self) -> str:
        return " / ".join(v.display() for v in self.as_tuple())

    def to_dict(self) -> dict:
        return {
            "confidentiality": self.confidentiality.value,
            "integrity": self.integrity.value,
            "availability": self.availability.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CIATriple":
        return cls(Level(d["confidentiality"]), Level(d["integrity"]), Level(d["availability"]))


@dataclass(frozen=True)
class CryptoMechanism:
    """Normalized identity of one cryptographic mechanism.

    ``raw`` preserves the original label the mechanism was parsed from, so
    unrecognized or composite inputs stay auditable.
    """

    family: MechanismFamily = MechanismFamily.UNKNOWN
    parameter: str | None = None
    protocol_context: ProtocolContext = ProtocolContext.NONE
    usage_role: UsageRole = UsageRole.UNKNOWN
    raw: str | None = None

    def __post_init__(self) -> None:
        if self.family is MechanismFamily.UNKNOWN and self.parameter is not None:
            raise InputError("family UNKNOWN cannot carry a parameter")
        if self.parameter is not None and self.parameter.isdigit() and int(self.parameter) <= 0:
            raise InputError(f"numeric parameter must be positive: {self.parameter!r}")

    def display(self) -> str:
        if self.raw:
            return self.raw
        if self.parameter:
            return f"{self.family.value}-{self.parameter}"
        return self.family.value

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "parameter": self.parameter,
            "protocol_context": self.protocol_context.value,
            "usage_role": self.usage_role.value,
            "raw": self.raw,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CryptoMechanism":
        return cls(
            family=MechanismFamily(d.get("family", "UNKNOWN")),
            parameter=d.get("parameter"),
            protocol_context=ProtocolContext(d.get("protocol_context", "NONE")),
            usage_role=UsageRole(d.get("usage_role", "UNKNOWN")),
            raw=d.get("raw"),
        )


# ---------------------------------------------------------------------------
# Label parsing
# ---------------------------------------------------------------------------

# Each entry: (compiled pattern, family, parameter-from-match). Overlapping
# matches are resolved leftmost-longest, so ECDSA wins over the DSA inside it.
def _const(value: str | None):
    return lambda m: value


def _group(i: int):
    return lambda m: m.group(i)


_CURVE_CANON = {
    "P256": "P-256",
    "P384": "P-384",
    "P521": "P-521",
    "SECP256R1": "P-256",
    "SECP384R1": "P-384",
    "SECP521R1": "P-521",
    "PRIME256V1": "P-256",
    "X25519": "X25519",
    "X448": "X448",
    "ED25519": "Ed25519",
    "ED448": "Ed448",
}


def _curve_param(m: re.Match) -> str | None:
    token = re.sub(r"[-_ ]", "", m.group(0).upper())
    return _CURVE_CANON.get(token)


_FAMILY_PATTERNS: list[tuple[re.Pattern[str], MechanismFamily, object]] = [
    (re.compile(r"(?<![A-Z0-9])(?:ML[-_ ]?KEM|KYBER)(?:[-_ ]?(512|768|1024))?", re.I), MechanismFamily.ML_KEM, _group(1)),
    (re.compile(r"(?<![A-Z0-9])(?:ML[-_ ]?DSA|DILITHIUM)(?:[-_ ]?(44|65|87|2|3|5))?", re.I), MechanismFamily.ML_DSA, _group(1)),
    (re.compile(r"(?<![A-Z0-9])(?:SLH[-_ ]?DSA|SPHINCS\+?)", re.I), MechanismFamily.SLH_DSA, _const(None)),
    (re.compile(r"(?<![A-Z0-9])XMSS(?:\^?MT)?", re.I), MechanismFamily.XMSS, _const(None)),
    (re.compile(r"(?<![A-Z0-9])(?:LMS|HSS)(?![A-Z0-9])", re.I), MechanismFamily.LMS, _const(None)),
    (re.compile(r"(?<![A-Z0-9])SHA[-_ ]?(224|256|384|512)(?!\d)", re.I), MechanismFamily.SHA2, _group(1)),
    (re.compile(r"(?<![A-Z0-9])SHA[-_ ]?2(?![0-9])", re.I), MechanismFamily.SHA2, _const(None)),
    (re.compile(r"(?<![A-Z0-9])SHA[-_ ]?1(?![0-9])", re.I), MechanismFamily.SHA1, _const(None)),
    (re.compile(r"(?<![A-Z0-9])MD5(?![A-Z0-9])", re.I), MechanismFamily.MD5, _const(None)),
    (re.compile(r"(?<![A-Z0-9])(?:3DES|TDES|TRIPLE[-_ ]?DES|DES[-_ ]?EDE3?|DES3)(?![A-Z0-9])", re.I), MechanismFamily.TDES, _const(None)),
    (re.compile(r"(?<![A-Z0-9])AES(?:[-_ ]?(128|192|256))?(?:[-_](?:GCM|CBC|CTR|CCM))?", re.I), MechanismFamily.AES, _group(1)),
    (re.compile(r"(?<![A-Z0-9])RSA(?:[-_ ]?(\d{3,5}))?", re.I), MechanismFamily.RSA, _group(1)),
    (re.compile(r"(?<![A-Z0-9])(?:SECP(?:256|384|521)R1|PRIME256V1|X25519|X448|ED25519|ED448)(?![A-Z0-9])", re.I), MechanismFamily.ECC, _curve_param),
    (re.compile(r"(?<![A-Z0-9])P[-_ ]?(256|384|521)(?![0-9])", re.I), MechanismFamily.ECC, lambda m: f"P-{m.group(1)}"),
    (re.compile(r"(?<![A-Z0-9])(?:ECC|ECDSA|ECDHE?|EC)(?![A-Z0-9])", re.I), MechanismFamily.ECC, _const(None)),
    (re.compile(r"(?<![A-Z0-9])DSA(?![A-Z0-9])", re.I), MechanismFamily.DSA, _const(None)),
    (re.compile(r"(?<![A-Z0-9])(?:FFDHE\d*|DIFFIE[-_ ]?HELLMAN|DHE?)(?![A-Z0-9])", re.I), MechanismFamily.DH, _const(None)),
]

_PROTOCOL_PATTERNS: list[tuple[re.Pattern[str], ProtocolContext]] = [
    (re.compile(r"TLS[ _]?V?1[._]?0", re.I), ProtocolContext.TLS1_0),
    (re.compile(r"TLS[ _]?V?1[._]?1", re.I), ProtocolContext.TLS1_1),
    (re.compile(r"TLS[ _]?V?1[._]?2", re.I), ProtocolContext.TLS1_2),
    (re.compile(r"TLS[ _]?V?1[._]?3", re.I), ProtocolContext.TLS1_3),
    (re.compile(r"(?<![A-Z0-9])M?TLS(?![A-Z0-9])|(?<![A-Z0-9])SSL(?![A-Z0-9])", re.I), ProtocolContext.TLS),
    (re.compile(r"(?<![A-Z0-9])SSH(?![A-Z0-9])", re.I), ProtocolContext.SSH),
    (re.compile(r"(?<![A-Z0-9])IPSEC(?![A-Z0-9])", re.I), ProtocolContext.IPSEC),
]

_USAGE_PATTERNS: list[tuple[re.Pattern[str], UsageRole]] = [
    (re.compile(r"SIGN(?:ING|ATURES?|ED)?(?![A-Z])", re.I), UsageRole.SIGNING),
    (re.compile(r"KEY[ _-]?EXCHANGE|KEX(?![A-Z])", re.I), UsageRole.KEY_EXCHANGE),
    (re.compile(r"KEY[ _-]?WRAP(?:PING)?(?![A-Z])", re.I), UsageRole.KEY_WRAPPING),
    (re.compile(r"ENCRYPT(?:ION|ED|S)?(?![A-Z])", re.I), UsageRole.ENCRYPTION),
    (re.compile(r"HASH(?:ING|ES)?(?![A-Z])|DIGEST", re.I), UsageRole.HASHING),
]


def _family_matches(label: str) -> list[tuple[int, int, MechanismFamily, str | None]]:
    """All non-overlapping family matches, resolved leftmost-longest."""
    hits: list[tuple[int, int, MechanismFamily, str | None]] = []
    for pattern, family, param_fn in _FAMILY_PATTERNS:
        for m in pattern.finditer(label):
            hits.append((m.start(), m.end(), family, param_fn(m)))
    hits.sort(key=lambda h: (h[0], -(h[1] - h[0])))
    chosen: list[tuple[int, int, MechanismFamily, str | None]] = []
    cursor = -1
    for start, end, family, param in hits:
        if start > cursor:
            chosen.append((start, end, family, param))
            cursor = end - 1
    return chosen


def _protocol_of(label: str) -> ProtocolContext:
    best: tuple[int, ProtocolContext] | None = None
    for pattern, proto in _PROTOCOL_PATTERNS:
        m = pattern.search(label)
        if m is None:
            continue
        # Versioned matches are longer; prefer them over the bare TLS token.
        size = m.end() - m.start()
        if best is None or size > best[0]:
            best = (size, proto)
    return best[1] if best else ProtocolContext.NONE


def _usage_of(label: str) -> UsageRole:
    for pattern, role in _USAGE_PATTERNS:
        if pattern.search(label):
            return role
    return UsageRole.UNKNOWN


def parse_mechanism_label(label: str) -> CryptoMechanism:
    """Normalize one free-text mechanism label.

    Total over nonempty text: anything unrecognized becomes family UNKNOWN
    with the raw label preserved. Composite labels ("ECC + RSA mix") yield
    the first recognized family; use :func:`parse_mechanism_labels` to keep
    them all.
    """
    if not label or not label.strip():
        raise InputError("mechanism label must be nonempty")
    mechanisms = parse_mechanism_labels(label)
    return mechanisms[0]


def parse_mechanism_labels(label: str) -> list[CryptoMechanism]:
    """Normalize a label that may name several mechanisms; order of appearance."""
    if not label or not label.strip():
        raise InputError("mechanism label must be nonempty")
    text = label.strip()
    protocol = _protocol_of(text)
    usage = _usage_of(text)
    # A curve or key size often appears separately from its family token
    # ("ECC TLS (P-256)"): paramless matches merge into the parameterized
    # match of the same family; distinct parameters stay distinct.
    ordered = [(family, param) for _, _, family, param in _family_matches(text)]
    parameterized = {family for family, param in ordered if param is not None}
    merged: list[tuple[MechanismFamily, str | None]] = []
    for family, param in ordered:
        if param is None and family in parameterized:
            continue
        if (family, param) not in merged:
            merged.append((family, param))
    mechanisms: list[CryptoMechanism] = [
        CryptoMechanism(
            family=family,
            parameter=param,
            protocol_context=protocol,
            usage_role=usage,
            raw=text,
        )
        for family, param in merged
    ]
    if not mechanisms:
        mechanisms.append(
            CryptoMechanism(
                family=MechanismFamily.UNKNOWN,
                parameter=None,
                protocol_context=protocol,
                usage_role=usage,
                raw=text,
            )
        )
    return mechanisms


# ---------------------------------------------------------------------------
# Vulnerability classification
# ---------------------------------------------------------------------------

_CLASSIFICATION_CACHE: list[tuple[str, int | None, bool, VulnerabilityClass]] | None = None


def _load_classification() -> list[tuple[str, int | None, bool, VulnerabilityClass]]:
    """Parse the shipped classification table into (family, bound, is_min, class) rows."""
    global _CLASSIFICATION_CACHE
    if _CLASSIFICATION_CACHE is None:
        raw = resources.files("qer.data").joinpath("classification.json").read_text("utf-8")
        doc = json.loads(raw)
        rules = []
        for rec in doc["rules"]:
            pattern = rec["pattern"]
            cls = VulnerabilityClass(rec["class"])
            m = re.fullmatch(r"([A-Z0-9-]+?)-(\d+)(\+?)", pattern)
            if m and MechanismFamily._value2member_map_.get(m.group(1)):
                rules.append((m.group(1), int(m.group(2)), m.group(3) == "+", cls))
            else:
                rules.append((pattern, None, False, cls))
        _CLASSIFICATION_CACHE = rules
    return _CLASSIFICATION_CACHE


def classify_mechanism(mechanism: CryptoMechanism) -> VulnerabilityClass:
    """Deterministic family+parameter lookup; unknown families rate as vulnerable."""
    param_num: int | None = None
    if mechanism.parameter and mechanism.parameter.isdigit():
        param_num = int(mechanism.parameter)
    for family, bound, is_min, cls in _load_classification():
        if family != mechanism.family.value:
            continue
        if bound is None:
            return cls
        if param_num is None:
            continue
        if (is_min and param_num >= bound) or (not is_min and param_num == bound):
            return cls
    # Conservative default: anything the table does not cover is treated as exposed.
    return VulnerabilityClass.QUANTUM_VULNERABLE


def classify_families(mechanisms: Iterable[CryptoMechanism]) -> set[VulnerabilityClass]:
    return {classify_mechanism(m) for m in mechanisms}
