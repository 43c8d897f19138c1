"""Dynamic discovery: active TLS probing and certificate parsing.

Probes record, they never judge: trust validation is disabled on purpose so
that misconfigured estates are still observed. A probe performs exactly one
client handshake, sends no application data, and maps connection failures to
outcomes instead of exceptions so batch runs always yield one observation
per target.

The observation file format is also the probe's output format, so live and
replayed telemetry are indistinguishable downstream.
"""

from __future__ import annotations

import re
import socket
import ssl
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path

from cryptography import x509
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import dsa, ec, ed448, ed25519, rsa, x448, x25519

from .errors import CertificateParseError, FormatError, InputError
from .jsonutil import format_ts, load_jsonl, parse_ts, utcnow
from .model import (
    CryptoMechanism,
    MechanismFamily,
    ProtocolContext,
    UsageRole,
    parse_mechanism_labels,
)

DEFAULT_TIMEOUT_S = 5.0


class ProbeOutcome(str, Enum):
    OK = "OK"
    TIMEOUT = "TIMEOUT"
    REFUSED = "REFUSED"
    HANDSHAKE_FAILED = "HANDSHAKE_FAILED"


_CURVE_NAME_CANON = {
    "secp256r1": "P-256",
    "secp384r1": "P-384",
    "secp521r1": "P-521",
    "secp224r1": "P-224",
    "secp256k1": "secp256k1",
}

_EC_KEY_SIZES = {224, 255, 256, 384, 448, 521}


@dataclass(frozen=True)
class CertificateRecord:
    subject: str
    issuer: str
    serial: str
    public_key_algorithm: CryptoMechanism
    key_size_bits: int
    signature_algorithm: CryptoMechanism
    not_before: datetime
    not_after: datetime
    fingerprint_sha256: str

    def __post_init__(self) -> None:
        if self.not_before >= self.not_after:
            raise InputError("certificate validity window is empty")
        if not re.fullmatch(r"[0-9a-f]{64}", self.fingerprint_sha256):
            raise InputError("fingerprint must be 64 lowercase hex chars")
        family = self.public_key_algorithm.family
        if family is MechanismFamily.RSA and self.key_size_bits < 512:
            raise InputError(f"implausible RSA key size {self.key_size_bits}")
        if family is MechanismFamily.ECC and self.key_size_bits not in _EC_KEY_SIZES:
            raise InputError(f"implausible ECC key size {self.key_size_bits}")

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "issuer": self.issuer,
            "serial": self.serial,
            "public_key_algorithm": self.public_key_algorithm.to_dict(),
            "key_size_bits": self.key_size_bits,
            "signature_algorithm": self.signature_algorithm.to_dict(),
            "not_before": format_ts(self.not_before),
            "not_after": format_ts(self.not_after),
            "fingerprint_sha256": self.fingerprint_sha256,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CertificateRecord":
        return cls(
            subject=d["subject"],
            issuer=d["issuer"],
            serial=d["serial"],
            public_key_algorithm=CryptoMechanism.from_dict(d["public_key_algorithm"]),
            key_size_bits=d["key_size_bits"],
            signature_algorithm=CryptoMechanism.from_dict(d["signature_algorithm"]),
            not_before=parse_ts(d["not_before"]),
            not_after=parse_ts(d["not_after"]),
            fingerprint_sha256=d["fingerprint_sha256"],
        )


@dataclass(frozen=True)
class TlsObservation:
    endpoint: str
    probe_outcome: ProbeOutcome
    negotiated_version: ProtocolContext | None = None
    cipher_suite: str | None = None
    key_exchange_group: str | None = None
    certificate_chain: tuple[CertificateRecord, ...] = ()
    observed_at: datetime = field(default_factory=utcnow)
    detail: str | None = None

    def __post_init__(self) -> None:
        if self.probe_outcome is ProbeOutcome.OK:
            if self.negotiated_version is None or not self.cipher_suite:
                raise InputError("OK observation must carry version and cipher suite")
        elif self.certificate_chain:
            raise InputError("failed probe cannot carry a certificate chain")

    def to_dict(self) -> dict:
        return {
            "endpoint": self.endpoint,
            "probe_outcome": self.probe_outcome.value,
            "negotiated_version": self.negotiated_version.value if self.negotiated_version else None,
            "cipher_suite": self.cipher_suite,
            "key_exchange_group": self.key_exchange_group,
            "certificate_chain": [c.to_dict() for c in self.certificate_chain],
            "observed_at": format_ts(self.observed_at),
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TlsObservation":
        version = d.get("negotiated_version")
        return cls(
            endpoint=d["endpoint"],
            probe_outcome=ProbeOutcome(d["probe_outcome"]),
            negotiated_version=ProtocolContext(version) if version else None,
            cipher_suite=d.get("cipher_suite"),
            key_exchange_group=d.get("key_exchange_group"),
            certificate_chain=tuple(
                CertificateRecord.from_dict(c) for c in d.get("certificate_chain", [])
            ),
            observed_at=parse_ts(d["observed_at"]),
            detail=d.get("detail"),
        )


# ---------------------------------------------------------------------------
# Certificate parsing
# ---------------------------------------------------------------------------


def parse_certificate(data: bytes) -> CertificateRecord:
    """Decode one DER or PEM certificate into a normalized record."""
    if not data:
        raise CertificateParseError("empty certificate input")
    try:
        if data.lstrip().startswith(b"-----BEGIN"):
            cert = x509.load_pem_x509_certificate(data)
        else:
            cert = x509.load_der_x509_certificate(data)
    except Exception as exc:
        raise CertificateParseError(f"undecodable certificate: {exc}") from exc

    public_key = cert.public_key()
    pk_mechanism, key_size = _public_key_identity(public_key)
    signature = _signature_mechanism(cert.signature_algorithm_oid._name)
    not_before = getattr(cert, "not_valid_before_utc", None) or cert.not_valid_before
    not_after = getattr(cert, "not_valid_after_utc", None) or cert.not_valid_after
    return CertificateRecord(
        subject=cert.subject.rfc4514_string(),
        issuer=cert.issuer.rfc4514_string(),
        serial=format(cert.serial_number, "x"),
        public_key_algorithm=pk_mechanism,
        key_size_bits=key_size,
        signature_algorithm=signature,
        not_before=not_before,
        not_after=not_after,
        fingerprint_sha256=cert.fingerprint(hashes.SHA256()).hex(),
    )


def _public_key_identity(public_key) -> tuple[CryptoMechanism, int]:
    if isinstance(public_key, rsa.RSAPublicKey):
        size = public_key.key_size
        return CryptoMechanism(MechanismFamily.RSA, str(size)), size
    if isinstance(public_key, ec.EllipticCurvePublicKey):
        curve = public_key.curve
        param = _CURVE_NAME_CANON.get(curve.name, curve.name)
        return CryptoMechanism(MechanismFamily.ECC, param), curve.key_size
    if isinstance(public_key, ed25519.Ed25519PublicKey):
        return CryptoMechanism(MechanismFamily.ECC, "Ed25519"), 255
    if isinstance(public_key, ed448.Ed448PublicKey):
        return CryptoMechanism(MechanismFamily.ECC, "Ed448"), 448
    if isinstance(public_key, (x25519.X25519PublicKey, x448.X448PublicKey)):
        size = 255 if isinstance(public_key, x25519.X25519PublicKey) else 448
        return CryptoMechanism(MechanismFamily.ECC, "X25519" if size == 255 else "X448"), size
    if isinstance(public_key, dsa.DSAPublicKey):
        size = public_key.key_size
        return CryptoMechanism(MechanismFamily.DSA, str(size)), size
    der = public_key.public_bytes(
        serialization.Encoding.DER, serialization.PublicFormat.SubjectPublicKeyInfo
    )
    return CryptoMechanism(MechanismFamily.UNKNOWN, raw=type(public_key).__name__), len(der) * 8


def _signature_mechanism(oid_name: str) -> CryptoMechanism:
    # "sha256WithRSAEncryption" names both the digest and the key family;
    # the key family is what the register tracks for signatures. Split
    # camelCase so token boundaries survive normalization.
    preferred = (
        MechanismFamily.RSA,
        MechanismFamily.ECC,
        MechanismFamily.DSA,
        MechanismFamily.ML_DSA,
        MechanismFamily.SLH_DSA,
    )
    spaced = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", oid_name)
    candidates = parse_mechanism_labels(spaced)
    chosen = next((m for m in candidates if m.family in preferred), candidates[0])
    return CryptoMechanism(
        family=chosen.family,
        parameter=chosen.parameter,
        protocol_context=chosen.protocol_context,
        usage_role=UsageRole.SIGNING,
        raw=oid_name,
    )


# ---------------------------------------------------------------------------
# Probing
# ---------------------------------------------------------------------------

_VERSION_CANON = {
    "TLSv1.3": ProtocolContext.TLS1_3,
    "TLSv1.2": ProtocolContext.TLS1_2,
    "TLSv1.1": ProtocolContext.TLS1_1,
    "TLSv1": ProtocolContext.TLS1_0,
}

_FLOOR_MAP = {
    ProtocolContext.TLS1_0: ssl.TLSVersion.TLSv1,
    ProtocolContext.TLS1_1: ssl.TLSVersion.TLSv1_1,
    ProtocolContext.TLS1_2: ssl.TLSVersion.TLSv1_2,
    ProtocolContext.TLS1_3: ssl.TLSVersion.TLSv1_3,
}

_ENDPOINT_RE = re.compile(r"^(?P<host>\[[0-9a-fA-F:]+\]|[^\s:/]+):(?P<port>\d{1,5})$")


def split_endpoint(endpoint: str) -> tuple[str, int]:
    m = _ENDPOINT_RE.match(endpoint.strip())
    if not m:
        raise InputError(f"endpoint must be host:port, got {endpoint!r}")
    port = int(m.group("port"))
    if not 0 < port < 65536:
        raise InputError(f"port out of range in {endpoint!r}")
    return m.group("host").strip("[]"), port


def probe_tls(
    endpoint: str,
    *,
    timeout: float = DEFAULT_TIMEOUT_S,
    version_floor: ProtocolContext | None = None,
) -> TlsObservation:
    """One client handshake against one endpoint; never raises on network failure."""
    host, port = split_endpoint(endpoint)
    if timeout <= 0:
        raise InputError("timeout must be positive")
    ctx = ssl.SSLContext(ssl.PROTOCOL_TLS_CLIENT)
    ctx.check_hostname = False
    ctx.verify_mode = ssl.CERT_NONE
    if version_floor is not None:
        floor = _FLOOR_MAP.get(version_floor)
        if floor is None:
            raise InputError(f"unsupported version floor {version_floor}")
        ctx.minimum_version = floor
    observed = utcnow()
    sni = None if _is_ip_literal(host) else host
    try:
        with socket.create_connection((host, port), timeout=timeout) as sock:
            sock.settimeout(timeout)
            with ctx.wrap_socket(sock, server_hostname=sni) as tls:
                version = _VERSION_CANON.get(tls.version() or "", ProtocolContext.TLS)
                cipher_info = tls.cipher()
                cipher = cipher_info[0] if cipher_info else None
                der = tls.getpeercert(binary_form=True)
                chain: tuple[CertificateRecord, ...] = ()
                if der:
                    try:
                        chain = (parse_certificate(der),)
                    except CertificateParseError as exc:
                        return TlsObservation(
                            endpoint=endpoint,
                            probe_outcome=ProbeOutcome.HANDSHAKE_FAILED,
                            observed_at=observed,
                            detail=f"presented certificate undecodable: {exc}",
                        )
                return TlsObservation(
                    endpoint=endpoint,
                    probe_outcome=ProbeOutcome.OK,
                    negotiated_version=version,
                    cipher_suite=cipher,
                    certificate_chain=chain,
                    observed_at=observed,
                )
    except (socket.timeout, TimeoutError) as exc:
        return TlsObservation(endpoint, ProbeOutcome.TIMEOUT, observed_at=observed, detail=str(exc))
    except ConnectionRefusedError as exc:
        return TlsObservation(endpoint, ProbeOutcome.REFUSED, observed_at=observed, detail=str(exc))
    except socket.gaierror as exc:
        return TlsObservation(
            endpoint, ProbeOutcome.REFUSED, observed_at=observed, detail=f"dns: {exc}"
        )
    except ssl.SSLError as exc:
        return TlsObservation(
            endpoint, ProbeOutcome.HANDSHAKE_FAILED, observed_at=observed, detail=str(exc)
        )
    except OSError as exc:
        return TlsObservation(endpoint, ProbeOutcome.REFUSED, observed_at=observed, detail=str(exc))


def _is_ip_literal(host: str) -> bool:
    try:
        socket.inet_pton(socket.AF_INET, host)
        return True
    except OSError:
        pass
    try:
        socket.inet_pton(socket.AF_INET6, host)
        return True
    except OSError:
        return False


def probe_deep(endpoint: str, *, timeout: float = DEFAULT_TIMEOUT_S) -> list[TlsObservation]:
    """Retry across version floors to enumerate downgrade behavior."""
    floors = [
        ProtocolContext.TLS1_0,
        ProtocolContext.TLS1_2,
        ProtocolContext.TLS1_3,
    ]
    return [probe_tls(endpoint, timeout=timeout, version_floor=floor) for floor in floors]


def probe_many(
    endpoints: list[str],
    *,
    timeout: float = DEFAULT_TIMEOUT_S,
    parallel: int = 8,
    min_interval_s: float = 0.0,
) -> list[TlsObservation]:
    """Probe every endpoint exactly once; results sorted by endpoint.

    ``min_interval_s`` spaces out handshake launches estate-wide so staged
    scans can respect service stability constraints.
    """
    gate = threading.Lock()
    last_launch = [0.0]

    def launch(endpoint: str) -> TlsObservation:
        if min_interval_s > 0:
            with gate:
                wait = last_launch[0] + min_interval_s - time.monotonic()
                if wait > 0:
                    time.sleep(wait)
                last_launch[0] = time.monotonic()
        return probe_tls(endpoint, timeout=timeout)

    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        results = list(pool.map(launch, endpoints))
    return sorted(results, key=lambda o: o.endpoint)


# ---------------------------------------------------------------------------
# Observation files
# ---------------------------------------------------------------------------


def ingest_observation_file(path: str | Path) -> list[TlsObservation]:
    """Replay a captured observation file; schema violations name the record."""
    text = Path(path).read_text("utf-8")
    observations: list[TlsObservation] = []
    for i, record in enumerate(load_jsonl(text)):
        try:
            observations.append(TlsObservation.from_dict(record))
        except (KeyError, ValueError, InputError) as exc:
            raise FormatError(f"bad observation: {exc}", record_index=i) from exc
    return observations


def read_targets_file(path: str | Path) -> list[str]:
    """Targets file: one host:port per line, # comments; the explicit allow-list."""
    targets: list[str] = []
    for line in Path(path).read_text("utf-8").splitlines():
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        split_endpoint(stripped)  # validate early
        targets.append(stripped)
    return targets
