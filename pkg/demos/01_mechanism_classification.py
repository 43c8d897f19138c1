#!/usr/bin/env python3
"""Mechanism normalization and quantum-vulnerability classes.

Free-text crypto labels, as found in configs and inventories, normalize into
comparable mechanism identities; each identity maps to a vulnerability class
from the shipped, editable classification table.
"""

from qer.model import classify_mechanism, parse_mechanism_labels

LABELS = [
    "RSA-2048 signatures, TLS",
    "ECC TLS (P-256)",
    "ECC + RSA mix, mutual TLS",
    "AES-128-GCM",
    "AES-256",
    "SHA-256",
    "SHA-384",
    "3DES legacy cipher",
    "ML-KEM-768 hybrid key exchange",
    "Dilithium3 signing",
    "SaaS-managed TLS",
    "FROBNICATE-9000",
]


def main() -> None:
    print(f"{'label':<34} {'family':<9} {'parameter':<10} {'protocol':<8} class")
    print("-" * 88)
    for label in LABELS:
        for mech in parse_mechanism_labels(label):
            cls = classify_mechanism(mech)
            print(
                f"{label:<34} {mech.family.value:<9} {mech.parameter or '-':<10} "
                f"{mech.protocol_context.value:<8} {cls.value}"
            )


if __name__ == "__main__":
    main()
