#!/usr/bin/env python3
"""Active TLS discovery against a local listener.

Starts a loopback TLS server with a fresh self-signed RSA-2048 certificate,
probes it (one handshake, no application data, no trust judgment), and
prints the observation next to two failure-mode probes.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from tlsserver import closed_port_endpoint, make_self_signed, start_tls_server, stop_tls_server

from qer.netdiscovery import probe_tls


def show(obs) -> None:
    print(f"endpoint {obs.endpoint}: {obs.probe_outcome.value}")
    if obs.negotiated_version:
        print(f"    negotiated {obs.negotiated_version.value}, cipher {obs.cipher_suite}")
    for cert in obs.certificate_chain:
        print(
            f"    cert: {cert.subject}  key={cert.public_key_algorithm.display()}"
            f" ({cert.key_size_bits} bits)  sig={cert.signature_algorithm.raw}"
        )
    if obs.detail:
        print(f"    detail: {obs.detail}")


def main() -> None:
    server = start_tls_server(*make_self_signed("rsa", "demo.internal"))
    try:
        show(probe_tls(server.endpoint, timeout=3.0))
    finally:
        stop_tls_server(server)

    show(probe_tls(closed_port_endpoint(), timeout=1.0))
    print("\nFailures become outcomes, not exceptions: batch probing never halts.")


if __name__ == "__main__":
    main()
