"""Quantum exposure register toolkit.

Discovers cryptographic usage across source trees, live TLS endpoints, and
supplier bills of materials; consolidates the evidence into asset records;
evaluates time-based quantum exposure; scores and sequences migration waves;
and maintains the result as a versioned, auditable governance register.
"""

__version__ = "0.1.0"
