"""Exception types shared across the toolkit."""

from __future__ import annotations


class QerError(Exception):
    """Base class for all toolkit errors."""


class InputError(QerError, ValueError):
    """A caller-supplied value violates an operation precondition."""


class FormatError(QerError, ValueError):
    """A file or record does not conform to its declared schema."""

    def __init__(self, message: str, record_index: int | None = None):
        super().__init__(message if record_index is None else f"record {record_index}: {message}")
        self.record_index = record_index


class ConfigError(QerError, KeyError):
    """A configuration table is missing a required entry."""

    def __str__(self) -> str:  # KeyError quotes its args; keep the plain message
        return self.args[0] if self.args else ""


class CertificateParseError(QerError, ValueError):
    """A certificate could not be decoded; message names the reason."""


class ScanIOError(QerError, OSError):
    """The scan root itself is unreadable (per-file failures are skip entries)."""


class ConflictError(QerError):
    """A register commit raced against another writer and lost."""


class LockedError(QerError):
    """The commit lock could not be acquired in time."""


class NotFoundError(QerError, LookupError):
    """A requested register version or entry does not exist."""
