"""Canonical JSON and timestamp helpers used by every serialized record."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import Any

from .errors import FormatError


def canonical_json(obj: Any) -> str:
    """Stable rendering: sorted keys, fixed separators, no trailing spaces."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def dump_jsonl(records: list[dict]) -> str:
    return "".join(canonical_json(r) + "\n" for r in records)


def load_jsonl(text: str) -> list[dict]:
    records: list[dict] = []
    for i, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}", record_index=i) from exc
    return records


def format_ts(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).isoformat()


def parse_ts(text: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise FormatError(f"invalid timestamp {text!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def format_years(value: float) -> str:
    """Render a year count the way the register prints it: 8 not 8.0, 8.5 as is."""
    if float(value).is_integer():
        return str(int(value))
    return f"{value:g}"
