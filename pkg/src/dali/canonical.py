"""Canonical JSON serialization and timestamp/encoding helpers.

Every value that gets signed, hashed, or persisted goes through
``canonical_json``: sorted keys, compact separators, UTF-8. Timestamps are
UTC integer seconds internally and ISO-8601 ``YYYY-MM-DDThh:mm:ssZ`` on the
wire.
"""

from __future__ import annotations

import base64
import json
from datetime import datetime, timezone


def canonical_json(value) -> str:
    """Serialize to the canonical form used for signing and digesting."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(value) -> bytes:
    return canonical_json(value).encode("utf-8")


def format_timestamp(seconds: int) -> str:
    """UTC integer seconds -> ISO-8601 with trailing Z."""
    dt = datetime.fromtimestamp(int(seconds), tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(raw: str) -> int:
    """ISO-8601 ``YYYY-MM-DDThh:mm:ssZ`` -> UTC integer seconds.

    Raises ValueError on any other lexical form.
    """
    dt = datetime.strptime(raw, "%Y-%m-%dT%H:%M:%SZ")
    return int(dt.replace(tzinfo=timezone.utc).timestamp())


def b64url_encode(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).decode("ascii").rstrip("=")


def b64url_decode(raw: str) -> bytes:
    padding = "=" * (-len(raw) % 4)
    return base64.urlsafe_b64decode(raw + padding)
