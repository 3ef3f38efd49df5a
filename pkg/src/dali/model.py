"""Shared domain vocabulary: participant identifiers, asset kinds, digests.

All values here are immutable after construction and safe to share between
concurrent tasks.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum

from .errors import MalformedId, UnknownKind

_PARTICIPANT_RE = re.compile(r"^did:dali:[a-z0-9-]+:[a-z0-9-]+$")
_HEX_RE = re.compile(r"^[0-9a-f]{64}$")

DIGEST_ALGORITHM = "sha-256"

#: SHA-256 of the empty byte sequence; genesis link of every audit chain.
EMPTY_DIGEST_HEX = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


@dataclass(frozen=True, order=True)
class ParticipantId:
    """URI-like decentralized participant identifier (``did:dali:<org>:<name>``)."""

    value: str

    def __post_init__(self):
        if not _PARTICIPANT_RE.match(self.value):
            raise MalformedId(self.value or "<empty>")

    def __str__(self) -> str:
        return self.value


def parse_participant_id(raw: str) -> ParticipantId:
    """Validate and wrap a participant id string. parse∘format is identity."""
    if not isinstance(raw, str):
        raise MalformedId(f"expected string, got {type(raw).__name__}")
    return ParticipantId(raw)


class AssetKind(Enum):
    DATASET = "dataset"
    SERVICE = "service"
    ML_MODEL = "ml-model"
    RAN_MODEL = "ran-model"
    APPLICATION = "application"


def classify_asset_kind(raw: str) -> AssetKind:
    """Map exactly the five canonical kind strings; everything else errors."""
    for kind in AssetKind:
        if kind.value == raw:
            return kind
    raise UnknownKind(repr(raw))


@dataclass(frozen=True)
class Digest:
    """Content digest; algorithm fixed to sha-256 in v1."""

    hex: str
    algorithm: str = DIGEST_ALGORITHM

    def __post_init__(self):
        if self.algorithm != DIGEST_ALGORITHM:
            raise ValueError(f"unsupported digest algorithm {self.algorithm!r}")
        if not _HEX_RE.match(self.hex):
            raise ValueError("digest hex must be 64 lowercase hex chars")

    def to_wire(self) -> dict:
        return {"algorithm": self.algorithm, "hex": self.hex}

    @classmethod
    def from_wire(cls, data: dict) -> "Digest":
        return cls(hex=data["hex"], algorithm=data["algorithm"])


EMPTY_DIGEST = Digest(hex=EMPTY_DIGEST_HEX)


def digest_of(data: bytes) -> Digest:
    """Deterministic SHA-256 of the input, stable across platforms."""
    return Digest(hex=hashlib.sha256(data).hexdigest())
