"""Hash-chained append-only audit log.

One canonical-JSON record per line in `audit.log`; every record's hash covers
all fields but the hash itself, and links to the previous record's hash
(genesis links to the digest of empty input). Appends are serialized and
fsynced before acknowledgment; verification always re-reads the file, so it
sees exactly what a reader of the disk would see.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from enum import Enum
from threading import Lock

from .canonical import canonical_bytes, canonical_json, format_timestamp, parse_timestamp
from .errors import ActorMismatch, DaliError
from .model import EMPTY_DIGEST, Digest, ParticipantId, digest_of, parse_participant_id


class RecordType(Enum):
    NEGOTIATION_EVENT = "NegotiationEvent"
    AGREEMENT_RECORDED = "AgreementRecorded"
    TRANSFER_EVENT = "TransferEvent"
    ACCESS_DENIED = "AccessDenied"


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    record_type: RecordType
    actor: ParticipantId
    subject_id: str
    payload: dict
    timestamp: int
    prev_hash: Digest
    record_hash: Digest

    def hashed_fields(self) -> dict:
        return {
            "seq": self.seq,
            "recordType": self.record_type.value,
            "actor": self.actor.value,
            "subjectId": self.subject_id,
            "payload": self.payload,
            "timestamp": format_timestamp(self.timestamp),
            "prevHash": self.prev_hash.to_wire(),
        }

    def to_wire(self) -> dict:
        wire = self.hashed_fields()
        wire["recordHash"] = self.record_hash.to_wire()
        return wire

    @classmethod
    def from_wire(cls, data: dict) -> "AuditRecord":
        return cls(
            seq=data["seq"],
            record_type=RecordType(data["recordType"]),
            actor=parse_participant_id(data["actor"]),
            subject_id=data["subjectId"],
            payload=data["payload"],
            timestamp=parse_timestamp(data["timestamp"]),
            prev_hash=Digest.from_wire(data["prevHash"]),
            record_hash=Digest.from_wire(data["recordHash"]),
        )


@dataclass(frozen=True)
class ChainVerdict:
    valid: bool
    first_bad_seq: int | None = None

    def __post_init__(self):
        if self.valid and self.first_bad_seq is not None:
            raise ValueError("a valid chain has no bad seq")

    def to_wire(self) -> dict:
        if self.valid:
            return {"valid": True}
        return {"valid": False, "firstBadSeq": self.first_bad_seq}


def _recompute_hash(hashed_fields: dict) -> Digest:
    return digest_of(canonical_bytes(hashed_fields))


class ClearingHouse:
    """Single logical audit authority for a federation."""

    def __init__(self, log_path: str, clock, guard=None):
        self._path = log_path
        self._clock = clock
        self._guard = guard
        self._lock = Lock()
        self._records: list = []
        os.makedirs(os.path.dirname(log_path) or ".", exist_ok=True)
        self._load_existing()
        self._fh = open(log_path, "a", encoding="utf-8")

    def _load_existing(self) -> None:
        if not os.path.exists(self._path):
            return
        with open(self._path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    self._records.append(AuditRecord.from_wire(json.loads(line)))
                except (ValueError, KeyError, TypeError, DaliError):
                    break  # verify_chain reports the damage; don't mask it here

    def close(self) -> None:
        self._fh.close()

    @property
    def path(self) -> str:
        return self._path

    def append(
        self,
        record_type: RecordType,
        actor: ParticipantId,
        subject_id: str,
        payload: dict,
        token=None,
    ) -> AuditRecord:
        if self._guard is not None:
            checked = self._guard.require(token, "clearing:append")
            if checked.subject != actor:
                raise ActorMismatch(f"{actor} != token subject {checked.subject}")
        with self._lock:
            prev = self._records[-1].record_hash if self._records else EMPTY_DIGEST
            record = AuditRecord(
                seq=len(self._records),
                record_type=record_type,
                actor=actor,
                subject_id=subject_id,
                payload=payload,
                timestamp=self._clock.now(),
                prev_hash=prev,
                record_hash=EMPTY_DIGEST,
            )
            record = replace(record, record_hash=_recompute_hash(record.hashed_fields()))
            self._fh.write(canonical_json(record.to_wire()) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._records.append(record)
            return record

    def verify_chain(self) -> ChainVerdict:
        """Re-reads the log file; valid iff every line re-serializes, re-hashes,
        and links byte-exactly."""
        return verify_log_file(self._path)

    def count_completed_transfers(self, agreement_id: str) -> int:
        with self._lock:
            records = list(self._records)
        return sum(
            1
            for r in records
            if r.record_type is RecordType.TRANSFER_EVENT
            and r.payload.get("agreementId") == agreement_id
            and r.payload.get("outcome") == "completed"
        )

    def query(
        self,
        record_type: RecordType | None = None,
        actor: ParticipantId | None = None,
        subject_id: str | None = None,
        seq_range: tuple | None = None,
        token=None,
    ) -> list:
        if self._guard is not None:
            self._guard.require(token, "clearing:read")
        with self._lock:
            records = list(self._records)
        out = []
        for r in records:
            if record_type is not None and r.record_type is not record_type:
                continue
            if actor is not None and r.actor != actor:
                continue
            if subject_id is not None and r.subject_id != subject_id:
                continue
            if seq_range is not None and not (seq_range[0] <= r.seq <= seq_range[1]):
                continue
            out.append(r)
        return out

    def __len__(self) -> int:
        return len(self._records)


def verify_log_file(path: str) -> ChainVerdict:
    """Standalone chain verification over an audit.log file."""
    if not os.path.exists(path):
        return ChainVerdict(valid=True)
    prev = EMPTY_DIGEST
    with open(path, "rb") as fh:
        raw_lines = fh.read().split(b"\n")
    if raw_lines and raw_lines[-1] == b"":
        raw_lines.pop()
    for index, raw in enumerate(raw_lines):
        try:
            wire = json.loads(raw.decode("utf-8"))
            record = AuditRecord.from_wire(wire)
        except (ValueError, KeyError, TypeError, DaliError):
            return ChainVerdict(valid=False, first_bad_seq=index)
        if canonical_bytes(record.to_wire()) != raw:
            return ChainVerdict(valid=False, first_bad_seq=index)
        if record.seq != index:
            return ChainVerdict(valid=False, first_bad_seq=index)
        if record.prev_hash != prev:
            return ChainVerdict(valid=False, first_bad_seq=index)
        if _recompute_hash(record.hashed_fields()) != record.record_hash:
            return ChainVerdict(valid=False, first_bad_seq=index)
        prev = record.record_hash
    return ChainVerdict(valid=True)
