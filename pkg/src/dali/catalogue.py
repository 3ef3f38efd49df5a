"""Federated catalogue: registration, discovery, pull-based aggregation.

Each node's catalogue is authoritative for the assets its own provider
registers directly; everything learned from peers carries the peer endpoint
as provenance and loses any conflict against a direct registration.
Descriptions whose metadata fails vocabulary validation are quarantined:
stored with their report, listable by operators, invisible to queries.
"""

from __future__ import annotations

from dataclasses import dataclass
from threading import Lock

from .assets import SelfDescription
from .canonical import format_timestamp, parse_timestamp
from .errors import PeerUnreachable, SubjectMismatch
from .model import AssetKind, ParticipantId
from .vocabulary import Violation, VocabularyHub

LOCAL_SOURCE = "local"


@dataclass(frozen=True)
class CatalogueEntry:
    self_description: SelfDescription
    registered_at: int
    source_connector: str
    validation_report: tuple = ()

    @property
    def quarantined(self) -> bool:
        return bool(self.validation_report)

    @property
    def key(self) -> tuple:
        sd = self.self_description
        return (sd.provider_id.value, sd.asset_id)

    def to_wire(self) -> dict:
        return {
            "selfDescription": self.self_description.to_wire(),
            "registeredAt": format_timestamp(self.registered_at),
            "sourceConnector": self.source_connector,
            "validationReport": [v.to_wire() for v in self.validation_report],
        }

    @classmethod
    def from_wire(cls, data: dict) -> "CatalogueEntry":
        return cls(
            self_description=SelfDescription.from_wire(data["selfDescription"]),
            registered_at=parse_timestamp(data["registeredAt"]),
            source_connector=data["sourceConnector"],
            validation_report=tuple(
                Violation(v["property"], v["code"], v.get("detail", ""))
                for v in data.get("validationReport", [])
            ),
        )


@dataclass(frozen=True)
class Query:
    kind: AssetKind | None = None
    provider: ParticipantId | None = None
    text: str | None = None
    metadata_filters: tuple = ()
    limit: int = 100
    offset: int = 0

    def __post_init__(self):
        if not 1 <= self.limit <= 1000:
            raise ValueError("limit must be within 1..1000")
        if self.offset < 0:
            raise ValueError("offset must be non-negative")

    def matches(self, entry: CatalogueEntry) -> bool:
        sd = entry.self_description
        if self.kind is not None and sd.kind is not self.kind:
            return False
        if self.provider is not None and sd.provider_id != self.provider:
            return False
        if self.text is not None and self.text.lower() not in sd.title.lower():
            return False
        for prop, value in self.metadata_filters:
            if sd.metadata.get(prop) != value:
                return False
        return True


@dataclass(frozen=True)
class SearchResult:
    entries: tuple
    total_count: int

    def to_wire(self) -> dict:
        return {
            "entries": [e.to_wire() for e in self.entries],
            "totalCount": self.total_count,
        }


def _sort_key(entry: CatalogueEntry) -> tuple:
    sd = entry.self_description
    return (-entry.registered_at, sd.asset_id, sd.provider_id.value)


class Catalogue:
    """One node's view of the federation's assets."""

    def __init__(self, vocabulary: VocabularyHub, clock, endpoint: str = LOCAL_SOURCE, guard=None):
        self._vocabulary = vocabulary
        self._clock = clock
        self.endpoint = endpoint
        self._guard = guard
        self._entries: dict = {}
        self._lock = Lock()

    def _require(self, token, scope: str):
        if self._guard is not None:
            return self._guard.require(token, scope)
        return token

    def register(self, description: SelfDescription, token=None) -> CatalogueEntry:
        checked = self._require(token, "catalogue:write")
        if self._guard is not None and checked.subject != description.provider_id:
            raise SubjectMismatch(
                f"token subject {checked.subject} may not publish for {description.provider_id}"
            )
        report = self._vocabulary.validate_kind(description.kind, description.metadata)
        entry = CatalogueEntry(
            self_description=description,
            registered_at=self._clock.now(),
            source_connector=self.endpoint,
            validation_report=tuple(report),
        )
        with self._lock:
            self._entries[entry.key] = entry
        return entry

    def get(self, provider_id: ParticipantId, asset_id: str) -> CatalogueEntry | None:
        entry = self._entries.get((provider_id.value, asset_id))
        if entry is None or entry.quarantined:
            return None
        return entry

    def search(self, query: Query, token=None) -> SearchResult:
        self._require(token, "catalogue:read")
        with self._lock:
            entries = list(self._entries.values())
        hits = sorted(
            (e for e in entries if not e.quarantined and query.matches(e)), key=_sort_key
        )
        page = tuple(hits[query.offset : query.offset + query.limit])
        return SearchResult(entries=page, total_count=len(hits))

    def admin_entries(self, token=None) -> list:
        """Full listing including quarantined entries, for operators."""
        self._require(token, "catalogue:admin")
        with self._lock:
            return sorted(self._entries.values(), key=_sort_key)

    def export_entries(self) -> list:
        """What peers may pull: every non-quarantined entry."""
        with self._lock:
            entries = list(self._entries.values())
        return sorted((e for e in entries if not e.quarantined), key=_sort_key)

    def federate_from(self, peer, token=None) -> dict:
        """Pull the peer's entries and merge. The provider's own catalogue always
        wins: a direct registration here is never overwritten by a peer copy,
        and peer copies are re-validated against the local vocabulary.

        Copies merge by registration recency: a pulled entry replaces a held one
        only when its ``registered_at`` is strictly newer, so a provider's
        re-registration propagates through any pull path while stale third-hand
        copies never roll a catalogue back."""
        self._require(token, "catalogue:federate")
        try:
            pulled = list(peer.list_entries())
        except PeerUnreachable:
            raise
        except Exception as exc:
            raise PeerUnreachable(f"{peer.endpoint}: {exc}") from exc

        added = updated = removed = 0
        with self._lock:
            staged = dict(self._entries)
            seen_keys = set()
            for remote in pulled:
                seen_keys.add(remote.key)
                existing = staged.get(remote.key)
                if existing is not None and existing.source_connector == self.endpoint:
                    continue  # locally registered: provider-authoritative
                if existing is not None and existing.registered_at >= remote.registered_at:
                    continue  # held version is as fresh or fresher
                report = self._vocabulary.validate_kind(
                    remote.self_description.kind, remote.self_description.metadata
                )
                merged = CatalogueEntry(
                    self_description=remote.self_description,
                    registered_at=remote.registered_at,
                    source_connector=peer.endpoint,
                    validation_report=tuple(report),
                )
                if existing is None:
                    staged[merged.key] = merged
                    added += 1
                elif existing != merged:
                    staged[merged.key] = merged
                    updated += 1
            for key, entry in list(staged.items()):
                if entry.source_connector == peer.endpoint and key not in seen_keys:
                    del staged[key]
                    removed += 1
            self._entries = staged
        return {"added": added, "updated": updated, "removed": removed}

    def __len__(self) -> int:
        return len(self._entries)


class DirectPeer:
    """In-process peer adapter for federation (HTTP deployments use a client
    with the same two members)."""

    def __init__(self, catalogue: Catalogue, endpoint: str | None = None):
        self._catalogue = catalogue
        self.endpoint = endpoint or catalogue.endpoint

    def list_entries(self) -> list:
        return self._catalogue.export_entries()
