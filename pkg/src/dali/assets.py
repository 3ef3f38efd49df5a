"""Self-descriptions and offers: what providers publish to the catalogue."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .canonical import format_timestamp, parse_timestamp
from .model import AssetKind, Digest, ParticipantId, classify_asset_kind, parse_participant_id
from .policy import UsagePolicy, check_well_formed

MAX_OFFERS_PER_ASSET = 32


class Temperature(Enum):
    COLD = "cold"
    HOT_CAPABLE = "hot-capable"


@dataclass(frozen=True)
class Offer:
    """A usage policy plus licensing label under which an asset is available."""

    offer_id: str
    policy: UsagePolicy
    license_tag: str = ""

    def __post_init__(self):
        if not self.offer_id:
            raise ValueError("offer_id must be non-empty")
        if not self.policy.permissions:
            raise ValueError("a policy attached to an offer needs at least one permission")
        problems = check_well_formed(self.policy)
        if problems:
            raise ValueError(f"offer {self.offer_id}: malformed policy: {problems[0]}")

    def to_wire(self) -> dict:
        return {
            "offerId": self.offer_id,
            "policy": self.policy.to_wire(),
            "licenseTag": self.license_tag,
        }

    @classmethod
    def from_wire(cls, data: dict) -> "Offer":
        return cls(
            offer_id=data["offerId"],
            policy=UsagePolicy.from_wire(data["policy"]),
            license_tag=data.get("licenseTag", ""),
        )


@dataclass(frozen=True)
class SelfDescription:
    """Catalogued description of a dataset, service, ML model, RAN model, or app.

    The validating constructor enforces the structural invariants; conformance
    of `metadata` to the kind's schema is the vocabulary module's job and is
    checked at catalogue registration.
    """

    asset_id: str
    provider_id: ParticipantId
    kind: AssetKind
    title: str
    metadata: dict = field(default_factory=dict)
    offers: tuple = ()
    content_digest: Digest | None = None
    temperature: Temperature = Temperature.COLD
    created_at: int = 0

    def __post_init__(self):
        if not self.asset_id:
            raise ValueError("asset_id must be non-empty")
        if len(self.offers) > MAX_OFFERS_PER_ASSET:
            raise ValueError(f"at most {MAX_OFFERS_PER_ASSET} offers per asset")
        seen = set()
        for offer in self.offers:
            if offer.offer_id in seen:
                raise ValueError(f"duplicate offer id {offer.offer_id!r}")
            seen.add(offer.offer_id)
        for key, value in self.metadata.items():
            if not isinstance(key, str) or not isinstance(value, str):
                raise ValueError("metadata must map string property names to string values")
        if self.temperature is Temperature.COLD and self.content_digest is None:
            raise ValueError("temperature=cold requires a content digest")

    def offer(self, offer_id: str) -> Offer | None:
        for o in self.offers:
            if o.offer_id == offer_id:
                return o
        return None

    def to_wire(self) -> dict:
        return {
            "assetId": self.asset_id,
            "providerId": self.provider_id.value,
            "kind": self.kind.value,
            "title": self.title,
            "metadata": dict(sorted(self.metadata.items())),
            "offers": [o.to_wire() for o in self.offers],
            "contentDigest": self.content_digest.to_wire() if self.content_digest else None,
            "temperature": self.temperature.value,
            "createdAt": format_timestamp(self.created_at),
        }

    @classmethod
    def from_wire(cls, data: dict) -> "SelfDescription":
        digest = data.get("contentDigest")
        return cls(
            asset_id=data["assetId"],
            provider_id=parse_participant_id(data["providerId"]),
            kind=classify_asset_kind(data["kind"]),
            title=data["title"],
            metadata=dict(data.get("metadata", {})),
            offers=tuple(Offer.from_wire(o) for o in data.get("offers", [])),
            content_digest=Digest.from_wire(digest) if digest else None,
            temperature=Temperature(data["temperature"]),
            created_at=parse_timestamp(data["createdAt"]),
        )
