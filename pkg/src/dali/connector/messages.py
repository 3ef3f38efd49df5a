"""Signed protocol envelopes and dual-signed agreements.

Every control-plane message travels as a MessageEnvelope whose Ed25519
signature covers all other fields, so any byte flipped in transit invalidates
it. Agreements carry one signature per party over the same canonical payload.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..canonical import b64url_decode, b64url_encode, canonical_bytes, format_timestamp, parse_timestamp
from ..errors import BadSignature, UnknownMessageType
from ..identity import KeyPair, TrustStore, verify_signature
from ..model import ParticipantId, parse_participant_id
from ..policy import UsagePolicy

PROTOCOL_VERSION = "dali/1.0"

MESSAGE_TYPES = frozenset(
    {
        "contract-request",
        "contract-offer",
        "contract-accept",
        "contract-agree",
        "contract-countersign",
        "contract-finalized",
        "contract-termination",
        "transfer-request",
        "transfer-start",
        "transfer-complete",
        "transfer-termination",
    }
)


@dataclass(frozen=True)
class MessageEnvelope:
    message_type: str
    sender_id: ParticipantId
    correlation_id: str
    body: dict
    signature: bytes = b""
    protocol_version: str = PROTOCOL_VERSION

    def signed_payload(self) -> bytes:
        return canonical_bytes(
            {
                "messageType": self.message_type,
                "protocolVersion": self.protocol_version,
                "senderId": self.sender_id.value,
                "correlationId": self.correlation_id,
                "body": self.body,
            }
        )

    def to_wire(self) -> dict:
        return {
            "messageType": self.message_type,
            "protocolVersion": self.protocol_version,
            "senderId": self.sender_id.value,
            "correlationId": self.correlation_id,
            "body": self.body,
            "signature": b64url_encode(self.signature),
        }

    @classmethod
    def from_wire(cls, wire: dict) -> "MessageEnvelope":
        if wire["messageType"] not in MESSAGE_TYPES:
            raise UnknownMessageType(wire["messageType"])
        return cls(
            message_type=wire["messageType"],
            sender_id=parse_participant_id(wire["senderId"]),
            correlation_id=wire["correlationId"],
            body=wire["body"],
            signature=b64url_decode(wire["signature"]),
            protocol_version=wire["protocolVersion"],
        )


def sign_envelope(
    message_type: str,
    sender: ParticipantId,
    keys: KeyPair,
    correlation_id: str,
    body: dict,
) -> MessageEnvelope:
    if message_type not in MESSAGE_TYPES:
        raise UnknownMessageType(message_type)
    envelope = MessageEnvelope(
        message_type=message_type,
        sender_id=sender,
        correlation_id=correlation_id,
        body=body,
    )
    return replace(envelope, signature=keys.sign(envelope.signed_payload()))


def verify_envelope(envelope: MessageEnvelope, trust: TrustStore) -> None:
    """Raise BadSignature unless the envelope verifies under the sender's key."""
    if envelope.protocol_version != PROTOCOL_VERSION:
        raise BadSignature(f"unsupported protocol version {envelope.protocol_version}")
    key = trust.participant_key(envelope.sender_id)
    if key is None:
        raise BadSignature(f"unknown sender {envelope.sender_id.value}")
    if not verify_signature(key, envelope.signed_payload(), envelope.signature):
        raise BadSignature(f"envelope from {envelope.sender_id.value}")


@dataclass(frozen=True)
class Agreement:
    agreement_id: str
    negotiation_id: str
    asset_id: str
    consumer: ParticipantId
    provider: ParticipantId
    policy: UsagePolicy
    agreed_at: int
    provider_signature: bytes = b""
    consumer_signature: bytes = b""

    def signed_payload(self) -> bytes:
        return canonical_bytes(
            {
                "agreementId": self.agreement_id,
                "negotiationId": self.negotiation_id,
                "assetId": self.asset_id,
                "consumer": self.consumer.value,
                "provider": self.provider.value,
                "policy": self.policy.to_wire(),
                "agreedAt": format_timestamp(self.agreed_at),
            }
        )

    def to_wire(self) -> dict:
        return {
            "agreementId": self.agreement_id,
            "negotiationId": self.negotiation_id,
            "assetId": self.asset_id,
            "consumer": self.consumer.value,
            "provider": self.provider.value,
            "policy": self.policy.to_wire(),
            "agreedAt": format_timestamp(self.agreed_at),
            "signatures": {
                "provider": b64url_encode(self.provider_signature),
                "consumer": b64url_encode(self.consumer_signature),
            },
        }

    @classmethod
    def from_wire(cls, wire: dict) -> "Agreement":
        sigs = wire.get("signatures", {})
        return cls(
            agreement_id=wire["agreementId"],
            negotiation_id=wire["negotiationId"],
            asset_id=wire["assetId"],
            consumer=parse_participant_id(wire["consumer"]),
            provider=parse_participant_id(wire["provider"]),
            policy=UsagePolicy.from_wire(wire["policy"]),
            agreed_at=parse_timestamp(wire["agreedAt"]),
            provider_signature=b64url_decode(sigs.get("provider", "")),
            consumer_signature=b64url_decode(sigs.get("consumer", "")),
        )

    def verify(self, trust: TrustStore) -> None:
        """Raise BadSignature unless both party signatures check out."""
        payload = self.signed_payload()
        pairs = (
            ("provider", self.provider, self.provider_signature),
            ("consumer", self.consumer, self.consumer_signature),
        )
        for label, party, sig in pairs:
            key = trust.participant_key(party)
            if key is None:
                raise BadSignature(f"unknown {label} {party.value}")
            if not verify_signature(key, payload, sig):
                raise BadSignature(f"{label} signature on {self.agreement_id}")
