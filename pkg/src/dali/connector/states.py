"""Negotiation and transfer state machines with guarded transitions.

Every state change funnels through `advance`, which enforces the legal
transition relation and appends to the record's history; illegal moves raise
instead of mutating. Histories let the fuzz harness audit that no connector
ever stepped outside the relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..errors import IllegalTransition
from ..model import Digest, ParticipantId
from ..policy import UsagePolicy


class NegotiationPhase(Enum):
    REQUESTED = "REQUESTED"
    OFFERED = "OFFERED"
    ACCEPTED = "ACCEPTED"
    AGREED = "AGREED"
    FINALIZED = "FINALIZED"
    TERMINATED = "TERMINATED"


class TransferPhase(Enum):
    REQUESTED = "REQUESTED"
    STARTED = "STARTED"
    COMPLETED = "COMPLETED"
    TERMINATED = "TERMINATED"


NEGOTIATION_TRANSITIONS = {
    NegotiationPhase.REQUESTED: {
        NegotiationPhase.OFFERED,
        NegotiationPhase.AGREED,
        NegotiationPhase.TERMINATED,
    },
    NegotiationPhase.OFFERED: {NegotiationPhase.ACCEPTED, NegotiationPhase.TERMINATED},
    NegotiationPhase.ACCEPTED: {NegotiationPhase.AGREED, NegotiationPhase.TERMINATED},
    NegotiationPhase.AGREED: {NegotiationPhase.FINALIZED, NegotiationPhase.TERMINATED},
    NegotiationPhase.FINALIZED: set(),
    NegotiationPhase.TERMINATED: set(),
}

TRANSFER_TRANSITIONS = {
    TransferPhase.REQUESTED: {TransferPhase.STARTED, TransferPhase.TERMINATED},
    TransferPhase.STARTED: {TransferPhase.COMPLETED, TransferPhase.TERMINATED},
    TransferPhase.COMPLETED: set(),
    TransferPhase.TERMINATED: set(),
}


@dataclass
class NegotiationRecord:
    """One side's view of a contract negotiation."""

    negotiation_id: str
    asset_id: str
    offer_id: str
    consumer: ParticipantId
    provider: ParticipantId
    role: str  # "consumer" | "provider"
    state: NegotiationPhase = NegotiationPhase.REQUESTED
    counter_offer: UsagePolicy | None = None
    termination_reason: str | None = None
    agreement_id: str | None = None
    agreed_policy: UsagePolicy | None = None
    history: list = field(default_factory=list)

    @property
    def terminal(self) -> bool:
        return self.state in (NegotiationPhase.FINALIZED, NegotiationPhase.TERMINATED)

    def to_wire(self) -> dict:
        return {
            "negotiationId": self.negotiation_id,
            "assetId": self.asset_id,
            "offerId": self.offer_id,
            "consumer": self.consumer.value,
            "provider": self.provider.value,
            "state": self.state.value,
            "counterOffer": self.counter_offer.to_wire() if self.counter_offer else None,
            "terminationReason": self.termination_reason,
            "agreementId": self.agreement_id,
        }


@dataclass
class TransferRecord:
    """One side's view of a transfer process."""

    transfer_id: str
    agreement_id: str
    role: str
    state: TransferPhase = TransferPhase.REQUESTED
    bytes_moved: int = 0
    payload_digest: Digest | None = None
    termination_reason: str | None = None
    purpose: str = ""
    token_wire: dict | None = None
    expected_digest: Digest | None = None
    history: list = field(default_factory=list)

    @property
    def terminal(self) -> bool:
        return self.state in (TransferPhase.COMPLETED, TransferPhase.TERMINATED)

    def to_wire(self) -> dict:
        return {
            "transferId": self.transfer_id,
            "agreementId": self.agreement_id,
            "state": self.state.value,
            "bytesMoved": self.bytes_moved,
            "payloadDigest": self.payload_digest.to_wire() if self.payload_digest else None,
            "terminationReason": self.termination_reason,
        }


def advance(record, new_state, reason: str | None = None) -> None:
    """Move a record to new_state if the transition relation allows it."""
    table = (
        NEGOTIATION_TRANSITIONS
        if isinstance(new_state, NegotiationPhase)
        else TRANSFER_TRANSITIONS
    )
    allowed = table[record.state]
    if new_state not in allowed:
        raise IllegalTransition(
            f"{type(record).__name__} {record.state.value} -> {new_state.value}"
        )
    terminated = new_state in (NegotiationPhase.TERMINATED, TransferPhase.TERMINATED)
    if terminated and not reason:
        raise ValueError("termination requires a reason")
    if not terminated and reason:
        raise ValueError("only termination carries a reason")
    record.history.append((record.state.value, new_state.value))
    record.state = new_state
    if terminated:
        record.termination_reason = reason
