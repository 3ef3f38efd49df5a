"""Connector: contract negotiation, agreements, and policy-gated transfers."""

from .connector import (
    CHUNK_SIZE,
    Connector,
    DecisionMode,
    DirectClearing,
    OutboundMessage,
    default_counter_policy,
    transfer_scope,
)
from .messages import (
    MESSAGE_TYPES,
    PROTOCOL_VERSION,
    Agreement,
    MessageEnvelope,
    sign_envelope,
    verify_envelope,
)
from .states import (
    NEGOTIATION_TRANSITIONS,
    TRANSFER_TRANSITIONS,
    NegotiationPhase,
    NegotiationRecord,
    TransferPhase,
    TransferRecord,
    advance,
)

__all__ = [
    "CHUNK_SIZE",
    "Connector",
    "DecisionMode",
    "DirectClearing",
    "OutboundMessage",
    "default_counter_policy",
    "transfer_scope",
    "MESSAGE_TYPES",
    "PROTOCOL_VERSION",
    "Agreement",
    "MessageEnvelope",
    "sign_envelope",
    "verify_envelope",
    "NEGOTIATION_TRANSITIONS",
    "TRANSFER_TRANSITIONS",
    "NegotiationPhase",
    "NegotiationRecord",
    "TransferPhase",
    "TransferRecord",
    "advance",
]
