"""Policy-enforcing connector: negotiation, agreement, and transfer handling.

A Connector plays both sides of the contract protocol. Control-plane traffic
arrives as signed envelopes through `handle`, which returns the outbound
messages the transport should deliver next; the data plane is `serve_chunk`
(provider) and `pull_payload` (consumer). Providers write the audit trail:
every permit/deny decision and every terminal transition lands exactly once
in the clearing house.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, replace
from enum import Enum

from ..canonical import b64url_decode
from ..clearinghouse import ClearingHouse, RecordType
from ..errors import (
    BadSignature,
    DaliError,
    MissingCountersignature,
    NoValidCredential,
    TokenInvalid,
    TransportFailure,
    UnknownAgreement,
    UnknownProvider,
    WrongState,
)
from ..identity import (
    AccessToken,
    Credential,
    KeyPair,
    TrustStore,
    mint_token,
    verify_credential,
    verify_signature,
    verify_token,
)
from ..model import Digest, ParticipantId, digest_of, parse_participant_id
from ..policy import (
    Action,
    Constraint,
    EvaluationContext,
    LeftOperand,
    Operator,
    UsagePolicy,
    check_well_formed,
    evaluate,
)
from .messages import Agreement, MessageEnvelope, sign_envelope, verify_envelope
from .states import (
    NegotiationPhase,
    NegotiationRecord,
    TransferPhase,
    TransferRecord,
    advance,
)

CHUNK_SIZE = 64 * 1024
TRANSFER_TOKEN_TTL = 900


def transfer_scope(agreement_id: str) -> str:
    return f"transfer:pull:{agreement_id}"


class DecisionMode(Enum):
    """How a provider answers incoming contract requests."""

    AUTO = "auto"
    COUNTER = "counter"
    MANUAL = "manual"


@dataclass(frozen=True)
class OutboundMessage:
    recipient: ParticipantId
    envelope: MessageEnvelope


class DirectClearing:
    """In-process clearing-house client used by provider connectors."""

    def __init__(self, house: ClearingHouse, token: AccessToken | None = None):
        self._house = house
        self._token = token

    def append(self, record_type, actor, subject_id, payload) -> None:
        self._house.append(record_type, actor, subject_id, payload, token=self._token)

    def count_completed(self, agreement_id: str) -> int:
        return self._house.count_completed_transfers(agreement_id)


def default_counter_policy(policy: UsagePolicy) -> UsagePolicy:
    """Counter-offer transform: cap transfers at five uses."""
    cap = Constraint(LeftOperand.USE_COUNT, Operator.LT, 5)
    permissions = tuple(
        replace(rule, constraints=rule.constraints + (cap,))
        if rule.action is Action.TRANSFER
        else rule
        for rule in policy.permissions
    )
    return UsagePolicy(permissions=permissions, prohibitions=policy.prohibitions)


class Connector:
    """One participant's protocol endpoint.

    All mutation happens under a single lock, which serialises concurrent
    messages touching the same negotiation or transfer.
    """

    def __init__(
        self,
        participant_id: ParticipantId,
        keys: KeyPair,
        trust: TrustStore,
        clock,
        catalogue=None,
        clearing=None,
        decision_mode: DecisionMode = DecisionMode.AUTO,
        payload_reader=None,
        credential: Credential | None = None,
    ):
        self.participant_id = participant_id
        self.keys = keys
        self.trust = trust
        self.clock = clock
        self.catalogue = catalogue
        self.clearing = clearing
        self.decision_mode = decision_mode
        self.payload_reader = payload_reader
        self.credential = credential
        self.counter_policy_fn = default_counter_policy
        self.offer_responder = None  # callable(record) -> bool, consumer side
        self.chunk_fetcher = None  # callable(provider, transfer_id, token, offset)
        self.auto_pull = True
        self.token_ttl = TRANSFER_TOKEN_TTL
        self.negotiations: dict[str, NegotiationRecord] = {}
        self.transfers: dict[str, TransferRecord] = {}
        self.agreements: dict[str, Agreement] = {}
        self.pending_decisions: list[str] = []
        self.received_payloads: dict[str, bytes] = {}
        self._drafts: dict[str, Agreement] = {}
        self._payloads: dict[str, bytes] = {}
        self._replay: dict[tuple, list] = {}
        self._sent_starts: dict[str, list] = {}
        self._lock = threading.RLock()
        self._seq = itertools.count(1)
        self._short = "-".join(participant_id.value.split(":")[2:])

    # -- helpers ------------------------------------------------------------

    def _audit(self, record_type: RecordType, subject_id: str, payload: dict) -> None:
        if self.clearing is not None:
            self.clearing.append(record_type, self.participant_id, subject_id, payload)

    def _send(self, recipient, message_type, correlation_id, body) -> OutboundMessage:
        envelope = sign_envelope(
            message_type, self.participant_id, self.keys, correlation_id, body
        )
        return OutboundMessage(recipient=recipient, envelope=envelope)

    def _terminate_negotiation(self, record: NegotiationRecord, reason: str) -> list:
        advance(record, NegotiationPhase.TERMINATED, reason)
        if record.role == "provider":
            self._audit(
                RecordType.NEGOTIATION_EVENT,
                record.negotiation_id,
                {"outcome": "terminated", "reason": reason},
            )
        peer = record.consumer if record.role == "provider" else record.provider
        return [
            self._send(
                peer,
                "contract-termination",
                record.negotiation_id,
                {"negotiationId": record.negotiation_id, "reason": reason},
            )
        ]

    def _draft_agreement(self, record: NegotiationRecord, policy: UsagePolicy) -> Agreement:
        agreement = Agreement(
            agreement_id=f"ag-{record.negotiation_id}",
            negotiation_id=record.negotiation_id,
            asset_id=record.asset_id,
            consumer=record.consumer,
            provider=record.provider,
            policy=policy,
            agreed_at=self.clock.now(),
        )
        return replace(agreement, provider_signature=self.keys.sign(agreement.signed_payload()))

    def _agree(self, record: NegotiationRecord, policy: UsagePolicy) -> list:
        draft = self._draft_agreement(record, policy)
        self._drafts[record.negotiation_id] = draft
        record.agreed_policy = policy
        record.agreement_id = draft.agreement_id
        advance(record, NegotiationPhase.AGREED)
        self._audit(
            RecordType.NEGOTIATION_EVENT, record.negotiation_id, {"outcome": "agreed"}
        )
        return [
            self._send(
                record.consumer,
                "contract-agree",
                record.negotiation_id,
                {"negotiationId": record.negotiation_id, "agreement": draft.to_wire()},
            )
        ]

    # -- consumer operations ------------------------------------------------

    def start_negotiation(
        self,
        provider: ParticipantId,
        asset_id: str,
        offer_id: str,
        negotiation_id: str | None = None,
    ) -> tuple[NegotiationRecord, list]:
        with self._lock:
            if self.credential is not None:
                verdict = verify_credential(self.credential, self.trust, self.clock.now())
                if not verdict:
                    raise NoValidCredential(verdict.reason)
            if self.trust.participant_key(provider) is None:
                raise UnknownProvider(provider.value)
            if negotiation_id is not None and negotiation_id in self.negotiations:
                return self.negotiations[negotiation_id], list(
                    self._sent_starts.get(negotiation_id, [])
                )
            negotiation_id = negotiation_id or f"neg-{self._short}-{next(self._seq)}"
            record = NegotiationRecord(
                negotiation_id=negotiation_id,
                asset_id=asset_id,
                offer_id=offer_id,
                consumer=self.participant_id,
                provider=provider,
                role="consumer",
            )
            self.negotiations[negotiation_id] = record
            outbound = [
                self._send(
                    provider,
                    "contract-request",
                    negotiation_id,
                    {
                        "negotiationId": negotiation_id,
                        "assetId": asset_id,
                        "offerId": offer_id,
                        "consumer": self.participant_id.value,
                        "provider": provider.value,
                    },
                )
            ]
            self._sent_starts[negotiation_id] = outbound
            return record, list(outbound)

    def respond_to_offer(self, negotiation_id: str, accept: bool) -> tuple[NegotiationRecord, list]:
        with self._lock:
            record = self.negotiations.get(negotiation_id)
            if record is None or record.role != "consumer":
                raise WrongState(f"no consumer negotiation {negotiation_id}")
            if record.state is not NegotiationPhase.OFFERED:
                raise WrongState(
                    f"cannot respond to offer in state {record.state.value}"
                )
            return record, self._respond_to_offer(record, accept)

    def _respond_to_offer(self, record: NegotiationRecord, accept: bool) -> list:
        if accept:
            advance(record, NegotiationPhase.ACCEPTED)
            return [
                self._send(
                    record.provider,
                    "contract-accept",
                    record.negotiation_id,
                    {"negotiationId": record.negotiation_id},
                )
            ]
        return self._terminate_negotiation(record, "offer-rejected")

    def request_transfer(
        self, agreement_id: str, purpose: str, transfer_id: str | None = None
    ) -> tuple[TransferRecord, list]:
        with self._lock:
            agreement = self.agreements.get(agreement_id)
            if agreement is None:
                raise UnknownAgreement(agreement_id)
            if transfer_id is not None and transfer_id in self.transfers:
                return self.transfers[transfer_id], []
            transfer_id = transfer_id or f"tx-{self._short}-{next(self._seq)}"
            record = TransferRecord(
                transfer_id=transfer_id,
                agreement_id=agreement_id,
                role="consumer",
                purpose=purpose,
            )
            self.transfers[transfer_id] = record
            outbound = [
                self._send(
                    agreement.provider,
                    "transfer-request",
                    transfer_id,
                    {
                        "transferId": transfer_id,
                        "agreementId": agreement_id,
                        "purpose": purpose,
                    },
                )
            ]
            return record, outbound

    def pull_payload(self, transfer_id: str) -> tuple[TransferRecord, list]:
        """Fetch the payload in 64 KiB chunks, then report completion or failure."""
        with self._lock:
            record = self.transfers.get(transfer_id)
            if (
                record is None
                or record.role != "consumer"
                or record.state is not TransferPhase.STARTED
                or record.token_wire is None
            ):
                raise TokenInvalid(f"transfer {transfer_id} is not ready to pull")
            if self.chunk_fetcher is None:
                raise TransportFailure("no chunk fetcher configured")
            agreement = self.agreements[record.agreement_id]
            provider = agreement.provider
            chunks = []
            offset = 0
            while True:
                try:
                    chunk = self._fetch_chunk(provider, record, offset)
                except TokenInvalid:
                    advance(record, TransferPhase.TERMINATED, "token-invalid")
                    return record, self._transfer_termination(record, provider)
                except TransportFailure:
                    advance(record, TransferPhase.TERMINATED, "transport-failure")
                    return record, self._transfer_termination(record, provider)
                if not chunk:
                    break
                chunks.append(chunk)
                record.bytes_moved += len(chunk)
                offset += len(chunk)
            payload = b"".join(chunks)
            actual = digest_of(payload)
            if record.expected_digest is not None and actual != record.expected_digest:
                advance(record, TransferPhase.TERMINATED, "digest-mismatch")
                return record, self._transfer_termination(record, provider)
            advance(record, TransferPhase.COMPLETED)
            record.payload_digest = actual
            self.received_payloads[transfer_id] = payload
            outbound = [
                self._send(
                    provider,
                    "transfer-complete",
                    transfer_id,
                    {"transferId": transfer_id, "payloadDigest": actual.to_wire()},
                )
            ]
            return record, outbound

    def _fetch_chunk(self, provider, record, offset) -> bytes:
        try:
            return self.chunk_fetcher(provider, record.transfer_id, record.token_wire, offset)
        except TransportFailure:
            return self.chunk_fetcher(provider, record.transfer_id, record.token_wire, offset)

    def _transfer_termination(self, record: TransferRecord, peer) -> list:
        return [
            self._send(
                peer,
                "transfer-termination",
                record.transfer_id,
                {
                    "transferId": record.transfer_id,
                    "reason": record.termination_reason,
                },
            )
        ]

    # -- provider operations ------------------------------------------------

    def decide(self, negotiation_id: str, accept: bool) -> tuple[NegotiationRecord, list]:
        """Resolve a queued manual decision on an incoming contract request."""
        with self._lock:
            record = self.negotiations.get(negotiation_id)
            if record is None or negotiation_id not in self.pending_decisions:
                raise WrongState(f"no pending decision for {negotiation_id}")
            self.pending_decisions.remove(negotiation_id)
            if not accept:
                return record, self._terminate_negotiation(record, "request-declined")
            offer = self._advertised_offer(record.asset_id, record.offer_id)
            return record, self._agree(record, offer.policy)

    def _advertised_offer(self, asset_id: str, offer_id: str):
        if self.catalogue is None:
            return None
        entry = self.catalogue.get(self.participant_id, asset_id)
        if entry is None:
            return None
        return entry.self_description.offer(offer_id)

    def serve_chunk(self, transfer_id: str, token_wire: dict, offset: int) -> bytes:
        """Data plane: hand out one chunk after re-validating the token."""
        with self._lock:
            record = self.transfers.get(transfer_id)
            if (
                record is None
                or record.role != "provider"
                or record.state is not TransferPhase.STARTED
            ):
                raise TokenInvalid(f"transfer {transfer_id} is not serving")
            try:
                token = AccessToken.from_wire(token_wire)
            except (KeyError, TypeError, ValueError):
                raise TokenInvalid("malformed token") from None
            verdict = verify_token(
                token,
                self.keys.public_bytes,
                transfer_scope(record.agreement_id),
                self.clock.now(),
            )
            if not verdict:
                raise TokenInvalid(verdict.reason)
            payload = self._payloads[transfer_id]
            chunk = payload[offset : offset + CHUNK_SIZE]
            record.bytes_moved = max(record.bytes_moved, min(offset + len(chunk), len(payload)))
            return chunk

    # -- message dispatch ---------------------------------------------------

    def handle(self, envelope: MessageEnvelope) -> list:
        """Process one inbound envelope; returns messages to send next."""
        with self._lock:
            try:
                verify_envelope(envelope, self.trust)
            except BadSignature as exc:
                self._audit(
                    RecordType.ACCESS_DENIED,
                    envelope.correlation_id,
                    {"category": "envelope", "reason": str(exc)},
                )
                return []
            key = (envelope.sender_id.value, envelope.correlation_id, envelope.message_type)
            if key in self._replay:
                return list(self._replay[key])
            handler = self._HANDLERS[envelope.message_type]
            outbound = handler(self, envelope)
            self._replay[key] = list(outbound)
            return outbound

    def _handle_contract_request(self, envelope) -> list:
        body = envelope.body
        negotiation_id = body["negotiationId"]
        existing = self.negotiations.get(negotiation_id)
        if existing is not None:
            if (
                existing.state is NegotiationPhase.OFFERED
                and self.decision_mode is DecisionMode.COUNTER
            ):
                return self._terminate_negotiation(existing, "negotiation-depth-exceeded")
            return []
        record = NegotiationRecord(
            negotiation_id=negotiation_id,
            asset_id=body["assetId"],
            offer_id=body["offerId"],
            consumer=parse_participant_id(body["consumer"]),
            provider=self.participant_id,
            role="provider",
        )
        self.negotiations[negotiation_id] = record
        offer = self._advertised_offer(record.asset_id, record.offer_id)
        if offer is None:
            return self._terminate_negotiation(record, "unknown-offer")
        if self.decision_mode is DecisionMode.AUTO:
            return self._agree(record, offer.policy)
        if self.decision_mode is DecisionMode.COUNTER:
            counter = self.counter_policy_fn(offer.policy)
            record.counter_offer = counter
            advance(record, NegotiationPhase.OFFERED)
            self._audit(
                RecordType.NEGOTIATION_EVENT, negotiation_id, {"outcome": "offered"}
            )
            return [
                self._send(
                    record.consumer,
                    "contract-offer",
                    negotiation_id,
                    {"negotiationId": negotiation_id, "counterOffer": counter.to_wire()},
                )
            ]
        self.pending_decisions.append(negotiation_id)
        self._audit(RecordType.NEGOTIATION_EVENT, negotiation_id, {"outcome": "pending"})
        return []

    def _handle_contract_offer(self, envelope) -> list:
        record = self.negotiations.get(envelope.body["negotiationId"])
        if record is None or record.role != "consumer" or record.terminal:
            return []
        if record.state is not NegotiationPhase.REQUESTED:
            return []
        record.counter_offer = UsagePolicy.from_wire(envelope.body["counterOffer"])
        advance(record, NegotiationPhase.OFFERED)
        if self.offer_responder is not None:
            return self._respond_to_offer(record, bool(self.offer_responder(record)))
        return []

    def _handle_contract_accept(self, envelope) -> list:
        record = self.negotiations.get(envelope.body["negotiationId"])
        if record is None or record.role != "provider" or record.terminal:
            return []
        if record.state is not NegotiationPhase.OFFERED:
            return []
        advance(record, NegotiationPhase.ACCEPTED)
        return self._agree(record, record.counter_offer)

    def _handle_contract_agree(self, envelope) -> list:
        record = self.negotiations.get(envelope.body["negotiationId"])
        if record is None or record.role != "consumer" or record.terminal:
            return []
        if record.state not in (NegotiationPhase.REQUESTED, NegotiationPhase.ACCEPTED):
            return []
        agreement = Agreement.from_wire(envelope.body["agreement"])
        payload = agreement.signed_payload()
        if (
            agreement.consumer != self.participant_id
            or agreement.provider != record.provider
            or agreement.asset_id != record.asset_id
            or not verify_signature(
                self.trust.participant_key(record.provider),
                payload,
                agreement.provider_signature,
            )
        ):
            return self._terminate_negotiation(record, "bad-agreement")
        if record.counter_offer is not None and agreement.policy != record.counter_offer:
            return self._terminate_negotiation(record, "bad-agreement")
        if check_well_formed(agreement.policy):
            return self._terminate_negotiation(record, "bad-agreement")
        countersigned = replace(
            agreement, consumer_signature=self.keys.sign(payload)
        )
        self._drafts[record.negotiation_id] = countersigned
        record.agreed_policy = agreement.policy
        record.agreement_id = agreement.agreement_id
        advance(record, NegotiationPhase.AGREED)
        return [
            self._send(
                record.provider,
                "contract-countersign",
                record.negotiation_id,
                {
                    "negotiationId": record.negotiation_id,
                    "agreementId": agreement.agreement_id,
                    "consumerSignature": countersigned.to_wire()["signatures"]["consumer"],
                },
            )
        ]

    def _handle_contract_countersign(self, envelope) -> list:
        record = self.negotiations.get(envelope.body["negotiationId"])
        if record is None or record.role != "provider" or record.terminal:
            return []
        if record.state is not NegotiationPhase.AGREED:
            return []
        draft = self._drafts.get(record.negotiation_id)
        signature = b64url_decode(envelope.body.get("consumerSignature", ""))
        if draft is None or not verify_signature(
            self.trust.participant_key(record.consumer),
            draft.signed_payload(),
            signature,
        ):
            raise MissingCountersignature(record.negotiation_id)
        final = replace(draft, consumer_signature=signature)
        final.verify(self.trust)
        advance(record, NegotiationPhase.FINALIZED)
        self.agreements[final.agreement_id] = final
        self._audit(
            RecordType.AGREEMENT_RECORDED,
            final.agreement_id,
            {
                "negotiationId": final.negotiation_id,
                "assetId": final.asset_id,
                "consumer": final.consumer.value,
                "provider": final.provider.value,
            },
        )
        return [
            self._send(
                record.consumer,
                "contract-finalized",
                record.negotiation_id,
                {"negotiationId": record.negotiation_id, "agreement": final.to_wire()},
            )
        ]

    def _handle_contract_finalized(self, envelope) -> list:
        record = self.negotiations.get(envelope.body["negotiationId"])
        if record is None or record.role != "consumer" or record.terminal:
            return []
        if record.state is not NegotiationPhase.AGREED:
            return []
        final = Agreement.from_wire(envelope.body["agreement"])
        final.verify(self.trust)
        local = self._drafts.get(record.negotiation_id)
        if local is not None and final.signed_payload() != local.signed_payload():
            return self._terminate_negotiation(record, "bad-agreement")
        advance(record, NegotiationPhase.FINALIZED)
        self.agreements[final.agreement_id] = final
        record.agreement_id = final.agreement_id
        return []

    def _handle_contract_termination(self, envelope) -> list:
        record = self.negotiations.get(envelope.body["negotiationId"])
        if record is None or record.terminal:
            return []
        reason = envelope.body.get("reason") or "terminated"
        advance(record, NegotiationPhase.TERMINATED, reason)
        if record.role == "provider":
            self._audit(
                RecordType.NEGOTIATION_EVENT,
                record.negotiation_id,
                {"outcome": "terminated", "reason": reason},
            )
        return []

    def _handle_transfer_request(self, envelope) -> list:
        body = envelope.body
        transfer_id = body["transferId"]
        if transfer_id in self.transfers:
            return []
        agreement_id = body["agreementId"]
        purpose = body.get("purpose", "")
        record = TransferRecord(
            transfer_id=transfer_id,
            agreement_id=agreement_id,
            role="provider",
            purpose=purpose,
        )
        self.transfers[transfer_id] = record
        agreement = self.agreements.get(agreement_id)
        if agreement is None or agreement.consumer != envelope.sender_id:
            return self._deny_transfer(record, envelope.sender_id, "unknown-agreement")
        context = EvaluationContext(
            requester=agreement.consumer,
            action=Action.TRANSFER,
            purpose=purpose,
            now=self.clock.now(),
            prior_use_count=self.clearing.count_completed(agreement_id)
            if self.clearing
            else 0,
        )
        decision = evaluate(agreement.policy, context)
        if not decision.permit:
            return self._deny_transfer(
                record, agreement.consumer, decision.reason, str(decision)
            )
        try:
            payload = self.payload_reader(agreement.asset_id)
        except (DaliError, OSError, KeyError):
            return self._deny_transfer(record, agreement.consumer, "payload-unavailable")
        self._payloads[transfer_id] = payload
        entry = (
            self.catalogue.get(self.participant_id, agreement.asset_id)
            if self.catalogue
            else None
        )
        content_digest = (
            entry.self_description.content_digest
            if entry and entry.self_description.content_digest
            else digest_of(payload)
        )
        token = mint_token(
            self.keys,
            agreement.consumer,
            audience=self.participant_id.value,
            scopes=(transfer_scope(agreement_id),),
            ttl=self.token_ttl,
            now=self.clock.now(),
        )
        advance(record, TransferPhase.STARTED)
        self._audit(
            RecordType.TRANSFER_EVENT,
            transfer_id,
            {"agreementId": agreement_id, "outcome": "started"},
        )
        return [
            self._send(
                agreement.consumer,
                "transfer-start",
                transfer_id,
                {
                    "transferId": transfer_id,
                    "agreementId": agreement_id,
                    "token": token.to_wire(),
                    "contentDigest": content_digest.to_wire(),
                    "sizeBytes": len(payload),
                },
            )
        ]

    def _deny_transfer(
        self, record: TransferRecord, peer, reason: str, termination_reason: str | None = None
    ) -> list:
        termination_reason = termination_reason or reason
        advance(record, TransferPhase.TERMINATED, termination_reason)
        self._audit(
            RecordType.ACCESS_DENIED,
            record.transfer_id,
            {
                "category": "transfer",
                "agreementId": record.agreement_id,
                "reason": reason,
                "purpose": record.purpose,
            },
        )
        return [
            self._send(
                peer,
                "transfer-termination",
                record.transfer_id,
                {"transferId": record.transfer_id, "reason": termination_reason},
            )
        ]

    def _handle_transfer_start(self, envelope) -> list:
        body = envelope.body
        record = self.transfers.get(body["transferId"])
        if record is None or record.role != "consumer" or record.terminal:
            return []
        if record.state is not TransferPhase.REQUESTED:
            return []
        record.token_wire = body["token"]
        agreement = self.agreements.get(record.agreement_id)
        entry = None
        if self.catalogue is not None and agreement is not None:
            entry = self.catalogue.get(agreement.provider, agreement.asset_id)
        if entry is not None and entry.self_description.content_digest is not None:
            record.expected_digest = entry.self_description.content_digest
        else:
            record.expected_digest = Digest.from_wire(body["contentDigest"])
        advance(record, TransferPhase.STARTED)
        if self.auto_pull and self.chunk_fetcher is not None:
            _, outbound = self.pull_payload(record.transfer_id)
            return outbound
        return []

    def _handle_transfer_complete(self, envelope) -> list:
        record = self.transfers.get(envelope.body["transferId"])
        if record is None or record.role != "provider" or record.terminal:
            return []
        if record.state is not TransferPhase.STARTED:
            return []
        advance(record, TransferPhase.COMPLETED)
        record.payload_digest = Digest.from_wire(envelope.body["payloadDigest"])
        record.bytes_moved = len(self._payloads.get(record.transfer_id, b""))
        self._payloads.pop(record.transfer_id, None)
        self._audit(
            RecordType.TRANSFER_EVENT,
            record.transfer_id,
            {"agreementId": record.agreement_id, "outcome": "completed"},
        )
        return []

    def _handle_transfer_termination(self, envelope) -> list:
        record = self.transfers.get(envelope.body["transferId"])
        if record is None or record.terminal:
            return []
        reason = envelope.body.get("reason") or "terminated"
        advance(record, TransferPhase.TERMINATED, reason)
        if record.role == "provider":
            self._payloads.pop(record.transfer_id, None)
            self._audit(
                RecordType.TRANSFER_EVENT,
                record.transfer_id,
                {
                    "agreementId": record.agreement_id,
                    "outcome": "terminated",
                    "reason": reason,
                },
            )
        return []

    _HANDLERS = {
        "contract-request": _handle_contract_request,
        "contract-offer": _handle_contract_offer,
        "contract-accept": _handle_contract_accept,
        "contract-agree": _handle_contract_agree,
        "contract-countersign": _handle_contract_countersign,
        "contract-finalized": _handle_contract_finalized,
        "contract-termination": _handle_contract_termination,
        "transfer-request": _handle_transfer_request,
        "transfer-start": _handle_transfer_start,
        "transfer-complete": _handle_transfer_complete,
        "transfer-termination": _handle_transfer_termination,
    }
