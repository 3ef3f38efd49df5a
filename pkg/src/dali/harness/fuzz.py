"""Protocol fuzzing: seeded schedules over a two-party federation slice.

Each schedule rebuilds fresh connectors over a shared trust store and
catalogue, draws a provider decision mode, offer, purpose, and fault mix from
its own RNG, then drives the negotiation (and transfers when one finalises)
through the randomized scheduler. The checks are the protocol's safety and
consistency obligations: every history step legal, termination reasons present
exactly on terminated records, and both peers landing on the same terminal
state and reason whenever both land at all. Fault-free schedules additionally
bound the per-exchange delivery count.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..assets import SelfDescription, Temperature
from ..catalogue import Catalogue
from ..clock import LogicalClock
from ..connector import Connector, DecisionMode
from ..connector.states import (
    NEGOTIATION_TRANSITIONS,
    TRANSFER_TRANSITIONS,
    NegotiationPhase,
    TransferPhase,
)
from ..datalake import default_research_offer
from ..errors import DaliError, IllegalTransition
from ..identity import TrustStore, generate_keypair
from ..model import AssetKind, digest_of, parse_participant_id
from ..vocabulary import VocabularyHub, install_builtins
from .federation import capped_research_offer
from .topology import FaultSpec
from .transport import InProcessTransport

PROVIDER = parse_participant_id("did:dali:eur:testbed")
CONSUMER = parse_participant_id("did:dali:acme:consumer")
ASSET_ID = "d-fuzz-traces"
PAYLOAD = b"timestamp,cell-id\n" + b"".join(
    f"{1767225600 + i},cell-{i % 8 + 1}\n".encode() for i in range(64)
)
MAX_ROUNDS = 6


@dataclass
class FuzzReport:
    schedules: int
    illegal_transitions: int = 0
    inconsistent_pairs: int = 0
    reason_violations: int = 0
    liveness_violations: int = 0
    reliable_schedules: int = 0
    max_reliable_rounds: int = 0
    stalled: int = 0
    finalized: int = 0
    terminated: int = 0
    samples: list = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return (
            self.illegal_transitions == 0
            and self.inconsistent_pairs == 0
            and self.reason_violations == 0
            and self.liveness_violations == 0
        )

    def note(self, field_name: str, detail: str) -> None:
        setattr(self, field_name, getattr(self, field_name) + 1)
        if len(self.samples) < 10:
            self.samples.append(detail)

    def to_wire(self) -> dict:
        return {
            "schedules": self.schedules,
            "illegalTransitions": self.illegal_transitions,
            "inconsistentPairs": self.inconsistent_pairs,
            "reasonViolations": self.reason_violations,
            "livenessViolations": self.liveness_violations,
            "reliableSchedules": self.reliable_schedules,
            "maxReliableRounds": self.max_reliable_rounds,
            "stalled": self.stalled,
            "finalized": self.finalized,
            "terminated": self.terminated,
            "samples": list(self.samples),
        }


class _SharedFixture:
    """Trust, keys, and catalogue reused across schedules; connectors are not."""

    def __init__(self):
        self.trust = TrustStore()
        self.provider_keys = generate_keypair()
        self.consumer_keys = generate_keypair()
        self.trust.register_participant(PROVIDER, self.provider_keys.public_bytes)
        self.trust.register_participant(CONSUMER, self.consumer_keys.public_bytes)
        vocab = VocabularyHub()
        install_builtins(vocab)
        self.catalogue = Catalogue(vocab, LogicalClock(), endpoint="https://fuzz.example")
        self.catalogue.register(
            SelfDescription(
                asset_id=ASSET_ID,
                provider_id=PROVIDER,
                kind=AssetKind.DATASET,
                title="fuzz traces",
                metadata={
                    "frequency-band": "mmWave",
                    "testbed-origin": "eur",
                    "sample-count": "64",
                },
                offers=(default_research_offer(), capped_research_offer(2)),
                content_digest=digest_of(PAYLOAD),
                temperature=Temperature.COLD,
            )
        )


def _history_violation(record, table, phases) -> str | None:
    previous = phases("REQUESTED")
    for frm, to in record.history:
        frm_phase, to_phase = phases(frm), phases(to)
        if frm_phase is not previous:
            return f"history gap at {frm}->{to}"
        if to_phase not in table[frm_phase]:
            return f"illegal step {frm}->{to}"
        previous = to_phase
    if record.state is not previous:
        return f"state {record.state.value} does not match history"
    terminated = record.state.value == "TERMINATED"
    if terminated and not record.termination_reason:
        return "terminated without reason"
    if not terminated and record.termination_reason:
        return "reason on non-terminated record"
    return None


def _check_histories(report: FuzzReport, label: str, *connectors) -> None:
    for connector in connectors:
        for record in connector.negotiations.values():
            problem = _history_violation(record, NEGOTIATION_TRANSITIONS, NegotiationPhase)
            if problem:
                kind = "reason" if "reason" in problem else "illegal"
                field_name = (
                    "reason_violations" if kind == "reason" else "illegal_transitions"
                )
                report.note(field_name, f"{label}: negotiation {problem}")
        for record in connector.transfers.values():
            problem = _history_violation(record, TRANSFER_TRANSITIONS, TransferPhase)
            if problem:
                kind = "reason" if "reason" in problem else "illegal"
                field_name = (
                    "reason_violations" if kind == "reason" else "illegal_transitions"
                )
                report.note(field_name, f"{label}: transfer {problem}")


def _check_consistency(report: FuzzReport, label: str, consumer, provider) -> None:
    for negotiation_id, mine in consumer.negotiations.items():
        theirs = provider.negotiations.get(negotiation_id)
        if theirs is None or not (mine.terminal and theirs.terminal):
            continue
        if mine.state is not theirs.state or (
            mine.termination_reason != theirs.termination_reason
        ):
            report.note(
                "inconsistent_pairs",
                f"{label}: {negotiation_id} {mine.state.value}/{mine.termination_reason}"
                f" vs {theirs.state.value}/{theirs.termination_reason}",
            )
    for transfer_id, mine in consumer.transfers.items():
        theirs = provider.transfers.get(transfer_id)
        if theirs is None or not (mine.terminal and theirs.terminal):
            continue
        if mine.state is not theirs.state or (
            mine.termination_reason != theirs.termination_reason
        ):
            report.note(
                "inconsistent_pairs",
                f"{label}: {transfer_id} {mine.state.value}/{mine.termination_reason}"
                f" vs {theirs.state.value}/{theirs.termination_reason}",
            )


def run_fuzz(schedules: int, seed: int) -> FuzzReport:
    fixture = _SharedFixture()
    report = FuzzReport(schedules=schedules)
    for index in range(schedules):
        _run_schedule(fixture, report, seed, index)
    return report


def _run_schedule(fixture: _SharedFixture, report: FuzzReport, seed: int, index: int) -> None:
    label = f"schedule {seed}/{index}"
    rng = random.Random(f"fuzz/{seed}/{index}")
    clock = LogicalClock()
    mode = rng.choice(
        (DecisionMode.AUTO, DecisionMode.AUTO, DecisionMode.COUNTER, DecisionMode.MANUAL)
    )
    drop_p = rng.choice((0.0, 0.0, 0.15, 0.3))
    dup_p = rng.choice((0.0, 0.0, 0.2))
    faults = []
    if drop_p:
        faults.append(FaultSpec("drop-message", probability=drop_p))
    if dup_p:
        faults.append(FaultSpec("duplicate-message", probability=dup_p))
    reliable = not faults

    provider = Connector(
        PROVIDER,
        fixture.provider_keys,
        fixture.trust,
        clock,
        catalogue=fixture.catalogue,
        decision_mode=mode,
        payload_reader=lambda asset_id: PAYLOAD,
    )
    consumer = Connector(
        CONSUMER,
        fixture.consumer_keys,
        fixture.trust,
        clock,
        catalogue=fixture.catalogue,
    )
    consumer.offer_responder = lambda record: rng.random() < 0.7
    transport = InProcessTransport(seed=f"{seed}/{index}", faults=faults, clock=clock)
    transport.register(PROVIDER, provider)
    transport.register(CONSUMER, consumer)
    consumer.chunk_fetcher = transport.chunk_fetcher()

    offer_id = rng.choice(
        ("default-research", "default-research", "capped-2", "no-such-offer")
    )
    purpose = rng.choice(("research", "research", "research", "commercial"))

    record = None
    try:
        record, outbound = consumer.start_negotiation(PROVIDER, ASSET_ID, offer_id)
        transport.pump(outbound)
        if provider.pending_decisions:
            _, outbound = provider.decide(record.negotiation_id, rng.random() < 0.7)
            transport.pump(outbound)
        if (
            consumer.negotiations[record.negotiation_id].state
            is NegotiationPhase.FINALIZED
        ):
            for _ in range(rng.randint(1, 3)):
                _, outbound = consumer.request_transfer(record.agreement_id, purpose)
                transport.pump(outbound)
    except IllegalTransition as exc:
        report.note("illegal_transitions", f"{label}: raised {exc}")
    except DaliError:
        pass

    _check_histories(report, label, consumer, provider)
    _check_consistency(report, label, consumer, provider)

    mine = consumer.negotiations.get(record.negotiation_id) if record else None
    theirs = provider.negotiations.get(record.negotiation_id) if record else None
    if mine is not None and theirs is not None and mine.terminal and theirs.terminal:
        if mine.state is NegotiationPhase.FINALIZED:
            report.finalized += 1
        else:
            report.terminated += 1
    else:
        report.stalled += 1

    if reliable:
        report.reliable_schedules += 1
        rounds = max(transport.per_correlation.values(), default=0)
        report.max_reliable_rounds = max(report.max_reliable_rounds, rounds)
        if rounds > MAX_ROUNDS:
            report.note("liveness_violations", f"{label}: {rounds} rounds")
        if mine is not None and not mine.terminal:
            report.note("liveness_violations", f"{label}: stalled on reliable links")
