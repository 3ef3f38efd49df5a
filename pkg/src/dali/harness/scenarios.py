"""Named scenario scripts, their runner, and record/replay of event logs.

Scenarios run against a driver so the same script can execute over the
in-process transport (deterministic, seeded) or over HTTP (the driver in
httpapi). Each run produces a ScenarioResult; with an event-log path the
runner writes a replayable JSONL file: header, events, trailing checksum.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import tempfile
from dataclasses import dataclass, field

from ..canonical import canonical_json
from ..catalogue import Query
from ..clearinghouse import verify_log_file
from ..connector import NegotiationPhase, TransferPhase
from ..datalake import DataRequest
from ..errors import LogCorrupt, ScriptUnknown
from ..model import AssetKind
from .federation import Federation
from .fuzz import run_fuzz
from .topology import FederationTopology
from .transport import EventRecorder, InProcessTransport

SCENARIOS = (
    "publish-discover",
    "negotiate-transfer",
    "hot-ingest",
    "audit-tamper",
    "fuzz-protocol",
)

DEFAULT_FUZZ_SCHEDULES = 300


@dataclass
class ScenarioResult:
    scenario: str
    seed: int
    transport: str
    events: list = field(default_factory=list)
    terminal_states: dict = field(default_factory=dict)
    audit_verdict: object = None
    digests_match: bool = True

    def to_wire(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "transport": self.transport,
            "events": list(self.events),
            "terminalStates": dict(sorted(self.terminal_states.items())),
            "auditVerdict": self.audit_verdict.to_wire() if self.audit_verdict else None,
            "digestsMatch": self.digests_match,
        }


def _state_key(kind: str, record_id: str, role: str) -> str:
    return f"{kind}/{record_id}/{role}"


def _state_value(record) -> str:
    if record.termination_reason:
        return f"{record.state.value}:{record.termination_reason}"
    return record.state.value


class InProcessDriver:
    """Direct object access plus the seeded single-threaded transport."""

    def __init__(self, federation: Federation, recorder: EventRecorder):
        self.federation = federation
        self.recorder = recorder
        self.transport = InProcessTransport(
            seed=federation.topology.seed,
            faults=federation.topology.faults,
            clock=federation.clock,
            recorder=recorder,
        )
        for node in federation.nodes.values():
            self.transport.register(node.participant_id, node.connector)
        federation.consumer.connector.chunk_fetcher = self.transport.chunk_fetcher()

    def seed_assets(self) -> list:
        ids = self.federation.seed_assets()
        for asset_id in ids:
            self.recorder.record("publish", assetId=asset_id)
        return ids

    def federate_all(self) -> list:
        reports = self.federation.federate_all()
        for report in reports:
            self.recorder.record("federate", **report)
        return reports

    def search(self, kind: str | None = None, text: str | None = None) -> int:
        query = Query(kind=AssetKind(kind) if kind else None, text=text)
        result = self.federation.consumer.catalogue.search(query)
        return result.total_count

    def transferable(self) -> list:
        return [
            (node.spec.short, node.participant_id.value, asset_id)
            for node, asset_id in self.federation.transferable_assets()
        ]

    def negotiate(self, provider_value: str, asset_id: str, offer_id: str) -> dict:
        consumer = self.federation.consumer.connector
        provider = self.federation.nodes[provider_value]
        record, outbound = consumer.start_negotiation(
            provider.participant_id, asset_id, offer_id
        )
        self.transport.pump(outbound)
        return {
            "negotiationId": record.negotiation_id,
            "state": record.state.value,
            "reason": record.termination_reason,
            "agreementId": record.agreement_id,
        }

    def transfer(self, agreement_id: str, purpose: str) -> dict:
        consumer = self.federation.consumer.connector
        record, outbound = consumer.request_transfer(agreement_id, purpose)
        self.transport.pump(outbound)
        return {
            "transferId": record.transfer_id,
            "state": record.state.value,
            "reason": record.termination_reason,
            "payloadDigest": record.payload_digest.to_wire()
            if record.payload_digest
            else None,
            "bytesMoved": record.bytes_moved,
        }

    def provider_transfer_view(self, provider_value: str, transfer_id: str) -> dict:
        record = self.federation.nodes[provider_value].connector.transfers[transfer_id]
        return {
            "state": record.state.value,
            "payloadDigest": record.payload_digest.to_wire()
            if record.payload_digest
            else None,
        }

    def advertised_digest(self, provider_value: str, asset_id: str) -> dict | None:
        node = self.federation.nodes[provider_value]
        entry = node.catalogue.get(node.participant_id, asset_id)
        digest = entry.self_description.content_digest if entry else None
        return digest.to_wire() if digest else None

    def ingest(self, capabilities, sample_count: int, seed: int) -> dict:
        before = self.federation.ingestion.experiments_run
        manifest = self.federation.ingestion.ingest(
            DataRequest(capabilities, sample_count), seed
        )
        return {
            "manifest": manifest.to_wire(),
            "experimentsRun": self.federation.ingestion.experiments_run - before,
        }

    def snapshot_terminals(self) -> dict:
        states = {}
        for node in self.federation.nodes.values():
            for record in node.connector.negotiations.values():
                states[_state_key("negotiation", record.negotiation_id, record.role)] = (
                    _state_value(record)
                )
            for record in node.connector.transfers.values():
                states[_state_key("transfer", record.transfer_id, record.role)] = (
                    _state_value(record)
                )
        return states

    def audit_verify(self):
        return self.federation.house.verify_chain()

    def audit_log_path(self) -> str:
        return os.path.join(self.federation.base_dir, "clearing", "audit.log")

    def close(self) -> None:
        pass


def _scenario_publish_discover(driver, recorder, seed: int) -> dict:
    driver.seed_assets()
    driver.federate_all()
    totals = {}
    for kind in ("dataset", "ml-model", "ran-model", "application", "service"):
        totals[kind] = driver.search(kind=kind)
        recorder.record("search", assetKind=kind, totalCount=totals[kind])
    all_visible = driver.search()
    recorder.record("search", assetKind=None, totalCount=all_visible)
    return {"digests_match": all_visible == sum(totals.values())}


def _scenario_negotiate_transfer(driver, recorder, seed: int) -> dict:
    driver.seed_assets()
    driver.federate_all()
    digests_match = True
    for short, provider_value, asset_id in driver.transferable():
        negotiation = driver.negotiate(provider_value, asset_id, "default-research")
        recorder.record("negotiation", assetId=asset_id, **negotiation)
        if negotiation["state"] != NegotiationPhase.FINALIZED.value:
            digests_match = False
            continue
        transfer = driver.transfer(negotiation["agreementId"], "research")
        provider_view = driver.provider_transfer_view(
            provider_value, transfer["transferId"]
        )
        advertised = driver.advertised_digest(provider_value, asset_id)
        matched = (
            transfer["state"] == TransferPhase.COMPLETED.value
            and provider_view["state"] == TransferPhase.COMPLETED.value
            and transfer["payloadDigest"] == provider_view["payloadDigest"]
            and transfer["payloadDigest"] == advertised
            and advertised is not None
        )
        digests_match = digests_match and matched
        recorder.record(
            "transfer",
            assetId=asset_id,
            digestsMatch=matched,
            **transfer,
        )
    return {"digests_match": digests_match}


def _scenario_hot_ingest(driver, recorder, seed: int) -> dict:
    driver.seed_assets()
    driver.federate_all()
    cold = driver.ingest(("sub-6", "mobility"), 150, seed)
    recorder.record("ingest", request="cold-satisfiable", **cold)
    hot = driver.ingest(("mmWave", "mobility"), 500, seed)
    recorder.record("ingest", request="hot-required", **hot)
    driver.federate_all()
    repeat = driver.ingest(("mmWave", "mobility"), 500, seed)
    recorder.record("ingest", request="hot-repeat", **repeat)
    driver.federate_all()
    deterministic = (
        repeat["manifest"]["objectDigest"] == hot["manifest"]["objectDigest"]
    )
    cold_preferred = cold["experimentsRun"] == 0 and repeat["experimentsRun"] == 0
    ran_hot = hot["experimentsRun"] == 1
    return {"digests_match": deterministic and cold_preferred and ran_hot}


def _scenario_audit_tamper(driver, recorder, seed: int) -> dict:
    driver.seed_assets()
    driver.federate_all()
    _, provider_value, asset_id = driver.transferable()[0]
    negotiation = driver.negotiate(provider_value, asset_id, "default-research")
    if negotiation["agreementId"]:
        driver.transfer(negotiation["agreementId"], "research")
    path = driver.audit_log_path()
    with open(path, "rb") as fh:
        pristine = fh.read()
    rng = random.Random(f"tamper/{seed}")
    position = rng.randrange(len(pristine))
    mutated = bytes(
        [pristine[position] ^ (1 + rng.randrange(255)) if i == position else b
         for i, b in enumerate(pristine)]
    )
    lines_before = pristine[:position].count(b"\n")
    with open(path, "wb") as fh:
        fh.write(mutated)
    tampered = verify_log_file(path)
    with open(path, "wb") as fh:
        fh.write(pristine)
    restored = verify_log_file(path)
    detected = (
        not tampered.valid
        and tampered.first_bad_seq is not None
        and tampered.first_bad_seq <= lines_before
    )
    recorder.record(
        "tamper",
        byteIndex=position,
        mutatedLine=lines_before,
        detected=detected,
        verdict=tampered.to_wire(),
        restoredValid=restored.valid,
    )
    return {"digests_match": detected and restored.valid}


def _scenario_fuzz_protocol(driver, recorder, seed: int, schedules: int) -> dict:
    report = run_fuzz(schedules, seed)
    recorder.record("fuzz", **report.to_wire())
    return {"digests_match": report.clean}


def run_scenario(
    topology: FederationTopology,
    script: str,
    base_dir: str | None = None,
    event_log: str | None = None,
    schedules: int = DEFAULT_FUZZ_SCHEDULES,
    driver_factory=None,
) -> ScenarioResult:
    if script not in SCENARIOS:
        raise ScriptUnknown(script)
    topology.validate()
    if base_dir is None:
        base_dir = tempfile.mkdtemp(prefix="dali-run-")
    recorder = EventRecorder()
    if driver_factory is not None:
        driver = driver_factory(topology, base_dir, recorder)
    elif topology.transport == "http":
        from .httpapi import HttpDriver

        driver = HttpDriver(topology, base_dir, recorder)
    else:
        federation = Federation(topology, base_dir)
        driver = InProcessDriver(federation, recorder)
    try:
        if script == "publish-discover":
            outcome = _scenario_publish_discover(driver, recorder, topology.seed)
        elif script == "negotiate-transfer":
            outcome = _scenario_negotiate_transfer(driver, recorder, topology.seed)
        elif script == "hot-ingest":
            outcome = _scenario_hot_ingest(driver, recorder, topology.seed)
        elif script == "audit-tamper":
            outcome = _scenario_audit_tamper(driver, recorder, topology.seed)
        else:
            outcome = _scenario_fuzz_protocol(driver, recorder, topology.seed, schedules)
        result = ScenarioResult(
            scenario=script,
            seed=topology.seed,
            transport=topology.transport,
            events=recorder.events,
            terminal_states=driver.snapshot_terminals(),
            audit_verdict=driver.audit_verify(),
            digests_match=outcome["digests_match"],
        )
    finally:
        driver.close()
    if event_log is not None:
        write_event_log(event_log, topology, result)
    return result


def write_event_log(path: str, topology: FederationTopology, result: ScenarioResult) -> None:
    lines = [
        canonical_json(
            {
                "kind": "header",
                "scenario": result.scenario,
                "seed": result.seed,
                "topology": topology.to_wire(),
            }
        )
    ]
    lines.extend(canonical_json(event) for event in result.events)
    body = "".join(line + "\n" for line in lines)
    checksum = hashlib.sha256(body.encode("utf-8")).hexdigest()
    footer = canonical_json({"kind": "checksum", "sha256": checksum})
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(body + footer + "\n")


def _load_event_log(path: str) -> tuple:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise LogCorrupt(str(exc)) from exc
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise LogCorrupt("event log too short")
    try:
        footer = json.loads(lines[-1])
        header = json.loads(lines[0])
    except ValueError as exc:
        raise LogCorrupt(f"unparseable log line: {exc}") from exc
    if footer.get("kind") != "checksum" or header.get("kind") != "header":
        raise LogCorrupt("missing header or checksum line")
    body = "".join(line + "\n" for line in lines[:-1])
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != footer.get("sha256"):
        raise LogCorrupt("checksum mismatch")
    try:
        events = [json.loads(line) for line in lines[1:-1]]
        topology = FederationTopology.from_wire(header["topology"])
        scenario = header["scenario"]
    except (ValueError, KeyError, TypeError) as exc:
        raise LogCorrupt(f"malformed log content: {exc}") from exc
    return topology, scenario, events


def replay(event_log_path: str, base_dir: str | None = None) -> ScenarioResult:
    """Re-execute a recorded run and check the schedule matches the log."""
    topology, scenario, events = _load_event_log(event_log_path)
    result = run_scenario(topology, scenario, base_dir=base_dir)
    if result.events != events:
        raise LogCorrupt("replay diverged from the recorded schedule")
    return result
