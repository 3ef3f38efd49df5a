"""Harness tests: topologies, deterministic scenarios, fault soundness, replay."""

import json

import pytest
import yaml

from dali.canonical import canonical_json
from dali.datalake import TestbedProfile
from dali.errors import LogCorrupt, ScriptUnknown, TopologyInvalid
from dali.harness import (
    FaultSpec,
    Federation,
    FederationTopology,
    NodeSpec,
    default_topology,
    replay,
    run_fuzz,
    run_scenario,
)
from dali.model import parse_participant_id

PROFILE = TestbedProfile("lab", ("mmWave",), "1.0")


def node(did: str, role: str, profile=None) -> NodeSpec:
    return NodeSpec(parse_participant_id(did), role, profile)


# -- topology -------------------------------------------------------------------


def test_default_topology_shape():
    topology = default_topology(seed=7)
    assert len(topology.nodes_with_role("provider")) == 4
    assert topology.federator.role == "federator"
    assert topology.consumer.participant_id.value == "did:dali:acme:consumer"
    assert all(n.profile is not None for n in topology.nodes_with_role("provider"))
    assert topology.seed == 7
    assert topology.transport == "in-process"


def test_topology_needs_exactly_one_federator():
    base = (node("did:dali:a:lab", "provider", PROFILE), node("did:dali:b:app", "consumer"))
    with pytest.raises(TopologyInvalid):
        FederationTopology(nodes=base).validate()
    two = base + (node("did:dali:c:hub", "federator"), node("did:dali:d:hub", "federator"))
    with pytest.raises(TopologyInvalid):
        FederationTopology(nodes=two).validate()


def test_topology_needs_provider_and_consumer():
    hub = node("did:dali:c:hub", "federator")
    with pytest.raises(TopologyInvalid):
        FederationTopology(nodes=(hub, node("did:dali:a:lab", "provider", PROFILE))).validate()
    with pytest.raises(TopologyInvalid):
        FederationTopology(nodes=(hub, node("did:dali:b:app", "consumer"))).validate()


def test_topology_rejects_duplicate_ids():
    nodes = (
        node("did:dali:a:lab", "provider", PROFILE),
        node("did:dali:a:lab", "consumer"),
        node("did:dali:c:hub", "federator"),
    )
    with pytest.raises(TopologyInvalid):
        FederationTopology(nodes=nodes).validate()


def test_topology_rejects_unknown_transport():
    with pytest.raises(TopologyInvalid):
        FederationTopology(nodes=default_topology().nodes, transport="carrier-pigeon").validate()


def test_provider_requires_profile():
    with pytest.raises(TopologyInvalid):
        node("did:dali:a:lab", "provider")


def test_unknown_role_rejected():
    with pytest.raises(TopologyInvalid):
        node("did:dali:a:lab", "auditor")


def test_fault_spec_validation():
    with pytest.raises(TopologyInvalid):
        FaultSpec("melt-cpu")
    with pytest.raises(TopologyInvalid):
        FaultSpec("drop-message", probability=1.5)
    with pytest.raises(TopologyInvalid):
        FaultSpec("drop-message", trigger_index=-1)


def test_fault_target_matching():
    everywhere = FaultSpec("drop-message", target="*", probability=0.1)
    assert everywhere.matches("did:a", "did:b")
    link = FaultSpec("drop-message", target="did:a->did:b", probability=0.1)
    assert link.matches("did:a", "did:b")
    assert not link.matches("did:b", "did:a")
    endpoint = FaultSpec("drop-message", target="did:a", probability=0.1)
    assert endpoint.matches("did:a", "did:x")
    assert endpoint.matches("did:x", "did:a")
    assert not endpoint.matches("did:x", "did:y")


def test_topology_yaml_round_trip(tmp_path):
    topology = default_topology(
        seed=11,
        faults=(
            FaultSpec("drop-message", probability=0.2),
            FaultSpec("clock-jump", trigger_index=3),
        ),
    )
    path = tmp_path / "topology.yaml"
    path.write_text(yaml.safe_dump(topology.to_wire()))
    assert FederationTopology.from_yaml(str(path)) == topology


def test_from_yaml_rejects_non_mapping(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("- not\n- a\n- mapping\n")
    with pytest.raises(TopologyInvalid):
        FederationTopology.from_yaml(str(path))


# -- federation rig ---------------------------------------------------------------


def test_seed_assets_and_federation(tmp_path):
    federation = Federation(default_topology(), str(tmp_path))
    ids = federation.seed_assets()
    assert len(ids) == 10
    assert len(federation.transferable_assets()) == 9
    reports = federation.federate_all()
    assert len(reports) == 5
    hub_added = sum(r["added"] for r in reports if r["node"] == "dali-federator")
    assert hub_added == 10
    consumer_report = [r for r in reports if r["node"] == "acme-consumer"][0]
    assert consumer_report["added"] == 10
    # a second sync with nothing new is a no-op
    assert all(r["added"] == 0 and r["updated"] == 0 for r in federation.federate_all())


# -- scenario scripts -------------------------------------------------------------


def test_publish_discover_scenario(tmp_path):
    result = run_scenario(default_topology(seed=3), "publish-discover", base_dir=str(tmp_path))
    assert result.digests_match
    counts = {e["assetKind"]: e["totalCount"] for e in result.events if e["kind"] == "search"}
    assert counts == {
        "dataset": 4,
        "ml-model": 2,
        "ran-model": 1,
        "application": 2,
        "service": 1,
        None: 10,
    }


def test_negotiate_transfer_scenario(tmp_path):
    result = run_scenario(default_topology(seed=5), "negotiate-transfer", base_dir=str(tmp_path))
    assert result.digests_match
    assert result.audit_verdict.valid
    negotiations = [
        v for k, v in result.terminal_states.items() if k.startswith("negotiation/")
    ]
    assert len(negotiations) == 18  # both peers for each of the nine assets
    assert all(v == "FINALIZED" for v in negotiations)
    transfers = [v for k, v in result.terminal_states.items() if k.startswith("transfer/")]
    assert len(transfers) == 18
    assert all(v == "COMPLETED" for v in transfers)


def test_hot_ingest_scenario(tmp_path):
    result = run_scenario(default_topology(), "hot-ingest", base_dir=str(tmp_path))
    assert result.digests_match
    runs = {e["request"]: e["experimentsRun"] for e in result.events if e["kind"] == "ingest"}
    assert runs == {"cold-satisfiable": 0, "hot-required": 1, "hot-repeat": 0}


def test_audit_tamper_scenario(tmp_path):
    result = run_scenario(default_topology(seed=13), "audit-tamper", base_dir=str(tmp_path))
    assert result.digests_match
    tamper = [e for e in result.events if e["kind"] == "tamper"][0]
    assert tamper["detected"]
    assert tamper["restoredValid"]
    assert tamper["verdict"]["firstBadSeq"] <= tamper["mutatedLine"]
    assert result.audit_verdict.valid


def test_fuzz_protocol_scenario(tmp_path):
    result = run_scenario(
        default_topology(seed=2), "fuzz-protocol", base_dir=str(tmp_path), schedules=120
    )
    assert result.digests_match
    report = [e for e in result.events if e["kind"] == "fuzz"][0]
    assert report["schedules"] == 120
    assert report["illegalTransitions"] == 0
    assert report["inconsistentPairs"] == 0
    assert report["maxReliableRounds"] <= 6


def test_unknown_script_rejected():
    with pytest.raises(ScriptUnknown):
        run_scenario(default_topology(), "world-domination")


def test_run_scenario_validates_topology():
    crippled = FederationTopology(nodes=(node("did:dali:b:app", "consumer"),))
    with pytest.raises(TopologyInvalid):
        run_scenario(crippled, "publish-discover")


# -- determinism and replay -------------------------------------------------------


def test_same_seed_yields_byte_equal_logs(tmp_path):
    first = tmp_path / "first.jsonl"
    second = tmp_path / "second.jsonl"
    run_scenario(
        default_topology(seed=7), "negotiate-transfer",
        base_dir=str(tmp_path / "a"), event_log=str(first),
    )
    run_scenario(
        default_topology(seed=7), "negotiate-transfer",
        base_dir=str(tmp_path / "b"), event_log=str(second),
    )
    assert first.read_bytes() == second.read_bytes()


def test_replay_round_trip(tmp_path):
    log = tmp_path / "run.jsonl"
    original = run_scenario(
        default_topology(seed=4), "publish-discover",
        base_dir=str(tmp_path / "run"), event_log=str(log),
    )
    replayed = replay(str(log), base_dir=str(tmp_path / "replayed"))
    assert replayed.digests_match
    assert replayed.events == original.events


def test_replay_detects_truncation(tmp_path):
    log = tmp_path / "run.jsonl"
    run_scenario(
        default_topology(seed=4), "publish-discover",
        base_dir=str(tmp_path / "run"), event_log=str(log),
    )
    lines = log.read_text().splitlines()
    log.write_text("\n".join(lines[:3] + lines[4:]) + "\n")
    with pytest.raises(LogCorrupt):
        replay(str(log))


def test_replay_detects_bit_flip(tmp_path):
    log = tmp_path / "run.jsonl"
    run_scenario(
        default_topology(seed=4), "publish-discover",
        base_dir=str(tmp_path / "run"), event_log=str(log),
    )
    raw = bytearray(log.read_bytes())
    raw[len(raw) // 2] ^= 0x20
    log.write_bytes(bytes(raw))
    with pytest.raises(LogCorrupt):
        replay(str(log))


def test_replay_detects_divergent_events(tmp_path):
    log = tmp_path / "run.jsonl"
    run_scenario(
        default_topology(seed=4), "publish-discover",
        base_dir=str(tmp_path / "run"), event_log=str(log),
    )
    lines = log.read_text().splitlines()[:-1]  # drop the old checksum
    target = next(i for i, line in enumerate(lines) if '"kind":"search"' in line)
    event = json.loads(lines[target])
    event["totalCount"] += 1
    lines[target] = canonical_json(event)
    body = "".join(line + "\n" for line in lines)
    import hashlib

    footer = canonical_json({"kind": "checksum", "sha256": hashlib.sha256(body.encode()).hexdigest()})
    log.write_text(body + footer + "\n")
    with pytest.raises(LogCorrupt, match="diverged"):
        replay(str(log))


def test_replay_missing_file(tmp_path):
    with pytest.raises(LogCorrupt):
        replay(str(tmp_path / "no-such-run.jsonl"))


def test_replay_rejects_short_log(tmp_path):
    log = tmp_path / "stub.jsonl"
    log.write_text('{"kind":"header"}\n')
    with pytest.raises(LogCorrupt):
        replay(str(log))


def test_replay_rejects_garbage_header(tmp_path):
    log = tmp_path / "garbage.jsonl"
    log.write_text("not json\n" + '{"kind":"checksum","sha256":"00"}\n')
    with pytest.raises(LogCorrupt):
        replay(str(log))


# -- fault soundness --------------------------------------------------------------


def test_corrupt_chunk_always_surfaces_as_digest_mismatch(tmp_path):
    faults = (FaultSpec("corrupt-payload-byte", probability=1.0),)
    result = run_scenario(
        default_topology(seed=5, faults=faults), "negotiate-transfer",
        base_dir=str(tmp_path),
    )
    assert not result.digests_match
    transfers = {k: v for k, v in result.terminal_states.items() if k.startswith("transfer/")}
    assert transfers
    assert all(v == "TERMINATED:digest-mismatch" for v in transfers.values())
    negotiations = {
        k: v for k, v in result.terminal_states.items() if k.startswith("negotiation/")
    }
    assert all(v == "FINALIZED" for v in negotiations.values())
    assert result.audit_verdict.valid


def test_dropped_messages_stall_cleanly(tmp_path):
    faults = (FaultSpec("drop-message", probability=1.0),)
    result = run_scenario(
        default_topology(seed=5, faults=faults), "negotiate-transfer",
        base_dir=str(tmp_path),
    )
    assert not result.digests_match
    negotiations = {
        k: v for k, v in result.terminal_states.items() if k.startswith("negotiation/")
    }
    assert negotiations
    assert all(v == "REQUESTED" for v in negotiations.values())
    assert all(k.endswith("/consumer") for k in negotiations)
    assert not any(k.startswith("transfer/") for k in result.terminal_states)


def test_duplicate_delivery_leaves_single_audit_trail(tmp_path):
    faults = (FaultSpec("duplicate-message", trigger_index=1),)
    result = run_scenario(
        default_topology(seed=5, faults=faults), "negotiate-transfer",
        base_dir=str(tmp_path),
    )
    assert result.digests_match
    duplicated = [e for e in result.events if e["kind"] == "deliver" and e["duplicated"]]
    assert len(duplicated) == 1
    records = [
        json.loads(line)
        for line in (tmp_path / "clearing" / "audit.log").read_text().splitlines()
    ]
    agreements = [r for r in records if r["recordType"] == "AgreementRecorded"]
    assert len(agreements) == 9
    assert result.audit_verdict.valid


def test_clock_jump_advances_time_without_breaking_flow(tmp_path):
    faults = (FaultSpec("clock-jump", trigger_index=1),)
    result = run_scenario(
        default_topology(seed=5, faults=faults), "negotiate-transfer",
        base_dir=str(tmp_path),
    )
    jumps = [e for e in result.events if e["kind"] == "fault" and e["fault"] == "clock-jump"]
    assert len(jumps) == 1
    assert 60 <= jumps[0]["advance"] <= 1200
    assert result.digests_match


# -- protocol fuzzing -------------------------------------------------------------


def test_fuzz_report_is_clean_and_accounts_for_every_schedule():
    report = run_fuzz(200, seed=5)
    assert report.clean
    assert report.finalized + report.terminated + report.stalled == 200
    assert report.reliable_schedules > 0
    assert 0 < report.max_reliable_rounds <= 6
    assert report.samples == []


def test_fuzz_runs_are_deterministic():
    assert run_fuzz(60, seed=9).to_wire() == run_fuzz(60, seed=9).to_wire()
