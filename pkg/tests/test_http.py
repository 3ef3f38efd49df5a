"""HTTP binding tests: endpoint coverage, error mapping, transport transparency."""

import hashlib
import json

import pytest

from dali.assets import Offer, SelfDescription, Temperature
from dali.clearinghouse import RecordType
from dali.datalake import default_research_offer
from dali.errors import (
    ObjectNotFound,
    PeerUnreachable,
    TokenInvalid,
    TopologyInvalid,
    TransportFailure,
    UnknownAgreement,
    UnknownScheme,
    WrongState,
)
from dali.harness import (
    EventRecorder,
    HttpDriver,
    HttpFederation,
    default_topology,
    run_scenario,
)
from dali.model import AssetKind, digest_of, parse_participant_id


@pytest.fixture(scope="module")
def rig(tmp_path_factory):
    federation = HttpFederation(default_topology(seed=21), str(tmp_path_factory.mktemp("http")))
    federation.federation.seed_assets()
    yield federation
    federation.close()


def _url(rig, short_suffix):
    for value, url in rig.endpoints.items():
        if value.endswith(short_suffix):
            return url
    raise AssertionError(f"no node matching {short_suffix}")


def test_catalogue_search_and_export(rig):
    eur = _url(rig, "eur:testbed")
    data = rig.client.json("GET", eur + "/catalogue/assets?kind=dataset")
    assert data["totalCount"] == 1
    assert data["entries"][0]["selfDescription"]["assetId"] == "d-eur-mmwave-traces"
    export = rig.client.json("GET", eur + "/catalogue/export")
    assert {e["selfDescription"]["assetId"] for e in export["entries"]} == {
        "d-eur-mmwave-traces",
        "m-eur-beam-predictor",
        "a-eur-coverage-viz",
    }


def test_catalogue_register_over_http(rig):
    eur = _url(rig, "eur:testbed")
    description = SelfDescription(
        asset_id="d-eur-extra",
        provider_id=parse_participant_id("did:dali:eur:testbed"),
        kind=AssetKind.DATASET,
        title="extra eur traces",
        temperature=Temperature.COLD,
        content_digest=digest_of(b"rows\n"),
        metadata={
            "frequency-band": "mmWave",
            "testbed-origin": "eur",
            "sample-count": "1",
        },
        offers=(default_research_offer(),),
    )
    entry = rig.client.json("POST", eur + "/catalogue/assets", body=description.to_wire())
    assert entry["validationReport"] == []
    found = rig.client.json("GET", eur + "/catalogue/assets?text=extra")
    assert found["totalCount"] == 1


def test_federate_endpoint_and_unreachable_peer(rig):
    hub = rig.hub_url
    report = rig.client.json(
        "POST", hub + "/catalogue/federate", body={"peerEndpoint": _url(rig, "eur:testbed")}
    )
    assert set(report) == {"added", "updated", "removed"}
    with pytest.raises(PeerUnreachable):
        rig.client.json(
            "POST",
            hub + "/catalogue/federate",
            body={"peerEndpoint": "http://127.0.0.1:9/nowhere"},
        )


def test_admin_negotiate_and_transfer_flow(rig):
    consumer = _url(rig, "acme:consumer")
    negotiation = rig.client.json(
        "POST",
        consumer + "/admin/negotiations",
        body={
            "providerId": "did:dali:eur:testbed",
            "assetId": "d-eur-mmwave-traces",
            "offerId": "default-research",
        },
    )
    assert negotiation["state"] == "FINALIZED"
    assert negotiation["pendingDecision"] is False
    assert negotiation["agreementId"] == "ag-" + negotiation["negotiationId"]

    provider_view = rig.client.json(
        "GET",
        _url(rig, "eur:testbed") + "/admin/negotiations/" + negotiation["negotiationId"],
    )
    assert provider_view["state"] == "FINALIZED"
    assert provider_view["role"] == "provider"

    agreement = rig.client.json(
        "GET", consumer + "/admin/agreements/" + negotiation["agreementId"]
    )
    assert set(agreement["signatures"]) == {"provider", "consumer"}

    transfer = rig.client.json(
        "POST",
        consumer + "/admin/transfers",
        body={"agreementId": negotiation["agreementId"], "purpose": "research"},
    )
    assert transfer["state"] == "COMPLETED"
    assert transfer["bytesMoved"] > 0
    assert transfer["payloadDigest"]["hex"]

    listing = rig.client.json("GET", consumer + "/admin/transfers")
    assert any(t["transferId"] == transfer["transferId"] for t in listing["transfers"])

    records = rig.client.json(
        "GET",
        rig.hub_url
        + "/clearing/records?type=TransferEvent&subject="
        + transfer["transferId"],
    )
    outcomes = [r["payload"]["outcome"] for r in records["records"]]
    assert outcomes == ["started", "completed"]

    usage = rig.client.json(
        "GET", rig.hub_url + "/clearing/usage/" + negotiation["agreementId"]
    )
    assert usage["completedTransfers"] == 1

    verdict = rig.client.json("GET", rig.hub_url + "/clearing/verify")
    assert verdict["valid"] is True


def test_decision_endpoint_rejects_wrong_state(rig):
    consumer = _url(rig, "acme:consumer")
    listing = rig.client.json("GET", consumer + "/admin/negotiations")
    finalized = [n for n in listing["negotiations"] if n["state"] == "FINALIZED"][0]
    with pytest.raises(WrongState):
        rig.client.json(
            "POST",
            consumer + "/admin/negotiations/" + finalized["negotiationId"] + "/decision",
            body={"decision": "accept"},
        )


def test_counter_offer_decision_walkthrough(rig):
    consumer = _url(rig, "acme:consumer")
    provider = _url(rig, "isi:testbed")
    assert rig.client.json("GET", provider + "/admin/decision-mode") == {"mode": "auto"}
    rig.client.json("POST", provider + "/admin/decision-mode", body={"mode": "counter"})
    try:
        offered = rig.client.json(
            "POST",
            consumer + "/admin/negotiations",
            body={
                "providerId": "did:dali:isi:testbed",
                "assetId": "d-isi-mobility-traces",
                "offerId": "default-research",
            },
        )
        assert offered["state"] == "OFFERED"
        assert offered["pendingDecision"] is True
        assert offered["counterOffer"] is not None
        capped = [
            c
            for rule in offered["counterOffer"]["permissions"]
            for c in rule["constraints"]
            if c["left"] == "useCount"
        ]
        assert capped == [{"left": "useCount", "op": "lt", "right": 5}]

        accepted = rig.client.json(
            "POST",
            consumer + "/admin/negotiations/" + offered["negotiationId"] + "/decision",
            body={"decision": "accept"},
        )
        assert accepted["state"] == "FINALIZED"
        assert accepted["pendingDecision"] is False
        assert accepted["agreementId"] == "ag-" + offered["negotiationId"]
    finally:
        rig.client.json("POST", provider + "/admin/decision-mode", body={"mode": "auto"})


def test_clearing_reads_forward_from_connector_nodes(rig):
    consumer = _url(rig, "acme:consumer")
    verdict = rig.client.json("GET", consumer + "/clearing/verify")
    assert verdict == {"valid": True}

    listing = rig.client.json("GET", consumer + "/admin/negotiations")
    finalized = [n for n in listing["negotiations"] if n["state"] == "FINALIZED"][0]
    records = rig.client.json(
        "GET", consumer + "/clearing/records?subject=" + finalized["negotiationId"]
    )
    assert records["records"]
    seqs = [r["seq"] for r in records["records"]]
    assert seqs == sorted(seqs)
    via_hub = rig.client.json(
        "GET", rig.hub_url + "/clearing/records?subject=" + finalized["negotiationId"]
    )
    assert records == via_hub

    with pytest.raises(ObjectNotFound):
        rig.client.json(
            "POST",
            consumer + "/clearing/records",
            body={
                "recordType": "NegotiationEvent",
                "actor": "did:dali:acme:consumer",
                "subjectId": "neg-forged-1",
                "payload": {},
            },
        )


def test_transfer_for_unknown_agreement_maps_to_404(rig):
    consumer = _url(rig, "acme:consumer")
    with pytest.raises(UnknownAgreement):
        rig.client.json(
            "POST",
            consumer + "/admin/transfers",
            body={"agreementId": "ag-neg-nobody-999", "purpose": "research"},
        )


def test_payload_endpoint_requires_token(rig):
    eur = _url(rig, "eur:testbed")
    with pytest.raises(TokenInvalid):
        rig.client.get_bytes(eur + "/dsp/transfers/tr-x-1/payload?offset=0")
    with pytest.raises(TokenInvalid):
        rig.client.get_bytes(
            eur + "/dsp/transfers/tr-x-1/payload?offset=0",
            headers={"x-dali-transfer-token": "!!not-base64!!"},
        )


def test_vocabulary_endpoints(rig):
    hub = rig.hub_url
    scheme = rig.client.json("GET", hub + "/vocabulary/schemes/bands")
    assert any(c["conceptId"] == "mmWave" for c in scheme["concepts"])
    with pytest.raises(UnknownScheme):
        rig.client.json("GET", hub + "/vocabulary/schemes/no-such-scheme")
    scheme["schemeId"] = "bands-v2"
    stored = rig.client.json("PUT", hub + "/vocabulary/schemes/bands-v2", body=scheme)
    assert stored["schemeId"] == "bands-v2"
    verdict = rig.client.json(
        "POST",
        hub + "/vocabulary/validate",
        body={"kind": "dataset", "metadata": {"frequency-band": "x-ray"}},
    )
    assert any(v["code"] == "unknown-concept" for v in verdict["violations"])


def test_lake_endpoints(rig):
    eur = _url(rig, "eur:testbed")
    manifest = rig.client.json("GET", eur + "/lake/manifests/d-eur-mmwave-traces")
    assert manifest["assetId"] == "d-eur-mmwave-traces"
    with pytest.raises(ObjectNotFound):
        rig.client.json("GET", eur + "/lake/manifests/d-missing")

    payload = b"col\n1\n2\n"
    digest = hashlib.sha256(payload).hexdigest()
    stored = rig.client.json(
        "PUT", eur + f"/lake/objects/{digest}?backend=data-lake", body=payload
    )
    assert stored["sizeBytes"] == len(payload)
    assert rig.client.get_bytes(eur + f"/lake/objects/{digest}") == payload
    with pytest.raises(ObjectNotFound):
        rig.client.get_bytes(eur + "/lake/objects/" + "0" * 64)


def test_unknown_route_and_bad_arguments(rig):
    eur = _url(rig, "eur:testbed")
    with pytest.raises(ObjectNotFound):
        rig.client.json("GET", eur + "/no/such/route")
    with pytest.raises(TransportFailure) as exc_info:
        rig.client.json("GET", eur + "/catalogue/assets?kind=hologram")
    assert "400" in str(exc_info.value)


def test_http_driver_rejects_fault_topologies(tmp_path):
    from dali.harness import FaultSpec

    topology = default_topology(
        seed=1, transport="http", faults=(FaultSpec("drop-message", probability=0.5),)
    )
    with pytest.raises(TopologyInvalid):
        HttpDriver(topology, str(tmp_path), EventRecorder())


def test_transport_transparency_on_fault_free_topology(tmp_path):
    inproc = run_scenario(
        default_topology(seed=42), "negotiate-transfer", base_dir=str(tmp_path / "inproc")
    )
    http = run_scenario(
        default_topology(seed=42, transport="http"),
        "negotiate-transfer",
        base_dir=str(tmp_path / "http"),
    )
    assert inproc.terminal_states == http.terminal_states
    assert inproc.digests_match and http.digests_match
    assert http.audit_verdict.valid


@pytest.mark.parametrize("script", ["publish-discover", "hot-ingest", "audit-tamper"])
def test_scenarios_pass_over_http(tmp_path, script):
    result = run_scenario(
        default_topology(seed=42, transport="http"), script, base_dir=str(tmp_path)
    )
    assert result.digests_match
    assert result.audit_verdict.valid
