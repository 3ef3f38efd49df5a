"""HTTP bindings for the node services plus the HTTP scenario driver.

Every topology node gets one threaded loopback HTTP server in this process.
Connectors exchange MessageEnvelope JSON over POST /dsp/...; the response
carries the receiver's outbound envelopes so the caller keeps pumping, which
replaces the in-process queue with synchronous request/response. The data
plane is pulled chunk-by-chunk from GET /dsp/transfers/{id}/payload under an
x-dali-transfer-token header. The federator node additionally serves the
clearing house, the vocabulary hub, and ELT ingestion; provider nodes serve
their object and manifest stores.
"""

from __future__ import annotations

import base64
import json
import os
import threading
import urllib.error
import urllib.parse
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .. import errors
from ..canonical import canonical_json
from ..catalogue import CatalogueEntry, Query
from ..clearinghouse import ChainVerdict, RecordType
from ..connector import DecisionMode, MessageEnvelope, NegotiationPhase
from ..datalake import BackendKind, DataRequest
from ..errors import (
    DaliError,
    ObjectNotFound,
    PeerUnreachable,
    TokenInvalid,
    TopologyInvalid,
    TransportFailure,
)
from ..model import AssetKind, parse_participant_id
from ..vocabulary import ConceptScheme, MetadataSchema
from .federation import Federation
from .topology import FederationTopology

_STATUS_BY_CODE = {
    "token-invalid": 403,
    "scope-denied": 403,
    "subject-mismatch": 403,
    "actor-mismatch": 403,
    "bad-signature": 403,
    "no-valid-credential": 403,
    "unknown-agreement": 404,
    "unknown-provider": 404,
    "object-not-found": 404,
    "unknown-scheme": 404,
    "unknown-concept": 404,
    "unknown-kind": 404,
    "wrong-state": 409,
    "illegal-transition": 409,
    "peer-unreachable": 502,
    "transport-failure": 502,
}

_ERRORS_BY_CODE = {
    cls.code: cls
    for cls in vars(errors).values()
    if isinstance(cls, type) and issubclass(cls, DaliError) and cls is not DaliError
}


def _status_for(error: DaliError) -> int:
    return _STATUS_BY_CODE.get(error.code, 400)


def encode_token_header(token_wire: dict) -> str:
    raw = canonical_json(token_wire).encode("utf-8")
    return base64.urlsafe_b64encode(raw).decode("ascii").rstrip("=")


def decode_token_header(value: str) -> dict:
    padded = value + "=" * (-len(value) % 4)
    try:
        return json.loads(base64.urlsafe_b64decode(padded))
    except (ValueError, TypeError) as exc:
        raise TokenInvalid(f"undecodable transfer token header: {exc}") from exc


class HttpClient:
    """Thin JSON/bytes client that maps error bodies back to domain errors."""

    def __init__(self, timeout: float = 30.0):
        self.timeout = timeout

    def request(self, method: str, url: str, body=None, headers=None) -> bytes:
        data = None
        send_headers = dict(headers or ())
        if body is not None:
            if isinstance(body, bytes):
                data = body
                send_headers.setdefault("content-type", "application/octet-stream")
            else:
                data = canonical_json(body).encode("utf-8")
                send_headers.setdefault("content-type", "application/json")
        req = urllib.request.Request(url, data=data, method=method, headers=send_headers)
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.read()
        except urllib.error.HTTPError as exc:
            raw = exc.read()
            try:
                payload = json.loads(raw)
            except ValueError:
                payload = {}
            code = payload.get("error")
            if code in _ERRORS_BY_CODE:
                raise _ERRORS_BY_CODE[code](payload.get("detail", "")) from exc
            raise TransportFailure(f"{method} {url} -> {exc.code}") from exc
        except (urllib.error.URLError, OSError, ConnectionError) as exc:
            raise TransportFailure(f"{method} {url}: {exc}") from exc

    def json(self, method: str, url: str, body=None, headers=None):
        raw = self.request(method, url, body, headers)
        return json.loads(raw) if raw else None

    def get_bytes(self, url: str, headers=None) -> bytes:
        return self.request("GET", url, headers=headers)


class HttpPeer:
    """Catalogue peer adapter that pulls entries from a remote export endpoint."""

    def __init__(self, endpoint: str, client: HttpClient):
        self.endpoint = endpoint
        self._client = client

    def list_entries(self) -> list:
        try:
            data = self._client.json("GET", f"{self.endpoint}/catalogue/export")
        except DaliError as exc:
            raise PeerUnreachable(f"{self.endpoint}: {exc}") from exc
        return [CatalogueEntry.from_wire(e) for e in data["entries"]]


class HttpClearing:
    """Clearing client with the connector's two-method contract."""

    def __init__(self, base_url: str, client: HttpClient):
        self._base = base_url
        self._client = client

    def append(self, record_type, actor, subject_id, payload) -> None:
        self._client.json(
            "POST",
            f"{self._base}/clearing/records",
            body={
                "recordType": record_type.value,
                "actor": actor.value,
                "subjectId": subject_id,
                "payload": payload,
            },
        )

    def count_completed(self, agreement_id: str) -> int:
        data = self._client.json(
            "GET", f"{self._base}/clearing/usage/{urllib.parse.quote(agreement_id)}"
        )
        return data["completedTransfers"]


class NodeApi:
    """Request handling for one node; shared by its HTTP server threads."""

    def __init__(self, node, federation: Federation, endpoints: dict, client: HttpClient):
        self.node = node
        self.federation = federation
        self.endpoints = endpoints
        self.client = client
        self.is_hub = node is federation.federator

    # -- outbound control plane -----------------------------------------------

    def pump(self, outbound) -> None:
        queue = list(outbound)
        while queue:
            message = queue.pop(0)
            envelope = message.envelope
            base = self.endpoints[message.recipient.value]
            if envelope.message_type == "contract-request":
                path = "/dsp/negotiations"
            elif envelope.message_type.startswith("contract-"):
                correlation = urllib.parse.quote(envelope.correlation_id)
                path = f"/dsp/negotiations/{correlation}/events"
            else:
                path = "/dsp/transfers"
            reply = self.client.json("POST", base + path, body=envelope.to_wire())
            for wire in reply.get("envelopes", ()):
                queue.extend(self.node.connector.handle(MessageEnvelope.from_wire(wire)))

    # -- dispatch ---------------------------------------------------------------

    def handle_request(self, method: str, path: str, query: dict, headers, raw: bytes):
        parts = [urllib.parse.unquote(p) for p in path.split("/") if p]
        body = json.loads(raw) if raw and not self._is_binary(parts) else None
        route = (method, *parts[:2])
        if parts[:1] == ["dsp"]:
            return self._route_dsp(method, parts, query, headers, body)
        if parts[:1] == ["catalogue"]:
            return self._route_catalogue(method, parts, query, body)
        if parts[:1] == ["admin"]:
            return self._route_admin(method, parts, body)
        if parts[:1] == ["clearing"]:
            return self._route_clearing(method, parts, query, body)
        if parts[:1] == ["vocabulary"] and self.is_hub:
            return self._route_vocabulary(method, parts, body)
        if parts[:1] == ["lake"]:
            return self._route_lake(method, parts, query, raw, body)
        raise ObjectNotFound(f"no route for {method} {path}")

    @staticmethod
    def _is_binary(parts: list) -> bool:
        return len(parts) == 3 and parts[:2] == ["lake", "objects"]

    # -- dataspace protocol -----------------------------------------------------

    def _route_dsp(self, method, parts, query, headers, body):
        if method == "POST" and parts == ["dsp", "negotiations"]:
            return self._handle_envelope(body)
        if method == "POST" and len(parts) == 4 and parts[3] == "events":
            if body.get("correlationId") != parts[2]:
                raise ValueError("correlationId does not match the negotiation path")
            return self._handle_envelope(body)
        if method == "POST" and parts == ["dsp", "transfers"]:
            return self._handle_envelope(body)
        if method == "GET" and len(parts) == 4 and parts[3] == "payload":
            return self._serve_chunk(parts[2], query, headers)
        raise ObjectNotFound(f"no dsp route {method} /{'/'.join(parts)}")

    def _handle_envelope(self, body):
        envelope = MessageEnvelope.from_wire(body)
        outbound = self.node.connector.handle(envelope)
        return {"envelopes": [m.envelope.to_wire() for m in outbound]}

    def _serve_chunk(self, transfer_id, query, headers):
        header = headers.get("x-dali-transfer-token")
        if not header:
            raise TokenInvalid("missing x-dali-transfer-token header")
        token_wire = decode_token_header(header)
        offset = int(query.get("offset", ["0"])[0])
        chunk = self.node.connector.serve_chunk(transfer_id, token_wire, offset)
        return ("application/octet-stream", chunk)

    # -- catalogue ----------------------------------------------------------------

    def _route_catalogue(self, method, parts, query, body):
        catalogue = self.node.catalogue
        if method == "POST" and parts == ["catalogue", "assets"]:
            from ..assets import SelfDescription

            entry = catalogue.register(SelfDescription.from_wire(body))
            return entry.to_wire()
        if method == "GET" and parts == ["catalogue", "assets"]:
            return catalogue.search(self._parse_query(query)).to_wire()
        if method == "GET" and parts == ["catalogue", "export"]:
            return {"entries": [e.to_wire() for e in catalogue.export_entries()]}
        if method == "POST" and parts == ["catalogue", "federate"]:
            peer = HttpPeer(body["peerEndpoint"], self.client)
            return catalogue.federate_from(peer)
        raise ObjectNotFound(f"no catalogue route {method} /{'/'.join(parts)}")

    @staticmethod
    def _parse_query(query: dict) -> Query:
        def first(name, default=None):
            values = query.get(name)
            return values[0] if values else default

        return Query(
            kind=AssetKind(first("kind")) if first("kind") else None,
            provider=parse_participant_id(first("provider")) if first("provider") else None,
            text=first("text"),
            limit=int(first("limit", "100")),
            offset=int(first("offset", "0")),
        )

    # -- operator surface -----------------------------------------------------------

    def _negotiation_wire(self, record) -> dict:
        connector = self.node.connector
        pending = (
            record.role == "consumer" and record.state is NegotiationPhase.OFFERED
        ) or record.negotiation_id in connector.pending_decisions
        return {**record.to_wire(), "role": record.role, "pendingDecision": pending}

    def _transfer_wire(self, record) -> dict:
        return {**record.to_wire(), "role": record.role, "purpose": record.purpose}

    def _route_admin(self, method, parts, body):
        connector = self.node.connector
        if parts == ["admin", "decision-mode"]:
            if method == "POST":
                connector.decision_mode = DecisionMode(body["mode"])
            return {"mode": connector.decision_mode.value}
        if parts == ["admin", "negotiations"]:
            if method == "POST":
                record, outbound = connector.start_negotiation(
                    parse_participant_id(body["providerId"]),
                    body["assetId"],
                    body["offerId"],
                )
                self.pump(outbound)
                return self._negotiation_wire(record)
            if method == "GET":
                return {
                    "negotiations": [
                        self._negotiation_wire(r) for r in connector.negotiations.values()
                    ]
                }
        if len(parts) == 3 and parts[:2] == ["admin", "negotiations"] and method == "GET":
            record = connector.negotiations.get(parts[2])
            if record is None:
                raise ObjectNotFound(f"negotiation {parts[2]}")
            return self._negotiation_wire(record)
        if len(parts) == 4 and parts[3] == "decision" and method == "POST":
            decision = body.get("decision")
            if decision not in ("accept", "reject"):
                raise ValueError("decision must be accept or reject")
            accept = decision == "accept"
            if parts[2] in connector.pending_decisions:
                record, outbound = connector.decide(parts[2], accept)
            else:
                record, outbound = connector.respond_to_offer(parts[2], accept)
            self.pump(outbound)
            return self._negotiation_wire(record)
        if parts == ["admin", "transfers"]:
            if method == "POST":
                record, outbound = connector.request_transfer(
                    body["agreementId"], body.get("purpose", "")
                )
                self.pump(outbound)
                return self._transfer_wire(record)
            if method == "GET":
                return {
                    "transfers": [
                        self._transfer_wire(r) for r in connector.transfers.values()
                    ]
                }
        if len(parts) == 3 and parts[:2] == ["admin", "transfers"] and method == "GET":
            record = connector.transfers.get(parts[2])
            if record is None:
                raise ObjectNotFound(f"transfer {parts[2]}")
            return self._transfer_wire(record)
        if parts == ["admin", "agreements"] and method == "GET":
            return {"agreements": [a.to_wire() for a in connector.agreements.values()]}
        if len(parts) == 3 and parts[:2] == ["admin", "agreements"] and method == "GET":
            agreement = connector.agreements.get(parts[2])
            if agreement is None:
                raise ObjectNotFound(f"agreement {parts[2]}")
            return agreement.to_wire()
        raise ObjectNotFound(f"no admin route {method} /{'/'.join(parts)}")

    # -- clearing house (hub only) -----------------------------------------------

    def _route_clearing(self, method, parts, query, body):
        if not self.is_hub:
            # Connector nodes expose the audit view read-through: GETs are
            # forwarded to the hub so one operator endpoint serves the console.
            if method != "GET":
                raise ObjectNotFound(f"no clearing route {method} /{'/'.join(parts)}")
            hub = self.endpoints[self.federation.federator.participant_id.value]
            path = "/" + "/".join(urllib.parse.quote(p) for p in parts)
            suffix = "?" + urllib.parse.urlencode(query, doseq=True) if query else ""
            return self.client.json("GET", hub + path + suffix)
        house = self.federation.house
        if method == "POST" and parts == ["clearing", "records"]:
            record = house.append(
                RecordType(body["recordType"]),
                parse_participant_id(body["actor"]),
                body["subjectId"],
                body["payload"],
            )
            return record.to_wire()
        if method == "GET" and parts == ["clearing", "records"]:
            def first(name):
                values = query.get(name)
                return values[0] if values else None

            seq_range = None
            if first("from") is not None or first("to") is not None:
                upper = first("to")
                seq_range = (
                    int(first("from") or 0),
                    int(upper) if upper is not None else max(len(house) - 1, 0),
                )
            records = house.query(
                record_type=RecordType(first("type")) if first("type") else None,
                actor=parse_participant_id(first("actor")) if first("actor") else None,
                subject_id=first("subject"),
                seq_range=seq_range,
            )
            return {"records": [r.to_wire() for r in records]}
        if method == "GET" and parts == ["clearing", "verify"]:
            return house.verify_chain().to_wire()
        if method == "GET" and len(parts) == 3 and parts[1] == "usage":
            return {
                "agreementId": parts[2],
                "completedTransfers": house.count_completed_transfers(parts[2]),
            }
        raise ObjectNotFound(f"no clearing route {method} /{'/'.join(parts)}")

    # -- vocabulary (hub only) -----------------------------------------------------

    def _route_vocabulary(self, method, parts, body):
        vocab = self.federation.vocab
        if len(parts) == 3 and parts[1] == "schemes":
            if method == "PUT":
                scheme = ConceptScheme.from_wire(body)
                if scheme.scheme_id != parts[2]:
                    raise ValueError("schemeId does not match the path")
                vocab.register_scheme(scheme)
                return scheme.to_wire()
            if method == "GET":
                return vocab.scheme(parts[2]).to_wire()
        if len(parts) == 3 and parts[1] == "schemas" and method == "PUT":
            schema = MetadataSchema.from_wire(body)
            if schema.kind.value != parts[2]:
                raise ValueError("schema kind does not match the path")
            vocab.register_schema(schema)
            return schema.to_wire()
        if parts == ["vocabulary", "validate"] and method == "POST":
            violations = vocab.validate_kind(AssetKind(body["kind"]), body["metadata"])
            return {"violations": [v.to_wire() for v in violations]}
        raise ObjectNotFound(f"no vocabulary route {method} /{'/'.join(parts)}")

    # -- data lake -------------------------------------------------------------------

    def _route_lake(self, method, parts, query, raw, body):
        if parts == ["lake", "ingest"] and method == "POST" and self.is_hub:
            service = self.federation.ingestion
            before = service.experiments_run
            manifest = service.ingest(DataRequest.from_wire(body["request"]), body["seed"])
            return {
                "manifest": manifest.to_wire(),
                "experimentsRun": service.experiments_run - before,
            }
        store = self.node.store
        manifests = self.node.manifests
        if store is None or manifests is None:
            raise ObjectNotFound("this node has no data lake")
        if len(parts) == 3 and parts[1] == "objects":
            backend_values = query.get("backend")
            backend = BackendKind(backend_values[0]) if backend_values else None
            if method == "PUT":
                stored = store.put_object(raw, backend or BackendKind.DATA_LAKE)
                if stored.digest.hex != parts[2]:
                    raise ValueError(
                        f"body digest {stored.digest.hex} does not match the path"
                    )
                return stored.to_wire()
            if method == "GET":
                from ..model import Digest

                data = store.get_object(Digest(hex=parts[2]), backend)
                return ("application/octet-stream", data)
        if len(parts) == 3 and parts[1] == "manifests" and method == "GET":
            manifest = manifests.load(parts[2])
            if manifest is None:
                raise ObjectNotFound(f"manifest {parts[2]}")
            return manifest.to_wire()
        raise ObjectNotFound(f"no lake route {method} /{'/'.join(parts)}")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):  # quiet; the recorder is the run log
        pass

    def _dispatch(self, method: str) -> None:
        parsed = urllib.parse.urlsplit(self.path)
        query = urllib.parse.parse_qs(parsed.query)
        length = int(self.headers.get("content-length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            result = self.server.node_api.handle_request(
                method, parsed.path, query, self.headers, raw
            )
            if isinstance(result, tuple):
                content_type, payload = result
            else:
                content_type = "application/json"
                payload = canonical_json(result).encode("utf-8")
            status = 200
        except DaliError as exc:
            status, content_type = _status_for(exc), "application/json"
            payload = canonical_json({"error": exc.code, "detail": exc.detail}).encode()
        except (ValueError, KeyError, TypeError) as exc:
            status, content_type = 400, "application/json"
            payload = canonical_json({"error": "bad-request", "detail": str(exc)}).encode()
        self._reply(status, content_type, payload)

    def _reply(self, status: int, content_type: str, payload: bytes) -> None:
        self.send_response(status)
        self.send_header("content-type", content_type)
        self.send_header("content-length", str(len(payload)))
        self._cors()
        self.end_headers()
        self.wfile.write(payload)

    def _cors(self) -> None:
        self.send_header("access-control-allow-origin", "*")
        self.send_header(
            "access-control-allow-headers",
            "content-type, x-dali-transfer-token, authorization",
        )
        self.send_header("access-control-allow-methods", "GET, POST, PUT, OPTIONS")

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("content-length", "0")
        self.end_headers()


class HttpFederation:
    """The in-memory federation rig served over per-node loopback HTTP."""

    def __init__(self, topology: FederationTopology, base_dir: str, host: str = "127.0.0.1"):
        self.federation = Federation(topology, base_dir)
        self.client = HttpClient()
        self.endpoints: dict = {}
        self.servers: list = []
        self.threads: list = []
        for node in self.federation.nodes.values():
            server = ThreadingHTTPServer((host, 0), _Handler)
            server.daemon_threads = True
            server.node_api = NodeApi(node, self.federation, self.endpoints, self.client)
            self.endpoints[node.participant_id.value] = f"http://{host}:{server.server_port}"
            thread = threading.Thread(
                target=server.serve_forever, name=f"dali-{node.spec.short}", daemon=True
            )
            thread.start()
            self.servers.append(server)
            self.threads.append(thread)
        self.hub_url = self.endpoints[self.federation.federator.participant_id.value]
        for provider in self.federation.providers:
            provider.connector.clearing = HttpClearing(self.hub_url, self.client)
        self.federation.consumer.connector.chunk_fetcher = self._chunk_fetcher()

    def url_for(self, participant_value: str) -> str:
        return self.endpoints[participant_value]

    def _chunk_fetcher(self):
        def fetch(provider, transfer_id, token_wire, offset):
            base = self.endpoints[provider.value]
            path = f"/dsp/transfers/{urllib.parse.quote(transfer_id)}/payload?offset={offset}"
            return self.client.get_bytes(
                base + path,
                headers={"x-dali-transfer-token": encode_token_header(token_wire)},
            )

        return fetch

    def close(self) -> None:
        for server in self.servers:
            server.shutdown()
            server.server_close()
        for thread in self.threads:
            thread.join(timeout=5)


class HttpDriver:
    """Scenario driver with the in-process driver's contract, speaking only HTTP."""

    def __init__(self, topology: FederationTopology, base_dir: str, recorder):
        if topology.faults:
            raise TopologyInvalid("fault injection requires the in-process transport")
        self.rig = HttpFederation(topology, base_dir)
        self.recorder = recorder
        self.client = self.rig.client

    @property
    def _consumer_url(self) -> str:
        return self.rig.endpoints[self.rig.federation.consumer.participant_id.value]

    def seed_assets(self) -> list:
        ids = self.rig.federation.seed_assets()
        for asset_id in ids:
            self.recorder.record("publish", assetId=asset_id)
        return ids

    def federate_all(self) -> list:
        federation = self.rig.federation
        reports = []
        for provider in federation.providers:
            report = self.client.json(
                "POST",
                self.rig.hub_url + "/catalogue/federate",
                body={"peerEndpoint": self.rig.endpoints[provider.participant_id.value]},
            )
            reports.append(
                {"node": federation.federator.spec.short, "peer": provider.spec.short, **report}
            )
        report = self.client.json(
            "POST",
            self._consumer_url + "/catalogue/federate",
            body={"peerEndpoint": self.rig.hub_url},
        )
        reports.append(
            {
                "node": federation.consumer.spec.short,
                "peer": federation.federator.spec.short,
                **report,
            }
        )
        for entry in reports:
            self.recorder.record("federate", **entry)
        return reports

    def search(self, kind: str | None = None, text: str | None = None) -> int:
        params = {}
        if kind:
            params["kind"] = kind
        if text:
            params["text"] = text
        suffix = "?" + urllib.parse.urlencode(params) if params else ""
        data = self.client.json("GET", self._consumer_url + "/catalogue/assets" + suffix)
        return data["totalCount"]

    def transferable(self) -> list:
        return [
            (node.spec.short, node.participant_id.value, asset_id)
            for node, asset_id in self.rig.federation.transferable_assets()
        ]

    def negotiate(self, provider_value: str, asset_id: str, offer_id: str) -> dict:
        data = self.client.json(
            "POST",
            self._consumer_url + "/admin/negotiations",
            body={"providerId": provider_value, "assetId": asset_id, "offerId": offer_id},
        )
        return {
            "negotiationId": data["negotiationId"],
            "state": data["state"],
            "reason": data["terminationReason"],
            "agreementId": data["agreementId"],
        }

    def transfer(self, agreement_id: str, purpose: str) -> dict:
        data = self.client.json(
            "POST",
            self._consumer_url + "/admin/transfers",
            body={"agreementId": agreement_id, "purpose": purpose},
        )
        return {
            "transferId": data["transferId"],
            "state": data["state"],
            "reason": data["terminationReason"],
            "payloadDigest": data["payloadDigest"],
            "bytesMoved": data["bytesMoved"],
        }

    def provider_transfer_view(self, provider_value: str, transfer_id: str) -> dict:
        base = self.rig.endpoints[provider_value]
        data = self.client.json(
            "GET", base + "/admin/transfers/" + urllib.parse.quote(transfer_id)
        )
        return {"state": data["state"], "payloadDigest": data["payloadDigest"]}

    def advertised_digest(self, provider_value: str, asset_id: str) -> dict | None:
        base = self.rig.endpoints[provider_value]
        suffix = "?" + urllib.parse.urlencode({"provider": provider_value, "limit": 100})
        data = self.client.json("GET", base + "/catalogue/assets" + suffix)
        for entry in data["entries"]:
            description = entry["selfDescription"]
            if description["assetId"] == asset_id:
                return description.get("contentDigest")
        return None

    def ingest(self, capabilities, sample_count: int, seed: int) -> dict:
        return self.client.json(
            "POST",
            self.rig.hub_url + "/lake/ingest",
            body={"request": DataRequest(capabilities, sample_count).to_wire(), "seed": seed},
        )

    def snapshot_terminals(self) -> dict:
        states = {}
        for node in self.rig.federation.nodes.values():
            base = self.rig.endpoints[node.participant_id.value]
            listing = self.client.json("GET", base + "/admin/negotiations")
            for wire in listing["negotiations"]:
                states[f"negotiation/{wire['negotiationId']}/{wire['role']}"] = (
                    self._state_value(wire)
                )
            listing = self.client.json("GET", base + "/admin/transfers")
            for wire in listing["transfers"]:
                states[f"transfer/{wire['transferId']}/{wire['role']}"] = (
                    self._state_value(wire)
                )
        return states

    @staticmethod
    def _state_value(wire: dict) -> str:
        if wire["terminationReason"]:
            return f"{wire['state']}:{wire['terminationReason']}"
        return wire["state"]

    def audit_verify(self) -> ChainVerdict:
        data = self.client.json("GET", self.rig.hub_url + "/clearing/verify")
        return ChainVerdict(valid=data["valid"], first_bad_seq=data.get("firstBadSeq"))

    def audit_log_path(self) -> str:
        return os.path.join(self.rig.federation.base_dir, "clearing", "audit.log")

    def close(self) -> None:
        self.rig.close()
