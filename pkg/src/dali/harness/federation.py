"""Federation assembly: identities, services, connectors, and seeded assets.

Builds every node a topology describes: the federator hosting the clearing
house, vocabulary hub, hub catalogue, and ingestion service; providers with
object stores, manifests, and connectors; consumers with connectors and
federated catalogue copies. Ships a deterministic demo corpus of ten assets
spread across the four default testbeds.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field

from ..assets import Offer, SelfDescription, Temperature
from ..catalogue import Catalogue, DirectPeer
from ..clearinghouse import ClearingHouse
from ..clock import LogicalClock
from ..connector import Connector, DecisionMode, DirectClearing
from ..datalake import (
    DataRequest,
    DatasetManifest,
    IngestionService,
    ManifestStore,
    ObjectStore,
    TestbedAdapter,
    csv_schema_fields,
    default_research_offer,
    place_asset,
    run_experiment,
)
from ..errors import ObjectNotFound
from ..identity import TrustStore, generate_keypair, issue_credential
from ..model import AssetKind, ParticipantId, digest_of
from ..policy import Action, Constraint, LeftOperand, Operator, Rule, UsagePolicy
from ..vocabulary import VocabularyHub, install_builtins
from .topology import FederationTopology

ANCHOR_TTL = 30 * 24 * 3600
RESEARCH_PURPOSE = "research"


def capped_research_offer(limit: int) -> Offer:
    """Research offer whose transfer permission also caps the use count."""
    base = default_research_offer()
    permissions = []
    for rule in base.policy.permissions:
        if rule.action is Action.TRANSFER:
            rule = Rule(
                rule.action,
                rule.constraints + (Constraint(LeftOperand.USE_COUNT, Operator.LT, limit),),
            )
        permissions.append(rule)
    policy = UsagePolicy(tuple(permissions), base.policy.prohibitions)
    return Offer(offer_id=f"capped-{limit}", policy=policy, license_tag="research-only")


def _blob(name: str, size: int) -> bytes:
    return random.Random(f"payload/{name}").randbytes(size)


# (provider short, asset id, kind, title, metadata extras, payload spec)
# Dataset payloads come from the deterministic telemetry generator; other
# kinds get seeded opaque blobs. isi keeps >= 200 mobility rows so a desk-
# scale cold request can be satisfied without running an experiment.
ASSET_TABLE = (
    ("eur", "d-eur-mmwave-traces", AssetKind.DATASET, "eur mmWave drive traces", {}, ("rows", 9000)),
    ("eur", "m-eur-beam-predictor", AssetKind.ML_MODEL,
     "eur beam quality predictor",
     {"task": "beam-quality-regression", "input-schema": "timestamp,cell-id,beam-rsrp-dbm"},
     ("blob", 24_000)),
    ("eur", "a-eur-coverage-viz", AssetKind.APPLICATION, "eur coverage visualiser", {}, ("blob", 18_000)),
    ("isi", "d-isi-mobility-traces", AssetKind.DATASET, "isi urban mobility traces", {}, ("rows", 200)),
    ("isi", "r-isi-handover-model", AssetKind.RAN_MODEL,
     "isi handover decision model", {"ran-layer": "rrc"}, ("blob", 12_000)),
    ("isi", "s-isi-edge-compute", AssetKind.SERVICE, "isi edge compute slots", {}, None),
    ("kul", "d-kul-indoor-traces", AssetKind.DATASET, "kul indoor mmWave traces", {}, ("rows", 400)),
    ("kul", "m-kul-scheduler", AssetKind.ML_MODEL,
     "kul mac scheduler policy",
     {"task": "scheduling", "input-schema": "timestamp,cell-id,speed-mps"},
     ("blob", 30_000)),
    ("dt", "d-dt-macro-traces", AssetKind.DATASET, "dt urban macro traces", {}, ("rows", 300)),
    ("dt", "a-dt-kpi-dashboard", AssetKind.APPLICATION, "dt kpi dashboard", {}, ("blob", 15_000)),
)


@dataclass
class Node:
    spec: object
    keys: object
    credential: object
    catalogue: Catalogue
    connector: Connector
    store: ObjectStore | None = None
    manifests: ManifestStore | None = None
    adapter: TestbedAdapter | None = None
    payloads: dict = field(default_factory=dict)

    @property
    def participant_id(self) -> ParticipantId:
        return self.spec.participant_id


class Federation:
    """Everything a scenario needs, pre-wired from a topology."""

    def __init__(self, topology: FederationTopology, base_dir: str):
        topology.validate()
        self.topology = topology
        self.base_dir = base_dir
        self.clock = LogicalClock()
        self.trust = TrustStore()
        self.vocab = VocabularyHub()
        install_builtins(self.vocab)
        self.anchor_id = topology.federator.participant_id
        self.anchor_keys = generate_keypair()
        self.trust.register_anchor(self.anchor_id, self.anchor_keys.public_bytes)

        node_keys = {}
        for spec in topology.nodes:
            if spec.participant_id == self.anchor_id:
                node_keys[spec.participant_id.value] = self.anchor_keys
                continue
            keys = generate_keypair()
            node_keys[spec.participant_id.value] = keys
            self.trust.register_participant(spec.participant_id, keys.public_bytes)

        os.makedirs(os.path.join(base_dir, "clearing"), exist_ok=True)
        self.house = ClearingHouse(
            os.path.join(base_dir, "clearing", "audit.log"), self.clock
        )

        self.nodes: dict = {}
        for spec in topology.nodes:
            keys = node_keys[spec.participant_id.value]
            credential = issue_credential(
                self.anchor_id,
                self.anchor_keys,
                spec.participant_id,
                {"role": spec.role},
                ANCHOR_TTL,
                self.trust,
                self.clock.now(),
            )
            endpoint = f"https://{spec.short}.dali.example/catalogue"
            catalogue = Catalogue(self.vocab, self.clock, endpoint=endpoint)
            node = Node(
                spec=spec,
                keys=keys,
                credential=credential,
                catalogue=catalogue,
                connector=None,
            )
            if spec.role == "provider":
                root = os.path.join(base_dir, "nodes", spec.short)
                node.store = ObjectStore(root)
                node.manifests = ManifestStore(root)
                node.adapter = TestbedAdapter(
                    provider_id=spec.participant_id,
                    profile=spec.profile,
                    object_store=node.store,
                    manifest_store=node.manifests,
                    publish=catalogue.register,
                )
            node.connector = Connector(
                spec.participant_id,
                keys,
                self.trust,
                self.clock,
                catalogue=catalogue,
                clearing=DirectClearing(self.house) if spec.role == "provider" else None,
                decision_mode=DecisionMode.AUTO,
                payload_reader=self._payload_reader(node) if spec.role == "provider" else None,
                credential=credential,
            )
            self.nodes[spec.participant_id.value] = node

        self.providers = [
            self.nodes[s.participant_id.value] for s in topology.nodes_with_role("provider")
        ]
        self.consumer = self.nodes[topology.consumer.participant_id.value]
        self.federator = self.nodes[topology.federator.participant_id.value]
        self.ingestion = IngestionService(
            self.federator.catalogue,
            {p.spec.profile.testbed_id: p.adapter for p in self.providers},
            self.clock,
        )

    def _payload_reader(self, node: Node):
        def read(asset_id: str) -> bytes:
            entry = node.catalogue.get(node.spec.participant_id, asset_id)
            if entry is None or entry.self_description.content_digest is None:
                raise ObjectNotFound(asset_id)
            return node.store.get_object(entry.self_description.content_digest)

        return read

    def provider_by_short(self, short: str) -> Node:
        for node in self.providers:
            if node.spec.short.startswith(short):
                return node
        raise KeyError(short)

    # -- demo corpus ----------------------------------------------------------

    def seed_assets(self) -> list:
        """Publish the deterministic ten-asset demo corpus; returns asset ids."""
        published = []
        by_testbed = {p.spec.profile.testbed_id: p for p in self.providers}
        for short, asset_id, kind, title, extras, payload_spec in ASSET_TABLE:
            node = by_testbed.get(short)
            if node is None:
                continue
            payload, digest, metadata = None, None, dict(extras)
            if payload_spec is not None:
                payload = self._make_payload(node, asset_id, kind, payload_spec)
                digest = digest_of(payload)
                node.store.put_object(payload, place_asset(kind))
                node.payloads[asset_id] = payload
            if kind is AssetKind.DATASET:
                profile = node.spec.profile
                rows = payload_spec[1]
                metadata = {
                    "frequency-band": "mmWave" if "mmWave" in profile.capabilities else "sub-6",
                    "testbed-origin": profile.testbed_id,
                    "sample-count": str(rows),
                    "capabilities": ",".join(sorted(profile.capabilities)),
                }
                manifest = DatasetManifest(
                    asset_id=asset_id,
                    provider_id=node.spec.participant_id,
                    object_digest=digest,
                    row_count=rows,
                    schema_fields=tuple(csv_schema_fields(payload)),
                    temperature="cold",
                )
                node.manifests.save(manifest)
            offers = [default_research_offer()]
            if asset_id == "d-eur-mmwave-traces":
                offers.append(capped_research_offer(2))
            description = SelfDescription(
                asset_id=asset_id,
                provider_id=node.spec.participant_id,
                kind=kind,
                title=title,
                metadata=metadata,
                offers=tuple(offers),
                content_digest=digest,
                temperature=Temperature.COLD if payload is not None else Temperature.HOT_CAPABLE,
                created_at=self.clock.now(),
            )
            node.catalogue.register(description)
            self.clock.advance(1)
            published.append(asset_id)
        return published

    def _make_payload(self, node: Node, asset_id: str, kind: AssetKind, spec) -> bytes:
        mode, size = spec
        if mode == "rows":
            request = DataRequest(node.spec.profile.capabilities, size)
            seed = sum(ord(c) for c in asset_id)
            payload, _ = run_experiment(node.spec.profile, request, seed)
            return payload
        return _blob(asset_id, size)

    def transferable_assets(self) -> list:
        """(provider node, asset id) pairs that carry a payload, in seed order."""
        pairs = []
        by_testbed = {p.spec.profile.testbed_id: p for p in self.providers}
        for short, asset_id, _, _, _, payload_spec in ASSET_TABLE:
            node = by_testbed.get(short)
            if node is not None and payload_spec is not None:
                pairs.append((node, asset_id))
        return pairs

    # -- catalogue federation --------------------------------------------------

    def federate_all(self) -> list:
        """Hub-and-spoke sync: federator pulls every provider, consumer pulls hub."""
        reports = []
        for node in self.providers:
            report = self.federator.catalogue.federate_from(
                DirectPeer(node.catalogue)
            )
            reports.append({"node": self.federator.spec.short, "peer": node.spec.short, **report})
        report = self.consumer.catalogue.federate_from(DirectPeer(self.federator.catalogue))
        reports.append(
            {"node": self.consumer.spec.short, "peer": self.federator.spec.short, **report}
        )
        return reports
