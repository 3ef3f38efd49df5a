"""Federation topology descriptions and fault specifications.

A topology names the nodes (providers with testbed profiles, one consumer or
more, exactly one federator), the transport, the run seed, and any injected
faults. YAML files mirror the wire format one-to-one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from ..datalake import TestbedProfile
from ..errors import TopologyInvalid
from ..model import ParticipantId, parse_participant_id

ROLES = ("provider", "consumer", "federator")
FAULT_KINDS = (
    "drop-message",
    "duplicate-message",
    "corrupt-payload-byte",
    "clock-jump",
)


@dataclass(frozen=True)
class FaultSpec:
    kind: str
    target: str = "*"
    probability: float = 0.0
    trigger_index: int | None = None

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise TopologyInvalid(f"unknown fault kind {self.kind!r}")
        if not 0.0 <= self.probability <= 1.0:
            raise TopologyInvalid(f"fault probability {self.probability} outside [0, 1]")
        if self.trigger_index is not None and self.trigger_index < 0:
            raise TopologyInvalid("trigger index must be non-negative")

    def matches(self, sender: str, recipient: str) -> bool:
        if self.target == "*":
            return True
        if "->" in self.target:
            src, dst = self.target.split("->", 1)
            return src == sender and dst == recipient
        return self.target in (sender, recipient)

    def to_wire(self) -> dict:
        wire = {"kind": self.kind, "target": self.target, "probability": self.probability}
        if self.trigger_index is not None:
            wire["triggerIndex"] = self.trigger_index
        return wire

    @classmethod
    def from_wire(cls, data: dict) -> "FaultSpec":
        return cls(
            kind=data["kind"],
            target=data.get("target", "*"),
            probability=float(data.get("probability", 0.0)),
            trigger_index=data.get("triggerIndex"),
        )


@dataclass(frozen=True)
class NodeSpec:
    participant_id: ParticipantId
    role: str
    profile: TestbedProfile | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise TopologyInvalid(f"unknown role {self.role!r}")
        if self.role == "provider" and self.profile is None:
            raise TopologyInvalid(f"provider {self.participant_id.value} needs a profile")

    @property
    def short(self) -> str:
        return "-".join(self.participant_id.value.split(":")[2:])

    def to_wire(self) -> dict:
        wire = {"participantId": self.participant_id.value, "role": self.role}
        if self.profile is not None:
            wire["testbedProfile"] = self.profile.to_wire()
        return wire

    @classmethod
    def from_wire(cls, data: dict) -> "NodeSpec":
        profile = None
        if data.get("testbedProfile"):
            p = data["testbedProfile"]
            profile = TestbedProfile(p["testbedId"], p["capabilities"], p["costWeight"])
        return cls(
            participant_id=parse_participant_id(data["participantId"]),
            role=data["role"],
            profile=profile,
        )


@dataclass(frozen=True)
class FederationTopology:
    nodes: tuple
    transport: str = "in-process"
    seed: int = 42
    faults: tuple = field(default_factory=tuple)

    def validate(self) -> None:
        if self.transport not in ("in-process", "http"):
            raise TopologyInvalid(f"unknown transport {self.transport!r}")
        roles = [node.role for node in self.nodes]
        if roles.count("federator") != 1:
            raise TopologyInvalid("topology needs exactly one federator")
        if roles.count("provider") < 1 or roles.count("consumer") < 1:
            raise TopologyInvalid("topology needs at least one provider and one consumer")
        ids = [node.participant_id for node in self.nodes]
        if len(set(ids)) != len(ids):
            raise TopologyInvalid("duplicate participant ids")

    def nodes_with_role(self, role: str) -> list:
        return [node for node in self.nodes if node.role == role]

    @property
    def federator(self) -> NodeSpec:
        return self.nodes_with_role("federator")[0]

    @property
    def consumer(self) -> NodeSpec:
        return self.nodes_with_role("consumer")[0]

    def to_wire(self) -> dict:
        return {
            "nodes": [node.to_wire() for node in self.nodes],
            "transport": self.transport,
            "seed": self.seed,
            "faults": [fault.to_wire() for fault in self.faults],
        }

    @classmethod
    def from_wire(cls, data: dict) -> "FederationTopology":
        return cls(
            nodes=tuple(NodeSpec.from_wire(n) for n in data["nodes"]),
            transport=data.get("transport", "in-process"),
            seed=int(data.get("seed", 42)),
            faults=tuple(FaultSpec.from_wire(f) for f in data.get("faults", ())),
        )

    @classmethod
    def from_yaml(cls, path: str) -> "FederationTopology":
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise TopologyInvalid("topology file must hold a mapping")
        topology = cls.from_wire(data)
        topology.validate()
        return topology


DEFAULT_PROFILES = {
    "eur": ("eur", ("mmWave", "urban-macro"), "1.0"),
    "isi": ("isi", ("sub-6", "mobility"), "0.8"),
    "kul": ("kul", ("mmWave", "mobility"), "1.2"),
    "dt": ("dt", ("urban-macro", "indoor"), "1.0"),
}


def default_topology(
    seed: int = 42, transport: str = "in-process", faults=()
) -> FederationTopology:
    """Shipped 4-provider topology plus one consumer and the federator."""
    nodes = [
        NodeSpec(
            parse_participant_id(f"did:dali:{name}:testbed"),
            "provider",
            TestbedProfile(*args),
        )
        for name, args in DEFAULT_PROFILES.items()
    ]
    nodes.append(NodeSpec(parse_participant_id("did:dali:acme:consumer"), "consumer"))
    nodes.append(NodeSpec(parse_participant_id("did:dali:dali:federator"), "federator"))
    topology = FederationTopology(
        nodes=tuple(nodes), transport=transport, seed=seed, faults=tuple(faults)
    )
    topology.validate()
    return topology
