"""Federation simulator: topologies, transports, scenarios, and fuzzing."""

from .federation import Federation, Node, capped_research_offer
from .fuzz import FuzzReport, run_fuzz
from .httpapi import HttpClient, HttpDriver, HttpFederation, HttpPeer
from .scenarios import (
    DEFAULT_FUZZ_SCHEDULES,
    SCENARIOS,
    InProcessDriver,
    ScenarioResult,
    replay,
    run_scenario,
    write_event_log,
)
from .topology import (
    FAULT_KINDS,
    FaultSpec,
    FederationTopology,
    NodeSpec,
    default_topology,
)
from .transport import EventRecorder, InProcessTransport

__all__ = [
    "Federation",
    "Node",
    "capped_research_offer",
    "FuzzReport",
    "run_fuzz",
    "HttpClient",
    "HttpDriver",
    "HttpFederation",
    "HttpPeer",
    "DEFAULT_FUZZ_SCHEDULES",
    "SCENARIOS",
    "InProcessDriver",
    "ScenarioResult",
    "replay",
    "run_scenario",
    "write_event_log",
    "FAULT_KINDS",
    "FaultSpec",
    "FederationTopology",
    "NodeSpec",
    "default_topology",
    "EventRecorder",
    "InProcessTransport",
]
