"""Deterministic in-process message transport with fault injection.

The scheduler is single-threaded: outbound messages go into one queue and a
seeded RNG picks the next delivery, so a (topology, seed) pair always yields
the same interleaving. Faults fire either probabilistically (same RNG) or at
a fixed delivery index. Control-plane faults are drop/duplicate/clock-jump;
corrupt-payload-byte flips one byte in a data-plane chunk.
"""

from __future__ import annotations

import random

from ..connector import OutboundMessage


class EventRecorder:
    """Ordered, JSON-friendly run log shared by transport and scenarios."""

    def __init__(self):
        self.events: list = []

    def record(self, kind: str, **fields) -> dict:
        event = {"seq": len(self.events), "kind": kind}
        event.update(fields)
        self.events.append(event)
        return event


class InProcessTransport:
    def __init__(self, seed: int, faults=(), clock=None, recorder: EventRecorder | None = None):
        self.rng = random.Random(f"transport/{seed}")
        self.faults = tuple(faults)
        self.clock = clock
        self.recorder = recorder or EventRecorder()
        self.nodes: dict = {}
        self.deliveries = 0
        self.chunk_fetches = 0
        self.per_correlation: dict = {}

    def register(self, participant_id, connector) -> None:
        self.nodes[participant_id.value] = connector

    def _control_fault(self, kind: str, sender: str, recipient: str) -> bool:
        for fault in self.faults:
            if fault.kind != kind or not fault.matches(sender, recipient):
                continue
            if fault.trigger_index is not None:
                if fault.trigger_index == self.deliveries:
                    return True
                continue
            if fault.probability and self.rng.random() < fault.probability:
                return True
        return False

    def pump(self, outbound) -> int:
        """Deliver until quiescent; returns the number of deliveries made."""
        queue = [m for m in outbound]
        delivered = 0
        while queue:
            index = self.rng.randrange(len(queue)) if len(queue) > 1 else 0
            message = queue.pop(index)
            sender = message.envelope.sender_id.value
            recipient = message.recipient.value
            self.deliveries += 1
            delivered += 1
            correlation = message.envelope.correlation_id
            self.per_correlation[correlation] = self.per_correlation.get(correlation, 0) + 1
            if self._control_fault("clock-jump", sender, recipient) and self.clock is not None:
                jump = self.rng.randint(60, 1200)
                self.clock.advance(jump)
                self.recorder.record("fault", fault="clock-jump", advance=jump)
            if self._control_fault("drop-message", sender, recipient):
                self.recorder.record(
                    "drop",
                    sender=sender,
                    recipient=recipient,
                    messageType=message.envelope.message_type,
                    correlationId=correlation,
                )
                continue
            duplicated = self._control_fault("duplicate-message", sender, recipient)
            if duplicated:
                queue.append(message)
            self.recorder.record(
                "deliver",
                sender=sender,
                recipient=recipient,
                messageType=message.envelope.message_type,
                correlationId=correlation,
                duplicated=duplicated,
            )
            target = self.nodes[recipient]
            queue.extend(target.handle(message.envelope))
        return delivered

    def send_and_pump(self, recipient, envelope) -> int:
        return self.pump([OutboundMessage(recipient=recipient, envelope=envelope)])

    def chunk_fetcher(self):
        """Data-plane fetcher wired into consumer connectors."""

        def fetch(provider, transfer_id, token_wire, offset):
            chunk = self.nodes[provider.value].serve_chunk(transfer_id, token_wire, offset)
            self.chunk_fetches += 1
            if chunk and self._payload_fault(provider.value):
                position = self.rng.randrange(len(chunk))
                flipped = chunk[position] ^ (1 + self.rng.randrange(255))
                chunk = chunk[:position] + bytes([flipped]) + chunk[position + 1 :]
                self.recorder.record(
                    "fault",
                    fault="corrupt-payload-byte",
                    transferId=transfer_id,
                    offset=offset + position,
                )
            return chunk

        return fetch

    def _payload_fault(self, provider: str) -> bool:
        for fault in self.faults:
            if fault.kind != "corrupt-payload-byte":
                continue
            if not fault.matches(provider, provider):
                continue
            if fault.trigger_index is not None:
                if fault.trigger_index == self.chunk_fetches - 1:
                    return True
                continue
            if fault.probability and self.rng.random() < fault.probability:
                return True
        return False
