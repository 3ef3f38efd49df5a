"""Operator command line: serve federations, talk to nodes, run scenarios.

Client commands address one node's base URL via --api (printed by `dali up`,
also written to <base-dir>/endpoints.json). Exit codes: 0 success, 1 domain
error or failed check, 2 usage error.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
import tempfile
import time
import urllib.parse

import click

from .canonical import canonical_json
from .clearinghouse import verify_log_file
from .clock import LogicalClock
from .errors import DaliError
from .harness import HttpClient, HttpFederation, default_topology, run_scenario
from .harness import replay as replay_run
from .harness.scenarios import DEFAULT_FUZZ_SCHEDULES
from .harness.topology import FederationTopology
from .identity import load_keypair, mint_token, save_keypair
from .model import parse_participant_id


class _Root(click.Group):
    """Maps domain errors to exit code 1, leaving usage errors to click (2)."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.ClickException:
            raise
        except (DaliError, ValueError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)


@click.group(cls=_Root)
def cli():
    """Desk-scale federated data space."""


def _json_option(fn):
    return click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")(fn)


def _api_option(fn):
    return click.option("--api", required=True, help="Base URL of the target node.")(fn)


def _emit(data: dict, as_json: bool, human=None) -> None:
    if as_json:
        click.echo(canonical_json(data))
        return
    if human is not None:
        human(data)
        return
    for key, value in data.items():
        if not isinstance(value, (str, int, float, bool, type(None))):
            value = json.dumps(value)
        click.echo(f"{key}: {value}")


def _load_topology(path: str | None, seed: int | None, transport: str | None):
    if path is None:
        return default_topology(
            seed=42 if seed is None else seed, transport=transport or "in-process"
        )
    topology = FederationTopology.from_yaml(path)
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if transport is not None:
        changes["transport"] = transport
    if changes:
        topology = dataclasses.replace(topology, **changes)
        topology.validate()
    return topology


# -- federation lifecycle ------------------------------------------------------


@cli.command()
@click.option("--topology", "topology_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Topology YAML; defaults to the shipped 4-provider federation.")
@click.option("--seed", type=int, default=None, help="Override the topology seed.")
@click.option("--base-dir", type=click.Path(file_okay=False), default=None,
              help="Run directory for stores and the audit log.")
@click.option("--seed-assets/--no-seed-assets", default=True, show_default=True,
              help="Publish the ten-asset demo corpus on startup.")
@click.option("--federate/--no-federate", default=True, show_default=True,
              help="Run one catalogue sync round on startup.")
@click.option("--run-for", type=float, default=0.0,
              help="Seconds to serve before exiting; 0 serves until interrupted.")
@_json_option
def up(topology_file, seed, base_dir, seed_assets, federate, run_for, as_json):
    """Serve every topology node over loopback HTTP."""
    topology = _load_topology(topology_file, seed, "http")
    base_dir = base_dir or tempfile.mkdtemp(prefix="dali-up-")
    os.makedirs(base_dir, exist_ok=True)
    rig = HttpFederation(topology, base_dir)
    try:
        if seed_assets:
            rig.federation.seed_assets()
        if federate:
            rig.federation.federate_all()
        save_keypair(base_dir, "anchor", rig.federation.federator.keys)
        with open(os.path.join(base_dir, "endpoints.json"), "w", encoding="utf-8") as fh:
            fh.write(canonical_json(rig.endpoints) + "\n")
        info = {"baseDir": base_dir, "endpoints": rig.endpoints}
        if as_json:
            click.echo(canonical_json(info))
        else:
            click.echo(f"base dir: {base_dir}")
            for participant, url in sorted(rig.endpoints.items()):
                click.echo(f"  {participant} -> {url}")
        deadline = time.monotonic() + run_for if run_for > 0 else None
        try:
            while deadline is None or time.monotonic() < deadline:
                time.sleep(0.05)
        except KeyboardInterrupt:
            pass
    finally:
        rig.close()


# -- catalogue -------------------------------------------------------------------


@cli.command()
@_api_option
@click.option("--asset", "asset_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Self-description JSON file.")
@_json_option
def publish(api, asset_file, as_json):
    """Register a self-description with the node's catalogue."""
    with open(asset_file, encoding="utf-8") as fh:
        description = json.load(fh)
    entry = HttpClient().json("POST", api + "/catalogue/assets", body=description)

    def human(e):
        asset_id = e["selfDescription"]["assetId"]
        if e["validationReport"]:
            click.echo(f"registered {asset_id} (quarantined: {len(e['validationReport'])} violations)")
        else:
            click.echo(f"registered {asset_id}")

    _emit(entry, as_json, human)


@cli.command()
@_api_option
@click.option("--kind", default=None)
@click.option("--text", default=None)
@click.option("--provider", default=None)
@click.option("--limit", type=int, default=100, show_default=True)
@click.option("--offset", type=int, default=0, show_default=True)
@_json_option
def query(api, kind, text, provider, limit, offset, as_json):
    """Search the node's catalogue."""
    params = {"limit": limit, "offset": offset}
    if kind:
        params["kind"] = kind
    if text:
        params["text"] = text
    if provider:
        params["provider"] = provider
    url = api + "/catalogue/assets?" + urllib.parse.urlencode(params)
    result = HttpClient().json("GET", url)

    def human(data):
        click.echo(f"{data['totalCount']} assets")
        for entry in data["entries"]:
            sd = entry["selfDescription"]
            click.echo(f"  {sd['kind']:<12} {sd['assetId']:<24} {sd['providerId']}  {sd['title']}")

    _emit(result, as_json, human)


@cli.command()
@_api_option
@click.option("--peer", required=True, help="Base URL of the catalogue to pull from.")
@_json_option
def federate(api, peer, as_json):
    """Pull a peer catalogue's entries into the node's catalogue."""
    report = HttpClient().json("POST", api + "/catalogue/federate", body={"peerEndpoint": peer})
    _emit(report, as_json)


# -- contract negotiation and transfer ----------------------------------------------


def _render_negotiation(wire: dict) -> None:
    line = f"{wire['negotiationId']}: {wire['state']}"
    if wire["terminationReason"]:
        line += f" ({wire['terminationReason']})"
    if wire["agreementId"]:
        line += f" agreement {wire['agreementId']}"
    if wire.get("pendingDecision"):
        line += " [decision pending]"
    click.echo(line)


@cli.command()
@_api_option
@click.option("--provider", required=True, help="Provider participant id.")
@click.option("--asset", "asset_id", required=True)
@click.option("--offer", "offer_id", required=True)
@_json_option
def negotiate(api, provider, asset_id, offer_id, as_json):
    """Start a contract negotiation from the node at --api."""
    wire = HttpClient().json(
        "POST",
        api + "/admin/negotiations",
        body={"providerId": provider, "assetId": asset_id, "offerId": offer_id},
    )
    _emit(wire, as_json, _render_negotiation)


@cli.command("decision-mode")
@_api_option
@click.option("--set", "new_mode", type=click.Choice(["auto", "counter", "manual"]),
              default=None, help="Switch the node's mode; omit to show it.")
@_json_option
def decision_mode(api, new_mode, as_json):
    """Show or switch how a node answers incoming contract requests."""
    if new_mode is None:
        data = HttpClient().json("GET", api + "/admin/decision-mode")
    else:
        data = HttpClient().json("POST", api + "/admin/decision-mode", body={"mode": new_mode})
    _emit(data, as_json)


@cli.command()
@_api_option
@click.option("--negotiation", "negotiation_id", required=True)
@click.option("--decision", type=click.Choice(["accept", "reject"]), required=True)
@_json_option
def decide(api, negotiation_id, decision, as_json):
    """Resolve a pending negotiation decision on the node at --api."""
    wire = HttpClient().json(
        "POST",
        api + "/admin/negotiations/" + urllib.parse.quote(negotiation_id) + "/decision",
        body={"decision": decision},
    )
    _emit(wire, as_json, _render_negotiation)


@cli.command()
@_api_option
@click.option("--agreement", "agreement_id", required=True)
@click.option("--purpose", default="research", show_default=True)
@_json_option
def transfer(api, agreement_id, purpose, as_json):
    """Request a payload transfer under an agreement."""
    wire = HttpClient().json(
        "POST",
        api + "/admin/transfers",
        body={"agreementId": agreement_id, "purpose": purpose},
    )

    def human(w):
        line = f"{w['transferId']}: {w['state']}"
        if w["terminationReason"]:
            line += f" ({w['terminationReason']})"
        if w["payloadDigest"]:
            line += f" {w['bytesMoved']} bytes sha256:{w['payloadDigest']['hex'][:12]}…"
        click.echo(line)

    _emit(wire, as_json, human)


# -- ELT ingestion ---------------------------------------------------------------


@cli.command()
@_api_option
@click.option("--request", "request_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="DataRequest JSON file.")
@click.option("--seed", type=int, default=42, show_default=True)
@_json_option
def ingest(api, request_file, seed, as_json):
    """Run hot/cold ELT ingestion on the federator."""
    with open(request_file, encoding="utf-8") as fh:
        request = json.load(fh)
    result = HttpClient().json(
        "POST", api + "/lake/ingest", body={"request": request, "seed": seed}
    )

    def human(data):
        manifest = data["manifest"]
        ran = data["experimentsRun"]
        click.echo(
            f"{manifest['assetId']}: {manifest['rowCount']} rows, "
            f"{'ran 1 experiment' if ran else 'served cold'}, "
            f"sha256:{manifest['objectDigest']['hex'][:12]}…"
        )

    _emit(result, as_json, human)


# -- identity ----------------------------------------------------------------------


@cli.group()
def token():
    """Access token operations."""


@token.command("issue")
@click.option("--key-dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory holding the signing keypair (written by `dali up`).")
@click.option("--key-name", default="anchor", show_default=True)
@click.option("--subject", required=True, help="Participant id the token is issued to.")
@click.option("--audience", required=True, help="Service name the token targets.")
@click.option("--scope", "scopes", multiple=True, required=True)
@click.option("--ttl", type=int, default=900, show_default=True)
@click.option("--now", type=int, default=LogicalClock.DEFAULT_START, show_default=True,
              help="Issue time as unix seconds; defaults to the logical epoch.")
@_json_option
def token_issue(key_dir, key_name, subject, audience, scopes, ttl, now, as_json):
    """Mint a signed bearer token (paste into the marketplace UI's session field)."""
    keys = load_keypair(key_dir, key_name)
    minted = mint_token(keys, parse_participant_id(subject), audience, scopes, ttl, now)
    _emit(minted.to_wire(), as_json, lambda t: click.echo(canonical_json(t)))


# -- clearing house ------------------------------------------------------------------


@cli.group()
def audit():
    """Clearing-house operations."""


@audit.command("verify")
@click.option("--api", default=None, help="Hub base URL.")
@click.option("--log", "log_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Verify a local audit log file instead.")
@_json_option
def audit_verify(api, log_file, as_json):
    """Check the audit chain; exits 1 if the chain is invalid."""
    if (api is None) == (log_file is None):
        raise click.UsageError("pass exactly one of --api or --log")
    if api is not None:
        verdict = HttpClient().json("GET", api + "/clearing/verify")
    else:
        verdict = verify_log_file(log_file).to_wire()

    def human(v):
        if v["valid"]:
            click.echo("chain valid")
        else:
            click.echo(f"chain INVALID at seq {v['firstBadSeq']}")

    _emit(verdict, as_json, human)
    if not verdict["valid"]:
        sys.exit(1)


# -- scenarios -----------------------------------------------------------------------


def _render_scenario(wire: dict) -> None:
    click.echo(f"scenario {wire['scenario']} (seed {wire['seed']}, {wire['transport']})")
    counts: dict = {}
    for value in wire["terminalStates"].values():
        counts[value] = counts.get(value, 0) + 1
    for value in sorted(counts):
        click.echo(f"  {value}: {counts[value]}")
    verdict = wire["auditVerdict"]
    audit_text = "valid" if verdict and verdict["valid"] else "INVALID" if verdict else "n/a"
    click.echo(f"events: {len(wire['events'])}  audit: {audit_text}  "
               f"digests match: {wire['digestsMatch']}")


def _finish_scenario(result, as_json: bool) -> None:
    _emit(result.to_wire(), as_json, _render_scenario)
    ok = result.digests_match and (result.audit_verdict is None or result.audit_verdict.valid)
    if not ok:
        sys.exit(1)


@cli.group()
def scenario():
    """Named federation scenario scripts."""


@scenario.command("run")
@click.argument("name")
@click.option("--seed", type=int, default=None)
@click.option("--transport", type=click.Choice(["in-process", "http"]), default=None)
@click.option("--topology", "topology_file", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--base-dir", type=click.Path(file_okay=False), default=None)
@click.option("--event-log", type=click.Path(dir_okay=False), default=None,
              help="Write a replayable event log.")
@click.option("--schedules", type=int, default=DEFAULT_FUZZ_SCHEDULES, show_default=True,
              help="Schedule count for fuzz-protocol.")
@_json_option
def scenario_run(name, seed, transport, topology_file, base_dir, event_log, schedules, as_json):
    """Run a scenario; exits 1 if its checks fail."""
    topology = _load_topology(topology_file, seed, transport)
    result = run_scenario(
        topology, name, base_dir=base_dir, event_log=event_log, schedules=schedules
    )
    _finish_scenario(result, as_json)


@scenario.command("replay")
@click.argument("event_log", type=click.Path(exists=True, dir_okay=False))
@click.option("--base-dir", type=click.Path(file_okay=False), default=None)
@_json_option
def scenario_replay(event_log, base_dir, as_json):
    """Re-run a recorded event log and check the schedule matches."""
    result = replay_run(event_log, base_dir=base_dir)
    _finish_scenario(result, as_json)


main = cli


if __name__ == "__main__":
    main()
