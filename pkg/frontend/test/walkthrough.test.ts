/** Demo walkthrough against a live seeded federation: browse, accept a
 * counter-offer, transfer, read the audit timeline, watch the chain badge
 * flip red on tampering. Spawns `dali up` and talks HTTP like the console. */

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, expect, test } from "vitest";

import { ApiClient } from "../src/api.js";
import { counterOfferDiff } from "../src/diff.js";
import { parsePolicy, renderPolicy } from "../src/policy.js";
import { buildAssetCards, canDecide, chainBadge } from "../src/state.js";
import type { PolicyWire } from "../src/wire.js";

const RUN_FOR_S = 180;
let baseDir: string;
let child: ChildProcessWithoutNullStreams;
let endpoints: Record<string, string>;
let consumer: ApiClient;

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

beforeAll(async () => {
  baseDir = mkdtempSync(join(tmpdir(), "dali-ui-demo-"));
  child = spawn("dali", ["up", "--base-dir", baseDir, "--run-for", String(RUN_FOR_S)], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  const endpointsFile = join(baseDir, "endpoints.json");
  for (let i = 0; i < 300; i++) {
    if (existsSync(endpointsFile)) break;
    if (child.exitCode !== null) throw new Error(`dali up exited early: ${child.exitCode}`);
    await sleep(100);
  }
  endpoints = JSON.parse(readFileSync(endpointsFile, "utf-8")) as Record<string, string>;
  consumer = new ApiClient(endpoints["did:dali:acme:consumer"]!);
}, 60_000);

afterAll(() => {
  child?.kill();
});

test("operator browses the seeded catalogue", async () => {
  const ranModels = await consumer.searchAssets({ kind: "ran-model" });
  expect(ranModels.totalCount).toBe(1);
  const cards = buildAssetCards(ranModels.entries);
  expect(cards.map((c) => c.assetId)).toEqual(["r-isi-handover-model"]);
  expect(cards[0]!.quarantined).toBe(false);

  const all = await consumer.searchAssets({ limit: 100 });
  expect(all.totalCount).toBe(10);
  const again = await consumer.searchAssets({ limit: 100 });
  expect(again.entries.map((e) => e.selfDescription.assetId)).toEqual(
    all.entries.map((e) => e.selfDescription.assetId),
  );

  const apps = await consumer.searchAssets({ kind: "application" });
  expect(apps.entries.map((e) => e.selfDescription.assetId).sort()).toEqual([
    "a-dt-kpi-dashboard",
    "a-eur-coverage-viz",
  ]);
}, 30_000);

test("every live demo policy renders and parses back equal", async () => {
  const all = await consumer.searchAssets({ limit: 100 });
  let offers = 0;
  for (const entry of all.entries) {
    for (const offer of entry.selfDescription.offers) {
      expect(parsePolicy(renderPolicy(offer.policy))).toEqual(offer.policy);
      offers += 1;
    }
  }
  expect(offers).toBeGreaterThanOrEqual(10);
}, 30_000);

test("counter-offer decision, transfer, and audit timeline", async () => {
  const eur = endpoints["did:dali:eur:testbed"]!;
  const setMode = async (mode: string) => {
    const response = await fetch(`${eur}/admin/decision-mode`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mode }),
    });
    expect(response.ok).toBe(true);
  };

  await setMode("counter");
  let negotiationId: string;
  try {
    const offered = await consumer.startNegotiation(
      "did:dali:eur:testbed",
      "d-eur-mmwave-traces",
      "default-research",
    );
    negotiationId = offered.negotiationId;
    expect(offered.state).toBe("OFFERED");
    expect(canDecide(offered)).toBe(true);
    expect(offered.counterOffer).not.toBeNull();

    const catalogue = await consumer.searchAssets({ text: "mmWave", limit: 10 });
    const source = catalogue.entries.find(
      (e) => e.selfDescription.assetId === "d-eur-mmwave-traces",
    )!;
    const original = source.selfDescription.offers.find(
      (o) => o.offerId === "default-research",
    )!.policy;
    const diff = counterOfferDiff(original, offered.counterOffer as PolicyWire);
    expect(diff.added).toEqual([
      {
        section: "permission",
        action: "transfer",
        constraint: { left: "useCount", op: "lt", right: 5 },
      },
    ]);
    expect(diff.removed).toEqual([]);
    expect(diff.changed).toEqual([]);
  } finally {
    await setMode("auto");
  }

  const accepted = await consumer.decide(negotiationId, "accept");
  expect(accepted.state).toBe("FINALIZED");
  expect(canDecide(accepted)).toBe(false);
  expect(accepted.agreementId).toBe(`ag-${negotiationId}`);

  const transfer = await consumer.startTransfer(accepted.agreementId!, "research");
  expect(transfer.state).toBe("COMPLETED");
  expect(transfer.bytesMoved).toBeGreaterThan(0);
  expect(transfer.payloadDigest).not.toBeNull();

  const timeline = await consumer.auditRecords(negotiationId);
  expect(timeline.length).toBeGreaterThanOrEqual(2);
  const seqs = timeline.map((r) => r.seq);
  expect(seqs).toEqual([...seqs].sort((a, b) => a - b));
  expect(timeline.every((r) => r.subjectId === negotiationId)).toBe(true);

  const transferTimeline = await consumer.auditRecords(transfer.transferId);
  const outcomes = transferTimeline.map((r) => r.payload["outcome"]);
  expect(outcomes).toEqual(["started", "completed"]);

  expect(chainBadge(await consumer.verifyChain())).toEqual({
    tone: "ok",
    label: "chain valid",
  });
}, 60_000);

test("tampering the audit log flips the badge red with the bad seq", async () => {
  const logPath = join(baseDir, "clearing", "audit.log");
  const pristine = readFileSync(logPath);
  const lineEnd = pristine.indexOf(0x0a);
  expect(lineEnd).toBeGreaterThan(0);
  const tampered = Buffer.from(pristine);
  const target = Math.floor(lineEnd / 2);
  tampered[target] = tampered[target] === 0x78 ? 0x79 : 0x78; // flip inside line 0
  writeFileSync(logPath, tampered);
  try {
    const verdict = await consumer.verifyChain();
    expect(verdict.valid).toBe(false);
    expect(verdict.firstBadSeq).toBe(0);
    expect(chainBadge(verdict)).toEqual({ tone: "bad", label: "chain invalid at seq 0" });
  } finally {
    writeFileSync(logPath, pristine);
  }
  expect((await consumer.verifyChain()).valid).toBe(true);
}, 30_000);
