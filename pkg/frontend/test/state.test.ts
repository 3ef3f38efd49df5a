import { describe, expect, test } from "vitest";

import { parsePolicy } from "../src/policy.js";
import {
  buildAssetCards,
  buildCatalogueQuery,
  canDecide,
  chainBadge,
  hasScope,
  parseSessionToken,
  sessionState,
  SessionTokenError,
} from "../src/state.js";
import type { CatalogueEntryWire, NegotiationWire, PolicyWire, TokenWire } from "../src/wire.js";

const RESEARCH: PolicyWire = {
  permissions: [
    { action: "use", constraints: [{ left: "purpose", op: "eq", right: "research" }] },
    { action: "transfer", constraints: [{ left: "purpose", op: "eq", right: "research" }] },
  ],
  prohibitions: [{ action: "re-share", constraints: [] }],
};

function entry(assetId: string, kind: string, violations = 0): CatalogueEntryWire {
  return {
    selfDescription: {
      assetId,
      providerId: "did:dali:isi:testbed",
      kind,
      title: `${kind} ${assetId}`,
      metadata: kind === "ran-model" ? { "ran-layer": "mac" } : {},
      offers: [{ offerId: "default-research", licenseTag: "research-only", policy: RESEARCH }],
      contentDigest: null,
      temperature: "cold",
      createdAt: "2026-01-01T00:00:00Z",
    },
    registeredAt: 1767225600,
    sourceConnector: "https://isi.example/connector",
    validationReport: Array.from({ length: violations }, (_, i) => ({
      property: `p${i}`,
      code: "unknown-property",
      detail: "not in the schema",
    })),
  };
}

function negotiation(overrides: Partial<NegotiationWire>): NegotiationWire {
  return {
    negotiationId: "neg-acme-1",
    assetId: "d-isi-mobility-traces",
    offerId: "default-research",
    consumer: "did:dali:acme:consumer",
    provider: "did:dali:isi:testbed",
    state: "REQUESTED",
    counterOffer: null,
    terminationReason: null,
    agreementId: null,
    role: "consumer",
    pendingDecision: false,
    ...overrides,
  };
}

const TOKEN: TokenWire = {
  subject: "did:dali:acme:consumer",
  audience: "clearing",
  scopes: ["clearing:read", "catalogue:read"],
  expiresAt: "2026-06-01T00:00:00Z",
  sig: "deadbeef",
};

describe("buildAssetCards", () => {
  test("preserves API order and renders offers losslessly", () => {
    const cards = buildAssetCards([
      entry("r-isi-handover-model", "ran-model"),
      entry("d-isi-mobility-traces", "dataset"),
    ]);
    expect(cards.map((c) => c.assetId)).toEqual([
      "r-isi-handover-model",
      "d-isi-mobility-traces",
    ]);
    const card = cards[0]!;
    expect(card.kind).toBe("ran-model");
    expect(card.temperature).toBe("cold");
    expect(card.metadata).toEqual({ "ran-layer": "mac" });
    expect(card.offers).toHaveLength(1);
    expect(card.offers[0]!.licenseTag).toBe("research-only");
    expect(parsePolicy(card.offers[0]!.policyText)).toEqual(RESEARCH);
    expect(card.quarantined).toBe(false);
  });

  test("quarantined entries carry their violations", () => {
    const card = buildAssetCards([entry("d-bad", "dataset", 2)])[0]!;
    expect(card.quarantined).toBe(true);
    expect(card.violations).toEqual([
      "p0: unknown-property (not in the schema)",
      "p1: unknown-property (not in the schema)",
    ]);
  });

  test("empty list builds no cards", () => {
    expect(buildAssetCards([])).toEqual([]);
  });
});

describe("canDecide", () => {
  test("true only on the server's pending flag", () => {
    expect(canDecide(negotiation({ state: "OFFERED", pendingDecision: true }))).toBe(true);
    expect(canDecide(negotiation({ state: "OFFERED", pendingDecision: false }))).toBe(false);
    expect(canDecide(negotiation({ state: "FINALIZED", pendingDecision: false }))).toBe(false);
    expect(canDecide(negotiation({ state: "TERMINATED", pendingDecision: false }))).toBe(false);
  });
});

describe("session tokens", () => {
  test("valid wire token parses", () => {
    const token = parseSessionToken(JSON.stringify(TOKEN));
    expect(token).toEqual(TOKEN);
  });

  test.each([
    ["not JSON", "{nope"],
    ["not an object", '"just a string"'],
    ["missing subject", '{"audience":"a","scopes":[],"expiresAt":"2026-01-01T00:00:00Z","sig":"x"}'],
    [
      "scopes not strings",
      '{"subject":"s","audience":"a","scopes":[1],"expiresAt":"2026-01-01T00:00:00Z","sig":"x"}',
    ],
    [
      "unparseable expiry",
      '{"subject":"s","audience":"a","scopes":[],"expiresAt":"whenever","sig":"x"}',
    ],
    ["missing signature", '{"subject":"s","audience":"a","scopes":[],"expiresAt":"2026-01-01T00:00:00Z"}'],
  ])("%s is rejected", (_name, raw) => {
    expect(() => parseSessionToken(raw)).toThrow(SessionTokenError);
  });

  test("state machine: anonymous, active, expired", () => {
    const expiry = Date.parse(TOKEN.expiresAt);
    expect(sessionState(null, expiry - 1000)).toBe("anonymous");
    expect(sessionState(TOKEN, expiry - 1000)).toBe("active");
    expect(sessionState(TOKEN, expiry)).toBe("expired");
    expect(sessionState(TOKEN, expiry + 1000)).toBe("expired");
  });

  test("scope membership", () => {
    expect(hasScope(TOKEN, "clearing:read")).toBe(true);
    expect(hasScope(TOKEN, "clearing:append")).toBe(false);
  });
});

describe("chainBadge", () => {
  test("valid verdict is the green badge", () => {
    expect(chainBadge({ valid: true })).toEqual({ tone: "ok", label: "chain valid" });
  });

  test("invalid verdict names the first bad record", () => {
    expect(chainBadge({ valid: false, firstBadSeq: 7 })).toEqual({
      tone: "bad",
      label: "chain invalid at seq 7",
    });
  });
});

describe("buildCatalogueQuery", () => {
  test("no filters, no query string", () => {
    expect(buildCatalogueQuery({})).toBe("");
  });

  test("parameters appear in stable order", () => {
    expect(
      buildCatalogueQuery({
        offset: 20,
        text: "mmWave traces",
        kind: "dataset",
        limit: 10,
        provider: "did:dali:eur:testbed",
      }),
    ).toBe("?kind=dataset&provider=did%3Adali%3Aeur%3Atestbed&text=mmWave+traces&limit=10&offset=20");
  });

  test("zero offset still serializes", () => {
    expect(buildCatalogueQuery({ offset: 0 })).toBe("?offset=0");
  });
});
