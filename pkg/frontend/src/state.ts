/** Pure view-state helpers: everything here derives from fetched wire data,
 * never from locally remembered transitions. */

import { renderPolicy } from "./policy.js";
import type { CatalogueEntryWire, NegotiationWire, TokenWire } from "./wire.js";

export interface OfferSummary {
  offerId: string;
  licenseTag: string;
  policyText: string;
}

export interface AssetCard {
  assetId: string;
  providerId: string;
  kind: string;
  title: string;
  temperature: string;
  metadata: Record<string, string>;
  offers: OfferSummary[];
  quarantined: boolean;
  violations: string[];
}

/** One card per catalogue entry, in the order the API returned them. */
export function buildAssetCards(entries: CatalogueEntryWire[]): AssetCard[] {
  return entries.map((entry) => {
    const sd = entry.selfDescription;
    return {
      assetId: sd.assetId,
      providerId: sd.providerId,
      kind: sd.kind,
      title: sd.title,
      temperature: sd.temperature,
      metadata: sd.metadata,
      offers: sd.offers.map((offer) => ({
        offerId: offer.offerId,
        licenseTag: offer.licenseTag,
        policyText: renderPolicy(offer.policy),
      })),
      quarantined: entry.validationReport.length > 0,
      violations: entry.validationReport.map((v) => `${v.property}: ${v.code} (${v.detail})`),
    };
  });
}

/** Accept/Reject are live only while the server says a decision is pending. */
export function canDecide(negotiation: NegotiationWire): boolean {
  return negotiation.pendingDecision === true;
}

export class SessionTokenError extends Error {}

/** Parse a pasted token; throws SessionTokenError on anything malformed. */
export function parseSessionToken(raw: string): TokenWire {
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch {
    throw new SessionTokenError("token is not valid JSON");
  }
  if (typeof parsed !== "object" || parsed === null) {
    throw new SessionTokenError("token must be a JSON object");
  }
  const token = parsed as Record<string, unknown>;
  if (typeof token["subject"] !== "string" || token["subject"] === "") {
    throw new SessionTokenError("token is missing subject");
  }
  if (typeof token["audience"] !== "string") {
    throw new SessionTokenError("token is missing audience");
  }
  if (!Array.isArray(token["scopes"]) || !token["scopes"].every((s) => typeof s === "string")) {
    throw new SessionTokenError("token scopes must be a list of strings");
  }
  if (typeof token["expiresAt"] !== "string" || Number.isNaN(Date.parse(token["expiresAt"]))) {
    throw new SessionTokenError("token expiresAt must be a timestamp");
  }
  if (typeof token["sig"] !== "string" || token["sig"] === "") {
    throw new SessionTokenError("token is missing signature");
  }
  return {
    subject: token["subject"],
    audience: token["audience"],
    scopes: token["scopes"] as string[],
    expiresAt: token["expiresAt"],
    sig: token["sig"],
  };
}

export type SessionState = "anonymous" | "expired" | "active";

export function sessionState(token: TokenWire | null, nowMs: number): SessionState {
  if (token === null) return "anonymous";
  return Date.parse(token.expiresAt) <= nowMs ? "expired" : "active";
}

export function hasScope(token: TokenWire, scope: string): boolean {
  return token.scopes.includes(scope);
}

export interface ChainBadge {
  tone: "ok" | "bad";
  label: string;
}

/** Audit-chain badge straight from the /clearing/verify verdict. */
export function chainBadge(verdict: { valid: boolean; firstBadSeq?: number }): ChainBadge {
  if (verdict.valid) return { tone: "ok", label: "chain valid" };
  return { tone: "bad", label: `chain invalid at seq ${verdict.firstBadSeq}` };
}

export interface CatalogueFilters {
  kind?: string;
  provider?: string;
  text?: string;
  limit?: number;
  offset?: number;
}

/** Query string with stable parameter order so polling URLs stay cacheable. */
export function buildCatalogueQuery(filters: CatalogueFilters): string {
  const params = new URLSearchParams();
  if (filters.kind) params.set("kind", filters.kind);
  if (filters.provider) params.set("provider", filters.provider);
  if (filters.text) params.set("text", filters.text);
  if (filters.limit !== undefined) params.set("limit", String(filters.limit));
  if (filters.offset !== undefined) params.set("offset", String(filters.offset));
  const rendered = params.toString();
  return rendered === "" ? "" : `?${rendered}`;
}
