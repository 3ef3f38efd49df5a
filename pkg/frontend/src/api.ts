/** HTTP client for the dataspace node APIs. All state shown in the UI comes
 * through these calls; errors carry the server's code/detail verbatim. */

import type {
  AgreementWire,
  AuditRecordWire,
  ChainVerdictWire,
  NegotiationWire,
  SearchResultWire,
  TransferWire,
} from "./wire.js";
import type { CatalogueFilters } from "./state.js";
import { buildCatalogueQuery } from "./state.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export type DecisionVerb = "accept" | "reject";

export class ApiClient {
  constructor(readonly base: string) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.base + path, {
        method,
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? null : JSON.stringify(body),
      });
    } catch (exc) {
      throw new ApiError(0, "peer-unreachable", `${method} ${path}: ${String(exc)}`);
    }
    if (!response.ok) {
      let code = "transport-failure";
      let detail = `${method} ${path} -> ${response.status}`;
      try {
        const payload = (await response.json()) as { error?: string; detail?: string };
        if (typeof payload.error === "string") {
          code = payload.error;
          detail = payload.detail ?? "";
        }
      } catch {
        // non-JSON error body; keep the transport description
      }
      throw new ApiError(response.status, code, detail);
    }
    return (await response.json()) as T;
  }

  async searchAssets(filters: CatalogueFilters): Promise<SearchResultWire> {
    return this.call("GET", `/catalogue/assets${buildCatalogueQuery(filters)}`);
  }

  async listNegotiations(): Promise<NegotiationWire[]> {
    const data = await this.call<{ negotiations: NegotiationWire[] }>(
      "GET",
      "/admin/negotiations",
    );
    return data.negotiations;
  }

  async getNegotiation(id: string): Promise<NegotiationWire> {
    return this.call("GET", `/admin/negotiations/${encodeURIComponent(id)}`);
  }

  async startNegotiation(
    providerId: string,
    assetId: string,
    offerId: string,
  ): Promise<NegotiationWire> {
    return this.call("POST", "/admin/negotiations", { providerId, assetId, offerId });
  }

  async decide(id: string, decision: DecisionVerb): Promise<NegotiationWire> {
    return this.call("POST", `/admin/negotiations/${encodeURIComponent(id)}/decision`, {
      decision,
    });
  }

  async listTransfers(): Promise<TransferWire[]> {
    const data = await this.call<{ transfers: TransferWire[] }>("GET", "/admin/transfers");
    return data.transfers;
  }

  async startTransfer(agreementId: string, purpose: string): Promise<TransferWire> {
    return this.call("POST", "/admin/transfers", { agreementId, purpose });
  }

  async listAgreements(): Promise<AgreementWire[]> {
    const data = await this.call<{ agreements: AgreementWire[] }>("GET", "/admin/agreements");
    return data.agreements;
  }

  async auditRecords(subject: string): Promise<AuditRecordWire[]> {
    const params = new URLSearchParams({ subject });
    const data = await this.call<{ records: AuditRecordWire[] }>(
      "GET",
      `/clearing/records?${params.toString()}`,
    );
    return data.records;
  }

  async verifyChain(): Promise<ChainVerdictWire> {
    return this.call("GET", "/clearing/verify");
  }
}
