/** Marketplace console: five tabs over the node HTTP APIs, re-rendered from
 * fetched state every poll tick. Nothing here caches protocol state; form
 * text and focus survive re-renders via keyed bound inputs. */

import { ApiClient, ApiError, type DecisionVerb } from "./api.js";
import { counterOfferDiff, isEmptyDiff, type PolicyDiff } from "./diff.js";
import { renderPolicy } from "./policy.js";
import {
  buildAssetCards,
  canDecide,
  chainBadge,
  hasScope,
  parseSessionToken,
  sessionState,
  SessionTokenError,
  type AssetCard,
  type CatalogueFilters,
  type SessionState,
} from "./state.js";
import type { NegotiationWire, PolicyWire, TokenWire, TransferWire } from "./wire.js";

const POLL_MS = 2000;
const TABS = ["session", "catalogue", "negotiations", "transfers", "audit"] as const;
type Tab = (typeof TABS)[number];

type Attrs = Record<string, string | boolean | ((event: Event) => void)>;
type Child = Node | string;

function el(tag: string, attrs: Attrs = {}, ...children: Child[]): HTMLElement {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    if (typeof value === "function") node.addEventListener(name, value);
    else if (typeof value === "boolean") {
      if (name === "disabled") (node as HTMLButtonElement).disabled = value;
      else if (value) node.setAttribute(name, "");
    } else node.setAttribute(name, value);
  }
  node.append(...children);
  return node;
}

function errorBadge(exc: unknown): HTMLElement {
  const text =
    exc instanceof ApiError ? `${exc.code}: ${exc.detail}` : `client-error: ${String(exc)}`;
  return el("span", { class: "badge bad" }, text);
}

type FieldElement = HTMLInputElement | HTMLTextAreaElement | HTMLSelectElement;

export class App {
  private readonly client: ApiClient;
  private readonly root: HTMLElement;
  private tab: Tab = "session";
  private token: TokenWire | null = null;
  private filters: CatalogueFilters = {};
  private auditSubject = "";
  private readonly fieldValues = new Map<string, string>();
  private readonly decisionsInFlight = new Set<string>();
  private readonly actionNotes = new Map<string, Node>();
  private pollTimer: number | undefined;
  private renderSeq = 0;

  constructor(apiBase: string, root: HTMLElement) {
    this.client = new ApiClient(apiBase);
    this.root = root;
  }

  start(): void {
    void this.render();
    this.pollTimer = window.setInterval(() => {
      if (this.tab !== "session") void this.render();
    }, POLL_MS);
  }

  stop(): void {
    if (this.pollTimer !== undefined) window.clearInterval(this.pollTimer);
  }

  private session(): SessionState {
    return sessionState(this.token, Date.now());
  }

  private show(tab: Tab): void {
    this.tab = tab;
    void this.render();
  }

  /** Keyed form field whose text survives the poll re-render. */
  private field(key: string, attrs: Attrs, tag = "input"): FieldElement {
    const node = el(tag, {
      ...attrs,
      "data-field": key,
      input: (event) => this.fieldValues.set(key, (event.target as FieldElement).value),
      change: (event) => this.fieldValues.set(key, (event.target as FieldElement).value),
    }) as FieldElement;
    const stored = this.fieldValues.get(key);
    if (stored !== undefined) node.value = stored;
    else if (typeof attrs["value"] === "string") node.value = attrs["value"];
    return node;
  }

  private fieldValue(key: string, fallback = ""): string {
    return this.fieldValues.get(key) ?? fallback;
  }

  private async render(): Promise<void> {
    const seq = ++this.renderSeq;
    const body =
      this.tab === "session" || this.session() !== "active"
        ? this.renderSession()
        : await this.renderActiveTab();
    if (seq !== this.renderSeq) return; // a newer render finished first
    const frame = el("div", {}, this.renderNav(), body);
    const focused = document.activeElement as HTMLElement | null;
    const focusKey = focused?.dataset ? focused.dataset["field"] : undefined;
    this.root.replaceChildren(frame);
    if (focusKey) this.restoreFocus(focusKey);
  }

  private restoreFocus(key: string): void {
    const node = this.root.querySelector<FieldElement>(`[data-field="${key}"]`);
    if (node === null) return;
    node.focus();
    if (node instanceof HTMLInputElement || node instanceof HTMLTextAreaElement) {
      const end = node.value.length;
      try {
        node.setSelectionRange(end, end);
      } catch {
        // non-text input types refuse selections; focus alone is fine
      }
    }
  }

  private async renderActiveTab(): Promise<HTMLElement> {
    try {
      if (this.tab === "catalogue") return await this.renderCatalogue();
      if (this.tab === "negotiations") return await this.renderNegotiations();
      if (this.tab === "transfers") return await this.renderTransfers();
      return await this.renderAudit();
    } catch (exc) {
      return el("section", {}, errorBadge(exc));
    }
  }

  private renderNav(): HTMLElement {
    const state = this.session();
    const buttons = TABS.map((tab) =>
      el(
        "button",
        {
          class: tab === this.tab ? "tab active" : "tab",
          disabled: tab !== "session" && state !== "active",
          click: () => this.show(tab),
        },
        tab,
      ),
    );
    const badgeClass = state === "active" ? "badge ok" : "badge bad";
    return el("nav", {}, ...buttons, el("span", { class: badgeClass }, `session ${state}`));
  }

  // -- session ---------------------------------------------------------------

  private renderSession(): HTMLElement {
    const state = this.session();
    const input = this.field(
      "session-token",
      { rows: "5", placeholder: 'paste a session token JSON ({"subject": ..., "sig": ...})' },
      "textarea",
    );
    const feedback = el("div", { class: "feedback" });
    const apply = () => {
      try {
        this.token = parseSessionToken(input.value);
        this.fieldValues.delete("session-token");
        feedback.replaceChildren();
        void this.render();
      } catch (exc) {
        const detail = exc instanceof SessionTokenError ? exc.message : String(exc);
        feedback.replaceChildren(el("span", { class: "badge bad" }, detail));
      }
    };
    const rows: Child[] = [
      el("h2", {}, "Session"),
      state === "expired"
        ? el("p", { class: "notice" }, "Session token expired. Paste a fresh token to sign in.")
        : el("p", {}, "Paste a token issued by the identity service to open the console."),
      input,
      el("div", {}, el("button", { click: apply }, "Set token")),
      feedback,
    ];
    if (this.token !== null && state === "active") {
      rows.push(
        el(
          "table",
          {},
          this.row("subject", this.token.subject),
          this.row("audience", this.token.audience),
          this.row("scopes", this.token.scopes.join(", ")),
          this.row("expires", this.token.expiresAt),
        ),
        el("button", { click: () => { this.token = null; void this.render(); } }, "Sign out"),
      );
    }
    return el("section", {}, ...rows);
  }

  private row(label: string, value: string): HTMLElement {
    return el("tr", {}, el("th", {}, label), el("td", {}, value));
  }

  // -- catalogue ---------------------------------------------------------------

  private async renderCatalogue(): Promise<HTMLElement> {
    const form = this.catalogueFilterForm();
    try {
      const result = await this.client.searchAssets(this.filters);
      const cards = buildAssetCards(result.entries);
      const list =
        cards.length === 0
          ? el("p", { class: "notice" }, "no assets")
          : el("div", { class: "cards" }, ...cards.map((card) => this.assetCard(card)));
      return el(
        "section",
        {},
        el("h2", {}, "Catalogue"),
        form,
        el("p", {}, `${result.totalCount} asset(s) match`),
        list,
      );
    } catch (exc) {
      if (exc instanceof ApiError) {
        return el("section", {}, el("h2", {}, "Catalogue"), form, errorBadge(exc));
      }
      throw exc;
    }
  }

  private catalogueFilterForm(): HTMLElement {
    const kind = this.field("catalogue-kind", {}, "select") as HTMLSelectElement;
    for (const value of ["", "dataset", "ml-model", "ran-model", "service", "application"]) {
      kind.append(el("option", { value }, value === "" ? "any kind" : value));
    }
    kind.value = this.filters.kind ?? "";
    const text = this.field("catalogue-text", { type: "text", placeholder: "search text" });
    const apply = () => {
      this.filters = {
        ...(kind.value ? { kind: kind.value } : {}),
        ...(text.value ? { text: text.value } : {}),
      };
      void this.render();
    };
    const appStore = () => {
      this.filters = { kind: "application" };
      this.fieldValues.set("catalogue-kind", "application");
      this.fieldValues.delete("catalogue-text");
      void this.render();
    };
    return el(
      "div",
      { class: "filters" },
      kind,
      text,
      el("button", { click: apply }, "Filter"),
      el("button", { click: appStore }, "App Store"),
    );
  }

  private assetCard(card: AssetCard): HTMLElement {
    const metadata = el(
      "table",
      {},
      ...Object.entries(card.metadata).map(([key, value]) => this.row(key, value)),
    );
    const offers = card.offers.map((offer) =>
      el(
        "div",
        { class: "offer" },
        el("div", {}, el("b", {}, offer.offerId), ` · license ${offer.licenseTag}`),
        el("pre", {}, offer.policyText),
      ),
    );
    const badges: Child[] = [
      el("span", { class: "badge" }, card.kind),
      el("span", { class: "badge" }, card.temperature),
    ];
    if (card.quarantined) badges.push(el("span", { class: "badge bad" }, "quarantined"));
    return el(
      "article",
      { class: "card" },
      el("h3", {}, card.title),
      el("div", {}, `${card.assetId} · ${card.providerId}`),
      el("div", {}, ...badges),
      metadata,
      ...offers,
      ...card.violations.map((v) => el("div", { class: "badge bad" }, v)),
    );
  }

  // -- negotiations ---------------------------------------------------------------

  private async renderNegotiations(): Promise<HTMLElement> {
    const [negotiations, search] = await Promise.all([
      this.client.listNegotiations(),
      this.client.searchAssets({ limit: 100 }),
    ]);
    const offersByAsset = new Map<string, Map<string, PolicyWire>>();
    for (const entry of search.entries) {
      const byOffer = new Map<string, PolicyWire>();
      for (const offer of entry.selfDescription.offers) byOffer.set(offer.offerId, offer.policy);
      offersByAsset.set(entry.selfDescription.assetId, byOffer);
    }
    const rows = negotiations.map((n) => this.negotiationRow(n, offersByAsset));
    return el(
      "section",
      {},
      el("h2", {}, "Negotiations"),
      this.startNegotiationForm(),
      rows.length === 0
        ? el("p", { class: "notice" }, "no negotiations yet")
        : el("div", {}, ...rows),
    );
  }

  private startNegotiationForm(): HTMLElement {
    const provider = this.field("neg-provider", {
      type: "text",
      placeholder: "provider id (did:dali:...)",
    });
    const asset = this.field("neg-asset", { type: "text", placeholder: "asset id" });
    const offer = this.field("neg-offer", { type: "text", value: "default-research" });
    const feedback = el("span", {});
    const submit = async () => {
      feedback.replaceChildren();
      try {
        await this.client.startNegotiation(
          provider.value.trim(),
          asset.value.trim(),
          offer.value.trim(),
        );
        void this.render();
      } catch (exc) {
        feedback.replaceChildren(errorBadge(exc));
      }
    };
    return el(
      "div",
      { class: "filters" },
      provider,
      asset,
      offer,
      el("button", { click: () => void submit() }, "Negotiate"),
      feedback,
    );
  }

  private negotiationRow(
    negotiation: NegotiationWire,
    offersByAsset: Map<string, Map<string, PolicyWire>>,
  ): HTMLElement {
    const stateBadge = el(
      "span",
      { class: negotiation.state === "TERMINATED" ? "badge bad" : "badge" },
      negotiation.terminationReason
        ? `${negotiation.state} (${negotiation.terminationReason})`
        : negotiation.state,
    );
    const parts: Child[] = [
      el(
        "div",
        {},
        el("b", {}, negotiation.negotiationId),
        ` · ${negotiation.role} · ${negotiation.assetId} · offer ${negotiation.offerId} `,
        stateBadge,
      ),
      el("div", {}, `consumer ${negotiation.consumer} / provider ${negotiation.provider}`),
    ];
    if (negotiation.agreementId) {
      parts.push(el("div", {}, `agreement ${negotiation.agreementId}`));
    }
    if (negotiation.counterOffer) {
      parts.push(this.counterOfferView(negotiation, offersByAsset));
    }
    if (canDecide(negotiation)) {
      parts.push(this.decisionControls(negotiation.negotiationId));
    }
    const note = this.actionNotes.get(negotiation.negotiationId);
    if (note) parts.push(el("div", { class: "feedback" }, note));
    parts.push(
      el("button", { click: () => this.openAudit(negotiation.negotiationId) }, "audit trail"),
    );
    return el("article", { class: "card" }, ...parts);
  }

  private counterOfferView(
    negotiation: NegotiationWire,
    offersByAsset: Map<string, Map<string, PolicyWire>>,
  ): HTMLElement {
    const counter = negotiation.counterOffer as PolicyWire;
    const original = offersByAsset.get(negotiation.assetId)?.get(negotiation.offerId);
    const parts: Child[] = [el("b", {}, "counter-offer"), el("pre", {}, renderPolicy(counter))];
    if (original === undefined) {
      parts.push(el("div", { class: "notice" }, "original offer not in catalogue; no diff"));
    } else {
      parts.push(...this.diffView(counterOfferDiff(original, counter)));
    }
    return el("div", { class: "offer" }, ...parts);
  }

  private diffView(diff: PolicyDiff): HTMLElement[] {
    if (isEmptyDiff(diff)) {
      return [el("div", { class: "notice" }, "identical to the original offer")];
    }
    const constraint = (c: { left: string; op: string; right: unknown }) =>
      `${c.left} ${c.op} ${JSON.stringify(c.right)}`;
    const lines: HTMLElement[] = [];
    for (const added of diff.added) {
      lines.push(
        el(
          "div",
          { class: "diff add" },
          `+ ${added.section} ${added.action}: ${constraint(added.constraint)}`,
        ),
      );
    }
    for (const removed of diff.removed) {
      lines.push(
        el(
          "div",
          { class: "diff del" },
          `- ${removed.section} ${removed.action}: ${constraint(removed.constraint)}`,
        ),
      );
    }
    for (const change of diff.changed) {
      lines.push(
        el(
          "div",
          { class: "diff mod" },
          `~ ${change.section} ${change.action}: ` +
            `${constraint(change.before)} -> ${constraint(change.after)}`,
        ),
      );
    }
    for (const action of diff.addedActions) {
      lines.push(
        el("div", { class: "diff add" }, `+ new ${action.section} rule: ${action.action}`),
      );
    }
    for (const action of diff.removedActions) {
      lines.push(
        el("div", { class: "diff del" }, `- dropped ${action.section} rule: ${action.action}`),
      );
    }
    return lines;
  }

  private decisionControls(negotiationId: string): HTMLElement {
    const busy = this.decisionsInFlight.has(negotiationId);
    const note = this.field(`note-${negotiationId}`, {
      type: "text",
      placeholder: "decision note (kept in this console)",
    });
    const button = (verb: DecisionVerb) =>
      el("button", { disabled: busy, click: () => void this.decide(negotiationId, verb) }, verb);
    return el("div", { class: "filters" }, button("accept"), button("reject"), note);
  }

  private async decide(negotiationId: string, verb: DecisionVerb): Promise<void> {
    if (this.decisionsInFlight.has(negotiationId)) return; // double-click guard
    this.decisionsInFlight.add(negotiationId);
    const note = this.fieldValue(`note-${negotiationId}`);
    try {
      const updated = await this.client.decide(negotiationId, verb);
      const suffix = note ? ` (note: ${note})` : "";
      this.actionNotes.set(
        negotiationId,
        el("span", { class: "badge ok" }, `${verb} sent; now ${updated.state}${suffix}`),
      );
      this.fieldValues.delete(`note-${negotiationId}`);
    } catch (exc) {
      this.actionNotes.set(negotiationId, errorBadge(exc));
    } finally {
      this.decisionsInFlight.delete(negotiationId);
    }
    void this.render();
  }

  // -- transfers ---------------------------------------------------------------

  private async renderTransfers(): Promise<HTMLElement> {
    const [transfers, agreements] = await Promise.all([
      this.client.listTransfers(),
      this.client.listAgreements(),
    ]);
    const rows = transfers.map((t) => this.transferRow(t));
    return el(
      "section",
      {},
      el("h2", {}, "Transfers"),
      this.startTransferForm(agreements.map((a) => String(a["agreementId"]))),
      rows.length === 0 ? el("p", { class: "notice" }, "no transfers yet") : el("div", {}, ...rows),
    );
  }

  private startTransferForm(agreementIds: string[]): HTMLElement {
    if (agreementIds.length === 0) {
      return el("p", { class: "notice" }, "no agreements yet; finalize a negotiation first");
    }
    const agreement = this.field("transfer-agreement", {}, "select") as HTMLSelectElement;
    for (const id of agreementIds) agreement.append(el("option", { value: id }, id));
    const stored = this.fieldValues.get("transfer-agreement");
    if (stored !== undefined && agreementIds.includes(stored)) agreement.value = stored;
    const purpose = this.field("transfer-purpose", { type: "text", value: "research" });
    const feedback = el("span", {});
    const submit = async () => {
      feedback.replaceChildren();
      try {
        await this.client.startTransfer(agreement.value, purpose.value);
        void this.render();
      } catch (exc) {
        feedback.replaceChildren(errorBadge(exc));
      }
    };
    return el(
      "div",
      { class: "filters" },
      agreement,
      purpose,
      el("button", { click: () => void submit() }, "Transfer"),
      feedback,
    );
  }

  private transferRow(transfer: TransferWire): HTMLElement {
    const stateBadge = el(
      "span",
      { class: transfer.state === "TERMINATED" ? "badge bad" : "badge" },
      transfer.terminationReason
        ? `${transfer.state} (${transfer.terminationReason})`
        : transfer.state,
    );
    const digest = transfer.payloadDigest ? transfer.payloadDigest.hex.slice(0, 16) : "-";
    return el(
      "article",
      { class: "card" },
      el("div", {}, el("b", {}, transfer.transferId), ` · ${transfer.role} `, stateBadge),
      el(
        "div",
        {},
        `agreement ${transfer.agreementId} · purpose ${transfer.purpose || "-"} · ` +
          `${transfer.bytesMoved} bytes · digest ${digest}`,
      ),
      el("button", { click: () => this.openAudit(transfer.transferId) }, "audit trail"),
    );
  }

  // -- audit ---------------------------------------------------------------

  private openAudit(subject: string): void {
    this.auditSubject = subject;
    this.fieldValues.set("audit-subject", subject);
    this.show("audit");
  }

  private async renderAudit(): Promise<HTMLElement> {
    const subject = this.field("audit-subject", {
      type: "text",
      placeholder: "subject id (negotiation, agreement, or transfer)",
    });
    const apply = () => {
      this.auditSubject = subject.value.trim();
      void this.render();
    };
    const header: Child[] = [
      el("h2", {}, "Audit"),
      el("div", { class: "filters" }, subject, el("button", { click: apply }, "Load timeline")),
    ];
    if (this.token !== null && !hasScope(this.token, "clearing:read")) {
      header.push(el("p", { class: "notice" }, "session token lacks the clearing:read scope"));
    }
    const verdict = await this.client.verifyChain();
    const badge = chainBadge(verdict);
    header.push(el("div", {}, el("span", { class: `badge ${badge.tone}` }, badge.label)));
    if (this.auditSubject === "") {
      return el("section", {}, ...header, el("p", { class: "notice" }, "no subject selected"));
    }
    const records = await this.client.auditRecords(this.auditSubject);
    const ordered = [...records].sort((a, b) => a.seq - b.seq);
    const rows = ordered.map((record) =>
      el(
        "article",
        { class: "card" },
        el(
          "div",
          {},
          el("b", {}, `#${record.seq}`),
          ` · ${record.recordType} · ${record.actor} · t=${record.timestamp}`,
        ),
        el("pre", {}, JSON.stringify(record.payload, null, 2)),
      ),
    );
    return el(
      "section",
      {},
      ...header,
      rows.length === 0
        ? el("p", { class: "notice" }, "no records for this subject")
        : el("div", {}, ...rows),
    );
  }
}
