/** Wire shapes of the federation's HTTP APIs, as the services serialize them. */

export type RightOperand = string | number | Array<string | number>;

export interface ConstraintWire {
  left: string;
  op: string;
  right: RightOperand;
}

export interface RuleWire {
  action: string;
  constraints: ConstraintWire[];
}

export interface PolicyWire {
  permissions: RuleWire[];
  prohibitions: RuleWire[];
}

export interface OfferWire {
  offerId: string;
  policy: PolicyWire;
  licenseTag: string;
}

export interface DigestWire {
  algorithm: string;
  hex: string;
}

export interface ViolationWire {
  property: string;
  code: string;
  detail: string;
}

export interface SelfDescriptionWire {
  assetId: string;
  providerId: string;
  kind: string;
  title: string;
  metadata: Record<string, string>;
  offers: OfferWire[];
  contentDigest: DigestWire | null;
  temperature: string;
  createdAt: string;
}

export interface CatalogueEntryWire {
  selfDescription: SelfDescriptionWire;
  registeredAt: number;
  sourceConnector: string;
  validationReport: ViolationWire[];
}

export interface SearchResultWire {
  totalCount: number;
  entries: CatalogueEntryWire[];
}

export interface NegotiationWire {
  negotiationId: string;
  assetId: string;
  offerId: string;
  consumer: string;
  provider: string;
  state: string;
  counterOffer: PolicyWire | null;
  terminationReason: string | null;
  agreementId: string | null;
  role: string;
  pendingDecision: boolean;
}

export interface TransferWire {
  transferId: string;
  agreementId: string;
  state: string;
  bytesMoved: number;
  payloadDigest: DigestWire | null;
  terminationReason: string | null;
  role: string;
  purpose: string;
}

export interface AgreementWire {
  agreementId: string;
  assetId: string;
  consumer: string;
  provider: string;
  policy: PolicyWire;
  [key: string]: unknown;
}

export interface AuditRecordWire {
  recordType: string;
  actor: string;
  subjectId: string;
  payload: Record<string, unknown>;
  seq: number;
  timestamp: number;
  prevHash: string;
  recordHash: string;
}

export interface ChainVerdictWire {
  valid: boolean;
  firstBadSeq?: number;
}

export interface TokenWire {
  subject: string;
  audience: string;
  scopes: string[];
  expiresAt: string;
  sig: string;
}
