/** Lossless text projection of usage policies.
 *
 * Grammar, one rule per line:
 *   rule       := ("ALLOW" | "FORBID") " " action [" IF " constraints]
 *   constraints:= constraint (" AND " constraint)*
 *   constraint := left " " op " " right
 *   right      := JSON string | JSON number | JSON array of scalars
 *
 * Right operands are JSON tokens, so every policy renders to text that
 * parses back to the identical wire object.
 */

import type { ConstraintWire, PolicyWire, RightOperand, RuleWire } from "./wire.js";

const ACTIONS = new Set(["use", "transfer", "re-share"]);
const OPERATORS = new Set(["eq", "neq", "lt", "lteq", "gt", "gteq", "in"]);
const LEFT_OPERANDS = new Set(["purpose", "participant", "dateTime", "useCount"]);

export class PolicyTextError extends Error {}

export function renderPolicy(policy: PolicyWire): string {
  const lines: string[] = [];
  for (const rule of policy.permissions) lines.push(renderRule("ALLOW", rule));
  for (const rule of policy.prohibitions) lines.push(renderRule("FORBID", rule));
  return lines.join("\n");
}

function renderRule(verb: "ALLOW" | "FORBID", rule: RuleWire): string {
  const head = `${verb} ${rule.action}`;
  if (rule.constraints.length === 0) return head;
  const clauses = rule.constraints.map(
    (c) => `${c.left} ${c.op} ${JSON.stringify(c.right)}`,
  );
  return `${head} IF ${clauses.join(" AND ")}`;
}

export function parsePolicy(text: string): PolicyWire {
  const policy: PolicyWire = { permissions: [], prohibitions: [] };
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (line === "") continue;
    const [verb, rule] = parseRule(line);
    (verb === "ALLOW" ? policy.permissions : policy.prohibitions).push(rule);
  }
  return policy;
}

function parseRule(line: string): ["ALLOW" | "FORBID", RuleWire] {
  const verbEnd = line.indexOf(" ");
  if (verbEnd < 0) throw new PolicyTextError(`rule has no action: ${JSON.stringify(line)}`);
  const verb = line.slice(0, verbEnd);
  if (verb !== "ALLOW" && verb !== "FORBID") {
    throw new PolicyTextError(`unknown rule verb ${JSON.stringify(verb)}`);
  }
  const rest = line.slice(verbEnd + 1);
  const actionEnd = rest.indexOf(" ");
  const action = actionEnd < 0 ? rest : rest.slice(0, actionEnd);
  if (!ACTIONS.has(action)) {
    throw new PolicyTextError(`unknown action ${JSON.stringify(action)}`);
  }
  if (actionEnd < 0) return [verb, { action, constraints: [] }];
  const tail = rest.slice(actionEnd + 1);
  if (!tail.startsWith("IF ")) {
    throw new PolicyTextError(`expected IF after action: ${JSON.stringify(tail)}`);
  }
  return [verb, { action, constraints: parseConstraints(tail.slice(3)) }];
}

function parseConstraints(text: string): ConstraintWire[] {
  const out: ConstraintWire[] = [];
  let pos = 0;
  for (;;) {
    let space = text.indexOf(" ", pos);
    if (space < 0) throw new PolicyTextError(`constraint missing operator: ${text.slice(pos)}`);
    const left = text.slice(pos, space);
    if (!LEFT_OPERANDS.has(left)) {
      throw new PolicyTextError(`unknown left operand ${JSON.stringify(left)}`);
    }
    pos = space + 1;
    space = text.indexOf(" ", pos);
    if (space < 0) throw new PolicyTextError(`constraint missing right operand: ${text.slice(pos)}`);
    const op = text.slice(pos, space);
    if (!OPERATORS.has(op)) {
      throw new PolicyTextError(`unknown operator ${JSON.stringify(op)}`);
    }
    pos = space + 1;
    const [right, next] = scanRight(text, pos);
    out.push({ left, op, right });
    pos = next;
    if (pos === text.length) return out;
    if (!text.startsWith(" AND ", pos)) {
      throw new PolicyTextError(`junk after constraint: ${JSON.stringify(text.slice(pos))}`);
    }
    pos += " AND ".length;
  }
}

/** Scans one JSON value (string, number, or flat array) starting at pos. */
function scanRight(text: string, pos: number): [RightOperand, number] {
  const first = text[pos];
  if (first === undefined) throw new PolicyTextError("constraint missing right operand");
  let end: number;
  if (first === '"') {
    end = scanString(text, pos);
  } else if (first === "[") {
    end = scanArray(text, pos);
  } else {
    end = pos;
    while (end < text.length && /[-+0-9.eE]/.test(text[end]!)) end += 1;
    if (end === pos) throw new PolicyTextError(`bad right operand at ${JSON.stringify(text.slice(pos))}`);
  }
  const token = text.slice(pos, end);
  let value: unknown;
  try {
    value = JSON.parse(token);
  } catch {
    throw new PolicyTextError(`right operand is not a JSON value: ${token}`);
  }
  if (!isRightOperand(value)) {
    throw new PolicyTextError(`right operand has an unsupported shape: ${token}`);
  }
  return [value, end];
}

function scanString(text: string, pos: number): number {
  let i = pos + 1;
  while (i < text.length) {
    const ch = text[i];
    if (ch === "\\") i += 2;
    else if (ch === '"') return i + 1;
    else i += 1;
  }
  throw new PolicyTextError("unterminated string in right operand");
}

function scanArray(text: string, pos: number): number {
  let i = pos + 1;
  let inString = false;
  while (i < text.length) {
    const ch = text[i];
    if (inString) {
      if (ch === "\\") i += 1;
      else if (ch === '"') inString = false;
    } else if (ch === '"') {
      inString = true;
    } else if (ch === "]") {
      return i + 1;
    }
    i += 1;
  }
  throw new PolicyTextError("unterminated array in right operand");
}

function isRightOperand(value: unknown): value is RightOperand {
  if (typeof value === "string" || typeof value === "number") return true;
  return (
    Array.isArray(value) &&
    value.every((item) => typeof item === "string" || typeof item === "number")
  );
}
