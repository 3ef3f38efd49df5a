/** Counter-offer diff: what the provider's counter changed versus the
 * original offer, constraint by constraint. */

import type { ConstraintWire, PolicyWire, RuleWire } from "./wire.js";

export type Section = "permission" | "prohibition";

export interface ConstraintDelta {
  section: Section;
  action: string;
  constraint: ConstraintWire;
}

export interface ConstraintChange {
  section: Section;
  action: string;
  before: ConstraintWire;
  after: ConstraintWire;
}

export interface PolicyDiff {
  added: ConstraintDelta[];
  removed: ConstraintDelta[];
  changed: ConstraintChange[];
  addedActions: Array<{ section: Section; action: string }>;
  removedActions: Array<{ section: Section; action: string }>;
}

export function isEmptyDiff(diff: PolicyDiff): boolean {
  return (
    diff.added.length === 0 &&
    diff.removed.length === 0 &&
    diff.changed.length === 0 &&
    diff.addedActions.length === 0 &&
    diff.removedActions.length === 0
  );
}

export function counterOfferDiff(original: PolicyWire, counter: PolicyWire): PolicyDiff {
  const diff: PolicyDiff = {
    added: [],
    removed: [],
    changed: [],
    addedActions: [],
    removedActions: [],
  };
  diffSection(diff, "permission", original.permissions, counter.permissions);
  diffSection(diff, "prohibition", original.prohibitions, counter.prohibitions);
  return diff;
}

function diffSection(diff: PolicyDiff, section: Section, before: RuleWire[], after: RuleWire[]): void {
  const beforeByAction = groupConstraints(before);
  const afterByAction = groupConstraints(after);
  for (const action of afterByAction.keys()) {
    if (!beforeByAction.has(action)) diff.addedActions.push({ section, action });
  }
  for (const action of beforeByAction.keys()) {
    if (!afterByAction.has(action)) diff.removedActions.push({ section, action });
  }
  for (const [action, afterConstraints] of afterByAction) {
    const beforeConstraints = beforeByAction.get(action);
    if (beforeConstraints === undefined) continue; // whole action already reported
    diffConstraints(diff, section, action, beforeConstraints, afterConstraints);
  }
}

function groupConstraints(rules: RuleWire[]): Map<string, ConstraintWire[]> {
  const grouped = new Map<string, ConstraintWire[]>();
  for (const rule of rules) {
    const bucket = grouped.get(rule.action) ?? [];
    bucket.push(...rule.constraints);
    grouped.set(rule.action, bucket);
  }
  return grouped;
}

function diffConstraints(
  diff: PolicyDiff,
  section: Section,
  action: string,
  before: ConstraintWire[],
  after: ConstraintWire[],
): void {
  const key = (c: ConstraintWire) => JSON.stringify([c.left, c.op, c.right]);
  const leftoverBefore = [...before];
  const leftoverAfter: ConstraintWire[] = [];
  for (const candidate of after) {
    const exact = leftoverBefore.findIndex((c) => key(c) === key(candidate));
    if (exact >= 0) leftoverBefore.splice(exact, 1);
    else leftoverAfter.push(candidate);
  }
  for (const candidate of leftoverAfter) {
    const related = leftoverBefore.findIndex((c) => c.left === candidate.left);
    if (related >= 0) {
      diff.changed.push({
        section,
        action,
        before: leftoverBefore[related]!,
        after: candidate,
      });
      leftoverBefore.splice(related, 1);
    } else {
      diff.added.push({ section, action, constraint: candidate });
    }
  }
  for (const constraint of leftoverBefore) {
    diff.removed.push({ section, action, constraint });
  }
}
