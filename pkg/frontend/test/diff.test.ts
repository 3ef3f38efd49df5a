import { describe, expect, test } from "vitest";

import { counterOfferDiff, isEmptyDiff } from "../src/diff.js";
import type { PolicyWire } from "../src/wire.js";

const RESEARCH: PolicyWire = {
  permissions: [
    { action: "use", constraints: [{ left: "purpose", op: "eq", right: "research" }] },
    { action: "transfer", constraints: [{ left: "purpose", op: "eq", right: "research" }] },
  ],
  prohibitions: [{ action: "re-share", constraints: [] }],
};

function countered(limit: number): PolicyWire {
  return {
    permissions: [
      { action: "use", constraints: [{ left: "purpose", op: "eq", right: "research" }] },
      {
        action: "transfer",
        constraints: [
          { left: "purpose", op: "eq", right: "research" },
          { left: "useCount", op: "lt", right: limit },
        ],
      },
    ],
    prohibitions: [{ action: "re-share", constraints: [] }],
  };
}

describe("counterOfferDiff", () => {
  test("default counter adds exactly the use cap", () => {
    const diff = counterOfferDiff(RESEARCH, countered(5));
    expect(diff.added).toEqual([
      {
        section: "permission",
        action: "transfer",
        constraint: { left: "useCount", op: "lt", right: 5 },
      },
    ]);
    expect(diff.removed).toEqual([]);
    expect(diff.changed).toEqual([]);
    expect(diff.addedActions).toEqual([]);
    expect(diff.removedActions).toEqual([]);
    expect(isEmptyDiff(diff)).toBe(false);
  });

  test("identical policies diff to empty", () => {
    const diff = counterOfferDiff(RESEARCH, RESEARCH);
    expect(isEmptyDiff(diff)).toBe(true);
  });

  test("tightened bound pairs as a change on the same left operand", () => {
    const diff = counterOfferDiff(countered(5), countered(2));
    expect(diff.added).toEqual([]);
    expect(diff.removed).toEqual([]);
    expect(diff.changed).toEqual([
      {
        section: "permission",
        action: "transfer",
        before: { left: "useCount", op: "lt", right: 5 },
        after: { left: "useCount", op: "lt", right: 2 },
      },
    ]);
  });

  test("dropped constraint reports as removed", () => {
    const diff = counterOfferDiff(countered(5), RESEARCH);
    expect(diff.added).toEqual([]);
    expect(diff.changed).toEqual([]);
    expect(diff.removed).toEqual([
      {
        section: "permission",
        action: "transfer",
        constraint: { left: "useCount", op: "lt", right: 5 },
      },
    ]);
  });

  test("whole new rule reports as an added action, not constraint noise", () => {
    const counter: PolicyWire = {
      permissions: [
        ...RESEARCH.permissions,
        { action: "re-share", constraints: [{ left: "purpose", op: "eq", right: "audit" }] },
      ],
      prohibitions: [],
    };
    const diff = counterOfferDiff(RESEARCH, counter);
    expect(diff.addedActions).toEqual([{ section: "permission", action: "re-share" }]);
    expect(diff.removedActions).toEqual([{ section: "prohibition", action: "re-share" }]);
    expect(diff.added).toEqual([]);
    expect(diff.removed).toEqual([]);
  });

  test("prohibition constraints diff under the prohibition section", () => {
    const before: PolicyWire = {
      permissions: [],
      prohibitions: [
        { action: "re-share", constraints: [{ left: "useCount", op: "gt", right: 1 }] },
      ],
    };
    const after: PolicyWire = {
      permissions: [],
      prohibitions: [{ action: "re-share", constraints: [] }],
    };
    const diff = counterOfferDiff(before, after);
    expect(diff.removed).toEqual([
      {
        section: "prohibition",
        action: "re-share",
        constraint: { left: "useCount", op: "gt", right: 1 },
      },
    ]);
  });

  test("same constraints split across duplicate rules still diff clean", () => {
    const split: PolicyWire = {
      permissions: [
        { action: "transfer", constraints: [{ left: "purpose", op: "eq", right: "research" }] },
        { action: "transfer", constraints: [{ left: "useCount", op: "lt", right: 5 }] },
        { action: "use", constraints: [{ left: "purpose", op: "eq", right: "research" }] },
      ],
      prohibitions: [{ action: "re-share", constraints: [] }],
    };
    expect(isEmptyDiff(counterOfferDiff(countered(5), split))).toBe(true);
  });
});
