"""Usage-policy model and deterministic evaluation engine.

A policy is a set of permission rules and prohibition rules over the actions
{use, transfer, re-share}. Constraints within a rule are conjunctive; rules
within the permission list are disjunctive; a matching prohibition always
dominates. The evaluator is pure and stateless: usage counts and the clock
arrive through the EvaluationContext.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from .canonical import format_timestamp, parse_timestamp
from .model import ParticipantId


class Action(Enum):
    USE = "use"
    TRANSFER = "transfer"
    RE_SHARE = "re-share"


class Operator(Enum):
    EQ = "eq"
    NEQ = "neq"
    LT = "lt"
    LTEQ = "lteq"
    GT = "gt"
    GTEQ = "gteq"
    IN = "in"


class LeftOperand(Enum):
    PURPOSE = "purpose"
    PARTICIPANT = "participant"
    DATE_TIME = "dateTime"
    USE_COUNT = "useCount"


_ORDER_OPS = (Operator.EQ, Operator.NEQ, Operator.LT, Operator.LTEQ, Operator.GT, Operator.GTEQ)

RightValue = Union[str, int, tuple]


@dataclass(frozen=True)
class Constraint:
    """One condition: <left> <op> <right>.

    right is a string for purpose/participant, an integer for useCount,
    a UTC-seconds timestamp for dateTime, or a tuple of strings with `in`.
    """

    left: LeftOperand
    op: Operator
    right: RightValue

    def to_wire(self) -> dict:
        if self.left is LeftOperand.DATE_TIME:
            right = format_timestamp(self.right)
        elif isinstance(self.right, tuple):
            right = list(self.right)
        else:
            right = self.right
        return {"left": self.left.value, "op": self.op.value, "right": right}

    @classmethod
    def from_wire(cls, data: dict) -> "Constraint":
        left = LeftOperand(data["left"])
        op = Operator(data["op"])
        right = data["right"]
        if left is LeftOperand.DATE_TIME:
            right = parse_timestamp(right)
        elif isinstance(right, list):
            right = tuple(right)
        return cls(left=left, op=op, right=right)


@dataclass(frozen=True)
class Rule:
    """An action plus conjunctive constraints; empty constraints = unconditional."""

    action: Action
    constraints: tuple = ()

    def to_wire(self) -> dict:
        return {
            "action": self.action.value,
            "constraints": [c.to_wire() for c in self.constraints],
        }

    @classmethod
    def from_wire(cls, data: dict) -> "Rule":
        return cls(
            action=Action(data["action"]),
            constraints=tuple(Constraint.from_wire(c) for c in data["constraints"]),
        )


@dataclass(frozen=True)
class UsagePolicy:
    permissions: tuple = ()
    prohibitions: tuple = ()

    def to_wire(self) -> dict:
        return {
            "permissions": [r.to_wire() for r in self.permissions],
            "prohibitions": [r.to_wire() for r in self.prohibitions],
        }

    @classmethod
    def from_wire(cls, data: dict) -> "UsagePolicy":
        return cls(
            permissions=tuple(Rule.from_wire(r) for r in data["permissions"]),
            prohibitions=tuple(Rule.from_wire(r) for r in data["prohibitions"]),
        )


@dataclass(frozen=True)
class EvaluationContext:
    requester: ParticipantId
    action: Action
    purpose: str
    now: int
    prior_use_count: int

    def __post_init__(self):
        if self.prior_use_count < 0:
            raise ValueError("prior_use_count must be non-negative")


@dataclass(frozen=True)
class Decision:
    permit: bool
    reason: str = ""

    @classmethod
    def allow(cls) -> "Decision":
        return cls(permit=True)

    @classmethod
    def deny(cls, reason: str) -> "Decision":
        return cls(permit=False, reason=reason)

    def __str__(self) -> str:
        return "permit" if self.permit else f"deny:{self.reason}"


def _constraint_violations(c: Constraint) -> list:
    where = f"constraint({c.left.value} {c.op.value} {c.right!r})"
    out = []
    if c.left in (LeftOperand.PURPOSE, LeftOperand.PARTICIPANT):
        if c.op is Operator.IN:
            if not (isinstance(c.right, tuple) and all(isinstance(v, str) for v in c.right)):
                out.append(f"{where}: `in` requires a list of strings")
        elif c.op in (Operator.EQ, Operator.NEQ):
            if not isinstance(c.right, str):
                out.append(f"{where}: right must be a string")
        else:
            out.append(f"{where}: operator incompatible with {c.left.value}")
    elif c.left is LeftOperand.USE_COUNT:
        if c.op not in _ORDER_OPS:
            out.append(f"{where}: operator incompatible with useCount")
        elif not isinstance(c.right, int) or isinstance(c.right, bool):
            out.append(f"{where}: right must be an integer")
    elif c.left is LeftOperand.DATE_TIME:
        if c.op not in _ORDER_OPS:
            out.append(f"{where}: operator incompatible with dateTime")
        elif not isinstance(c.right, int) or isinstance(c.right, bool):
            out.append(f"{where}: right must be a timestamp")
    return out


def check_well_formed(policy: UsagePolicy) -> list:
    """Empty list iff every operator/right pairing is compatible with its left operand."""
    violations = []
    for rule in tuple(policy.permissions) + tuple(policy.prohibitions):
        for constraint in rule.constraints:
            violations.extend(_constraint_violations(constraint))
    return violations


def evaluate_constraint(c: Constraint, ctx: EvaluationContext) -> bool:
    """Total and deterministic; assumes c is well-formed."""
    if c.left is LeftOperand.PURPOSE:
        actual: RightValue = ctx.purpose
    elif c.left is LeftOperand.PARTICIPANT:
        actual = ctx.requester.value
    elif c.left is LeftOperand.DATE_TIME:
        actual = ctx.now
    else:
        actual = ctx.prior_use_count

    if c.op is Operator.EQ:
        return actual == c.right
    if c.op is Operator.NEQ:
        return actual != c.right
    if c.op is Operator.LT:
        return actual < c.right
    if c.op is Operator.LTEQ:
        return actual <= c.right
    if c.op is Operator.GT:
        return actual > c.right
    if c.op is Operator.GTEQ:
        return actual >= c.right
    return actual in c.right  # Operator.IN


def _matches(rule: Rule, ctx: EvaluationContext) -> bool:
    return rule.action == ctx.action and all(
        evaluate_constraint(c, ctx) for c in rule.constraints
    )


def evaluate(policy: UsagePolicy, ctx: EvaluationContext) -> Decision:
    """Decide permit/deny for a context. Prohibitions dominate permissions."""
    if any(_matches(rule, ctx) for rule in policy.prohibitions):
        return Decision.deny("prohibited")
    if any(_matches(rule, ctx) for rule in policy.permissions):
        return Decision.allow()
    return Decision.deny("no-matching-permission")
