"""Independent brute-force policy evaluator used as the test oracle.

This is a direct transcription of the decision predicate:

    permit  iff  (exists permission r: r.action = ctx.action and every
                  constraint of r holds)
             and (no prohibition r: r.action = ctx.action and every
                  constraint of r holds)

with prohibitions dominating and deny reasons "prohibited" /
"no-matching-permission". It shares only the data types with the engine,
never its logic, and deliberately avoids short-circuiting: every constraint
of every rule is evaluated into a list before any aggregation.
"""

from __future__ import annotations

from dali.policy import Constraint, EvaluationContext, LeftOperand, Operator, Rule, UsagePolicy


def oracle_constraint(c: Constraint, ctx: EvaluationContext) -> bool:
    if c.left is LeftOperand.PURPOSE:
        actual = ctx.purpose
    elif c.left is LeftOperand.PARTICIPANT:
        actual = ctx.requester.value
    elif c.left is LeftOperand.DATE_TIME:
        actual = ctx.now
    elif c.left is LeftOperand.USE_COUNT:
        actual = ctx.prior_use_count
    else:  # pragma: no cover - closed enumeration
        raise AssertionError(c.left)

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
    if c.op is Operator.IN:
        return actual in list(c.right)
    raise AssertionError(c.op)  # pragma: no cover


def _rule_matches(rule: Rule, ctx: EvaluationContext) -> bool:
    if rule.action != ctx.action:
        return False
    results = [oracle_constraint(c, ctx) for c in rule.constraints]
    return all(results)


def oracle_evaluate(policy: UsagePolicy, ctx: EvaluationContext) -> str:
    """Return "permit", "deny:prohibited", or "deny:no-matching-permission"."""
    permission_hits = [_rule_matches(r, ctx) for r in policy.permissions]
    prohibition_hits = [_rule_matches(r, ctx) for r in policy.prohibitions]
    if any(prohibition_hits):
        return "deny:prohibited"
    if any(permission_hits):
        return "permit"
    return "deny:no-matching-permission"
