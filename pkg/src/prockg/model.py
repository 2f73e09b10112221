"""Domain types for procedure trees: plans, ordered steps, and decomposition.

A plan is a non-empty ordered sequence of steps; a step may be decomposed
into a sub-plan, recursively. All types are immutable after construction,
so they are safe to share between threads. Structural rules are enforced
by :func:`validate`, which reports violations as data instead of raising.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

ID_TOKEN = re.compile(r"[A-Za-z0-9_]+")


class QuantifierKind(str, Enum):
    TEMPORAL = "temporal"
    SPATIAL = "spatial"
    QUANTITATIVE = "quantitative"


@dataclass(frozen=True)
class Quantifier:
    kind: QuantifierKind
    value: str


@dataclass(frozen=True)
class StepAnnotation:
    """Optional semantic attributes of a simple step.

    Nothing in this package populates these automatically; the type exists
    so hand-curated annotations have a place to live.
    """

    actions: tuple[str, ...] = ()
    component: str | None = None
    tool: str | None = None
    product_or_system: str | None = None
    quantifiers: tuple[Quantifier, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "quantifiers", tuple(self.quantifiers))


@dataclass(frozen=True)
class Step:
    """One activity in a plan. `label` is the short title, `body` the prose."""

    id: str
    label: str
    body: str = ""
    sub_plan: Plan | None = None
    annotation: StepAnnotation | None = None


@dataclass(frozen=True)
class Plan:
    """An ordered, non-empty sequence of steps executed first to last."""

    id: str
    label: str
    steps: tuple[Step, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))


class ProcedureKind(Enum):
    ATOMIC = "atomic"
    COMPOSED = "composed"


@dataclass(frozen=True)
class Violation:
    """One broken invariant, with a path to the offending node."""

    path: str
    code: str
    message: str


def validate(plan: Plan) -> list[Violation]:
    """Check every structural invariant; an empty report means valid.

    Checked: identifier tokens, non-empty plans, forest-wide id uniqueness,
    and acyclic decomposition. Violations are data, not exceptions, so a
    caller can report all of them at once.
    """
    report: list[Violation] = []
    seen_ids: dict[str, str] = {}  # id -> first path that used it
    on_stack: set[int] = set()

    def check_id(token: str, path: str) -> None:
        if not ID_TOKEN.fullmatch(token or ""):
            report.append(Violation(path, "bad-id", f"id {token!r} is not a valid identifier token"))
            return
        if token in seen_ids:
            report.append(Violation(path, "duplicate-id", f"id {token!r} already used at {seen_ids[token]}"))
        else:
            seen_ids[token] = path

    def walk(p: Plan, path: str) -> None:
        if id(p) in on_stack:
            report.append(Violation(path, "decomposition-cycle", f"plan {p.id!r} contains itself as a sub-plan"))
            return
        on_stack.add(id(p))
        check_id(p.id, path)
        if not p.steps:
            report.append(Violation(path, "empty-plan", f"plan {p.id!r} has no steps"))
        for step in p.steps:
            step_path = f"{path}/{step.id}"
            check_id(step.id, step_path)
            if step.sub_plan is not None:
                walk(step.sub_plan, f"{step_path}/{step.sub_plan.id}")
        on_stack.discard(id(p))

    walk(plan, plan.id)
    return report


def is_valid(plan: Plan) -> bool:
    return not validate(plan)


def classify(plan: Plan) -> ProcedureKind:
    """Atomic when every step is simple, composed when any step decomposes."""
    if any(step.sub_plan is not None for step in plan.steps):
        return ProcedureKind.COMPOSED
    return ProcedureKind.ATOMIC


def flatten(plan: Plan) -> list[tuple[int, Step]]:
    """Depth-first pre-order traversal as (depth, step) pairs.

    Main steps come out at depth 0 in chain order; each decomposed step is
    immediately followed by its substeps at depth + 1.
    """
    out: list[tuple[int, Step]] = []

    def walk(p: Plan, depth: int) -> None:
        for step in p.steps:
            out.append((depth, step))
            if step.sub_plan is not None:
                walk(step.sub_plan, depth + 1)

    walk(plan, 0)
    return out


def find_step(plan: Plan, step_id: str) -> Step | None:
    """Locate a step by id at any depth; None when absent."""
    for _, step in flatten(plan):
        if step.id == step_id:
            return step
    return None


def containing_plan(plan: Plan, step_id: str) -> Plan | None:
    """The (sub-)plan whose direct steps include `step_id`, or None."""
    for step in plan.steps:
        if step.id == step_id:
            return plan
    for step in plan.steps:
        if step.sub_plan is not None:
            found = containing_plan(step.sub_plan, step_id)
            if found is not None:
                return found
    return None
