"""Deterministic answers to the five question-template types, straight
from plan structure. These are the ground truth the evaluation harness
scores model answers against, and the checker for comparison reasoning
across multi-procedure contexts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import Plan, Step, containing_plan, find_step, flatten


class CountMode(str, Enum):
    MAIN = "main"  # depth-0 steps only
    RECURSIVE = "recursive"  # every step at every depth


class UnknownStep(Exception):
    pass


class TieDetected(Exception):
    """Two plans share the maximum count: the comparison is ill-posed."""


@dataclass(frozen=True)
class ComparisonContext:
    name: str
    plans: tuple[Plan, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "plans", tuple(self.plans))


@dataclass(frozen=True)
class ListItem:
    label: str
    children: tuple[ListItem, ...] = ()


@dataclass(frozen=True)
class ListAnswer:
    items: tuple[ListItem, ...]

    def flat_labels(self) -> list[str]:
        out: list[str] = []

        def walk(item: ListItem) -> None:
            out.append(item.label)
            for child in item.children:
                walk(child)

        for item in self.items:
            walk(item)
        return out


@dataclass(frozen=True)
class CountAnswer:
    value: int


@dataclass(frozen=True)
class ComparisonAnswer:
    plan_id: str
    plan_label: str
    count: int
    context_name: str


@dataclass(frozen=True)
class NestedAnswer:
    """Substep labels in order, or None for a simple step ("no substeps")."""

    substeps: tuple[str, ...] | None

    @property
    def has_substeps(self) -> bool:
        return self.substeps is not None


NO_SUBSTEPS = NestedAnswer(None)


@dataclass(frozen=True)
class SequenceAnswer:
    """Label of the next step at the same level, or None at end of plan."""

    next_label: str | None

    @property
    def is_end_of_plan(self) -> bool:
        return self.next_label is None


END_OF_PLAN = SequenceAnswer(None)


def answer_list(plan: Plan) -> ListAnswer:
    """Template 1: the full step/substep listing in traversal order."""

    def item(step: Step) -> ListItem:
        children = tuple(item(s) for s in step.sub_plan.steps) if step.sub_plan else ()
        return ListItem(step.label, children)

    return ListAnswer(tuple(item(s) for s in plan.steps))


def answer_count(plan: Plan, mode: CountMode = CountMode.MAIN) -> CountAnswer:
    """Template 2: how many steps; main counts depth 0, recursive counts all."""
    if mode is CountMode.MAIN:
        return CountAnswer(len(plan.steps))
    return CountAnswer(len(flatten(plan)))


def answer_comparison(
    contexts: list[ComparisonContext] | tuple[ComparisonContext, ...],
    mode: CountMode = CountMode.MAIN,
) -> ComparisonAnswer:
    """Template 3: the single plan with the most steps across all contexts.

    The winner is independent of how plans are grouped into contexts. A
    shared maximum raises TieDetected so the harness can exclude the
    question instead of picking arbitrarily.
    """
    if len(contexts) < 2:
        raise ValueError("comparison needs at least two contexts")
    scored: list[tuple[int, str, Plan]] = []
    for ctx in contexts:
        if not ctx.plans:
            raise ValueError(f"context {ctx.name!r} has no plans")
        for plan in ctx.plans:
            scored.append((answer_count(plan, mode).value, ctx.name, plan))
    best = max(count for count, _, _ in scored)
    winners = [(name, plan) for count, name, plan in scored if count == best]
    if len(winners) > 1:
        labels = ", ".join(plan.label or plan.id for _, plan in winners)
        raise TieDetected(f"{len(winners)} plans share the maximum of {best} steps: {labels}")
    name, plan = winners[0]
    return ComparisonAnswer(plan_id=plan.id, plan_label=plan.label, count=best, context_name=name)


def answer_nested(plan: Plan, step_id: str) -> NestedAnswer:
    """Template 4: the substeps of one step, or the no-substeps marker."""
    step = find_step(plan, step_id)
    if step is None:
        raise UnknownStep(f"no step {step_id!r} in plan {plan.id!r}")
    if step.sub_plan is None:
        return NO_SUBSTEPS
    return NestedAnswer(tuple(s.label for s in step.sub_plan.steps))


def answer_sequence(plan: Plan, step_id: str) -> SequenceAnswer:
    """Template 5: the next step at the same nesting level, or end of plan."""
    owner = containing_plan(plan, step_id)
    if owner is None:
        raise UnknownStep(f"no step {step_id!r} in plan {plan.id!r}")
    for i, step in enumerate(owner.steps):
        if step.id == step_id:
            if i + 1 < len(owner.steps):
                return SequenceAnswer(owner.steps[i + 1].label)
            return END_OF_PLAN
    raise AssertionError("containing_plan returned a plan without the step")
