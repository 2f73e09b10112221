"""Plan tree <-> triple graph conversion under the procedure vocabulary.

Per plan: rdf:type p-plan:Plan, rdfs:label, kh-p:startsWith / kh-p:endsWith.
Per step: rdf:type p-plan:Step, rdfs:label, rdfs:comment (omitted when the
body is empty), kh-p:isStepOfPlan, kh-p:nextStep (omitted on the last step
of its chain) and kh-p:isDecomposedAsPlan for decomposed steps. Step
annotations have no vocabulary in this profile and are not serialized.
"""

from __future__ import annotations

from .. import model
from ..model import Plan, Step, Violation
from .terms import (
    ENDS_WITH,
    IS_DECOMPOSED_AS_PLAN,
    IS_STEP_OF_PLAN,
    NEXT_STEP,
    PPLAN_PLAN,
    PPLAN_STEP,
    RDFS_COMMENT,
    RDFS_LABEL,
    RDF_TYPE,
    STARTS_WITH,
    Graph,
    Iri,
    Literal,
    Triple,
    instance_iri,
    make_graph,
)


class InvalidPlan(Exception):
    def __init__(self, violations: list[Violation]):
        super().__init__("; ".join(f"{v.path}: {v.message}" for v in violations))
        self.violations = violations


class GraphStructureError(Exception):
    pass


class BrokenChain(GraphStructureError):
    pass


class MissingAnchor(GraphStructureError):
    pass


class DanglingReference(GraphStructureError):
    pass


def to_triples(plan: Plan) -> Graph:
    """Emit the lossless triple image of a valid plan."""
    violations = model.validate(plan)
    if violations:
        raise InvalidPlan(violations)

    triples: list[Triple] = []

    def emit_plan(p: Plan) -> None:
        subject = instance_iri(p.id)
        triples.append(Triple(subject, RDF_TYPE, PPLAN_PLAN))
        triples.append(Triple(subject, RDFS_LABEL, Literal(p.label)))
        triples.append(Triple(subject, STARTS_WITH, instance_iri(p.steps[0].id)))
        triples.append(Triple(subject, ENDS_WITH, instance_iri(p.steps[-1].id)))
        for i, step in enumerate(p.steps):
            emit_step(step, p, p.steps[i + 1] if i + 1 < len(p.steps) else None)

    def emit_step(step: Step, parent: Plan, successor: Step | None) -> None:
        subject = instance_iri(step.id)
        triples.append(Triple(subject, RDF_TYPE, PPLAN_STEP))
        triples.append(Triple(subject, RDFS_LABEL, Literal(step.label)))
        if step.body:
            triples.append(Triple(subject, RDFS_COMMENT, Literal(step.body)))
        triples.append(Triple(subject, IS_STEP_OF_PLAN, instance_iri(parent.id)))
        if successor is not None:
            triples.append(Triple(subject, NEXT_STEP, instance_iri(successor.id)))
        if step.sub_plan is not None:
            triples.append(Triple(subject, IS_DECOMPOSED_AS_PLAN, instance_iri(step.sub_plan.id)))
            emit_plan(step.sub_plan)

    emit_plan(plan)
    return make_graph(triples)


def _literal_of(graph: Graph, subject: Iri, predicate: Iri) -> str:
    for obj in graph.objects(subject, predicate):
        if isinstance(obj, Literal):
            return obj.text
    return ""


def _iri_of(graph: Graph, subject: Iri, predicate: Iri) -> Iri | None:
    objs = [o for o in graph.objects(subject, predicate) if isinstance(o, Iri)]
    if len(objs) > 1:
        raise BrokenChain(f"{subject.value} has {len(objs)} values for {predicate.local_name()}")
    return objs[0] if objs else None


def from_triples(graph: Graph) -> list[Plan]:
    """Rebuild every top-level plan from its triple image.

    Steps are ordered by walking kh-p:nextStep from the kh-p:startsWith
    target; the walk must cover every member step and end exactly at the
    kh-p:endsWith target. Raises MissingAnchor, BrokenChain, or
    DanglingReference on malformed graphs.
    """
    typed: dict[Iri, set[Iri]] = {}
    for t in graph.triples:
        if t.predicate == RDF_TYPE and isinstance(t.object, Iri):
            typed.setdefault(t.subject, set()).add(t.object)

    plans = {s for s, types in typed.items() if PPLAN_PLAN in types}
    steps = {s for s, types in typed.items() if PPLAN_STEP in types}
    decomposed = set()
    for t in graph.triples:
        if t.predicate == IS_DECOMPOSED_AS_PLAN:
            if t.object not in plans:
                raise DanglingReference(f"{t.object.value} is decomposed into but never typed as a plan")
            decomposed.add(t.object)

    members: dict[Iri, list[Iri]] = {}
    for t in graph.triples:
        if t.predicate == IS_STEP_OF_PLAN and isinstance(t.object, Iri):
            members.setdefault(t.object, []).append(t.subject)

    building: set[Iri] = set()

    def build_plan(plan_iri: Iri) -> Plan:
        if plan_iri in building:
            raise BrokenChain(f"decomposition cycle through {plan_iri.value}")
        building.add(plan_iri)
        start = _iri_of(graph, plan_iri, STARTS_WITH)
        end = _iri_of(graph, plan_iri, ENDS_WITH)
        if start is None or end is None:
            raise MissingAnchor(f"{plan_iri.value} lacks startsWith or endsWith")
        member_set = set(members.get(plan_iri, ()))

        ordered: list[Step] = []
        visited: set[Iri] = set()
        cur: Iri | None = start
        while cur is not None:
            if cur in visited:
                raise BrokenChain(f"nextStep cycle at {cur.value}")
            if cur not in steps:
                raise DanglingReference(f"{cur.value} is referenced but never typed as a step")
            if cur not in member_set:
                raise BrokenChain(f"{cur.value} is on the chain of {plan_iri.value} but not one of its steps")
            visited.add(cur)
            sub_iri = _iri_of(graph, cur, IS_DECOMPOSED_AS_PLAN)
            sub_plan = build_plan(sub_iri) if sub_iri is not None else None
            ordered.append(
                Step(
                    id=cur.local_name(),
                    label=_literal_of(graph, cur, RDFS_LABEL),
                    body=_literal_of(graph, cur, RDFS_COMMENT),
                    sub_plan=sub_plan,
                )
            )
            if cur == end:
                # The final step has no successors by definition.
                if _iri_of(graph, cur, NEXT_STEP) is not None:
                    raise BrokenChain(f"endsWith step {cur.value} has a nextStep successor")
                cur = None
            else:
                cur = _iri_of(graph, cur, NEXT_STEP)
                if cur is None:
                    raise BrokenChain(f"chain of {plan_iri.value} stops before reaching its endsWith step")
        if member_set - visited:
            missing = sorted(i.value for i in member_set - visited)
            raise BrokenChain(f"chain of {plan_iri.value} never reaches: {', '.join(missing)}")
        building.discard(plan_iri)
        return Plan(
            id=plan_iri.local_name(),
            label=_literal_of(graph, plan_iri, RDFS_LABEL),
            steps=tuple(ordered),
        )

    top = sorted((p for p in plans if p not in decomposed), key=lambda i: i.value)
    return [build_plan(p) for p in top]
