"""Triple-graph primitives and the procedure vocabulary.

IRIs are stored fully expanded; prefix contraction only happens at
serialization time, which makes graphs that differ merely in
prefixed-name-vs-full-URL spelling compare equal once normalized.
Literal objects occur only with rdfs:label / rdfs:comment in this profile.
"""

from __future__ import annotations

from dataclasses import dataclass

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
PPLAN_NS = "http://purl.org/net/p-plan#"
KHP_NS = "https://knowledge.c-innovationhub.com/k-hub/procedure#"
# The instance namespace has no published IRI; this one is fixed by this
# package and documented in the README.
KHP_INSTANCE_NS = "https://knowledge.c-innovationhub.com/k-hub/procedure/instance#"

STANDARD_PREFIXES: dict[str, str] = {
    "rdf": RDF_NS,
    "rdfs": RDFS_NS,
    "p-plan": PPLAN_NS,
    "kh-p": KHP_NS,
    "kh-p-instance": KHP_INSTANCE_NS,
}


@dataclass(frozen=True)
class Iri:
    value: str

    def local_name(self) -> str:
        """Fragment after '#', else after the last '/'."""
        if "#" in self.value:
            return self.value.rsplit("#", 1)[1]
        return self.value.rsplit("/", 1)[-1]


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Iri | Literal


@dataclass(frozen=True)
class Graph:
    triples: frozenset[Triple]
    namespaces: tuple[tuple[str, str], ...]  # (prefix, iri) pairs, sorted

    def __post_init__(self) -> None:
        object.__setattr__(self, "triples", frozenset(self.triples))
        object.__setattr__(self, "namespaces", tuple(sorted(dict(self.namespaces).items())))

    @property
    def prefix_map(self) -> dict[str, str]:
        return dict(self.namespaces)

    def objects(self, subject: Iri, predicate: Iri) -> list[Iri | Literal]:
        return [t.object for t in self.triples if t.subject == subject and t.predicate == predicate]


def make_graph(triples, namespaces: dict[str, str] | None = None) -> Graph:
    ns = STANDARD_PREFIXES if namespaces is None else namespaces
    return Graph(frozenset(triples), tuple(ns.items()))


# Vocabulary terms.
RDF_TYPE = Iri(RDF_NS + "type")
RDFS_LABEL = Iri(RDFS_NS + "label")
RDFS_COMMENT = Iri(RDFS_NS + "comment")
PPLAN_PLAN = Iri(PPLAN_NS + "Plan")
PPLAN_STEP = Iri(PPLAN_NS + "Step")
IS_STEP_OF_PLAN = Iri(PPLAN_NS + "isStepOfPlan")
NEXT_STEP = Iri(KHP_NS + "nextStep")
STARTS_WITH = Iri(KHP_NS + "startsWith")
ENDS_WITH = Iri(KHP_NS + "endsWith")
IS_DECOMPOSED_AS_PLAN = Iri(KHP_NS + "isDecomposedAsPlan")

# Serialization order for predicates within one subject block.
PREDICATE_ORDER: tuple[Iri, ...] = (
    RDF_TYPE,
    RDFS_LABEL,
    RDFS_COMMENT,
    NEXT_STEP,
    IS_STEP_OF_PLAN,
    IS_DECOMPOSED_AS_PLAN,
    STARTS_WITH,
    ENDS_WITH,
)


def instance_iri(local_id: str) -> Iri:
    return Iri(KHP_INSTANCE_NS + local_id)


def expand(name: str, prefixes: dict[str, str]) -> Iri:
    """Resolve a prefixed name against `prefixes`, falling back to the
    standard table; absolute IRIs pass through untouched."""
    if "://" in name:
        return Iri(name)
    if ":" in name:
        prefix, local = name.split(":", 1)
        base = prefixes.get(prefix) or STANDARD_PREFIXES.get(prefix)
        if base is None:
            raise KeyError(f"unknown prefix {prefix!r}")
        return Iri(base + local)
    raise ValueError(f"{name!r} is neither an absolute IRI nor a prefixed name")


def contract(iri: Iri, prefixes: dict[str, str]) -> str | None:
    """Prefixed form of `iri` under `prefixes`, or None if no prefix fits."""
    best: str | None = None
    best_len = -1
    for prefix, base in prefixes.items():
        if iri.value.startswith(base) and len(base) > best_len:
            local = iri.value[len(base) :]
            if local and "/" not in local and "#" not in local:
                best = f"{prefix}:{local}"
                best_len = len(base)
    return best


def normalize(graph: Graph) -> Graph:
    """Canonical form: deduplicated triples under the standard prefix table.

    Since IRIs are stored expanded, normalization is a namespace-table swap;
    surface differences (full URL vs prefixed name) vanish here. Idempotent.
    """
    return make_graph(graph.triples, STANDARD_PREFIXES)


def subject_order(graph: Graph) -> list[Iri]:
    """Deterministic subject ordering: depth-first plan traversal, then id.

    Top-level plans (not targets of isDecomposedAsPlan) come first, each
    followed by its step chain; a decomposed step is followed by its
    sub-plan's block. Subjects outside any plan structure are appended in
    IRI order.
    """
    subjects = {t.subject for t in graph.triples}
    typed_plans = {t.subject for t in graph.triples if t.predicate == RDF_TYPE and t.object == PPLAN_PLAN}
    decomposed = {t.object for t in graph.triples if t.predicate == IS_DECOMPOSED_AS_PLAN}
    top = sorted((p for p in typed_plans if p not in decomposed), key=lambda i: i.value)

    ordered: list[Iri] = []
    seen: set[Iri] = set()

    def first_of(subject: Iri, predicate: Iri) -> Iri | None:
        objs = [o for o in graph.objects(subject, predicate) if isinstance(o, Iri)]
        return min(objs, key=lambda i: i.value) if objs else None

    def visit_plan(plan: Iri) -> None:
        if plan in seen:
            return
        seen.add(plan)
        ordered.append(plan)
        step = first_of(plan, STARTS_WITH)
        guard = 0
        while step is not None and step not in seen and guard <= len(subjects) + 1:
            guard += 1
            seen.add(step)
            if step in subjects:
                ordered.append(step)
            sub = first_of(step, IS_DECOMPOSED_AS_PLAN)
            if sub is not None and sub in typed_plans:
                visit_plan(sub)
            step = first_of(step, NEXT_STEP)

    for plan in top:
        visit_plan(plan)
    ordered.extend(sorted((s for s in subjects if s not in seen), key=lambda i: i.value))
    return ordered
