"""Gold corpus loading and lint.

Layout: <root>/<domain>/<procedure-slug>/ holding manual.txt (the raw
manual chunk), gold.txt (reference extraction, enumerated text), gold.ttl
or gold.rdf (reference extraction as a graph), and answers.toml (expected
answers for the counting/comparison/nested/sequence templates).

Loading validates each entry and collects problems without aborting the
batch; lint additionally cross-checks the stated gold answers against the
in-graph oracle over the parsed gold plan, and the gold text against
itself under every ROUGE metric.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import rdfio, textparse
from .model import Plan, validate
from .oracle import (
    ComparisonContext,
    CountMode,
    TieDetected,
    answer_comparison,
    answer_count,
    answer_nested,
    answer_sequence,
)
from .rouge import score_all

DOMAINS = ("agriculture", "manufacturing", "medicine", "photography")

NO_SUBSTEPS_MARKER = "no substeps"
END_OF_PLAN_MARKER = "end of plan"


class EmptyCorpus(Exception):
    pass


@dataclass(frozen=True)
class GoldAnswers:
    count_mode: CountMode
    count: int
    comparison_partner: str  # "<domain>/<slug>" of the second context
    comparison_winner: str
    nested_step: str
    nested_substeps: tuple[str, ...] | None  # None = "no substeps"
    sequence_step: str
    sequence_next: str | None  # None = end of plan


@dataclass(frozen=True)
class CorpusEntry:
    domain: str
    slug: str
    procedure_name: str
    manual_path: Path
    gold_text_path: Path
    gold_ontology_path: Path
    manual_text: str
    gold_text: str
    gold_plan: Plan
    gold_ontology_text: str
    gold_graph: rdfio.Graph
    manual_plans: tuple[Plan, ...]  # every procedure parsed from the manual chunk
    answers: GoldAnswers

    @property
    def key(self) -> str:
        return f"{self.domain}/{self.slug}"


@dataclass(frozen=True)
class CorpusProblem:
    key: str
    message: str


@dataclass(frozen=True)
class CorpusLoadResult:
    entries: tuple[CorpusEntry, ...]
    problems: tuple[CorpusProblem, ...]


def _read_answers(path: Path) -> tuple[str, GoldAnswers]:
    data = tomllib.loads(path.read_text("utf-8"))
    name = data["procedure_name"]
    count = data["count"]
    comparison = data["comparison"]
    nested = data["nested"]
    sequence = data["sequence"]

    substeps = nested["substeps"]
    if isinstance(substeps, str):
        if substeps.strip().lower() != NO_SUBSTEPS_MARKER:
            raise ValueError(f"nested.substeps must be a list or {NO_SUBSTEPS_MARKER!r}")
        nested_substeps = None
    else:
        nested_substeps = tuple(str(s) for s in substeps)

    nxt = sequence["next"]
    sequence_next = None if str(nxt).strip().lower() == END_OF_PLAN_MARKER else str(nxt)

    return name, GoldAnswers(
        count_mode=CountMode(count.get("mode", "main")),
        count=int(count["value"]),
        comparison_partner=comparison["partner"],
        comparison_winner=comparison["winner"],
        nested_step=nested["step"],
        nested_substeps=nested_substeps,
        sequence_step=sequence["step"],
        sequence_next=sequence_next,
    )


def _parse_manual_plans(manual_text: str, config: textparse.ParseConfig) -> tuple[Plan, ...]:
    spans = textparse.detect_procedures(manual_text, config)
    plans = []
    for span in spans:
        plans.append(textparse.parse_procedure(textparse.span_text(manual_text, span), span.name, config))
    return tuple(plans)


def _load_entry(domain: str, entry_dir: Path, config: textparse.ParseConfig) -> CorpusEntry:
    manual_path = entry_dir / "manual.txt"
    gold_text_path = entry_dir / "gold.txt"
    answers_path = entry_dir / "answers.toml"
    ttl = entry_dir / "gold.ttl"
    rdf = entry_dir / "gold.rdf"
    gold_ontology_path = ttl if ttl.exists() else rdf
    for required in (manual_path, gold_text_path, answers_path, gold_ontology_path):
        if not required.exists():
            raise FileNotFoundError(f"missing {required.name}")

    procedure_name, answers = _read_answers(answers_path)
    manual_text = manual_path.read_text("utf-8")
    gold_text = gold_text_path.read_text("utf-8")
    gold_plan = textparse.parse_procedure(gold_text, procedure_name, config)
    violations = validate(gold_plan)
    if violations:
        raise ValueError(f"gold.txt parses to an invalid plan: {violations[0].message}")
    ontology_text = gold_ontology_path.read_text("utf-8")
    if gold_ontology_path.suffix == ".ttl":
        gold_graph = rdfio.read_turtle(ontology_text)
    else:
        gold_graph = rdfio.read_rdfxml(ontology_text)
    if not rdfio.from_triples(gold_graph):
        raise ValueError("gold ontology file holds no plan")
    manual_plans = _parse_manual_plans(manual_text, config)
    if not manual_plans:
        raise ValueError("no enumerable procedure detected in manual.txt")

    return CorpusEntry(
        domain=domain,
        slug=entry_dir.name,
        procedure_name=procedure_name,
        manual_path=manual_path,
        gold_text_path=gold_text_path,
        gold_ontology_path=gold_ontology_path,
        manual_text=manual_text,
        gold_text=gold_text,
        gold_plan=gold_plan,
        gold_ontology_text=ontology_text,
        gold_graph=gold_graph,
        manual_plans=manual_plans,
        answers=answers,
    )


def load_corpus(root: str | Path, config: textparse.ParseConfig = textparse.DEFAULT_CONFIG) -> CorpusLoadResult:
    """Discover and validate every entry; per-entry failures become
    problems, not exceptions. Raises EmptyCorpus when nothing is found."""
    root = Path(root)
    if not root.is_dir():
        raise EmptyCorpus(f"{root} is not a directory")
    entries: list[CorpusEntry] = []
    problems: list[CorpusProblem] = []
    candidates = []
    for domain_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for entry_dir in sorted(p for p in domain_dir.iterdir() if p.is_dir()):
            candidates.append((domain_dir.name, entry_dir))
    if not candidates:
        raise EmptyCorpus(f"no <domain>/<procedure> directories under {root}")
    for domain, entry_dir in candidates:
        key = f"{domain}/{entry_dir.name}"
        if domain not in DOMAINS:
            problems.append(CorpusProblem(key, f"unknown domain {domain!r}"))
            continue
        try:
            entries.append(_load_entry(domain, entry_dir, config))
        except Exception as exc:
            problems.append(CorpusProblem(key, str(exc)))
    return CorpusLoadResult(tuple(entries), tuple(problems))


def comparison_contexts(entry: CorpusEntry, partner: CorpusEntry) -> list[ComparisonContext]:
    """Context1 = every procedure in the entry's manual chunk, Context2 =
    every procedure in the partner's. Contexts may hold several plans."""
    return [
        ComparisonContext("Context1", entry.manual_plans),
        ComparisonContext("Context2", partner.manual_plans),
    ]


def normalize_answer_text(text: str) -> str:
    """Folding used for exact-match comparisons: whitespace, case, final dot."""
    return " ".join(text.split()).strip().lower().rstrip(".")


_norm = normalize_answer_text


def lint_corpus(entries: list[CorpusEntry] | tuple[CorpusEntry, ...]) -> list[str]:
    """Cross-check gold answers against the oracle and the metrics.

    Returns one message per defect: a stated answer that disagrees with
    the oracle over the parsed gold plan, a comparison partner that is
    missing or tied, or a gold text that does not self-score 100.0.
    """
    by_key = {entry.key: entry for entry in entries}
    errors: list[str] = []
    for entry in entries:
        answers = entry.answers
        oracle_count = answer_count(entry.gold_plan, answers.count_mode).value
        if oracle_count != answers.count:
            errors.append(f"{entry.key}: stated count {answers.count} != oracle {oracle_count}")

        partner = by_key.get(answers.comparison_partner)
        if partner is None:
            errors.append(f"{entry.key}: comparison partner {answers.comparison_partner!r} not in corpus")
        else:
            try:
                winner = answer_comparison(comparison_contexts(entry, partner), answers.count_mode)
                if _norm(winner.plan_label) != _norm(answers.comparison_winner):
                    errors.append(
                        f"{entry.key}: stated comparison winner {answers.comparison_winner!r} "
                        f"!= oracle {winner.plan_label!r}"
                    )
            except TieDetected as exc:
                errors.append(f"{entry.key}: comparison is ill-posed: {exc}")

        try:
            nested = answer_nested(entry.gold_plan, answers.nested_step)
            stated = answers.nested_substeps
            if (nested.substeps is None) != (stated is None):
                errors.append(f"{entry.key}: nested answer disagrees with oracle on {answers.nested_step}")
            elif nested.substeps is not None and [_norm(s) for s in nested.substeps] != [
                _norm(s) for s in stated or ()
            ]:
                errors.append(f"{entry.key}: nested substeps differ from oracle for {answers.nested_step}")
        except Exception as exc:
            errors.append(f"{entry.key}: nested lookup failed: {exc}")

        try:
            seq = answer_sequence(entry.gold_plan, answers.sequence_step)
            stated_next = answers.sequence_next
            if (seq.next_label is None) != (stated_next is None):
                errors.append(f"{entry.key}: sequence answer disagrees with oracle on {answers.sequence_step}")
            elif seq.next_label is not None and _norm(seq.next_label) != _norm(stated_next or ""):
                errors.append(
                    f"{entry.key}: stated next step {stated_next!r} != oracle {seq.next_label!r}"
                )
        except Exception as exc:
            errors.append(f"{entry.key}: sequence lookup failed: {exc}")

        self_score = score_all(entry.gold_text, entry.gold_text)
        for name, parts in self_score.as_dict().items():
            if parts["f1"] != 1.0:
                errors.append(f"{entry.key}: gold self-score {name} is {parts['f1']:.4f}, expected 1.0")
    return errors
