"""Builds conversations for the five question templates under the three
learning settings, and parses model replies back into structured answers.

Question wording lives in a versioned template file (data/templates.toml),
not in code. Conversations are plain message tuples:

* raw:          [system, context, question]
* definitions:  [system, definitions, context, question]
* 2-shot:       [system, ex1 Q, ex1 A, ex2 Q, ex2 A, task question]
                (the task context is folded into the task question, so the
                exemplar pairs sit directly before it)

Reply parsing never raises on hallucinated content; it either produces a
structured answer (flagging steps that are not grounded in the provided
context) or raises UnparseableResponse so the caller can record the cell
as failed instead of dropping it.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from importlib import resources

from . import rdfio, textparse
from .llm import ChatMessage, Conversation
from .model import flatten
from .oracle import (
    NO_SUBSTEPS,
    CountAnswer,
    NestedAnswer,
    SequenceAnswer,
)


class TemplateKind(str, Enum):
    LIST = "list"
    COUNTING = "counting"
    COMPARISON = "comparison"
    NESTED = "nested"
    SEQUENCE = "sequence"


TEMPLATE_ORDER: tuple[TemplateKind, ...] = (
    TemplateKind.LIST,
    TemplateKind.COUNTING,
    TemplateKind.COMPARISON,
    TemplateKind.NESTED,
    TemplateKind.SEQUENCE,
)


class OutputFormat(str, Enum):
    PLAIN_TEXT = "text"
    ONTOLOGIZED = "ontology"


@dataclass(frozen=True)
class Exemplar:
    question: str
    gold_answer: str


@dataclass(frozen=True)
class Raw:
    name = "raw"


@dataclass(frozen=True)
class OntologyDefinitions:
    name = "definitions"


@dataclass(frozen=True)
class TwoShot:
    exemplars: tuple[Exemplar, Exemplar]
    name = "2shot"

    def __post_init__(self) -> None:
        object.__setattr__(self, "exemplars", tuple(self.exemplars))
        if len(self.exemplars) != 2:
            raise ValueError(f"2-shot needs exactly 2 exemplars, got {len(self.exemplars)}")


LearningSetting = Raw | OntologyDefinitions | TwoShot

SETTING_NAMES = ("raw", "definitions", "2shot")


class MissingParam(Exception):
    pass


class UnparseableResponse(Exception):
    def __init__(self, kind: TemplateKind, reason: str):
        super().__init__(f"{kind.value}: {reason}")
        self.kind = kind
        self.reason = reason


@dataclass(frozen=True)
class PromptRequest:
    kind: TemplateKind
    setting: LearningSetting
    format: OutputFormat
    context: str
    procedure_name: str = ""
    step: str | None = None
    context2: str | None = None
    strict_sequence: bool = False


@dataclass(frozen=True)
class PromptTemplates:
    version: int
    preamble: str
    questions: dict[str, str]
    clauses: dict[str, str]
    definitions: dict[str, str]

    def question(self, kind: TemplateKind) -> str:
        return self.questions[kind.value]

    def definitions_for(self, kind: TemplateKind) -> str:
        return self.definitions.get(kind.value, self.definitions["default"])


def load_templates(path: str | Path | None = None) -> PromptTemplates:
    if path is None:
        data = tomllib.loads(resources.files("prockg").joinpath("data/templates.toml").read_text("utf-8"))
    else:
        data = tomllib.loads(Path(path).read_text("utf-8"))
    return PromptTemplates(
        version=int(data.get("version", 1)),
        preamble=data["system"]["preamble"],
        questions=dict(data["questions"]),
        clauses=dict(data.get("clauses", {})),
        definitions=dict(data["definitions"]),
    )


@lru_cache(maxsize=1)
def default_templates() -> PromptTemplates:
    return load_templates()


def definitions_block(kind: TemplateKind, templates: PromptTemplates | None = None) -> str:
    """The vocabulary definitions text shown for `kind` in the
    definitions setting."""
    return (templates or default_templates()).definitions_for(kind)


def _check_params(req: PromptRequest) -> None:
    if not req.context.strip():
        raise MissingParam("context text is required")
    if req.kind in (TemplateKind.LIST, TemplateKind.COUNTING, TemplateKind.NESTED, TemplateKind.SEQUENCE):
        if not req.procedure_name.strip():
            raise MissingParam(f"{req.kind.value} prompt needs procedure_name")
    if req.kind in (TemplateKind.NESTED, TemplateKind.SEQUENCE) and not (req.step or "").strip():
        raise MissingParam(f"{req.kind.value} prompt needs a step reference")
    if req.kind is TemplateKind.COMPARISON and not (req.context2 or "").strip():
        raise MissingParam("comparison prompt needs a second context")
    if isinstance(req.setting, TwoShot):
        for i, ex in enumerate(req.setting.exemplars, start=1):
            if not ex.question.strip() or not ex.gold_answer.strip():
                raise MissingParam(f"exemplar {i} must have a non-empty question and answer")


def _question_text(req: PromptRequest, templates: PromptTemplates) -> str:
    question = templates.question(req.kind).format(
        procedure_name=req.procedure_name,
        step=req.step or "",
        context="",  # context travels in its own message
        context2="",
    )
    if req.kind is TemplateKind.SEQUENCE and req.strict_sequence:
        head, sep, tail = question.rpartition("\nAnswer:")
        question = head + templates.clauses.get("strict_sequence", "") + sep + tail if sep else question
    if req.kind is TemplateKind.LIST and req.format is OutputFormat.ONTOLOGIZED:
        clause = templates.clauses.get("ontology_output", "")
        head, sep, tail = question.rpartition("\nAnswer:")
        question = head + "\n" + clause + sep + tail if sep else question + "\n" + clause
    return question


def _context_text(req: PromptRequest) -> str:
    if req.kind is TemplateKind.COMPARISON:
        return f"Context1:\n{req.context}\n\nContext2:\n{req.context2}"
    return f"Context:\n{req.context}"


def task_message_text(req: PromptRequest, templates: PromptTemplates | None = None) -> str:
    """Context plus question as one message — the 2-shot task form, also
    what the harness uses as the question half of an exemplar."""
    templates = templates or default_templates()
    return f"{_context_text(req)}\n\n{_question_text(req, templates)}"


def build_prompt(req: PromptRequest, templates: PromptTemplates | None = None) -> Conversation:
    """Deterministically assemble the conversation for one request."""
    templates = templates or default_templates()
    _check_params(req)
    question = _question_text(req, templates)
    context = _context_text(req)
    system = ChatMessage("system", templates.preamble)

    if isinstance(req.setting, Raw):
        return (system, ChatMessage("user", context), ChatMessage("user", question))
    if isinstance(req.setting, OntologyDefinitions):
        return (
            system,
            ChatMessage("user", definitions_block(req.kind, templates)),
            ChatMessage("user", context),
            ChatMessage("user", question),
        )
    ex1, ex2 = req.setting.exemplars
    return (
        system,
        ChatMessage("user", ex1.question),
        ChatMessage("assistant", ex1.gold_answer),
        ChatMessage("user", ex2.question),
        ChatMessage("assistant", ex2.gold_answer),
        ChatMessage("user", task_message_text(req, templates)),
    )


# ---------------------------------------------------------------------------
# Response parsing.


@dataclass(frozen=True)
class ComparisonClaim:
    winner: str
    context_name: str | None = None


@dataclass(frozen=True)
class ParsedResponse:
    kind: TemplateKind
    answer: object  # Plan | CountAnswer | ComparisonClaim | NestedAnswer | SequenceAnswer
    ungrounded: tuple[str, ...] = ()


_FENCE = re.compile(r"```[a-zA-Z0-9_-]*\n(.*?)```", re.DOTALL)
_INT = re.compile(r"\d+")
_QUOTED = re.compile(r"\"([^\"]+)\"|“([^”]+)”|'([^']{2,})'")
_CONTEXT_REF = re.compile(r"\bContext\s*(\d+)", re.IGNORECASE)
_NO_SUBSTEPS = re.compile(r"\bno\s+substeps\b", re.IGNORECASE)
_END_OF_PLAN = re.compile(r"\bend of (?:the )?plan\b|\bno next step\b|\bfinal step\b|\blast step of\b", re.IGNORECASE)
_LEAD_IN = re.compile(
    r"^(?:the\s+)?(?:next\s+step|step\s+that\s+comes\s+(?:immediately\s+)?after[^:]*?)\s*(?:is)?\s*[:\-]?\s*",
    re.IGNORECASE,
)
_NOTE_TAIL = re.compile(r"\s*[(\[]?\b(?:note|warning|caution)\b\s*[:\-].*$", re.IGNORECASE)


def _fold(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip().lower()


def _ungrounded(labels: list[str], context: str | None) -> tuple[str, ...]:
    if context is None:
        return ()
    haystack = _fold(context)
    return tuple(label for label in labels if label and _fold(label) not in haystack)


def extract_enumerated_block(text: str) -> str | None:
    """The contiguous enumerated region of a reply, if any.

    A text line directly above the first item (no blank between) is kept
    as the procedure heading; conversational lead-ins separated by a blank
    line are dropped.
    """
    lines = text.splitlines()
    kinds = [textparse.classify_line(line) for line in lines]
    if "item" not in kinds:
        return None
    first = kinds.index("item")
    last = len(kinds) - 1 - kinds[::-1].index("item")
    if first > 0 and kinds[first - 1] == "text":
        first -= 1
    # Keep trailing continuation lines that sit directly under the last
    # item; closing chatter after a blank line stays out.
    while last + 1 < len(lines) and kinds[last + 1] == "text":
        last += 1
    return "\n".join(lines[first : last + 1])


def extract_turtle_block(text: str) -> str | None:
    """The Turtle portion of a reply: a fenced graph block, else the text
    from the first @prefix directive on."""
    for match in _FENCE.finditer(text):
        block = match.group(1)
        if "@prefix" in block or re.search(r"\ba\s+(?:p-plan:|<)", block):
            return block
    if "@prefix" in text:
        return text[text.index("@prefix") :]
    return None


def parse_response(
    kind: TemplateKind,
    format: OutputFormat,
    text: str,
    context: str | None = None,
    strict: bool = False,
) -> ParsedResponse:
    """Turn a model reply into an oracle-comparable structure.

    `context` enables hallucination flagging: parsed step texts that do not
    occur in it (after case and whitespace folding) are reported in
    `ungrounded`. Replies with no recognizable answer raise
    UnparseableResponse.
    """
    if kind is TemplateKind.LIST:
        if format is OutputFormat.ONTOLOGIZED:
            block = extract_turtle_block(text)
            if block is None:
                raise UnparseableResponse(kind, "no Turtle block in reply")
            try:
                plans = rdfio.from_triples(rdfio.read_turtle(block))
            except (rdfio.TurtleSyntaxError, rdfio.GraphStructureError) as exc:
                raise UnparseableResponse(kind, f"Turtle block does not parse: {exc}") from exc
            if not plans:
                raise UnparseableResponse(kind, "Turtle block holds no plan")
            plan = plans[0]
        else:
            block = extract_enumerated_block(text)
            if block is None:
                raise UnparseableResponse(kind, "no enumerated steps in reply")
            try:
                plan = textparse.parse_procedure(block)
            except textparse.ParseError as exc:
                raise UnparseableResponse(kind, f"enumerated block does not parse: {exc}") from exc
        labels = [step.label for _, step in flatten(plan)]
        return ParsedResponse(kind, plan, _ungrounded(labels, context))

    if kind is TemplateKind.COUNTING:
        match = _INT.search(text)
        if not match:
            raise UnparseableResponse(kind, "no integer in reply")
        return ParsedResponse(kind, CountAnswer(int(match.group())))

    if kind is TemplateKind.COMPARISON:
        quoted = _QUOTED.search(text)
        winner = next((g for g in quoted.groups() if g), None) if quoted else None
        if winner is None:
            raise UnparseableResponse(kind, "no quoted procedure name in reply")
        ctx = _CONTEXT_REF.search(text)
        return ParsedResponse(kind, ComparisonClaim(winner.strip(), f"Context{ctx.group(1)}" if ctx else None))

    if kind is TemplateKind.NESTED:
        if _NO_SUBSTEPS.search(text):
            return ParsedResponse(kind, NO_SUBSTEPS)
        block = extract_enumerated_block(text)
        if block is None:
            raise UnparseableResponse(kind, 'neither substeps nor "no substeps" in reply')
        try:
            plan = textparse.parse_procedure(block)
        except textparse.ParseError as exc:
            raise UnparseableResponse(kind, f"substep list does not parse: {exc}") from exc
        labels = [step.label for step in plan.steps]
        return ParsedResponse(kind, NestedAnswer(tuple(labels)), _ungrounded(labels, context))

    if kind is TemplateKind.SEQUENCE:
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if not lines:
            raise UnparseableResponse(kind, "empty reply")
        if _END_OF_PLAN.search(lines[0]):
            return ParsedResponse(kind, SequenceAnswer(None))
        sentence = _LEAD_IN.sub("", lines[0]).strip()
        if strict:
            sentence = _NOTE_TAIL.sub("", sentence).strip()
        sentence = sentence.strip("\"'“”. ")
        if not sentence:
            raise UnparseableResponse(kind, "no step sentence in reply")
        return ParsedResponse(kind, SequenceAnswer(sentence), _ungrounded([sentence], context))

    raise ValueError(f"unknown template kind {kind!r}")
