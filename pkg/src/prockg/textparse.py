"""Deterministic parser for semi-structured procedure text.

Handles the three enumeration cues found in maintenance manuals: dotted
decimal numbering ("1.", "11.3.4"), alpha markers ("a)"), and bullets
("-", "*", "•"). Dotted numbering depth wins over indentation; indentation
is the fallback for bullets and alpha items. Free prose is rejected — the
deterministic path only accepts enumerable structure.

Identifier scheme. Every item gets a number path: its own dotted path when
explicitly numbered, otherwise the parent's path plus its 1-based position.
Step ids are "Sub" * depth + "Step" + path ("Step11_3_3", "SubStep2_1").
When all top-level items share a dotted prefix (e.g. 11.3.*), that prefix
names the root plan ("Plan11_3") and nested plans are "Plan" + path;
otherwise the root is "Plan1" and nested plans are "Sub" * depth + "Plan"
+ path ("SubPlan2"). A decomposed step's plan is labelled
"<step label> Plan".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import Plan, Step

DECIMAL = "decimal"
ALPHA = "alpha"
BULLET = "bullet"

ALL_STYLES = frozenset({DECIMAL, ALPHA, BULLET})


@dataclass(frozen=True)
class ParseConfig:
    numbering_styles: frozenset[str] = ALL_STYLES
    indent_unit: int = 2
    max_depth: int = 3

    def __post_init__(self) -> None:
        if self.indent_unit < 1:
            raise ValueError("indent_unit must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        unknown = set(self.numbering_styles) - ALL_STYLES
        if unknown:
            raise ValueError(f"unknown numbering styles: {sorted(unknown)}")
        object.__setattr__(self, "numbering_styles", frozenset(self.numbering_styles))


DEFAULT_CONFIG = ParseConfig()


@dataclass(frozen=True)
class ProcedureSpan:
    """A heading plus its enumerated block; line numbers are 0-based inclusive."""

    name: str
    start_line: int
    end_line: int


class ParseError(Exception):
    pass


class EmptyInput(ParseError):
    pass


class AmbiguousStructure(ParseError):
    pass


class DepthExceeded(ParseError):
    pass


# Dotted paths ("11.3.4", optionally "11.3.4.") need >= 2 components; a lone
# number must carry "." or ")" so years and measurements don't parse as items.
_DOTTED = re.compile(r"(\d+(?:\.\d+)+)\.?[ \t]+(\S.*)$")
_SINGLE = re.compile(r"(\d+)[.)][ \t]+(\S.*)$")
_ALPHA = re.compile(r"([a-z])[.)][ \t]+(\S.*)$", re.IGNORECASE)
_BULLET = re.compile(r"([-*•])[ \t]+(\S.*)$")


@dataclass
class _Item:
    line_no: int
    indent: int
    style: str
    number_path: tuple[int, ...] | None  # explicit dotted path, when present
    text: str
    body_lines: list[str] = field(default_factory=list)
    depth: int = 0
    id_path: tuple[int, ...] = ()
    children: list[_Item] = field(default_factory=list)


def _match_item(stripped: str, config: ParseConfig):
    """(style, explicit_path, text) for an item line, else None."""
    if DECIMAL in config.numbering_styles:
        m = _DOTTED.match(stripped)
        if m:
            return DECIMAL, tuple(int(p) for p in m.group(1).split(".")), m.group(2)
        m = _SINGLE.match(stripped)
        if m:
            return DECIMAL, (int(m.group(1)),), m.group(2)
    if ALPHA in config.numbering_styles:
        m = _ALPHA.match(stripped)
        if m:
            return ALPHA, None, m.group(2)
    if BULLET in config.numbering_styles:
        m = _BULLET.match(stripped)
        if m:
            return BULLET, None, m.group(2)
    return None


def _indent_width(line: str, config: ParseConfig) -> int:
    width = 0
    for ch in line:
        if ch == " ":
            width += 1
        elif ch == "\t":
            width += config.indent_unit
        else:
            break
    return width


def classify_line(line: str, config: ParseConfig = DEFAULT_CONFIG) -> str:
    """One of "blank", "item", "text" — exposed for response scraping."""
    if not line.strip():
        return "blank"
    return "item" if _match_item(line.strip(), config) else "text"


def _scan_items(lines: list[str], config: ParseConfig) -> tuple[list[str], list[_Item]]:
    """Split into leading heading lines and the item list with bodies attached."""
    heading: list[str] = []
    items: list[_Item] = []
    for line_no, raw in enumerate(lines):
        stripped = raw.strip()
        if not stripped:
            continue
        matched = _match_item(stripped, config)
        if matched is None:
            if items:
                items[-1].body_lines.append(stripped)
            else:
                heading.append(stripped)
            continue
        style, number_path, text = matched
        items.append(
            _Item(
                line_no=line_no,
                indent=_indent_width(raw, config),
                style=style,
                number_path=number_path,
                text=text,
            )
        )
    return heading, items


def _assign_depths(items: list[_Item], config: ParseConfig) -> None:
    # The first item anchors depth 0: dotted paths are read relative to its
    # component count. Single numbers and bullets carry no depth of their
    # own, so they fall back to indentation.
    first = items[0]
    base_len = len(first.number_path) if first.number_path is not None else None
    for item in items:
        path = item.number_path
        if path is not None and len(path) > 1 and base_len is not None:
            item.depth = len(path) - base_len
            if item.depth < 0:
                raise AmbiguousStructure(
                    f"line {item.line_no + 1}: numbering {_dotted(path)} is above the opening level"
                )
        else:
            item.depth = item.indent // config.indent_unit
        if item.depth >= config.max_depth:
            raise DepthExceeded(
                f"line {item.line_no + 1}: nesting depth {item.depth + 1} exceeds max_depth {config.max_depth}"
            )


def _dotted(path: tuple[int, ...]) -> str:
    return ".".join(str(p) for p in path)


def _build_tree(items: list[_Item]) -> list[_Item]:
    roots: list[_Item] = []
    stack: list[_Item] = []  # open items by depth
    for item in items:
        if item.depth > len(stack):
            raise AmbiguousStructure(
                f"line {item.line_no + 1}: item jumps from depth {len(stack)} to {item.depth + 1}"
            )
        del stack[item.depth :]
        siblings = stack[-1].children if stack else roots
        if siblings and siblings[0].style != item.style:
            raise AmbiguousStructure(
                f"line {item.line_no + 1}: {item.style} item follows {siblings[0].style} items at the same level"
            )
        siblings.append(item)
        stack.append(item)
    return roots


def _assign_paths(roots: list[_Item]) -> tuple[int, ...]:
    """Set id_path on every item; returns the shared dotted root prefix ("" = none)."""
    explicit = [item.number_path for item in roots if item.number_path is not None]
    prefix: tuple[int, ...] = ()
    if len(explicit) == len(roots) and explicit and all(len(p) > 1 for p in explicit):
        head = explicit[0][:-1]
        if all(p[:-1] == head for p in explicit):
            prefix = head

    seen: set[tuple[int, ...]] = set()

    def walk(item: _Item, parent_path: tuple[int, ...], position: int) -> None:
        if item.number_path is not None and len(item.number_path) > 1:
            item.id_path = item.number_path
        elif item.number_path is not None and item.depth == 0:
            item.id_path = item.number_path
        else:
            item.id_path = parent_path + (position,)
        if item.id_path in seen:
            raise AmbiguousStructure(
                f"line {item.line_no + 1}: duplicate item number {_dotted(item.id_path)}"
            )
        seen.add(item.id_path)
        for pos, child in enumerate(item.children, start=1):
            walk(child, item.id_path, pos)

    for pos, root in enumerate(roots, start=1):
        walk(root, (), pos)
    return prefix


def _to_plan(roots: list[_Item], name: str, heading: list[str], prefix: tuple[int, ...]) -> Plan:
    rooted = bool(prefix)

    def step_id(item: _Item) -> str:
        return "Sub" * item.depth + "Step" + "_".join(str(p) for p in item.id_path)

    def plan_id(item: _Item) -> str:
        joined = "_".join(str(p) for p in item.id_path)
        if rooted:
            return "Plan" + joined
        return "Sub" * (item.depth + 1) + "Plan" + joined

    def make_step(item: _Item) -> Step:
        sub_plan = None
        if item.children:
            sub_plan = Plan(
                id=plan_id(item),
                label=f"{item.text} Plan",
                steps=tuple(make_step(child) for child in item.children),
            )
        return Step(
            id=step_id(item),
            label=item.text,
            body=" ".join(item.body_lines),
            sub_plan=sub_plan,
        )

    root_id = "Plan" + "_".join(str(p) for p in prefix) if rooted else "Plan1"
    label = name.strip() or " ".join(heading)
    return Plan(id=root_id, label=label, steps=tuple(make_step(r) for r in roots))


def parse_procedure(text: str, name: str = "", config: ParseConfig = DEFAULT_CONFIG) -> Plan:
    """Parse one procedure's text into a validated Plan tree.

    `name` becomes the plan label; when empty, leading non-enumerated
    heading lines are used instead. Raises EmptyInput on blank text,
    AmbiguousStructure on un-enumerated or inconsistently enumerated text,
    and DepthExceeded past `config.max_depth` levels.
    """
    if not text.strip():
        raise EmptyInput("no text to parse")
    lines = text.splitlines()
    heading, items = _scan_items(lines, config)
    if not items:
        raise AmbiguousStructure("no enumerated structure found (numbering, bullets, or indentation)")
    _assign_depths(items, config)
    roots = _build_tree(items)
    prefix = _assign_paths(roots)
    return _to_plan(roots, name, heading, prefix)


def render_text(plan: Plan, config: ParseConfig = DEFAULT_CONFIG) -> str:
    """Canonical enumerated rendering; re-parsing reproduces the same Plan.

    Step numbering is recovered from the ids parse_procedure assigns, so
    source numbering like "11.3.4" survives a parse/render/parse cycle.
    Bodies are emitted as continuation lines under their item.
    """
    lines: list[str] = []
    if plan.label:
        lines.append(plan.label)

    id_path = re.compile(r"^(?:Sub)*Step(\d+(?:_\d+)*)$")

    def number_for(step: Step, fallback: tuple[int, ...]) -> str:
        m = id_path.match(step.id)
        if m:
            return m.group(1).replace("_", ".")
        return ".".join(str(p) for p in fallback)

    def emit(p: Plan, depth: int, parent_path: tuple[int, ...]) -> None:
        indent = " " * (depth * config.indent_unit)
        for pos, step in enumerate(p.steps, start=1):
            lines.append(f"{indent}{number_for(step, parent_path + (pos,))}. {step.label}")
            for body_line in step.body.splitlines():
                if body_line.strip():
                    lines.append(f"{indent}{' ' * config.indent_unit}{body_line.strip()}")
            if step.sub_plan is not None:
                emit(step.sub_plan, depth + 1, parent_path + (pos,))

    emit(plan, 0, ())
    return "\n".join(lines) + "\n"


def detect_procedures(text: str, config: ParseConfig = DEFAULT_CONFIG) -> list[ProcedureSpan]:
    """Find titled enumerated blocks; returns non-overlapping spans in order.

    A span is a non-item heading line directly above (at most one blank
    line away from) a run of item lines, extended over the items and their
    adjacent continuation lines. Documents may hold several procedures;
    prose without enumerations yields no spans.
    """
    lines = text.splitlines()
    kinds = [classify_line(line, config) for line in lines]
    spans: list[ProcedureSpan] = []
    i = 0
    while i < len(lines):
        if kinds[i] != "text":
            i += 1
            continue
        # Candidate heading: next non-blank line must be an item.
        j = i + 1
        while j < len(lines) and kinds[j] == "blank":
            j += 1
        if j - i > 2 or j >= len(lines) or kinds[j] != "item":
            i += 1
            continue
        end = j
        k = j
        while k < len(lines):
            if kinds[k] == "item":
                end = k
                k += 1
            elif kinds[k] == "text" and k == end + 1:
                # Continuation directly under an item stays in the block.
                end = k
                k += 1
            elif kinds[k] == "blank":
                nxt = k + 1
                while nxt < len(lines) and kinds[nxt] == "blank":
                    nxt += 1
                if nxt < len(lines) and kinds[nxt] == "item":
                    k = nxt  # blank gap inside the enumeration
                else:
                    break
            else:
                break
        spans.append(ProcedureSpan(name=lines[i].strip(), start_line=i, end_line=end))
        i = end + 1
    return spans


def span_text(text: str, span: ProcedureSpan) -> str:
    """The raw lines of one detected span, heading included."""
    return "\n".join(text.splitlines()[span.start_line : span.end_line + 1])
