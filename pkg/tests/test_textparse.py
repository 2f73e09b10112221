from __future__ import annotations

import pytest

from prockg.model import Plan, Step, validate
from prockg.textparse import (
    AmbiguousStructure,
    DepthExceeded,
    EmptyInput,
    ParseConfig,
    detect_procedures,
    parse_procedure,
    render_text,
    span_text,
)

from conftest import LISTING_FIXTURE


def test_flat_numbered_list():
    plan = parse_procedure("1. Do A\n2. Do B", "Two Steps")
    assert plan.id == "Plan1"
    assert [s.id for s in plan.steps] == ["Step1", "Step2"]
    assert [s.label for s in plan.steps] == ["Do A", "Do B"]
    assert validate(plan) == []


def test_dotted_numbering_with_subplan():
    plan = parse_procedure(LISTING_FIXTURE, "Motor Belts and Spindle Alignment")
    assert plan.id == "Plan11_3"
    assert [s.id for s in plan.steps] == ["Step11_3_3", "Step11_3_4"]
    spindle = plan.steps[1]
    assert spindle.label == "Spindle Alignment"
    assert spindle.sub_plan is not None
    assert spindle.sub_plan.id == "Plan11_3_4"
    assert spindle.sub_plan.label == "Spindle Alignment Plan"
    assert [s.id for s in spindle.sub_plan.steps][0] == "SubStep11_3_4_1"
    assert spindle.sub_plan.steps[0].label == "Loosen Bearing Lock Nut"
    assert plan.steps[0].body.startswith("Complete the previous task.")


def test_bullet_list_matches_hand_built_tree():
    plan = parse_procedure("- Attach hoses\n- Open valve\n- Flush line", "Flush")
    expected = Plan(
        id="Plan1",
        label="Flush",
        steps=(
            Step(id="Step1", label="Attach hoses"),
            Step(id="Step2", label="Open valve"),
            Step(id="Step3", label="Flush line"),
        ),
    )
    assert plan == expected


def test_positional_subplan_naming():
    text = "1. First\n2. Second\n  2.1. Inner one\n  2.2. Inner two\n3. Third"
    plan = parse_procedure(text, "Positional")
    second = plan.steps[1]
    assert second.sub_plan.id == "SubPlan2"
    assert [s.id for s in second.sub_plan.steps] == ["SubStep2_1", "SubStep2_2"]


def test_empty_input():
    with pytest.raises(EmptyInput):
        parse_procedure("   \n \n", "x")


def test_prose_is_rejected():
    with pytest.raises(AmbiguousStructure):
        parse_procedure("First warm up the engine and then open the valve.", "x")


def test_mixed_styles_at_same_level():
    with pytest.raises(AmbiguousStructure):
        parse_procedure("1. Do A\nb) Do B", "x")


def test_duplicate_numbering_rejected():
    with pytest.raises(AmbiguousStructure):
        parse_procedure("1. Do A\n1. Do A again", "x")


def test_depth_exceeded():
    text = "1. a\n1.1 b\n1.1.1 c\n1.1.1.1 d"
    with pytest.raises(DepthExceeded):
        parse_procedure(text, "x", ParseConfig(max_depth=3))
    parse_procedure(text, "x", ParseConfig(max_depth=4))


def test_note_lines_attach_to_preceding_step():
    plan = parse_procedure("1. Open the valve\nNote: slowly.\n2. Close it", "x")
    assert plan.steps[0].body == "Note: slowly."
    assert plan.steps[1].body == ""


def test_leading_heading_used_when_name_empty():
    plan = parse_procedure("Oil Change\n1. Drain\n2. Fill", "")
    assert plan.label == "Oil Change"


def test_no_line_lost_or_duplicated():
    text = "Title line\n1. Alpha\nnote alpha\n2. Beta\n  2.1. Gamma\ngamma note\n3. Delta"
    plan = parse_procedure(text, "Title line")
    harvested: list[str] = []

    def walk(p):
        for s in p.steps:
            harvested.append(s.label)
            if s.body:
                harvested.extend(s.body.split("\n"))
            if s.sub_plan:
                walk(s.sub_plan)

    walk(plan)
    instruction_lines = [l.strip() for l in text.splitlines()[1:] if l.strip()]
    joined = " ".join(harvested)
    for line in instruction_lines:
        core = line.lstrip("0123456789.- )").strip()
        assert joined.count(core) == 1


def test_parse_is_deterministic():
    text = LISTING_FIXTURE
    assert parse_procedure(text, "n") == parse_procedure(text, "n")


@pytest.mark.parametrize(
    "text,name",
    [
        ("1. Do A\n2. Do B", "Flat"),
        (LISTING_FIXTURE, "Motor Belts and Spindle Alignment"),
        ("- one\n- two\n  - two point one", "Bullets"),
        ("1. a\nnote a\n2. b\n  2.1. c\n  body c\n3. d", "Mixed"),
    ],
)
def test_render_parse_round_trip(text, name):
    first = parse_procedure(text, name)
    rendered = render_text(first)
    second = parse_procedure(rendered, name)
    assert second == first
    assert render_text(second) == rendered
    assert validate(second) == []


def test_detect_single_titled_block():
    text = "Oil Change\n1. Drain\n2. Fill\n"
    spans = detect_procedures(text)
    assert len(spans) == 1
    assert spans[0].name == "Oil Change"


def test_detect_two_procedures_like_one_context():
    text = (
        "Install the support plate with a pit cover\n"
        "1. one\n2. two\n3. three\n\n"
        "Install the support plate without a pit cover\n"
        "1. uno\n2. dos\n"
    )
    spans = detect_procedures(text)
    assert [s.name for s in spans] == [
        "Install the support plate with a pit cover",
        "Install the support plate without a pit cover",
    ]
    assert spans[0].end_line < spans[1].start_line
    first = parse_procedure(span_text(text, spans[0]), spans[0].name)
    assert len(first.steps) == 3


def test_detect_nothing_in_prose():
    assert detect_procedures("Just words.\nMore words about nothing.\n") == []
