from __future__ import annotations

import pytest

from prockg import rdfio
from prockg.model import flatten
from prockg.oracle import NO_SUBSTEPS, CountAnswer, NestedAnswer, SequenceAnswer
from prockg.prompting import (
    ComparisonClaim,
    Exemplar,
    MissingParam,
    OntologyDefinitions,
    OutputFormat,
    PromptRequest,
    Raw,
    TemplateKind,
    TwoShot,
    UnparseableResponse,
    build_prompt,
    definitions_block,
    extract_enumerated_block,
    extract_turtle_block,
    parse_response,
)

MANUAL = """\
Changing Gas Cylinders
1. Close the cylinder valve completely before disconnection.
2. Bleed the remaining gas from the regulator.
3. Unscrew the regulator from the empty cylinder.
"""


def request(kind=TemplateKind.LIST, setting=None, format=OutputFormat.PLAIN_TEXT, **overrides):
    defaults = dict(
        kind=kind,
        setting=setting or Raw(),
        format=format,
        context=MANUAL,
        procedure_name="Changing Gas Cylinders",
    )
    if kind in (TemplateKind.NESTED, TemplateKind.SEQUENCE):
        defaults["step"] = "Step 2"
    if kind is TemplateKind.COMPARISON:
        defaults["context2"] = "Other manual text\n1. a\n2. b"
    defaults.update(overrides)
    return PromptRequest(**defaults)


def test_raw_shape_is_system_context_question():
    conv = build_prompt(request())
    assert [m.role for m in conv] == ["system", "user", "user"]
    assert conv[1].content.startswith("Context:\n")
    assert conv[2].content.startswith("Question:")


def test_nested_prompt_contains_verbatim_clause():
    conv = build_prompt(request(kind=TemplateKind.NESTED))
    assert 'please reply with "no substeps"' in conv[-1].content
    assert "Step 2" in conv[-1].content


def test_definitions_setting_prepends_block():
    conv = build_prompt(request(kind=TemplateKind.COUNTING, setting=OntologyDefinitions()))
    assert [m.role for m in conv] == ["system", "user", "user", "user"]
    assert "p-plan:Plan" in conv[1].content and "p-plan:Step" in conv[1].content
    assert conv[2].content.startswith("Context:")


def test_definitions_block_glosses():
    for kind in TemplateKind:
        block = definitions_block(kind)
        assert "p-plan:Plan" in block and "p-plan:Step" in block
    assert "indicates the sequence of steps within a plan" in definitions_block(TemplateKind.LIST)
    seq_block = definitions_block(TemplateKind.SEQUENCE)
    assert "associates a plan with its initial step" in seq_block
    assert "associates a plan with its last step" in seq_block


def test_two_shot_shape():
    shots = (
        Exemplar(question="Context:\nq1\n\nQuestion: one?", gold_answer="a1"),
        Exemplar(question="Context:\nq2\n\nQuestion: two?", gold_answer="a2"),
    )
    conv = build_prompt(request(setting=TwoShot(exemplars=shots)))
    assert [m.role for m in conv] == ["system", "user", "assistant", "user", "assistant", "user"]
    assert conv[1].content == shots[0].question
    assert conv[2].content == "a1"
    assert conv[3].content == shots[1].question
    assert conv[4].content == "a2"
    assert "Question:" in conv[5].content and "Context:" in conv[5].content


def test_two_shot_requires_exactly_two():
    with pytest.raises(ValueError):
        TwoShot(exemplars=(Exemplar("q", "a"),))  # type: ignore[arg-type]


def test_ontologized_list_prompt_names_prefixes():
    conv = build_prompt(request(format=OutputFormat.ONTOLOGIZED))
    text = conv[-1].content
    assert "Turtle" in text and "p-plan:" in text and "kh-p:isDecomposedAsPlan" in text


def test_build_prompt_is_deterministic():
    assert build_prompt(request()) == build_prompt(request())


@pytest.mark.parametrize(
    "kind,missing",
    [
        (TemplateKind.NESTED, {"step": None}),
        (TemplateKind.SEQUENCE, {"step": None}),
        (TemplateKind.COMPARISON, {"context2": None}),
        (TemplateKind.LIST, {"procedure_name": ""}),
    ],
)
def test_missing_params(kind, missing):
    with pytest.raises(MissingParam):
        build_prompt(request(kind=kind, **missing))


def test_empty_exemplar_rejected():
    shots = (Exemplar(question=" ", gold_answer="a"), Exemplar(question="q", gold_answer="a"))
    with pytest.raises(MissingParam):
        build_prompt(request(setting=TwoShot(exemplars=shots)))


# ---------------------------------------------------------------------------
# parse_response


def test_parse_nested_no_substeps_literal():
    parsed = parse_response(TemplateKind.NESTED, OutputFormat.PLAIN_TEXT, "No substeps.")
    assert parsed.answer == NO_SUBSTEPS


def test_parse_nested_list_with_grounding():
    reply = "The substeps are:\n1. Close the cylinder valve completely before disconnection.\n2. Invented step."
    parsed = parse_response(TemplateKind.NESTED, OutputFormat.PLAIN_TEXT, reply, context=MANUAL)
    assert isinstance(parsed.answer, NestedAnswer)
    assert len(parsed.answer.substeps) == 2
    assert parsed.ungrounded == ("Invented step.",)


COUNT_PHRASINGS = [
    ("There are 9 main steps in this procedure.", 9),
    ("9", 9),
    ("The procedure has 12 steps.", 12),
    ("In total, 7 steps are described.", 7),
    ("I count 5 main steps.", 5),
    ("There are 10 steps, including substeps.", 10),
    ("Total number of steps: 6.", 6),
    ("The answer is 4.", 4),
    ("6 main steps.", 6),
    ("It consists of 8 steps.", 8),
    ("Answer: 3 steps.", 3),
    ("The main procedure lists 11 steps.", 11),
    ("There appear to be 2 steps.", 2),
    ("You will find 14 steps in the context.", 14),
    ("Counting the main steps gives 13.", 13),
    ("The total is 15.", 15),
    ("After reviewing, there are 5 steps.", 5),
    ("That procedure includes 9 numbered steps.", 9),
    ("Steps counted: 7.", 7),
    ("1 step only.", 1),
]


@pytest.mark.parametrize("reply,expected", COUNT_PHRASINGS)
def test_parse_counting_phrasings(reply, expected):
    parsed = parse_response(TemplateKind.COUNTING, OutputFormat.PLAIN_TEXT, reply)
    assert parsed.answer == CountAnswer(expected)


def test_parse_counting_without_number_is_unparseable():
    with pytest.raises(UnparseableResponse):
        parse_response(TemplateKind.COUNTING, OutputFormat.PLAIN_TEXT, "several steps, hard to say")


def test_parse_comparison_quoted_winner():
    reply = 'The procedure "Removal and installation of Mechanical seal" in Context2 has the most main steps.'
    parsed = parse_response(TemplateKind.COMPARISON, OutputFormat.PLAIN_TEXT, reply)
    assert parsed.answer == ComparisonClaim("Removal and installation of Mechanical seal", "Context2")


def test_parse_comparison_unquoted_is_unparseable():
    with pytest.raises(UnparseableResponse):
        parse_response(TemplateKind.COMPARISON, OutputFormat.PLAIN_TEXT, "the second one, probably")


def test_parse_sequence_variants():
    assert parse_response(
        TemplateKind.SEQUENCE, OutputFormat.PLAIN_TEXT, 'The next step is "Bleed the remaining gas".'
    ).answer == SequenceAnswer("Bleed the remaining gas")
    assert parse_response(
        TemplateKind.SEQUENCE, OutputFormat.PLAIN_TEXT, "Step 3 is the last step; there is no next step."
    ).answer == SequenceAnswer(None)
    strict = parse_response(
        TemplateKind.SEQUENCE,
        OutputFormat.PLAIN_TEXT,
        "Bleed the remaining gas (Note: wear gloves).",
        strict=True,
    )
    assert strict.answer == SequenceAnswer("Bleed the remaining gas")


def test_parse_list_plain_text_round_trip():
    reply = "Sure, here it is:\n\nChanging Gas Cylinders\n1. Close the valve.\n2. Bleed the gas."
    parsed = parse_response(TemplateKind.LIST, OutputFormat.PLAIN_TEXT, reply)
    assert [s.label for _, s in flatten(parsed.answer)] == ["Close the valve.", "Bleed the gas."]
    assert parsed.answer.label == "Changing Gas Cylinders"


def test_parse_list_turtle_block_matches_rdfio_composition():
    from prockg.textparse import parse_procedure

    plan = parse_procedure("1. Close the valve.\n2. Bleed the gas.", "Gas")
    ttl = rdfio.write_turtle(rdfio.to_triples(plan))
    reply = f"Here is the graph:\n\n```turtle\n{ttl}```\nDone."
    parsed = parse_response(TemplateKind.LIST, OutputFormat.ONTOLOGIZED, reply)
    expected = rdfio.from_triples(rdfio.read_turtle(extract_turtle_block(reply)))[0]
    assert parsed.answer == expected


def test_parse_list_without_structure_is_unparseable():
    with pytest.raises(UnparseableResponse):
        parse_response(TemplateKind.LIST, OutputFormat.PLAIN_TEXT, "I poured the oil and left.")
    with pytest.raises(UnparseableResponse):
        parse_response(TemplateKind.LIST, OutputFormat.ONTOLOGIZED, "no graph here")


def test_extract_enumerated_block_keeps_adjacent_heading():
    text = "Lead-in chatter.\n\nTitle\n1. a\n2. b\ntrailing note"
    block = extract_enumerated_block(text)
    assert block.splitlines()[0] == "Title"
    assert block.splitlines()[-1] == "trailing note"
