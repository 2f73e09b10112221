from __future__ import annotations

import csv
import io
import json

import pytest

from prockg import rdfio
from prockg.corpus import load_corpus, normalize_answer_text
from prockg.harness import (
    ExperimentSpec,
    ReportRow,
    SpecError,
    aggregate,
    display_step,
    emit_report,
    plan_cells,
    render_gold_answer,
    run_experiment,
    scores_payload,
    select_exemplars,
    split_entries,
)
from prockg.llm import FakeBackend, ProviderConfig
from prockg.oracle import (
    NO_SUBSTEPS,
    CountAnswer,
    SequenceAnswer,
    answer_count,
    answer_nested,
    answer_sequence,
)
from prockg.prompting import OutputFormat, TemplateKind, parse_response
from prockg.rouge import ONTOLOGY_CONFIG, RougeReport, RougeScore, score_all

from conftest import DEMO_CASSETTE, DEMO_CORPUS


@pytest.fixture(scope="module")
def entries():
    return list(load_corpus(DEMO_CORPUS).entries)


@pytest.fixture(scope="module")
def by_key(entries):
    return {e.key: e for e in entries}


def test_display_step():
    assert display_step("Step3") == "Step 3"
    assert display_step("SubStep2_1") == "SubStep 2.1"
    assert display_step("oddball") == "oddball"


def test_exemplar_selection_excludes_evaluated(entries):
    spec = ExperimentSpec()
    evaluated, exemplars, exemplar_keys = split_entries(spec, entries)
    assert len(exemplar_keys) == 8
    assert len(evaluated) == 4
    assert not set(e.key for e in evaluated) & set(exemplar_keys)
    for domain, pair in exemplars.items():
        assert all(e.domain == domain for e in pair)


def test_cross_domain_fallback(entries):
    photography_only = [e for e in entries if e.domain == "photography"][:2]
    spec = ExperimentSpec()
    exemplars = select_exemplars(photography_only + [e for e in entries if e.domain == "medicine"], spec)
    # photography has two entries here, below the same-domain threshold.
    assert all(e.domain == "medicine" for e in exemplars["photography"])


def test_no_exemplars_without_two_shot(entries):
    spec = ExperimentSpec(settings=("raw",))
    evaluated, exemplars, keys = split_entries(spec, entries)
    assert exemplars == {} and keys == []
    assert len(evaluated) == 12


def test_plan_cells_grid(entries):
    spec = ExperimentSpec()
    evaluated, _, _ = split_entries(spec, entries)
    jobs = plan_cells(spec, evaluated)
    # 4 entries x (list: 2 settings x 2 formats + 4 question templates x 2 settings)
    assert len(jobs) == 4 * (4 + 8)
    list_jobs = [j for j in jobs if j[1] is TemplateKind.LIST]
    assert {j[3] for j in list_jobs} == {OutputFormat.PLAIN_TEXT, OutputFormat.ONTOLOGIZED}
    other_jobs = [j for j in jobs if j[1] is not TemplateKind.LIST]
    assert {j[3] for j in other_jobs} == {OutputFormat.PLAIN_TEXT}


def test_render_parse_round_trip_for_all_kinds(entries, by_key):
    for entry in entries:
        partner = by_key[entry.answers.comparison_partner]
        for kind in TemplateKind:
            for fmt in (OutputFormat.PLAIN_TEXT, OutputFormat.ONTOLOGIZED):
                if fmt is OutputFormat.ONTOLOGIZED and kind is not TemplateKind.LIST:
                    continue
                rendered = render_gold_answer(entry, kind, fmt, partner)
                parsed = parse_response(kind, fmt, rendered, context=entry.manual_text)
                if kind is TemplateKind.LIST:
                    assert parsed.answer == entry.gold_plan
                elif kind is TemplateKind.COUNTING:
                    assert parsed.answer == CountAnswer(answer_count(entry.gold_plan, entry.answers.count_mode).value)
                elif kind is TemplateKind.COMPARISON:
                    assert parsed.answer.winner == entry.answers.comparison_winner
                elif kind is TemplateKind.NESTED:
                    gold = answer_nested(entry.gold_plan, entry.answers.nested_step)
                    if gold is NO_SUBSTEPS or gold.substeps is None:
                        assert parsed.answer == NO_SUBSTEPS
                    else:
                        assert parsed.answer.substeps == gold.substeps
                else:
                    gold = answer_sequence(entry.gold_plan, entry.answers.sequence_step)
                    if gold.next_label is None:
                        assert parsed.answer == SequenceAnswer(None)
                    else:
                        # Sequence replies are compared after answer-text
                        # folding (the parser drops the sentence-final dot).
                        assert normalize_answer_text(parsed.answer.next_label) == normalize_answer_text(
                            gold.next_label
                        )


def test_replay_run_is_deterministic(entries):
    spec = ExperimentSpec()
    first = run_experiment(spec, entries, cassette=DEMO_CASSETTE)
    second = run_experiment(spec, entries, cassette=DEMO_CASSETTE)
    payload_one = json.dumps(scores_payload(first, aggregate(first)), sort_keys=True)
    payload_two = json.dumps(scores_payload(second, aggregate(second)), sort_keys=True)
    assert payload_one == payload_two
    assert first.run_id == second.run_id


def test_parallel_run_matches_sequential(entries):
    sequential = run_experiment(ExperimentSpec(), entries, cassette=DEMO_CASSETTE)
    parallel = run_experiment(ExperimentSpec(parallelism=4), entries, cassette=DEMO_CASSETTE)
    strip = lambda run: [c.as_dict() for c in run.cells]
    assert strip(sequential) == strip(parallel)


def test_oracle_correct_answer_scores_exact_match(entries, by_key):
    entry = next(e for e in entries if e.slug == "registering-picture-style")
    spec = ExperimentSpec(templates=(TemplateKind.COUNTING,), settings=("raw",), formats=(OutputFormat.PLAIN_TEXT,))
    n = answer_count(entry.gold_plan, entry.answers.count_mode).value
    backend = FakeBackend(f"There are {n} main steps in this procedure.")
    run = run_experiment(spec, entries, backend=backend)
    cells = [c for c in run.cells if c.entry == entry.key]
    assert len(cells) == 1 and cells[0].exact == 1


def test_wrong_answer_scores_zero(entries):
    spec = ExperimentSpec(templates=(TemplateKind.COUNTING,), settings=("raw",))
    run = run_experiment(spec, entries, backend=FakeBackend("There are 99 steps."))
    assert all(c.exact == 0 for c in run.cells)


def test_unparseable_list_response_still_scored(entries):
    spec = ExperimentSpec(templates=(TemplateKind.LIST,), settings=("raw",), formats=(OutputFormat.PLAIN_TEXT,))
    run = run_experiment(spec, entries, backend=FakeBackend("nothing enumerable at all"))
    for cell in run.cells:
        assert cell.unparseable
        assert cell.rouge is not None  # scored on the raw text anyway
        assert cell.rouge.rouge1.f1 < 0.3


def test_full_url_reply_scores_higher_after_normalization(entries):
    entry = next(e for e in entries if e.slug == "registering-picture-style")
    no_prefix = rdfio.write_turtle(rdfio.make_graph(entry.gold_graph.triples, {}))
    spec = ExperimentSpec(templates=(TemplateKind.LIST,), settings=("raw",), formats=(OutputFormat.ONTOLOGIZED,))
    run = run_experiment(spec, entries, backend=FakeBackend(f"```turtle\n{no_prefix}```"))
    cell = next(c for c in run.cells if c.entry == entry.key)
    assert cell.rouge_normalized is not None
    for metric in ("rouge1", "rouge2", "rougeL", "rougeLsum"):
        raw = cell.rouge.as_dict()[metric]["f1"]
        normalized = cell.rouge_normalized.as_dict()[metric]["f1"]
        assert normalized > raw
    assert cell.rouge_normalized.rouge1.f1 == 1.0


def test_cassette_miss_marks_cell_failed_without_aborting(entries):
    spec = ExperimentSpec(templates=(TemplateKind.COUNTING,), settings=("raw",))
    run = run_experiment(
        spec, entries, cassette=DEMO_CASSETTE, provider=ProviderConfig(model="never-recorded")
    )
    assert run.cells  # the run completed
    assert all(c.error and "fingerprint" in c.error for c in run.cells)
    assert all(c.exact is None for c in run.cells)


# ---------------------------------------------------------------------------
# Aggregation and reports.


def _case(f1: float) -> RougeScore:
    return RougeScore(f1, f1, f1)


def _report(f1: float) -> RougeReport:
    return RougeReport(_case(f1), _case(f1), _case(f1), _case(f1))


def test_single_procedure_row_equals_its_scores(entries):
    # One evaluated procedure per domain, so each row is just its own cell.
    run = run_experiment(ExperimentSpec(), entries, cassette=DEMO_CASSETTE)
    rows = aggregate(run)
    text_rows = [r for r in rows if r.format_label == "text"]
    assert len(text_rows) == 4
    for row in text_rows:
        cell = next(
            c for c in run.cells
            if c.domain == row.domain and c.template == "list" and c.setting == "raw" and c.format == "text"
        )
        assert row.rouge["raw"] == cell.rouge
        assert row.n == 1


def test_mean_rendering_and_zero_two_cells():
    row = ReportRow(
        domain="medicine",
        format_label="ont.",
        n=2,
        rouge={"raw": _report(0.448), "2shot": _report(0.869)},
        rouge_normalized={},
        exact={},
    )
    report = emit_report([row], "markdown")
    assert "44.8/86.9" in report
    mean = ReportRow(
        domain="medicine", format_label="text", n=2,
        rouge={"raw": _report((0.8 + 0.9) / 2)}, rouge_normalized={}, exact={},
    )
    assert "85.0" in emit_report([mean], "markdown")


def test_markdown_report_shape(entries):
    run = run_experiment(ExperimentSpec(), entries, cassette=DEMO_CASSETTE)
    report = emit_report(aggregate(run), "markdown")
    table_rows = [l for l in report.splitlines() if l.startswith("| ") and "|---" not in l]
    main_table = [l for l in table_rows if l.split("|")[2].strip() in ("text", "ont.")]
    # 4 domains x 2 formats in the main table, before the normalized section.
    assert len([l for l in main_table]) >= 8


def test_empty_rows_render_header_only():
    report = emit_report([], "markdown")
    assert "| Domain | Format |" in report
    assert emit_report([], "csv").count("\n") == 1


def test_csv_round_trip(entries):
    run = run_experiment(ExperimentSpec(), entries, cassette=DEMO_CASSETTE)
    rows = aggregate(run)
    text = emit_report(rows, "csv")
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert parsed
    by_key = {(r["domain"], r["format"], r["setting"]): r for r in parsed}
    sample = by_key[("photography", "text", "2shot")]
    assert sample["rouge1_f1"] == f"{rows_for(rows, 'photography', 'text').rouge['2shot'].rouge1.f1 * 100:.1f}"


def rows_for(rows, domain, fmt):
    return next(r for r in rows if r.domain == domain and r.format_label == fmt)


def test_json_report_parses(entries):
    run = run_experiment(ExperimentSpec(), entries, cassette=DEMO_CASSETTE)
    payload = json.loads(emit_report(aggregate(run), "json"))
    assert len(payload) == 8


def test_spec_validation():
    with pytest.raises(SpecError):
        ExperimentSpec(settings=("raw", "3shot"))
    with pytest.raises(SpecError):
        ExperimentSpec(backend="telepathy")
    with pytest.raises(SpecError):
        ExperimentSpec(parallelism=0)


def test_spec_from_file(tmp_path):
    path = tmp_path / "spec.toml"
    path.write_text(
        'templates = ["list", "counting"]\nsettings = ["raw"]\nformats = ["text"]\nbackend = "replay"\n'
    )
    spec = ExperimentSpec.from_file(path)
    assert spec.templates == (TemplateKind.LIST, TemplateKind.COUNTING)
    assert spec.settings == ("raw",)
