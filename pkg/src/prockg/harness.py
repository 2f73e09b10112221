"""Runs template x setting x format experiments over a gold corpus and
aggregates the results into report tables.

Template 1 (list) cells are scored with ROUGE against the gold extraction
in the matching format; ontologized cells are scored twice, on the raw
serialization and again after graph normalization. Templates 2-5 are
scored by exact match against the in-graph oracle. Every cell is isolated:
a backend failure or an unparseable reply marks that cell and the run
continues.

2-shot exemplars come from the corpus itself (first two entries of the
evaluated entry's domain by default); exemplar entries are excluded from
the evaluated set so no entry ever sees itself, and zero-shot cells in the
same run are computed over the same evaluated population for comparable
"zero/two" cells.
"""

from __future__ import annotations

import hashlib
import json
import re
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import llm, prompting, rdfio, textparse
from .corpus import CorpusEntry, comparison_contexts, normalize_answer_text
from .llm import ChatMessage, LlmError, ProviderConfig
from .oracle import (
    CountAnswer,
    NestedAnswer,
    SequenceAnswer,
    TieDetected,
    answer_comparison,
    answer_count,
    answer_nested,
    answer_sequence,
)
from .prompting import (
    SETTING_NAMES,
    TEMPLATE_ORDER,
    Exemplar,
    OntologyDefinitions,
    OutputFormat,
    PromptRequest,
    Raw,
    TemplateKind,
    TwoShot,
    UnparseableResponse,
)
from .rouge import ONTOLOGY_CONFIG, RougeReport, RougeScore, score_all

# Row order used by the report tables.
DOMAIN_ORDER = ("photography", "medicine", "manufacturing", "agriculture")

FORMAT_LABELS = {OutputFormat.PLAIN_TEXT: "text", OutputFormat.ONTOLOGIZED: "ont."}

BACKENDS = ("live", "replay", "record")


class SpecError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    templates: tuple[TemplateKind, ...] = TEMPLATE_ORDER
    settings: tuple[str, ...] = ("raw", "2shot")
    formats: tuple[OutputFormat, ...] = (OutputFormat.PLAIN_TEXT, OutputFormat.ONTOLOGIZED)
    backend: str = "replay"
    exemplar_policy: str = "same-domain"  # or "cross-domain"
    parallelism: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "templates", tuple(TemplateKind(t) for t in self.templates))
        object.__setattr__(self, "formats", tuple(OutputFormat(f) for f in self.formats))
        object.__setattr__(self, "settings", tuple(self.settings))
        for s in self.settings:
            if s not in SETTING_NAMES:
                raise SpecError(f"unknown setting {s!r}, expected one of {SETTING_NAMES}")
        if self.backend not in BACKENDS:
            raise SpecError(f"unknown backend {self.backend!r}, expected one of {BACKENDS}")
        if self.exemplar_policy not in ("same-domain", "cross-domain"):
            raise SpecError(f"unknown exemplar policy {self.exemplar_policy!r}")
        if self.parallelism < 1:
            raise SpecError("parallelism must be >= 1")

    def as_dict(self) -> dict:
        return {
            "templates": [t.value for t in self.templates],
            "settings": list(self.settings),
            "formats": [f.value for f in self.formats],
            "backend": self.backend,
            "exemplar_policy": self.exemplar_policy,
            "parallelism": self.parallelism,
        }

    @classmethod
    def from_file(cls, path: str | Path) -> ExperimentSpec:
        data = tomllib.loads(Path(path).read_text("utf-8"))
        try:
            return cls(**data)
        except TypeError as exc:
            raise SpecError(f"{path}: {exc}") from exc


@dataclass
class CellResult:
    entry: str
    domain: str
    template: str
    setting: str
    format: str
    response: str = ""
    error: str | None = None
    unparseable: bool = False
    ungrounded: tuple[str, ...] = ()
    exact: int | None = None
    rouge: RougeReport | None = None
    rouge_normalized: RougeReport | None = None

    @property
    def cell_key(self) -> str:
        return f"{self.entry.replace('/', '--')}__{self.template}__{self.setting}__{self.format}"

    def as_dict(self) -> dict:
        return {
            "entry": self.entry,
            "domain": self.domain,
            "template": self.template,
            "setting": self.setting,
            "format": self.format,
            "error": self.error,
            "unparseable": self.unparseable,
            "ungrounded": list(self.ungrounded),
            "exact": self.exact,
            "rouge": self.rouge.as_dict() if self.rouge else None,
            "rouge_normalized": self.rouge_normalized.as_dict() if self.rouge_normalized else None,
        }


@dataclass
class RunResult:
    run_id: str
    spec: ExperimentSpec
    evaluated: tuple[str, ...]
    exemplars: tuple[str, ...]
    cells: list[CellResult]
    transcripts: dict[str, dict] = field(default_factory=dict)


_STEP_ID = re.compile(r"^([A-Za-z]+?)(\d[\d_]*)$")


def display_step(step_id: str) -> str:
    """Human form of a step id for prompts: Step3 -> "Step 3"."""
    m = _STEP_ID.match(step_id)
    if not m:
        return step_id
    return f"{m.group(1)} {m.group(2).replace('_', '.')}"


def select_exemplars(entries: list[CorpusEntry], spec: ExperimentSpec) -> dict[str, tuple[CorpusEntry, CorpusEntry]]:
    """Pick the two exemplar entries per domain, deterministically.

    same-domain: the first two entries of the domain by slug, when the
    domain has at least three; otherwise (and under cross-domain) the first
    two entries from other domains.
    """
    if "2shot" not in spec.settings:
        return {}
    by_domain: dict[str, list[CorpusEntry]] = {}
    for entry in sorted(entries, key=lambda e: e.key):
        by_domain.setdefault(entry.domain, []).append(entry)
    out: dict[str, tuple[CorpusEntry, CorpusEntry]] = {}
    for domain, members in by_domain.items():
        if spec.exemplar_policy == "same-domain" and len(members) >= 3:
            out[domain] = (members[0], members[1])
            continue
        others = [e for e in sorted(entries, key=lambda e: e.key) if e.domain != domain]
        if len(others) < 2:
            raise SpecError(f"cannot pick 2-shot exemplars for domain {domain!r}: not enough entries")
        out[domain] = (others[0], others[1])
    return out


def render_gold_answer(
    entry: CorpusEntry,
    kind: TemplateKind,
    format: OutputFormat,
    partner: CorpusEntry | None = None,
) -> str:
    """The gold answer text for one entry and template — what a perfect
    reply looks like. Used for 2-shot exemplars and for round-trip checks."""
    if kind is TemplateKind.LIST:
        if format is OutputFormat.ONTOLOGIZED:
            return entry.gold_ontology_text
        return entry.gold_text
    if kind is TemplateKind.COUNTING:
        n = answer_count(entry.gold_plan, entry.answers.count_mode).value
        return f"There are {n} main steps in this procedure."
    if kind is TemplateKind.COMPARISON:
        if partner is None:
            raise ValueError("comparison answer needs the partner entry")
        winner = answer_comparison(comparison_contexts(entry, partner), entry.answers.count_mode)
        return f'The procedure "{winner.plan_label}" in {winner.context_name} has the most main steps.'
    if kind is TemplateKind.NESTED:
        nested = answer_nested(entry.gold_plan, entry.answers.nested_step)
        if nested.substeps is None:
            return "no substeps"
        return "\n".join(f"{i}. {label}" for i, label in enumerate(nested.substeps, start=1))
    if kind is TemplateKind.SEQUENCE:
        seq = answer_sequence(entry.gold_plan, entry.answers.sequence_step)
        return "End of plan." if seq.next_label is None else seq.next_label
    raise ValueError(f"unknown template kind {kind!r}")


def build_request(
    entry: CorpusEntry,
    kind: TemplateKind,
    setting,
    format: OutputFormat,
    partner: CorpusEntry | None,
) -> PromptRequest:
    return PromptRequest(
        kind=kind,
        setting=setting,
        format=format,
        context=entry.manual_text,
        procedure_name=entry.procedure_name,
        step=display_step(entry.answers.nested_step)
        if kind is TemplateKind.NESTED
        else display_step(entry.answers.sequence_step)
        if kind is TemplateKind.SEQUENCE
        else None,
        context2=partner.manual_text if kind is TemplateKind.COMPARISON and partner else None,
    )


def make_setting(name: str, entry: CorpusEntry, kind: TemplateKind, format: OutputFormat,
                 exemplar_entries, by_key, templates=None) -> Raw | OntologyDefinitions | TwoShot:
    """Setting object for one cell; 2-shot gets its exemplars built from
    the given exemplar entries, phrased exactly like the task itself."""
    if name == "raw":
        return Raw()
    if name == "definitions":
        return OntologyDefinitions()
    templates = templates or prompting.default_templates()
    shots = []
    for ex_entry in exemplar_entries:
        ex_partner = by_key.get(ex_entry.answers.comparison_partner)
        req = build_request(ex_entry, kind, Raw(), format, ex_partner)
        shots.append(
            Exemplar(
                question=prompting.task_message_text(req, templates),
                gold_answer=render_gold_answer(ex_entry, kind, format, ex_partner),
            )
        )
    if len(shots) != 2:
        raise SpecError(f"2-shot setting needs 2 exemplar entries, got {len(shots)}")
    return TwoShot(exemplars=(shots[0], shots[1]))


def split_entries(
    spec: ExperimentSpec, entries: list[CorpusEntry]
) -> tuple[list[CorpusEntry], dict[str, tuple[CorpusEntry, CorpusEntry]], list[str]]:
    """(evaluated entries, per-domain exemplar pairs, sorted exemplar keys).

    Exemplar entries never appear in the evaluated set, in any setting of
    the run, so zero-shot and 2-shot cells cover the same population.
    """
    exemplars = select_exemplars(entries, spec)
    exemplar_keys = sorted({e.key for pair in exemplars.values() for e in pair})
    evaluated = [e for e in sorted(entries, key=lambda e: e.key) if e.key not in exemplar_keys]
    return evaluated, exemplars, exemplar_keys


def plan_cells(
    spec: ExperimentSpec, evaluated: list[CorpusEntry]
) -> list[tuple[CorpusEntry, TemplateKind, str, OutputFormat]]:
    """The experiment grid in canonical order. Output formats apply to the
    list template; the question templates always run as plain text."""
    jobs: list[tuple[CorpusEntry, TemplateKind, str, OutputFormat]] = []
    for entry in sorted(evaluated, key=lambda e: e.key):
        for kind in (k for k in TEMPLATE_ORDER if k in spec.templates):
            formats = spec.formats if kind is TemplateKind.LIST else (OutputFormat.PLAIN_TEXT,)
            for setting_name in (s for s in SETTING_NAMES if s in spec.settings):
                for fmt in formats:
                    jobs.append((entry, kind, setting_name, fmt))
    return jobs


def _mean_report(reports: list[RougeReport]) -> RougeReport:
    def mean_score(pick) -> RougeScore:
        n = len(reports)
        return RougeScore(
            precision=sum(pick(r).precision for r in reports) / n,
            recall=sum(pick(r).recall for r in reports) / n,
            f1=sum(pick(r).f1 for r in reports) / n,
        )

    return RougeReport(
        rouge1=mean_score(lambda r: r.rouge1),
        rouge2=mean_score(lambda r: r.rouge2),
        rougeL=mean_score(lambda r: r.rougeL),
        rougeLsum=mean_score(lambda r: r.rougeLsum),
    )


def _score_list_cell(cell: CellResult, entry: CorpusEntry, format: OutputFormat, response: str) -> None:
    if format is OutputFormat.PLAIN_TEXT:
        try:
            parsed = prompting.parse_response(TemplateKind.LIST, format, response, context=entry.manual_text)
            cell.ungrounded = parsed.ungrounded
            candidate = textparse.render_text(parsed.answer)
        except UnparseableResponse:
            cell.unparseable = True
            candidate = response
        cell.rouge = score_all(candidate, entry.gold_text)
        return

    block = prompting.extract_turtle_block(response)
    raw_candidate = block if block is not None else response
    cell.rouge = score_all(raw_candidate, entry.gold_ontology_text, ONTOLOGY_CONFIG)
    try:
        graph = rdfio.read_turtle(raw_candidate)
        rdfio.from_triples(graph)  # must hold at least a structurally sound plan
        candidate_canonical = rdfio.write_turtle(rdfio.normalize(graph))
    except (rdfio.TurtleSyntaxError, rdfio.GraphStructureError) as exc:
        cell.unparseable = True
        cell.error = cell.error or f"ontologized reply does not parse: {exc}"
        return
    gold_canonical = rdfio.write_turtle(rdfio.normalize(entry.gold_graph))
    cell.rouge_normalized = score_all(candidate_canonical, gold_canonical, ONTOLOGY_CONFIG)


def _score_exact_cell(cell: CellResult, entry: CorpusEntry, kind: TemplateKind,
                      partner: CorpusEntry | None, response: str) -> None:
    try:
        parsed = prompting.parse_response(kind, OutputFormat.PLAIN_TEXT, response, context=entry.manual_text)
    except UnparseableResponse as exc:
        cell.unparseable = True
        cell.error = str(exc)
        cell.exact = 0
        return
    cell.ungrounded = parsed.ungrounded
    answers = entry.answers
    if kind is TemplateKind.COUNTING:
        gold = answer_count(entry.gold_plan, answers.count_mode)
        got = parsed.answer
        cell.exact = int(isinstance(got, CountAnswer) and got.value == gold.value)
    elif kind is TemplateKind.COMPARISON:
        if partner is None:
            cell.error = f"comparison partner {answers.comparison_partner!r} not in corpus"
            return
        try:
            gold = answer_comparison(comparison_contexts(entry, partner), answers.count_mode)
        except TieDetected as exc:
            cell.error = f"comparison ill-posed: {exc}"
            return
        claim = parsed.answer
        cell.exact = int(normalize_answer_text(claim.winner) == normalize_answer_text(gold.plan_label))
    elif kind is TemplateKind.NESTED:
        gold = answer_nested(entry.gold_plan, answers.nested_step)
        got = parsed.answer
        if not isinstance(got, NestedAnswer):
            cell.exact = 0
        elif (got.substeps is None) != (gold.substeps is None):
            cell.exact = 0
        elif got.substeps is None:
            cell.exact = 1
        else:
            cell.exact = int(
                [normalize_answer_text(s) for s in got.substeps]
                == [normalize_answer_text(s) for s in gold.substeps]
            )
    elif kind is TemplateKind.SEQUENCE:
        gold = answer_sequence(entry.gold_plan, answers.sequence_step)
        got = parsed.answer
        if not isinstance(got, SequenceAnswer):
            cell.exact = 0
        elif (got.next_label is None) != (gold.next_label is None):
            cell.exact = 0
        elif got.next_label is None:
            cell.exact = 1
        else:
            cell.exact = int(normalize_answer_text(got.next_label) == normalize_answer_text(gold.next_label))


def _make_backend(spec: ExperimentSpec, cassette: str | Path | None, backend=None):
    if backend is not None:
        return backend
    if spec.backend == "live":
        return llm.LiveBackend()
    if cassette is None:
        raise SpecError(f"backend {spec.backend!r} needs a cassette path")
    if spec.backend == "replay":
        return llm.ReplayBackend(cassette)
    return llm.RecordingBackend(llm.LiveBackend(), cassette)


def run_id_for(spec: ExperimentSpec, entries: list[CorpusEntry]) -> str:
    blob = json.dumps(
        {"spec": spec.as_dict(), "entries": sorted(e.key for e in entries)},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def run_experiment(
    spec: ExperimentSpec,
    entries: list[CorpusEntry],
    *,
    provider: ProviderConfig | None = None,
    cassette: str | Path | None = None,
    backend=None,
    templates=None,
) -> RunResult:
    """Execute every cell of the experiment grid.

    Cells are independent work items (spec.parallelism bounds the worker
    pool); failures are recorded per cell and never abort the run. Results
    come back sorted, so identical inputs yield identical RunResults.
    """
    provider = provider or ProviderConfig()
    backend = _make_backend(spec, cassette, backend)
    templates = templates or prompting.default_templates()
    by_key = {e.key: e for e in entries}
    evaluated, exemplars, exemplar_keys = split_entries(spec, entries)
    jobs = plan_cells(spec, evaluated)

    lock = threading.Lock()
    transcripts: dict[str, dict] = {}

    def run_cell(job) -> CellResult:
        entry, kind, setting_name, fmt = job
        cell = CellResult(
            entry=entry.key,
            domain=entry.domain,
            template=kind.value,
            setting=setting_name,
            format=fmt.value,
        )
        partner = by_key.get(entry.answers.comparison_partner)
        try:
            setting = make_setting(
                setting_name, entry, kind, fmt, exemplars.get(entry.domain, ()), by_key, templates
            )
            request = build_request(entry, kind, setting, fmt, partner)
            conversation = prompting.build_prompt(request, templates)
        except Exception as exc:
            cell.error = f"prompt construction failed: {exc}"
            return cell
        try:
            response = backend.complete(conversation, provider)
        except LlmError as exc:
            cell.error = str(exc)
            return cell
        cell.response = response
        with lock:
            transcripts[cell.cell_key] = {
                "messages": [{"role": m.role, "content": m.content} for m in conversation],
                "response": response,
            }
        if kind is TemplateKind.LIST:
            _score_list_cell(cell, entry, fmt, response)
        else:
            _score_exact_cell(cell, entry, kind, partner, response)
        return cell

    if spec.parallelism > 1:
        with ThreadPoolExecutor(max_workers=spec.parallelism) as pool:
            cells = list(pool.map(run_cell, jobs))
    else:
        cells = [run_cell(job) for job in jobs]

    cells.sort(key=lambda c: (c.entry, c.template, c.setting, c.format))
    return RunResult(
        run_id=run_id_for(spec, entries),
        spec=spec,
        evaluated=tuple(e.key for e in evaluated),
        exemplars=tuple(exemplar_keys),
        cells=cells,
        transcripts=transcripts,
    )


# ---------------------------------------------------------------------------
# Aggregation and reports.

EXACT_TEMPLATES = ("counting", "comparison", "nested", "sequence")


@dataclass(frozen=True)
class ReportRow:
    domain: str
    format_label: str  # "text" | "ont."
    n: int
    rouge: dict[str, RougeReport]  # setting -> mean
    rouge_normalized: dict[str, RougeReport]  # setting -> mean (ont. rows only)
    exact: dict[str, dict[str, tuple[int, int]]]  # template -> setting -> (hits, total)

    def as_dict(self) -> dict:
        return {
            "domain": self.domain,
            "format": self.format_label,
            "n": self.n,
            "rouge": {s: r.as_dict() for s, r in self.rouge.items()},
            "rouge_normalized": {s: r.as_dict() for s, r in self.rouge_normalized.items()},
            "exact": {t: {s: list(v) for s, v in by_setting.items()} for t, by_setting in self.exact.items()},
        }


def _setting_order(settings) -> list[str]:
    return [s for s in SETTING_NAMES if s in settings]


def aggregate(run: RunResult) -> list[ReportRow]:
    """Arithmetic means per domain x format x setting, plus exact-match
    tallies for the question templates."""
    domains = sorted(
        {c.domain for c in run.cells},
        key=lambda d: (DOMAIN_ORDER.index(d) if d in DOMAIN_ORDER else len(DOMAIN_ORDER), d),
    )
    rows: list[ReportRow] = []
    for domain in domains:
        domain_cells = [c for c in run.cells if c.domain == domain]
        exact: dict[str, dict[str, tuple[int, int]]] = {}
        for template in EXACT_TEMPLATES:
            if template not in {c.template for c in domain_cells}:
                continue
            per_setting: dict[str, tuple[int, int]] = {}
            for setting in _setting_order({c.setting for c in domain_cells}):
                scored = [c for c in domain_cells if c.template == template and c.setting == setting]
                graded = [c for c in scored if c.exact is not None]
                if scored:
                    per_setting[setting] = (sum(c.exact for c in graded), len(scored))
            if per_setting:
                exact[template] = per_setting
        for fmt in (OutputFormat.PLAIN_TEXT, OutputFormat.ONTOLOGIZED):
            list_cells = [c for c in domain_cells if c.template == "list" and c.format == fmt.value]
            if not list_cells:
                continue
            rouge: dict[str, RougeReport] = {}
            rouge_normalized: dict[str, RougeReport] = {}
            for setting in _setting_order({c.setting for c in list_cells}):
                scored = [c.rouge for c in list_cells if c.setting == setting and c.rouge is not None]
                if scored:
                    rouge[setting] = _mean_report(scored)
                normed = [
                    c.rouge_normalized
                    for c in list_cells
                    if c.setting == setting and c.rouge_normalized is not None
                ]
                if normed:
                    rouge_normalized[setting] = _mean_report(normed)
            rows.append(
                ReportRow(
                    domain=domain,
                    format_label=FORMAT_LABELS[fmt],
                    n=len({c.entry for c in list_cells}),
                    rouge=rouge,
                    rouge_normalized=rouge_normalized,
                    exact=exact,
                )
            )
    return rows


_METRIC_COLUMNS = ("rouge1", "rouge2", "rougeL", "rougeLsum")
_METRIC_HEADERS = ("Rouge1", "Rouge2", "RougeL", "Rouge-Lsum")


def _render_cell(by_setting: dict[str, RougeReport], metric: str, figure: str) -> str:
    parts = []
    for setting in _setting_order(by_setting):
        value = by_setting[setting].as_dict()[metric][figure]
        parts.append(f"{value * 100:.1f}")
    return "/".join(parts) if parts else "-"


def _render_exact(by_setting: dict[str, tuple[int, int]]) -> str:
    parts = [f"{s} {hits}/{total}" for s, (hits, total) in ((s, by_setting[s]) for s in _setting_order(by_setting))]
    return "; ".join(parts) if parts else "-"


def emit_report(rows: list[ReportRow], fmt: str = "markdown", figure: str = "f1") -> str:
    """Render aggregated rows as markdown, csv, or json.

    Markdown mirrors the familiar table layout: one row per domain and
    format with the four metric columns; cells carry one value per setting
    joined by "/" (zero-shot first). `figure` picks f1 (default) or recall.
    """
    if fmt == "json":
        return json.dumps([row.as_dict() for row in rows], indent=2, sort_keys=True) + "\n"

    if fmt == "csv":
        header = ["domain", "format", "setting", "n"]
        header += [f"{m}_{figure}" for m in _METRIC_COLUMNS]
        header += [f"{m}_{figure}_normalized" for m in _METRIC_COLUMNS]
        header += list(EXACT_TEMPLATES)
        lines = [",".join(header)]
        for row in rows:
            for setting in _setting_order(row.rouge):
                record = [row.domain, row.format_label, setting, str(row.n)]
                report = row.rouge[setting].as_dict()
                record += [f"{report[m][figure] * 100:.1f}" for m in _METRIC_COLUMNS]
                if setting in row.rouge_normalized:
                    normed = row.rouge_normalized[setting].as_dict()
                    record += [f"{normed[m][figure] * 100:.1f}" for m in _METRIC_COLUMNS]
                else:
                    record += ["", "", "", ""]
                for template in EXACT_TEMPLATES:
                    hits_total = row.exact.get(template, {}).get(setting)
                    record.append(f"{hits_total[0]}/{hits_total[1]}" if hits_total else "")
                lines.append(",".join(record))
        return "\n".join(lines) + "\n"

    if fmt != "markdown":
        raise ValueError(f"unknown report format {fmt!r}")

    lines = ["# Extraction scores", "", f"ROUGE {figure}, scaled to 100; cells list settings as "
             + "/".join(_setting_order({s for row in rows for s in row.rouge})) + ".", ""]
    lines.append("| Domain | Format | " + " | ".join(_METRIC_HEADERS) + " |")
    lines.append("|---|---|" + "---|" * len(_METRIC_HEADERS))
    for row in rows:
        cells = [_render_cell(row.rouge, m, figure) for m in _METRIC_COLUMNS]
        lines.append(f"| {row.domain} | {row.format_label} | " + " | ".join(cells) + " |")
    normalized_rows = [r for r in rows if r.rouge_normalized]
    if normalized_rows:
        lines += ["", "## After graph normalization", ""]
        lines.append("| Domain | Format | " + " | ".join(_METRIC_HEADERS) + " |")
        lines.append("|---|---|" + "---|" * len(_METRIC_HEADERS))
        for row in normalized_rows:
            cells = [_render_cell(row.rouge_normalized, m, figure) for m in _METRIC_COLUMNS]
            lines.append(f"| {row.domain} | {row.format_label} | " + " | ".join(cells) + " |")
    exact_rows = [r for r in rows if r.format_label == "text" and r.exact]
    if exact_rows:
        lines += ["", "## Exact match, question templates", ""]
        lines.append("| Domain | " + " | ".join(t.capitalize() for t in EXACT_TEMPLATES) + " |")
        lines.append("|---|" + "---|" * len(EXACT_TEMPLATES))
        for row in exact_rows:
            cells = [_render_exact(row.exact.get(t, {})) for t in EXACT_TEMPLATES]
            lines.append(f"| {row.domain} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def scores_payload(run: RunResult, rows: list[ReportRow], problems=()) -> dict:
    return {
        "run_id": run.run_id,
        "spec": run.spec.as_dict(),
        "evaluated": list(run.evaluated),
        "exemplars": list(run.exemplars),
        "problems": [{"entry": p.key, "message": p.message} for p in problems],
        "cells": [c.as_dict() for c in run.cells],
        "rows": [r.as_dict() for r in rows],
    }


def write_run(run: RunResult, rows: list[ReportRow], out_dir: str | Path, problems=()) -> Path:
    """Persist transcripts, scores.json, and report.md under out/<run-id>/."""
    run_dir = Path(out_dir) / run.run_id
    transcripts_dir = run_dir / "transcripts"
    transcripts_dir.mkdir(parents=True, exist_ok=True)
    for cell_key in sorted(run.transcripts):
        path = transcripts_dir / f"{cell_key}.json"
        path.write_text(json.dumps(run.transcripts[cell_key], indent=2, sort_keys=True) + "\n", "utf-8")
    payload = scores_payload(run, rows, problems)
    (run_dir / "scores.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")
    (run_dir / "report.md").write_text(emit_report(rows, "markdown"), "utf-8")
    return run_dir
