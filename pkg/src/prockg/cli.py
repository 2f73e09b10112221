"""Command-line entry point.

Subcommands: parse (text -> plan in text/turtle/rdfxml), query (the five
oracle templates over a plan file), score (ROUGE between two files),
extract (LLM extraction of one procedure), evaluate (full corpus run).

Exit codes are stable for scripting: 0 success, 1 I/O, 2 data/parse
errors, 3 LLM/backend errors. Every subcommand accepts --json for
machine-readable output. Nothing here is nondeterministic except
--backend live.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, llm, prompting, rdfio, textparse
from .corpus import lint_corpus, load_corpus
from .model import validate
from .oracle import (
    ComparisonContext,
    CountMode,
    TieDetected,
    UnknownStep,
    answer_comparison,
    answer_count,
    answer_list,
    answer_nested,
    answer_sequence,
)
from .rouge import ONTOLOGY_CONFIG, TokenizeConfig, score_all

EXIT_OK = 0
EXIT_IO = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text("utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, "utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def _load_plan(path: str):
    """Plan from a file, by extension: .ttl/.rdf graphs or enumerated text."""
    text = _read_text(path)
    suffix = Path(path).suffix.lower()
    try:
        if suffix == ".ttl":
            plans = rdfio.from_triples(rdfio.read_turtle(text))
        elif suffix in (".rdf", ".xml"):
            plans = rdfio.from_triples(rdfio.read_rdfxml(text))
        else:
            return textparse.parse_procedure(text, Path(path).stem)
    except (rdfio.TurtleSyntaxError, rdfio.RdfXmlError, rdfio.GraphStructureError, textparse.ParseError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_DATA) from exc
    if not plans:
        raise CliError(f"{path}: no plan found in graph", EXIT_DATA)
    return plans[0]


def _provider_from_config(path: str | None) -> llm.ProviderConfig:
    if path is None:
        return llm.ProviderConfig()
    if sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    try:
        data = tomllib.loads(_read_text(path))
    except ValueError as exc:
        raise CliError(f"bad config {path}: {exc}", EXIT_DATA) from exc
    try:
        return llm.ProviderConfig(**data.get("provider", data))
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad provider config in {path}: {exc}", EXIT_DATA) from exc


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_parse(args) -> int:
    text = _read_text(args.infile)
    try:
        plan = textparse.parse_procedure(text, args.name or "")
    except textparse.ParseError as exc:
        raise CliError(f"parse error: {exc}", EXIT_DATA) from exc
    violations = validate(plan)
    if violations:
        raise CliError(f"parsed plan is invalid: {violations[0].message}", EXIT_DATA)
    if args.format == "text":
        out = textparse.render_text(plan)
    elif args.format == "turtle":
        out = rdfio.write_turtle(rdfio.to_triples(plan))
    else:
        out = rdfio.write_rdfxml(rdfio.to_triples(plan))
    if args.json:
        out = json.dumps({"plan_id": plan.id, "format": args.format, "content": out}, indent=2) + "\n"
    _write_text(args.out, out)
    return EXIT_OK


def _render_list(items, depth=0) -> list[str]:
    lines = []
    for item in items:
        lines.append("  " * depth + f"- {item.label}")
        lines.extend(_render_list(item.children, depth + 1))
    return lines


def cmd_query(args) -> int:
    plan = _load_plan(args.plan)
    mode = CountMode(args.mode)
    try:
        if args.template == "list":
            answer = answer_list(plan)
            payload = {"labels": answer.flat_labels()}
            text = "\n".join(_render_list(answer.items))
        elif args.template == "count":
            answer = answer_count(plan, mode)
            payload = {"count": answer.value, "mode": mode.value}
            text = str(answer.value)
        elif args.template == "comparison":
            if not args.plan2:
                raise CliError("comparison needs --plan2", EXIT_DATA)
            other = _load_plan(args.plan2)
            winner = answer_comparison(
                [ComparisonContext("Context1", (plan,)), ComparisonContext("Context2", (other,))], mode
            )
            payload = {
                "winner": winner.plan_label,
                "plan_id": winner.plan_id,
                "count": winner.count,
                "context": winner.context_name,
            }
            text = f'"{winner.plan_label}" in {winner.context_name} ({winner.count} steps)'
        elif args.template == "nested":
            if not args.step:
                raise CliError("nested needs --step", EXIT_DATA)
            answer = answer_nested(plan, args.step)
            payload = {"substeps": list(answer.substeps) if answer.substeps is not None else None}
            text = "\n".join(answer.substeps) if answer.substeps is not None else "no substeps"
        else:  # sequence
            if not args.step:
                raise CliError("sequence needs --step", EXIT_DATA)
            answer = answer_sequence(plan, args.step)
            payload = {"next": answer.next_label}
            text = answer.next_label if answer.next_label is not None else "end of plan"
    except UnknownStep as exc:
        raise CliError(str(exc), EXIT_DATA) from exc
    except TieDetected as exc:
        raise CliError(f"tie: {exc}", EXIT_DATA) from exc
    print(json.dumps(payload, indent=2) if args.json else text)
    return EXIT_OK


def cmd_score(args) -> int:
    candidate = _read_text(args.candidate)
    reference = _read_text(args.reference)
    if args.normalized:
        try:
            candidate = rdfio.write_turtle(rdfio.normalize(rdfio.read_turtle(candidate)))
            reference = rdfio.write_turtle(rdfio.normalize(rdfio.read_turtle(reference)))
        except rdfio.TurtleSyntaxError as exc:
            raise CliError(f"--normalized needs Turtle inputs: {exc}", EXIT_DATA) from exc
    config = ONTOLOGY_CONFIG if (args.ontology_mode or args.normalized) else TokenizeConfig()
    report = score_all(candidate, reference, config)
    if args.json:
        print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    else:
        rendered = report.rendered(args.figure)
        print("| Rouge1 | Rouge2 | RougeL | Rouge-Lsum |")
        print("|---|---|---|---|")
        print(f"| {rendered['rouge1']} | {rendered['rouge2']} | {rendered['rougeL']} | {rendered['rougeLsum']} |")
    return EXIT_OK


def _backend_for(args, provider):
    if args.backend == "live":
        return llm.LiveBackend()
    if not args.cassette:
        raise CliError(f"--backend {args.backend} needs --cassette", EXIT_DATA)
    if args.backend == "replay":
        try:
            return llm.ReplayBackend(args.cassette)
        except OSError as exc:
            raise CliError(f"cannot read cassette {args.cassette}: {exc}", EXIT_IO) from exc
    return llm.RecordingBackend(llm.LiveBackend(), args.cassette)


def cmd_extract(args) -> int:
    manual = _read_text(args.manual)
    provider = _provider_from_config(args.config)
    fmt = prompting.OutputFormat.PLAIN_TEXT if args.format == "text" else prompting.OutputFormat.ONTOLOGIZED

    if args.setting == "2shot":
        if len(args.exemplar or ()) != 2:
            raise CliError("--setting 2shot needs exactly two --exemplar QFILE:AFILE pairs", EXIT_DATA)
        shots = []
        for pair in args.exemplar:
            qfile, sep, afile = pair.partition(":")
            if not sep:
                raise CliError(f"--exemplar must be QFILE:AFILE, got {pair!r}", EXIT_DATA)
            shots.append(prompting.Exemplar(question=_read_text(qfile), gold_answer=_read_text(afile)))
        setting = prompting.TwoShot(exemplars=(shots[0], shots[1]))
    elif args.setting == "definitions":
        setting = prompting.OntologyDefinitions()
    else:
        setting = prompting.Raw()

    request = prompting.PromptRequest(
        kind=prompting.TemplateKind.LIST,
        setting=setting,
        format=fmt,
        context=manual,
        procedure_name=args.procedure,
    )
    try:
        conversation = prompting.build_prompt(request)
    except prompting.MissingParam as exc:
        raise CliError(str(exc), EXIT_DATA) from exc

    backend = _backend_for(args, provider)
    try:
        response = backend.complete(conversation, provider)
    except llm.LlmError as exc:
        raise CliError(f"backend failure: {exc}", EXIT_BACKEND) from exc

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    transcript = {
        "messages": [{"role": m.role, "content": m.content} for m in conversation],
        "response": response,
    }
    (out_dir / "transcript.json").write_text(json.dumps(transcript, indent=2, sort_keys=True) + "\n", "utf-8")

    try:
        parsed = prompting.parse_response(prompting.TemplateKind.LIST, fmt, response, context=manual)
    except prompting.UnparseableResponse as exc:
        print(f"unparseable response (transcript written): {exc}", file=sys.stderr)
        return EXIT_DATA
    plan = parsed.answer
    (out_dir / "plan.txt").write_text(textparse.render_text(plan), "utf-8")
    (out_dir / "plan.ttl").write_text(rdfio.write_turtle(rdfio.to_triples(plan)), "utf-8")
    if args.json:
        print(json.dumps({"out": str(out_dir), "plan_id": plan.id, "ungrounded": list(parsed.ungrounded)}))
    else:
        print(f"extracted plan {plan.id} -> {out_dir}")
        for label in parsed.ungrounded:
            print(f"warning: step not grounded in context: {label}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    provider = _provider_from_config(args.config)
    try:
        loaded = load_corpus(args.corpus)
    except Exception as exc:
        raise CliError(f"cannot load corpus: {exc}", EXIT_DATA) from exc
    if loaded.problems:
        for problem in loaded.problems:
            print(f"corpus problem: {problem.key}: {problem.message}", file=sys.stderr)
        raise CliError(f"{len(loaded.problems)} corpus entries failed to load", EXIT_DATA)
    lint = lint_corpus(loaded.entries)
    if lint:
        for message in lint:
            print(f"lint: {message}", file=sys.stderr)
        raise CliError(f"corpus lint failed with {len(lint)} findings", EXIT_DATA)

    try:
        spec = harness.ExperimentSpec.from_file(args.spec) if args.spec else harness.ExperimentSpec()
        if args.backend:
            spec_dict = spec.as_dict()
            spec_dict["backend"] = args.backend
            spec = harness.ExperimentSpec(**spec_dict)
    except harness.SpecError as exc:
        raise CliError(str(exc), EXIT_DATA) from exc

    try:
        run = harness.run_experiment(spec, list(loaded.entries), provider=provider, cassette=args.cassette)
    except (harness.SpecError, llm.LlmError) as exc:
        raise CliError(f"run failed: {exc}", EXIT_BACKEND) from exc
    rows = harness.aggregate(run)
    run_dir = harness.write_run(run, rows, args.out, loaded.problems)

    failed = [c for c in run.cells if c.error]
    if args.json:
        print(json.dumps({"run_dir": str(run_dir), "cells": len(run.cells), "failed_cells": len(failed)}))
    else:
        print(f"wrote {run_dir} ({len(run.cells)} cells, {len(failed)} failed)")
        if failed:
            for cell in failed:
                print(f"failed cell {cell.cell_key}: {cell.error}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prockg", description=__doc__.splitlines()[0] if __doc__ else "")
    parser.add_argument("--config", help="TOML file with provider settings", default=None)
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a procedure text file into a plan")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--name", default="")
    p.add_argument("--format", choices=("text", "turtle", "rdfxml"), default="turtle")
    p.add_argument("--out", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("query", help="answer one of the five templates from a plan file")
    p.add_argument("--plan", required=True)
    p.add_argument("--template", choices=("list", "count", "comparison", "nested", "sequence"), required=True)
    p.add_argument("--step", default=None)
    p.add_argument("--plan2", default=None)
    p.add_argument("--mode", choices=("main", "recursive"), default="main")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("score", help="ROUGE between a candidate and a reference file")
    p.add_argument("--candidate", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--ontology-mode", action="store_true", help="tokenize IRIs/prefixed names as single tokens")
    p.add_argument("--normalized", action="store_true", help="normalize both graphs before scoring")
    p.add_argument("--figure", choices=("f1", "recall", "precision"), default="f1")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("extract", help="extract one procedure through the LLM pipeline")
    p.add_argument("--manual", required=True)
    p.add_argument("--procedure", required=True)
    p.add_argument("--setting", choices=("raw", "definitions", "2shot"), default="raw")
    p.add_argument("--format", choices=("text", "ontology"), default="text")
    p.add_argument("--backend", choices=("live", "replay", "record"), default="live")
    p.add_argument("--cassette", default=None)
    p.add_argument("--exemplar", action="append", metavar="QFILE:AFILE")
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="run an experiment over a gold corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--spec", default=None, help="experiment spec TOML; defaults to raw+2shot, both formats")
    p.add_argument("--backend", choices=("live", "replay", "record"), default=None)
    p.add_argument("--cassette", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
