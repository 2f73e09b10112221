#!/usr/bin/env python3
"""Regenerate the shipped demo fixtures: corpus, cassette, and golden files.

The demo corpus is synthetic: twelve procedures across the four supported
domains, each with a manual chunk, a gold extraction in text and Turtle,
and oracle-consistent expected answers. The cassette holds scripted model
responses for every replay cell — mostly faithful, with a handful of
deliberate flaws (a miscount, a comparison reasoning error, a hallucinated
substep list, a noisy sequence reply, full-URL Turtle in the raw setting)
so the measurement paths stay exercised.

Run from the repository root:

    python3 scripts/build_demo.py

Rewrites demo/corpus/, demo/cassette.jsonl, demo/golden/.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from prockg import harness, llm, prompting, rdfio, textparse  # noqa: E402
from prockg.corpus import lint_corpus, load_corpus  # noqa: E402
from prockg.model import Plan  # noqa: E402
from prockg.oracle import answer_comparison, answer_count, answer_nested, answer_sequence  # noqa: E402
from prockg.corpus import comparison_contexts  # noqa: E402
from prockg.prompting import OutputFormat, TemplateKind  # noqa: E402

DEMO = ROOT / "demo"

MANUALS: dict[str, dict] = {
    "photography/format-memory-card": {
        "name": "Format the Memory Card",
        "nested_step": "Step4",
        "sequence_step": "Step2",
        "partner": "photography/fully-automatic-shooting",
        "manual": """\
Format the Memory Card
1. Turn the power switch to ON.
2. Press the MENU button to display the menu.
3. Select the Set-up tab and choose Format Card.
4. Select OK to start formatting.
   Warning: formatting erases all images and data on the card.
5. Wait until the access lamp stops blinking.
6. Turn the power switch to OFF and remove the card.
""",
    },
    "photography/fully-automatic-shooting": {
        "name": "Fully Automatic Shooting",
        "nested_step": "Step2",
        "sequence_step": "Step4",
        "partner": "photography/registering-picture-style",
        "manual": """\
Fully Automatic Shooting
1. Set the lens focus mode switch to AF.
2. Prepare the camera for automatic capture.
  2.1. Set the mode dial to the Full Auto position.
  2.2. Check that the image quality setting suits the scene.
  2.3. Half-press the shutter button to focus on the subject.
3. Compose the shot within the viewfinder frame.
4. Press the shutter button completely to take the picture.
5. Review the image on the LCD monitor.
   Note: the image displays for about two seconds after capture.
""",
    },
    "photography/registering-picture-style": {
        "name": "Registering the Picture Style",
        "nested_step": "Step3",
        "sequence_step": "Step4",
        "partner": "photography/format-memory-card",
        "manual": """\
Registering the Picture Style
1. Press the Picture Style selection button on the rear panel.
2. Choose the User Defined style slot and press SET.
   Note: slots one to three can each hold one registered style.
3. Select an existing base style to modify its parameters.
4. Adjust sharpness, contrast, and saturation, then register the result.
""",
    },
    "medicine/changing-gas-cylinders": {
        "name": "Changing Gas Cylinders",
        "nested_step": "Step3",
        "sequence_step": "Step5",
        "partner": "medicine/installation-of-fm-type",
        "manual": """\
Changing Gas Cylinders
1. Close the cylinder valve completely before disconnection.
2. Bleed the remaining gas from the regulator.
   Warning: never loosen a fitting while the line is pressurised.
3. Unscrew the regulator from the empty cylinder.
4. Inspect the sealing washer and replace it if worn.
5. Screw the regulator onto the full cylinder and tighten by hand.
6. Open the valve slowly and check for leaks with soapy water.
""",
    },
    "medicine/installation-of-fm-type": {
        "name": "Installation of FM Type",
        "nested_step": "Step3",
        "sequence_step": "Step1",
        "partner": "medicine/two-cylinder-portable-system-assembly",
        "manual": """\
Installation of FM Type
1. Mount the bracket to the wall using the supplied anchors.
2. Seat the flowmeter unit onto the bracket rail.
3. Connect the supply hose to the inlet port.
4. Fit the humidifier bottle to the outlet.
   Note: hand-tighten only; tools can crack the bottle collar.
5. Perform a leak test at the working pressure.
""",
    },
    "medicine/two-cylinder-portable-system-assembly": {
        "name": "2-Cylinder Portable System Assembly",
        "nested_step": "Step5",
        "sequence_step": "Step2",
        "partner": "medicine/changing-gas-cylinders",
        "manual": """\
2-Cylinder Portable System Assembly
1. Place both cylinders upright in the carrier frame.
2. Attach the hoses to the flowmeter.
  2.1. Remove the protective caps from the hose ends.
  2.2. Connect the green hose to the oxygen inlet.
  2.3. Connect the clear hose to the air inlet.
3. Secure the retaining strap around both cylinders.
4. Connect the regulator to the primary cylinder.
   Note: the primary cylinder is the one marked with a red collar.
5. Open both cylinder valves one full turn.
6. Verify the flowmeter ball rises smoothly.
7. Label the system with the inspection date.
""",
    },
    "manufacturing/inspect-the-pump": {
        "name": "Inspect the pump",
        "nested_step": "Step2",
        "sequence_step": "Step3",
        "partner": "manufacturing/support-plate-installation",
        "manual": """\
Inspect the pump
1. Isolate the pump and lock out the power supply.
2. Check the coupling guard for damage.
3. Measure the bearing temperature at the drive end.
4. Inspect the mechanical seal area for leakage.
5. Record the suction and discharge pressures.
6. Sign the inspection sheet and restore power.
""",
    },
    "manufacturing/mechanical-seal-removal": {
        "name": "Removal and installation of Mechanical seal",
        "nested_step": "Step4",
        "sequence_step": "Step8",
        "partner": "manufacturing/inspect-the-pump",
        "manual": """\
Removal and installation of Mechanical seal
1. Drain the pump casing completely.
2. Disconnect the coupling from the drive motor.
3. Remove the casing bolts and lift off the casing.
4. Extract the impeller from the shaft.
  4.1. Block the impeller to stop shaft rotation.
  4.2. Unscrew the impeller nut counter-clockwise.
5. Slide the old seal assembly off the shaft sleeve.
6. Clean the sleeve and check it for scoring.
7. Fit the new seal with the lapped faces together.
   Note: never touch the lapped faces with bare fingers.
8. Reassemble the casing and torque the bolts crosswise.
9. Reconnect the coupling and restore the drive guard.
""",
    },
    "manufacturing/support-plate-installation": {
        "name": "Install the support plate with a pit cover",
        "nested_step": "Step3",
        "sequence_step": "Step7",
        "partner": "manufacturing/mechanical-seal-removal",
        "manual": """\
Install the support plate with a pit cover
1. Verify the pit cover seats flush on its frame.
2. Position the support plate over the pit cover.
3. Align the anchor holes with the template marks.
4. Drill the anchor holes to the specified depth.
5. Clean the drilled holes of dust and debris.
6. Insert the expansion anchors and tap them home.
7. Bolt the support plate down in a diagonal sequence.
   Note: torque the bolts to the value on the data sheet.
8. Check the plate for level in both directions.

Install the support plate without a pit cover
1. Mark the plate outline directly on the floor slab.
2. Drill and clean the anchor holes.
3. Set the plate on shims and check the level.
4. Bolt the plate down and recheck the level.
5. Grout beneath the plate and allow it to cure.
""",
    },
    "agriculture/changing-front-axle-oil": {
        "name": "Changing Front Axle Oil",
        "nested_step": "Step4",
        "sequence_step": "Step3",
        "partner": "agriculture/lowering-rops-crossbar",
        "manual": """\
Changing Front Axle Oil
1. Park the tractor on level ground and stop the engine.
2. Place a drain pan under the front axle housing.
3. Remove the drain plug and let the oil drain fully.
4. Refit the drain plug with a new sealing washer.
5. Fill the housing with oil to the level plug opening.
   Note: use only the oil grade listed in the lubrication chart.
""",
    },
    "agriculture/lowering-rops-crossbar": {
        "name": "Lowering ROPS Crossbar",
        "nested_step": "Step2",
        "sequence_step": "Step4",
        "partner": "agriculture/operating-hydrostatic-transmission",
        "manual": """\
Lowering ROPS Crossbar
1. Stop the tractor and remove the key.
2. Support the crossbar with one hand before releasing it.
3. Pull both locking pins and fold the crossbar forward.
4. Reinsert the pins in the storage holes.
   Warning: drive with the crossbar lowered only when clearance demands it.
""",
    },
    "agriculture/operating-hydrostatic-transmission": {
        "name": "Operating the Hydrostatic Transmission",
        "nested_step": "Step3",
        "sequence_step": "Step1",
        "partner": "agriculture/changing-front-axle-oil",
        "manual": """\
Operating the Hydrostatic Transmission
1. Sit in the operator seat and fasten the seat belt.
2. Start the engine and release the parking brake.
3. Select the speed range with the range lever.
  3.1. Use the low range for loader work.
  3.2. Use the mid range for field work.
  3.3. Use the high range for transport.
4. Press the forward pedal slowly to begin moving.
   Note: pedal pressure controls ground speed in each range.
5. Release the pedal to slow down and stop.
6. Engage the parking brake before leaving the seat.
""",
    },
}


def _toml_str(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_corpus() -> None:
    for key, info in MANUALS.items():
        entry_dir = DEMO / "corpus" / key
        entry_dir.mkdir(parents=True, exist_ok=True)
        manual = info["manual"]
        (entry_dir / "manual.txt").write_text(manual, "utf-8")

        spans = textparse.detect_procedures(manual)
        named = [s for s in spans if s.name == info["name"]]
        if len(named) != 1:
            raise SystemExit(f"{key}: expected a span named {info['name']!r}, found {[s.name for s in spans]}")
        plan = textparse.parse_procedure(textparse.span_text(manual, named[0]), info["name"])
        (entry_dir / "gold.txt").write_text(textparse.render_text(plan), "utf-8")
        (entry_dir / "gold.ttl").write_text(rdfio.write_turtle(rdfio.to_triples(plan)), "utf-8")

        count = answer_count(plan).value
        nested = answer_nested(plan, info["nested_step"])
        seq = answer_sequence(plan, info["sequence_step"])

        partner_manual = MANUALS[info["partner"]]["manual"]
        ctx1_plans = tuple(
            textparse.parse_procedure(textparse.span_text(manual, s), s.name)
            for s in textparse.detect_procedures(manual)
        )
        ctx2_plans = tuple(
            textparse.parse_procedure(textparse.span_text(partner_manual, s), s.name)
            for s in textparse.detect_procedures(partner_manual)
        )
        from prockg.oracle import ComparisonContext

        winner = answer_comparison(
            [ComparisonContext("Context1", ctx1_plans), ComparisonContext("Context2", ctx2_plans)]
        )

        if nested.substeps is None:
            substeps_value = '"no substeps"'
        else:
            substeps_value = "[" + ", ".join(_toml_str(s) for s in nested.substeps) + "]"
        next_value = '"end of plan"' if seq.next_label is None else _toml_str(seq.next_label)

        answers = f"""\
procedure_name = {_toml_str(info["name"])}

[count]
mode = "main"
value = {count}

[comparison]
partner = {_toml_str(info["partner"])}
winner = {_toml_str(winner.plan_label)}

[nested]
step = {_toml_str(info["nested_step"])}
substeps = {substeps_value}

[sequence]
step = {_toml_str(info["sequence_step"])}
next = {next_value}
"""
        (entry_dir / "answers.toml").write_text(answers, "utf-8")
        print(f"corpus: {key} ({count} main steps, winner {winner.plan_label!r})")


def _strip_bodies(plan: Plan) -> Plan:
    steps = tuple(
        dataclasses.replace(
            step,
            body="",
            sub_plan=_strip_bodies(step.sub_plan) if step.sub_plan else None,
        )
        for step in plan.steps
    )
    return dataclasses.replace(plan, steps=steps)


def _full_url_turtle(plan: Plan) -> str:
    """The gold graph minus comments, written with no prefix table — every
    term comes out as a full <IRI>, the raw-setting habit being simulated."""
    graph = rdfio.to_triples(plan)
    triples = frozenset(t for t in graph.triples if t.predicate != rdfio.RDFS_COMMENT)
    return rdfio.write_turtle(rdfio.make_graph(triples, {}))


def synthesize_response(entry, kind: TemplateKind, setting: str, fmt: OutputFormat, by_key) -> str:
    partner = by_key[entry.answers.comparison_partner]
    if kind is TemplateKind.LIST:
        if fmt is OutputFormat.ONTOLOGIZED:
            if setting == "2shot":
                return entry.gold_ontology_text
            body = _full_url_turtle(entry.gold_plan)
            return f"Here is the extracted procedure as an RDF graph:\n\n```turtle\n{body}```\n"
        if setting == "2shot":
            return entry.gold_text
        listing = textparse.render_text(_strip_bodies(entry.gold_plan))
        return f'Here are the steps of the "{entry.procedure_name}" procedure:\n\n{listing}'
    if kind is TemplateKind.COUNTING:
        n = answer_count(entry.gold_plan, entry.answers.count_mode).value
        if setting == "raw" and entry.domain == "medicine":
            n += 1  # scripted miscount
        return f"There are {n} main steps in this procedure."
    if kind is TemplateKind.COMPARISON:
        if setting == "raw" and entry.key == "manufacturing/support-plate-installation":
            # Scripted reasoning error: picks the bigger procedure of
            # Context1 over the 9-step procedure in Context2.
            return (
                'The procedure "Install the support plate with a pit cover" in Context1 '
                "has more main steps than the others."
            )
        winner = answer_comparison(comparison_contexts(entry, partner), entry.answers.count_mode)
        return f'The procedure "{winner.plan_label}" in {winner.context_name} has the most main steps.'
    if kind is TemplateKind.NESTED:
        nested = answer_nested(entry.gold_plan, entry.answers.nested_step)
        if setting == "raw" and entry.domain == "medicine":
            # Scripted hallucination: substeps that exist nowhere in the manual.
            return (
                f"{harness.display_step(entry.answers.nested_step)} includes the following substeps:\n"
                "1. Bleed the pressure line before lifting the frame.\n"
                "2. Recalibrate the manifold gauge."
            )
        if nested.substeps is None:
            return "no substeps"
        return "\n".join(f"{i}. {label}" for i, label in enumerate(nested.substeps, start=1))
    if kind is TemplateKind.SEQUENCE:
        seq = answer_sequence(entry.gold_plan, entry.answers.sequence_step)
        if seq.next_label is None:
            if setting == "raw":
                return (
                    f"{harness.display_step(entry.answers.sequence_step)} is the last step of this "
                    "procedure; there is no next step."
                )
            return "End of plan."
        if setting == "raw" and entry.domain == "agriculture":
            # Scripted noise: the note rides along on the same line.
            return f"{seq.next_label} (Note: avoid sudden pedal movement.)"
        if setting == "raw":
            return f'The next step is "{seq.next_label}".'
        return seq.next_label
    raise AssertionError(kind)


def write_cassette(spec: harness.ExperimentSpec, entries, provider: llm.ProviderConfig) -> Path:
    cassette = DEMO / "cassette.jsonl"
    if cassette.exists():
        cassette.unlink()
    by_key = {e.key: e for e in entries}
    templates = prompting.default_templates()
    evaluated, exemplars, _ = harness.split_entries(spec, entries)
    for entry, kind, setting_name, fmt in harness.plan_cells(spec, evaluated):
        setting = harness.make_setting(
            setting_name, entry, kind, fmt, exemplars.get(entry.domain, ()), by_key, templates
        )
        partner = by_key.get(entry.answers.comparison_partner)
        request = harness.build_request(entry, kind, setting, fmt, partner)
        conversation = prompting.build_prompt(request, templates)
        fp = llm.fingerprint(conversation, provider.model, provider.temperature)
        response = synthesize_response(entry, kind, setting_name, fmt, by_key)
        llm.append_cassette(cassette, fp, provider.model, response)
    print(f"cassette: {cassette} ({sum(1 for _ in cassette.open())} entries)")
    return cassette


def write_golden(spec: harness.ExperimentSpec, entries, cassette: Path, provider: llm.ProviderConfig) -> None:
    run = harness.run_experiment(spec, list(entries), provider=provider, cassette=cassette)
    rows = harness.aggregate(run)
    golden = DEMO / "golden"
    golden.mkdir(parents=True, exist_ok=True)
    payload = harness.scores_payload(run, rows)
    (golden / "scores.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")
    (golden / "report.md").write_text(harness.emit_report(rows, "markdown"), "utf-8")
    failed = [c for c in run.cells if c.error]
    print(f"golden: {golden}/scores.json ({len(run.cells)} cells, {len(failed)} with errors)")


def main() -> None:
    write_corpus()
    loaded = load_corpus(DEMO / "corpus")
    if loaded.problems:
        for p in loaded.problems:
            print(f"PROBLEM {p.key}: {p.message}")
        raise SystemExit("corpus generation produced unloadable entries")
    lint = lint_corpus(loaded.entries)
    if lint:
        for message in lint:
            print(f"LINT {message}")
        raise SystemExit("corpus generation produced lint findings")
    spec = harness.ExperimentSpec()  # raw + 2shot, both formats, replay
    provider = llm.ProviderConfig()
    cassette = write_cassette(spec, loaded.entries, provider)
    write_golden(spec, loaded.entries, cassette, provider)


if __name__ == "__main__":
    main()
