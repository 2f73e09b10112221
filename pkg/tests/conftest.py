from __future__ import annotations

import random
from pathlib import Path

import pytest

from prockg.model import Plan, Step

ROOT = Path(__file__).resolve().parent.parent
DEMO_CORPUS = ROOT / "demo" / "corpus"
DEMO_CASSETTE = ROOT / "demo" / "cassette.jsonl"
GOLDEN = ROOT / "demo" / "golden"

WORDS = [
    "align", "check", "open", "close", "valve", "pump", "seal", "lock",
    "shaft", "guard", "oil", "drain", "bolt", "plate", "lever", "filter",
]

LISTING_FIXTURE = """\
Motor Belts and Spindle Alignment
11.3.3 Tailstock Alignment
Complete the previous task. Align the tailstock according to provided instructions.
11.3.4 Spindle Alignment
A subprocess for spindle alignment.
  11.3.4.1 Loosen Bearing Lock Nut
  As part of spindle alignment, loosen the bearing lock nut.
  11.3.4.2 Adjust Spindle Bearing
  11.3.4.3 Tighten Bearing Lock Nut
  11.3.4.4 Verify Spindle Alignment
"""


def random_plan(rng: random.Random, max_depth: int = 3, max_total: int = 20) -> Plan:
    """A random valid plan: unique ids, depths < max_depth, <= max_total steps."""
    state = {"n": 0, "total": 0}

    def next_id(prefix: str) -> str:
        state["n"] += 1
        return f"{prefix}{state['n']}"

    def words(k: int) -> str:
        return " ".join(rng.choice(WORDS) for _ in range(k))

    def make_plan(depth: int) -> Plan:
        width = rng.randint(1, 4)
        steps = []
        for _ in range(width):
            if state["total"] >= max_total:
                break
            state["total"] += 1
            sub = None
            if depth < max_depth - 1 and state["total"] < max_total and rng.random() < 0.35:
                sub = make_plan(depth + 1)
            steps.append(
                Step(
                    id=next_id("N"),
                    label=words(3),
                    body=words(5) if rng.random() < 0.3 else "",
                    sub_plan=sub,
                )
            )
        if not steps:
            state["total"] += 1
            steps.append(Step(id=next_id("N"), label=words(2)))
        return Plan(id=next_id("P"), label=words(2), steps=tuple(steps))

    return make_plan(0)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20260810)
