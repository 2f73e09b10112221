"""Deterministic tokenization for ROUGE scoring.

Plain mode splits on alphanumeric runs. Ontology mode additionally keeps
IRIs and prefixed names (``kh-p:nextStep``, ``<http://...>``, bare URLs)
as single tokens, so that prefix-vs-full-URL divergence between a
generated graph and the reference is measurable rather than smeared
across many word tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_WORD = re.compile(r"[A-Za-z0-9]+")

# Order matters: bracketed IRI, bare URL, prefixed name, then plain word.
_ONT_TOKEN = re.compile(
    r"<[^<>\s]+>"
    r"|[A-Za-z][A-Za-z0-9+.-]*://[^\s<>\"]+"
    r"|[A-Za-z][A-Za-z0-9_-]*:[A-Za-z0-9_#/.~-]+"
    r"|[A-Za-z0-9_]+"
)


@dataclass(frozen=True)
class TokenizeConfig:
    lowercase: bool = True
    ontology_mode: bool = False


DEFAULT_CONFIG = TokenizeConfig()
ONTOLOGY_CONFIG = TokenizeConfig(ontology_mode=True)


def tokenize(text: str, config: TokenizeConfig = DEFAULT_CONFIG) -> list[str]:
    """Token sequence for `text`; empty input gives an empty sequence."""
    if config.lowercase:
        text = text.lower()
    pattern = _ONT_TOKEN if config.ontology_mode else _WORD
    return pattern.findall(text)


def split_sentences(text: str) -> list[str]:
    """Newline-based sentence split; blank lines are dropped."""
    return [line for line in text.splitlines() if line.strip()]
