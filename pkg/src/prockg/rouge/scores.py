"""ROUGE-1/2/L/Lsum computed from scratch over explicit tokenization.

Conventions (fixed and documented rather than inherited from any toolkit):

* no stemming, no stopword removal; lowercase folding per TokenizeConfig;
* recall divides by reference counts, precision by candidate counts, and
  F1 is the harmonic mean (0 when both components are 0);
* ROUGE-Lsum splits on newlines, takes for each reference sentence the
  union of canonical-LCS positions against every candidate sentence, and
  clips the summed hits by candidate/reference token multiplicities so
  all scores stay within [0, 1].
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import kernels
from .tokenizer import DEFAULT_CONFIG, TokenizeConfig, split_sentences, tokenize


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, candidate_total: int, reference_total: int) -> RougeScore:
        precision = overlap / candidate_total if candidate_total else 0.0
        recall = overlap / reference_total if reference_total else 0.0
        return cls(precision, recall, _f1(precision, recall))


ZERO_SCORE = RougeScore(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RougeReport:
    """The four-metric bundle for one candidate/reference pair."""

    rouge1: RougeScore
    rouge2: RougeScore
    rougeL: RougeScore
    rougeLsum: RougeScore

    def as_dict(self) -> dict[str, dict[str, float]]:
        return {
            name: {"precision": s.precision, "recall": s.recall, "f1": s.f1}
            for name, s in [
                ("rouge1", self.rouge1),
                ("rouge2", self.rouge2),
                ("rougeL", self.rougeL),
                ("rougeLsum", self.rougeLsum),
            ]
        }

    def rendered(self, figure: str = "f1") -> dict[str, str]:
        """Scores scaled to 0-100 with one decimal, e.g. "79.6"."""
        out = {}
        for name, score in self.as_dict().items():
            out[name] = f"{score[figure] * 100:.1f}"
        return out


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: list[str], reference: list[str], n: int) -> RougeScore:
    """Clipped n-gram overlap (n in {1, 2})."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    return RougeScore.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def _to_ids(*sequences: list[str]) -> list[np.ndarray]:
    vocab: dict[str, int] = {}
    out = []
    for seq in sequences:
        ids = np.empty(len(seq), np.int64)
        for i, tok in enumerate(seq):
            ids[i] = vocab.setdefault(tok, len(vocab))
        out.append(ids)
    return out


def rouge_l(candidate: list[str], reference: list[str]) -> RougeScore:
    """Sequence-level LCS score; either side empty gives all zeros."""
    if not candidate or not reference:
        return ZERO_SCORE
    cand_ids, ref_ids = _to_ids(candidate, reference)
    length = kernels.lcs_length(cand_ids, ref_ids)
    return RougeScore.from_counts(length, len(candidate), len(reference))


def rouge_lsum(candidate: str, reference: str, config: TokenizeConfig = DEFAULT_CONFIG) -> RougeScore:
    """Summary-level LCS over newline sentences with clipped union hits."""
    cand_sents = [tokenize(s, config) for s in split_sentences(candidate)]
    ref_sents = [tokenize(s, config) for s in split_sentences(reference)]
    cand_sents = [s for s in cand_sents if s]
    ref_sents = [s for s in ref_sents if s]
    cand_total = sum(len(s) for s in cand_sents)
    ref_total = sum(len(s) for s in ref_sents)
    if not cand_total or not ref_total:
        return ZERO_SCORE

    cand_budget = Counter(tok for s in cand_sents for tok in s)
    ref_budget = Counter(tok for s in ref_sents for tok in s)
    hits = 0
    for ref_sent in ref_sents:
        id_seqs = _to_ids(ref_sent, *cand_sents)
        ref_ids, cand_ids = id_seqs[0], id_seqs[1:]
        union: set[int] = set()
        for ids in cand_ids:
            union.update(int(i) for i in kernels.lcs_pick(ref_ids, ids))
        for i in sorted(union):
            tok = ref_sent[i]
            if cand_budget[tok] > 0 and ref_budget[tok] > 0:
                hits += 1
                cand_budget[tok] -= 1
                ref_budget[tok] -= 1
    return RougeScore.from_counts(hits, cand_total, ref_total)


def score_all(candidate: str, reference: str, config: TokenizeConfig = DEFAULT_CONFIG) -> RougeReport:
    """All four metrics for one candidate/reference text pair."""
    cand_tokens = tokenize(candidate, config)
    ref_tokens = tokenize(reference, config)
    return RougeReport(
        rouge1=rouge_n(cand_tokens, ref_tokens, 1),
        rouge2=rouge_n(cand_tokens, ref_tokens, 2),
        rougeL=rouge_l(cand_tokens, ref_tokens),
        rougeLsum=rouge_lsum(candidate, reference, config),
    )
