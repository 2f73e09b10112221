from __future__ import annotations

import itertools
import random

import numpy as np
import pytest

from prockg.rouge import (
    ONTOLOGY_CONFIG,
    TokenizeConfig,
    rouge_l,
    rouge_lsum,
    rouge_n,
    score_all,
    tokenize,
)
from prockg.rouge.kernels import available_backends, lcs_length, lcs_pick


# ---------------------------------------------------------------------------
# Tokenizer.


def test_tokenize_plain():
    assert tokenize("Align the tailstock") == ["align", "the", "tailstock"]
    assert tokenize("") == []


def test_tokenize_keeps_case_when_asked():
    assert tokenize("Align IT", TokenizeConfig(lowercase=False)) == ["Align", "IT"]


ONT_FIXTURES = [
    ("kh-p:nextStep kh-p-instance:Step2", ["kh-p:nextstep", "kh-p-instance:step2"]),
    ("<http://purl.org/net/p-plan#Step>", ["<http://purl.org/net/p-plan#step>"]),
    ("http://purl.org/net/p-plan#Step", ["http://purl.org/net/p-plan#step"]),
    ('rdfs:label "Loosen Bearing Lock Nut" ;', ["rdfs:label", "loosen", "bearing", "lock", "nut"]),
    ("kh-p-instance:Step2 a p-plan:Step .", ["kh-p-instance:step2", "a", "p-plan:step"]),
]


@pytest.mark.parametrize("text,expected", ONT_FIXTURES)
def test_tokenize_ontology_mode(text, expected):
    assert tokenize(text, ONTOLOGY_CONFIG) == expected


# ---------------------------------------------------------------------------
# Brute-force oracles. Independent of the scored implementations: list
# counting for n-grams, subsequence-set intersection for LCS.


def oracle_ngram_overlap(cand: list[str], ref: list[str], n: int) -> tuple[int, int, int]:
    cand_grams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
    ref_grams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
    overlap = sum(min(cand_grams.count(g), ref_grams.count(g)) for g in set(cand_grams))
    return overlap, len(cand_grams), len(ref_grams)


def subsequences(seq: tuple) -> set[tuple]:
    out: set[tuple] = set()
    for k in range(len(seq) + 1):
        out.update(itertools.combinations(seq, k))
    return out


def oracle_lcs_len(a: tuple, b: tuple) -> int:
    common = subsequences(a) & subsequences(b)
    return max(len(t) for t in common)


def oracle_pick_positions(a: tuple, b: tuple) -> set[int]:
    """Positions (into a) of the lexicographically smallest max-length
    common subsequence, by full enumeration of index tuples."""
    best_len = oracle_lcs_len(a, b)
    b_subs = {t for t in subsequences(b) if len(t) == best_len}
    candidates = [
        idx
        for idx in itertools.combinations(range(len(a)), best_len)
        if tuple(a[i] for i in idx) in b_subs
    ]
    return set(min(candidates)) if candidates else set()


# ---------------------------------------------------------------------------
# Kernels.


def test_backends_agree_and_match_oracle():
    rng = random.Random(7)
    backends = available_backends()
    for _ in range(80):
        a = tuple(rng.randrange(5) for _ in range(rng.randint(0, 9)))
        b = tuple(rng.randrange(5) for _ in range(rng.randint(0, 9)))
        expected_len = oracle_lcs_len(a, b)
        assert lcs_length(a, b) == expected_len
        if a and b:
            assert set(int(i) for i in lcs_pick(a, b)) == oracle_pick_positions(a, b)
            arr_a = np.asarray(a, np.int64)
            arr_b = np.asarray(b, np.int64)
            for impl in backends.values():
                assert int(impl["lcs_length"](arr_a, arr_b)) == expected_len
                suf = impl["lcs_suffix_table"](arr_a, arr_b)
                assert set(int(i) for i in impl["lcs_pick"](arr_a, arr_b, suf)) == oracle_pick_positions(a, b)


def test_empty_inputs():
    assert lcs_length([], [1, 2]) == 0
    assert lcs_pick([], [1]).size == 0


# ---------------------------------------------------------------------------
# rouge_n.


def test_rouge_n_identity_and_disjoint():
    tokens = ["open", "the", "valve"]
    score = rouge_n(tokens, tokens, 1)
    assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)
    zero = rouge_n(["a", "b"], ["c", "d"], 1)
    assert (zero.precision, zero.recall, zero.f1) == (0.0, 0.0, 0.0)


def test_rouge_1_cat_on_mat():
    cand = "the cat sat on the mat".split()
    ref = "the cat was on the mat".split()
    overlap, cand_n, ref_n = oracle_ngram_overlap(cand, ref, 1)
    assert (overlap, cand_n, ref_n) == (5, 6, 6)
    score = rouge_n(cand, ref, 1)
    assert score.precision == score.recall == score.f1 == 5 / 6


def test_rouge_n_rejects_bad_n():
    with pytest.raises(ValueError):
        rouge_n(["a"], ["a"], 3)


# ---------------------------------------------------------------------------
# rouge_l.


def test_rouge_l_identity_reversal_empty():
    tokens = ["a", "b", "c"]
    one = rouge_l(tokens, tokens)
    assert (one.precision, one.recall, one.f1) == (1.0, 1.0, 1.0)
    rev = rouge_l(["c", "b", "a"], ["a", "b", "c"])
    assert rev.f1 == pytest.approx(1 / 3)
    assert oracle_lcs_len(("c", "b", "a"), ("a", "b", "c")) == 1
    zero = rouge_l([], ["a"])
    assert (zero.precision, zero.recall, zero.f1) == (0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# rouge_lsum.


def oracle_lsum(cand_text: str, ref_text: str) -> tuple[int, int, int]:
    """Brute-force union-LCS with multiplicity clipping."""
    from collections import Counter

    cand_sents = [tuple(tokenize(s)) for s in cand_text.splitlines() if s.strip()]
    ref_sents = [tuple(tokenize(s)) for s in ref_text.splitlines() if s.strip()]
    cand_budget = Counter(t for s in cand_sents for t in s)
    ref_budget = Counter(t for s in ref_sents for t in s)
    hits = 0
    for ref in ref_sents:
        union: set[int] = set()
        for cand in cand_sents:
            union |= oracle_pick_positions(ref, cand)
        for i in sorted(union):
            tok = ref[i]
            if cand_budget[tok] > 0 and ref_budget[tok] > 0:
                hits += 1
                cand_budget[tok] -= 1
                ref_budget[tok] -= 1
    return hits, sum(len(s) for s in cand_sents), sum(len(s) for s in ref_sents)


def test_lsum_single_line_equals_rouge_l():
    cand = "open the valve then drain"
    ref = "drain the valve slowly"
    lsum = rouge_lsum(cand, ref)
    l = rouge_l(tokenize(cand), tokenize(ref))
    assert (lsum.precision, lsum.recall, lsum.f1) == (l.precision, l.recall, l.f1)


def test_lsum_identity_multiline():
    text = "open the valve\ndrain the oil\nclose the valve"
    assert rouge_lsum(text, text).f1 == 1.0


def test_lsum_reordered_two_lines_matches_oracle():
    cand = "drain the oil pan\nopen the main valve"
    ref = "open the main valve\ndrain the oil pan"
    hits, cand_total, ref_total = oracle_lsum(cand, ref)
    score = rouge_lsum(cand, ref)
    assert score.recall == hits / ref_total
    assert score.precision == hits / cand_total


def test_lsum_matches_oracle_on_random_texts():
    rng = random.Random(99)
    vocab = ["open", "close", "valve", "pump", "oil", "drain", "the", "seal"]
    for _ in range(40):
        cand = "\n".join(
            " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 6)))
            for _ in range(rng.randint(1, 3))
        )
        ref = "\n".join(
            " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 6)))
            for _ in range(rng.randint(1, 3))
        )
        hits, cand_total, ref_total = oracle_lsum(cand, ref)
        score = rouge_lsum(cand, ref)
        assert score.recall == hits / ref_total
        assert score.precision == hits / cand_total


# ---------------------------------------------------------------------------
# score_all.


def test_score_all_identity_and_empty():
    text = "drain the oil\nrefill the housing"
    report = score_all(text, text)
    assert all(s["f1"] == 1.0 for s in report.as_dict().values())
    report = score_all("", "drain the oil")
    assert all(s["f1"] == 0.0 for s in report.as_dict().values())


def test_score_all_composes_the_four_metrics():
    cand = "open the valve\ndrain the oil"
    ref = "open the valve slowly\ndrain all the oil"
    report = score_all(cand, ref)
    cand_tokens, ref_tokens = tokenize(cand), tokenize(ref)
    assert report.rouge1 == rouge_n(cand_tokens, ref_tokens, 1)
    assert report.rouge2 == rouge_n(cand_tokens, ref_tokens, 2)
    assert report.rougeL == rouge_l(cand_tokens, ref_tokens)
    assert report.rougeLsum == rouge_lsum(cand, ref)


def test_rendered_style():
    report = score_all("a b c", "a b c")
    assert report.rendered()["rouge1"] == "100.0"


def test_f1_symmetry_and_bounds_fuzz():
    rng = random.Random(5)
    vocab = ["a", "b", "c", "d"]
    for _ in range(60):
        x = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
        y = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
        for fn in (lambda u, v: rouge_n(u, v, 1), lambda u, v: rouge_n(u, v, 2), rouge_l):
            ab, ba = fn(x, y), fn(y, x)
            assert ab.f1 == ba.f1
            assert ab.precision == ba.recall and ab.recall == ba.precision
            assert 0.0 <= ab.f1 <= 1.0
