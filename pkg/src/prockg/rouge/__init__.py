from .kernels import backend_name, lcs_length, lcs_pick
from .scores import RougeReport, RougeScore, rouge_l, rouge_lsum, rouge_n, score_all
from .tokenizer import DEFAULT_CONFIG, ONTOLOGY_CONFIG, TokenizeConfig, split_sentences, tokenize

__all__ = [
    "DEFAULT_CONFIG",
    "ONTOLOGY_CONFIG",
    "RougeReport",
    "RougeScore",
    "TokenizeConfig",
    "backend_name",
    "lcs_length",
    "lcs_pick",
    "rouge_l",
    "rouge_lsum",
    "rouge_n",
    "score_all",
    "split_sentences",
    "tokenize",
]
