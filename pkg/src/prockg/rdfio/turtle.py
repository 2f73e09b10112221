"""Turtle serialization for the procedure-graph profile.

Writer output is deterministic: prefixes sorted, subjects in plan-traversal
order, predicates in the fixed profile order, "a" for rdf:type, and ";" /
"." grouping. The reader covers the profile subset — @prefix, prefixed
names, <IRI>, "a", ";", ",", ".", quoted literals with escapes, comments —
and reports syntax errors with line and column. Prefixed names whose prefix
is undeclared but standard (e.g. model output that skips @prefix lines)
still resolve.
"""

from __future__ import annotations

from .terms import (
    PREDICATE_ORDER,
    RDF_TYPE,
    Graph,
    Iri,
    Literal,
    Triple,
    contract,
    expand,
    make_graph,
    subject_order,
)


class TurtleSyntaxError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _quote(text: str) -> str:
    return '"' + "".join(_ESCAPES.get(ch, ch) for ch in text) + '"'


def _term(obj: Iri | Literal, prefixes: dict[str, str]) -> str:
    if isinstance(obj, Literal):
        return _quote(obj.text)
    short = contract(obj, prefixes)
    return short if short is not None else f"<{obj.value}>"


def write_turtle(graph: Graph) -> str:
    prefixes = graph.prefix_map
    lines = [f"@prefix {prefix}: <{iri}> ." for prefix, iri in sorted(prefixes.items())]
    by_subject: dict[Iri, list[Triple]] = {}
    for t in graph.triples:
        by_subject.setdefault(t.subject, []).append(t)

    rank = {p: i for i, p in enumerate(PREDICATE_ORDER)}

    for subject in subject_order(graph):
        lines.append("")
        triples = by_subject[subject]
        preds = sorted(
            {t.predicate for t in triples},
            key=lambda p: (rank.get(p, len(rank)), p.value),
        )
        parts = []
        for pred in preds:
            objs = sorted(
                (t.object for t in triples if t.predicate == pred),
                key=lambda o: (isinstance(o, Iri), o.value if isinstance(o, Iri) else o.text),
            )
            rendered = ", ".join(_term(o, prefixes) for o in objs)
            name = "a" if pred == RDF_TYPE else _term(pred, prefixes)
            parts.append(f"{name} {rendered}")
        head = _term(subject, prefixes)
        if len(parts) == 1:
            lines.append(f"{head} {parts[0]} .")
        else:
            lines.append(f"{head} {parts[0]} ;")
            for part in parts[1:-1]:
                lines.append(f"    {part} ;")
            lines.append(f"    {parts[-1]} .")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Reader.

_PN_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.")
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


class _Token:
    __slots__ = ("kind", "value", "line", "column")

    def __init__(self, kind: str, value: str, line: int, column: int):
        self.kind = kind
        self.value = value
        self.line = line
        self.column = column


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line = 1
    col = 1
    i = 0
    n = len(text)

    def error(msg: str):
        return TurtleSyntaxError(msg, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch in ".;,":
            tokens.append(_Token("punct", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        if ch == "<":
            j = text.find(">", i + 1)
            if j == -1 or "\n" in text[i:j]:
                raise error("unterminated IRI")
            tokens.append(_Token("iri", text[i + 1 : j], start_line, start_col))
            col += j - i + 1
            i = j + 1
            continue
        if ch == '"':
            j = i + 1
            out: list[str] = []
            while True:
                if j >= n or text[j] == "\n":
                    raise error("unterminated literal")
                c = text[j]
                if c == "\\":
                    if j + 1 >= n or text[j + 1] not in _UNESCAPES:
                        raise error("unsupported escape in literal")
                    out.append(_UNESCAPES[text[j + 1]])
                    j += 2
                    continue
                if c == '"':
                    break
                out.append(c)
                j += 1
            tokens.append(_Token("literal", "".join(out), start_line, start_col))
            col += j - i + 1
            i = j + 1
            continue
        if ch == "@":
            j = i + 1
            while j < n and text[j].isalpha():
                j += 1
            word = text[i + 1 : j]
            if word != "prefix":
                raise error(f"unsupported directive @{word}")
            tokens.append(_Token("at_prefix", word, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch in _PN_CHARS and ch != "." or ch == ":":
            j = i
            while j < n and (text[j] in _PN_CHARS or text[j] == ":"):
                j += 1
            # A name never ends with "."; trailing dots are statement
            # terminators and get re-scanned as punctuation.
            while j > i + 1 and text[j - 1] == ".":
                j -= 1
            word = text[i:j]
            tokens.append(_Token("name", word, start_line, start_col))
            col += j - i
            i = j
            continue
        raise error(f"unexpected character {ch!r}")
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.prefixes: dict[str, str] = {}
        self.triples: list[Triple] = []

    def _peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self, expectation: str) -> _Token:
        tok = self._peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else _Token("", "", 1, 1)
            raise TurtleSyntaxError(f"unexpected end of input, expected {expectation}", last.line, last.column)
        self.pos += 1
        return tok

    def _fail(self, tok: _Token, message: str):
        raise TurtleSyntaxError(message, tok.line, tok.column)

    def _resolve(self, tok: _Token) -> Iri:
        if tok.kind == "iri":
            return Iri(tok.value)
        if tok.kind == "name":
            if ":" not in tok.value:
                self._fail(tok, f"expected an IRI or prefixed name, got {tok.value!r}")
            try:
                return expand(tok.value, self.prefixes)
            except KeyError as exc:
                self._fail(tok, str(exc.args[0]))
        self._fail(tok, f"expected an IRI or prefixed name, got {tok.value!r}")
        raise AssertionError

    def parse(self) -> None:
        while self._peek() is not None:
            tok = self._peek()
            if tok.kind == "at_prefix":
                self._directive()
            else:
                self._statement()

    def _directive(self) -> None:
        self._next("@prefix")
        name = self._next("prefix name")
        if name.kind != "name" or not name.value.endswith(":"):
            self._fail(name, "expected a prefix name ending in ':'")
        iri = self._next("namespace IRI")
        if iri.kind != "iri":
            self._fail(iri, "expected <IRI> after prefix name")
        dot = self._next("'.'")
        if dot.kind != "punct" or dot.value != ".":
            self._fail(dot, "expected '.' after @prefix directive")
        self.prefixes[name.value[:-1]] = iri.value

    def _statement(self) -> None:
        subject = self._resolve(self._next("subject"))
        while True:
            pred_tok = self._next("predicate")
            if pred_tok.kind == "name" and pred_tok.value == "a":
                predicate = RDF_TYPE
            else:
                predicate = self._resolve(pred_tok)
            while True:
                obj_tok = self._next("object")
                obj: Iri | Literal
                if obj_tok.kind == "literal":
                    obj = Literal(obj_tok.value)
                else:
                    obj = self._resolve(obj_tok)
                self.triples.append(Triple(subject, predicate, obj))
                sep = self._next("',', ';' or '.'")
                if sep.kind != "punct":
                    self._fail(sep, f"expected punctuation after object, got {sep.value!r}")
                if sep.value == ",":
                    continue
                break
            if sep.value == ";":
                nxt = self._peek()
                if nxt is not None and nxt.kind == "punct" and nxt.value == ".":
                    self.pos += 1
                    return  # tolerate "; ." tail
                continue
            if sep.value == ".":
                return
            self._fail(sep, f"unexpected {sep.value!r}")


def read_turtle(text: str) -> Graph:
    parser = _Parser(_tokenize(text))
    parser.parse()
    namespaces = dict(parser.prefixes)
    return make_graph(parser.triples, namespaces) if namespaces else make_graph(parser.triples)
