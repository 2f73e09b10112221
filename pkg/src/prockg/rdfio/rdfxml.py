"""RDF/XML serialization for the procedure-graph profile.

The writer emits one rdf:Description per subject with rdf:about, child
property elements carrying rdf:resource for IRI objects and text content
for literals — flat descriptions only, no nested node elements. The reader
covers exactly that shape plus the lenient habit of writing prefixed names
inside rdf:about / rdf:resource attributes, which occurs in hand-written
graphs in the wild.
"""

from __future__ import annotations

import io
import xml.etree.ElementTree as ET

from .terms import (
    PREDICATE_ORDER,
    RDF_NS,
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


class RdfXmlError(Exception):
    pass


def _attr_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _text_escape(text: str) -> str:
    out = text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    # Keep newlines explicit so literals survive the XML round trip.
    return out.replace("\r", "&#13;").replace("\n", "&#10;").replace("\t", "&#9;")


def write_rdfxml(graph: Graph) -> str:
    prefixes = graph.prefix_map
    rank = {p: i for i, p in enumerate(PREDICATE_ORDER)}
    by_subject: dict[Iri, list[Triple]] = {}
    for t in graph.triples:
        by_subject.setdefault(t.subject, []).append(t)

    def qname(iri: Iri) -> str:
        short = contract(iri, prefixes)
        if short is None:
            raise RdfXmlError(f"predicate {iri.value} has no declared prefix")
        return short

    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    decls = "".join(f'\n         xmlns:{p}="{_attr_escape(ns)}"' for p, ns in sorted(prefixes.items()))
    out.write(f"<rdf:RDF{decls}>\n" if "rdf" in prefixes else f'<rdf:RDF xmlns:rdf="{RDF_NS}"{decls}>\n')

    for subject in subject_order(graph):
        out.write(f'    <rdf:Description rdf:about="{_attr_escape(subject.value)}">\n')
        triples = by_subject[subject]
        preds = sorted(
            {t.predicate for t in triples},
            key=lambda p: (rank.get(p, len(rank)), p.value),
        )
        for pred in preds:
            objs = sorted(
                (t.object for t in triples if t.predicate == pred),
                key=lambda o: (isinstance(o, Iri), o.value if isinstance(o, Iri) else o.text),
            )
            for obj in objs:
                if pred == RDF_TYPE and isinstance(obj, Iri):
                    out.write(f'        <rdf:type rdf:resource="{_attr_escape(obj.value)}"/>\n')
                elif isinstance(obj, Iri):
                    out.write(f'        <{qname(pred)} rdf:resource="{_attr_escape(obj.value)}"/>\n')
                else:
                    out.write(f"        <{qname(pred)}>{_text_escape(obj.text)}</{qname(pred)}>\n")
        out.write("    </rdf:Description>\n")
    out.write("</rdf:RDF>\n")
    return out.getvalue()


def read_rdfxml(text: str) -> Graph:
    prefixes: dict[str, str] = {}
    try:
        root = None
        for event, payload in ET.iterparse(io.StringIO(text), events=("start-ns", "start")):
            if event == "start-ns":
                prefix, uri = payload
                if prefix:
                    prefixes[prefix] = uri
            elif root is None:
                root = payload
    except ET.ParseError as exc:
        raise RdfXmlError(f"not well-formed XML: {exc}") from exc
    if root is None or root.tag != f"{{{RDF_NS}}}RDF":
        raise RdfXmlError("document root is not rdf:RDF")

    def resolve(ref: str) -> Iri:
        try:
            return expand(ref, prefixes)
        except (KeyError, ValueError) as exc:
            raise RdfXmlError(f"cannot resolve {ref!r}: {exc}") from exc

    def element_iri(tag: str) -> Iri:
        if not tag.startswith("{"):
            raise RdfXmlError(f"element {tag!r} has no namespace")
        ns, local = tag[1:].split("}", 1)
        return Iri(ns + local)

    triples: list[Triple] = []
    for desc in root:
        if desc.tag != f"{{{RDF_NS}}}Description":
            raise RdfXmlError(f"unsupported element {desc.tag!r} (profile allows rdf:Description only)")
        about = desc.get(f"{{{RDF_NS}}}about")
        if about is None:
            raise RdfXmlError("rdf:Description without rdf:about")
        subject = resolve(about)
        for prop in desc:
            predicate = element_iri(prop.tag)
            resource = prop.get(f"{{{RDF_NS}}}resource")
            if resource is not None:
                triples.append(Triple(subject, predicate, resolve(resource)))
            else:
                triples.append(Triple(subject, predicate, Literal(prop.text or "")))

    return make_graph(triples, prefixes) if prefixes else make_graph(triples)
