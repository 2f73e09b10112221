from .mapping import (
    BrokenChain,
    DanglingReference,
    GraphStructureError,
    InvalidPlan,
    MissingAnchor,
    from_triples,
    to_triples,
)
from .rdfxml import RdfXmlError, read_rdfxml, write_rdfxml
from .terms import (
    ENDS_WITH,
    IS_DECOMPOSED_AS_PLAN,
    IS_STEP_OF_PLAN,
    KHP_INSTANCE_NS,
    KHP_NS,
    NEXT_STEP,
    PPLAN_NS,
    PPLAN_PLAN,
    PPLAN_STEP,
    RDFS_COMMENT,
    RDFS_LABEL,
    RDF_TYPE,
    STANDARD_PREFIXES,
    STARTS_WITH,
    Graph,
    Iri,
    Literal,
    Triple,
    contract,
    expand,
    instance_iri,
    make_graph,
    normalize,
)
from .turtle import TurtleSyntaxError, read_turtle, write_turtle

__all__ = [
    "BrokenChain",
    "DanglingReference",
    "ENDS_WITH",
    "Graph",
    "GraphStructureError",
    "IS_DECOMPOSED_AS_PLAN",
    "IS_STEP_OF_PLAN",
    "InvalidPlan",
    "Iri",
    "KHP_INSTANCE_NS",
    "KHP_NS",
    "Literal",
    "MissingAnchor",
    "NEXT_STEP",
    "PPLAN_NS",
    "PPLAN_PLAN",
    "PPLAN_STEP",
    "RDFS_COMMENT",
    "RDFS_LABEL",
    "RDF_TYPE",
    "RdfXmlError",
    "STANDARD_PREFIXES",
    "STARTS_WITH",
    "Triple",
    "TurtleSyntaxError",
    "contract",
    "expand",
    "from_triples",
    "instance_iri",
    "make_graph",
    "normalize",
    "read_rdfxml",
    "read_turtle",
    "to_triples",
    "write_rdfxml",
    "write_turtle",
]
