"""Procedure extraction, knowledge-graph serialization, querying, and
ROUGE evaluation for manual text."""

from .model import Plan, ProcedureKind, Step, StepAnnotation, classify, flatten, validate
from .textparse import ParseConfig, detect_procedures, parse_procedure, render_text

__version__ = "0.1.0"

__all__ = [
    "ParseConfig",
    "Plan",
    "ProcedureKind",
    "Step",
    "StepAnnotation",
    "__version__",
    "classify",
    "detect_procedures",
    "flatten",
    "parse_procedure",
    "render_text",
    "validate",
]
