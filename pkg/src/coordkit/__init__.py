"""Toolkit for re-annotating coordination structures in constituency treebanks."""

__version__ = "0.1.0"

from .treebank import (
    Internal,
    Leaf,
    ParseError,
    PathError,
    Span,
    SynLabel,
    Token,
    Tree,
    parse_bracketed,
    serialize,
    strip_coord_functions,
)

__all__ = [
    "Internal",
    "Leaf",
    "ParseError",
    "PathError",
    "Span",
    "SynLabel",
    "Token",
    "Tree",
    "parse_bracketed",
    "serialize",
    "strip_coord_functions",
]
