"""MiniC parsing and lowering to control-flow automata."""

from domcheck.frontend.cfa import Assign, Assume, Cfa, CfaEdge, Decl, Skip, build_cfa, lower
from domcheck.frontend.parser import parse

__all__ = ["Assign", "Assume", "Cfa", "CfaEdge", "Decl", "Skip", "build_cfa", "lower", "parse"]
