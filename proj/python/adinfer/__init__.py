"""Adaptive exact inference on discrete factor graphs.

Builds a balanced cluster tree over a user-chosen spanning tree of the
factor graph, answers unnormalized marginal queries, and absorbs factor
replacements and edge edits by recomputing only the affected clusters.
"""

from adinfer._core import (
    Engine,
    FactorGraph,
    FactorTable,
    ParseError,
    VariableInfo,
    apply_script_text,
    gen_chain,
    parse_graph,
    run_bench_csv,
    serialize_graph,
)

__version__ = "0.1.0"

__all__ = [
    "Engine",
    "FactorGraph",
    "FactorTable",
    "ParseError",
    "VariableInfo",
    "apply_script_text",
    "gen_chain",
    "parse_graph",
    "run_bench_csv",
    "serialize_graph",
    "__version__",
]
