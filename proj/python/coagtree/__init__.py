"""Marcus-Lushnikov historical trees and their Smoluchowski limit."""

import json as _json

from ._core import (
    ConfigError,
    EventLog,
    GelationError,
    HistoricalTree,
    ParseError,
    SolutionPath,
    enumerate_shapes,
    evaluate,
    kernel_names,
    labelings,
    leaf,
    limit,
    node,
    parse_tree,
    serialize_tree,
    simulate,
    solve,
    symmetry_exponent,
)
from ._core import run_lln as _run_lln

__version__ = "0.3.0"


def run_lln(plan):
    """Run an experiment plan given as a dict or JSON text; returns the report as a dict."""
    text = plan if isinstance(plan, str) else _json.dumps(plan)
    return _json.loads(_run_lln(text))


__all__ = [
    "ConfigError",
    "EventLog",
    "GelationError",
    "HistoricalTree",
    "ParseError",
    "SolutionPath",
    "enumerate_shapes",
    "evaluate",
    "kernel_names",
    "labelings",
    "leaf",
    "limit",
    "node",
    "parse_tree",
    "run_lln",
    "serialize_tree",
    "simulate",
    "solve",
    "symmetry_exponent",
]
