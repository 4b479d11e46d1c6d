"""Executable engine for attribute-based broadcast communication.

Parse `.abc` system specifications, run them under the broadcast
operational semantics, explore the reachable state space, and check
reachability, invariant, and leads-to properties.
"""

from .explorer import LTS, Verdict, check_property, explore
from .parser import Diagnostic, ParseError, parse_spec
from .pretty import pp_proc, pp_spec
from .simulator import Trace, simulate, trace_to_json
from .validate import load_spec, validate

__all__ = [
    "LTS",
    "Verdict",
    "check_property",
    "explore",
    "Diagnostic",
    "ParseError",
    "parse_spec",
    "pp_proc",
    "pp_spec",
    "Trace",
    "simulate",
    "trace_to_json",
    "load_spec",
    "validate",
]

__version__ = "0.1.0"
