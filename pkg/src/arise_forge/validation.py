"""Input coercion shared by the estimator and the CLI."""

from __future__ import annotations

from .errors import ConfigError
from .frontend import ProgramModel, TraceProfile, parse_disassembly, parse_trace


def check_program(X):
    """Accept disassembly text or an already parsed ProgramModel."""
    if isinstance(X, ProgramModel):
        return X
    if isinstance(X, bytes):
        X = X.decode("utf-8")
    if isinstance(X, str):
        return parse_disassembly(X)
    raise ConfigError(f"expected disassembly text or a ProgramModel, got {type(X).__name__}")


def check_trace(trace, program):
    """Accept None, trace text, or a TraceProfile."""
    if trace is None or isinstance(trace, TraceProfile):
        return trace
    if isinstance(trace, bytes):
        trace = trace.decode("utf-8")
    if isinstance(trace, str):
        return parse_trace(trace, program)
    raise ConfigError(f"expected trace text or a TraceProfile, got {type(trace).__name__}")
