"""Fused custom instruction generation for RISC-V (RV32IC) programs."""

from .errors import AriseError, ConfigError, ContractViolation, InvariantError, ParseError

__all__ = [
    "AriseError",
    "ConfigError",
    "ContractViolation",
    "ExtensionEstimator",
    "InvariantError",
    "ParseError",
]

__version__ = "0.1.0"


def __getattr__(name):
    # scikit-learn is slow to import; only pay for it when the estimator is used
    if name == "ExtensionEstimator":
        from .estimator import ExtensionEstimator
        return ExtensionEstimator
    raise AttributeError(name)
