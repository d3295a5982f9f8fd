"""Takens-Bogdanov normal forms of unit-delay DDEs and their forward Euler maps."""

from .errors import (
    ConvergenceError,
    ModelError,
    NoSignChange,
    NotTBCandidate,
    SizeCapExceeded,
    StructureViolation,
)
from .model import DDEModel, example_model, load_model, parse_model

__all__ = [
    "ConvergenceError",
    "DDEModel",
    "ModelError",
    "NoSignChange",
    "NotTBCandidate",
    "SizeCapExceeded",
    "StructureViolation",
    "example_model",
    "load_model",
    "parse_model",
]

__version__ = "0.1.0"
