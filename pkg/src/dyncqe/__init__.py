"""Controlled query evaluation over DL-Lite_R ontologies by FO rewriting."""

from .core import (
    ABox, Atom, BCQ, BUCQ, CQEError, CQEInstance, CQESpec, CapacityExceeded,
    Const, InconsistentInput, Policy, TBox, Var,
)

__version__ = "0.1.0"

__all__ = [
    "ABox", "Atom", "BCQ", "BUCQ", "CQEError", "CQEInstance", "CQESpec",
    "CapacityExceeded", "Const", "InconsistentInput", "Policy", "TBox", "Var",
]
