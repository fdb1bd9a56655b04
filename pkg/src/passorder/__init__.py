"""Learned scheduling of quantum-circuit optimisation passes."""

from .circuit import Circuit, Gate, PhasedX, Rz, ZZPhase, rebase, two_qubit_count
from .passes import DEFAULT_ACTIONS, ActionId, PassRegistry, apply_pass

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_ACTIONS",
    "ActionId",
    "Circuit",
    "Gate",
    "PassRegistry",
    "PhasedX",
    "Rz",
    "ZZPhase",
    "apply_pass",
    "rebase",
    "two_qubit_count",
]
