"""Open-system dynamics of one to three qubits in a common Lorentzian bath.

Solvers: hierarchical equations of motion (``heom``), the exact
rotating-wave solution (``rwa``) and a damped-pseudomode reference
(``pseudomode``).  Correlation measures live in ``measures`` and the
experiment runner and CLI in ``harness`` and ``cli``.
"""
from .heom import BathSpec, HeomDivergenceError, heom_propagate
from .measures import chsh_max, concurrence, negativity, pi_tangle, svetlichny_grid, svetlichny_max
from .pseudomode import PseudomodeSpec, lindblad_propagate, propagate_converged
from .qstate import build_state, partial_trace, partial_transpose
from .rwa import amplitudes_closed, amplitudes_oracle, decay_envelope

__version__ = "0.1.0"

__all__ = [
    "BathSpec", "HeomDivergenceError", "heom_propagate",
    "chsh_max", "concurrence", "negativity", "pi_tangle", "svetlichny_grid", "svetlichny_max",
    "PseudomodeSpec", "lindblad_propagate", "propagate_converged",
    "build_state", "partial_trace", "partial_transpose",
    "amplitudes_closed", "amplitudes_oracle", "decay_envelope",
]
