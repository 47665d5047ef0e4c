"""Solver cross-checks: closed-form RWA against its ODE oracle, HEOM against the pseudomode."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..heom import BathSpec, heom_propagate, physical_state
from ..measures import concurrence, pair_marginal
from ..pseudomode import propagate_converged
from ..qstate import build_state, ket2dm
from ..rwa import amplitudes_closed, amplitudes_oracle

RWA_TOLERANCE = 1e-6
HEOM_TOLERANCE = 5e-3


@dataclass
class CheckResult:
    name: str
    deviation: float
    tolerance: float
    seconds: float
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.deviation <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        detail = self.error if self.error else f"max deviation {self.deviation:.3e} (tol {self.tolerance:g})"
        return f"{status}  {self.name}: {detail} [{self.seconds:.1f} s]"


def rwa_deviation(bath: BathSpec, c0, t_final: float, samples: int) -> float:
    t = np.linspace(0.0, t_final, samples)
    return float(np.max(np.abs(amplitudes_closed(t, c0, bath) - amplitudes_oracle(c0, bath, t))))


def heom_pseudomode_deviation(bath: BathSpec, initial: str, t_final: float, samples: int = 601,
                              depth: int = 12, dt: float = 0.005) -> float:
    """Max over time of population differences and, for three qubits, of concurrence(ab)."""
    rho0 = ket2dm(build_state(initial, bath.n_qubits))
    h = heom_propagate(rho0, bath, t_final, samples, depth=depth, dt=dt)
    p = propagate_converged(rho0, bath, t_final, samples, dt)
    dev = np.max(np.abs(np.diagonal(h.states, axis1=1, axis2=2) - np.diagonal(p.states, axis1=1, axis2=2)))
    if bath.n_qubits == 3:
        ch = [concurrence(pair_marginal(physical_state(s), "ab")) for s in h.states]
        cp = [concurrence(pair_marginal(s, "ab")) for s in p.states]
        dev = max(dev, np.max(np.abs(np.subtract(ch, cp))))
    return float(dev)


def _timed(name, tol, fn) -> CheckResult:
    start = time.perf_counter()
    try:
        dev = fn()
        return CheckResult(name, dev, tol, time.perf_counter() - start)
    except Exception as exc:  # report every failure mode as a failed check
        return CheckResult(name, float("nan"), tol, time.perf_counter() - start, f"{type(exc).__name__}: {exc}")


def cross_checks():
    """Yield the regression cross-checks one at a time."""
    w = np.full(3, 1 / np.sqrt(3))
    yield _timed("rwa-closed vs rwa-oracle, alphas (1,1,0.5), lambda 0.1, gamma 0.05, W",
                 RWA_TOLERANCE, lambda: rwa_deviation(BathSpec(0.1, 0.05, 1.0, (1, 1, 0.5)), w, 100.0, 2000))
    yield _timed("heom vs pseudomode, one qubit |e>, lambda 0.1, gamma 0.05",
                 HEOM_TOLERANCE, lambda: heom_pseudomode_deviation(BathSpec(0.1, 0.05, 1.0, (1,)), "e", 60.0))
    yield _timed("heom vs pseudomode, three qubits W, lambda 0.01, gamma 1e-4",
                 HEOM_TOLERANCE, lambda: heom_pseudomode_deviation(BathSpec(0.01, 1e-4, 1.0, (1, 1, 1)), "W", 60.0))
    yield _timed("heom vs pseudomode, three qubits W, lambda 0.1, gamma 0.05",
                 HEOM_TOLERANCE, lambda: heom_pseudomode_deviation(BathSpec(0.1, 0.05, 1.0, (1, 1, 1)), "W", 60.0))
