"""Damped-pseudomode reference solver.

At zero temperature a Lorentzian bath with correlation function
lambda exp(-gamma t - i omega0 t) acts on the qubits exactly like a single
harmonic mode of frequency omega0, coupling g = sqrt(lambda) and energy decay
rate kappa = 2 gamma, started in vacuum.  The qubits plus the truncated mode
are propagated under a Lindblad equation, without any rotating-wave
approximation, and the mode is traced out at each sample.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .heom import DEFAULT_DT, BathSpec, build_coupling_operator, build_system_hamiltonian, time_grid
from .qstate import partial_trace, trace_distance

log = logging.getLogger(__name__)

LEAKAGE_THRESHOLD = 1e-4


@dataclass(frozen=True)
class PseudomodeSpec:
    fock_dim: int
    g: float
    kappa: float
    omega0: float = 1.0

    def __post_init__(self):
        if self.fock_dim < 2:
            raise ValueError("fock_dim must be at least 2")

    @classmethod
    def from_bath(cls, bath: BathSpec, fock_dim: int) -> "PseudomodeSpec":
        return cls(fock_dim, math.sqrt(bath.lam), 2.0 * bath.gamma, bath.omega0)

    def correlation(self, t):
        """Vacuum two-time correlation g^2 <a(t) a^dag(0)> of the damped mode."""
        t = np.asarray(t, dtype=float)
        return self.g**2 * np.exp(-1j * self.omega0 * t - 0.5 * self.kappa * t)


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def build_total_hamiltonian(spec: PseudomodeSpec, alphas: Sequence[float]) -> np.ndarray:
    """H_s x 1 + 1 x omega0 a^dag a + g V x (a + a^dag), qubits as the left factor."""
    n = len(alphas)
    a = annihilation(spec.fock_dim)
    eye_q = np.eye(2**n)
    eye_m = np.eye(spec.fock_dim)
    h = np.kron(build_system_hamiltonian(spec.omega0, n), eye_m)
    h = h + spec.omega0 * np.kron(eye_q, a.conj().T @ a)
    h = h + spec.g * np.kron(build_coupling_operator(alphas), a + a.conj().T)
    return h


def parity_operator(n_qubits: int, fock_dim: int) -> np.ndarray:
    """(-1)^(excited qubits + photons); conserved by the closed Hamiltonian."""
    # a zero bit marks an excited qubit (|e> precedes |g>)
    exc = np.array([sum(1 for j in range(n_qubits) if not (i >> (n_qubits - 1 - j)) & 1)
                    for i in range(2**n_qubits)])
    photons = np.arange(fock_dim)
    return np.diag((-1.0) ** np.add.outer(exc, photons).ravel()).astype(complex)


@dataclass
class PseudomodeResult:
    times: np.ndarray
    states: np.ndarray
    fock_dim: int
    leakage: float
    leaked: bool
    max_trace_error: float = 0.0
    diagnostics: dict = field(default_factory=dict)


class _Lindblad:
    """Sparse generator d rho/dt = -i(H_eff rho - rho H_eff^dag) + kappa a rho a^dag."""

    def __init__(self, h: np.ndarray, a_total: np.ndarray, kappa: float):
        n_op = a_total.conj().T @ a_total
        self.h_eff = sp.csr_matrix(h - 0.5j * kappa * n_op)
        self.a = sp.csr_matrix(a_total)
        self.kappa = kappa

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        # rho is Hermitian, so rho H_eff^dag = (H_eff rho)^dag and a rho a^dag = a (a rho)^dag
        x = -1j * (self.h_eff @ rho)
        out = x + x.conj().T
        if self.kappa:
            ar = self.a @ rho
            out += self.kappa * (self.a @ ar.conj().T)
        return out


def lindblad_propagate(rho0_qubits: np.ndarray, spec: PseudomodeSpec, alphas: Sequence[float],
                       t_final: float, n_samples: int = 601, dt: float = DEFAULT_DT) -> PseudomodeResult:
    """Propagate qubits plus vacuum mode with fixed-step RK4; return reduced qubit states.

    The population of the highest retained Fock level is tracked; above
    ``LEAKAGE_THRESHOLD`` the result is flagged as under-truncated.
    """
    n = len(alphas)
    dq, dm = 2**n, spec.fock_dim
    rho0_qubits = np.asarray(rho0_qubits, dtype=complex)
    if rho0_qubits.shape != (dq, dq):
        raise ValueError(f"initial state shape {rho0_qubits.shape} does not match {n} qubits")
    vac = np.zeros((dm, dm), dtype=complex)
    vac[0, 0] = 1.0
    rho = np.kron(rho0_qubits, vac)
    gen = _Lindblad(build_total_hamiltonian(spec, alphas),
                    np.kron(np.eye(dq), annihilation(dm)), spec.kappa)
    top = np.arange(dq) * dm + (dm - 1)

    times = time_grid(t_final, n_samples)
    states = np.empty((n_samples, dq, dq), dtype=complex)
    states[0] = rho0_qubits
    leakage = 0.0
    trace_err = 0.0
    for i in range(1, n_samples):
        span = times[i] - times[i - 1]
        steps = max(1, int(math.ceil(span / dt - 1e-9)))
        h = span / steps
        for _ in range(steps):
            k1 = gen(rho)
            k2 = gen(rho + 0.5 * h * k1)
            k3 = gen(rho + 0.5 * h * k2)
            k4 = gen(rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(rho)):
            raise FloatingPointError(f"pseudomode integration diverged at t={times[i]:.4g}")
        leakage = max(leakage, float(np.sum(rho[top, top].real)))
        trace_err = max(trace_err, abs(np.trace(rho) - 1))
        states[i] = partial_trace(rho, [0], (dq, dm))
    leaked = leakage > LEAKAGE_THRESHOLD
    if leaked:
        log.warning("Fock truncation %d leaks %.2e into the top level; rerun with a larger fock_dim",
                    dm, leakage)
    return PseudomodeResult(times, states, dm, leakage, leaked, float(trace_err))


def propagate_converged(rho0_qubits: np.ndarray, bath: BathSpec, t_final: float, n_samples: int = 601,
                        dt: float = DEFAULT_DT, fock_dim: int = 10, step: int = 4,
                        max_fock: int = 60) -> PseudomodeResult:
    """Grow the Fock truncation until the leakage guard is satisfied."""
    while True:
        res = lindblad_propagate(rho0_qubits, PseudomodeSpec.from_bath(bath, fock_dim), bath.alphas,
                                 t_final, n_samples, dt)
        if not res.leaked or fock_dim + step > max_fock:
            return res
        fock_dim += step


@dataclass
class FockConvergenceReport:
    dims: list
    distances: list


def fock_convergence(rho0_qubits: np.ndarray, bath: BathSpec, t_final: float, dims: Sequence[int],
                     n_samples: int = 301, dt: float = DEFAULT_DT) -> FockConvergenceReport:
    dims = list(dims)
    if dims != sorted(dims) or len(dims) < 2:
        raise ValueError("dims must be ascending with at least two entries")
    runs = [lindblad_propagate(rho0_qubits, PseudomodeSpec.from_bath(bath, d), bath.alphas,
                               t_final, n_samples, dt).states for d in dims]
    dist = [max(trace_distance(a, b) for a, b in zip(r0, r1)) for r0, r1 in zip(runs, runs[1:])]
    return FockConvergenceReport(dims, dist)
