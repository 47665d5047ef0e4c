"""Exact single-excitation dynamics of qubits in a common Lorentzian bath under the RWA.

All amplitudes live in the frame rotating at the qubit frequency, where the
memory kernel is f(tau) = lambda * exp(-gamma * tau).  Populations and the
one-excitation coherences of the assembled density matrix only pick up a
common phase in the lab frame, so every measure computed from them is frame
independent.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .heom import BathSpec
from .qstate import basis_index

_AMPLITUDE_TOL = 1e-10


def relative_couplings(alphas: Sequence[float]) -> tuple[float, np.ndarray]:
    """Collective coupling alpha_T = |alpha| and relative strengths r_j = alpha_j / alpha_T."""
    alphas = np.asarray(alphas, dtype=float)
    alpha_t = float(np.sqrt(np.sum(alphas**2)))
    if alpha_t == 0.0:
        raise ValueError("relative couplings are undefined when every alpha is zero")
    return alpha_t, alphas / alpha_t


def memory_kernel(bath: BathSpec) -> Callable[[np.ndarray], np.ndarray]:
    lam, gamma = bath.lam, bath.gamma

    def f(tau):
        return lam * np.exp(-gamma * np.asarray(tau, dtype=float))

    return f


def decay_envelope(t, bath: BathSpec, alpha_t: float | None = None) -> np.ndarray:
    """Overlap E(t) of the collective bright state with its time-evolved self.

    E(t) = exp(-gamma t / 2) [cosh(W t / 2) + (gamma / W) sinh(W t / 2)],
    W = sqrt(gamma^2 - 4 alpha_T^2 lambda).  For imaginary W the hyperbolic
    pair becomes cos/sin, and at W = 0 the removable singularity gives
    exp(-gamma t / 2)(1 + gamma t / 2).
    """
    if alpha_t is None:
        alpha_t = bath.alpha_total
    t = np.asarray(t, dtype=float)
    gamma = bath.gamma
    disc = gamma**2 - 4.0 * alpha_t**2 * bath.lam
    damp = np.exp(-0.5 * gamma * t)
    scale = max(gamma**2, 4.0 * alpha_t**2 * bath.lam, 1e-300)
    if abs(disc) <= 1e-14 * scale:
        env = damp * (1.0 + 0.5 * gamma * t)
    elif disc > 0:
        w = np.sqrt(disc)
        env = damp * (np.cosh(0.5 * w * t) + gamma / w * np.sinh(0.5 * w * t))
    else:
        w = np.sqrt(-disc)
        env = damp * (np.cos(0.5 * w * t) + gamma / w * np.sin(0.5 * w * t))
    return env.astype(complex)


@dataclass(frozen=True)
class AmplitudeState:
    """Single-excitation amplitudes; the rest of the weight sits in |g...g>|1_k>."""

    c: np.ndarray

    @property
    def bath_weight(self) -> float:
        return float(1.0 - np.sum(np.abs(self.c) ** 2))


def amplitudes_closed(t, c0: Sequence[complex], bath: BathSpec) -> np.ndarray:
    """Closed-form amplitudes c_j(t), returned with shape (len(t), n_qubits).

    c(t) = (1 - r r^T) c(0) + E(t) r (r . c(0)): the component along the
    bright direction r decays with E(t) and the orthogonal complement is
    frozen.
    """
    c0 = np.asarray(c0, dtype=complex)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.allclose(bath.alphas, 0.0):
        return np.tile(c0, (t.size, 1))
    alpha_t, r = relative_couplings(bath.alphas)
    env = decay_envelope(t, bath, alpha_t)
    bright = r @ c0
    frozen = c0 - r * bright
    return frozen[None, :] + env[:, None] * (r * bright)[None, :]


def amplitudes_oracle(c0: Sequence[complex], bath: BathSpec, t_grid,
                      max_step: float = 0.01) -> np.ndarray:
    """Integrate the amplitude integro-differential equations directly.

    Each row's memory integral z_j(t) = alpha_j int_0^t f(t - s) sum_k alpha_k c_k(s) ds
    obeys dz_j/dt = -gamma z_j + lambda alpha_j sum_k alpha_k c_k because the
    kernel is a single exponential; with dc_j/dt = -z_j this is a linear ODE
    in (c, z), integrated here with classic RK4.
    """
    c0 = np.asarray(c0, dtype=complex)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid[0] != 0.0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing and start at 0")
    n = c0.size
    alphas = np.asarray(bath.alphas, dtype=float)
    gen = np.zeros((2 * n, 2 * n), dtype=complex)
    gen[:n, n:] = -np.eye(n)
    gen[n:, :n] = bath.lam * np.outer(alphas, alphas)
    gen[n:, n:] = -bath.gamma * np.eye(n)

    y = np.concatenate([c0, np.zeros(n, dtype=complex)])
    out = np.empty((t_grid.size, n), dtype=complex)
    out[0] = c0
    for i in range(1, t_grid.size):
        span = t_grid[i] - t_grid[i - 1]
        steps = max(1, int(np.ceil(span / max_step - 1e-12)))
        h = span / steps
        for _ in range(steps):
            k1 = gen @ y
            k2 = gen @ (y + 0.5 * h * k1)
            k3 = gen @ (y + 0.5 * h * k2)
            k4 = gen @ (y + h * k3)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise FloatingPointError(f"amplitude integration diverged near t={t_grid[i]:.4g} (step {h:.3g})")
        out[i] = y[:n]
    return out


def single_excitation_indices(n_qubits: int) -> list[int]:
    return [
        basis_index("".join("e" if j == i else "g" for j in range(n_qubits)))
        for i in range(n_qubits)
    ]


def density_matrix_from_amplitudes(amps: Sequence[complex]) -> np.ndarray:
    """Reduced register state: one-excitation block plus the |g...g> population."""
    c = np.asarray(amps, dtype=complex)
    n = c.size
    weight = 1.0 - float(np.sum(np.abs(c) ** 2))
    if weight < -_AMPLITUDE_TOL:
        raise ValueError(f"amplitudes carry norm {1 - weight:.12g} > 1")
    dim = 2**n
    rho = np.zeros((dim, dim), dtype=complex)
    idx = single_excitation_indices(n)
    rho[np.ix_(idx, idx)] = np.outer(c, c.conj())
    rho[dim - 1, dim - 1] = max(weight, 0.0)
    return rho


def amplitudes_from_state(psi: np.ndarray) -> np.ndarray:
    """Extract single-excitation amplitudes, rejecting states outside that sector."""
    psi = np.asarray(psi, dtype=complex)
    n = int(np.log2(psi.size))
    idx = single_excitation_indices(n)
    c = psi[idx]
    rest = np.delete(psi, idx)
    ground = psi[-1]
    if np.linalg.norm(rest[:-1]) > 1e-12:
        raise ValueError("RWA solver accepts states in the single-excitation sector plus |g...g> only")
    if abs(ground) > 1e-12 and np.linalg.norm(c) > 1e-12:
        raise ValueError("RWA solver does not handle superpositions with the ground state")
    return c
