"""Hierarchical equations of motion for qubits in a zero-temperature Lorentzian bath.

The bath correlation function C(t) = lambda exp(-gamma t) exp(-i omega0 t) is
split into two exponentials with rates nu_1 = gamma - i omega0 and
nu_2 = gamma + i omega0.  Auxiliary density operators rho_(l1, l2) are kept
for l1 + l2 <= L and anything deeper is dropped (treated as zero).
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .qstate import SIGMA_PLUS, SIGMA_MINUS, SIGMA_X, embed, hermitize, trace_distance

log = logging.getLogger(__name__)

DEFAULT_DEPTH = 12
DEFAULT_DT = 0.005
BLOWUP_NORM = 1e6
PHYSICAL_BOUND = 1.5    # no entry of a density matrix exceeds 1 in modulus


class HeomDivergenceError(RuntimeError):
    """Raised when an auxiliary operator grows past the blow-up guard,
    or the reduced state leaves the range any density matrix must satisfy."""


@dataclass(frozen=True)
class BathSpec:
    """Lorentzian bath J(w) = (1/pi) lambda gamma / ((w - omega0)^2 + gamma^2).

    ``alphas`` are the per-qubit coupling weights; their number fixes the
    register size.
    """

    lam: float
    gamma: float
    omega0: float = 1.0
    alphas: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.lam < 0 or self.gamma < 0:
            raise ValueError("lambda and gamma must be nonnegative")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if not 1 <= len(self.alphas) <= 3:
            raise ValueError("between one and three qubits are supported")

    @property
    def n_qubits(self) -> int:
        return len(self.alphas)

    @property
    def alpha_total(self) -> float:
        return float(np.sqrt(np.sum(np.square(self.alphas))))

    @property
    def relative(self) -> np.ndarray:
        return np.asarray(self.alphas) / self.alpha_total

    @property
    def markov_ratio(self) -> float:
        """alpha_T sqrt(lambda) / gamma; infinite for a zero-width bath."""
        num = self.alpha_total * math.sqrt(self.lam)
        return math.inf if self.gamma == 0 else num / self.gamma

    def spectral_density(self, w):
        w = np.asarray(w, dtype=float)
        return self.lam * self.gamma / np.pi / ((w - self.omega0) ** 2 + self.gamma**2)


@dataclass(frozen=True)
class CorrelationDecomposition:
    """C(t) = C_R(t) + i C_I(t) with C_R = sum_k a_k e^{-nu_k t}, C_I = sum_k b_k e^{-nu_k t}.

    a_k = lambda / 2 and b_k = (-1)^k lambda / (2i), k = 1, 2.
    """

    nu: np.ndarray
    coef_real: np.ndarray
    coef_imag: np.ndarray

    def real_part(self, t):
        t = np.asarray(t, dtype=float)
        return np.sum(self.coef_real[:, None] * np.exp(-np.outer(self.nu, t)), axis=0).real

    def imag_part(self, t):
        t = np.asarray(t, dtype=float)
        return np.sum(self.coef_imag[:, None] * np.exp(-np.outer(self.nu, t)), axis=0).real

    def __call__(self, t):
        return self.real_part(t) + 1j * self.imag_part(t)


def correlation_decomposition(bath: BathSpec) -> CorrelationDecomposition:
    k = np.array([1, 2])
    nu = bath.gamma + (-1.0) ** k * 1j * bath.omega0
    coef_real = np.full(2, bath.lam / 2, dtype=complex)
    coef_imag = (-1.0) ** k * bath.lam / 2j
    return CorrelationDecomposition(nu, coef_real, coef_imag)


def build_system_hamiltonian(omega0: float, n_qubits: int) -> np.ndarray:
    """omega0 times the number of excited qubits, diagonal in the package basis."""
    if n_qubits not in (1, 2, 3):
        raise ValueError(f"n_qubits must be 1, 2 or 3, got {n_qubits}")
    sp_sm = SIGMA_PLUS @ SIGMA_MINUS
    return omega0 * sum(embed(sp_sm, i, n_qubits) for i in range(n_qubits))


def build_coupling_operator(alphas: Sequence[float]) -> np.ndarray:
    """V = sum_i alpha_i sigma_x^(i), counter-rotating pieces included."""
    n = len(alphas)
    if n not in (1, 2, 3):
        raise ValueError(f"between one and three couplings expected, got {n}")
    return sum(a * embed(SIGMA_X, i, n) for i, a in enumerate(alphas))


@dataclass(frozen=True)
class HierarchyLayout:
    """Flat storage of the retained indices (l1, l2), l1 + l2 <= depth.

    ``up[p]``/``down[p]`` give the flat position of l +/- e_p, with ``size``
    (one past the end) standing for a dropped or nonexistent neighbour.
    """

    depth: int
    indices: np.ndarray
    up: np.ndarray
    down: np.ndarray

    @property
    def size(self) -> int:
        return len(self.indices)


def hierarchy_layout(depth: int) -> HierarchyLayout:
    indices = [(l1, n - l1) for n in range(depth + 1) for l1 in range(n, -1, -1)]
    pos = {ix: i for i, ix in enumerate(indices)}
    missing = len(indices)
    up = np.full((2, missing), missing, dtype=np.intp)
    down = np.full((2, missing), missing, dtype=np.intp)
    for i, (l1, l2) in enumerate(indices):
        up[0, i] = pos.get((l1 + 1, l2), missing)
        up[1, i] = pos.get((l1, l2 + 1), missing)
        down[0, i] = pos.get((l1 - 1, l2), missing)
        down[1, i] = pos.get((l1, l2 - 1), missing)
    return HierarchyLayout(depth, np.array(indices, dtype=np.intp), up, down)


@dataclass
class AdoStack:
    """The hierarchy at one instant; ``ados[0]`` is the physical reduced state."""

    layout: HierarchyLayout
    ados: np.ndarray
    time: float = 0.0

    @classmethod
    def initial(cls, rho0: np.ndarray, depth: int) -> "AdoStack":
        layout = hierarchy_layout(depth)
        d = rho0.shape[0]
        ados = np.zeros((layout.size + 1, d, d), dtype=complex)  # last slot stays zero
        ados[0] = rho0
        return cls(layout, ados)

    @property
    def rho(self) -> np.ndarray:
        return self.ados[0]

    def get(self, l1: int, l2: int) -> np.ndarray:
        hit = np.flatnonzero((self.layout.indices[:, 0] == l1) & (self.layout.indices[:, 1] == l2))
        if hit.size == 0:
            raise KeyError((l1, l2))
        return self.ados[hit[0]]


class HeomPropagator:
    """Right-hand side and fixed-step RK4 driver for one (H_s, V, bath) triple."""

    def __init__(self, h_sys: np.ndarray, v: np.ndarray, decomposition: CorrelationDecomposition,
                 lam: float, depth: int):
        self.h = np.asarray(h_sys, dtype=complex)
        self.v = np.asarray(v, dtype=complex)
        self.lam = lam
        self.layout = hierarchy_layout(depth)
        # rates vector v = (gamma - i w0, gamma + i w0) equals (nu_1, nu_2)
        self.rates = np.asarray(decomposition.nu, dtype=complex)
        l1 = self.layout.indices[:, 0]
        l2 = self.layout.indices[:, 1]
        self.damping = (l1 * self.rates[0] + l2 * self.rates[1])[:, None, None]
        self.l1 = l1[:, None, None].astype(float)
        self.l2 = l2[:, None, None].astype(float)

    def _psi(self, p: int, rho: np.ndarray) -> np.ndarray:
        # Psi_p = -(i/2) lambda [V^x + (-1)^p V^o]
        vr = self.v @ rho
        rv = rho @ self.v
        return -0.5j * self.lam * ((vr - rv) + (-1) ** p * (vr + rv))

    def rhs(self, ados: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """Time derivative of every retained ADO; ``ados`` carries a trailing zero slot."""
        n = self.layout.size
        rho = ados[:n]
        if out is None:
            out = np.zeros_like(ados)
        d = out[:n]
        d[...] = -1j * (self.h @ rho - rho @ self.h) - self.damping * rho
        up = ados[self.layout.up[0]] + ados[self.layout.up[1]]
        d += -1j * (self.v @ up - up @ self.v)
        d += self.l1 * self._psi(1, ados[self.layout.down[0]])
        d += self.l2 * self._psi(2, ados[self.layout.down[1]])
        out[n:] = 0.0
        return out

    def generator(self) -> sp.csr_matrix:
        """The same right-hand side as a sparse matrix acting on the stacked,
        row-major flattened ADOs (without the zero slot)."""
        d = self.h.shape[0]
        eye = sp.identity(d, dtype=complex, format="csr")
        left = lambda a: sp.kron(sp.csr_matrix(a), eye)      # rho -> a rho
        right = lambda b: sp.kron(eye, sp.csr_matrix(b).T)   # rho -> rho b
        comm_h = -1j * (left(self.h) - right(self.h))
        comm_v = -1j * (left(self.v) - right(self.v))
        psi = [None] + [-0.5j * self.lam * ((left(self.v) - right(self.v))
                                           + (-1) ** p * (left(self.v) + right(self.v)))
                        for p in (1, 2)]
        n = self.layout.size
        damping = self.damping.ravel()
        blocks = [[None] * n for _ in range(n)]
        for k in range(n):
            blocks[k][k] = comm_h - damping[k] * sp.identity(d * d, dtype=complex)
            l = self.layout.indices[k]
            for p in range(2):
                u = self.layout.up[p, k]
                if u < n:
                    blocks[k][u] = comm_v
                dn = self.layout.down[p, k]
                if dn < n:
                    blocks[k][dn] = float(l[p]) * psi[p + 1]
        return sp.bmat(blocks, format="csr")

    def step(self, ados: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.rhs(ados)
        k2 = self.rhs(ados + 0.5 * dt * k1)
        k3 = self.rhs(ados + 0.5 * dt * k2)
        k4 = self.rhs(ados + dt * k3)
        return ados + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def heom_rhs(stack: AdoStack, h_sys: np.ndarray, v: np.ndarray,
             decomposition: CorrelationDecomposition, lam: float) -> np.ndarray:
    """Time derivative of every ADO in ``stack`` (zero slot included, left at zero).

    Neighbours with l1 + l2 above the stack depth are taken as zero matrices.
    """
    prop = HeomPropagator(h_sys, v, decomposition, lam, stack.layout.depth)
    return prop.rhs(stack.ados)


def rk4_linear(gen: sp.spmatrix, y: np.ndarray, dt: float, steps: int) -> np.ndarray:
    """Classic RK4 for dy/dt = gen @ y with a constant generator."""
    for _ in range(steps):
        k1 = gen @ y
        k2 = gen @ (y + 0.5 * dt * k1)
        k3 = gen @ (y + 0.5 * dt * k2)
        k4 = gen @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


@dataclass
class HeomResult:
    times: np.ndarray
    states: np.ndarray
    depth: int
    dt: float
    max_trace_error: float = 0.0
    max_hermiticity_defect: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def time_grid(t_final: float, n_samples: int) -> np.ndarray:
    if t_final <= 0 or n_samples < 2:
        raise ValueError("need t_final > 0 and at least two samples")
    return np.linspace(0.0, t_final, n_samples)


def _substeps(span: float, dt: float) -> tuple[int, float]:
    steps = max(1, int(math.ceil(span / dt - 1e-9)))
    return steps, span / steps


def heom_propagate(rho0: np.ndarray, bath: BathSpec, t_final: float, n_samples: int = 601,
                   depth: int | None = None, dt: float = DEFAULT_DT) -> HeomResult:
    """Propagate the reduced register state with the truncated hierarchy.

    The integrator takes fixed RK4 steps no longer than ``dt`` so that every
    sample time is hit exactly; samples of rho_(0,0) are returned raw (not
    hermitized).

    A zero-width bath (gamma = 0) never depopulates the hierarchy, so it
    requires an explicit ``depth``.
    """
    if bath.gamma == 0:
        if depth is None:
            raise ValueError("gamma = 0 needs an explicit hierarchy depth (pass depth=...)")
        warnings.warn(f"gamma = 0: undamped hierarchy, results depend strongly on depth L={depth}",
                      RuntimeWarning, stacklevel=2)
    depth = DEFAULT_DEPTH if depth is None else depth
    if depth < 2:
        raise ValueError("hierarchy depth must be at least 2")
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho0 = np.asarray(rho0, dtype=complex)
    n = bath.n_qubits
    if rho0.shape != (2**n, 2**n):
        raise ValueError(f"initial state shape {rho0.shape} does not match {n} qubits")

    prop = HeomPropagator(build_system_hamiltonian(bath.omega0, n), build_coupling_operator(bath.alphas),
                          correlation_decomposition(bath), bath.lam, depth)
    gen = prop.generator()
    d2 = 4**n
    times = time_grid(t_final, n_samples)
    states = np.empty((n_samples, 2**n, 2**n), dtype=complex)
    states[0] = rho0
    y = np.zeros(prop.layout.size * d2, dtype=complex)
    y[:d2] = rho0.ravel()
    h_step = dt
    for i in range(1, n_samples):
        steps, h_step = _substeps(times[i] - times[i - 1], dt)
        y = rk4_linear(gen, y, h_step, steps)
        peak = np.max(np.abs(y))
        if not np.isfinite(peak) or peak > BLOWUP_NORM:
            raise HeomDivergenceError(
                f"hierarchy blew up at t={times[i]:.4g} (max |ADO| = {peak:.3g}); "
                f"try a larger depth than L={depth} or a smaller step than dt={dt}")
        states[i] = y[:d2].reshape(2**n, 2**n)
        worst = np.max(np.abs(states[i]))
        if worst > PHYSICAL_BOUND:
            raise HeomDivergenceError(
                f"reduced state left the physical range at t={times[i]:.4g} (max |rho_ij| = {worst:.3g}); "
                f"try a larger depth than L={depth} or a smaller step than dt={dt}")
    traces = np.trace(states, axis1=1, axis2=2)
    herm = np.max(np.abs(states - states.conj().swapaxes(1, 2)))
    return HeomResult(times, states, depth, h_step, float(np.max(np.abs(traces - 1))), float(herm))


@dataclass
class ConvergenceReport:
    depths: list
    distances: list
    tolerance: float
    converged: bool
    monotone: bool


def convergence_check(rho0: np.ndarray, bath: BathSpec, t_final: float, depths: Sequence[int],
                      n_samples: int = 301, dt: float = DEFAULT_DT,
                      tolerance: float = 1e-4) -> ConvergenceReport:
    """Max-over-time trace distance between solutions at consecutive depths."""
    depths = list(depths)
    if depths != sorted(depths) or len(depths) < 2:
        raise ValueError("depths must be ascending with at least two entries")
    runs = [heom_propagate(rho0, bath, t_final, n_samples, depth=L, dt=dt).states for L in depths]
    dist = [max(trace_distance(a, b) for a, b in zip(r0, r1)) for r0, r1 in zip(runs, runs[1:])]
    monotone = all(b <= a for a, b in zip(dist, dist[1:]))
    report = ConvergenceReport(depths, dist, tolerance, dist[-1] < tolerance, monotone)
    if not report.converged:
        log.warning("hierarchy not converged: last distance %.3g at L=%d", dist[-1], depths[-1])
    return report


def physical_state(rho: np.ndarray) -> np.ndarray:
    """Hermitized copy for feeding the measures."""
    return hermitize(rho)
