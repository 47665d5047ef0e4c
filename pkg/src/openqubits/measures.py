"""Entanglement and nonlocality quantifiers for two- and three-qubit states.

Two-qubit: concurrence, negativity and the closed-form CHSH maximum.
Three-qubit: the pi-tangle built from squared negativities and the maximal
Svetlichny value, found by a batched see-saw ascent with a brute-force grid
search kept alongside as an independent lower bound.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .qstate import (
    PAULIS,
    SIGMA_Y,
    DimensionError,
    kron,
    observable,
    partial_trace,
    partial_transpose,
    validate_density_matrix,
)

log = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)
CHSH_LOCAL_BOUND = 2.0
SVETLICHNY_LOCAL_BOUND = 4.0
SVETLICHNY_QUANTUM_BOUND = 4.0 * SQRT2

_NEGATIVITY_FLOOR = -1e-10
_SYSY = np.kron(SIGMA_Y, SIGMA_Y)

# Svetlichny operator S = M + M' with the Mermin pair
#   M  = A B C' + A B' C + A' B C - A' B' C'
#   M' = A' B' C + A' B C' + A B' C' - A B C
# Settings are numbered a=0, a'=1, b=2, b'=3, c=4, c'=5.
SVETLICHNY_TERMS = (
    (0, 2, 5, +1.0),
    (0, 3, 4, +1.0),
    (1, 2, 4, +1.0),
    (1, 3, 5, -1.0),
    (1, 3, 4, +1.0),
    (1, 2, 5, +1.0),
    (0, 3, 5, +1.0),
    (0, 2, 4, -1.0),
)


# ---------------------------------------------------------------------------
# two-qubit quantities
# ---------------------------------------------------------------------------

def concurrence(rho: np.ndarray) -> float:
    """Concurrence of a two-qubit density matrix."""
    rho = validate_density_matrix(rho)
    if rho.shape != (4, 4):
        raise DimensionError(f"concurrence needs a 4x4 matrix, got {rho.shape}")
    # With rho = X X^dag, the square roots of the eigenvalues of rho (sy sy) rho* (sy sy)
    # are the singular values of X^T (sy sy) X; the SVD keeps them accurate near zero.
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    x = v * np.sqrt(np.clip(w, 0.0, None))
    s = np.linalg.svd(x.T @ _SYSY @ x, compute_uv=False)
    return float(max(0.0, s[0] - s[1] - s[2] - s[3]))


def correlation_matrix(rho: np.ndarray) -> np.ndarray:
    """T_jk = tr(sigma_j x sigma_k rho) for a two-qubit state."""
    rho = np.asarray(rho, dtype=complex)
    t = np.empty((3, 3))
    for j, sj in enumerate(PAULIS):
        for k, sk in enumerate(PAULIS):
            t[j, k] = np.trace(np.kron(sj, sk) @ rho).real
    return t


def chsh_max(rho: np.ndarray) -> float:
    """Maximal CHSH value 2 sqrt(l1 + l2) over all measurement settings."""
    rho = validate_density_matrix(rho)
    if rho.shape != (4, 4):
        raise DimensionError(f"chsh_max needs a 4x4 matrix, got {rho.shape}")
    t = correlation_matrix(rho)
    ev = np.sort(np.linalg.eigvalsh(t.T @ t))[::-1]
    return float(2.0 * np.sqrt(max(ev[0] + ev[1], 0.0)))


def chsh_seesaw(rho: np.ndarray, restarts: int = 16, tol: float = 1e-12,
                max_sweeps: int = 2000, seed: int = 0) -> float:
    """CHSH maximum by alternating maximization over the four unit vectors.

    Independent cross-check of :func:`chsh_max`.  The CHSH value
    a.T(b + b') + a'.T(b - b') is linear in each vector, so each update is a
    normalized gradient.
    """
    t = correlation_matrix(rho)
    rng = np.random.default_rng(seed)
    v = _random_unit(rng, (restarts, 4, 3))
    prev = np.full(restarts, -np.inf)
    for _ in range(max_sweeps):
        v[:, 0] = _unit(np.einsum("ij,rj->ri", t, v[:, 2] + v[:, 3]), v[:, 0])
        v[:, 1] = _unit(np.einsum("ij,rj->ri", t, v[:, 2] - v[:, 3]), v[:, 1])
        v[:, 2] = _unit(np.einsum("ij,ri->rj", t, v[:, 0] + v[:, 1]), v[:, 2])
        v[:, 3] = _unit(np.einsum("ij,ri->rj", t, v[:, 0] - v[:, 1]), v[:, 3])
        val = (np.einsum("ri,ij,rj->r", v[:, 0], t, v[:, 2] + v[:, 3])
               + np.einsum("ri,ij,rj->r", v[:, 1], t, v[:, 2] - v[:, 3]))
        if np.max(val - prev) < tol:
            break
        prev = val
    return float(val.max())


# ---------------------------------------------------------------------------
# negativity and pi-tangle
# ---------------------------------------------------------------------------

def negativity(rho: np.ndarray, subsystem: int, dims: Sequence[int]) -> float:
    """Trace norm of the partial transpose on ``subsystem`` minus one."""
    rho = np.asarray(rho, dtype=complex)
    pt = partial_transpose(rho, subsystem, dims)
    # the partial transpose of a Hermitian matrix is Hermitian
    ev = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    value = float(np.sum(np.abs(ev))) - float(np.trace(rho).real)
    if value < 0.0:
        if value < _NEGATIVITY_FLOOR:
            log.debug("negativity %.3e below rounding floor", value)
        return 0.0
    return value


PAIR_LABELS = {"ab": (0, 1), "ac": (0, 2), "bc": (1, 2)}
CUT_LABELS = {"a|bc": 0, "b|ac": 1, "c|ab": 2}


def pair_marginal(rho: np.ndarray, pair: str) -> np.ndarray:
    """Two-qubit reduced state of a three-qubit register, e.g. ``pair="ab"``."""
    try:
        keep = PAIR_LABELS[pair]
    except KeyError:
        raise ValueError(f"unknown pair {pair!r}; expected one of {sorted(PAIR_LABELS)}") from None
    return partial_trace(rho, keep, (2, 2, 2))


@dataclass(frozen=True)
class PiTangleBreakdown:
    pi_a: float
    pi_b: float
    pi_c: float
    pi_abc: float
    pairwise: dict = field(default_factory=dict)
    one_vs_rest: dict = field(default_factory=dict)


def pi_tangle(rho: np.ndarray) -> PiTangleBreakdown:
    """Three-qubit pi-tangle and the negativities it is built from.

    Components are reported raw (no clamping), so a component may dip below
    zero for some mixed states.
    """
    rho = validate_density_matrix(rho)
    if rho.shape != (8, 8):
        raise DimensionError(f"pi_tangle needs an 8x8 matrix, got {rho.shape}")
    cut = {label: negativity(rho, s, (2, 2, 2)) for label, s in CUT_LABELS.items()}
    pair = {label: negativity(pair_marginal(rho, label), 0, (2, 2)) for label in PAIR_LABELS}
    pi_a = cut["a|bc"] ** 2 - pair["ab"] ** 2 - pair["ac"] ** 2
    pi_b = cut["b|ac"] ** 2 - pair["ab"] ** 2 - pair["bc"] ** 2
    pi_c = cut["c|ab"] ** 2 - pair["ac"] ** 2 - pair["bc"] ** 2
    return PiTangleBreakdown(pi_a, pi_b, pi_c, (pi_a + pi_b + pi_c) / 3.0, pair, cut)


# ---------------------------------------------------------------------------
# Svetlichny
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementFrame:
    """Six unit vectors (a, a', b, b', c, c') stored as rows of a (6, 3) array."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float).reshape(6, 3)
        norms = np.linalg.norm(v, axis=1)
        if np.any(norms == 0):
            raise ValueError("measurement directions must be nonzero")
        v = v / norms[:, None]
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def from_vectors(cls, a, a_, b, b_, c, c_) -> "MeasurementFrame":
        return cls(np.array([a, a_, b, b_, c, c_], dtype=float))


def correlation_tensor(rho: np.ndarray) -> np.ndarray:
    """T_ijk = tr(sigma_i x sigma_j x sigma_k rho) for a three-qubit state."""
    rho = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2, 2, 2)
    p = np.array(PAULIS)
    # tr(P_i x P_j x P_k rho) = sum P_i[x,u] P_j[y,v] P_k[z,w] rho[u,v,w,x,y,z]
    return np.einsum("ixu,jyv,kzw,uvwxyz->ijk", p, p, p, rho).real


def svetlichny_operator(frame: MeasurementFrame) -> np.ndarray:
    ops = [observable(v) for v in frame.vectors]
    s = np.zeros((8, 8), dtype=complex)
    for ia, ib, ic, sign in SVETLICHNY_TERMS:
        s += sign * kron(ops[ia], ops[ib], ops[ic])
    return s


def _frame_values(tensor: np.ndarray, v: np.ndarray) -> np.ndarray:
    """tr(S rho) for a batch of frames ``v`` with shape (R, 6, 3)."""
    out = np.zeros(v.shape[0])
    for ia, ib, ic, sign in SVETLICHNY_TERMS:
        out += sign * np.einsum("ijk,ri,rj,rk->r", tensor, v[:, ia], v[:, ib], v[:, ic])
    return out


def svetlichny_value(rho: np.ndarray, frame: MeasurementFrame) -> float:
    t = correlation_tensor(rho)
    return float(_frame_values(t, frame.vectors[None])[0])


def _random_unit(rng: np.random.Generator, shape) -> np.ndarray:
    v = rng.normal(size=shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _unit(g: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    return np.where(norm > 1e-300, g / np.where(norm > 0, norm, 1.0), fallback)


# For each party, the gradient of tr(S rho) with respect to its two settings.
# Entries: (own setting slot, other slot 1, other slot 2, sign); the tensor is
# pre-transposed so that the owning party is the first axis.
def _party_terms(party: int):
    out = []
    for term in SVETLICHNY_TERMS:
        slots, sign = term[:3], term[3]
        own = slots[party]
        others = [s for p, s in enumerate(slots) if p != party]
        out.append((own, others[0], others[1], sign))
    return out


_PARTY_TERMS = [_party_terms(p) for p in range(3)]
_PARTY_AXES = [(0, 1, 2), (1, 0, 2), (2, 0, 1)]


@dataclass(frozen=True)
class SvetlichnyResult:
    value: float
    frame: MeasurementFrame
    converged: bool
    sweeps: int


def svetlichny_max(rho: np.ndarray, restarts: int = 32, tol: float = 1e-9,
                   max_sweeps: int = 500, seed: int | np.random.SeedSequence = 0,
                   warm_start: Sequence[MeasurementFrame] = ()) -> SvetlichnyResult:
    """Maximal Svetlichny value by see-saw ascent over measurement frames.

    tr(S rho) is linear in every one of the six setting vectors, so with the
    other parties held fixed each party's pair of settings is set to its
    normalized gradient.  All restarts are iterated together as one batch;
    iteration stops once no restart improves by more than ``tol`` in a sweep.

    Parameters
    ----------
    rho : (8, 8) array
        Three-qubit density matrix.
    restarts : int
        Number of random initial frames.
    tol : float
        Per-sweep improvement threshold.
    max_sweeps : int
        Iteration cap; hitting it returns the best frame with
        ``converged=False``.
    seed : int or SeedSequence
        Source for the random initial frames.
    warm_start : sequence of MeasurementFrame
        Extra starting frames, e.g. the optimum of a neighbouring time sample.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rho = validate_density_matrix(rho)
    if rho.shape != (8, 8):
        raise DimensionError(f"svetlichny_max needs an 8x8 matrix, got {rho.shape}")
    tensor = correlation_tensor(rho)
    rng = np.random.default_rng(seed)
    v = _random_unit(rng, (restarts, 6, 3))
    if len(warm_start):
        v = np.concatenate([np.array([f.vectors for f in warm_start]), v])
    return _seesaw(tensor, v, tol, max_sweeps)


def _seesaw(tensor: np.ndarray, v: np.ndarray, tol: float, max_sweeps: int) -> SvetlichnyResult:
    tensors = [tensor.transpose(axes) for axes in _PARTY_AXES]
    prev = _frame_values(tensor, v)
    converged = False
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        for party in range(3):
            tp = tensors[party]
            grads = {2 * party: 0.0, 2 * party + 1: 0.0}
            for own, o1, o2, sign in _PARTY_TERMS[party]:
                grads[own] = grads[own] + sign * np.einsum("ijk,rj,rk->ri", tp, v[:, o1], v[:, o2])
            for slot, g in grads.items():
                v[:, slot] = _unit(g, v[:, slot])
        val = _frame_values(tensor, v)
        if np.max(val - prev) < tol:
            converged = True
            prev = val
            break
        prev = val
    best = int(np.argmax(prev))
    if not converged:
        log.debug("svetlichny see-saw hit the %d-sweep cap", max_sweeps)
    return SvetlichnyResult(float(prev[best]), MeasurementFrame(v[best].copy()), converged, sweep)


def grid_directions(resolution: int) -> np.ndarray:
    """Unit vectors on a polar/azimuthal product grid with a common angular step.

    Azimuth takes ``resolution`` values on [0, 2 pi); the polar angle takes
    ``resolution // 2 + 1`` values on [0, pi] with the poles kept once.
    """
    if resolution < 8:
        raise ValueError("grid resolution must be at least 8")
    thetas = np.linspace(0.0, np.pi, resolution // 2 + 1)
    phis = 2.0 * np.pi * np.arange(resolution) / resolution
    dirs = [np.array([0.0, 0.0, 1.0])]
    for th in thetas[1:-1]:
        for ph in phis:
            dirs.append(np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]))
    dirs.append(np.array([0.0, 0.0, -1.0]))
    return np.array(dirs)


@numba.njit(cache=True)
def _grid_kernel(tensor, dirs):
    n = dirs.shape[0]
    best = -np.inf
    pc = np.empty((n, 3))
    qc = np.empty((n, 3))
    for i in range(n):
        for j in range(n):
            # P = T(., b' - b, .), Q = T(., b + b', .) acting on (a, c)
            dm = dirs[j] - dirs[i]
            dp = dirs[j] + dirs[i]
            p = np.zeros((3, 3))
            q = np.zeros((3, 3))
            for x in range(3):
                for y in range(3):
                    for z in range(3):
                        p[x, z] += tensor[x, y, z] * dm[y]
                        q[x, z] += tensor[x, y, z] * dp[y]
            for k in range(n):
                for x in range(3):
                    pc[k, x] = p[x, 0] * dirs[k, 0] + p[x, 1] * dirs[k, 1] + p[x, 2] * dirs[k, 2]
                    qc[k, x] = q[x, 0] * dirs[k, 0] + q[x, 1] * dirs[k, 1] + q[x, 2] * dirs[k, 2]
            for k in range(n):
                for m in range(n):
                    x0 = pc[k, 0] + qc[m, 0]
                    x1 = pc[k, 1] + qc[m, 1]
                    x2 = pc[k, 2] + qc[m, 2]
                    y0 = qc[k, 0] - pc[m, 0]
                    y1 = qc[k, 1] - pc[m, 1]
                    y2 = qc[k, 2] - pc[m, 2]
                    val = np.sqrt(x0 * x0 + x1 * x1 + x2 * x2) + np.sqrt(y0 * y0 + y1 * y1 + y2 * y2)
                    if val > best:
                        best = val
    return best


def svetlichny_grid(rho: np.ndarray, resolution: int = 16) -> float:
    """Brute-force lower bound on the maximal Svetlichny value.

    Settings b, b', c, c' range exhaustively over :func:`grid_directions`;
    for each combination the best a, a' follow in closed form, since the
    value is a.x + a'.y with x, y fixed and is maximized by |x| + |y|.
    """
    rho = validate_density_matrix(rho)
    if rho.shape != (8, 8):
        raise DimensionError(f"svetlichny_grid needs an 8x8 matrix, got {rho.shape}")
    return float(_grid_kernel(correlation_tensor(rho), grid_directions(resolution)))
