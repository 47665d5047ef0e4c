"""Dense state utilities shared by the solvers and the measures.

Basis convention used everywhere in the package: qubit 1 is the leftmost
tensor factor and, per qubit, the excited state ``|e>`` comes before the
ground state ``|g>``.  For three qubits the computational basis is therefore
``|eee>, |eeg>, |ege>, |egg>, |gee>, |geg>, |gge>, |ggg>`` (0-based indices
0..7), so ``|egg>``, ``|geg>``, ``|gge>`` sit at 3, 5, 6 and ``|ggg>`` at 7.
"""
from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

EXCITED = np.array([1.0, 0.0], dtype=complex)
GROUND = np.array([0.0, 1.0], dtype=complex)

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

# sigma_+ = |e><g|
SIGMA_PLUS = np.outer(EXCITED, GROUND.conj())
SIGMA_MINUS = SIGMA_PLUS.conj().T


class DimensionError(ValueError):
    """Raised when matrix shapes and declared subsystem dimensions disagree."""


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of factors, leftmost factor first."""
    if not ops:
        raise ValueError("kron needs at least one factor")
    return reduce(np.kron, ops)


def embed(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Place a single-qubit operator on ``site`` (0-based) of an n-qubit register."""
    factors = [IDENTITY] * n_sites
    factors[site] = op
    return kron(*factors)


def dag(m: np.ndarray) -> np.ndarray:
    return m.conj().swapaxes(-1, -2)


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dag(m))


def ket2dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def _check_dims(rho: np.ndarray, dims: Sequence[int]) -> None:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {rho.shape}")
    if int(np.prod(dims)) != rho.shape[0]:
        raise DimensionError(
            f"subsystem dims {list(dims)} do not multiply to matrix size {rho.shape[0]}"
        )


def partial_trace(rho: np.ndarray, keep: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Reduce ``rho`` to the subsystems listed in ``keep`` (0-based, any order).

    The kept factors appear in ascending index order in the result.
    """
    _check_dims(rho, dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise DimensionError("keep must name at least one subsystem")
    n = len(dims)
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"keep {keep} out of range for {n} subsystems")
    traced = [i for i in range(n) if i not in keep]
    t = np.asarray(rho).reshape(tuple(dims) * 2)
    # trace pairs from the highest index down so remaining axis numbers stay valid
    for i in reversed(traced):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    d = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d, d)


def partial_transpose(rho: np.ndarray, subsystem: int | Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Transpose the indices of one (or several) subsystems."""
    _check_dims(rho, dims)
    subs = [subsystem] if np.isscalar(subsystem) else list(subsystem)
    n = len(dims)
    for s in subs:
        if not 0 <= s < n:
            raise DimensionError(f"subsystem {s} out of range for {n} subsystems")
    t = np.asarray(rho).reshape(tuple(dims) * 2)
    axes = list(range(2 * n))
    for s in subs:
        axes[s], axes[s + n] = axes[s + n], axes[s]
    return t.transpose(axes).reshape(rho.shape)


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"trace norm needs a square matrix, got {m.shape}")
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the trace norm of ``a - b``; uses a Hermitian eigensolve."""
    d = hermitize(np.asarray(a) - np.asarray(b))
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(d))))


def basis_index(label: str) -> int:
    """0-based index of a product basis label such as ``"egg"``."""
    idx = 0
    for ch in label:
        if ch not in "eg":
            raise ValueError(f"basis labels use 'e' and 'g' only, got {label!r}")
        idx = 2 * idx + (ch == "g")
    return idx


def basis_state(label: str) -> np.ndarray:
    psi = np.zeros(2 ** len(label), dtype=complex)
    psi[basis_index(label)] = 1.0
    return psi


def normalize(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / norm


def build_state(kind: str | Sequence[complex], n_qubits: int = 3) -> np.ndarray:
    """Named register states.

    Parameters
    ----------
    kind : str or sequence of complex
        ``"W"``, ``"GHZ"``, ``"ggg"`` (any string of ``e``/``g`` labels is
        accepted as a product state), or explicit amplitudes in the package
        basis ordering, normalized here.
    n_qubits : int
        Register size for the named entangled states.
    """
    if not isinstance(kind, str):
        return normalize(kind)
    key = kind.strip()
    if key.upper() == "W":
        psi = np.zeros(2**n_qubits, dtype=complex)
        for i in range(n_qubits):
            label = "".join("e" if j == i else "g" for j in range(n_qubits))
            psi[basis_index(label)] = 1.0
        return normalize(psi)
    if key.upper() == "GHZ":
        return normalize(basis_state("e" * n_qubits) + basis_state("g" * n_qubits))
    if key and set(key) <= {"e", "g"}:
        return basis_state(key)
    raise ValueError(f"unknown state kind {kind!r}")


def observable(n: Sequence[float]) -> np.ndarray:
    """Dichotomic spin observable along direction ``n`` (normalized internally)."""
    n = np.asarray(n, dtype=float)
    norm = np.linalg.norm(n)
    if norm == 0:
        raise ValueError("observable direction must be nonzero")
    n = n / norm
    return n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z


def validate_density_matrix(rho: np.ndarray, trace_tol: float = 1e-6) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
    tr = np.trace(rho)
    if abs(tr - 1) > trace_tol:
        raise ValueError(f"density matrix trace {tr.real:.3g} differs from 1")
    return rho


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-distributed random state (Hilbert-Schmidt measure for full rank)."""
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    return normalize(rng.normal(size=dim) + 1j * rng.normal(size=dim))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
