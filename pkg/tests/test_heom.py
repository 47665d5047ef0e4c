import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from openqubits.heom import (
    AdoStack,
    BathSpec,
    HeomDivergenceError,
    HeomPropagator,
    build_coupling_operator,
    build_system_hamiltonian,
    convergence_check,
    correlation_decomposition,
    heom_propagate,
    heom_rhs,
    hierarchy_layout,
)
from openqubits.measures import pair_marginal
from openqubits.pseudomode import propagate_converged
from openqubits.qstate import basis_index, build_state, ket2dm, partial_trace, random_density_matrix


def comm(a, b):
    return a @ b - b @ a


# -- bath and operators --------------------------------------------------------

def test_bathspec_derived_quantities():
    b = BathSpec(0.1, 0.05, 1.0, (1, 1, 0.5))
    assert b.n_qubits == 3
    assert b.alpha_total == pytest.approx(1.5)
    assert np.sum(b.relative**2) == pytest.approx(1.0)
    assert b.markov_ratio == pytest.approx(1.5 * np.sqrt(0.1) / 0.05)
    assert BathSpec(0.1, 0.0).markov_ratio == np.inf


@pytest.mark.parametrize("kwargs", [dict(lam=-1, gamma=0.1), dict(lam=0.1, gamma=-0.1),
                                    dict(lam=0.1, gamma=0.1, omega0=0.0), dict(lam=0.1, gamma=0.1, alphas=())])
def test_bathspec_rejects(kwargs):
    with pytest.raises(ValueError):
        BathSpec(**kwargs)


def test_system_hamiltonian():
    np.testing.assert_array_equal(build_system_hamiltonian(1.0, 1), np.diag([1.0, 0.0]))
    np.testing.assert_array_equal(np.diag(build_system_hamiltonian(1.0, 3)).real, [3, 2, 2, 1, 2, 1, 1, 0])
    w = build_state("W")
    assert (w.conj() @ build_system_hamiltonian(1.0, 3) @ w).real == pytest.approx(1.0)
    with pytest.raises(ValueError):
        build_system_hamiltonian(1.0, 4)


def test_coupling_operator():
    np.testing.assert_array_equal(build_coupling_operator((1,)), [[0, 1], [1, 0]])
    v = build_coupling_operator((1, 1, 1))
    np.testing.assert_allclose(v @ build_state("ggg"), np.sqrt(3) * build_state("W"), atol=1e-15)
    v = build_coupling_operator((1, 1, 0.5))
    assert (v @ v)[7, 7].real == pytest.approx(2.25)
    assert np.trace(v @ v).real == pytest.approx(8 * 2.25)
    np.testing.assert_array_equal(v, v.conj().T)
    assert np.all(v.imag == 0)


def test_correlation_decomposition():
    dec = correlation_decomposition(BathSpec(0.1, 0.05))
    np.testing.assert_allclose(dec.nu, [0.05 - 1j, 0.05 + 1j])
    assert dec(0.0)[0] == pytest.approx(0.1)
    t = np.linspace(0, 100, 1001)
    np.testing.assert_allclose(dec(t), 0.1 * np.exp(-0.05 * t - 1j * t), atol=1e-12)
    np.testing.assert_allclose(dec.coef_real, [0.05, 0.05])


# -- hierarchy ------------------------------------------------------------------

@pytest.mark.parametrize("depth", [2, 5, 12])
def test_layout(depth):
    lay = hierarchy_layout(depth)
    assert lay.size == (depth + 1) * (depth + 2) // 2
    assert tuple(lay.indices[0]) == (0, 0)
    assert np.all(lay.indices.sum(axis=1) <= depth)
    for i, (l1, l2) in enumerate(lay.indices):
        for p, step in enumerate([(1, 0), (0, 1)]):
            u = lay.up[p, i]
            if l1 + l2 < depth:
                assert tuple(lay.indices[u]) == (l1 + step[0], l2 + step[1])
                assert lay.down[p, u] == i
            else:
                assert u == lay.size


def _propagator(bath, depth):
    return HeomPropagator(build_system_hamiltonian(bath.omega0, bath.n_qubits), build_coupling_operator(bath.alphas),
                          correlation_decomposition(bath), bath.lam, depth)


def test_rhs_decoupled(rng):
    bath = BathSpec(0.1, 0.05, alphas=(0, 0, 0))
    h = build_system_hamiltonian(1.0, 3)
    stack = AdoStack.initial(random_density_matrix(8, rng), 4)
    d = heom_rhs(stack, h, build_coupling_operator(bath.alphas), correlation_decomposition(bath), bath.lam)
    np.testing.assert_allclose(d[0], -1j * comm(h, stack.rho), atol=1e-15)
    assert np.all(d[1:] == 0)


def test_rhs_at_initial_time_single_qubit():
    lam = 0.1
    bath = BathSpec(lam, 0.05, alphas=(1,))
    rho0 = ket2dm(build_state("e"))
    h, v = build_system_hamiltonian(1.0, 1), build_coupling_operator((1,))
    stack = AdoStack.initial(rho0, 4)
    d = heom_rhs(stack, h, v, correlation_decomposition(bath), lam)
    np.testing.assert_allclose(d[0], -1j * comm(h, rho0), atol=1e-15)
    # Psi_1 rho = -(i lam / 2)(V^x - V^o) rho = i lam rho V, Psi_2 rho = -i lam V rho
    lay = stack.layout
    i10 = lay.up[0, 0]
    i01 = lay.up[1, 0]
    np.testing.assert_allclose(d[i10], 1j * lam * rho0 @ v, atol=1e-15)
    np.testing.assert_allclose(d[i01], -1j * lam * v @ rho0, atol=1e-15)


def test_rhs_matches_hand_expansion(rng):
    """Every retained index against a direct transcription of the recursion."""
    bath = BathSpec(0.07, 0.03, alphas=(1, 0.5))
    depth = 4
    prop = _propagator(bath, depth)
    lay = prop.layout
    ados = np.zeros((lay.size + 1, 4, 4), dtype=complex)
    ados[:-1] = rng.normal(size=(lay.size, 4, 4)) + 1j * rng.normal(size=(lay.size, 4, 4))
    got = prop.rhs(ados)
    h, v = prop.h, prop.v
    nu = correlation_decomposition(bath).nu
    pos = {tuple(ix): i for i, ix in enumerate(lay.indices)}
    zero = np.zeros((4, 4))
    for i, (l1, l2) in enumerate(lay.indices):
        want = -1j * comm(h, ados[i]) - (l1 * nu[0] + l2 * nu[1]) * ados[i]
        for nb in [(l1 + 1, l2), (l1, l2 + 1)]:
            want += -1j * comm(v, ados[pos[nb]] if nb in pos else zero)
        for p, (lp, nb) in enumerate([(l1, (l1 - 1, l2)), (l2, (l1, l2 - 1))], start=1):
            if lp:
                r = ados[pos[nb]]
                want += lp * (-0.5j * bath.lam) * (comm(v, r) + (-1) ** p * (v @ r + r @ v))
        np.testing.assert_allclose(got[i], want, atol=1e-13)


def test_sparse_generator_matches_rhs(rng):
    bath = BathSpec(0.1, 0.05, alphas=(1, 1, 0.5))
    prop = _propagator(bath, 5)
    n = prop.layout.size
    ados = np.zeros((n + 1, 8, 8), dtype=complex)
    ados[:-1] = rng.normal(size=(n, 8, 8)) + 1j * rng.normal(size=(n, 8, 8))
    via_gen = (prop.generator() @ ados[:-1].ravel()).reshape(n, 8, 8)
    np.testing.assert_allclose(via_gen, prop.rhs(ados)[:-1], atol=1e-12)


def test_stack_accessors():
    stack = AdoStack.initial(np.eye(2) / 2, 3)
    np.testing.assert_array_equal(stack.get(0, 0), np.eye(2) / 2)
    assert np.all(stack.get(1, 2) == 0)
    with pytest.raises(KeyError):
        stack.get(3, 1)


# -- propagation ----------------------------------------------------------------

def test_closed_system_evolution(rng):
    rho0 = random_density_matrix(8, rng)
    bath = BathSpec(0.1, 0.05, alphas=(0, 0, 0))
    res = heom_propagate(rho0, bath, 5.0, 11, depth=3)
    h = build_system_hamiltonian(1.0, 3)
    for t, rho in zip(res.times, res.states):
        u = expm(-1j * h * t)
        np.testing.assert_allclose(rho, u @ rho0 @ u.conj().T, atol=1e-10)
    pops = np.real(np.diagonal(res.states, axis1=1, axis2=2))
    np.testing.assert_allclose(pops, np.tile(pops[0], (11, 1)), atol=1e-12)


def test_trace_and_hermiticity_single_qubit():
    res = heom_propagate(ket2dm(build_state("e")), BathSpec(0.1, 0.05, alphas=(1,)), 60.0, 301)
    assert res.max_trace_error <= 1e-8
    assert res.max_hermiticity_defect <= 1e-10
    assert min(np.linalg.eigvalsh(s).min() for s in res.states) >= -1e-6


def test_single_qubit_matches_pseudomode():
    bath = BathSpec(0.1, 0.1, alphas=(1,))
    rho0 = ket2dm(build_state("e"))
    h = heom_propagate(rho0, bath, 40.0, 201)
    p = propagate_converged(rho0, bath, 40.0, 201)
    assert np.max(np.abs(h.states[:, 0, 0] - p.states[:, 0, 0])) < 5e-3


def test_permutation_equivariance():
    res = heom_propagate(ket2dm(build_state("W")), BathSpec(0.1, 0.05), 5.0, 26, depth=6)
    for rho in res.states:
        marg = [partial_trace(rho, [k], (2, 2, 2)) for k in range(3)]
        np.testing.assert_allclose(marg[0], marg[1], atol=1e-9)
        np.testing.assert_allclose(marg[0], marg[2], atol=1e-9)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**31))
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density_matrix(4, rng), random_density_matrix(4, rng)
    bath = BathSpec(0.1, 0.05, alphas=(1, 0.5))
    run = lambda r: heom_propagate(r, bath, 4.0, 9, depth=5).states
    np.testing.assert_allclose(run((a + b) / 2), (run(a) + run(b)) / 2, atol=1e-9)


def test_blowup_guard_names_depth_and_step():
    # three qubits at lambda = 0.1 leave the truncated hierarchy unstable
    with pytest.raises(HeomDivergenceError, match=r"L=6.*dt=0\.005"):
        heom_propagate(ket2dm(build_state("W")), BathSpec(0.1, 0.05), 60.0, 61, depth=6)


def test_zero_width_bath_needs_depth():
    rho0 = ket2dm(build_state("e"))
    with pytest.raises(ValueError, match="depth"):
        heom_propagate(rho0, BathSpec(0.01, 0.0, alphas=(1,)), 1.0, 3)
    with pytest.warns(RuntimeWarning, match="gamma = 0"):
        heom_propagate(rho0, BathSpec(0.01, 0.0, alphas=(1,)), 1.0, 3, depth=8)


@pytest.mark.parametrize("kwargs", [dict(depth=1), dict(dt=0.0)])
def test_propagate_rejects_bad_settings(kwargs):
    with pytest.raises(ValueError):
        heom_propagate(ket2dm(build_state("e")), BathSpec(0.1, 0.05, alphas=(1,)), 1.0, 3, **kwargs)


def test_propagate_rejects_wrong_shape():
    with pytest.raises(ValueError):
        heom_propagate(np.eye(2) / 2, BathSpec(0.1, 0.05), 1.0, 3)


def test_convergence_check_decoupled():
    rep = convergence_check(ket2dm(build_state("W")), BathSpec(0.1, 0.05, alphas=(0, 0, 0)), 2.0, [2, 4, 6], 11)
    assert rep.distances == [0.0, 0.0]
    assert rep.converged and rep.monotone


def test_convergence_check_single_qubit_ladder():
    rep = convergence_check(ket2dm(build_state("e")), BathSpec(0.1, 0.05, alphas=(1,)), 30.0, [4, 6, 8, 10], 61)
    assert rep.monotone
    assert rep.distances[-1] < 1e-4


def test_convergence_check_flags_zero_width_bath():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        rep = convergence_check(ket2dm(build_state("e")), BathSpec(0.1, 0.0, alphas=(1,)), 30.0, [4, 6, 8], 61)
    assert not rep.converged


def test_convergence_check_rejects_unsorted():
    with pytest.raises(ValueError):
        convergence_check(np.eye(2) / 2, BathSpec(0.1, 0.05, alphas=(1,)), 1.0, [6, 4])


def test_w_marginal_populations_start_correct():
    res = heom_propagate(ket2dm(build_state("W")), BathSpec(0.01, 1e-4), 1.0, 3, depth=4)
    assert res.states[0][basis_index("egg"), basis_index("egg")] == pytest.approx(1 / 3)
    assert pair_marginal(res.states[0], "ab")[3, 3].real == pytest.approx(1 / 3)


def test_unphysical_state_stops_the_run():
    # three qubits at lambda = 0.1 leave the physical range long before the ADO norm guard trips
    with pytest.raises(HeomDivergenceError, match="physical range.*L=12"):
        heom_propagate(ket2dm(build_state("W")), BathSpec(0.1, 0.05), 12.0, 61, depth=12)
