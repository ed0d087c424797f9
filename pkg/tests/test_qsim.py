import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_mixer, dense_qaoa_state, random_tsp
from qpathfinder.ansatz import QaoaAnsatz
from qpathfinder.encode import IsingModel, decode_index, encode_tsp, feasible_indices
from qpathfinder.qsim import (
    QaoaEnergy,
    SimulationError,
    apply_cost_phase,
    apply_mixer,
    energy_table,
    expectation,
    feasible_probability,
    initial_state,
    mass_on,
    probabilities,
    qaoa_state,
    sample,
    split_params,
)

Z1 = IsingModel(1, np.array([1.0]))


def random_model(n, rng):
    h = rng.normal(size=n)
    J = {(i, j): rng.normal() for i in range(n) for j in range(i + 1, n)}
    return IsingModel(n, h, J, offset=rng.normal())


def test_initial_state_uniform():
    psi = initial_state(3)
    assert np.allclose(psi, np.full(8, 8 ** -0.5))
    with pytest.raises(SimulationError):
        initial_state(0)
    with pytest.raises(SimulationError):
        initial_state(21, qubit_cap=20)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_mixer_matches_dense(n):
    rng = np.random.default_rng(n)
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    beta = rng.uniform(-np.pi, np.pi)
    assert np.allclose(apply_mixer(psi, beta), dense_mixer(n, beta) @ psi, atol=1e-12)


def test_mixer_does_not_mutate_input():
    psi = initial_state(2) * 1.0
    psi[0] = 1
    before = psi.copy()
    apply_mixer(psi, 0.3)
    assert np.array_equal(psi, before)


def test_cost_phase_shape_mismatch():
    with pytest.raises(SimulationError):
        apply_cost_phase(initial_state(2), np.zeros(8), 0.1)


def test_zero_layers_is_uniform():
    a = QaoaAnsatz(Z1, 0)
    assert np.allclose(qaoa_state(a, []), initial_state(1))


def test_param_count_checked():
    with pytest.raises(SimulationError):
        split_params([0.1, 0.2, 0.3], 2)
    g, b = split_params([1, 2, 3, 4], 2)
    assert list(g) == [1, 2] and list(b) == [3, 4]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 4), p=st.integers(1, 3))
def test_qaoa_matches_dense_oracle(seed, n, p):
    rng = np.random.default_rng(seed)
    im = random_model(n, rng)
    params = rng.uniform(-np.pi, np.pi, 2 * p)
    psi = qaoa_state(QaoaAnsatz(im, p), params)
    ref = dense_qaoa_state(energy_table(im), params[:p], params[p:])
    assert np.max(np.abs(psi - ref)) < 1e-10


@pytest.mark.parametrize("gamma,beta", [(0.3, 0.2), (-1.1, 0.7), (np.pi / 4, np.pi / 8)])
def test_single_qubit_closed_form(gamma, beta):
    e = QaoaEnergy(QaoaAnsatz(Z1, 1))
    assert e([gamma, beta]) == pytest.approx(np.sin(2 * gamma) * np.sin(2 * beta), abs=1e-12)


def test_norm_preserved_long_chain():
    rng = np.random.default_rng(0)
    im = random_model(8, rng)
    params = rng.uniform(-np.pi, np.pi, 40)
    psi = qaoa_state(QaoaAnsatz(im, 20), params)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-10)


def test_expectation_is_probability_weighted():
    rng = np.random.default_rng(4)
    im = random_model(3, rng)
    a = QaoaAnsatz(im, 2)
    params = rng.uniform(-1, 1, 4)
    psi = qaoa_state(a, params)
    table = energy_table(im)
    manual = sum(abs(psi[z]) ** 2 * table[z] for z in range(8))
    assert expectation(psi, table) == pytest.approx(manual, abs=1e-12)
    assert QaoaEnergy(a)(params) == pytest.approx(manual, abs=1e-12)


def test_sampling_reproducible_and_complete():
    rng = np.random.default_rng(5)
    im = random_model(4, rng)
    psi = qaoa_state(QaoaAnsatz(im, 1), [0.4, 0.3])
    a = sample(psi, 1000, seed=11)
    assert a == sample(psi, 1000, seed=11)
    assert sum(a.values()) == 1000
    assert all(0 <= k < 16 for k in a)
    with pytest.raises(SimulationError):
        sample(psi, 0)


def test_sampling_frequencies_track_probabilities():
    psi = qaoa_state(QaoaAnsatz(Z1, 1), [0.4, 0.3])
    counts = sample(psi, 200_000, seed=1)
    p1 = probabilities(psi)[1]
    assert counts.get(1, 0) / 200_000 == pytest.approx(p1, abs=0.005)


def test_feasible_probability_agrees_with_mass_on():
    im = encode_tsp(random_tsp(3, 2))
    a = QaoaAnsatz(im, 2)
    psi = qaoa_state(a, [0.2, 0.5, 0.4, 0.1])
    idx, _ = feasible_indices(3)
    via_decoder = feasible_probability(psi, lambda z: decode_index(z, 3))
    assert via_decoder == pytest.approx(mass_on(psi, idx), abs=1e-12)
    assert mass_on(psi, []) == 0.0


def test_initial_state_examples():
    assert np.allclose(initial_state(1), [2 ** -0.5, 2 ** -0.5])
    psi = initial_state(3)
    assert np.allclose(psi, psi[0]) and np.linalg.norm(psi) == pytest.approx(1.0)
    assert np.linalg.norm(initial_state(20)) == pytest.approx(1.0, abs=1e-10)


def test_cost_phase_identities():
    rng = np.random.default_rng(1)
    psi = qaoa_state(QaoaAnsatz(random_model(3, rng), 1), [0.3, 0.2])
    table = rng.normal(size=8)
    assert np.array_equal(apply_cost_phase(psi, table, 0.0), psi)
    shifted = apply_cost_phase(psi, np.full(8, 2.5), 0.9)
    assert np.allclose(probabilities(shifted), probabilities(psi), atol=1e-15)


def test_cost_phase_matches_dense_exponential():
    from scipy.linalg import expm
    rng = np.random.default_rng(396)
    table = rng.normal(size=8)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    ref = expm(-1j * 0.7 * np.diag(table)) @ psi
    assert np.max(np.abs(apply_cost_phase(psi, table, 0.7) - ref)) < 1e-12


def test_mixer_identities():
    psi = initial_state(3) * 1.0
    assert np.allclose(apply_mixer(psi, 0.0), psi)
    zero = np.zeros(8, dtype=complex)
    zero[0] = 1
    flipped = apply_mixer(zero, np.pi / 2)
    assert abs(flipped[7]) == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(np.delete(flipped, 7), 0, atol=1e-15)


def test_mixer_random_four_qubits_beta_point_three():
    rng = np.random.default_rng(405)
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    assert np.max(np.abs(apply_mixer(psi, 0.3) - dense_mixer(4, 0.3) @ psi)) < 1e-12


def test_single_qubit_optimum_value():
    e = QaoaEnergy(QaoaAnsatz(Z1, 1))
    assert e([np.pi / 4, np.pi / 4]) == pytest.approx(1.0, abs=1e-12)


def test_three_qubit_p2_dense():
    rng = np.random.default_rng(414)
    im = random_model(3, rng)
    params = rng.uniform(-np.pi, np.pi, 4)
    psi = qaoa_state(QaoaAnsatz(im, 2), params)
    ref = dense_qaoa_state(energy_table(im), params[:2], params[2:])
    assert np.max(np.abs(psi - ref)) < 1e-10


def test_expectation_examples():
    rng = np.random.default_rng(421)
    table = rng.normal(size=16)
    assert expectation(initial_state(4), table) == pytest.approx(table.mean(), abs=1e-12)
    basis = np.zeros(16, dtype=complex)
    basis[5] = 1
    assert expectation(basis, table) == table[5]


def test_sampling_basis_state():
    basis = np.zeros(8, dtype=complex)
    basis[3] = 1
    assert sample(basis, 100, seed=0) == {3: 100}


def test_sampling_uniform_within_five_sigma():
    counts = sample(initial_state(2), 100_000, seed=432)
    sigma = np.sqrt(100_000 * 0.25 * 0.75)
    for z in range(4):
        assert abs(counts[z] - 25_000) <= 5 * sigma


def test_feasible_probability_examples():
    decode = lambda z: decode_index(z, 3)  # noqa: E731
    assert feasible_probability(initial_state(4), decode) == pytest.approx(0.125)
    idx, _ = feasible_indices(3)
    basis = np.zeros(16, dtype=complex)
    basis[idx[0]] = 1
    assert feasible_probability(basis, decode) == 1.0
    zero = np.zeros(16, dtype=complex)
    zero[0] = 1
    assert feasible_probability(zero, decode) == 0.0


def richardson_derivative(f, x, i, h=1e-2):
    def central(step):
        e = np.zeros_like(x)
        e[i] = step
        return (f(x + e) - f(x - e)) / (2 * step)
    return (4 * central(h / 2) - central(h)) / 3


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2 ** 31), p=st.integers(1, 3))
def test_central_difference_matches_richardson(seed, p):
    rng = np.random.default_rng(seed)
    energy = QaoaEnergy(QaoaAnsatz(random_model(3, rng), p))
    x = rng.uniform(-np.pi, np.pi, 2 * p)
    for i in range(2 * p):
        e = np.zeros_like(x)
        e[i] = 1e-5
        fd = (energy(x + e) - energy(x - e)) / 2e-5
        assert fd == pytest.approx(richardson_derivative(energy, x, i), abs=1e-6)
