import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairqa.ising import SpinInstance, enumerate_ground_states, generate_spinglass, spins
from fairqa.models import load_model
from fairqa.samplers import (
    PtIcmConfig,
    SampleBatch,
    _disagreement_labels,
    _energy,
    beta_grid,
    fixed_beta_chain,
    icm_cluster,
    icm_move,
    metropolis_accept,
    pt_icm,
    simulated_annealing,
    spins_to_index,
    swap_accept,
)

FM2 = SpinInstance(2, ((0, 1, 1.0),))


def test_beta_grid_values():
    betas = beta_grid()
    assert betas[0] == pytest.approx(0.32787, abs=1e-5)
    assert betas[1] == pytest.approx(0.4, abs=1e-5)
    assert betas[-1] == 20.0
    assert len(betas) == 22
    np.testing.assert_allclose(betas[1:-1] / betas[:-2], 1.22)
    with pytest.raises(ValueError):
        beta_grid(ratio=1.0)


def test_acceptance_rules():
    assert metropolis_accept(-1.0, 1.0, 0.999)
    assert metropolis_accept(1.0, 1.0, np.exp(-1) - 1e-9)
    assert not metropolis_accept(1.0, 1.0, np.exp(-1) + 1e-9)
    # cold replica with higher energy always moves down the ladder
    assert swap_accept(2.0, 1.0, 5.0, 3.0, 0.999)
    assert swap_accept(2.0, 1.0, 3.0, 5.0, np.exp(-2) - 1e-9)
    assert not swap_accept(2.0, 1.0, 3.0, 5.0, np.exp(-2) + 1e-9)


def test_spins_to_index_convention():
    assert spins_to_index(np.array([1, 1, -1])) == 0b001
    for k in range(16):
        assert spins_to_index(spins(k, 4)) == k


def test_single_spin_magnetisation():
    beta, h, sweeps = 1.0, 0.5, 100_000
    chain = fixed_beta_chain(SpinInstance(1, (), (h,)), beta, sweeps, seed=4)
    m = np.tanh(beta * h)
    sigma = np.sqrt((1 - m**2) / sweeps)
    assert abs(chain.mean() - m) < 3 * sigma


def test_sa_ferromagnet_split():
    batch = simulated_annealing(FM2, 500, 200, seed=0)
    assert set(batch.counts) <= {0b00, 0b11}
    assert batch.total == 500 and batch.energy_of_best == -1.0
    assert abs(batch.counts.get(0, 0) - 250) < 3 * np.sqrt(500 * 0.25)


def test_sa_deterministic():
    inst = load_model("b")
    assert simulated_annealing(inst, 50, 100, 7) == simulated_annealing(inst, 50, 100, 7)
    assert simulated_annealing(inst, 50, 100, 7).counts != simulated_annealing(inst, 50, 100, 8).counts


def test_sample_batch_json_roundtrip():
    batch = SampleBatch.from_states([3, 0, 3, 5], -2.0, "sa", 11)
    assert batch.counts == {0: 1, 3: 2, 5: 1}
    assert SampleBatch.from_json(batch.to_json()) == batch
    with pytest.raises(ValueError):
        SampleBatch({0: 2}, 3, 0.0, "x")


def test_icm_identical_replicas_no_op():
    rng = np.random.default_rng(0)
    a = np.array([1.0, -1.0, 1.0, 1.0])
    b = a.copy()
    nbrs = [np.array([1]), np.array([0, 2]), np.array([1, 3]), np.array([2])]
    assert icm_move(a, b, nbrs, rng) == []
    np.testing.assert_array_equal(a, b)


def test_icm_cluster_example():
    # path 0-1-2-3, replicas differ on {0, 1} and {3}
    nbrs = [np.array([1]), np.array([0, 2]), np.array([1, 3]), np.array([2])]
    a = np.array([1.0, 1.0, 1.0, 1.0])
    b = np.array([-1.0, -1.0, 1.0, -1.0])
    assert icm_cluster(a, b, nbrs, 1) == [0, 1]
    assert icm_cluster(a, b, nbrs, 3) == [3]
    labels = _disagreement_labels(a[None], b[None], nx.to_numpy_array(nx.path_graph(4)) != 0)
    np.testing.assert_array_equal(labels[0], [0, 0, 4, 3])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_icm_conserves_pair_energy(seed):
    rng = np.random.default_rng(seed)
    n = 8
    edges = list(nx.gnm_random_graph(n, 12, seed=seed).edges()) or [(0, 1)]
    inst = SpinInstance(n, tuple((i, j, rng.choice([-2.0, -1.0, 1.0, 2.0])) for i, j in edges), tuple(rng.normal(size=n)))
    J, h = inst.coupling_matrix(), np.asarray(inst.biases)
    a, b = rng.choice([-1.0, 1.0], size=(2, n))
    before = _energy(J, h, a) + _energy(J, h, b)
    nbrs = [np.flatnonzero(row) for row in J]
    icm_move(a, b, nbrs, rng)
    assert _energy(J, h, a) + _energy(J, h, b) == pytest.approx(before, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_vectorised_labels_match_reference_clusters(seed):
    rng = np.random.default_rng(seed)
    n = 9
    J = nx.to_numpy_array(nx.gnm_random_graph(n, 10, seed=seed))
    nbrs = [np.flatnonzero(row) for row in J]
    a, b = rng.choice([-1.0, 1.0], size=(2, 4, n))
    labels = _disagreement_labels(a, b, J != 0)
    for c in range(4):
        for i in np.flatnonzero(a[c] != b[c]):
            cluster = icm_cluster(a[c], b[c], nbrs, int(i))
            assert labels[c, i] == min(cluster)
            assert set(np.flatnonzero(labels[c] == labels[c, i])) == set(cluster)


def test_pt_ferromagnet():
    res = pt_icm(FM2, PtIcmConfig(n_sweeps=10_000, seed=0, n_samples=200, n_chains=2))
    assert res.lowest_energy == -1.0
    assert res.top_replicas_agreed
    assert set(res.batch.counts) == {0b00, 0b11}
    assert res.batch.total == 200
    assert len(res.betas) == 22


def test_pt_deterministic():
    cfg = PtIcmConfig(n_sweeps=400, seed=3, n_samples=64, check_icm=True)
    inst = load_model("a")
    assert pt_icm(inst, cfg).batch == pt_icm(inst, cfg).batch


def test_pt_config_checks():
    with pytest.raises(ValueError):
        PtIcmConfig(replicas_per_beta=20)
    with pytest.raises(ValueError):
        PtIcmConfig(n_sweeps=1)
    with pytest.raises(ValueError):
        PtIcmConfig(n_chains=0)


@pytest.mark.slow
def test_pt_model_c_counts_within_factor_three():
    inst = load_model("c")
    g = enumerate_ground_states(inst)
    res = pt_icm(inst, PtIcmConfig(seed=0, n_samples=4000))
    counts = np.array([res.batch.counts.get(s, 0) for s in g.states])
    assert res.batch.total == 4000
    assert counts.sum() == 4000
    assert counts.max() <= 3 * counts.min()


@pytest.mark.parametrize("seed", [0, 1])
def test_sa_and_pt_find_spinglass_ground(seed):
    edges = list(nx.random_regular_graph(3, 10, seed=seed).edges())
    inst = generate_spinglass(10, edges, seed).instance
    g = enumerate_ground_states(inst)
    assert simulated_annealing(inst, 50, 500, seed).energy_of_best == g.energy
    assert pt_icm(inst, PtIcmConfig(n_sweeps=1000, seed=seed, n_samples=64)).lowest_energy == g.energy


def test_exhaustive_two_spin_energies():
    J = FM2.coupling_matrix()
    for s in itertools.product([-1.0, 1.0], repeat=2):
        assert _energy(J, np.zeros(2), np.array(s)) == -s[0] * s[1]
