"""Exit criteria. Each test records one PASS/FAIL line, listed again in the terminal summary."""

import math

import networkx as nx
import numpy as np
import pytest
from conftest import record

from fairqa.collector import coupon_bound_monte_carlo, get_ground_states, uniform_oracle
from fairqa.engine import (
    AnnealRunSpec,
    DiagonalPerturbation,
    build_hamiltonian,
    evolve_batch,
    hz_diagonal,
    measure_probabilities,
    run_reverse_trials,
)
from fairqa.integrator import StepStats
from fairqa.ising import GroundSet, SpinInstance, complement, enumerate_ground_states, generate_spinglass
from fairqa.models import MODEL_NAMES, TRIAL_COUNTS, load_model
from fairqa.perturbation import argmin_distribution, hz_eigenvalue, predict_suppression
from fairqa.samplers import PtIcmConfig, pt_icm, simulated_annealing
from fairqa.schedules import AnnealSchedule

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

T_LARGEST = 1000.0
MASTER_SEED = 0
STATS = StepStats()


def ratio(p):
    p = np.asarray(p)
    return float(p.max() / p.min()) if p.min() > 0 else math.inf


@pytest.fixture(scope="module")
def models():
    return {name: (load_model(name), enumerate_ground_states(load_model(name))) for name in MODEL_NAMES}


@pytest.fixture(scope="module")
def reverse_runs(models):
    runs = {}
    for name, (inst, g) in models.items():
        kinds = ["piecewise", "quadratic"] if name in "ab" else ["piecewise"]
        for kind in kinds:
            runs[name, kind] = run_reverse_trials(
                inst, AnnealSchedule(kind), T_LARGEST, TRIAL_COUNTS[name], MASTER_SEED, g, stats=STATS
            )
    return runs


def test_criterion_1_prediction_matches_vanilla_dynamics(models):
    ok, parts = True, []
    for name, (inst, g) in models.items():
        pred = predict_suppression(inst, g)
        p = measure_probabilities(evolve_batch(inst, AnnealSchedule("vanilla"), T_LARGEST, stats=STATS)[:, 0], g)
        flagged = np.array([s in pred.hard_suppressed for s in g.states])
        probs = p.probabilities
        if name == "d":
            good = not flagged.any() and probs.min() > 0.01
        else:
            good = flagged.any() and probs[flagged].max() < 0.01 and probs[~flagged].min() > 0.05
        ok &= bool(good)
        sup = f"{probs[flagged].max():.4f}" if flagged.any() else "-"
        parts.append(f"{name}: flags={int(flagged.sum())} max_flagged={sup} min_other={probs[~flagged].min():.4f}")
    assert record(1, ok, "; ".join(parts))


def test_criterion_2_piecewise_reverse_is_fair(reverse_runs):
    ok, parts = True, []
    for name in MODEL_NAMES:
        avg = reverse_runs[name, "piecewise"].average
        r, mass = ratio(avg.probabilities), avg.ground_mass
        ok &= r <= 2 and mass >= 0.9
        parts.append(f"{name}: ratio={r:.3f} mass={mass:.3f} trials={TRIAL_COUNTS[name]}")
    assert record(2, ok, "; ".join(parts))


def test_criterion_3_quadratic_is_less_fair(reverse_runs):
    ok, parts = True, []
    for name in "ab":
        rq = ratio(reverse_runs[name, "quadratic"].average.probabilities)
        rp = ratio(reverse_runs[name, "piecewise"].average.probabilities)
        ok &= rq > rp
        parts.append(f"{name}: quadratic={rq:.3f} piecewise={rp:.3f}")
    assert record(3, ok, "; ".join(parts))


def test_criterion_4_mu_formula_matches_hz_diagonal():
    rng = np.random.default_rng(4)
    worst = 0.0
    for n in range(1, 7):
        for _ in range(5):
            pert = DiagonalPerturbation.draw(n, int(rng.integers(2**32)))
            inst = SpinInstance(n, ())
            spec = AnnealRunSpec(inst, AnnealSchedule("piecewise"), 1.0, pert)
            explicit = build_hamiltonian(spec, 0.0).diagonal().real  # D = P = 0 at s = 0
            mu = np.array([hz_eigenvalue(pert.c, k) for k in range(1 << n)])
            worst = max(worst, float(np.max(np.abs(explicit - mu))), float(np.max(np.abs(hz_diagonal(pert.c, n) - mu))))
    assert record(4, worst <= 1e-12, f"max |mu - diag(H_z)| = {worst:.2e} over n = 1..6")


def test_criterion_5_argmin_uniform_on_symmetric_sets():
    fm2 = SpinInstance(2, ((0, 1, 1.0),))
    tri = ((0, 1, -1.0), (1, 2, -1.0), (0, 2, -1.0))
    triangle = SpinInstance(3, tri)
    two_triangles = SpinInstance(6, tri + tuple((i + 3, j + 3, J) for i, j, J in tri))
    ok, parts = True, []
    for inst in (fm2, triangle, two_triangles):
        g = enumerate_ground_states(inst)
        dist = argmin_distribution(g, 100_000, seed=5)
        ok &= dist.p_value > 1e-3
        parts.append(f"m={g.m}: p={dist.p_value:.3g}")
    assert [int(p.split("=")[1].split(":")[0]) for p in parts] == [2, 6, 36]
    assert record(5, ok, "; ".join(parts))


def test_criterion_6_coupon_bound_and_collector():
    runs, eps = 10_000, 0.1
    rate = coupon_bound_monte_carlo(10, eps, runs, seed=6)
    slack = 3 * math.sqrt(eps * (1 - eps) / runs)
    states = enumerate_ground_states(load_model("a")).states
    wins = sum(get_ground_states(5, 0.01, uniform_oracle(states, seed)).states == set(states) for seed in range(1000))
    ok = rate <= eps + slack and wins >= 986
    assert record(6, ok, f"coupon rate={rate:.4f} (limit {eps + slack:.4f}); collector {wins}/1000")


def test_criterion_7_classical_baselines(models):
    ok, parts = True, []
    instances = [(name, inst, g) for name, (inst, g) in models.items()]
    for seed in range(5):
        edges = list(nx.random_regular_graph(3, 16, seed=seed).edges())
        inst = generate_spinglass(16, edges, seed).instance
        instances.append((f"glass{seed}", inst, enumerate_ground_states(inst)))
    for name, inst, g in instances:
        sa = simulated_annealing(inst, 100, 1000, seed=7)
        pt = pt_icm(inst, PtIcmConfig(seed=7, n_samples=4000))
        energies_ok = sa.energy_of_best == g.energy and pt.lowest_energy == g.energy
        seen = sum(pt.batch.counts.get(s, 0) > 0 for s in g.states)
        full = seen == g.m if name in MODEL_NAMES else True
        ok &= energies_ok and full
        parts.append(f"{name}: E0={g.energy:g} sa={sa.energy_of_best:g} pt={pt.lowest_energy:g} pt_seen={seen}/{g.m}")
    assert record(7, ok, "; ".join(parts))


def test_criterion_8_numerical_hygiene(reverse_runs, models):
    # reverse_runs and criterion 1 feed STATS; every accepted step is monitored
    drift_ok = STATS.max_norm_drift < 1e-6 and STATS.accepted > 0

    inst, g = models["a"]
    changes = []
    for kind in ("vanilla", "piecewise"):
        sch = AnnealSchedule(kind)
        if sch.is_reverse:
            coarse = run_reverse_trials(inst, sch, T_LARGEST, 4, MASTER_SEED, g, tol=1e-9).average.probabilities
            fine = run_reverse_trials(inst, sch, T_LARGEST, 4, MASTER_SEED, g, tol=5e-10).average.probabilities
        else:
            coarse = measure_probabilities(evolve_batch(inst, sch, T_LARGEST, tol=1e-9)[:, 0], g).probabilities
            fine = measure_probabilities(evolve_batch(inst, sch, T_LARGEST, tol=5e-10)[:, 0], g).probabilities
        changes.append(float(np.max(np.abs(coarse - fine))))
    halving_ok = max(changes) < 1e-4

    rng = np.random.default_rng(8)
    herm_ok = sym_ok = True
    for _ in range(40):
        n = int(rng.integers(2, 6))
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.6] or [(0, 1)]
        inst_r = SpinInstance(n, tuple((i, j, float(rng.choice([-2, -1, 1, 2]))) for i, j in pairs))
        kind = ["vanilla", "quadratic", "piecewise"][int(rng.integers(3))]
        sch = AnnealSchedule(kind, float(rng.uniform(0.5, 2)))
        pert = DiagonalPerturbation.draw(n, int(rng.integers(2**32))) if sch.is_reverse else None
        H = build_hamiltonian(AnnealRunSpec(inst_r, sch, 1.0, pert), float(rng.random()))
        herm_ok &= (H != H.conj().T).nnz == 0
        p = np.abs(evolve_batch(inst_r, AnnealSchedule("vanilla"), float(rng.uniform(0.5, 10)))[:, 0]) ** 2
        idx = np.arange(p.size)
        sym_ok &= bool(np.max(np.abs(p - p[complement(idx, n)])) < 1e-6)
        for k in range(1 << n):
            c = rng.standard_normal(n)
            sym_ok &= abs(hz_eigenvalue(c, complement(k, n)) + hz_eigenvalue(c, k)) < 1e-12

    ok = drift_ok and halving_ok and herm_ok and sym_ok
    detail = (
        f"max norm drift={STATS.max_norm_drift:.1e} over {STATS.accepted} steps; "
        f"tolerance halving max change={max(changes):.1e}; hermitian={herm_ok}; complement symmetry={sym_ok}"
    )
    assert record(8, ok, detail)
