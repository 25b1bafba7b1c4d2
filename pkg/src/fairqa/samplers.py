"""Classical baselines: simulated annealing and parallel tempering with isoenergetic cluster moves."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .ising import MAX_ENUMERATION_N, SpinInstance

BETA_MIN = 1 / 3.05
BETA_MAX = 1 / 0.05
BETA_RATIO = 1.22


@dataclass
class SampleBatch:
    counts: dict[int, int]
    total: int
    energy_of_best: float
    sampler_label: str
    seed: int | None = None

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise ValueError("counts do not add up to total")

    @classmethod
    def from_states(cls, states, energy_of_best: float, label: str, seed=None) -> "SampleBatch":
        counts = Counter(int(s) for s in states)
        return cls(dict(sorted(counts.items())), sum(counts.values()), float(energy_of_best), label, seed)

    def to_json(self) -> str:
        return json.dumps(
            {
                "sampler": self.sampler_label,
                "seed": self.seed,
                "total": self.total,
                "energy_of_best": self.energy_of_best,
                "counts": {str(k): v for k, v in sorted(self.counts.items())},
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SampleBatch":
        d = json.loads(text)
        counts = {int(k): int(v) for k, v in d["counts"].items()}
        return cls(counts, d["total"], d["energy_of_best"], d["sampler"], d["seed"])


@dataclass
class PtIcmConfig:
    n_sweeps: int = 10_000
    seed: int = 0
    beta_min: float = BETA_MIN
    beta_max: float = BETA_MAX
    beta_ratio: float = BETA_RATIO
    replicas_per_beta: int = 2
    n_samples: int = 4000
    n_chains: int = 8
    check_icm: bool = False

    def __post_init__(self):
        if self.replicas_per_beta != 2:
            raise ValueError("isoenergetic cluster moves need exactly two replicas per temperature")
        if self.beta_ratio <= 1:
            raise ValueError("beta ratio must exceed 1")
        if self.n_sweeps < 2:
            raise ValueError("need at least two sweeps")
        if self.n_chains < 1 or self.n_samples < 1:
            raise ValueError("need at least one chain and one sample")


def beta_grid(beta_min: float = BETA_MIN, beta_max: float = BETA_MAX, ratio: float = BETA_RATIO) -> np.ndarray:
    """Geometric inverse temperatures from ``beta_min`` by ``ratio``; the last one is clamped to ``beta_max``."""
    if ratio <= 1:
        raise ValueError("ratio must exceed 1")
    betas = [beta_min]
    while betas[-1] * ratio < beta_max:
        betas.append(betas[-1] * ratio)
    betas.append(beta_max)
    return np.array(betas)


def _check_size(instance: SpinInstance):
    if instance.n > MAX_ENUMERATION_N:
        raise ValueError(f"classical samplers are capped at n={MAX_ENUMERATION_N}")


def spins_to_index(s: np.ndarray) -> np.ndarray:
    n = s.shape[-1]
    bits = (1 - s.astype(np.int64)) // 2
    return bits @ (1 << np.arange(n - 1, -1, -1, dtype=np.int64))


def _energy(J: np.ndarray, h: np.ndarray, s: np.ndarray) -> np.ndarray:
    s = s.astype(np.float64)
    return -0.5 * ((s @ J) * s).sum(axis=-1) - s @ h


def metropolis_accept(delta_e, beta, u) -> np.ndarray:
    """Accept with probability ``min(1, exp(-beta dE))``."""
    with np.errstate(over="ignore"):
        return (delta_e <= 0) | (u < np.exp(-beta * delta_e))


def swap_accept(beta_a, beta_b, e_a, e_b, u):
    """Replica exchange acceptance ``min(1, exp((beta_a - beta_b)(e_a - e_b)))``; elementwise."""
    x = np.asarray((beta_a - beta_b) * (e_a - e_b))
    return (x >= 0) | (u < np.exp(np.minimum(x, 0.0)))


def _metropolis_sweep(s, J, h, betas, rng_u):
    """One pass over all sites, vectorised over the leading axes of ``s``."""
    for i in range(s.shape[-1]):
        field = s @ J[i] + h[i]
        delta = 2.0 * s[..., i] * field
        flip = metropolis_accept(delta, betas, rng_u[..., i])
        s[..., i] = np.where(flip, -s[..., i], s[..., i])


def simulated_annealing(
    instance: SpinInstance,
    n_reads: int,
    sweeps_per_read: int,
    seed: int,
    beta_min: float = BETA_MIN,
    beta_max: float = BETA_MAX,
) -> SampleBatch:
    """Independent restarts annealed over a geometric beta ramp, one Metropolis sweep per beta."""
    _check_size(instance)
    rng = np.random.default_rng(seed)
    J = instance.coupling_matrix()
    h = np.asarray(instance.biases)
    s = rng.choice(np.array([-1.0, 1.0]), size=(n_reads, instance.n))
    for beta in np.geomspace(beta_min, beta_max, sweeps_per_read):
        _metropolis_sweep(s, J, h, beta, rng.random((n_reads, instance.n)))
    e = _energy(J, h, s)
    return SampleBatch.from_states(spins_to_index(s), e.min(), "sa", seed)


def fixed_beta_chain(instance: SpinInstance, beta: float, n_sweeps: int, seed: int) -> np.ndarray:
    """Single-flip Metropolis chain at constant beta; returns the spins after every sweep."""
    rng = np.random.default_rng(seed)
    J = instance.coupling_matrix()
    h = np.asarray(instance.biases)
    s = rng.choice(np.array([-1.0, 1.0]), size=(1, instance.n))
    out = np.empty((n_sweeps, instance.n))
    for k in range(n_sweeps):
        _metropolis_sweep(s, J, h, beta, rng.random((1, instance.n)))
        out[k] = s[0]
    return out


def _neighbours(J: np.ndarray) -> list[np.ndarray]:
    return [np.flatnonzero(row) for row in J]


def icm_cluster(a: np.ndarray, b: np.ndarray, neighbours, start: int) -> list[int]:
    """Connected cluster of disagreeing sites between replicas ``a`` and ``b`` containing ``start``."""
    disagree = a != b
    cluster, stack, seen = [], [start], {start}
    while stack:
        i = stack.pop()
        cluster.append(i)
        for j in neighbours[i]:
            if disagree[j] and j not in seen:
                seen.add(j)
                stack.append(j)
    return sorted(cluster)


def icm_move(a: np.ndarray, b: np.ndarray, neighbours, rng) -> list[int]:
    """Houdayer move in place: flip one random disagreement cluster in both replicas.

    Returns the flipped sites (empty when the replicas agree everywhere).
    """
    sites = np.flatnonzero(a != b)
    if sites.size == 0:
        return []
    cluster = icm_cluster(a, b, neighbours, int(sites[rng.integers(sites.size)]))
    a[cluster] *= -1
    b[cluster] *= -1
    return cluster


def _disagreement_labels(a: np.ndarray, b: np.ndarray, adjacency: np.ndarray) -> np.ndarray:
    """Cluster label per site for a batch of replica pairs, shape ``(C, n)``.

    Sites where the replicas agree get label ``n``; every connected component
    of disagreeing sites is labelled by its smallest site index.
    """
    n = a.shape[-1]
    disagree = a != b
    labels = np.where(disagree, np.arange(n), n)
    mask = adjacency[None] & disagree[:, None, :]
    while True:
        nbr = np.where(mask, labels[:, None, :], n).min(axis=2)
        new = np.where(disagree, np.minimum(labels, nbr), n)
        if np.array_equal(new, labels):
            return labels
        labels = new


@dataclass
class PtIcmResult:
    batch: SampleBatch
    lowest_energy: float
    top_replicas_agreed: bool
    swap_rate: float
    betas: np.ndarray = field(repr=False)


def pt_icm(instance: SpinInstance, config: PtIcmConfig) -> PtIcmResult:
    """Parallel tempering with isoenergetic cluster moves, two replicas per beta.

    ``config.n_chains`` independent chains advance in lockstep. Each sweep of a
    chain: a Metropolis pass on one randomly chosen replica at every beta, one
    Houdayer cluster move at a random beta, and one replica-exchange attempt
    between a random adjacent beta pair. In the second half of the run the two
    highest-beta replicas of every chain are recorded at evenly spaced sweeps
    until ``n_samples`` states are collected.
    """
    _check_size(instance)
    betas = beta_grid(config.beta_min, config.beta_max, config.beta_ratio)
    K, n, C = len(betas), instance.n, config.n_chains
    J = instance.coupling_matrix()
    h = np.asarray(instance.biases)
    adjacency = J != 0

    root = np.random.SeedSequence(config.seed)
    local_seq, global_seq = root.spawn(2)
    # one stream per (beta, replica) for single flips, one for the global moves
    local = [np.random.default_rng(q) for q in local_seq.spawn(2 * K)]
    grng = np.random.default_rng(global_seq)

    s = np.stack([r.choice(np.array([-1.0, 1.0]), size=(C, n)) for r in local], axis=1).reshape(C, K, 2, n)
    e = _energy(J, h, s)
    chains, levels = np.arange(C)[:, None], np.arange(K)[None, :]
    half = config.n_sweeps // 2
    n_records = -(-config.n_samples // (2 * C))
    record_at = Counter(np.linspace(half, config.n_sweeps - 1, n_records).astype(int).tolist())
    samples: list[int] = []
    lowest = None
    agreed = False
    swaps = attempts = 0

    for sweep in range(config.n_sweeps):
        # (a) single flips on one replica per beta, drawn from that replica's stream
        which = grng.integers(2, size=(C, K))
        u = np.stack([r.random((C, n)) for r in local], axis=1).reshape(C, K, 2, n)
        replicas = s[chains, levels, which]
        _metropolis_sweep(replicas, J, h, betas, u[chains, levels, which])
        s[chains, levels, which] = replicas
        e = _energy(J, h, s)

        # (b) isoenergetic cluster move at one random beta per chain
        k = grng.integers(K, size=C)
        pick = grng.random((C, n))
        a, b = s[np.arange(C), k, 0], s[np.arange(C), k, 1]
        labels = _disagreement_labels(a, b, adjacency)
        active = labels < n
        if active.any():
            start = np.argmax(np.where(active, pick, -1.0), axis=1)
            cluster = active & (labels == labels[np.arange(C), start][:, None])
            a[cluster] *= -1
            b[cluster] *= -1
            if config.check_icm:
                before = e[np.arange(C), k].sum(axis=1)
                after = _energy(J, h, np.stack([a, b], axis=1)).sum(axis=1)
                if np.max(np.abs(after - before)) > 1e-9:
                    raise AssertionError("cluster move changed a pair energy")
            s[np.arange(C), k, 0], s[np.arange(C), k, 1] = a, b
            e = _energy(J, h, s)

        # (c) replica exchange between a random adjacent pair, random replica slot
        k = grng.integers(K - 1, size=C)
        r = grng.integers(2, size=C)
        u_swap = grng.random(C)
        idx = np.arange(C)
        ok = swap_accept(betas[k], betas[k + 1], e[idx, k, r], e[idx, k + 1, r], u_swap)
        attempts += C
        swaps += int(ok.sum())
        ci, ki, ri = idx[ok], k[ok], r[ok]
        s[ci, ki, ri], s[ci, ki + 1, ri] = s[ci, ki + 1, ri].copy(), s[ci, ki, ri].copy()
        e[ci, ki, ri], e[ci, ki + 1, ri] = e[ci, ki + 1, ri].copy(), e[ci, ki, ri].copy()

        if sweep >= half:
            top = e[:, -1]
            same = top[:, 0] == top[:, 1]
            if same.any():
                agreed = True
                low = float(top[same, 0].min())
                lowest = low if lowest is None else min(lowest, low)
            if lowest is not None and e.min() < lowest:
                lowest = float(e.min())
            if sweep in record_at:
                samples.extend(spins_to_index(s[:, -1]).ravel().tolist() * record_at[sweep])

    samples = samples[: config.n_samples]
    lowest = float(lowest) if lowest is not None else float(e.min())
    batch = SampleBatch.from_states(samples, lowest, "pt-icm", config.seed)
    return PtIcmResult(batch, lowest, agreed, swaps / max(attempts, 1), betas)
