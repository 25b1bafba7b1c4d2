"""Experiment orchestration: anneal-time sweeps, sampler comparisons, fairness metrics, result files."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .engine import (
    DEFAULT_TOLERANCE,
    ProbabilityTable,
    evolve_batch,
    measure_probabilities,
    run_reverse_trials,
    trial_perturbations,
)
from .ising import GroundSet, SpinInstance, complement, enumerate_ground_states, index_to_bits
from .samplers import PtIcmConfig, SampleBatch, pt_icm, simulated_annealing
from .schedules import AnnealSchedule

DEFAULT_T_GRID = tuple(float(t) for t in np.geomspace(0.1, 1000.0, 24))
HARD_THRESHOLD_FACTOR = 0.01
COMPARE_DRIVER_AMPLITUDE = 2.0


@dataclass
class SweepResult:
    label: str
    schedule: str
    driver_amplitude: float
    n: int
    states: list[int]
    times: list[float]
    probabilities: list[list[float]]  # [T][state]
    variances: list[list[float]]
    n_trials: int
    master_seed: int | None
    tolerance: float
    antithetic: bool = True

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("anneal times must be strictly increasing")

    @property
    def total_mass(self) -> np.ndarray:
        return np.sum(self.probabilities, axis=1)

    def table(self, i: int = -1) -> ProbabilityTable:
        p = np.asarray(self.probabilities[i])
        return ProbabilityTable(tuple(self.states), p, float(1 - p.sum()))

    def to_dict(self) -> dict:
        return {"kind": "sweep", **asdict(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        d = {k: v for k, v in d.items() if k != "kind"}
        return cls(**d)


def complement_classes(ground: GroundSet) -> list[tuple[int, ...]]:
    """Ground-set positions grouped into {g, not g} pairs (singletons if a partner is missing)."""
    pos = {g: k for k, g in enumerate(ground.states)}
    seen, classes = set(), []
    for k, g in enumerate(ground.states):
        if k in seen:
            continue
        partner = pos.get(complement(g, ground.n))
        group = (k,) if partner is None or partner == k else (k, partner)
        seen.update(group)
        classes.append(group)
    return classes


def sweep_anneal_time(
    instance: SpinInstance,
    schedule: AnnealSchedule,
    times: Sequence[float] = DEFAULT_T_GRID,
    n_trials: int = 1,
    master_seed: int = 0,
    ground: GroundSet | None = None,
    tol: float = DEFAULT_TOLERANCE,
    antithetic: bool = True,
) -> SweepResult:
    """Ground-state probabilities versus total anneal time.

    Vanilla runs are deterministic and use one run per T; reverse runs average
    ``n_trials`` perturbed runs, with the same perturbations at every T.
    """
    ground = ground or enumerate_ground_states(instance)
    probs, variances = [], []
    for T in times:
        if schedule.is_reverse:
            res = run_reverse_trials(instance, schedule, T, n_trials, master_seed, ground, tol, antithetic=antithetic)
            probs.append(res.average.probabilities.tolist())
            variances.append(res.variance.tolist())
        else:
            psi = evolve_batch(instance, schedule, T, None, tol)
            probs.append(measure_probabilities(psi[:, 0], ground).probabilities.tolist())
            variances.append([0.0] * ground.m)
    return SweepResult(
        label=instance.label,
        schedule=schedule.kind,
        driver_amplitude=schedule.driver_amplitude,
        n=instance.n,
        states=list(ground.states),
        times=[float(t) for t in times],
        probabilities=probs,
        variances=variances,
        n_trials=n_trials if schedule.is_reverse else 1,
        master_seed=master_seed if schedule.is_reverse else None,
        tolerance=tol,
        antithetic=antithetic,
    )


@dataclass
class FairnessReport:
    states: list[int]
    probabilities: list[float]  # conditional on landing in the ground set
    ground_mass: float
    ratio: float  # max / min, inf when some state is never seen
    tv_distance: float
    kl_divergence: float
    chi2_p_value: float | None
    hard_threshold: float
    hard_flags: list[bool]

    def to_dict(self) -> dict:
        return asdict(self)


def fairness_report(data, ground: GroundSet, n_samples: int | None = None) -> FairnessReport:
    """Fairness metrics of a probability table or a sample batch over the ground set.

    Metrics are computed on the distribution conditioned on the ground set.
    The chi-square test needs counts: it is run for sample batches, and for
    probability tables only when ``n_samples`` is given.
    """
    m = ground.m
    if isinstance(data, SampleBatch):
        if data.total == 0:
            raise ValueError("empty sample batch")
        counts = np.array([data.counts.get(g, 0) for g in ground.states], dtype=np.float64)
        mass = counts.sum() / data.total
        n_samples = int(counts.sum())
    else:
        if isinstance(data, ProbabilityTable):
            if tuple(data.states) != tuple(ground.states):
                raise ValueError("probability table does not match the ground set")
            weights = np.asarray(data.probabilities, dtype=np.float64)
        elif isinstance(data, dict):
            weights = np.array([data.get(g, 0.0) for g in ground.states], dtype=np.float64)
        else:
            weights = np.asarray(data, dtype=np.float64)
        if weights.shape != (m,):
            raise ValueError(f"expected {m} ground-state weights")
        mass = float(weights.sum())
        counts = weights
    total = counts.sum()
    if total <= 0:
        raise ValueError("no weight on the ground set")
    q = counts / total
    uniform = 1.0 / m
    tv = 0.5 * float(np.abs(q - uniform).sum())
    nz = q > 0
    kl = float(np.sum(q[nz] * np.log(q[nz] * m)))
    with np.errstate(over="ignore"):
        ratio = float(q.max() / q.min()) if q.min() > 0 else math.inf
    p_value = None
    if n_samples and m > 1:
        p_value = float(stats.chisquare(q * n_samples).pvalue)
    threshold = HARD_THRESHOLD_FACTOR * uniform
    return FairnessReport(
        states=list(ground.states),
        probabilities=q.tolist(),
        ground_mass=float(mass),
        ratio=ratio,
        tv_distance=tv,
        kl_divergence=max(kl, 0.0),
        chi2_p_value=p_value,
        hard_threshold=threshold,
        hard_flags=(q < threshold).tolist(),
    )


SAMPLERS = ("quantum-reverse", "quantum-vanilla", "sa", "pt-icm", "uniform-oracle")


@dataclass
class CompareConfig:
    blocks: int = 8
    block_size: int = 500
    anneal_time: float = 100.0
    schedule: str = "piecewise"
    driver_amplitude: float = COMPARE_DRIVER_AMPLITUDE
    trials_per_block: int = 20
    sa_sweeps: int = 1000
    pt_sweeps: int = 4000
    tol: float = DEFAULT_TOLERANCE


@dataclass
class SamplerRow:
    sampler: str
    normed_counts: list[float]  # block mean of m * count_g / ground counts
    std_error: list[float]
    log_normed: list[float]  # floored where a state was never seen
    log_std_error: list[float]
    floored: list[bool]
    ground_fraction: float


@dataclass
class CompareResult:
    label: str
    states: list[int]
    seed: int
    config: CompareConfig
    rows: list[SamplerRow] = field(default_factory=list)
    normalization: str = "m * count / (ground-state samples in block), averaged over blocks"

    def row(self, name: str) -> SamplerRow:
        return next(r for r in self.rows if r.sampler == name)

    def to_dict(self) -> dict:
        return {"kind": "compare", **asdict(self)}


def _block_samples(name, instance, ground, cfg: CompareConfig, seq: np.random.SeedSequence) -> list[np.ndarray]:
    rng = np.random.default_rng(seq)
    blocks = []
    if name == "uniform-oracle":
        for _ in range(cfg.blocks):
            blocks.append(np.asarray(ground.states)[rng.integers(ground.m, size=cfg.block_size)])
    elif name == "quantum-vanilla":
        psi = evolve_batch(instance, AnnealSchedule("vanilla", cfg.driver_amplitude), cfg.anneal_time, None, cfg.tol)
        p = np.abs(psi[:, 0]) ** 2
        p = p / p.sum()
        for _ in range(cfg.blocks):
            blocks.append(rng.choice(p.size, size=cfg.block_size, p=p))
    elif name == "quantum-reverse":
        schedule = AnnealSchedule(cfg.schedule, cfg.driver_amplitude)
        per_trial = np.full(cfg.trials_per_block, cfg.block_size // cfg.trials_per_block)
        per_trial[: cfg.block_size % cfg.trials_per_block] += 1
        for b in range(cfg.blocks):
            block_seed = int(rng.integers(2**63))
            perts = trial_perturbations(instance.n, cfg.trials_per_block, block_seed)
            psi = evolve_batch(instance, schedule, cfg.anneal_time, perts, cfg.tol)
            draws = []
            for j in range(cfg.trials_per_block):
                p = np.abs(psi[:, j]) ** 2
                draws.append(rng.choice(p.size, size=per_trial[j], p=p / p.sum()))
            blocks.append(np.concatenate(draws))
    elif name == "sa":
        for _ in range(cfg.blocks):
            batch = simulated_annealing(instance, cfg.block_size, cfg.sa_sweeps, int(rng.integers(2**63)))
            blocks.append(np.repeat(list(batch.counts), list(batch.counts.values())))
    elif name == "pt-icm":
        for _ in range(cfg.blocks):
            config = PtIcmConfig(n_sweeps=cfg.pt_sweeps, seed=int(rng.integers(2**63)), n_samples=cfg.block_size)
            batch = pt_icm(instance, config).batch
            blocks.append(np.repeat(list(batch.counts), list(batch.counts.values())))
    else:
        raise ValueError(f"unknown sampler {name!r}; choose from {SAMPLERS}")
    return blocks


def compare_samplers(
    instance: SpinInstance,
    samplers: Sequence[str],
    seed: int,
    config: CompareConfig | None = None,
    ground: GroundSet | None = None,
) -> CompareResult:
    """Block-averaged, uniform-normalised ground-state counts for each sampler.

    A normed count of 1 (log 0) means the state is seen exactly as often as a
    uniform sampler over the ground set would see it.
    """
    cfg = config or CompareConfig()
    ground = ground or enumerate_ground_states(instance)
    pos = {g: k for k, g in enumerate(ground.states)}
    m = ground.m
    floor = m / (2.0 * cfg.blocks * cfg.block_size)
    result = CompareResult(instance.label, list(ground.states), seed, cfg)
    seqs = np.random.SeedSequence(seed).spawn(len(samplers))
    for name, seq in zip(samplers, seqs):
        normed, in_ground = [], 0
        for block in _block_samples(name, instance, ground, cfg, seq):
            counts = np.zeros(m)
            for s in block:
                k = pos.get(int(s))
                if k is not None:
                    counts[k] += 1
            in_ground += counts.sum()
            normed.append(m * counts / counts.sum() if counts.sum() else counts)
        normed = np.asarray(normed)
        mean = normed.mean(axis=0)
        se = normed.std(axis=0, ddof=1) / np.sqrt(cfg.blocks) if cfg.blocks > 1 else np.zeros(m)
        floored = mean <= 0
        log_mean = np.log(np.where(floored, floor, mean))
        log_se = np.where(floored, np.nan, se / np.where(floored, 1.0, mean))
        result.rows.append(
            SamplerRow(
                name, mean.tolist(), se.tolist(), log_mean.tolist(), log_se.tolist(),
                floored.tolist(), float(in_ground / (cfg.blocks * cfg.block_size)),
            )
        )
    return result


CSV_COLUMNS = ("schedule", "T", "state_bits", "probability", "variance", "n_trials")


def sweep_to_csv(results: Sequence[SweepResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for res in results:
        for T, probs, var in zip(res.times, res.probabilities, res.variances):
            for g, p, v in zip(res.states, probs, var):
                writer.writerow([res.schedule, repr(T), index_to_bits(g, res.n), repr(p), repr(v), res.n_trials])
            writer.writerow([res.schedule, repr(T), "total", repr(float(sum(probs))), "", res.n_trials])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    return obj


def emit_results(result, fmt: str, path) -> Path:
    """Write a result (or list of sweep results) as CSV or JSON with deterministic ordering."""
    path = Path(path)
    results = result if isinstance(result, (list, tuple)) else [result]
    if fmt == "csv":
        if not all(isinstance(r, SweepResult) for r in results):
            raise ValueError("CSV output is only defined for sweep results")
        text = sweep_to_csv(results)
    elif fmt == "json":
        docs = [r.to_dict() if hasattr(r, "to_dict") else r for r in results]
        payload = docs[0] if not isinstance(result, (list, tuple)) else docs
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def load_results(path):
    """Inverse of the JSON branch of :func:`emit_results` for sweep results."""
    payload = json.loads(Path(path).read_text())
    if isinstance(payload, list):
        return [SweepResult.from_dict(d) for d in payload]
    if payload.get("kind") == "sweep":
        return SweepResult.from_dict(payload)
    return payload
