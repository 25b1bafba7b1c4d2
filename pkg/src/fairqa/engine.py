"""Time-dependent annealing Hamiltonians on the full 2**n space and their evolution.

``H(s) = A D(s) H_d + P(s) H_p + Z(s) H_z`` with the hypercube driver
``H_d = -sum_i sigma^x_i``, the Ising problem diagonal ``H_p`` and the random
longitudinal field ``H_z = sum_i c_i sigma^z_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .integrator import IntegrationError, StepStats, evolve_schrodinger
from .ising import GroundSet, SpinInstance, all_energies, spins
from .schedules import AnnealSchedule

MAX_QUANTUM_N = 12
DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class DiagonalPerturbation:
    c: tuple[float, ...]
    seed: int | None = None

    @classmethod
    def draw(cls, n: int, seed) -> "DiagonalPerturbation":
        """Standard normal coefficients; redraws the (measure zero) event of an exact zero."""
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(n)
        while np.any(c == 0.0):
            c = rng.standard_normal(n)
        return cls(tuple(float(x) for x in c), seed if isinstance(seed, int) else None)

    def negated(self) -> "DiagonalPerturbation":
        return DiagonalPerturbation(tuple(-x for x in self.c), self.seed)

    @property
    def n(self) -> int:
        return len(self.c)


def hz_diagonal(c: Sequence[float], n: int | None = None) -> np.ndarray:
    """Diagonal of ``sum_i c_i sigma^z_i``: entry k is ``sum_i (-1)**bit_i(k) c_i``."""
    c = np.asarray(c, dtype=np.float64)
    n = len(c) if n is None else n
    if len(c) != n:
        raise ValueError(f"perturbation has {len(c)} coefficients, need {n}")
    return spins(np.arange(1 << n), n) @ c


def hz_ground_state(perturbation: DiagonalPerturbation) -> int:
    c = np.asarray(perturbation.c)
    if np.any(c == 0.0):
        raise ValueError("perturbation has an exactly zero coefficient; redraw it")
    index = 0
    for ci in c:
        index = (index << 1) | int(ci > 0)
    return index


@dataclass
class AnnealRunSpec:
    instance: SpinInstance
    schedule: AnnealSchedule
    total_time: float
    perturbation: DiagonalPerturbation | None = None
    integrator_tolerance: float = DEFAULT_TOLERANCE
    max_step: float = np.inf

    def __post_init__(self):
        if self.instance.n > MAX_QUANTUM_N:
            raise MemoryError(f"quantum simulation capped at n={MAX_QUANTUM_N}, got {self.instance.n}")
        if not self.total_time > 0:
            raise ValueError("total time must be positive")
        if self.schedule.is_reverse != (self.perturbation is not None):
            raise ValueError("a diagonal perturbation is required exactly for reverse schedules")
        if self.perturbation is not None and self.perturbation.n != self.instance.n:
            raise ValueError("perturbation length does not match the instance")


@dataclass
class QuantumState:
    amplitudes: np.ndarray
    stats: StepStats = field(default_factory=StepStats)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def driver_matrix(n: int) -> sp.csr_matrix:
    dim = 1 << n
    rows = np.repeat(np.arange(dim), n)
    flips = np.array([1 << (n - 1 - i) for i in range(n)])
    cols = (np.arange(dim)[:, None] ^ flips[None, :]).ravel()
    return sp.csr_matrix((-np.ones(dim * n), (rows, cols)), shape=(dim, dim))


def build_hamiltonian(spec: AnnealRunSpec, s: float) -> sp.csr_matrix:
    n = spec.instance.n
    d, p, z = spec.schedule.evaluate(s)
    diag = p * all_energies(spec.instance)
    if spec.perturbation is not None:
        diag = diag + z * hz_diagonal(spec.perturbation.c, n)
    return (d * driver_matrix(n) + sp.diags(diag)).tocsr()


def apply_driver(psi: np.ndarray, n: int) -> np.ndarray:
    """``(-sum_i sigma^x_i) psi`` for a ``(2**n, batch)`` array."""
    v = psi.reshape((2,) * n + psi.shape[1:])
    out = np.zeros_like(v)
    for axis in range(n):
        out += v[(slice(None),) * axis + (slice(None, None, -1),)]
    return -out.reshape(psi.shape)


def initial_state(spec: AnnealRunSpec) -> np.ndarray:
    dim = 1 << spec.instance.n
    if spec.perturbation is None:
        return np.full(dim, dim**-0.5, dtype=np.complex128)
    psi = np.zeros(dim, dtype=np.complex128)
    psi[hz_ground_state(spec.perturbation)] = 1.0
    return psi


def evolve_batch(
    instance: SpinInstance,
    schedule: AnnealSchedule,
    total_time: float,
    perturbations: Sequence[DiagonalPerturbation] | None = None,
    tol: float = DEFAULT_TOLERANCE,
    max_step: float = np.inf,
    stats: StepStats | None = None,
) -> np.ndarray:
    """Evolve one run per perturbation together; returns ``(2**n, batch)`` final amplitudes.

    Vanilla schedules take ``perturbations=None`` and return a single column.
    """
    specs = (
        [AnnealRunSpec(instance, schedule, total_time, None, tol, max_step)]
        if perturbations is None
        else [AnnealRunSpec(instance, schedule, total_time, c, tol, max_step) for c in perturbations]
    )
    n = instance.n
    energies = all_energies(instance)[:, None]
    if perturbations is None:
        hz = np.zeros((1 << n, 1))
    else:
        hz = np.stack([hz_diagonal(c.c, n) for c in perturbations], axis=1)
    psi = np.stack([initial_state(s) for s in specs], axis=1)

    def apply_h(t, y):
        d, p, z = schedule.evaluate(min(max(t / total_time, 0.0), 1.0))
        out = (p * energies + z * hz) * y
        if d != 0.0:
            out += d * apply_driver(y, n)
        return out

    stats = stats if stats is not None else StepStats()
    knots = [0.0, *schedule.breakpoints, 1.0]
    for a, b in zip(knots[:-1], knots[1:]):
        psi = evolve_schrodinger(apply_h, psi, a * total_time, b * total_time, tol, max_step, stats=stats)
    return psi


def evolve(spec: AnnealRunSpec) -> QuantumState:
    stats = StepStats()
    perturbations = None if spec.perturbation is None else [spec.perturbation]
    psi = evolve_batch(
        spec.instance, spec.schedule, spec.total_time, perturbations,
        spec.integrator_tolerance, spec.max_step, stats,
    )
    return QuantumState(psi[:, 0], stats)


@dataclass
class ProbabilityTable:
    """Probabilities of the ground states, in ground-set order, plus the rest mass."""

    states: tuple[int, ...]
    probabilities: np.ndarray
    rest: float

    @property
    def ground_mass(self) -> float:
        return float(np.sum(self.probabilities))

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.states, map(float, self.probabilities)))


def measure_probabilities(state, ground: GroundSet) -> ProbabilityTable:
    amps = state.amplitudes if isinstance(state, QuantumState) else np.asarray(state)
    if amps.shape[0] != 1 << ground.n:
        raise ValueError("state dimension does not match the ground set's system size")
    probs = np.abs(amps[list(ground.states)]) ** 2
    return ProbabilityTable(ground.states, probs, float(1.0 - probs.sum()))


def trial_seed(master_seed: int, k: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, k])


def trial_perturbations(n: int, n_trials: int, master_seed: int, antithetic: bool = True) -> list[DiagonalPerturbation]:
    """Perturbation of trial k, seeded from ``(master_seed, k)``.

    With ``antithetic`` the odd trial ``2j+1`` reuses the draw of trial ``2j``
    with the sign flipped. Global spin flip maps the run for ``c`` onto the run
    for ``-c``, so paired trials give complement states equal weight exactly.
    """
    out = []
    for k in range(n_trials):
        if antithetic and k % 2 == 1:
            out.append(out[-1].negated())
        else:
            c = DiagonalPerturbation.draw(n, trial_seed(master_seed, k))
            out.append(DiagonalPerturbation(c.c, k))
    return out


@dataclass
class TrialResults:
    average: ProbabilityTable
    trials: list[ProbabilityTable]
    perturbations: list[DiagonalPerturbation]

    @property
    def variance(self) -> np.ndarray:
        return np.var([t.probabilities for t in self.trials], axis=0)


def run_reverse_trials(
    instance: SpinInstance,
    schedule: AnnealSchedule,
    total_time: float,
    n_trials: int,
    master_seed: int,
    ground: GroundSet,
    tol: float = DEFAULT_TOLERANCE,
    max_step: float = np.inf,
    antithetic: bool = True,
    batch_size: int = 16,
    stats: StepStats | None = None,
) -> TrialResults:
    """Average ground-state probabilities over independently perturbed reverse anneals.

    Trials run in fixed batches of ``batch_size`` so a trial's result depends
    only on ``(master_seed, k, batch_size)``.
    """
    if not schedule.is_reverse:
        raise ValueError("reverse trials need a reverse schedule")
    if n_trials < 1:
        raise ValueError("need at least one trial")
    perturbations = trial_perturbations(instance.n, n_trials, master_seed, antithetic)
    tables = []
    for start in range(0, n_trials, batch_size):
        chunk = perturbations[start:start + batch_size]
        try:
            psi = evolve_batch(instance, schedule, total_time, chunk, tol, max_step, stats)
        except IntegrationError as exc:
            raise IntegrationError(f"trials {start}..{start + len(chunk) - 1}: {exc}") from exc
        tables.extend(measure_probabilities(psi[:, j], ground) for j in range(len(chunk)))
    probs = np.zeros(ground.m)
    for table in tables:
        probs = probs + table.probabilities
    probs = probs / n_trials
    average = ProbabilityTable(ground.states, probs, float(1.0 - probs.sum()))
    return TrialResults(average, tables, perturbations)
