"""First-order degenerate perturbation theory in the ground subspace of H_p.

The perturbation matrix ``W_ij = <g_i|V|g_j>`` is diagonalised to obtain the
first-order energy corrections and the "good" basis. For the transverse driver
the lowest good-basis vector decides which ground states the late-time
instantaneous ground state supports; a zero component means hard suppression.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .engine import DiagonalPerturbation, hz_diagonal
from .ising import GroundSet, SpinInstance, all_energies, complement, spins

HARD_SUPPRESSION_TOL = 1e-8
SPLIT_TOL = 1e-9

TRANSVERSE = "transverse-driver"

SUPPORTED = "supported"
HARD_SUPPRESSED = "hard-suppressed"
AMBIGUOUS = "ambiguous"


@dataclass
class GoodBasisResult:
    epsilons: np.ndarray
    betas: np.ndarray
    k_tilde: int
    degenerate_split: bool

    @property
    def ground_vector(self) -> np.ndarray:
        return self.betas[:, self.k_tilde]


def hz_eigenvalue(c, state: int) -> float:
    """``mu(g) = sum_i (-1)**g(i) c_i`` for the basis state with index ``state``."""
    coeffs = c.c if isinstance(c, DiagonalPerturbation) else c
    coeffs = np.asarray(coeffs, dtype=np.float64)
    n = len(coeffs)
    if not 0 <= state < 1 << n:
        raise ValueError(f"state {state} out of range for n={n}")
    total = 0.0
    for i, ci in enumerate(coeffs):
        bit = (state >> (n - 1 - i)) & 1
        total += -ci if bit else ci
    return total


def perturbation_matrix(instance: SpinInstance, ground: GroundSet, perturber=TRANSVERSE) -> np.ndarray:
    states = np.asarray(ground.states, dtype=np.int64)
    if isinstance(perturber, str):
        if perturber != TRANSVERSE:
            raise ValueError(f"unknown perturber {perturber!r}")
        diff = states[:, None] ^ states[None, :]
        single_flip = (diff != 0) & ((diff & (diff - 1)) == 0)
        return -single_flip.astype(np.float64)
    c = perturber.c if isinstance(perturber, DiagonalPerturbation) else perturber
    if len(c) != instance.n:
        raise ValueError("perturbation length does not match the instance")
    return np.diag([hz_eigenvalue(c, int(g)) for g in states])


def good_basis(W) -> GoodBasisResult:
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError("W must be square")
    if not np.allclose(W, W.conj().T, atol=1e-12, rtol=0):
        raise ValueError("W must be Hermitian")
    eps, betas = np.linalg.eigh(W)
    split = len(eps) > 1 and eps[1] - eps[0] < SPLIT_TOL
    return GoodBasisResult(eps, betas, 0, bool(split))


def flip_pairs(ground: GroundSet) -> list[tuple[int, int]] | None:
    """Positions of complement pairs in the ground set, or None if it is not complement-closed."""
    pos = {g: k for k, g in enumerate(ground.states)}
    pairs = []
    for k, g in enumerate(ground.states):
        partner = pos.get(complement(g, ground.n))
        if partner is None:
            return None
        if k < partner:
            pairs.append((k, partner))
    return pairs


def even_sector_basis(ground: GroundSet) -> np.ndarray | None:
    """Columns ``(|g> + |not g>)/sqrt 2`` spanning the flip-even part of the ground space."""
    pairs = flip_pairs(ground)
    if pairs is None or not pairs:
        return None
    B = np.zeros((ground.m, len(pairs)))
    for col, (a, b) in enumerate(pairs):
        B[a, col] = B[b, col] = 2**-0.5
    return B


@dataclass
class SuppressionPrediction:
    states: tuple[int, ...]
    labels: list[str]
    weights: np.ndarray  # |beta_{k~}^i|^2
    basis: GoodBasisResult
    sector: str

    @property
    def hard_suppressed(self) -> list[int]:
        return [g for g, lab in zip(self.states, self.labels) if lab == HARD_SUPPRESSED]


def predict_suppression(instance: SpinInstance, ground: GroundSet, use_symmetry: bool = True) -> SuppressionPrediction:
    """Label each ground state supported / hard-suppressed / ambiguous under the transverse driver.

    For zero-bias instances the vanilla anneal starts in, and never leaves, the
    sector that is even under a global spin flip. In that case W is projected
    onto the even combinations of complement pairs before diagonalising, which
    removes the degeneracy that the flip symmetry forces on the full W.
    """
    W = perturbation_matrix(instance, ground, TRANSVERSE)
    B = even_sector_basis(ground) if use_symmetry and instance.zero_bias else None
    if B is not None:
        result = good_basis(B.T @ W @ B)
        vector = B @ result.ground_vector
        sector = "flip-even"
    else:
        result = good_basis(W)
        vector = result.ground_vector
        sector = "full"
    weights = np.abs(vector) ** 2
    if result.degenerate_split:
        labels = [AMBIGUOUS] * ground.m
    else:
        labels = [HARD_SUPPRESSED if abs(b) < HARD_SUPPRESSION_TOL else SUPPORTED for b in vector]
    return SuppressionPrediction(ground.states, labels, weights, result, sector)


@dataclass
class ArgminDistribution:
    states: tuple[int, ...]
    counts: np.ndarray
    n_draws: int
    redraws: int
    chi2: float
    p_value: float

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.n_draws


def argmin_distribution(ground: GroundSet, n_draws: int, seed: int, chunk: int = 65536) -> ArgminDistribution:
    """Tally which ground state minimises mu over fresh standard normal coefficient draws."""
    m = ground.m
    if len(set(ground.states)) != m:
        raise ValueError("ground states must be distinct")
    if m > 1 and n_draws < 10 * m:
        raise ValueError("need at least 10 draws per ground state")
    counts = np.zeros(m, dtype=np.int64)
    if m == 1:
        return ArgminDistribution(ground.states, np.array([n_draws]), n_draws, 0, 0.0, 1.0)
    S = spins(np.asarray(ground.states), ground.n).astype(np.float64)  # (m, n)
    rng = np.random.Generator(np.random.Philox(seed))
    done = redraws = 0
    while done < n_draws:
        size = min(chunk, n_draws - done)
        c = rng.standard_normal((size, ground.n))
        mu = c @ S.T
        order = np.sort(mu, axis=1)
        ok = order[:, 1] > order[:, 0]
        redraws += int(np.sum(~ok))
        winners = np.argmin(mu[ok], axis=1)
        counts += np.bincount(winners, minlength=m)
        done += int(np.sum(ok))
    chi2, p = stats.chisquare(counts)
    return ArgminDistribution(ground.states, counts, n_draws, redraws, float(chi2), float(p))


@dataclass
class FirstOrderReport:
    lambdas: np.ndarray
    residuals: np.ndarray  # max |E_exact - E_first_order| over the m lowest levels
    ratios: np.ndarray  # residual / lambda**2 (nan at lambda = 0)


def first_order_energy_check(
    instance: SpinInstance,
    ground: GroundSet,
    c,
    lambdas: Sequence[float],
    perturber: str = "diagonal",
) -> FirstOrderReport:
    """Compare exact low energies of ``H_p + lam V`` with ``E0 + lam * eps_k``.

    ``perturber="diagonal"`` uses ``V = H_z(c)``; the spectrum is then read off
    the diagonal. ``perturber="transverse"`` uses ``V = -sum sigma^x`` with dense
    diagonalisation and the eigenvalues of the transverse W as predictions.
    """
    from .engine import driver_matrix

    lambdas = np.asarray(lambdas, dtype=np.float64)
    diag_p = all_energies(instance)
    if perturber == "diagonal":
        coeffs = c.c if isinstance(c, DiagonalPerturbation) else c
        hz = hz_diagonal(coeffs, instance.n)
        first = np.sort([hz_eigenvalue(coeffs, g) for g in ground.states])
    elif perturber == "transverse":
        V = driver_matrix(instance.n).toarray()
        first = good_basis(perturbation_matrix(instance, ground, TRANSVERSE)).epsilons
    else:
        raise ValueError(f"unknown perturber {perturber!r}")
    residuals = []
    for lam in lambdas:
        if perturber == "diagonal":
            # the eigenvalues that continue the degenerate level: ground-set entries
            exact = np.sort((diag_p + lam * hz)[list(ground.states)])
        else:
            exact = np.linalg.eigvalsh(np.diag(diag_p) + lam * V)[: ground.m]
        residuals.append(float(np.max(np.abs(exact - (ground.energy + lam * first)))))
    residuals = np.asarray(residuals)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(lambdas != 0, residuals / lambdas**2, np.nan)
    return FirstOrderReport(lambdas, residuals, ratios)
