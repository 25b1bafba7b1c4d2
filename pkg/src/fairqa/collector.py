"""Collecting the full degenerate ground set from a (nominally uniform) sampler."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def trials_needed(m: int, r: int, eps: float, overhead: float = 1.0) -> int:
    """``ceil(overhead * m * ln(r m / eps))`` samples for one collection round."""
    if m < 1 or r < 1:
        raise ValueError("m and r must be at least 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if overhead <= 0:
        raise ValueError("overhead must be positive")
    if r * m / eps <= 1:
        raise ValueError("r m / eps must exceed 1")
    return math.ceil(overhead * m * math.log(r * m / eps))


@dataclass
class RoundStats:
    m: int
    budget: int
    samples: int
    distinct_at_end: int


@dataclass
class CollectionResult:
    states: set[int]
    rounds: list[RoundStats] = field(default_factory=list)
    total_samples: int = 0

    def to_dict(self, n: int | None = None) -> dict:
        out = {
            "states": sorted(self.states),
            "total_samples": self.total_samples,
            "rounds": [vars(r) for r in self.rounds],
        }
        if n is not None:
            out["bits"] = [format(s, f"0{n}b") for s in sorted(self.states)]
        return out


def get_ground_states(
    n: int,
    eps: float,
    sampler: Callable[[], int],
    overhead: float = 1.0,
    max_samples: int | None = None,
) -> CollectionResult:
    """Doubling guess for the degeneracy ``m``, sampling until a round's budget passes without a surprise.

    Follows the loop literally: the round budget is ``T(m, n, eps)`` with the
    system size as round parameter, and the loop runs while ``t <= T``, so a
    quiet round consumes ``T + 1`` samples.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    m = 2
    budget = trials_needed(m, n, eps, overhead)
    found: set[int] = set()
    result = CollectionResult(found)
    t = 0
    round_samples = 0
    while t <= budget:
        if max_samples is not None and result.total_samples >= max_samples:
            raise RuntimeError(f"sample cap {max_samples} reached with {len(found)} states")
        found.add(int(sampler()))
        t += 1
        round_samples += 1
        result.total_samples += 1
        if len(found) > m:
            result.rounds.append(RoundStats(m, budget, round_samples, len(found)))
            m *= 2
            budget = trials_needed(m, n, eps, overhead)
            t = 0
            round_samples = 0
    result.rounds.append(RoundStats(m, budget, round_samples, len(found)))
    return result


def uniform_oracle(states, seed) -> Callable[[], int]:
    """Sampler returning one of ``states`` uniformly at random per call."""
    states = list(states)
    rng = np.random.default_rng(seed)
    return lambda: states[rng.integers(len(states))]


def coupon_bound_monte_carlo(m: int, eps: float, n_runs: int, seed: int) -> float:
    """Fraction of simulated uniform coupon collections needing more than ``ceil(m ln(m/eps))`` draws.

    The collection time is drawn exactly as a sum of geometric waiting times.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    bound = math.ceil(m * math.log(m / eps))
    rng = np.random.default_rng(seed)
    p = (m - np.arange(m)) / m
    draws = rng.geometric(p, size=(n_runs, m)).sum(axis=1)
    return float(np.mean(draws > bound))
