"""Ising problem instances, exact ground sets, free spins and the instance file format.

Basis convention used everywhere in the package: a basis state is an integer
``index`` in ``[0, 2**n)`` whose big-endian bit string gives the bits of spins
``0 .. n-1`` (spin 0 is the most significant bit). Bit 0 is spin +1, bit 1 is
spin -1, i.e. ``s_i = (-1)**bit_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

MAX_ENUMERATION_N = 30
_CHUNK_BITS = 20
COUPLING_VALUES = (-4.0, -2.0, -1.0, 1.0, 2.0, 4.0)


class InstanceParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class SpinInstance:
    """Ising cost function ``-sum J_ij s_i s_j - sum h_i s_i``."""

    n: int
    couplings: tuple[tuple[int, int, float], ...]
    biases: tuple[float, ...] = ()
    label: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        couplings = []
        seen = set()
        for i, j, value in self.couplings:
            i, j, value = int(i), int(j), float(value)
            if i == j:
                raise ValueError(f"self-coupling on site {i}")
            if i > j:
                i, j = j, i
            if j >= self.n or i < 0:
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            if not math.isfinite(value) or value == 0.0:
                raise ValueError(f"coupling on ({i}, {j}) must be finite and nonzero")
            seen.add((i, j))
            couplings.append((i, j, value))
        object.__setattr__(self, "couplings", tuple(sorted(couplings)))
        biases = tuple(float(h) for h in self.biases) or (0.0,) * self.n
        if len(biases) != self.n:
            raise ValueError(f"expected {self.n} biases, got {len(biases)}")
        if not all(math.isfinite(h) for h in biases):
            raise ValueError("biases must be finite")
        object.__setattr__(self, "biases", biases)

    @property
    def zero_bias(self) -> bool:
        return not any(self.biases)

    def coupling_matrix(self) -> np.ndarray:
        """Symmetric ``n x n`` matrix with ``J[i, j] = J[j, i] = J_ij``."""
        J = np.zeros((self.n, self.n))
        for i, j, value in self.couplings:
            J[i, j] = J[j, i] = value
        return J


@dataclass(frozen=True)
class GroundSet:
    energy: float
    states: tuple[int, ...]
    n: int

    @property
    def m(self) -> int:
        return len(self.states)

    def bits(self) -> list[str]:
        return [index_to_bits(k, self.n) for k in self.states]


def index_to_bits(index: int, n: int) -> str:
    if not 0 <= index < 1 << n:
        raise ValueError(f"index {index} out of range for n={n}")
    return format(index, f"0{n}b")


def bits_to_index(bits: str) -> int:
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"not a bit string: {bits!r}")
    return int(bits, 2)


def complement(index: int, n: int) -> int:
    return index ^ ((1 << n) - 1)


def spins(indices, n: int) -> np.ndarray:
    """Spin values (+1/-1) of the given basis indices, shape ``(..., n)``."""
    indices = np.asarray(indices, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (indices[..., None] >> shifts) & 1
    return (1 - 2 * bits).astype(np.int8)


def _as_index(state, n: int) -> int:
    if isinstance(state, str):
        if len(state) != n:
            raise ValueError(f"state {state!r} has {len(state)} bits, instance has {n}")
        return bits_to_index(state)
    index = int(state)
    if not 0 <= index < 1 << n:
        raise ValueError(f"state index {index} out of range for n={n}")
    return index


def energies(instance: SpinInstance, indices) -> np.ndarray:
    s = spins(indices, instance.n).astype(np.float64)
    out = -s @ np.asarray(instance.biases)
    for i, j, value in instance.couplings:
        out -= value * s[..., i] * s[..., j]
    return out


def energy(instance: SpinInstance, state) -> float:
    """Energy of one basis state, given as a bit string or an index."""
    return float(energies(instance, _as_index(state, instance.n)))


def all_energies(instance: SpinInstance) -> np.ndarray:
    """Energy of every basis state, indexed by basis index (the diagonal of H_p)."""
    if instance.n > 24:
        raise MemoryError(f"refusing to materialise 2**{instance.n} energies")
    return energies(instance, np.arange(1 << instance.n))


def enumerate_ground_states(instance: SpinInstance, tol: float = 1e-9) -> GroundSet:
    """Exhaustive scan over all ``2**n`` states, chunked to bound memory."""
    n = instance.n
    if n > MAX_ENUMERATION_N:
        raise MemoryError(f"brute-force enumeration capped at n={MAX_ENUMERATION_N}, got {n}")
    chunk = 1 << min(n, _CHUNK_BITS)
    best = math.inf
    states: list[int] = []
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, start + chunk, dtype=np.int64)
        e = energies(instance, idx)
        low = e.min()
        if low < best - tol:
            best = float(low)
            states = []
        if low <= best + tol:
            states.extend(int(k) for k in idx[e <= best + tol])
    return GroundSet(energy=best, states=tuple(states), n=n)


def local_fields(instance: SpinInstance, state: int) -> np.ndarray:
    s = spins(state, instance.n).astype(np.float64)
    return instance.coupling_matrix() @ s + np.asarray(instance.biases)


def find_free_spins(instance: SpinInstance, ground: GroundSet, tol: float = 1e-9) -> list[tuple[int, int]]:
    """(state, site) pairs where flipping ``site`` in ground state ``state`` costs nothing.

    Flipping spin i changes the energy by ``2 s_i f_i`` with ``f_i`` the local
    field, so a spin is free exactly when its local field vanishes.
    """
    J = instance.coupling_matrix()
    h = np.asarray(instance.biases)
    free = []
    for state in ground.states:
        s = spins(state, instance.n).astype(np.float64)
        fields = J @ s + h
        free.extend((state, int(i)) for i in np.flatnonzero(np.abs(fields) <= tol))
    return free


class SpinglassDraw(NamedTuple):
    instance: SpinInstance
    repaired: bool
    attempts: int
    free_spins: list[tuple[int, int]]


def generate_spinglass(
    n: int,
    edges: Iterable[tuple[int, int]],
    seed: int,
    values: Sequence[float] = COUPLING_VALUES,
    repair_max_n: int = 24,
    label: str | None = None,
) -> SpinglassDraw:
    """Spin glass with couplings uniform over ``values`` and free spins repaired.

    While free spins remain (checked by brute force, only for ``n <= repair_max_n``)
    one coupling incident to a randomly chosen free spin is re-drawn from the
    other allowed values. Gives up after ``100 * n`` attempts and reports the
    draw as unrepaired.
    """
    rng = np.random.default_rng(seed)
    edges = sorted({(min(i, j), max(i, j)) for i, j in edges})
    if not edges:
        raise ValueError("need at least one edge")
    values = [float(v) for v in values]
    J = {e: values[rng.integers(len(values))] for e in edges}
    label = label or f"spinglass-n{n}-seed{seed}"

    def build():
        return SpinInstance(n, tuple((i, j, v) for (i, j), v in J.items()), label=label)

    instance = build()
    if n > repair_max_n:
        return SpinglassDraw(instance, False, 0, [])
    free: list[tuple[int, int]] = []
    for attempt in range(100 * n + 1):
        free = find_free_spins(instance, enumerate_ground_states(instance))
        if not free:
            return SpinglassDraw(instance, True, attempt, [])
        if attempt == 100 * n:
            break
        _, site = free[rng.integers(len(free))]
        incident = [e for e in edges if site in e]
        if not incident:
            # isolated site: no coupling can fix it
            break
        edge = incident[rng.integers(len(incident))]
        choices = [v for v in values if v != J[edge]]
        J[edge] = choices[rng.integers(len(choices))]
        instance = build()
    return SpinglassDraw(instance, False, 100 * n, free)


def parse_instance(text: str, label: str = "") -> SpinInstance:
    n = None
    biases: dict[int, float] = {}
    couplings: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        try:
            if key == "n":
                if n is not None:
                    raise InstanceParseError(lineno, "repeated 'n' line")
                if len(args) != 1:
                    raise InstanceParseError(lineno, "expected 'n <int>'")
                n = int(args[0])
                if n < 1:
                    raise InstanceParseError(lineno, "n must be positive")
            elif key == "h":
                if n is None:
                    raise InstanceParseError(lineno, "'h' before 'n'")
                if len(args) != 2:
                    raise InstanceParseError(lineno, "expected 'h <i> <float>'")
                i, value = int(args[0]), float(args[1])
                if not 0 <= i < n:
                    raise InstanceParseError(lineno, f"site {i} out of range")
                if i in biases:
                    raise InstanceParseError(lineno, f"duplicate bias on site {i}")
                if not math.isfinite(value):
                    raise InstanceParseError(lineno, "bias must be finite")
                biases[i] = value
            elif key == "J":
                if n is None:
                    raise InstanceParseError(lineno, "'J' before 'n'")
                if len(args) != 3:
                    raise InstanceParseError(lineno, "expected 'J <i> <j> <float>'")
                i, j, value = int(args[0]), int(args[1]), float(args[2])
                if i == j:
                    raise InstanceParseError(lineno, "self-coupling")
                i, j = min(i, j), max(i, j)
                if i < 0 or j >= n:
                    raise InstanceParseError(lineno, f"edge ({i}, {j}) out of range")
                if (i, j) in couplings:
                    raise InstanceParseError(lineno, f"duplicate edge ({i}, {j})")
                if not math.isfinite(value) or value == 0.0:
                    raise InstanceParseError(lineno, "coupling must be finite and nonzero")
                couplings[(i, j)] = value
            else:
                raise InstanceParseError(lineno, f"unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, InstanceParseError):
                raise
            raise InstanceParseError(lineno, str(exc)) from None
    if n is None:
        raise InstanceParseError(0, "missing 'n' line")
    return SpinInstance(
        n,
        tuple((i, j, v) for (i, j), v in couplings.items()),
        tuple(biases.get(i, 0.0) for i in range(n)),
        label=label,
    )


def serialize_instance(instance: SpinInstance) -> str:
    lines = [f"n {instance.n}"]
    lines += [f"h {i} {h!r}" for i, h in enumerate(instance.biases) if h != 0.0]
    lines += [f"J {i} {j} {v!r}" for i, j, v in instance.couplings]
    return "\n".join(lines) + "\n"


def load_instance(path) -> SpinInstance:
    from pathlib import Path

    path = Path(path)
    return parse_instance(path.read_text(), label=path.stem)
