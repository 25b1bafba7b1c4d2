"""Annealing coefficient schedules D(s), P(s), Z(s)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

VANILLA = "vanilla"
QUADRATIC = "quadratic-reverse"
PIECEWISE = "piecewise-reverse"
KINDS = (VANILLA, QUADRATIC, PIECEWISE)
REVERSE_KINDS = (QUADRATIC, PIECEWISE)

# CLI / config names
SCHEDULE_NAMES = {"vanilla": VANILLA, "quadratic": QUADRATIC, "piecewise": PIECEWISE}

PIECEWISE_BREAKPOINTS = (0.5, 0.9)


class CoefficientTriple(NamedTuple):
    d: float
    p: float
    z: float


def quadratic_driver(s: float) -> float:
    return s * (1.0 - s)


def piecewise_driver(s: float, offset: float = -9 / 64) -> float:
    """Driver that follows s(1-s) up to 0.5, bends to zero at 0.9 and stays off.

    ``offset`` is the constant term of the middle branch; it exists only so the
    continuity check can be exercised on a corrupted copy.
    """
    if s < 0.5:
        return s * (1.0 - s)
    if s < 0.9:
        return -25 / 16 * s * s + 25 / 16 * s + offset
    return 0.0


@dataclass(frozen=True)
class AnnealSchedule:
    kind: str = VANILLA
    driver_amplitude: float = 1.0
    _middle_offset: float = -9 / 64

    def __post_init__(self):
        kind = SCHEDULE_NAMES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not self.driver_amplitude > 0:
            raise ValueError("driver amplitude must be positive")

    @property
    def is_reverse(self) -> bool:
        return self.kind in REVERSE_KINDS

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return PIECEWISE_BREAKPOINTS if self.kind == PIECEWISE else ()

    def driver(self, s: float) -> float:
        if self.kind == VANILLA:
            return 1.0 - s
        if self.kind == QUADRATIC:
            return quadratic_driver(s)
        return piecewise_driver(s, self._middle_offset)

    def evaluate(self, s: float) -> CoefficientTriple:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"s={s} outside [0, 1]")
        z = 0.0 if self.kind == VANILLA else 1.0 - s
        return CoefficientTriple(self.driver_amplitude * self.driver(s), s, z)

    __call__ = evaluate


def evaluate(schedule: AnnealSchedule, s: float) -> CoefficientTriple:
    return schedule.evaluate(s)


def check_branch_continuity(schedule: AnnealSchedule) -> float:
    """Largest jump of the driver coefficient across the piecewise breakpoints."""
    if schedule.kind != PIECEWISE:
        raise ValueError(f"continuity check applies to the piecewise schedule, not {schedule.kind!r}")
    a = schedule.driver_amplitude
    off = schedule._middle_offset
    middle = lambda s: -25 / 16 * s * s + 25 / 16 * s + off  # noqa: E731
    jumps = [abs(quadratic_driver(0.5) - middle(0.5)), abs(middle(0.9) - 0.0)]
    return a * max(jumps)
