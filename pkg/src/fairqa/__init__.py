"""Fair sampling of degenerate ground states with randomly perturbed reverse-annealing paths."""

from .ising import GroundSet, SpinInstance, energy, enumerate_ground_states
from .schedules import AnnealSchedule

__all__ = ["AnnealSchedule", "GroundSet", "SpinInstance", "energy", "enumerate_ground_states"]
__version__ = "0.1.0"
