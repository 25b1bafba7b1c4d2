"""The four small benchmark instances (a)-(d) and their reverse-anneal trial counts.

The instances were produced by ``scripts/find_models.py``; see that script for
how they were chosen.
"""

from importlib import resources

from ..ising import SpinInstance, parse_instance

MODEL_NAMES = ("a", "b", "c", "d")
TRIAL_COUNTS = {"a": 32, "b": 32, "c": 64, "d": 16}
HARD_SUPPRESSION_MODELS = ("a", "b", "c")


def load_model(name: str) -> SpinInstance:
    if name not in MODEL_NAMES:
        raise KeyError(f"unknown model {name!r}; choose from {MODEL_NAMES}")
    text = resources.files(__name__).joinpath(f"model_{name}.txt").read_text()
    return parse_instance(text, label=f"model-{name}")
