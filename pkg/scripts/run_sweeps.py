"""Probability-versus-anneal-time curves for the four reference models.

Writes one CSV and one JSON file per (model, schedule) into --out-dir.
"""

import argparse
from pathlib import Path

import numpy as np

from fairqa.harness import DEFAULT_T_GRID, emit_results, fairness_report, sweep_anneal_time
from fairqa.ising import enumerate_ground_states
from fairqa.models import MODEL_NAMES, TRIAL_COUNTS, load_model
from fairqa.schedules import AnnealSchedule


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--models", nargs="+", default=list(MODEL_NAMES))
    parser.add_argument("--schedules", nargs="+", default=["vanilla", "piecewise", "quadratic"])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--t-count", type=int, default=len(DEFAULT_T_GRID))
    parser.add_argument("--out-dir", default="results/sweeps")
    args = parser.parse_args()

    times = np.geomspace(DEFAULT_T_GRID[0], DEFAULT_T_GRID[-1], args.t_count).tolist()
    out = Path(args.out_dir)
    for name in args.models:
        inst = load_model(name)
        ground = enumerate_ground_states(inst)
        for kind in args.schedules:
            res = sweep_anneal_time(inst, AnnealSchedule(kind), times, TRIAL_COUNTS[name], args.seed, ground)
            stem = out / f"model_{name}_{kind}"
            emit_results(res, "csv", stem.with_suffix(".csv"))
            emit_results(res, "json", stem.with_suffix(".json"))
            rep = fairness_report(res.table(-1), ground)
            print(f"model {name} {kind:10s} T={times[-1]:g} ratio={rep.ratio:.3f} mass={rep.ground_mass:.3f}", flush=True)


if __name__ == "__main__":
    main()
