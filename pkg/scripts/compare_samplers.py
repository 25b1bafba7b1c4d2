"""Block-averaged log normed counts for every sampler on one instance."""

import argparse

import numpy as np

from fairqa.harness import SAMPLERS, CompareConfig, compare_samplers, emit_results
from fairqa.ising import enumerate_ground_states, index_to_bits, load_instance
from fairqa.models import load_model


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instance", default="model:a", help="instance file or model:a .. model:d")
    parser.add_argument("--samplers", nargs="+", default=list(SAMPLERS))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--blocks", type=int, default=8)
    parser.add_argument("--block-size", type=int, default=500)
    parser.add_argument("--anneal-time", type=float, default=100.0)
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    if args.instance.startswith("model:"):
        inst = load_model(args.instance.split(":", 1)[1])
    else:
        inst = load_instance(args.instance)
    ground = enumerate_ground_states(inst)
    cfg = CompareConfig(blocks=args.blocks, block_size=args.block_size, anneal_time=args.anneal_time)
    res = compare_samplers(inst, args.samplers, args.seed, cfg, ground)

    print("state".ljust(inst.n + 2) + "".join(s.rjust(17) for s in args.samplers))
    for k, g in enumerate(ground.states):
        cells = []
        for name in args.samplers:
            row = res.row(name)
            mark = "*" if row.floored[k] else " "
            cells.append(f"{row.log_normed[k]:+7.3f}{mark}({row.log_std_error[k]:.3f})".rjust(17))
        print(index_to_bits(g, inst.n).ljust(inst.n + 2) + "".join(cells))
    print("(* = never seen, log floored)", "ground fraction:", {r.sampler: round(r.ground_fraction, 3) for r in res.rows})
    if args.out:
        emit_results(res, "json", args.out)
    return np.asarray([r.log_normed for r in res.rows])


if __name__ == "__main__":
    main()
