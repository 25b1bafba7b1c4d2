"""Command line entry point: ``fairqa {sweep,compare,collect,predict,gen-instance}``.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import collector, harness
from .engine import DEFAULT_TOLERANCE, DiagonalPerturbation, evolve_batch, trial_seed
from .integrator import IntegrationError
from .ising import (
    InstanceParseError,
    enumerate_ground_states,
    generate_spinglass,
    load_instance,
    serialize_instance,
)
from .models import MODEL_NAMES, load_model
from .perturbation import predict_suppression
from .samplers import PtIcmConfig, pt_icm, simulated_annealing
from .schedules import SCHEDULE_NAMES, AnnealSchedule

log = logging.getLogger("fairqa")

EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _instance(args):
    if args.instance is None:
        raise ValueError("give --instance <file> (or model:a .. model:d)")
    name = str(args.instance)
    if name.startswith("model:"):
        return load_model(name.split(":", 1)[1])
    return load_instance(name)


def _write(args, payload, text_fallback=None):
    if args.out:
        harness.emit_results(payload, args.format, args.out)
        log.info("wrote %s", args.out)
    else:
        if args.format == "csv":
            sys.stdout.write(harness.sweep_to_csv(payload if isinstance(payload, list) else [payload]))
        else:
            doc = payload.to_dict() if hasattr(payload, "to_dict") else payload
            sys.stdout.write(json.dumps(harness._jsonable(doc), indent=2, sort_keys=True) + "\n")


def cmd_sweep(args):
    instance = _instance(args)
    schedule = AnnealSchedule(args.schedule, args.driver_amplitude)
    if args.times:
        times = [float(t) for t in args.times]
    else:
        times = np.geomspace(args.t_min, args.t_max, args.t_count).tolist()
    result = harness.sweep_anneal_time(
        instance, schedule, times, args.trials, args.seed, tol=args.tolerance, antithetic=not args.no_antithetic
    )
    _write(args, result)


def cmd_compare(args):
    instance = _instance(args)
    cfg = harness.CompareConfig(
        blocks=args.blocks,
        block_size=args.block_size,
        anneal_time=args.anneal_time,
        schedule=args.schedule,
        driver_amplitude=args.driver_amplitude,
        trials_per_block=args.trials,
        sa_sweeps=args.sa_sweeps,
        pt_sweeps=args.pt_sweeps,
        tol=args.tolerance,
    )
    if args.format == "csv":
        raise ValueError("compare results are JSON only")
    _write(args, harness.compare_samplers(instance, args.samplers, args.seed, cfg))


def make_sampler(name, instance, args, ground=None):
    """One-sample-per-call sampler for the collector."""
    rng = np.random.default_rng(args.seed)
    if name == "uniform-oracle":
        ground = ground or enumerate_ground_states(instance)
        return collector.uniform_oracle(ground.states, rng)
    if name == "quantum-sim":
        schedule = AnnealSchedule(args.schedule, args.driver_amplitude)
        counter = iter(range(1 << 62))

        def anneal_once():
            k = next(counter)
            pert = DiagonalPerturbation.draw(instance.n, trial_seed(args.seed, k))
            psi = evolve_batch(instance, schedule, args.anneal_time, [pert], args.tolerance)
            p = np.abs(psi[:, 0]) ** 2
            return int(rng.choice(p.size, p=p / p.sum()))

        return anneal_once
    if name == "sa":
        return lambda: next(iter(simulated_annealing(instance, 1, args.sa_sweeps, int(rng.integers(2**63))).counts))
    if name == "pt-icm":
        pool: list[int] = []

        def from_pool():
            if not pool:
                cfg = PtIcmConfig(n_sweeps=args.pt_sweeps, seed=int(rng.integers(2**63)), n_samples=16)
                batch = pt_icm(instance, cfg).batch
                pool.extend(np.repeat(list(batch.counts), list(batch.counts.values())).tolist())
            return pool.pop()

        return from_pool
    raise ValueError(f"unknown sampler {name!r}")


def cmd_collect(args):
    instance = _instance(args)
    if args.format == "csv":
        raise ValueError("collect results are JSON only")
    sampler = make_sampler(args.sampler, instance, args)
    result = collector.get_ground_states(instance.n, args.epsilon, sampler, args.overhead, args.max_samples)
    payload = {
        "kind": "collect",
        "instance": instance.label,
        "sampler": args.sampler,
        "epsilon": args.epsilon,
        "overhead": args.overhead,
        "seed": args.seed,
        **result.to_dict(instance.n),
    }
    _write(args, payload)


def cmd_predict(args):
    instance = _instance(args)
    if args.format == "csv":
        raise ValueError("predict results are JSON only")
    ground = enumerate_ground_states(instance)
    pred = predict_suppression(instance, ground)
    payload = {
        "kind": "predict",
        "instance": instance.label,
        "ground_energy": ground.energy,
        "degeneracy": ground.m,
        "states": ground.bits(),
        "labels": pred.labels,
        "weights": pred.weights.tolist(),
        "epsilons": pred.basis.epsilons.tolist(),
        "sector": pred.sector,
        "degenerate_split": pred.basis.degenerate_split,
    }
    _write(args, payload)


def _graph_edges(spec: str, n: int, seed: int):
    import networkx as nx

    kind, _, param = spec.partition(":")
    if kind == "path":
        g = nx.path_graph(n)
    elif kind == "cycle":
        g = nx.cycle_graph(n)
    elif kind == "complete":
        g = nx.complete_graph(n)
    elif kind == "regular":
        g = nx.random_regular_graph(int(param or 3), n, seed=seed)
    elif kind == "grid":
        rows, cols = (int(x) for x in param.lower().split("x"))
        if rows * cols != n:
            raise ValueError(f"grid {param} does not have {n} sites")
        g = nx.convert_node_labels_to_integers(nx.grid_2d_graph(rows, cols), ordering="sorted")
    else:
        raise ValueError(f"unknown graph {spec!r}")
    return list(g.edges())


def cmd_gen_instance(args):
    edges = _graph_edges(args.graph, args.n, args.seed)
    draw = generate_spinglass(args.n, edges, args.seed)
    if not draw.repaired:
        log.warning("free spins remain after %d repair attempts", draw.attempts)
    text = f"# {draw.instance.label} graph={args.graph} repaired={draw.repaired}\n" + serialize_instance(draw.instance)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="fairqa", description="Fair ground-state sampling experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of option values; command-line flags win")
    common.add_argument("--instance", help="instance file, or model:a .. model:d")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default="json")

    anneal = argparse.ArgumentParser(add_help=False)
    anneal.add_argument("--schedule", choices=sorted(SCHEDULE_NAMES), default="piecewise")
    anneal.add_argument("--driver-amplitude", type=float, default=1.0)
    anneal.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    anneal.add_argument("--trials", type=int, default=16)

    subs = {}
    p = sub.add_parser("sweep", parents=[common, anneal], help="probabilities versus anneal time")
    p.add_argument("--times", nargs="*", help="explicit anneal times")
    p.add_argument("--t-min", type=float, default=0.1)
    p.add_argument("--t-max", type=float, default=1000.0)
    p.add_argument("--t-count", type=int, default=24)
    p.add_argument("--no-antithetic", action="store_true", help="independent draws for every trial")
    p.set_defaults(func=cmd_sweep)
    subs["sweep"] = p

    p = sub.add_parser("compare", parents=[common, anneal], help="block-averaged normed counts per sampler")
    p.add_argument("--samplers", nargs="+", choices=harness.SAMPLERS, default=list(harness.SAMPLERS))
    p.add_argument("--blocks", type=int, default=8)
    p.add_argument("--block-size", type=int, default=500)
    p.add_argument("--anneal-time", type=float, default=100.0)
    p.add_argument("--sa-sweeps", type=int, default=1000)
    p.add_argument("--pt-sweeps", type=int, default=4000)
    p.set_defaults(func=cmd_compare, driver_amplitude=harness.COMPARE_DRIVER_AMPLITUDE, trials=20)
    subs["compare"] = p

    p = sub.add_parser("collect", parents=[common, anneal], help="collect the full ground set")
    p.add_argument("--sampler", choices=("quantum-sim", "sa", "pt-icm", "uniform-oracle"), default="uniform-oracle")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--overhead", type=float, default=1.0)
    p.add_argument("--anneal-time", type=float, default=100.0)
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--sa-sweeps", type=int, default=1000)
    p.add_argument("--pt-sweeps", type=int, default=2000)
    p.set_defaults(func=cmd_collect, driver_amplitude=harness.COMPARE_DRIVER_AMPLITUDE)
    subs["collect"] = p

    p = sub.add_parser("predict", parents=[common], help="perturbative suppression prediction")
    p.set_defaults(func=cmd_predict)
    subs["predict"] = p

    p = sub.add_parser("gen-instance", parents=[common], help="random spin glass with free spins repaired")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--graph", default="regular:3", help="path | cycle | complete | regular:K | grid:RxC")
    p.set_defaults(func=cmd_gen_instance)
    subs["gen-instance"] = p
    return parser, subs


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        config = json.loads(Path(args.config).read_text())
        if not isinstance(config, dict):
            raise ValueError("config file must hold one JSON object")
        sub = subs[args.command]
        known = {a.dest for a in sub._actions}
        values = {k.replace("-", "_"): v for k, v in config.items()}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValueError(f"unknown config keys for {args.command}: {unknown}")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    except (ValueError, OSError) as exc:
        print(f"fairqa: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except IntegrationError as exc:
        print(f"fairqa: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError, InstanceParseError, MemoryError) as exc:
        print(f"fairqa: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
