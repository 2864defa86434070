#!/usr/bin/env python3
"""Desk-scale benchmark comparison of all acquisition-generator policies.

Runs every heuristic (fixed PI/EI/LCB, random choice, sequential, weighted,
noised EI, hedge) plus random search on the registered benchmarks and writes
one output directory per benchmark with raw curves, summary and chart.
"""

import argparse
from pathlib import Path

from afgen.acquisitions import EI, LCB, PI
from afgen.benchmarks import benchmark_names
from afgen.harness import ExperimentSpec, run_experiment
from afgen.policies import PolicySpec

POLICIES = (
    PolicySpec.fixed(PI),
    PolicySpec.fixed(EI),
    PolicySpec.fixed(LCB),
    PolicySpec.random_choice(),
    PolicySpec.sequential(),
    PolicySpec.weighted([1 / 3, 1 / 3, 1 / 3]),
    PolicySpec.noised(PolicySpec.fixed(EI), 0.1),
    PolicySpec.hedge(),
    PolicySpec.random_search(),
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--benchmarks", nargs="*", default=benchmark_names())
    parser.add_argument("--reps", type=int, default=20)
    parser.add_argument("--iters", type=int, default=40)
    parser.add_argument("--init", type=int, default=5)
    parser.add_argument("--noise-std", type=float, default=0.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()

    for name in args.benchmarks:
        spec = ExperimentSpec(
            policies=POLICIES,
            n_iters=args.iters,
            objective_name=name,
            reps=args.reps,
            n_init=args.init,
            noise_std=args.noise_std,
            seed=args.seed,
            workers=args.workers,
        )
        out_dir = Path(args.out) / name
        report = run_experiment(spec, out_dir=out_dir)
        print(f"== {name} -> {out_dir}")
        for p in report.policies:
            print(f"  {p.name:<24} final mean log10 regret {p.mean_curve[-1]: .3f}"
                  f" (+-{p.std_curve[-1]:.3f})")


if __name__ == "__main__":
    main()
