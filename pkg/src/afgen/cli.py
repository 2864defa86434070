"""Command-line driver for benchmark experiments and weight meta-optimization.

Exit codes: 0 success, 2 bad arguments/spec, 3 run failure, 4 protocol
violation by an external objective child.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .acquisitions import DEFAULT_SEEDS, AcquisitionKind
from .benchmarks import benchmark_names, get_benchmark, make_objective
from .bo import RunConfig, trace_csv_header, trace_csv_rows
from .external import ProtocolError
from .harness import ExperimentSpec, run_experiment, verify_output
from .meta import MetaConfig, meta_optimize
from .policies import PolicySpec

__all__ = ["main", "parse_policy", "parse_bounds"]

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_RUN = 3
EXIT_PROTOCOL = 4


def parse_policy(text: str) -> PolicySpec:
    """Parse a policy flag: JSON object or shorthand.

    Shorthands: ``pi``/``ei``/``lcb``, ``rand``, ``seq``,
    ``weighted[:w1,w2,w3]`` (uniform when omitted), ``noised:<base>[:scale]``,
    ``hedge[:eta]``, ``random-search``.
    """
    text = text.strip()
    if text.startswith("{"):
        return PolicySpec.from_json_dict(json.loads(text))
    parts = text.lower().split(":")
    head = parts[0]
    if head in ("pi", "ei", "lcb"):
        return PolicySpec.fixed(AcquisitionKind(head.upper()))
    if head in ("rand", "random"):
        return PolicySpec.random_choice()
    if head in ("seq", "sequential"):
        return PolicySpec.sequential()
    if head == "weighted":
        if len(parts) == 1:
            k = len(DEFAULT_SEEDS)
            return PolicySpec.weighted([1.0 / k] * k)
        weights = [float(w) for w in parts[1].split(",")]
        return PolicySpec.weighted(weights)
    if head == "noised":
        if len(parts) < 2:
            raise ValueError("noised policy needs a base, e.g. noised:ei:0.1")
        scale = 0.1
        base_parts = parts[1:]
        try:
            scale = float(base_parts[-1])
            base_parts = base_parts[:-1]
        except ValueError:
            pass
        if not base_parts:
            raise ValueError("noised policy needs a base, e.g. noised:ei:0.1")
        return PolicySpec.noised(parse_policy(":".join(base_parts)), scale)
    if head == "hedge":
        eta = float(parts[1]) if len(parts) > 1 else 1.0
        return PolicySpec.hedge(eta=eta)
    if head == "random-search":
        return PolicySpec.random_search()
    raise ValueError(f"cannot parse policy {text!r}")


def parse_bounds(text: str) -> tuple[tuple[float, float], ...]:
    """Parse per-dimension bounds like ``-5:10,0:15``."""
    out = []
    for chunk in text.split(","):
        lo, hi = chunk.split(":")
        out.append((float(lo), float(hi)))
    return tuple(out)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="afgen")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark experiment")
    run.add_argument("--objective", help="benchmark name (see list-benchmarks)")
    run.add_argument("--external-cmd", help="child command implementing the stdio protocol")
    run.add_argument("--dim", type=int, help="input dimension (external objectives)")
    run.add_argument("--bounds", help="per-dimension lo:hi pairs, comma separated")
    run.add_argument("--policy", action="append", required=True,
                     help="policy spec (repeatable)")
    run.add_argument("--reps", type=int, default=100)
    run.add_argument("--iters", type=int, required=True)
    run.add_argument("--init", type=int, default=5)
    run.add_argument("--noise-std", type=float, default=0.0)
    run.add_argument("--grid-size", type=int, default=1000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--gp-restarts", type=int, default=10)
    run.add_argument("--bootstrap-samples", type=int, default=200)
    run.add_argument("--refine-local", action="store_true")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--timeout", type=float, default=600.0,
                     help="per-evaluation timeout for external objectives (s)")
    run.add_argument("--out", required=True, help="output directory")

    meta = sub.add_parser("meta", help="meta-optimize weighted-policy weights")
    meta.add_argument("--objective", required=True)
    meta.add_argument("--outer-iters", type=int, default=10)
    meta.add_argument("--outer-init", type=int, default=5)
    meta.add_argument("--inner-reps", type=int, default=3)
    meta.add_argument("--iters", type=int, default=25, help="inner run iterations")
    meta.add_argument("--init", type=int, default=5, help="inner run initial design size")
    meta.add_argument("--noise-std", type=float, default=0.0)
    meta.add_argument("--grid-size", type=int, default=1000)
    meta.add_argument("--gp-restarts", type=int, default=10)
    meta.add_argument("--seed", type=int, default=0)
    meta.add_argument("--aggregate", choices=("final-best", "auc"), default="final-best")
    meta.add_argument("--out", required=True)

    verify = sub.add_parser("verify", help="recompute a summary from its raw CSV")
    verify.add_argument("--out", required=True, help="experiment output directory")

    sub.add_parser("list-benchmarks", help="list registered benchmark objectives")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        policies = tuple(parse_policy(p) for p in args.policy)
        spec = ExperimentSpec(
            policies=policies,
            n_iters=args.iters,
            objective_name=args.objective,
            external_command=args.external_cmd,
            dim=args.dim,
            bounds=parse_bounds(args.bounds) if args.bounds else None,
            reps=args.reps,
            n_init=args.init,
            noise_std=args.noise_std,
            seed=args.seed,
            bootstrap_samples=args.bootstrap_samples,
            grid_size=args.grid_size,
            gp_restarts=args.gp_restarts,
            refine_local=args.refine_local,
            workers=args.workers,
            external_timeout=args.timeout,
        )
        if spec.objective_name is not None:
            get_benchmark(spec.objective_name)
    except (ValueError, KeyError, json.JSONDecodeError) as err:
        print(f"spec error: {err}", file=sys.stderr)
        return EXIT_SPEC

    report = run_experiment(spec, out_dir=args.out)
    for name, err in report.failures.items():
        print(f"policy {name} failed: {err}", file=sys.stderr)
    if report.failures:
        if any(_caused_by_protocol(err) for err in report.failures.values()):
            return EXIT_PROTOCOL
        return EXIT_RUN
    print(f"wrote {Path(args.out) / 'summary.json'}")
    return EXIT_OK


def _caused_by_protocol(err: BaseException | None) -> bool:
    while err is not None:
        if isinstance(err, ProtocolError):
            return True
        err = err.__cause__
    return False


def _cmd_meta(args: argparse.Namespace) -> int:
    try:
        get_benchmark(args.objective)
        inner = RunConfig(
            n_iters=args.iters,
            n_init=args.init,
            grid_size=args.grid_size,
            gp_restarts=args.gp_restarts,
        )
        config = MetaConfig(
            outer_iters=args.outer_iters,
            outer_init=args.outer_init,
            inner_reps=args.inner_reps,
            inner_config=inner,
            seed=args.seed,
            aggregate=args.aggregate,
        )
    except (ValueError, KeyError) as err:
        print(f"spec error: {err}", file=sys.stderr)
        return EXIT_SPEC

    noise_rng = np.random.default_rng((args.seed, 0xB0B))
    objective = make_objective(args.objective, args.noise_std, noise_rng)
    weights, trace = meta_optimize(objective, config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "meta_weights.json").write_text(
        json.dumps(
            {
                "objective": args.objective,
                "seeds": [s.tag for s in config.seeds],
                "weights": [float(w) for w in weights],
                "policy": PolicySpec.weighted(weights, config.seeds).to_json_dict(),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    with open(out / "outer_trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trace_csv_header(len(config.seeds)))
        writer.writerows(trace_csv_rows(trace, rep=0))
    print("weights: " + ", ".join(f"{s.tag}={w:.4f}" for s, w in zip(config.seeds, weights)))
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    try:
        ok = verify_output(args.out)
    except FileNotFoundError as err:
        print(f"spec error: {err}", file=sys.stderr)
        return EXIT_SPEC
    if ok:
        print("summary matches raw CSV")
        return EXIT_OK
    print("summary does NOT match raw CSV", file=sys.stderr)
    return EXIT_RUN


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list-benchmarks":
        for name in benchmark_names():
            spec = get_benchmark(name)
            print(f"{name}: dim={spec.dim}, f*={spec.f_star}")
        return EXIT_OK
    if args.command == "run":
        try:
            return _cmd_run(args)
        except ProtocolError as err:
            print(f"protocol error: {err}", file=sys.stderr)
            return EXIT_PROTOCOL
        except Exception as err:
            print(f"run error: {err}", file=sys.stderr)
            return EXIT_RUN
    if args.command == "meta":
        return _cmd_meta(args)
    if args.command == "verify":
        return _cmd_verify(args)
    return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
