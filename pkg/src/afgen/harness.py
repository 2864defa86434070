"""Experiment driver: repetitions, regret curves, bootstrap stats, reports.

Repetition r of an experiment seeded with s runs with seed s + r, so growing
the repetition count leaves earlier curves untouched. Benchmark repetitions
fan out to a process pool; external (subprocess) objectives run serially.
Emitted artifacts: raw per-evaluation CSV, a summary JSON, and an SVG chart.
The summary is exactly recomputable from the CSV (see ``verify_output``).
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .benchmarks import get_benchmark, make_objective
from .bo import Objective, RunConfig, Trace, random_search, run_bo
from .external import external_objective
from .policies import PolicySpec, policy_name
from .svgplot import curves_svg

__all__ = [
    "ExperimentSpec",
    "PolicyResult",
    "RegretReport",
    "regret_curve",
    "bootstrap_stats",
    "run_experiment",
    "verify_output",
    "RAW_CSV_NAME",
    "SUMMARY_JSON_NAME",
    "CHART_SVG_NAME",
]

RAW_CSV_NAME = "raw.csv"
SUMMARY_JSON_NAME = "summary.json"
CHART_SVG_NAME = "regret.svg"

REGRET_FLOOR = 1e-12

# Stream tags keep the observation-noise and bootstrap generators disjoint
# from the per-run generators seeded with plain integers.
_NOISE_TAG = 0x5EED_01
_BOOT_TAG = 0x5EED_02


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: an objective, a policy list, and repetition budgets."""

    policies: tuple[PolicySpec, ...]
    n_iters: int
    objective_name: str | None = None
    external_command: str | None = None
    dim: int | None = None
    bounds: tuple[tuple[float, float], ...] | None = None
    reps: int = 100
    n_init: int = 5
    noise_std: float = 0.0
    seed: int = 0
    bootstrap_samples: int = 200
    grid_size: int = 1000
    gp_restarts: int = 10
    refine_local: bool = False
    workers: int | None = None
    external_timeout: float = 600.0

    def __post_init__(self):
        if len(self.policies) < 1:
            raise ValueError("at least one policy required")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.bootstrap_samples < 1:
            raise ValueError("bootstrap_samples must be >= 1")
        if (self.objective_name is None) == (self.external_command is None):
            raise ValueError("exactly one of objective_name/external_command required")
        if self.external_command is not None and (self.dim is None or self.bounds is None):
            raise ValueError("external objectives need dim and bounds")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


@dataclass
class PolicyResult:
    name: str
    policy: PolicySpec
    curves: np.ndarray          # reps x T, log regret or raw best_so_far
    mean_curve: np.ndarray
    std_curve: np.ndarray
    traces: list[Trace]


@dataclass
class RegretReport:
    spec: ExperimentSpec
    metric: str                 # "log_regret" or "best_so_far"
    policies: list[PolicyResult]
    failures: dict[str, Exception] = field(default_factory=dict)

    def result(self, name: str) -> PolicyResult:
        for p in self.policies:
            if p.name == name:
                return p
        raise KeyError(name)


def regret_curve(trace: Trace, f_star: float) -> np.ndarray:
    """log10 absolute regret of the incumbent at each iteration, floored at 1e-12."""
    best = trace.best_so_far_curve()
    return np.log10(np.maximum(np.abs(best - f_star), REGRET_FLOOR))


def bootstrap_stats(
    curves: np.ndarray, B: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Bootstrap mean/std of the per-iteration mean curve.

    Whole curves are resampled with replacement (keeping within-run
    correlation); the std curve is the spread of the resampled means.
    """
    curves = np.atleast_2d(np.asarray(curves, dtype=float))
    reps = curves.shape[0]
    if B < 1:
        raise ValueError("B must be >= 1")
    idx = rng.integers(0, reps, size=(B, reps))
    resample_means = curves[idx].mean(axis=1)   # B x T
    return resample_means.mean(axis=0), resample_means.std(axis=0)


def _policy_names(policies: tuple[PolicySpec, ...]) -> list[str]:
    names: list[str] = []
    for p in policies:
        base = policy_name(p)
        name = base
        k = 2
        while name in names:
            name = f"{base}#{k}"
            k += 1
        names.append(name)
    return names


def _run_config(spec: ExperimentSpec, rep: int) -> RunConfig:
    return RunConfig(
        n_iters=spec.n_iters,
        n_init=spec.n_init,
        grid_size=spec.grid_size,
        refine_local=spec.refine_local,
        seed=spec.seed + rep,
        gp_restarts=spec.gp_restarts,
    )


def _run_one(objective: Objective, policy: PolicySpec, config: RunConfig) -> Trace:
    if policy.variant == "random-search":
        return random_search(objective, config)
    return run_bo(objective, config, policy)


def _benchmark_rep(task: tuple[str, float, PolicySpec, RunConfig]) -> Trace:
    objective_name, noise_std, policy, config = task
    noise_rng = np.random.default_rng((config.seed, _NOISE_TAG))
    objective = make_objective(objective_name, noise_std, noise_rng)
    return _run_one(objective, policy, config)


def _run_policy_block(
    spec: ExperimentSpec, policy: PolicySpec, pool: ProcessPoolExecutor | None
) -> list[Trace]:
    tasks = [
        (spec.objective_name, spec.noise_std, policy, _run_config(spec, rep))
        for rep in range(spec.reps)
    ]
    if pool is None:
        return [_benchmark_rep(t) for t in tasks]
    return list(pool.map(_benchmark_rep, tasks))


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None) -> RegretReport:
    """Run every policy for ``spec.reps`` repetitions and aggregate curves.

    A failing run aborts its policy's block (recorded in ``failures``);
    remaining policies still execute. When ``out_dir`` is given the raw CSV,
    summary JSON and SVG chart are written there.
    """
    names = _policy_names(spec.policies)
    f_star = None
    if spec.objective_name is not None:
        f_star = get_benchmark(spec.objective_name).f_star
    metric = "log_regret" if f_star is not None else "best_so_far"

    external_proc = None
    pool = None
    per_policy_traces: dict[str, list[Trace]] = {}
    failures: dict[str, str] = {}
    try:
        if spec.external_command is not None:
            objective, external_proc = external_objective(
                spec.external_command, spec.dim, np.asarray(spec.bounds), spec.external_timeout
            )
            for name, policy in zip(names, spec.policies):
                try:
                    per_policy_traces[name] = [
                        _run_one(objective, policy, _run_config(spec, rep))
                        for rep in range(spec.reps)
                    ]
                except Exception as err:
                    failures[name] = err
        else:
            workers = spec.workers if spec.workers is not None else (os.cpu_count() or 1)
            if workers > 1 and spec.reps > 1:
                pool = ProcessPoolExecutor(max_workers=workers)
            for name, policy in zip(names, spec.policies):
                try:
                    per_policy_traces[name] = _run_policy_block(spec, policy, pool)
                except Exception as err:
                    failures[name] = err
    finally:
        if pool is not None:
            pool.shutdown()
        if external_proc is not None:
            external_proc.close()

    boot_rng = np.random.default_rng((spec.seed, _BOOT_TAG))
    results: list[PolicyResult] = []
    for name, policy in zip(names, spec.policies):
        if name not in per_policy_traces:
            continue
        traces = per_policy_traces[name]
        if metric == "log_regret":
            curves = np.stack([regret_curve(tr, f_star) for tr in traces])
        else:
            curves = np.stack([tr.best_so_far_curve() for tr in traces])
        mean, std = bootstrap_stats(curves, spec.bootstrap_samples, boot_rng)
        results.append(PolicyResult(name, policy, curves, mean, std, traces))

    report = RegretReport(spec, metric, results, failures)
    if out_dir is not None:
        write_report(report, Path(out_dir))
    return report


# ---------------------------------------------------------------------------
# Emission and verification
# ---------------------------------------------------------------------------


def _spec_json(spec: ExperimentSpec, names: list[str]) -> dict:
    return {
        "objective": spec.objective_name,
        "external_command": spec.external_command,
        "dim": spec.dim,
        "bounds": [list(b) for b in spec.bounds] if spec.bounds is not None else None,
        "reps": spec.reps,
        "n_iters": spec.n_iters,
        "n_init": spec.n_init,
        "noise_std": spec.noise_std,
        "seed": spec.seed,
        "bootstrap_samples": spec.bootstrap_samples,
        "grid_size": spec.grid_size,
        "gp_restarts": spec.gp_restarts,
        "refine_local": spec.refine_local,
        "policies": [
            {"name": name, **policy.to_json_dict()}
            for name, policy in zip(names, spec.policies)
        ],
    }


def _summary_dict(report: RegretReport) -> dict:
    names = [p.name for p in report.policies]
    mean_key = "mean_log_regret" if report.metric == "log_regret" else "mean_best_so_far"
    std_key = "std_log_regret" if report.metric == "log_regret" else "std_best_so_far"
    return {
        "spec": _spec_json(report.spec, names),
        "metric": report.metric,
        "policies": [
            {
                "name": p.name,
                mean_key: [float(v) for v in p.mean_curve],
                std_key: [float(v) for v in p.std_curve],
            }
            for p in report.policies
        ],
    }


def _summary_text(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def write_report(report: RegretReport, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dim = _report_dim(report)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["policy", "rep", "iter", "label"] + [f"x_{j}" for j in range(dim)] + ["y", "best_so_far"]
    )
    for p in report.policies:
        for rep, trace in enumerate(p.traces):
            for r in trace.records:
                writer.writerow(
                    [p.name, rep, r.iteration, r.policy_label]
                    + [repr(float(v)) for v in r.x]
                    + [repr(float(r.y)), repr(float(r.best_so_far))]
                )
    (out_dir / RAW_CSV_NAME).write_text(buf.getvalue())

    (out_dir / SUMMARY_JSON_NAME).write_text(_summary_text(_summary_dict(report)))

    if report.policies:
        ylabel = "mean log10 regret" if report.metric == "log_regret" else "mean best so far"
        title = report.spec.objective_name or "external objective"
        series = [(p.name, p.mean_curve, p.std_curve) for p in report.policies]
        (out_dir / CHART_SVG_NAME).write_text(curves_svg(series, title, ylabel))


def _report_dim(report: RegretReport) -> int:
    if report.spec.dim is not None:
        return report.spec.dim
    return get_benchmark(report.spec.objective_name).dim


def verify_output(out_dir: str | Path) -> bool:
    """Recompute the summary JSON from the raw CSV; True when byte-identical."""
    out_dir = Path(out_dir)
    emitted = (out_dir / SUMMARY_JSON_NAME).read_text()
    summary = json.loads(emitted)
    spec = summary["spec"]
    metric = summary["metric"]

    best: dict[str, dict[int, list[float]]] = {}
    with open(out_dir / RAW_CSV_NAME, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        b_idx = header.index("best_so_far")
        for row in reader:
            pol, rep = row[0], int(row[1])
            best.setdefault(pol, {}).setdefault(rep, []).append(float(row[b_idx]))

    if metric == "log_regret":
        f_star = get_benchmark(spec["objective"]).f_star

    boot_rng = np.random.default_rng((spec["seed"], _BOOT_TAG))
    mean_key = "mean_log_regret" if metric == "log_regret" else "mean_best_so_far"
    std_key = "std_log_regret" if metric == "log_regret" else "std_best_so_far"
    policies_out = []
    for entry in summary["policies"]:
        name = entry["name"]
        reps = sorted(best[name])
        rows = [np.asarray(best[name][rep]) for rep in reps]
        curves = np.stack(rows)
        if metric == "log_regret":
            curves = np.log10(np.maximum(np.abs(curves - f_star), REGRET_FLOOR))
        mean, std = bootstrap_stats(curves, spec["bootstrap_samples"], boot_rng)
        policies_out.append(
            {
                "name": name,
                mean_key: [float(v) for v in mean],
                std_key: [float(v) for v in std],
            }
        )
    rebuilt = {"spec": spec, "metric": metric, "policies": policies_out}
    return _summary_text(rebuilt) == emitted
