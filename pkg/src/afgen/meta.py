"""Outer BO loop tuning the weighted policy's blend weights.

The outer search runs over the box [0,1]^k (k = number of seed acquisitions)
and weight vectors are normalized onto the simplex at use time. Each outer
evaluation averages a few independent inner BO runs to tame noise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .acquisitions import DEFAULT_SEEDS, EI, AcquisitionKind
from .bo import Objective, RunConfig, Trace, run_bo
from .policies import PolicySpec

__all__ = ["MetaConfig", "project_weights", "meta_objective", "meta_optimize"]

AGGREGATES = ("final-best", "auc")


@dataclass(frozen=True)
class MetaConfig:
    """Budgets for the double loop; outer dimension equals len(seeds)."""

    outer_iters: int
    outer_init: int = 5
    inner_reps: int = 3
    inner_config: RunConfig = RunConfig(n_iters=25)
    seed: int = 0
    seeds: tuple[AcquisitionKind, ...] = DEFAULT_SEEDS
    aggregate: str = "final-best"

    def __post_init__(self):
        if self.inner_reps < 1:
            raise ValueError("inner_reps must be >= 1")
        if self.aggregate not in AGGREGATES:
            raise ValueError(f"aggregate must be one of {AGGREGATES}")


def project_weights(raw: np.ndarray) -> np.ndarray:
    """Normalize a [0,1]^k vector onto the simplex; all-zero maps to uniform."""
    raw = np.asarray(raw, dtype=float)
    total = raw.sum()
    if total < 1e-12:
        return np.full(raw.shape[0], 1.0 / raw.shape[0])
    return raw / total


def _inner_score(trace: Trace, aggregate: str) -> float:
    curve = trace.best_so_far_curve()
    if aggregate == "auc":
        return float(np.mean(curve))
    return float(curve[-1])


def meta_objective(
    raw_weights: np.ndarray,
    objective: Objective,
    meta_config: MetaConfig,
    rng: np.random.Generator,
) -> float:
    """Mean final incumbent over inner_reps weighted-policy runs.

    Inner run seeds are drawn from ``rng``, so repeated calls with a fresh
    generator at the same state reproduce the value exactly.
    """
    raw_weights = np.asarray(raw_weights, dtype=float)
    if np.any(raw_weights < 0) or np.any(raw_weights > 1):
        raise ValueError("raw weights must lie in [0,1]")
    if raw_weights.shape[0] != len(meta_config.seeds):
        raise ValueError("one raw weight per seed acquisition required")
    policy = PolicySpec.weighted(project_weights(raw_weights), meta_config.seeds)
    scores = []
    for _ in range(meta_config.inner_reps):
        cfg = replace(meta_config.inner_config, seed=int(rng.integers(2**63)))
        scores.append(_inner_score(run_bo(objective, cfg, policy), meta_config.aggregate))
    return float(np.mean(scores))


def meta_optimize(objective: Objective, meta_config: MetaConfig) -> tuple[np.ndarray, Trace]:
    """Tune blend weights by running BO (fixed EI) over the weight box.

    Returns the normalized weights at the outer recommendation together with
    the outer trace (x columns are the raw, unnormalized weights).
    """
    k = len(meta_config.seeds)
    inner_rng = np.random.default_rng((meta_config.seed, 0x1EE7))

    def outer_eval(raw01: np.ndarray) -> float:
        return meta_objective(raw01, objective, meta_config, inner_rng)

    outer_objective = Objective(outer_eval, np.array([[0.0, 1.0]] * k), k, serial=True)
    outer_config = RunConfig(
        n_iters=meta_config.outer_iters,
        n_init=meta_config.outer_init,
        grid_size=meta_config.inner_config.grid_size,
        seed=meta_config.seed,
        gp_restarts=meta_config.inner_config.gp_restarts,
    )
    trace = run_bo(outer_objective, outer_config, PolicySpec.fixed(EI))
    return project_weights(trace.recommendation), trace
