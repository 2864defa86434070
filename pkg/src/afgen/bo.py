"""Iterative Bayesian-optimization driver and the random-search baseline.

One run: Latin-hypercube initial design, then repeated rounds of
(grid-search acquisition maximization -> observe -> refit). All proposals
live in the unit box; trace records and recommendations are reported in the
objective's original units.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .acquisitions import Incumbent
from .gp import Dataset, GPModel, dedup_point, fit, predict_batch
from .policies import HedgeState, PolicySpec, evaluate_for_iteration, hedge_update, make_hedge_state

__all__ = [
    "Objective",
    "RunConfig",
    "TraceRecord",
    "Trace",
    "RunError",
    "initial_design",
    "propose_next",
    "run_bo",
    "recommend",
    "random_search",
    "trace_csv_header",
    "trace_csv_rows",
]

INIT_LABEL = "init"
RANDOM_SEARCH_LABEL = "random-search"

POLISH_BUDGET = 50
POLISH_STEP = 0.05
POLISH_MIN_STEP = 1e-4


@dataclass
class Objective:
    """A box-bounded noisy objective evaluated on unit-cube coordinates."""

    eval: Callable[[np.ndarray], float]
    bounds: np.ndarray
    dim: int
    known_optimum: float | None = None
    serial: bool = False

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float).reshape(self.dim, 2)
        if np.any(self.bounds[:, 0] >= self.bounds[:, 1]):
            raise ValueError("each bound must satisfy lo < hi")

    def to_original(self, x01: np.ndarray) -> np.ndarray:
        x01 = np.asarray(x01, dtype=float)
        return self.bounds[:, 0] + x01 * (self.bounds[:, 1] - self.bounds[:, 0])

    def from_original(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self.bounds[:, 0]) / (self.bounds[:, 1] - self.bounds[:, 0])


@dataclass(frozen=True)
class RunConfig:
    """Budget and reproducibility knobs for one optimization run."""

    n_iters: int
    n_init: int = 5
    grid_size: int = 1000
    refine_local: bool = False
    seed: int = 0
    gp_restarts: int = 10

    def __post_init__(self):
        if self.n_init < 2:
            raise ValueError("n_init must be >= 2")
        if self.n_iters < 0:
            raise ValueError("n_iters must be >= 0")
        if self.grid_size < 10:
            raise ValueError("grid_size must be >= 10")
        if self.gp_restarts < 1:
            raise ValueError("gp_restarts must be >= 1")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    x: np.ndarray
    y: float
    best_so_far: float
    policy_label: str


@dataclass
class Trace:
    """Per-evaluation history of one run plus the final recommendation."""

    records: list[TraceRecord]
    recommendation: np.ndarray | None = None
    recommendation_value_estimate: float | None = None

    def best_so_far_curve(self) -> np.ndarray:
        return np.array([r.best_so_far for r in self.records])

    def best_observed(self) -> TraceRecord:
        return min(self.records, key=lambda r: r.y)


class RunError(RuntimeError):
    """Objective evaluation failed; carries the partial trace."""

    def __init__(self, message: str, partial_trace: Trace):
        super().__init__(message)
        self.partial_trace = partial_trace


def initial_design(config: RunConfig, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Latin-hypercube sample: one point per equal-width stratum per dimension."""
    n = config.n_init
    pts = np.empty((n, dim))
    for j in range(dim):
        strata = rng.permutation(n)
        pts[:, j] = (strata + rng.uniform(size=n)) / n
    return pts


def _polish(pointwise: Callable[[np.ndarray], np.ndarray], x0: np.ndarray) -> np.ndarray:
    """Coordinate pattern search on the pointwise utility, box-clipped."""
    x = x0.copy()
    fx = float(pointwise(x[None, :])[0])
    f0 = fx
    evals = 1
    step = POLISH_STEP
    while evals < POLISH_BUDGET and step > POLISH_MIN_STEP:
        improved = False
        for j in range(x.shape[0]):
            for sign in (1.0, -1.0):
                if evals >= POLISH_BUDGET:
                    break
                trial = x.copy()
                trial[j] = np.clip(trial[j] + sign * step, 0.0, 1.0)
                ft = float(pointwise(trial[None, :])[0])
                evals += 1
                if ft > fx:
                    x, fx = trial, ft
                    improved = True
        if not improved:
            step *= 0.5
    return x if fx > f0 else x0


def _propose(
    model: GPModel,
    policy: PolicySpec,
    iteration: int,
    inc: Incumbent,
    config: RunConfig,
    rng: np.random.Generator,
    hedge: HedgeState | None,
) -> tuple[np.ndarray, str]:
    candidates = rng.uniform(size=(config.grid_size, model.data.dim))
    ev = evaluate_for_iteration(policy, iteration, model, inc, candidates, rng, hedge)
    x = candidates[int(np.argmax(ev.utilities))].copy()
    if config.refine_local and ev.pointwise is not None:
        x = _polish(ev.pointwise, x)
    return x, ev.label


def propose_next(
    model: GPModel,
    policy: PolicySpec,
    iteration: int,
    inc: Incumbent,
    config: RunConfig,
    rng: np.random.Generator,
    hedge: HedgeState | None = None,
) -> np.ndarray:
    """Next point to evaluate: grid argmax of this iteration's utilities."""
    x, _ = _propose(model, policy, iteration, inc, config, rng, hedge)
    return x


class _RunState:
    """Accumulates observations (unit coords) and trace records (original units)."""

    def __init__(self, objective: Objective, rng: np.random.Generator):
        self.objective = objective
        self.rng = rng
        self.X = np.empty((0, objective.dim))
        self.y: list[float] = []
        self.records: list[TraceRecord] = []

    def observe(self, x01: np.ndarray, label: str) -> None:
        x01 = dedup_point(self.X, x01, self.rng)
        try:
            val = float(self.objective.eval(x01))
        except Exception as err:
            raise RunError(f"objective evaluation failed: {err}", self.partial_trace()) from err
        if not np.isfinite(val):
            raise RunError(f"objective returned non-finite value {val}", self.partial_trace())
        self.X = np.vstack([self.X, x01])
        self.y.append(val)
        best = min(self.y)
        self.records.append(
            TraceRecord(len(self.records), self.objective.to_original(x01), val, best, label)
        )

    def incumbent(self) -> Incumbent:
        idx = int(np.argmin(self.y))
        return Incumbent(self.y[idx], self.X[idx].copy())

    def dataset(self) -> Dataset:
        return Dataset.from_observations(self.X, np.array(self.y))

    def partial_trace(self) -> Trace:
        return Trace(list(self.records))


def run_bo(objective: Objective, config: RunConfig, policy: PolicySpec) -> Trace:
    """Run the full BO loop and return its trace.

    The trace holds n_init + n_iters records; the recommendation is the
    posterior-mean minimizer (best observed point when n_iters is 0 and no
    model was ever fitted).
    """
    rng = np.random.default_rng(config.seed)
    state = _RunState(objective, rng)
    hedge = make_hedge_state(policy) if policy.variant == "hedge" else None

    for x01 in initial_design(config, objective.dim, rng):
        state.observe(x01, INIT_LABEL)

    if config.n_iters == 0:
        best = state.incumbent()
        return Trace(
            state.records,
            objective.to_original(best.x_best),
            float(best.y_best),
        )

    model = fit(state.dataset(), config.gp_restarts, rng)
    for t in range(config.n_iters):
        x, label = _propose(model, policy, t, state.incumbent(), config, rng, hedge)
        state.observe(x, label)
        model = fit(state.dataset(), config.gp_restarts, rng)
        if hedge is not None:
            hedge = hedge_update(hedge, model)

    rec01, rec_mu = recommend(model, Trace(state.records), config, rng)
    return Trace(state.records, objective.to_original(rec01), rec_mu)


def recommend(
    model: GPModel, trace: Trace, config: RunConfig, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Posterior-mean minimizer over a fresh grid plus all observed points.

    Returns unit-cube coordinates and the posterior mean there (raw units);
    the trace keeps the best observed point separately.
    """
    grid = rng.uniform(size=(config.grid_size, model.data.dim))
    candidates = np.vstack([grid, model.data.inputs])
    mu, _ = predict_batch(model, candidates)
    idx = int(np.argmin(mu))
    return candidates[idx].copy(), float(mu[idx])


def random_search(objective: Objective, config: RunConfig) -> Trace:
    """Uniform sampling baseline with the same trace schema as run_bo."""
    rng = np.random.default_rng(config.seed)
    state = _RunState(objective, rng)
    for _ in range(config.n_init + config.n_iters):
        state.observe(rng.uniform(size=objective.dim), RANDOM_SEARCH_LABEL)
    best = state.incumbent()
    return Trace(state.records, objective.to_original(best.x_best), float(best.y_best))


def trace_csv_header(dim: int) -> list[str]:
    return ["rep", "iter", "policy_label"] + [f"x_{j}" for j in range(dim)] + ["y", "best_so_far"]


def trace_csv_rows(trace: Trace, rep: int) -> list[list[str]]:
    """Serialize a trace with round-trippable float formatting."""
    rows = []
    for r in trace.records:
        rows.append(
            [str(rep), str(r.iteration), r.policy_label]
            + [repr(float(v)) for v in r.x]
            + [repr(float(r.y)), repr(float(r.best_so_far))]
        )
    return rows
