"""Acquisition-generator policies: which acquisition drives each iteration.

A policy maps (iteration index, run state) to the utilities used to pick the
next point. Variants: a fixed seed, uniform-random choice, a round-robin
sequence, a weighted blend, a noise-perturbed criterion, softmax portfolio
selection over cumulative gains (hedge), and plain random search (handled by
the run driver, not here).

Blending note: PI lives in [0, 1] while EI and negated LCB are in raw output
units, so each seed's utilities are min-max normalized over the candidate set
before weighting; a constant utility list maps to all zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .acquisitions import (
    DEFAULT_SEEDS,
    AcquisitionKind,
    Incumbent,
    utility_values,
)
from .gp import GPModel, predict_batch

__all__ = [
    "PolicySpec",
    "HedgeState",
    "PolicyEvaluation",
    "make_hedge_state",
    "utilities_for_iteration",
    "evaluate_for_iteration",
    "random_choice",
    "weighted_utility",
    "noised_utility",
    "hedge_select",
    "hedge_update",
    "policy_name",
]

VARIANTS = ("fixed", "random", "sequential", "weighted", "noised", "hedge", "random-search")

DEFAULT_NOISE_SCALE = 0.1
DEFAULT_ETA = 1.0


@dataclass(frozen=True)
class PolicySpec:
    """Configuration of one acquisition-generator heuristic."""

    variant: str
    seeds: tuple[AcquisitionKind, ...] = DEFAULT_SEEDS
    weights: tuple[float, ...] | None = None
    scale: float | None = None
    eta: float | None = None
    base: "PolicySpec | None" = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown policy variant {self.variant!r}")
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if self.variant != "random-search" and len(self.seeds) < 1:
            raise ValueError("at least one seed acquisition required")
        if self.variant == "fixed" and len(self.seeds) != 1:
            raise ValueError("fixed policy takes exactly one seed")
        if self.variant == "weighted":
            if self.weights is None or len(self.weights) != len(self.seeds):
                raise ValueError("weights length must match seeds")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or np.any(w > 1) or abs(w.sum() - 1.0) > 1e-9:
                raise ValueError("weights must lie in [0,1] and sum to 1")
            object.__setattr__(self, "weights", tuple(float(x) for x in w))
        if self.variant == "noised":
            if self.base is None:
                raise ValueError("noised policy needs a base policy")
            if self.base.variant == "noised":
                raise ValueError("noised policies do not stack")
            s = DEFAULT_NOISE_SCALE if self.scale is None else self.scale
            if s < 0:
                raise ValueError("noise scale must be >= 0")
            object.__setattr__(self, "scale", float(s))
        if self.variant == "hedge":
            eta = DEFAULT_ETA if self.eta is None else self.eta
            if not eta > 0:
                raise ValueError("hedge eta must be > 0")
            object.__setattr__(self, "eta", float(eta))

    # -- constructors ---------------------------------------------------

    @staticmethod
    def fixed(kind: AcquisitionKind) -> "PolicySpec":
        return PolicySpec("fixed", seeds=(kind,))

    @staticmethod
    def random_choice(seeds: Sequence[AcquisitionKind] = DEFAULT_SEEDS) -> "PolicySpec":
        return PolicySpec("random", seeds=tuple(seeds))

    @staticmethod
    def sequential(seeds: Sequence[AcquisitionKind] = DEFAULT_SEEDS) -> "PolicySpec":
        return PolicySpec("sequential", seeds=tuple(seeds))

    @staticmethod
    def weighted(
        weights: Sequence[float], seeds: Sequence[AcquisitionKind] = DEFAULT_SEEDS
    ) -> "PolicySpec":
        return PolicySpec("weighted", seeds=tuple(seeds), weights=tuple(weights))

    @staticmethod
    def noised(base: "PolicySpec", scale: float = DEFAULT_NOISE_SCALE) -> "PolicySpec":
        return PolicySpec("noised", seeds=base.seeds, scale=scale, base=base)

    @staticmethod
    def hedge(
        seeds: Sequence[AcquisitionKind] = DEFAULT_SEEDS, eta: float = DEFAULT_ETA
    ) -> "PolicySpec":
        return PolicySpec("hedge", seeds=tuple(seeds), eta=eta)

    @staticmethod
    def random_search() -> "PolicySpec":
        return PolicySpec("random-search")

    # -- JSON wire format ------------------------------------------------

    def to_json_dict(self) -> dict:
        out: dict = {"variant": self.variant, "seeds": [_seed_to_json(s) for s in self.seeds]}
        if self.variant == "weighted":
            out["weights"] = list(self.weights)
        if self.variant == "noised":
            out["scale"] = self.scale
            out["base"] = self.base.to_json_dict()
        if self.variant == "hedge":
            out["eta"] = self.eta
        return out

    @staticmethod
    def from_json_dict(obj: dict) -> "PolicySpec":
        if "variant" not in obj:
            raise ValueError("policy JSON needs a 'variant' field")
        seeds = tuple(_seed_from_json(s) for s in obj.get("seeds", [])) or DEFAULT_SEEDS
        base = PolicySpec.from_json_dict(obj["base"]) if "base" in obj else None
        weights = tuple(obj["weights"]) if "weights" in obj else None
        return PolicySpec(
            obj["variant"],
            seeds=seeds,
            weights=weights,
            scale=obj.get("scale"),
            eta=obj.get("eta"),
            base=base,
        )


def _seed_to_json(seed: AcquisitionKind) -> dict:
    if seed.tag == "LCB":
        return {"tag": "LCB", "kappa": seed.kappa}
    return {"tag": seed.tag, "xi": seed.xi}


def _seed_from_json(obj) -> AcquisitionKind:
    if isinstance(obj, str):
        return AcquisitionKind(obj.upper())
    kwargs = {}
    if "kappa" in obj:
        kwargs["kappa"] = float(obj["kappa"])
    if "xi" in obj:
        kwargs["xi"] = float(obj["xi"])
    return AcquisitionKind(obj["tag"].upper(), **kwargs)


@dataclass
class HedgeState:
    """Cumulative per-seed gains and the points each seed last nominated."""

    gains: np.ndarray
    last_nominees: np.ndarray | None = None


def make_hedge_state(policy: PolicySpec) -> HedgeState:
    return HedgeState(gains=np.zeros(len(policy.seeds)))


@dataclass
class PolicyEvaluation:
    """Grid utilities, the trace label, and a pointwise utility for polishing."""

    utilities: np.ndarray
    label: str
    pointwise: Callable[[np.ndarray], np.ndarray] | None = None


def random_choice(seeds: Sequence[AcquisitionKind], rng: np.random.Generator) -> int:
    """Uniform index into the seed list."""
    if len(seeds) < 1:
        raise ValueError("empty seed list")
    return int(rng.integers(len(seeds)))


def _minmax(u: np.ndarray) -> np.ndarray:
    span = np.max(u) - np.min(u)
    if span > 0:
        return (u - np.min(u)) / span
    return np.zeros_like(u)


def weighted_utility(
    per_seed_utilities: Sequence[np.ndarray], weights: Sequence[float]
) -> np.ndarray:
    """Min-max normalize each seed's utilities over the candidates, then blend."""
    if len(per_seed_utilities) != len(weights):
        raise ValueError("one weight per seed utility list required")
    lengths = {len(u) for u in per_seed_utilities}
    if len(lengths) != 1:
        raise ValueError("utility lists must share one length")
    out = np.zeros(lengths.pop())
    for w, u in zip(weights, per_seed_utilities):
        out += w * _minmax(np.asarray(u, dtype=float))
    return out


def noised_utility(
    base_utilities: np.ndarray, scale: float, rng: np.random.Generator
) -> np.ndarray:
    """Perturb utilities with N(0,1) noise scaled to the candidate-set range."""
    if scale < 0:
        raise ValueError("scale must be >= 0")
    u = np.asarray(base_utilities, dtype=float)
    span = np.max(u) - np.min(u)
    if scale == 0 or span == 0:
        return u.copy()
    return u + scale * span * rng.standard_normal(u.shape[0])


def hedge_select(state: HedgeState, eta: float, rng: np.random.Generator) -> int:
    """Sample a seed index with probability proportional to exp(eta * gain)."""
    z = eta * np.asarray(state.gains, dtype=float)
    z = z - np.max(z)
    p = np.exp(z)
    p /= p.sum()
    return int(rng.choice(len(p), p=p))


def hedge_update(state: HedgeState, model_after_eval: GPModel) -> HedgeState:
    """Reward each seed by the negated posterior mean at its nominee."""
    if state.last_nominees is None:
        raise ValueError("hedge state has no nominees for this iteration")
    mu, _ = predict_batch(model_after_eval, state.last_nominees)
    return HedgeState(gains=state.gains - mu, last_nominees=None)


def _single_seed_eval(
    kind: AcquisitionKind,
    model: GPModel,
    inc: Incumbent,
    mu: np.ndarray,
    sigma: np.ndarray,
) -> PolicyEvaluation:
    u = utility_values(kind, mu, sigma, inc.y_best)

    def pointwise(X: np.ndarray) -> np.ndarray:
        m, s = predict_batch(model, X)
        return utility_values(kind, m, s, inc.y_best)

    return PolicyEvaluation(u, kind.tag, pointwise)


def evaluate_for_iteration(
    policy: PolicySpec,
    iteration: int,
    model: GPModel,
    inc: Incumbent,
    candidates: np.ndarray,
    rng: np.random.Generator,
    hedge: HedgeState | None = None,
) -> PolicyEvaluation:
    """Utilities over the candidate set for this iteration's generated acquisition.

    RNG draws happen in a fixed order (choice index, then perturbation noise)
    so full runs are reproducible bit for bit under a fixed seed.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] < 1:
        raise ValueError("candidates must be non-empty")
    mu, sigma = predict_batch(model, candidates)
    return _evaluate(policy, iteration, model, inc, candidates, mu, sigma, rng, hedge)


def _evaluate(
    policy: PolicySpec,
    iteration: int,
    model: GPModel,
    inc: Incumbent,
    candidates: np.ndarray,
    mu: np.ndarray,
    sigma: np.ndarray,
    rng: np.random.Generator,
    hedge: HedgeState | None,
) -> PolicyEvaluation:
    if policy.variant == "fixed":
        return _single_seed_eval(policy.seeds[0], model, inc, mu, sigma)

    if policy.variant == "random":
        idx = random_choice(policy.seeds, rng)
        return _single_seed_eval(policy.seeds[idx], model, inc, mu, sigma)

    if policy.variant == "sequential":
        idx = iteration % len(policy.seeds)
        return _single_seed_eval(policy.seeds[idx], model, inc, mu, sigma)

    if policy.variant == "weighted":
        per_seed = [utility_values(k, mu, sigma, inc.y_best) for k in policy.seeds]
        combined = weighted_utility(per_seed, policy.weights)
        # Normalizers frozen from the grid so the polish target is consistent.
        stats = [(float(np.min(u)), float(np.max(u))) for u in per_seed]

        def pointwise(X: np.ndarray) -> np.ndarray:
            m, s = predict_batch(model, X)
            total = np.zeros(X.shape[0])
            for w, kind, (lo, hi) in zip(policy.weights, policy.seeds, stats):
                u = utility_values(kind, m, s, inc.y_best)
                total += w * ((u - lo) / (hi - lo) if hi > lo else np.zeros_like(u))
            return total

        return PolicyEvaluation(combined, "weighted", pointwise)

    if policy.variant == "noised":
        base_eval = _evaluate(
            policy.base, iteration, model, inc, candidates, mu, sigma, rng, hedge
        )
        u = noised_utility(base_eval.utilities, policy.scale, rng)
        # Polishing climbs the un-noised criterion.
        return PolicyEvaluation(u, f"noised({base_eval.label})", base_eval.pointwise)

    if policy.variant == "hedge":
        if hedge is None:
            raise ValueError("hedge policy requires a HedgeState")
        per_seed = [utility_values(k, mu, sigma, inc.y_best) for k in policy.seeds]
        nominees = np.stack([candidates[int(np.argmax(u))] for u in per_seed])
        hedge.last_nominees = nominees
        idx = hedge_select(hedge, policy.eta, rng)
        kind = policy.seeds[idx]

        def pointwise(X: np.ndarray) -> np.ndarray:
            m, s = predict_batch(model, X)
            return utility_values(kind, m, s, inc.y_best)

        return PolicyEvaluation(per_seed[idx], kind.tag, pointwise)

    raise ValueError(f"{policy.variant!r} policy is handled by the run driver")


def utilities_for_iteration(
    policy: PolicySpec,
    iteration: int,
    model: GPModel,
    inc: Incumbent,
    candidates: np.ndarray,
    rng: np.random.Generator,
    hedge: HedgeState | None = None,
) -> tuple[np.ndarray, str]:
    """Utilities aligned with candidates plus the label of the seed(s) used."""
    ev = evaluate_for_iteration(policy, iteration, model, inc, candidates, rng, hedge)
    return ev.utilities, ev.label


def policy_name(policy: PolicySpec) -> str:
    """Stable short name used in CSV/JSON report keys."""
    if policy.variant == "fixed":
        return policy.seeds[0].tag.lower()
    if policy.variant == "random":
        return "rand"
    if policy.variant == "sequential":
        return "seq"
    if policy.variant == "weighted":
        return "weighted(" + ",".join(f"{w:g}" for w in policy.weights) + ")"
    if policy.variant == "noised":
        return f"noised({policy_name(policy.base)},{policy.scale:g})"
    if policy.variant == "hedge":
        return f"hedge(eta={policy.eta:g})"
    return "random-search"
