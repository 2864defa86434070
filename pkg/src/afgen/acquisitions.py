"""Seed acquisition functions: PI, EI and LCB as utilities to maximize.

The whole library minimizes the objective, so every acquisition is expressed
as a utility whose argmax is the point to evaluate next; LCB is negated
(kappa*sigma - mu) to fit the single argmax code path. Exact sigma = 0 inputs
take the analytic limits instead of an epsilon floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .gp import PosteriorPrediction

__all__ = [
    "PosteriorPrediction",
    "Incumbent",
    "AcquisitionKind",
    "PI",
    "EI",
    "LCB",
    "DEFAULT_SEEDS",
    "pi_utility",
    "ei_utility",
    "lcb_utility",
    "pi_values",
    "ei_values",
    "lcb_values",
    "utility_values",
    "evaluate_batch",
]

DEFAULT_KAPPA = 1.96
DEFAULT_XI = 0.01


@dataclass(frozen=True)
class Incumbent:
    """Best (minimum) observed raw output so far and where it was seen."""

    y_best: float
    x_best: np.ndarray


@dataclass(frozen=True)
class AcquisitionKind:
    """One of the seed acquisitions with its parameter."""

    tag: str
    kappa: float = DEFAULT_KAPPA
    xi: float = DEFAULT_XI

    def __post_init__(self):
        if self.tag not in ("PI", "EI", "LCB"):
            raise ValueError(f"unknown acquisition tag {self.tag!r}")
        if self.tag == "LCB" and not self.kappa > 0:
            raise ValueError("LCB requires kappa > 0")
        if self.tag in ("PI", "EI") and self.xi < 0:
            raise ValueError("PI/EI require xi >= 0")


PI = AcquisitionKind("PI")
EI = AcquisitionKind("EI")
LCB = AcquisitionKind("LCB")
DEFAULT_SEEDS = (PI, EI, LCB)


def pi_values(mu: np.ndarray, sigma: np.ndarray, y_best: float, xi: float = 0.0) -> np.ndarray:
    """Probability of improving on y_best by at least xi, elementwise."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = np.empty_like(mu)
    pos = sigma > 0
    out[pos] = norm.cdf((y_best - xi - mu[pos]) / sigma[pos])
    out[~pos] = (mu[~pos] < y_best - xi).astype(float)
    return out


def ei_values(mu: np.ndarray, sigma: np.ndarray, y_best: float, xi: float = 0.0) -> np.ndarray:
    """Expected improvement over y_best (minus xi), elementwise."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = np.empty_like(mu)
    pos = sigma > 0
    gamma = (y_best - xi - mu[pos]) / sigma[pos]
    out[pos] = sigma[pos] * (gamma * norm.cdf(gamma) + norm.pdf(gamma))
    out[~pos] = np.maximum(y_best - xi - mu[~pos], 0.0)
    return out


def lcb_values(mu: np.ndarray, sigma: np.ndarray, kappa: float) -> np.ndarray:
    """Negated lower confidence bound kappa*sigma - mu, elementwise."""
    if not kappa > 0:
        raise ValueError("kappa must be > 0")
    return kappa * np.asarray(sigma, dtype=float) - np.asarray(mu, dtype=float)


def pi_utility(pred: PosteriorPrediction, inc: Incumbent, xi: float = 0.0) -> float:
    if xi < 0:
        raise ValueError("xi must be >= 0")
    return float(pi_values(np.array([pred.mu]), np.array([pred.sigma]), inc.y_best, xi)[0])


def ei_utility(pred: PosteriorPrediction, inc: Incumbent, xi: float = 0.0) -> float:
    if xi < 0:
        raise ValueError("xi must be >= 0")
    return float(ei_values(np.array([pred.mu]), np.array([pred.sigma]), inc.y_best, xi)[0])


def lcb_utility(pred: PosteriorPrediction, kappa: float) -> float:
    return float(lcb_values(np.array([pred.mu]), np.array([pred.sigma]), kappa)[0])


def utility_values(
    kind: AcquisitionKind, mu: np.ndarray, sigma: np.ndarray, y_best: float
) -> np.ndarray:
    """Vectorized utility of one seed acquisition over (mu, sigma) arrays."""
    if kind.tag == "PI":
        return pi_values(mu, sigma, y_best, kind.xi)
    if kind.tag == "EI":
        return ei_values(mu, sigma, y_best, kind.xi)
    return lcb_values(mu, sigma, kind.kappa)


def evaluate_batch(
    kind: AcquisitionKind, preds: list[PosteriorPrediction], inc: Incumbent
) -> list[float]:
    """Elementwise utilities for a batch of predictions, in order."""
    if not preds:
        raise ValueError("preds must be non-empty")
    mu = np.array([p.mu for p in preds])
    sigma = np.array([p.sigma for p in preds])
    return [float(v) for v in utility_values(kind, mu, sigma, inc.y_best)]
