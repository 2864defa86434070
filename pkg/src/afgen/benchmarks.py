"""Analytic benchmark objectives with known optima, plus the noise wrapper.

Coefficients are the standard literature tables; the test suite guards the
transcription by checking the declared optima and sampling below-minimum
violations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bo import Objective

__all__ = [
    "BenchmarkSpec",
    "branin",
    "hartmann3",
    "rastrigin",
    "with_noise",
    "get_benchmark",
    "benchmark_names",
    "make_objective",
]

BRANIN_BOUNDS = np.array([[-5.0, 10.0], [0.0, 15.0]])
HARTMANN3_BOUNDS = np.array([[0.0, 1.0]] * 3)
RASTRIGIN_BOUNDS = np.array([[-5.12, 5.12]] * 3)

_H3_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_H3_A = np.array(
    [
        [3.0, 10.0, 30.0],
        [0.1, 10.0, 35.0],
        [3.0, 10.0, 30.0],
        [0.1, 10.0, 35.0],
    ]
)
_H3_P = 1e-4 * np.array(
    [
        [3689.0, 1170.0, 2673.0],
        [4699.0, 4387.0, 7470.0],
        [1091.0, 8732.0, 5547.0],
        [381.0, 5743.0, 8828.0],
    ]
)


@dataclass(frozen=True)
class BenchmarkSpec:
    """One analytic objective: callable, box, and its known global minimum."""

    name: str
    dim: int
    bounds: np.ndarray
    f_star: float
    x_star: tuple[tuple[float, ...], ...]
    fn: Callable[[np.ndarray], float]


def _check_bounds(x: np.ndarray, bounds: np.ndarray, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != bounds.shape[0]:
        raise ValueError(f"{name} expects a {bounds.shape[0]}-vector")
    slack = 1e-9 * (bounds[:, 1] - bounds[:, 0])
    if np.any(x < bounds[:, 0] - slack) or np.any(x > bounds[:, 1] + slack):
        raise ValueError(f"{name} input outside bounds: {x}")
    return x


def branin(x: np.ndarray) -> float:
    """Branin function on x1 in [-5, 10], x2 in [0, 15]."""
    x = _check_bounds(x, BRANIN_BOUNDS, "branin")
    a = 1.0
    b = 5.1 / (4.0 * np.pi**2)
    c = 5.0 / np.pi
    r = 6.0
    s = 10.0
    t = 1.0 / (8.0 * np.pi)
    return float(
        a * (x[1] - b * x[0] ** 2 + c * x[0] - r) ** 2 + s * (1.0 - t) * np.cos(x[0]) + s
    )


def hartmann3(x: np.ndarray) -> float:
    """3-dimensional Hartmann function on the unit cube."""
    x = _check_bounds(x, HARTMANN3_BOUNDS, "hartmann3")
    inner = np.sum(_H3_A * (x[None, :] - _H3_P) ** 2, axis=1)
    return float(-np.sum(_H3_ALPHA * np.exp(-inner)))


def rastrigin(x: np.ndarray) -> float:
    """Rastrigin function on [-5.12, 5.12]^d (d = 3 here)."""
    x = _check_bounds(x, RASTRIGIN_BOUNDS, "rastrigin")
    return float(10.0 * x.shape[0] + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x)))


_REGISTRY = {
    "branin": BenchmarkSpec(
        "branin",
        2,
        BRANIN_BOUNDS,
        0.397887,
        ((-np.pi, 12.275), (np.pi, 2.275), (9.42478, 2.475)),
        branin,
    ),
    "hartmann3": BenchmarkSpec(
        "hartmann3",
        3,
        HARTMANN3_BOUNDS,
        -3.86278,
        ((0.114614, 0.555649, 0.852547),),
        hartmann3,
    ),
    "rastrigin3": BenchmarkSpec(
        "rastrigin3",
        3,
        RASTRIGIN_BOUNDS,
        0.0,
        ((0.0, 0.0, 0.0),),
        rastrigin,
    ),
}


def benchmark_names() -> list[str]:
    return sorted(_REGISTRY)


def get_benchmark(name: str) -> BenchmarkSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown benchmark {name!r}; have {benchmark_names()}") from None


def _as_objective(spec: BenchmarkSpec) -> Objective:
    def eval_unit(x01: np.ndarray) -> float:
        lo = spec.bounds[:, 0]
        hi = spec.bounds[:, 1]
        return spec.fn(lo + np.asarray(x01, dtype=float) * (hi - lo))

    return Objective(eval_unit, spec.bounds.copy(), spec.dim, spec.f_star)


def with_noise(objective: Objective, noise_std: float, rng: np.random.Generator) -> Objective:
    """Add i.i.d. N(0, noise_std^2) observation noise to every evaluation.

    The wrapper owns its generator; give each repetition its own wrapper.
    A zero noise_std returns the objective unchanged.
    """
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    if noise_std == 0:
        return objective

    inner = objective.eval

    def noisy(x01: np.ndarray) -> float:
        return float(inner(x01) + noise_std * rng.standard_normal())

    return Objective(noisy, objective.bounds.copy(), objective.dim,
                     objective.known_optimum, serial=True)


def make_objective(
    name: str, noise_std: float = 0.0, rng: np.random.Generator | None = None
) -> Objective:
    """Benchmark objective by registry name, optionally noise-wrapped."""
    obj = _as_objective(get_benchmark(name))
    if noise_std > 0:
        if rng is None:
            raise ValueError("noise_std > 0 requires an rng")
        obj = with_noise(obj, noise_std, rng)
    return obj
