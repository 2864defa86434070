"""Gaussian-process regression over the unit box with ML hyperparameter fitting.

The surrogate works on normalized inputs (each coordinate in [0, 1]) and
standardized outputs (zero mean, unit variance). Predictions are mapped back
to raw output units. The kernel is Matern-5/2 with ARD lengthscales, and the
reported predictive standard deviation is that of the latent function, i.e.
it excludes observation noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

__all__ = [
    "KernelParams",
    "Dataset",
    "GPModel",
    "PosteriorPrediction",
    "GPNumericsError",
    "FitError",
    "kernel_eval",
    "kernel_matrix",
    "log_marginal_likelihood",
    "log_marginal_likelihood_grad",
    "build_model",
    "fit",
    "predict",
    "predict_batch",
    "dedup_point",
]

SQRT5 = np.sqrt(5.0)

# PSD repair: base diagonal jitter is relative to the kernel amplitude and is
# escalated tenfold on Cholesky failure, up to an absolute cap.
BASE_JITTER_FACTOR = 1e-10
MAX_JITTER = 1e-4

# Duplicate inputs closer than this (max-norm) would make K singular.
DUPLICATE_TOL = 1e-10
DEDUP_NUDGE = 1e-8

# Log-uniform initialization ranges for the ML restarts.
LENGTHSCALE_INIT = (1e-2, 1e1)
SIGNAL_VAR_INIT = (1e-2, 1e1)
NOISE_VAR_INIT = (1e-6, 1e-1)

# Box constraints for the local search, slightly wider than the init ranges.
LENGTHSCALE_BOUNDS = (1e-3, 1e2)
SIGNAL_VAR_BOUNDS = (1e-4, 1e3)
NOISE_VAR_BOUNDS = (1e-9, 1e1)


class GPNumericsError(RuntimeError):
    """Cholesky factorization failed even after maximal jitter escalation."""


class FitError(RuntimeError):
    """Every hyperparameter restart failed numerically."""


@dataclass(frozen=True)
class KernelParams:
    """Kernel hyperparameters in log space.

    ``log_lengthscales`` has one entry per input dimension (lengthscale in
    normalized-input units); ``log_noise_var`` is the log observation-noise
    variance in standardized-output units.
    """

    log_lengthscales: np.ndarray
    log_signal_var: float
    log_noise_var: float

    def __post_init__(self):
        lls = np.atleast_1d(np.asarray(self.log_lengthscales, dtype=float))
        object.__setattr__(self, "log_lengthscales", lls)
        if not (np.all(np.isfinite(lls)) and np.isfinite(self.log_signal_var)
                and np.isfinite(self.log_noise_var)):
            raise ValueError("kernel parameters must be finite")

    @property
    def dim(self) -> int:
        return self.log_lengthscales.shape[0]

    @property
    def lengthscales(self) -> np.ndarray:
        return np.exp(self.log_lengthscales)

    @property
    def signal_var(self) -> float:
        return float(np.exp(self.log_signal_var))

    @property
    def noise_var(self) -> float:
        return float(np.exp(self.log_noise_var))

    def as_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.log_lengthscales, [self.log_signal_var, self.log_noise_var]]
        )

    @staticmethod
    def from_vector(vec: np.ndarray) -> "KernelParams":
        vec = np.asarray(vec, dtype=float)
        return KernelParams(vec[:-2].copy(), float(vec[-2]), float(vec[-1]))


@dataclass(frozen=True)
class Dataset:
    """Observed data in normalized-input / standardized-output form.

    ``outputs_raw == outputs_std * std_scale + std_offset`` elementwise.
    """

    inputs: np.ndarray
    outputs_raw: np.ndarray
    outputs_std: np.ndarray
    std_offset: float
    std_scale: float

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    @staticmethod
    def from_observations(
        inputs: np.ndarray,
        outputs_raw: np.ndarray,
        std_offset: float | None = None,
        std_scale: float | None = None,
    ) -> "Dataset":
        """Standardize raw observations into a Dataset.

        When offset/scale are omitted they are computed from the outputs
        (population mean/std; constant outputs fall back to scale 1).
        Inputs must already be free of near-duplicate rows; use
        :func:`dedup_point` before appending points.
        """
        X = np.atleast_2d(np.asarray(inputs, dtype=float))
        y = np.asarray(outputs_raw, dtype=float).ravel()
        if X.shape[0] != y.shape[0]:
            raise ValueError("inputs and outputs length mismatch")
        if X.shape[0] < 1:
            raise ValueError("need at least one observation")
        if np.any(X < -1e-12) or np.any(X > 1 + 1e-12):
            raise ValueError("inputs must lie in the unit box")
        if not np.all(np.isfinite(y)):
            raise ValueError("outputs must be finite")
        for i in range(1, X.shape[0]):
            gap = np.max(np.abs(X[:i] - X[i]), axis=1)
            if np.any(gap < DUPLICATE_TOL):
                raise ValueError("near-duplicate input rows; dedup before building")
        if std_offset is None:
            std_offset = float(np.mean(y))
        if std_scale is None:
            scale = float(np.std(y))
            std_scale = scale if scale > 1e-12 else 1.0
        if std_scale <= 0:
            raise ValueError("std_scale must be strictly positive")
        y_std = (y - std_offset) / std_scale
        return Dataset(X, y, y_std, float(std_offset), float(std_scale))


@dataclass(frozen=True)
class GPModel:
    """Fitted surrogate: hyperparameters plus the precomputed Cholesky pieces.

    Immutable after construction; safe to share across threads.
    """

    params: KernelParams
    data: Dataset
    chol_factor: np.ndarray
    solve_vec: np.ndarray
    jitter: float


@dataclass(frozen=True)
class PosteriorPrediction:
    """Posterior (mu, sigma) at one point, in raw output units."""

    mu: float
    sigma: float


def dedup_point(existing: np.ndarray, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Nudge ``x`` away from any row of ``existing`` closer than the duplicate tolerance."""
    x = np.asarray(x, dtype=float).copy()
    existing = np.atleast_2d(existing) if existing is not None and len(existing) else None
    if existing is None:
        return x
    while np.any(np.max(np.abs(existing - x), axis=1) < DUPLICATE_TOL):
        x = np.clip(x + rng.uniform(-DEDUP_NUDGE, DEDUP_NUDGE, size=x.shape), 0.0, 1.0)
    return x


def _scaled(params: KernelParams, X: np.ndarray) -> np.ndarray:
    return np.atleast_2d(X) / params.lengthscales


def kernel_matrix(params: KernelParams, X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """Matern-5/2 ARD cross-covariance matrix between two point sets."""
    A = _scaled(params, X1)
    B = _scaled(params, X2)
    if A.shape[1] != params.dim or B.shape[1] != params.dim:
        raise ValueError("input dimension does not match kernel lengthscales")
    sq = np.maximum(
        np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T,
        0.0,
    )
    r = np.sqrt(sq)
    return params.signal_var * (1.0 + SQRT5 * r + (5.0 / 3.0) * sq) * np.exp(-SQRT5 * r)


def kernel_eval(params: KernelParams, x1: np.ndarray, x2: np.ndarray) -> float:
    """Matern-5/2 ARD covariance between two points."""
    x1 = np.asarray(x1, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    if x1.shape[0] != x2.shape[0] or x1.shape[0] != params.dim:
        raise ValueError("kernel_eval dimension mismatch")
    return float(kernel_matrix(params, x1[None, :], x2[None, :])[0, 0])


def _chol_with_jitter(K_noisy: np.ndarray, signal_var: float) -> tuple[np.ndarray, float]:
    """Cholesky of K with escalating diagonal jitter; raises GPNumericsError past the cap."""
    n = K_noisy.shape[0]
    jitter = BASE_JITTER_FACTOR * signal_var
    last_err: Exception | None = None
    while jitter <= MAX_JITTER:
        try:
            L = cholesky(K_noisy + jitter * np.eye(n), lower=True)
            return L, jitter
        except np.linalg.LinAlgError as err:  # pragma: no cover - rare path
            last_err = err
            jitter *= 10.0
    raise GPNumericsError(f"Cholesky failed up to jitter {MAX_JITTER}: {last_err}")


def _factorize(params: KernelParams, data: Dataset) -> tuple[np.ndarray, float]:
    K = kernel_matrix(params, data.inputs, data.inputs)
    K[np.diag_indices_from(K)] += params.noise_var
    return _chol_with_jitter(K, params.signal_var)


def build_model(params: KernelParams, data: Dataset) -> GPModel:
    """Assemble a GPModel at fixed hyperparameters (no fitting)."""
    if params.dim != data.dim:
        raise ValueError("params dimension does not match data")
    L, jitter = _factorize(params, data)
    solve_vec = cho_solve((L, True), data.outputs_std)
    return GPModel(params, data, L, solve_vec, jitter)


def log_marginal_likelihood(params: KernelParams, data: Dataset) -> float:
    """Log marginal likelihood of the standardized outputs under the kernel."""
    L, _ = _factorize(params, data)
    alpha = cho_solve((L, True), data.outputs_std)
    return float(
        -0.5 * data.outputs_std @ alpha
        - np.sum(np.log(np.diag(L)))
        - 0.5 * data.n * np.log(2.0 * np.pi)
    )


def log_marginal_likelihood_grad(params: KernelParams, data: Dataset) -> tuple[float, np.ndarray]:
    """LML and its gradient w.r.t. (log_lengthscales, log_signal_var, log_noise_var).

    Standard trace identity: dL/dtheta = 0.5 tr((alpha alpha^T - K^{-1}) dK/dtheta).
    The jitter term's dependence on signal_var is ignored (factor 1e-10).
    """
    X = data.inputs
    n, d = X.shape
    S = _scaled(params, X)
    diff = S[:, None, :] - S[None, :, :]
    sq_per_dim = diff * diff              # (n, n, d), squared scaled distances
    sq = np.sum(sq_per_dim, axis=2)
    r = np.sqrt(np.maximum(sq, 0.0))
    expo = np.exp(-SQRT5 * r)
    sv = params.signal_var
    Km = sv * (1.0 + SQRT5 * r + (5.0 / 3.0) * sq) * expo

    K = Km.copy()
    K[np.diag_indices_from(K)] += params.noise_var
    L, _ = _chol_with_jitter(K, sv)
    y = data.outputs_std
    alpha = cho_solve((L, True), y)
    lml = float(-0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2.0 * np.pi))

    Kinv = cho_solve((L, True), np.eye(n))
    W = np.outer(alpha, alpha) - Kinv

    grad = np.empty(d + 2)
    # dK/dlog l_j = (5/3) sv (1 + sqrt5 r) exp(-sqrt5 r) * sq_per_dim[..., j]
    base = (5.0 / 3.0) * sv * (1.0 + SQRT5 * r) * expo
    for j in range(d):
        grad[j] = 0.5 * np.sum(W * (base * sq_per_dim[:, :, j]))
    grad[d] = 0.5 * np.sum(W * Km)                             # d/dlog signal_var
    grad[d + 1] = 0.5 * params.noise_var * np.trace(W)         # d/dlog noise_var
    return lml, grad


def _draw_initial(dim: int, rng: np.random.Generator) -> np.ndarray:
    lo_l, hi_l = np.log(LENGTHSCALE_INIT)
    lo_s, hi_s = np.log(SIGNAL_VAR_INIT)
    lo_n, hi_n = np.log(NOISE_VAR_INIT)
    vec = np.empty(dim + 2)
    vec[:dim] = rng.uniform(lo_l, hi_l, size=dim)
    vec[dim] = rng.uniform(lo_s, hi_s)
    vec[dim + 1] = rng.uniform(lo_n, hi_n)
    return vec


def fit(data: Dataset, restarts: int = 10, rng: np.random.Generator | None = None) -> GPModel:
    """Fit kernel hyperparameters by maximum likelihood with multi-start L-BFGS-B.

    Initial points are drawn log-uniform; the returned model attains the best
    LML over everything evaluated (all initial candidates and all local
    optima), with ties broken by lowest restart index.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    d = data.dim
    bounds = (
        [tuple(np.log(LENGTHSCALE_BOUNDS))] * d
        + [tuple(np.log(SIGNAL_VAR_BOUNDS))]
        + [tuple(np.log(NOISE_VAR_BOUNDS))]
    )
    initials = [_draw_initial(d, rng) for _ in range(restarts)]

    def objective(vec: np.ndarray):
        try:
            lml, grad = log_marginal_likelihood_grad(KernelParams.from_vector(vec), data)
        except GPNumericsError:
            return np.inf, np.zeros_like(vec)
        if not np.isfinite(lml):
            return np.inf, np.zeros_like(vec)
        return -lml, -grad

    best_lml = -np.inf
    best_vec: np.ndarray | None = None
    last_diag = "no restart evaluated"
    for vec0 in initials:
        neg0, _ = objective(vec0)
        if np.isfinite(neg0) and -neg0 > best_lml:
            best_lml, best_vec = -neg0, vec0
        try:
            res = minimize(
                objective,
                vec0,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": 100, "ftol": 1e-8, "gtol": 1e-6},
            )
        except (np.linalg.LinAlgError, GPNumericsError, ValueError) as err:
            last_diag = f"restart failed: {err}"
            continue
        if np.isfinite(res.fun) and -res.fun > best_lml:
            best_lml, best_vec = -float(res.fun), res.x
    if best_vec is None:
        raise FitError(last_diag)
    return build_model(KernelParams.from_vector(best_vec), data)


def predict(model: GPModel, x: np.ndarray) -> PosteriorPrediction:
    """Posterior mean/std of the latent function at one point, in raw units."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != model.data.dim:
        raise ValueError("predict dimension mismatch")
    mu, sigma = predict_batch(model, x[None, :])
    return PosteriorPrediction(float(mu[0]), float(sigma[0]))


def predict_batch(model: GPModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized posterior over rows of X; returns (mu, sigma) in raw units."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.data.dim:
        raise ValueError("predict dimension mismatch")
    k_cross = kernel_matrix(model.params, model.data.inputs, X)
    mu_std = k_cross.T @ model.solve_vec
    V = solve_triangular(model.chol_factor, k_cross, lower=True)
    var_std = np.maximum(model.params.signal_var - np.sum(V * V, axis=0), 0.0)
    mu = mu_std * model.data.std_scale + model.data.std_offset
    sigma = np.sqrt(var_std) * model.data.std_scale
    return mu, sigma
