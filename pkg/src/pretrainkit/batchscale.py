"""Gradient-noise and batch-size tradeoff analysis.

The 1/B variance law is reproduced on a least-squares regression problem with
Gaussian label noise, chosen because its per-example gradient variance is
analytically known: evaluated at the noiseless optimum, the gradient of
example i is ``-noise_i * x_i``, whose per-coordinate variance equals the
label-noise variance.  The tradeoff arithmetic compares iteration counts and
token budgets across batch sizes trained to a matched loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ToyProblem",
    "make_toy_problem",
    "BatchRun",
    "TradeoffRow",
    "PowerFit",
    "gradient_variance",
    "gradient_variance_curve",
    "fit_inverse_scaling",
    "tradeoff",
]


@dataclass(frozen=True)
class ToyProblem:
    """Least-squares regression with per-example loss 0.5*(x_i . theta - y_i)^2."""

    features: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,)
    theta: np.ndarray  # (d,) evaluation point

    def __post_init__(self) -> None:
        n, d = self.features.shape
        if self.labels.shape != (n,):
            raise ValueError(f"labels shape {self.labels.shape} != ({n},)")
        if self.theta.shape != (d,):
            raise ValueError(f"theta shape {self.theta.shape} != ({d},)")

    @property
    def n_examples(self) -> int:
        return self.features.shape[0]

    def per_example_gradients(self) -> np.ndarray:
        """Gradient of every example's loss at ``theta``; shape (n, d)."""
        residuals = self.features @ self.theta - self.labels
        return residuals[:, None] * self.features

    def full_gradient(self) -> np.ndarray:
        """Mean of the per-example gradients."""
        return self.per_example_gradients().mean(axis=0)


def make_toy_problem(
    n_examples: int = 4096,
    dim: int = 8,
    noise_std: float = 1.0,
    seed: int = 0,
) -> ToyProblem:
    """Gaussian-design regression evaluated at the noiseless optimum.

    ``y = X @ theta_true + noise``, and the problem is evaluated at
    ``theta_true`` so the per-example gradient is pure label noise with
    per-coordinate variance ``noise_std**2``.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.standard_normal((n_examples, dim))
    theta_true = rng.standard_normal(dim)
    y = x @ theta_true + noise_std * rng.standard_normal(n_examples)
    return ToyProblem(features=x, labels=y, theta=theta_true)


def gradient_variance(
    problem: ToyProblem, batch_size: int, trials: int, seed: int
) -> float:
    """Empirical variance of the minibatch gradient, averaged over coordinates.

    Each trial draws one batch without replacement and computes its mean
    gradient; the variance is taken across trials per coordinate and then
    averaged.  Batch indices are sorted before reduction so the summation
    order is deterministic: trials are independent and could run in parallel,
    and the full-batch case is bit-identical across trials (variance exactly
    zero).
    """
    n = problem.n_examples
    if batch_size > n:
        raise ValueError(f"batch_size {batch_size} exceeds dataset size {n}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    grads = problem.per_example_gradients()
    rng = np.random.Generator(np.random.PCG64(seed))
    means = np.empty((trials, grads.shape[1]))
    for t in range(trials):
        idx = np.sort(rng.choice(n, size=batch_size, replace=False))
        means[t] = grads[idx].mean(axis=0)
    return float(means.var(axis=0, ddof=1).mean())


def gradient_variance_curve(
    problem: ToyProblem, batch_sizes: list[int], trials: int, seed: int
) -> list[tuple[int, float]]:
    """(batch_size, variance) pairs over a sweep, one derived seed per size."""
    return [
        (b, gradient_variance(problem, b, trials, seed + 7919 * i))
        for i, b in enumerate(batch_sizes)
    ]


@dataclass(frozen=True)
class PowerFit:
    """Least-squares power law ``value ~ coefficient * x**exponent``."""

    exponent: float
    coefficient: float
    residual_rms: float  # rms of log-space fit residuals


def fit_inverse_scaling(points: list[tuple[float, float]]) -> PowerFit:
    """Fit a power law to (batch_size, variance) points in log-log space."""
    if len(points) < 3:
        raise ValueError(f"need at least 3 points, got {len(points)}")
    b = np.array([p[0] for p in points], dtype=np.float64)
    v = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(b <= 0) or np.any(v <= 0):
        raise ValueError("batch sizes and variances must be positive")
    logb, logv = np.log(b), np.log(v)
    slope, intercept = np.polyfit(logb, logv, 1)
    resid = logv - (slope * logb + intercept)
    return PowerFit(
        exponent=float(slope),
        coefficient=float(np.exp(intercept)),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )


@dataclass(frozen=True)
class BatchRun:
    """A training run: batch size in tokens and total tokens to a matched loss."""

    batch_tokens: int
    tokens_to_match: float

    def __post_init__(self) -> None:
        if self.batch_tokens <= 0:
            raise ValueError(f"batch_tokens must be positive, got {self.batch_tokens}")
        if self.tokens_to_match <= 0:
            raise ValueError(f"tokens_to_match must be positive, got {self.tokens_to_match}")

    @property
    def iterations(self) -> float:
        return self.tokens_to_match / self.batch_tokens


@dataclass(frozen=True)
class TradeoffRow:
    batch_tokens: int
    tokens_to_match: float
    iterations: float
    iteration_speedup: float  # baseline iterations / candidate iterations
    token_overhead: float  # candidate tokens / baseline tokens


def tradeoff(baseline: BatchRun, candidates: list[BatchRun]) -> list[TradeoffRow]:
    """Iteration speedup and token overhead of each candidate batch size.

    Scale-invariant: multiplying every batch and token count by a constant
    leaves speedups and overheads unchanged.
    """
    rows = []
    for c in candidates:
        rows.append(
            TradeoffRow(
                batch_tokens=c.batch_tokens,
                tokens_to_match=c.tokens_to_match,
                iterations=c.iterations,
                iteration_speedup=baseline.iterations / c.iterations,
                token_overhead=c.tokens_to_match / baseline.tokens_to_match,
            )
        )
    return rows
