"""Utility families: square-root sum, quadratic sum, piecewise affine.

Each family evaluates a scalar utility on nonnegative vectors and exposes its
gradient (a subgradient for the piecewise-affine family).  `value_batch` is
the unvalidated vectorized path used by Monte-Carlo loops; callers are
responsible for clipping inputs into the domain first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check_vector(beta: np.ndarray, m: int | None = None) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1:
        raise ValueError("expected a 1-d vector")
    if m is not None and beta.shape[0] != m:
        raise ValueError(f"dimension mismatch: expected {m}, got {beta.shape[0]}")
    if np.any(beta < 0):
        raise ValueError("negative component outside utility domain")
    return beta


@dataclass(frozen=True)
class SqrtSumUtility:
    """u(b) = sum_i sqrt(b_i); strictly concave, singular gradient at 0."""

    name = "sqrt_sum"
    is_concave = True

    def value(self, beta: np.ndarray) -> float:
        beta = _check_vector(beta)
        return float(np.sqrt(beta).sum())

    def value_batch(self, points: np.ndarray) -> np.ndarray:
        return np.sqrt(points).sum(axis=-1)

    def gradient(self, beta: np.ndarray) -> np.ndarray:
        beta = _check_vector(beta)
        if np.any(beta == 0):
            raise ValueError("gradient undefined at zero component")
        return 1.0 / (2.0 * np.sqrt(beta))

    def gradient_batch(self, points: np.ndarray) -> np.ndarray:
        return 1.0 / (2.0 * np.sqrt(points))


@dataclass(frozen=True)
class QuadSumUtility:
    """u(b) = sum_i b_i^2; convex, so budget-line maximizers sit at vertices."""

    name = "quad_sum"
    is_concave = False

    def value(self, beta: np.ndarray) -> float:
        beta = _check_vector(beta)
        return float((beta * beta).sum())

    def value_batch(self, points: np.ndarray) -> np.ndarray:
        return (points * points).sum(axis=-1)

    def gradient(self, beta: np.ndarray) -> np.ndarray:
        beta = _check_vector(beta)
        return 2.0 * beta

    def gradient_batch(self, points: np.ndarray) -> np.ndarray:
        return 2.0 * points


@dataclass(frozen=True)
class PiecewiseAffineUtility:
    """u(b) = min_t { u_t + lambda_t * a_t . (b - b_t) }.

    The concave lower envelope of K affine pieces anchored at the probe and
    response vectors of a rationalizable dataset; monotone because every
    lambda_t and probe is strictly positive.
    """

    u_vals: np.ndarray
    lambda_vals: np.ndarray
    probes: np.ndarray
    responses: np.ndarray

    name = "piecewise_affine"
    is_concave = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "u_vals", np.asarray(self.u_vals, dtype=float))
        object.__setattr__(self, "lambda_vals", np.asarray(self.lambda_vals, dtype=float))
        object.__setattr__(self, "probes", np.atleast_2d(np.asarray(self.probes, dtype=float)))
        object.__setattr__(
            self, "responses", np.atleast_2d(np.asarray(self.responses, dtype=float))
        )
        k = self.u_vals.shape[0]
        if not (self.lambda_vals.shape[0] == self.probes.shape[0] == self.responses.shape[0] == k):
            raise ValueError("piece count mismatch between levels, multipliers and anchors")
        if np.any(self.lambda_vals <= 0):
            raise ValueError("multipliers must be strictly positive")
        if np.any(self.probes <= 0):
            raise ValueError("probe anchors must be strictly positive")

    @property
    def m(self) -> int:
        return self.probes.shape[1]

    def _pieces(self, beta: np.ndarray) -> np.ndarray:
        offsets = self.u_vals - self.lambda_vals * (self.probes * self.responses).sum(axis=1)
        return offsets + self.lambda_vals * (self.probes @ beta)

    def value(self, beta: np.ndarray) -> float:
        beta = _check_vector(beta, self.m)
        return float(self._pieces(beta).min())

    def value_batch(self, points: np.ndarray) -> np.ndarray:
        offsets = self.u_vals - self.lambda_vals * (self.probes * self.responses).sum(axis=1)
        slopes = self.lambda_vals[:, None] * self.probes  # (K, m)
        vals = points @ slopes.T + offsets  # (..., K)
        return vals.min(axis=-1)

    def gradient(self, beta: np.ndarray) -> np.ndarray:
        """Subgradient: slope of the active piece, lowest index on ties."""
        beta = _check_vector(beta, self.m)
        active = int(np.argmin(self._pieces(beta)))
        return self.lambda_vals[active] * self.probes[active]

    def gradient_batch(self, points: np.ndarray) -> np.ndarray:
        offsets = self.u_vals - self.lambda_vals * (self.probes * self.responses).sum(axis=1)
        slopes = self.lambda_vals[:, None] * self.probes
        active = (points @ slopes.T + offsets).argmin(axis=-1)
        return slopes[active]


Utility = SqrtSumUtility | QuadSumUtility | PiecewiseAffineUtility

_FAMILIES = {"sqrt_sum": SqrtSumUtility, "quad_sum": QuadSumUtility}


def utility_by_name(name: str) -> Utility:
    """Look up a parameter-free family by its CSV/config name."""
    try:
        return _FAMILIES[name]()
    except KeyError:
        raise ValueError(f"unknown utility family {name!r}") from None
