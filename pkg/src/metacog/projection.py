"""Euclidean projection onto the budget face {b >= 0, a . b = 1}.

The projection is max(v - mu*a, 0) where mu solves a . max(v - mu*a, 0) = 1.
That left-hand side is piecewise linear and strictly decreasing wherever it
is positive, so mu is found exactly by scanning the sorted breakpoints
v_i / a_i; no iterative tolerance enters the result.
"""

from __future__ import annotations

import numpy as np


def project_budget(v: np.ndarray, probe: np.ndarray) -> np.ndarray:
    """Project one vector onto {b >= 0, probe . b = 1}."""
    v = np.asarray(v, dtype=float)
    probe = np.asarray(probe, dtype=float)
    if v.shape != probe.shape or v.ndim != 1:
        raise ValueError("v and probe must be 1-d vectors of equal length")
    if np.any(probe <= 0):
        raise ValueError("probe must be strictly positive")
    return project_budget_all(v[None, :], probe[None, :])[0]


def project_budget_all(v: np.ndarray, probes: np.ndarray) -> np.ndarray:
    """Row-wise projection of v (K, m) onto each epoch's budget face."""
    v = np.asarray(v, dtype=float)
    probes = np.asarray(probes, dtype=float)
    ratios = v / probes
    order = np.argsort(-ratios, axis=1)
    vs = np.take_along_axis(v, order, axis=1)
    ps = np.take_along_axis(probes, order, axis=1)
    rs = np.take_along_axis(ratios, order, axis=1)
    # with the j+1 largest-ratio components active, a.b(mu)=1 gives this mu
    num = np.cumsum(vs * ps, axis=1) - 1.0
    den = np.cumsum(ps * ps, axis=1)
    mu = num / den
    # mu is valid when it falls between the active breakpoint and the next one
    lower = np.concatenate([rs[:, 1:], np.full((v.shape[0], 1), -np.inf)], axis=1)
    valid = (mu >= lower - 1e-15) & (mu <= rs + 1e-15)
    last = valid.shape[1] - 1 - np.argmax(valid[:, ::-1], axis=1)
    idx = np.where(valid.any(axis=1), last, valid.shape[1] - 1)
    mu_star = mu[np.arange(v.shape[0]), idx]
    return np.maximum(v - mu_star[:, None] * probes, 0.0)
