"""Tracking-loop abstraction: state-space model, Kalman recursions, the
steady-state predicted covariance, and budget-constrained optimal responses.

The probe is the spectrum of the state-noise covariance Q (target maneuvers);
the response is the spectrum of the inverse observation-noise covariance
(sensing precision).  Both live on the standard basis, so Q = diag(probe) and
R = diag(1/response).  The inner product probe . response plays the role of
an SNR budget, capped at 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .projection import project_budget
from .utility import (
    PiecewiseAffineUtility,
    QuadSumUtility,
    SqrtSumUtility,
    Utility,
)


class ConvergenceError(RuntimeError):
    """Fixed-point iteration ran out of budget; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class RadarSystem:
    """x' = A x + w,  y = C x + v,  w ~ N(0, Q),  v ~ N(0, R)."""

    a: np.ndarray
    c: np.ndarray
    q: np.ndarray
    r: np.ndarray
    x0: np.ndarray
    sigma0: np.ndarray

    def __post_init__(self) -> None:
        for name in ("a", "c", "q", "r", "x0", "sigma0"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        nx = self.a.shape[0]
        ny = self.c.shape[0]
        if self.a.shape != (nx, nx) or self.c.shape[1] != nx:
            raise ValueError("inconsistent state/observation dimensions")
        if self.q.shape != (nx, nx) or self.r.shape != (ny, ny):
            raise ValueError("noise covariances do not match system dimensions")


@dataclass(frozen=True)
class KalmanState:
    x: np.ndarray
    cov: np.ndarray
    step: int = 0


def default_transition(m: int, dt: float = 1.0) -> np.ndarray:
    """Block-diagonal constant-velocity transition; trailing 1x1 block if m is odd."""
    a = np.eye(m)
    for i in range(0, m - 1, 2):
        a[i, i + 1] = dt
    return a


def build_system(
    probe: np.ndarray,
    response: np.ndarray,
    a: np.ndarray | None = None,
    c: np.ndarray | None = None,
    x0: np.ndarray | None = None,
    sigma0: np.ndarray | None = None,
) -> RadarSystem:
    """Assemble the system with Q = diag(probe) and R = diag(1/response)."""
    probe = np.asarray(probe, dtype=float)
    response = np.asarray(response, dtype=float)
    if np.any(probe <= 0) or np.any(response <= 0):
        raise ValueError("probe and response must be strictly positive")
    m = probe.shape[0]
    a = default_transition(m) if a is None else np.asarray(a, dtype=float)
    c = np.eye(m) if c is None else np.asarray(c, dtype=float)
    x0 = np.zeros(m) if x0 is None else np.asarray(x0, dtype=float)
    sigma0 = np.eye(m) if sigma0 is None else np.asarray(sigma0, dtype=float)
    return RadarSystem(a, c, np.diag(probe), np.diag(1.0 / response), x0, sigma0)


def kalman_step(system: RadarSystem, state: KalmanState, y: np.ndarray) -> KalmanState:
    """One predict/update cycle of the classical filter recursions."""
    a, c, q, r = system.a, system.c, system.q, system.r
    cov_pred = a @ state.cov @ a.T + q
    innov_cov = c @ cov_pred @ c.T + r
    gain = cov_pred @ c.T @ np.linalg.inv(innov_cov)
    x_pred = a @ state.x
    x = x_pred + gain @ (np.asarray(y, dtype=float) - c @ x_pred)
    cov = (np.eye(len(x)) - gain @ c) @ cov_pred
    cov = 0.5 * (cov + cov.T)
    return KalmanState(x, cov, state.step + 1)


def _riccati_map(system: RadarSystem, sigma: np.ndarray) -> np.ndarray:
    a, c, q, r = system.a, system.c, system.q, system.r
    innov = c @ sigma @ c.T + r
    reduced = sigma - sigma @ c.T @ np.linalg.solve(innov, c @ sigma)
    out = a @ reduced @ a.T + q
    return 0.5 * (out + out.T)


def solve_are(
    system: RadarSystem, tol: float = 1e-10, max_iter: int = 100_000
) -> np.ndarray:
    """Steady-state predicted covariance by fixed-point Riccati iteration.

    The iteration is exactly the filter's predicted-covariance recursion, so
    its limit can be cross-checked against long Kalman runs.  Raises
    ConvergenceError (with the final residual) if the tolerance is not met.
    """
    sigma = system.q.copy()
    residual = float("inf")
    for _ in range(max_iter):
        nxt = _riccati_map(system, sigma)
        residual = float(np.abs(nxt - sigma).max())
        sigma = nxt
        if residual <= tol:
            return sigma
    raise ConvergenceError(
        f"Riccati iteration did not reach tol={tol} in {max_iter} steps", residual
    )


def naive_response(utility: Utility, probe: np.ndarray) -> np.ndarray:
    """Budget-exhausting maximizer of the utility on {b >= 0, probe . b <= 1}.

    sqrt-sum has the closed interior solution b_i = (1/a_i^2) / sum_j 1/a_j;
    quad-sum is convex so the optimum is the best budget vertex e_i / a_i;
    the piecewise-affine family reduces to a small LP; any other object with
    value/gradient methods falls back to projected gradient ascent.
    """
    probe = np.asarray(probe, dtype=float)
    if np.any(probe <= 0):
        raise ValueError("probe must be strictly positive")
    if isinstance(utility, SqrtSumUtility):
        inv = 1.0 / probe
        return (inv * inv) / inv.sum()
    if isinstance(utility, QuadSumUtility):
        best = int(np.argmin(probe))  # vertex value 1/a_i^2 is largest there
        out = np.zeros_like(probe)
        out[best] = 1.0 / probe[best]
        return out
    if isinstance(utility, PiecewiseAffineUtility):
        return _pwa_response(utility, probe)
    return _ascent_response(utility, probe)


def _pwa_response(utility: PiecewiseAffineUtility, probe: np.ndarray) -> np.ndarray:
    # maximize z s.t. z <= each affine piece, probe . b = 1, b >= 0
    m = probe.shape[0]
    k = len(utility.u_vals)
    slopes = utility.lambda_vals[:, None] * utility.probes
    offsets = utility.u_vals - (slopes * utility.responses).sum(axis=1)
    a_ub = np.hstack([-slopes, np.ones((k, 1))])
    b_ub = offsets
    a_eq = np.concatenate([probe, [0.0]])[None, :]
    cost = np.zeros(m + 1)
    cost[-1] = -1.0
    res = linprog(
        cost,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=[(0, None)] * m + [(None, None)],
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"piecewise-affine response LP failed: {res.message}")
    beta = res.x[:m]
    return beta / (probe @ beta)


def _ascent_response(
    utility: Utility, probe: np.ndarray, iters: int = 20_000, tol: float = 1e-8
) -> np.ndarray:
    beta = project_budget(np.full_like(probe, 1.0 / (probe.sum())), probe)
    step = 0.1
    value = utility.value(beta)
    for _ in range(iters):
        grad = utility.gradient(np.maximum(beta, 1e-12))
        candidate = project_budget(beta + step * grad, probe)
        cand_value = utility.value(candidate)
        if cand_value < value - 1e-15:
            step *= 0.5
            if step < 1e-14:
                break
            continue
        moved = float(np.abs(candidate - beta).max())
        beta, value = candidate, cand_value
        if moved < tol * step:
            break
    return beta


def load_system_json(path: str | Path) -> RadarSystem:
    """Build a system from a JSON document of row-major arrays.

    Keys: either "probe"/"response" (diagonal construction) or explicit
    "q"/"r"; optional "a", "c", "x0", "sigma0".
    """
    spec = json.loads(Path(path).read_text())
    if "probe" in spec and "response" in spec:
        return build_system(
            np.array(spec["probe"], dtype=float),
            np.array(spec["response"], dtype=float),
            a=np.array(spec["a"], dtype=float) if "a" in spec else None,
            c=np.array(spec["c"], dtype=float) if "c" in spec else None,
            x0=np.array(spec["x0"], dtype=float) if "x0" in spec else None,
            sigma0=np.array(spec["sigma0"], dtype=float) if "sigma0" in spec else None,
        )
    q = np.array(spec["q"], dtype=float)
    nx = q.shape[0]
    a = np.array(spec.get("a", default_transition(nx)), dtype=float)
    r = np.array(spec["r"], dtype=float)
    c = np.array(spec.get("c", np.eye(nx)), dtype=float)
    x0 = np.array(spec.get("x0", np.zeros(nx)), dtype=float)
    sigma0 = np.array(spec.get("sigma0", np.eye(nx)), dtype=float)
    return RadarSystem(a, c, q, r, x0, sigma0)
