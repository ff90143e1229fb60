"""Revealed-preference core: GARP, the linear rationalizability test, utility
reconstruction, and the gradient-certificate margin.

The rationalizability test asks for positive reals {u_t, lambda_t} with

    u_s - u_t - lambda_t * a_t . (b_s - b_t) <= 0   for all s, t.

Feasibility of that system, the no-strict-reversal cycle condition (GARP),
and the existence of a monotone concave utility generating the data are all
equivalent, which the tests exploit as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .dataset import ProbeResponseDataset
from .utility import PiecewiseAffineUtility, Utility

TOL = 1e-9

# the feasible set is a cone; pinning lambda >= 1 and boxing the levels picks
# one representative per ray without excluding any feasible direction
_LAMBDA_MAX = 1e6
_U_BOUND = 1e6


class SolverError(RuntimeError):
    """LP backend failed for a reason other than infeasibility."""


def _cross_inner(dataset: ProbeResponseDataset) -> np.ndarray:
    """D[t, s] = a_t . (b_s - b_t)."""
    probes, responses = dataset.probes, dataset.responses
    inner = probes @ responses.T  # inner[t, s] = a_t . b_s
    return inner - np.diag(inner)[:, None]


def check_garp(dataset: ProbeResponseDataset, tol: float = TOL) -> bool:
    """No cycle of weak revealed preference may contain a strict reversal.

    Builds the direct relation (t -> s iff a_t.b_t >= a_t.b_s - tol), closes
    it transitively with Warshall's O(K^3) sweep, and rejects iff some closed
    edge t -> s coexists with a_s.b_s > a_s.b_t + tol.
    """
    k = dataset.k
    if k == 1:
        return True
    inner = dataset.probes @ dataset.responses.T
    own = np.diag(inner)
    edge = own[:, None] >= inner - tol
    closure = edge.copy()
    for j in range(k):
        closure |= closure[:, j : j + 1] & closure[j : j + 1, :]
    strict_reversal = own[:, None] > inner + tol  # [s, t]: a_s.b_s > a_s.b_t + tol
    return not np.any(closure & strict_reversal.T)


@dataclass(frozen=True)
class AfriatCertificate:
    """Feasible levels and multipliers, plus the margin they achieve.

    slack is the minimum over ordered pairs s != t of
    -(u_s - u_t - lambda_t * a_t . (b_s - b_t)); nonnegative (within
    tolerance) whenever the certificate is valid.
    """

    u_vals: np.ndarray
    lambda_vals: np.ndarray
    slack: float


def _certificate_slack(
    u: np.ndarray, lam: np.ndarray, cross: np.ndarray
) -> float:
    k = len(u)
    if k == 1:
        return 0.0
    lhs = u[None, :] - u[:, None] - lam[:, None] * cross  # [t, s]
    np.fill_diagonal(lhs, -np.inf)
    return float(-lhs.max())


def afriat_feasible(
    dataset: ProbeResponseDataset, tol: float = TOL
) -> AfriatCertificate | None:
    """Solve the rationalizability system, maximizing its worst slack.

    Returns a certificate when the system is feasible (worst slack >= -tol),
    None when it is infeasible.  Solver breakdowns raise SolverError so they
    cannot be mistaken for infeasibility.
    """
    k = dataset.k
    if k == 1:
        return AfriatCertificate(np.array([1.0]), np.array([1.0]), 0.0)
    cross = _cross_inner(dataset)
    n = 2 * k + 1  # [u_1..u_K, lambda_1..lambda_K, margin]
    rows, rhs = [], []
    for t in range(k):
        for s in range(k):
            if s == t:
                continue
            row = np.zeros(n)
            row[s] += 1.0
            row[t] -= 1.0
            row[k + t] = -cross[t, s]
            row[-1] = 1.0  # u_s - u_t - lambda_t D + margin <= 0
            rows.append(row)
            rhs.append(0.0)
    cost = np.zeros(n)
    cost[-1] = -1.0  # maximize the margin
    bounds = (
        [(-_U_BOUND, _U_BOUND)] * k
        + [(1.0, _LAMBDA_MAX)] * k
        + [(-1e9, 1e9)]
    )
    res = linprog(cost, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if res.status != 0:
        raise SolverError(f"margin LP failed (status {res.status}): {res.message}")
    if res.x[-1] < -tol:
        return None
    u = res.x[:k]
    lam = res.x[k : 2 * k]
    # only level differences are constrained; shift them strictly positive
    u = u - u.min() + 1.0
    return AfriatCertificate(u, lam, _certificate_slack(u, lam, cross))


def reconstruct_utility(
    certificate: AfriatCertificate, dataset: ProbeResponseDataset
) -> PiecewiseAffineUtility:
    """Piecewise-affine utility min_t { u_t + lambda_t a_t . (b - b_t) }.

    The certificate inequalities force the t-th piece to attain the minimum
    at b_t, so the reconstruction interpolates the levels exactly and
    rationalizes the dataset.
    """
    if len(certificate.u_vals) != dataset.k:
        raise ValueError(
            f"certificate covers {len(certificate.u_vals)} epochs, dataset has {dataset.k}"
        )
    return PiecewiseAffineUtility(
        certificate.u_vals, certificate.lambda_vals, dataset.probes, dataset.responses
    )


def afriat_margin(
    dataset: ProbeResponseDataset,
    utility: Utility,
    grad_anchors: np.ndarray | None = None,
) -> float:
    """Worst slack of the gradient-form certificate under a known utility.

    Returns min over ordered pairs s != t of

        u(b_t) + grad_u(c_t) . (b_s - b_t) - u(b_s)

    where the gradient anchors c_t default to the responses themselves.
    Nonnegative for concave utilities; +inf (no pairs) when K = 1.
    """
    k = dataset.k
    if k == 1:
        return float("inf")
    responses = dataset.responses
    anchors = responses if grad_anchors is None else np.asarray(grad_anchors, dtype=float)
    values = np.array([utility.value(b) for b in responses])
    grads = np.stack([utility.gradient(c) for c in anchors])
    inner = grads @ responses.T  # [t, s] = g_t . b_s
    terms = values[:, None] + inner - np.diag(inner)[:, None] - values[None, :]
    np.fill_diagonal(terms, np.inf)
    return float(terms.min())
