"""Statistical detection of budget-constrained utility maximization from
noisy response measurements.

The detector observes b_hat_t = b_t + w_t, computes the minimal inequality
relaxation phi* that makes the measured dataset rationalizable, and compares
its empirical CDF position against the distribution of

    L = max_{i,j} a_i . (w_i - w_j)

estimated by Monte Carlo (the i = j pair is included, so L >= 0).  Rejecting
when F_L(phi*) exceeds 1 - alpha caps the false-rejection probability of a
true maximizer at alpha.

For the masking side, the fixed-utility statistic pins the multipliers to
the known utility's first-order conditions at the unmasked optima instead of
optimizing over them; see `statistic_phi_u` for the two sign conventions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .afriat import SolverError, _cross_inner
from .dataset import ProbeResponseDataset
from .utility import Utility


class NoiseKind(Enum):
    GAUSSIAN_DIAG = "gaussian_diag"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class NoiseModel:
    """Additive iid measurement noise; degenerate means a point mass at 0."""

    kind: NoiseKind
    sigma2: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma2 < 0:
            raise ValueError("variance must be nonnegative")

    @classmethod
    def gaussian(cls, sigma2: float) -> "NoiseModel":
        return cls(NoiseKind.GAUSSIAN_DIAG, float(sigma2))

    @classmethod
    def degenerate(cls) -> "NoiseModel":
        return cls(NoiseKind.DEGENERATE, 0.0)

    def draw(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        if self.kind is NoiseKind.DEGENERATE or self.sigma2 == 0.0:
            return np.zeros(shape)
        return rng.normal(0.0, np.sqrt(self.sigma2), shape)


class Verdict(Enum):
    H0 = "H0"  # consistent with utility maximization
    H1 = "H1"  # rejected


@dataclass(frozen=True)
class DetectorConfig:
    alpha: float
    n_cdf: int = 100_000
    tol_phi: float = 1e-6

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if self.n_cdf < 1000:
            raise ValueError("n_cdf below 1000 gives a uselessly coarse CDF")


@dataclass(frozen=True)
class EmpiricalCdfL:
    """Sorted Monte-Carlo draws of L under fixed probes and noise model."""

    samples: np.ndarray
    probes: np.ndarray
    noise: NoiseModel

    def __post_init__(self) -> None:
        samples = np.sort(np.asarray(self.samples, dtype=float))
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "probes", np.atleast_2d(np.asarray(self.probes, dtype=float)))

    @property
    def n(self) -> int:
        return len(self.samples)

    def evaluate(self, x: float | np.ndarray) -> float | np.ndarray:
        """Right-continuous step function: fraction of samples <= x."""
        out = np.searchsorted(self.samples, x, side="right") / self.n
        return float(out) if np.isscalar(x) else out

    def quantile(self, p: float) -> float:
        """ceil(p*n)-th order statistic."""
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        idx = max(int(np.ceil(p * self.n)) - 1, 0)
        return float(self.samples[idx])


def save_cdf(cdf: EmpiricalCdfL, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample"])
        for x in cdf.samples:
            writer.writerow([repr(float(x))])


def load_cdf(path: str | Path, probes: np.ndarray, noise: NoiseModel) -> EmpiricalCdfL:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["sample"]:
            raise ValueError(f"{path}: expected a single 'sample' column")
        samples = np.array([float(row[0]) for row in reader if row])
    return EmpiricalCdfL(samples, probes, noise)


def sample_noisy_dataset(
    dataset: ProbeResponseDataset, noise: NoiseModel, rng: np.random.Generator
) -> ProbeResponseDataset:
    """Add one iid noise draw per epoch.  Components are not clipped; the
    detector works on raw measurements."""
    w = noise.draw(rng, dataset.responses.shape)
    return dataset.with_responses(dataset.responses + w)


def build_cdf_L(
    probes: np.ndarray,
    noise: NoiseModel,
    n: int,
    rng: np.random.Generator,
    chunk: int = 20_000,
) -> EmpiricalCdfL:
    """Monte-Carlo distribution of L = max_{i,j} a_i . (w_i - w_j)."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if n < 1:
        raise ValueError("need at least one draw")
    k = probes.shape[0]
    parts = []
    done = 0
    while done < n:
        size = min(chunk, n - done)
        w = noise.draw(rng, (size, k, probes.shape[1]))
        inner = np.einsum("km,njm->nkj", probes, w)  # a_k . w_j per draw
        own = inner[:, np.arange(k), np.arange(k)]
        parts.append((own[:, :, None] - inner).max(axis=(1, 2)))
        done += size
    return EmpiricalCdfL(np.concatenate(parts), probes, noise)


# ---------------------------------------------------------------------------
# minimal-relaxation statistic (line search over LP feasibility probes)


def _relaxation_lp(dataset: ProbeResponseDataset):
    """Base constraint matrix for u_s - u_t - lambda_t (D[t,s] + eps) <= 0."""
    k = dataset.k
    cross = _cross_inner(dataset)
    pairs = [(t, s) for t in range(k) for s in range(k) if s != t]
    base = np.zeros((len(pairs), 2 * k))
    eps_rows = np.arange(len(pairs))
    eps_cols = np.empty(len(pairs), dtype=int)
    for row, (t, s) in enumerate(pairs):
        base[row, s] += 1.0
        base[row, t] -= 1.0
        base[row, k + t] = -cross[t, s]
        eps_cols[row] = k + t
    bounds = [(-1e6, 1e6)] * k + [(1.0, 1e6)] * k
    return base, eps_rows, eps_cols, bounds


def _relaxation_feasible(base, eps_rows, eps_cols, bounds, eps: float) -> bool:
    a_ub = base.copy()
    a_ub[eps_rows, eps_cols] -= eps
    # borderline probes occasionally come back inconclusive; retry with
    # alternative solver settings before giving up
    attempts = (
        dict(method="highs"),
        dict(method="highs", options={"presolve": False}),
        dict(method="highs-ipm"),
    )
    res = None
    for kwargs in attempts:
        res = linprog(
            np.zeros(a_ub.shape[1]),
            A_ub=a_ub,
            b_ub=np.zeros(a_ub.shape[0]),
            bounds=bounds,
            **kwargs,
        )
        if res.status == 0:
            return True
        if res.status == 2:
            return False
    raise SolverError(f"relaxation LP failed (status {res.status}): {res.message}")


def statistic_phi(dataset: ProbeResponseDataset, tol: float = 1e-6) -> float:
    """Minimal eps so that u_s - u_t - lambda_t a_t.(b_s - b_t) <= lambda_t eps
    admits positive multipliers; zero exactly when the data is rationalizable.

    The constraint set is linear for fixed eps and feasibility is monotone in
    eps, so a bisection over LP feasibility probes resolves the minimum.
    """
    if dataset.k == 1:
        return 0.0
    base, eps_rows, eps_cols, bounds = _relaxation_lp(dataset)
    if _relaxation_feasible(base, eps_rows, eps_cols, bounds, 0.0):
        return 0.0
    cross = _cross_inner(dataset)
    hi = float(np.abs(cross).max()) + 1.0
    lo = 0.0
    if not _relaxation_feasible(base, eps_rows, eps_cols, bounds, hi):
        raise SolverError("relaxation bracket is infeasible at its upper end")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _relaxation_feasible(base, eps_rows, eps_cols, bounds, mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# fixed-utility statistic


def kkt_multipliers(
    utility: Utility, probes: np.ndarray, naive: np.ndarray
) -> np.ndarray:
    """lambda_t = a_t . grad_u(b*_t) / ||a_t||^2.

    Exact when the unmasked optimum is interior (gradient parallel to the
    probe); the least-squares scalar otherwise.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    naive = np.atleast_2d(np.asarray(naive, dtype=float))
    grads = np.stack([utility.gradient(np.maximum(b, 1e-300)) for b in naive])
    lam = (probes * grads).sum(axis=1) / (probes * probes).sum(axis=1)
    if np.any(lam <= 0):
        raise ValueError("nonpositive multiplier: utility is invalid for these optima")
    return lam


def _phi_u_batch(
    probes: np.ndarray,
    candidates: np.ndarray,
    noise_draws: np.ndarray,
    utility: Utility,
    lam: np.ndarray,
    form: str,
) -> np.ndarray:
    """Fixed-utility statistic for C response sets under R shared noise draws.

    candidates: (C, K, m); noise_draws: (R, K, m); returns (C, R).  Utility
    values are taken on measurements clipped at zero (the families are only
    defined on the nonnegative orthant; raw Gaussian measurements leave it).
    """
    c_count, r_count = candidates.shape[0], noise_draws.shape[0]
    k, m = probes.shape
    measured = candidates[:, None, :, :] + noise_draws[None, :, :, :]  # (C,R,K,m)
    values = utility.value_batch(np.maximum(measured, 0.0))  # (C,R,K)
    # inner[c,r,s,t] = a_t . bhat_s
    inner = (measured.reshape(-1, m) @ probes.T).reshape(c_count, r_count, k, k)
    idx = np.arange(k)
    own = inner[:, :, idx, idx]  # a_t . bhat_t
    inv_lam = 1.0 / lam
    if form == "margin":
        # [s,t]: (u_t - u_s)/lam_t + a_t.(bhat_s - bhat_t)
        terms = inner + (values * inv_lam - own)[:, :, None, :]
        terms -= values[:, :, :, None] * inv_lam[None, None, None, :]
    elif form == "relaxation":
        # [s,t]: (u_s - u_t)/lam_t - a_t.(bhat_s - bhat_t)
        terms = (values[:, :, :, None] - values[:, :, None, :]) * inv_lam[None, None, None, :]
        terms -= inner - own[:, :, None, :]
    else:
        raise ValueError(f"unknown statistic form {form!r}")
    terms[:, :, idx, idx] = -np.inf
    return terms.max(axis=(2, 3))


def statistic_phi_u(
    dataset: ProbeResponseDataset,
    utility: Utility,
    naive: np.ndarray,
    form: str = "margin",
) -> float:
    """Fixed-utility test statistic with multipliers pinned at the unmasked
    optima.

    form="margin" (default) is the pass-margin reading

        max_{s != t} [u(bhat_t) - u(bhat_s) + lambda_t a_t.(bhat_s - bhat_t)] / lambda_t,

    which grows as the measured data over-confirms the utility and is the
    form the confusion probability responds to.  form="relaxation" flips the
    sign pattern to match the minimal-relaxation convention of
    `statistic_phi` (nonpositive on noiseless optimal data).
    """
    lam = kkt_multipliers(utility, dataset.probes, naive)
    out = _phi_u_batch(
        dataset.probes,
        dataset.responses[None, :, :],
        np.zeros((1,) + dataset.responses.shape),
        utility,
        lam,
        form,
    )
    return float(out[0, 0])


def detect(
    dataset: ProbeResponseDataset, cdf: EmpiricalCdfL, config: DetectorConfig
) -> Verdict:
    """H0 iff F_L(phi*) <= 1 - alpha; caps the Type-I error at alpha."""
    phi = statistic_phi(dataset, tol=config.tol_phi)
    return Verdict.H0 if cdf.evaluate(phi) <= 1.0 - config.alpha else Verdict.H1


def conditional_type1_prob(
    probes: np.ndarray,
    responses: np.ndarray,
    utility: Utility,
    naive: np.ndarray,
    cdf: EmpiricalCdfL,
    alpha: float,
    replications: int,
    rng: np.random.Generator,
    form: str = "margin",
    noise_draws: np.ndarray | None = None,
) -> float:
    """Fraction of noise replications whose fixed-utility statistic lands in
    the rejection region {F_L(.) >= 1 - alpha}.

    One set of noise realizations is drawn per call (pass `noise_draws` to
    reuse realizations across calls, e.g. for common random numbers).
    """
    if replications < 1:
        raise ValueError("need at least one replication")
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    responses = np.atleast_2d(np.asarray(responses, dtype=float))
    if noise_draws is None:
        noise_draws = cdf.noise.draw(rng, (replications,) + responses.shape)
    lam = kkt_multipliers(utility, probes, naive)
    phi = _phi_u_batch(probes, responses[None, :, :], noise_draws, utility, lam, form)[0]
    return float((cdf.evaluate(phi) >= 1.0 - alpha).mean())
