"""Simultaneous-perturbation stochastic masking against the noisy detector.

The objective trades the agent's utility loss against the detector's
conditional false-rejection probability,

    J(b) = sum_k (u(b*_k) - u(b_k)) - lam * P_hat(reject | probes, b, u),

estimated with R noise replications per evaluation.  The gradient estimate
uses one random sign matrix per iteration and two cost evaluations sharing
the same noise realizations (common random numbers); iterates stay on the
budget faces via exact projection, which also bounds the large-weight kicks
(the confusion term is a step function scaled by lam, so its raw gradient
estimates can dwarf the feasible set).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detector import EmpiricalCdfL, _phi_u_batch, kkt_multipliers
from .masking import MaskingResult, pass_margin
from .projection import project_budget_all
from .rng import substream
from .utility import Utility


@dataclass(frozen=True)
class SpsaConfig:
    """Weights, gains and budgets for the stochastic masking run.

    The decaying gain eta / (i+1) is what separates the sweep's regimes: the
    small-weight cost gradients move the iterate a vanishing total distance
    (it stays near the unmasked optimum), while large weights scale the
    confusion kicks enough to keep exploring; the projection bounds them.
    """

    lam: float  # confusion weight
    alpha: float  # detector significance level
    iters: int = 10_000
    replications: int = 100  # noise draws per cost evaluation
    omega: float | None = None  # perturbation width; default 0.01 * mean ||b*||
    eta: float = 0.05
    eta_decay: bool = True  # eta_i = eta / (i+1); constant eta otherwise
    final_replications: int = 1000
    tradeoff_cost: bool = True  # False: no loss sign flip (drives utility down)
    statistic_form: str = "margin"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lam < 0 or self.iters < 1 or self.replications < 1:
            raise ValueError("lam must be >= 0 and budgets >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if self.omega is not None and self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.eta <= 0:
            raise ValueError("eta must be positive")


@dataclass
class SpsaTrace:
    """Per-iteration monitoring records."""

    cost: list[float] = field(default_factory=list)
    confusion: list[float] = field(default_factory=list)
    utility_loss: list[float] = field(default_factory=list)
    feasibility_residual: list[float] = field(default_factory=list)

    def append(self, cost: float, confusion: float, loss: float, residual: float) -> None:
        self.cost.append(cost)
        self.confusion.append(confusion)
        self.utility_loss.append(loss)
        self.feasibility_residual.append(residual)

    def __len__(self) -> int:
        return len(self.cost)


class _CostModel:
    """Shared state for batched cost evaluations."""

    def __init__(
        self,
        probes: np.ndarray,
        utility: Utility,
        naive: np.ndarray,
        cfg: SpsaConfig,
        cdf: EmpiricalCdfL,
    ):
        self.probes = np.atleast_2d(np.asarray(probes, dtype=float))
        self.utility = utility
        self.naive = np.atleast_2d(np.asarray(naive, dtype=float))
        self.cfg = cfg
        self.cdf = cdf
        self.lam_t = kkt_multipliers(utility, self.probes, self.naive)
        self.naive_total = float(utility.value_batch(self.naive).sum())

    def confusion(self, candidates: np.ndarray, noise_draws: np.ndarray) -> np.ndarray:
        phi = _phi_u_batch(
            self.probes, candidates, noise_draws, self.utility, self.lam_t,
            self.cfg.statistic_form,
        )
        reject = self.cdf.evaluate(phi) >= 1.0 - self.cfg.alpha
        return reject.mean(axis=1)

    def cost(self, candidates: np.ndarray, noise_draws: np.ndarray):
        """Costs, confusion estimates and utility losses for (C, K, m) candidates."""
        p_hat = self.confusion(candidates, noise_draws)
        totals = self.utility.value_batch(np.maximum(candidates, 0.0)).sum(axis=1)
        loss = self.naive_total - totals
        if self.cfg.tradeoff_cost:
            cost = loss - self.cfg.lam * p_hat
        else:
            cost = -loss - self.cfg.lam * p_hat
        return cost, p_hat, loss


def estimate_cost(
    responses: np.ndarray,
    probes: np.ndarray,
    utility: Utility,
    naive: np.ndarray,
    cfg: SpsaConfig,
    cdf: EmpiricalCdfL,
    rng: np.random.Generator,
    noise_draws: np.ndarray | None = None,
) -> float:
    """One noisy cost evaluation; pass `noise_draws` to reuse realizations."""
    responses = np.atleast_2d(np.asarray(responses, dtype=float))
    model = _CostModel(probes, utility, naive, cfg, cdf)
    if noise_draws is None:
        noise_draws = cdf.noise.draw(rng, (cfg.replications,) + responses.shape)
    cost, _, _ = model.cost(responses[None, :, :], noise_draws)
    return float(cost[0])


def spsa_gradient(
    cost,
    responses: np.ndarray,
    cfg: SpsaConfig,
    rng: np.random.Generator,
    omega: float | None = None,
) -> np.ndarray:
    """Two-sided simultaneous-perturbation gradient estimate.

    Draws a +/-1 sign matrix Delta and returns
    Delta / (2 * omega * ||Delta||_F^2) * (cost(b + omega Delta) - cost(b - omega Delta)).
    """
    responses = np.atleast_2d(np.asarray(responses, dtype=float))
    om = omega if omega is not None else cfg.omega
    if om is None:
        om = 0.01 * float(np.linalg.norm(responses, axis=1).mean())
    delta = rng.integers(0, 2, responses.shape) * 2 - 1
    diff = cost(responses + om * delta) - cost(responses - om * delta)
    return delta * (diff / (2.0 * om * delta.size))


def mask_stochastic(
    probes: np.ndarray,
    utility: Utility,
    cfg: SpsaConfig,
    cdf: EmpiricalCdfL,
) -> tuple[MaskingResult, SpsaTrace]:
    """Run the stochastic masking loop from the unmasked optimum.

    Per iteration: draw the sign matrix and one set of noise realizations,
    evaluate both perturbed candidates in a single batch under that shared
    noise, step along the gradient estimate with the decaying gain, and
    project back onto the budget faces.  The trace records the midpoint of
    the two evaluations; the returned result re-estimates the final
    confusion and loss with `final_replications` fresh draws.
    """
    from .radar import naive_response

    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    naive = np.stack([naive_response(utility, a) for a in probes])
    model = _CostModel(probes, utility, naive, cfg, cdf)
    rng = substream(cfg.seed, "spsa")
    omega = cfg.omega
    if omega is None:
        omega = 0.01 * float(np.linalg.norm(naive, axis=1).mean())

    responses = naive.copy()
    trace = SpsaTrace()
    for i in range(cfg.iters):
        delta = rng.integers(0, 2, responses.shape) * 2 - 1
        noise_draws = cdf.noise.draw(rng, (cfg.replications,) + responses.shape)
        candidates = np.stack([responses + omega * delta, responses - omega * delta])
        costs, p_hats, losses = model.cost(candidates, noise_draws)
        grad = delta * ((costs[0] - costs[1]) / (2.0 * omega * delta.size))
        eta = cfg.eta / (i + 1.0) if cfg.eta_decay else cfg.eta
        responses = project_budget_all(responses - eta * grad, probes)
        residual = float(np.abs((probes * responses).sum(axis=1) - 1.0).max())
        trace.append(
            float(costs.mean()), float(p_hats.mean()), float(losses.mean()), residual
        )

    final_noise = cdf.noise.draw(rng, (cfg.final_replications,) + responses.shape)
    final_cost, final_p, final_loss = model.cost(responses[None, :, :], final_noise)
    margin = pass_margin(responses, utility, anchors=naive)
    result = MaskingResult(
        masked=responses,
        perturbation=float(((responses - naive) ** 2).sum()),
        utility_loss=float(final_loss[0]),
        achieved_margin=margin,
        feasible=True,
        start_objectives=(float(final_cost[0]),),
        confusion=float(final_p[0]),
    )
    return result, trace
