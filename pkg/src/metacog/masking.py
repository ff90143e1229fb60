"""Margin-bound response masking against a gradient-certificate adversary.

Given probes and a known utility, the unmasked (naive) responses pass the
gradient-form rationalizability certificate with some margin.  Masking picks
the minimally perturbed response sequence whose pass margin drops to a target
epsilon, subject to each response staying on its budget face:

    minimize   sum_k ||b_k - b*_k||^2
    subject to pass_margin(b) <= epsilon,  b_k >= 0,  a_k . b_k = 1.

The margin couples epochs only in pairs, and the constraint needs just one
pair at or below epsilon, so deterministic "pair closure" seeds (drive a
single pair's term down, leave everything else unmasked) complement the
multi-start penalized projected-gradient search.  Candidate feasibility is
always verified on the exact min, never the smoothed surrogate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .projection import project_budget_all
from .rng import substream
from .utility import Utility


@dataclass(frozen=True)
class DetMaskConfig:
    """Controls for the deterministic masking search."""

    epsilon: float
    starts: int = 5
    iters: int = 4000  # projected-gradient budget per start, across all penalty stages
    step: float = 0.25
    tol: float = 1e-6
    penalty_max: float = 1e6
    seed_pairs: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.starts < 1:
            raise ValueError("need at least one start")


@dataclass(frozen=True)
class MaskingResult:
    """Masked responses plus the cost and certificate diagnostics.

    `confusion` is filled by the stochastic masking path (final detector
    false-rejection estimate); the deterministic path leaves it None.
    """

    masked: np.ndarray
    perturbation: float  # sum of squared per-epoch deviations
    utility_loss: float
    achieved_margin: float
    feasible: bool
    start_objectives: tuple[float, ...] = field(default=())
    confusion: float | None = None


def _margin_terms(
    responses: np.ndarray,
    utility: Utility,
    anchor_grads: np.ndarray,
    values: np.ndarray | None = None,
) -> np.ndarray:
    """Signed pair terms whose minimum is the pass margin.

    Concave families use u(b_t) + g_t.(b_s - b_t) - u(b_s); convex families
    flip the inequality direction (the first-order bound reverses), so the
    sign flips and the margin is again nonnegative at gradient-consistent
    data.  Diagonal entries are masked with +inf.
    """
    if values is None:
        values = utility.value_batch(np.maximum(responses, 0.0))
    inner = anchor_grads @ responses.T  # [t, s] = g_t . b_s
    terms = values[:, None] + inner - np.diag(inner)[:, None] - values[None, :]
    if not utility.is_concave:
        terms = -terms
    np.fill_diagonal(terms, np.inf)
    return terms


def pass_margin(
    responses: np.ndarray,
    utility: Utility,
    anchors: np.ndarray | None = None,
) -> float:
    """Smallest signed pair term; gradients anchored at `anchors` (default:
    the responses themselves)."""
    responses = np.atleast_2d(np.asarray(responses, dtype=float))
    anchors = responses if anchors is None else np.atleast_2d(np.asarray(anchors, dtype=float))
    grads = np.stack([utility.gradient(a) for a in anchors])
    return float(_margin_terms(responses, utility, grads).min())


def epsilon_max(probes: np.ndarray, utility: Utility) -> float:
    """Pass margin of the unmasked optimal responses: the largest target for
    which masking needs zero perturbation."""
    from .radar import naive_response

    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.shape[0] < 2:
        raise ValueError("margin needs at least two epochs")
    naive = np.stack([naive_response(utility, a) for a in probes])
    return pass_margin(naive, utility, anchors=naive)


# ---------------------------------------------------------------------------
# search internals


def _grad_rows(utility: Utility, responses: np.ndarray) -> np.ndarray:
    return utility.gradient_batch(np.maximum(responses, 1e-12))


def _soft_margin(
    responses: np.ndarray,
    utility: Utility,
    anchor_grads: np.ndarray,
    temperature: float,
    with_grad: bool = True,
):
    """Soft minimum of the pair terms, optionally with its gradient."""
    terms = _margin_terms(responses, utility, anchor_grads)
    t_min = terms.min()
    weights = np.exp(-(terms - t_min) / temperature)
    weights[np.isinf(terms)] = 0.0
    total = weights.sum()
    soft = t_min - temperature * np.log(total)
    if not with_grad:
        return soft, None
    weights /= total
    sign = 1.0 if utility.is_concave else -1.0
    grads_here = _grad_rows(utility, responses)
    row_sum = weights.sum(axis=1)
    col_sum = weights.sum(axis=0)
    # d terms[t,s] / d b_t = sign * (grad_u(b_t) - g_t);  / d b_s = sign * (g_t - grad_u(b_s))
    grad = sign * (
        row_sum[:, None] * (grads_here - anchor_grads)
        + weights.T @ anchor_grads
        - col_sum[:, None] * grads_here
    )
    return soft, grad


def _polish(
    start: np.ndarray,
    naive: np.ndarray,
    probes: np.ndarray,
    utility: Utility,
    anchor_grads: np.ndarray,
    cfg: DetMaskConfig,
    temperature: float,
    margin_scale: float,
) -> np.ndarray:
    """Penalized projected gradient from one start; penalty doubles stagewise.

    Margin violations are measured relative to the unmasked margin scale so
    the penalty schedule is meaningful for arbitrarily small-margin
    instances.
    """
    stages = max(int(np.ceil(np.log2(cfg.penalty_max))) + 1, 1)
    per_stage = max(cfg.iters // stages, 10)
    x = start.copy()
    rho = 1.0

    def objective(z: np.ndarray, rho: float) -> float:
        soft, _ = _soft_margin(z, utility, anchor_grads, temperature, with_grad=False)
        viol = max(soft - cfg.epsilon, 0.0) / margin_scale
        return float(((z - naive) ** 2).sum() + rho * viol * viol)

    for _ in range(stages):
        current = objective(x, rho)
        step = cfg.step
        for _ in range(per_stage):
            soft, soft_grad = _soft_margin(x, utility, anchor_grads, temperature)
            viol = max(soft - cfg.epsilon, 0.0) / margin_scale
            grad = 2.0 * (x - naive) + (2.0 * rho * viol / margin_scale) * soft_grad
            shift = 0.0
            for _ in range(30):
                cand = project_budget_all(x - step * grad, probes)
                cand_obj = objective(cand, rho)
                if cand_obj <= current - 1e-300:
                    shift = float(np.abs(cand - x).max())
                    x, current = cand, cand_obj
                    step *= 1.3
                    break
                step *= 0.5
                if step < 1e-16:
                    break
            if shift == 0.0 or (viol == 0.0 and shift < 1e-14):
                break
        rho = min(rho * 2.0, cfg.penalty_max)
    return x


def _pair_seed(
    pair: tuple[int, int],
    naive: np.ndarray,
    probes: np.ndarray,
    utility: Utility,
    anchor_grads: np.ndarray,
    epsilon: float,
) -> np.ndarray | None:
    """Drive one pair's term to epsilon by sliding a single response.

    The anchored pair term, as a function of the anchor epoch's response
    alone, is an extremum of a (con)vex function at the unmasked optimum, so
    it moves monotonically along any budget-face segment leaving that point.
    Sliding toward the best vertex therefore reaches every target the vertex
    reaches, and a bisection picks the smallest sufficient slide.  A second
    variant slides the compared response toward the anchor's gradient-match
    point.  Returns the cheaper feasible variant, or None.
    """
    t, s = pair
    sign = 1.0 if utility.is_concave else -1.0
    g_t = anchor_grads[t]

    def term(bt: np.ndarray, bs: np.ndarray) -> float:
        raw = (
            utility.value(np.maximum(bt, 0.0))
            + float(g_t @ (bs - bt))
            - utility.value(np.maximum(bs, 0.0))
        )
        return sign * raw

    def slide(moving: int, target: np.ndarray) -> np.ndarray | None:
        ends = [naive[t].copy(), naive[s].copy()]
        ends[moving] = target
        if term(ends[0], ends[1]) > epsilon:
            return None
        base = naive[[t, s]].copy()
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            z = base.copy()
            z[moving] = base[moving] + mid * (target - base[moving])
            if term(z[0], z[1]) <= epsilon:
                hi = mid
            else:
                lo = mid
        z = base.copy()
        z[moving] = base[moving] + hi * (target - base[moving])
        if term(z[0], z[1]) > epsilon:
            return None
        return z

    candidates = []
    # variant A: slide the anchor response toward its term-minimizing vertex
    m = probes.shape[1]
    vertices = np.zeros((m, m))
    vertices[np.arange(m), np.arange(m)] = 1.0 / probes[t]
    best_vertex = min(vertices, key=lambda v: term(v, naive[s]))
    moved = slide(0, best_vertex)
    if moved is not None:
        candidates.append(moved)
    # variant B: slide the compared response toward the anchor's optimum
    target_s = project_budget_all(naive[t][None, :], probes[s][None, :])[0]
    moved = slide(1, target_s)
    if moved is not None:
        candidates.append(moved)
    if not candidates:
        return None
    best = min(candidates, key=lambda z: float(((z - naive[[t, s]]) ** 2).sum()))
    out = naive.copy()
    out[t], out[s] = best[0], best[1]
    return out


def mask_deterministic(
    probes: np.ndarray,
    utility: Utility,
    cfg: DetMaskConfig,
    extra_candidates: tuple[np.ndarray, ...] = (),
) -> MaskingResult:
    """Minimal-perturbation masking down to pass margin <= epsilon.

    Candidates come from pair-closure seeds, the unmasked responses, random
    budget-feasible starts, and any caller-provided warm starts; every one is
    polished by the penalized projected gradient and checked on the exact
    margin.  If nothing is feasible the best-effort candidate is returned
    with `feasible=False`.
    """
    from .radar import naive_response

    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    naive = np.stack([naive_response(utility, a) for a in probes])
    # raw gradients at the optima, matching pass_margin/epsilon_max exactly
    anchor_grads = np.stack([utility.gradient(b) for b in naive])
    naive_values = np.array([utility.value(b) for b in naive])
    base_terms = _margin_terms(naive, utility, anchor_grads)
    margin0 = float(base_terms.min())
    if margin0 <= cfg.epsilon:
        return MaskingResult(naive, 0.0, 0.0, margin0, True, (0.0,))

    margin_scale = max(abs(margin0), cfg.tol)
    temperature = 1e-3 * margin_scale

    def exact_margin(resp: np.ndarray) -> float:
        return float(_margin_terms(resp, utility, anchor_grads).min())

    def perturbation(resp: np.ndarray) -> float:
        return float(((resp - naive) ** 2).sum())

    candidates: list[np.ndarray] = []

    # deterministic pair-closure seeds, cheapest pairs first
    flat = np.argsort(base_terms, axis=None)
    k = probes.shape[0]
    for idx in flat[: cfg.seed_pairs]:
        t, s = divmod(int(idx), k)
        seed = _pair_seed((t, s), naive, probes, utility, anchor_grads, cfg.epsilon)
        if seed is not None:
            candidates.append(seed)

    rng = substream(cfg.seed, "mask-det-starts")
    starts: list[np.ndarray] = [naive]
    for _ in range(cfg.starts - 1):
        raw = rng.uniform(0.0, 1.0, naive.shape)
        starts.append(project_budget_all(raw, probes))
    starts.extend(np.asarray(c, dtype=float) for c in extra_candidates)
    starts.extend(candidates[:3])

    start_objectives: list[float] = []
    for start in starts:
        polished = _polish(
            start, naive, probes, utility, anchor_grads, cfg, temperature, margin_scale
        )
        feasible_here = exact_margin(polished) <= cfg.epsilon + cfg.tol
        start_objectives.append(perturbation(polished) if feasible_here else float("inf"))
        candidates.append(polished)
    candidates.extend(np.asarray(c, dtype=float) for c in extra_candidates)

    best, best_obj = None, float("inf")
    worst_violation = float("inf")
    fallback = None
    for cand in candidates:
        margin = exact_margin(cand)
        obj = perturbation(cand)
        if margin <= cfg.epsilon + cfg.tol:
            if obj < best_obj:
                best, best_obj = cand, obj
        else:
            gap = margin - cfg.epsilon
            if gap < worst_violation:
                worst_violation, fallback = gap, cand
    feasible = best is not None
    chosen = best if feasible else (fallback if fallback is not None else naive)
    loss = float(naive_values.sum() - sum(utility.value(np.maximum(b, 0.0)) for b in chosen))
    return MaskingResult(
        chosen,
        perturbation(chosen),
        loss,
        exact_margin(chosen),
        feasible,
        tuple(start_objectives),
    )
