"""Closed-form epoch quantities: length, reward, outside visits and epoch regret.

An epoch is the run of rounds during which one plan with at least one unknown
entrant is offered; it ends when an unknown entrant is purchased. With U the
total effective weight of the unknown members, W the known weight and w0 the
outside weight, the epoch length is geometric with mean (W + U + w0) / U.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import AssortmentPlan, Instance, MarketState, plan_totals
from .optimum import expected_ex_post_optimum


@dataclass(frozen=True)
class EpochQuantities:
    tau: float
    reward: float
    outside_visits: float


def epoch_quantities(plan: AssortmentPlan, state: MarketState, instance: Instance) -> EpochQuantities:
    plan.validate(state, instance)
    if plan.n_unknown == 0:
        raise ValueError("epoch quantities need a plan with at least one unknown entrant")
    W, R, U = plan_totals(plan, state, instance)
    if not U > 0:
        raise ValueError("unknown members have zero effective weight; the epoch never ends")
    w0 = instance.outside_weight
    return EpochQuantities(
        tau=(W + U + w0) / U,
        reward=R / U + instance.entrant_reward,
        outside_visits=w0 / U,
    )


def epoch_regret(
    plan: AssortmentPlan, state: MarketState, instance: Instance, opt_t: float | None = None
) -> float:
    """OPT_t * tau - reward."""
    q = epoch_quantities(plan, state, instance)
    if opt_t is None:
        opt_t = expected_ex_post_optimum(state, instance)
    return opt_t * q.tau - q.reward


def epoch_regret_unit_form(
    plan: AssortmentPlan, state: MarketState, instance: Instance, opt_t: float | None = None
) -> float:
    """(OPT_t - 1)(tau - o) + OPT_t * o, valid for unit rewards only."""
    if not instance.unit_rewards:
        raise ValueError("the (tau - o) form of the epoch regret assumes unit rewards")
    q = epoch_quantities(plan, state, instance)
    if opt_t is None:
        opt_t = expected_ex_post_optimum(state, instance)
    return (opt_t - 1.0) * (q.tau - q.outside_visits) + opt_t * q.outside_visits


def _sorted_known_desc(state: MarketState) -> np.ndarray:
    ws = np.array([k.weight for k in state.known], dtype=float)
    return -np.sort(-ws, kind="stable")


def _check_single_prior(instance: Instance) -> None:
    if not instance.homogeneous:
        raise ValueError("alpha and the loss/gain ratio are defined for a single prior only")


def fictitious_revenue_alpha(state: MarketState, instance: Instance, ell: int) -> float:
    """Revenue of the c - ell best known products plus ell copies of the next one."""
    c = instance.capacity
    if not 1 <= ell <= c:
        raise ValueError("ell must lie in 1..c")
    _check_single_prior(instance)
    ws = _sorted_known_desc(state)
    if len(ws) < c:
        raise ValueError("need at least c known products")
    x = float(ws[: c - ell].sum()) + ell * float(ws[c - ell])
    return x / (x + instance.outside_weight)


def reward_loss_time_gain_ratio(state: MarketState, instance: Instance, ell: int) -> float:
    """(r*(ell) - r*(ell+1)) / (tau*(ell) - tau*(ell+1)) with optimal completions."""
    c = instance.capacity
    if not 1 <= ell <= c - 1:
        raise ValueError("ell must lie in 1..c-1")
    _check_single_prior(instance)
    h = instance.priors[0].effective_weight
    ws = _sorted_known_desc(state)
    w0 = instance.outside_weight

    def star(k):
        W = float(ws[: c - k].sum())
        return (W + k * h) / (k * h), (W + k * h + w0) / (k * h)

    r1, t1 = star(ell)
    r2, t2 = star(ell + 1)
    if t1 == t2:
        raise ArithmeticError("equal epoch lengths; cannot happen with a positive outside weight")
    return (r1 - r2) / (t1 - t2)


def scaled_interim_regret(
    state: MarketState, instance: Instance, i: int, opt_t: float | None = None
) -> float:
    if not 0 <= i < len(state.known):
        raise IndexError("known product index out of range")
    if opt_t is None:
        opt_t = expected_ex_post_optimum(state, instance)
    k = state.known[i]
    return (opt_t - k.reward) * k.weight / instance.outside_weight


def sir_values(state: MarketState, instance: Instance, opt_t: float | None = None) -> np.ndarray:
    if opt_t is None:
        opt_t = expected_ex_post_optimum(state, instance)
    w = np.array([k.weight for k in state.known])
    r = np.array([k.reward for k in state.known])
    return (opt_t - r) * w / instance.outside_weight


def sir_order(sirs: np.ndarray) -> np.ndarray:
    """Indices sorted by ascending SIR, ties to the lower index."""
    return np.argsort(sirs, kind="stable")


def cumulative_benefit_beta(
    state: MarketState, instance: Instance, ell: int, opt_t: float | None = None
) -> float:
    c = instance.capacity
    if not 1 <= ell <= c:
        raise ValueError("ell must lie in 1..c")
    if len(state.known) < c - ell + 1:
        raise ValueError("need at least c - ell + 1 known products")
    sirs = sir_values(state, instance, opt_t)
    s = sirs[sir_order(sirs)]
    return -float(s[: c - ell].sum()) - ell * float(s[c - ell])
