"""Single entrant with a Beta prior and noisy reviews.

Each of the first k-1 purchases yields a review u ~ Bern(w1); the k-th reveals
w1 exactly. Until then customers weigh the entrant by the posterior mean of
Beta(a + ones, b + zeros).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .model import AssortmentPlan
from .optimum import top_c_indices
from .simulate import (
    DEFAULT_HORIZON_CAP, KIND_DYNAMICS, KIND_WEIGHTS, EpisodeLog, RegretEstimate, aggregate, stream,
)


@dataclass(frozen=True)
class NoisyInstance:
    capacity: int
    outside_weight: float
    incumbents: tuple[float, ...]
    a: float = 1.0
    b: float = 1.0
    k: int = 1

    def __post_init__(self):
        if self.capacity < 1 or len(self.incumbents) < self.capacity:
            raise ValueError("need capacity >= 1 and at least `capacity` incumbents")
        if not (self.a > 0 and self.b > 0):
            raise ValueError("Beta shape parameters must be positive")
        if self.k < 1:
            raise ValueError("review budget k must be at least 1")
        if not self.outside_weight > 0:
            raise ValueError("outside weight must be positive")


@dataclass(frozen=True)
class NoisyReviewState:
    beta_a: float
    beta_b: float
    ones: int
    zeros: int
    k: int
    realized_weight: float | None = None

    def __post_init__(self):
        if self.ones + self.zeros > self.k:
            raise ValueError("more reviews than the budget k")
        if (self.realized_weight is not None) != (self.ones + self.zeros >= self.k):
            raise ValueError("the weight is realized exactly at the k-th review")

    @staticmethod
    def initial(inst: NoisyInstance) -> "NoisyReviewState":
        return NoisyReviewState(inst.a, inst.b, 0, 0, inst.k)

    @property
    def reviews(self) -> int:
        return self.ones + self.zeros

    @property
    def offered_weight(self) -> float:
        if self.realized_weight is not None:
            return self.realized_weight
        return (self.beta_a + self.ones) / (self.beta_a + self.beta_b + self.ones + self.zeros)

    def after_review(self, u: int | None, w1: float) -> "NoisyReviewState":
        """State after the next purchase; ``u`` is the Bernoulli review when not final."""
        if self.reviews + 1 >= self.k:
            # the k-th purchase realizes w1; it is counted as a review with no signal
            return NoisyReviewState(self.beta_a, self.beta_b, self.ones, self.zeros + 1, self.k, w1)
        if u:
            return NoisyReviewState(self.beta_a, self.beta_b, self.ones + 1, self.zeros, self.k)
        return NoisyReviewState(self.beta_a, self.beta_b, self.ones, self.zeros + 1, self.k)


def noisy_topk_decide(
    review_state: NoisyReviewState, inst: NoisyInstance, companions: tuple[int, ...] | None = None
) -> AssortmentPlan:
    """Entrant plus ``companions`` (default: the c-1 best incumbents) until the k-th review.

    Known indices refer to the incumbents, then the entrant (index n) once realized.
    """
    c = inst.capacity
    if review_state.realized_weight is None:
        if companions is None:
            companions = tuple(top_c_indices(inst.incumbents, c - 1))
        if len(companions) > c - 1:
            raise ValueError("at most c - 1 companions fit next to the entrant")
        return AssortmentPlan.make(companions, (1,))
    ws = list(inst.incumbents) + [review_state.realized_weight]
    return AssortmentPlan.make(top_c_indices(ws, c), (0,))


def _revenue(ws, w0):
    s = sum(ws)
    return s / (s + w0)


def run_noisy_episode(
    inst: NoisyInstance,
    companions: tuple[int, ...] | None,
    master_seed: int,
    replication_index: int,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
) -> EpisodeLog:
    """Episode under "entrant + companions until the k-th review, then top c".

    The entrant weight and the review coin flips come from the weights stream,
    so every companion choice sees the same w1 and reviews (paired seeds).
    """
    rng_w = stream(master_seed, replication_index, KIND_WEIGHTS)
    w1 = float(rng_w.beta(inst.a, inst.b))
    coins = rng_w.random(max(inst.k - 1, 0))
    rng = stream(master_seed, replication_index, KIND_DYNAMICS)
    w0 = inst.outside_weight
    opt = _revenue(sorted(list(inst.incumbents) + [w1], reverse=True)[: inst.capacity], w0)
    state = NoisyReviewState.initial(inst)
    t, reg, purchases = 0, 0.0, []
    while state.realized_weight is None:
        plan = noisy_topk_decide(state, inst, companions)
        W = sum(inst.incumbents[i] for i in plan.known_ids)
        h = state.offered_weight
        den = W + h + w0
        rev = (W + h) / den
        n = int(rng.geometric(h / den))
        if t + n > horizon_cap:
            return EpisodeLog(horizon_cap, reg + (horizon_cap - t) * (opt - rev), purchases, True)
        reg += n * (opt - rev)
        t += n
        i = state.reviews
        u = int(coins[i] < w1) if i < inst.k - 1 else None
        state = state.after_review(u, w1)
        purchases.append((t, w1 if state.realized_weight is not None else float(u)))
    # after the k-th review the top-c plan earns OPT exactly: zero forward regret
    return EpisodeLog(t, reg, purchases, False)


def estimate_noisy_regret(
    inst: NoisyInstance,
    companions: tuple[int, ...] | None,
    reps: int,
    master_seed: int,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
) -> tuple[RegretEstimate, np.ndarray]:
    """Estimate plus the per-replication totals (for paired comparisons)."""
    logs = [run_noisy_episode(inst, companions, master_seed, r, horizon_cap) for r in range(reps)]
    totals = np.array([g.total_regret for g in logs])
    return aggregate(totals, np.array([g.diverged for g in logs])), totals


def posterior_expected_optimum(
    state: NoisyReviewState, inst: NoisyInstance, draws: int = 10_000, seed: int = 0
) -> float:
    """Diagnostic OPT(H): stratified Monte Carlo over the Beta posterior."""
    if state.realized_weight is not None:
        ws = sorted(list(inst.incumbents) + [state.realized_weight], reverse=True)
        return _revenue(ws[: inst.capacity], inst.outside_weight)
    rng = np.random.default_rng(seed)
    u = (np.arange(draws) + rng.random(draws)) / draws
    w = stats.beta.ppf(u, state.beta_a + state.ones, state.beta_b + state.zeros)
    inc = np.sort(np.array(inst.incumbents))[::-1][: inst.capacity]
    allw = np.concatenate([np.tile(inc, (draws, 1)), w[:, None]], axis=1)
    top = -np.sort(-allw, axis=1)[:, : inst.capacity].sum(axis=1)
    return float(np.mean(top / (top + inst.outside_weight)))
