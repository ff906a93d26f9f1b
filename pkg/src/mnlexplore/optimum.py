"""Ex-post optimum, expected ex-post optimum and terminality."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial, prod
from typing import Iterator, Sequence

from .model import EPS, AssortmentPlan, Instance, MarketState

MAX_BRUTE_FORCE_PRODUCTS = 25
MAX_COMPOSITIONS = 10**7


@dataclass(frozen=True)
class OptimumReport:
    value: float
    argmax_plan: AssortmentPlan


def _revenue(ws: Sequence[float], rs: Sequence[float], w0: float) -> float:
    num = 0.0
    den = w0
    for w, r in zip(ws, rs):
        num += r * w
        den += w
    return num / den


def top_c_indices(weights: Sequence[float], c: int) -> list[int]:
    """Indices of the c largest weights; lowest index wins ties."""
    order = sorted(range(len(weights)), key=lambda i: (-weights[i], i))
    return order[:c]


def brute_force_optimum(weights: Sequence[float], rewards: Sequence[float], c: int, w0: float) -> tuple[float, tuple[int, ...]]:
    """Exact revenue maximizer over all subsets of size <= c.

    Subsets are scanned by size, then lexicographically; a later subset only
    replaces the incumbent best when it is better by more than 1e-12, so the
    earliest (lowest-index) maximizer wins.
    """
    n = len(weights)
    if n > MAX_BRUTE_FORCE_PRODUCTS:
        raise ValueError(
            f"heterogeneous-reward optimum refuses {n} > {MAX_BRUTE_FORCE_PRODUCTS} products"
        )
    best, best_set = 0.0, ()
    for k in range(1, min(c, n) + 1):
        for subset in itertools.combinations(range(n), k):
            v = _revenue([weights[i] for i in subset], [rewards[i] for i in subset], w0)
            if v > best + 1e-12:
                best, best_set = v, subset
    return best, best_set


def best_known_assortment(state: MarketState, instance: Instance) -> OptimumReport:
    ws = [k.weight for k in state.known]
    rs = [k.reward for k in state.known]
    c, w0 = instance.capacity, instance.outside_weight
    if instance.unit_rewards:
        ids = top_c_indices(ws, c)
        value = sum(ws[i] for i in ids)
        value = value / (value + w0)
    else:
        value, ids = brute_force_optimum(ws, rs, c, w0)
    return OptimumReport(value, AssortmentPlan.make(ids, [0] * len(state.unknown)))


def ex_post_optimum(products: Sequence[tuple[float, float]], instance: Instance) -> float:
    """Full-information optimal revenue for a list of (weight, reward) pairs."""
    c, w0 = instance.capacity, instance.outside_weight
    if all(r == 1.0 for _, r in products):
        top = sorted((w for w, _ in products), reverse=True)[:c]
        s = sum(top)
        return s / (s + w0)
    return brute_force_optimum([w for w, _ in products], [r for _, r in products], c, w0)[0]


def compositions(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All k-tuples of nonnegative integers summing to n."""
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


def composition_count(state: MarketState, instance: Instance) -> int:
    return prod(
        comb(n + len(instance.priors[p].values) - 1, n)
        for p, n in enumerate(state.unknown)
    )


def _multinomial_prob(counts: Sequence[int], probs: Sequence[float]) -> float:
    n = sum(counts)
    coef = factorial(n)
    for k in counts:
        coef //= factorial(k)
    p = float(coef)
    for k, q in zip(counts, probs):
        if k:
            p *= q**k
    return p


def realization_law(state: MarketState, instance: Instance):
    """Yield (probability, per-prior value-count tuples) for the remaining unknowns."""
    if composition_count(state, instance) > MAX_COMPOSITIONS:
        raise ValueError("too many realization compositions to enumerate")
    per_prior = []
    for p, n in enumerate(state.unknown):
        prior = instance.priors[p]
        per_prior.append(
            [(_multinomial_prob(ks, prior.probs), ks) for ks in compositions(n, len(prior.values))]
        )
    for combo in itertools.product(*per_prior):
        prob = 1.0
        for q, _ in combo:
            prob *= q
        yield prob, tuple(ks for _, ks in combo)


def _unit_top_sum(known_desc: Sequence[float], extra: list[tuple[float, int]], c: int) -> float:
    """Sum of the c largest among known weights and (value, count) extras."""
    extra = sorted(extra, reverse=True)
    total, taken, i, j, left = 0.0, 0, 0, 0, extra[0][1] if extra else 0
    while taken < c:
        kv = known_desc[i] if i < len(known_desc) else None
        ev = extra[j][0] if j < len(extra) else None
        if kv is None and ev is None:
            break
        if ev is None or (kv is not None and kv >= ev):
            total += kv
            i += 1
        else:
            total += ev
            left -= 1
            if left == 0:
                j += 1
                left = extra[j][1] if j < len(extra) else 0
        taken += 1
    return total


@lru_cache(maxsize=500_000)
def _expected_opt(state: MarketState, instance: Instance) -> float:
    c, w0 = instance.capacity, instance.outside_weight
    if state.m_remaining == 0:
        return best_known_assortment(state, instance).value
    unit = instance.unit_rewards
    known_desc = sorted((k.weight for k in state.known), reverse=True)
    total = 0.0
    for prob, counts in realization_law(state, instance):
        if unit:
            extra = [
                (instance.priors[p].values[v], k)
                for p, ks in enumerate(counts)
                for v, k in enumerate(ks)
                if k
            ]
            s = _unit_top_sum(known_desc, extra, c)
            val = s / (s + w0)
        else:
            products = [(k.weight, k.reward) for k in state.known]
            for p, ks in enumerate(counts):
                for v, k in enumerate(ks):
                    # more than c copies of one product can never all be used
                    products += [(instance.priors[p].values[v], instance.entrant_reward)] * min(k, c)
            val = ex_post_optimum(products, instance)
        total += prob * val
    return total


def expected_ex_post_optimum(state: MarketState, instance: Instance) -> float:
    return _expected_opt(state, instance)


def is_terminal(state: MarketState, instance: Instance) -> bool:
    if state.m_remaining == 0:
        return True
    return expected_ex_post_optimum(state, instance) <= best_known_assortment(state, instance).value + EPS
