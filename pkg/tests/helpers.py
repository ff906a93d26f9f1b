"""Random instance and state generators shared by the tests."""
from __future__ import annotations

import numpy as np

from mnlexplore.model import HStatistic, Instance, MarketState, PriorSpec
from mnlexplore.optimum import is_terminal


def random_prior(rng, max_support=3, lo=0.0, hi=4.0, h=None, min_support=1) -> PriorSpec:
    k = int(rng.integers(min_support, max_support + 1))
    values = np.sort(rng.choice(np.round(np.linspace(lo, hi, 81), 6), size=k, replace=False))
    probs = rng.dirichlet(np.ones(k))
    probs = probs / probs.sum()
    probs[-1] = 1.0 - probs[:-1].sum()
    if h is None:
        h = HStatistic.mean()
    return PriorSpec(tuple(float(v) for v in values), tuple(float(p) for p in probs), h)


def random_unit_instance(rng, max_c=4, max_m=5, positive=True, min_support=1) -> Instance:
    c = int(rng.integers(1, max_c + 1))
    n_inc = int(rng.integers(c, c + 3))
    lo = 0.05 if positive else 0.0
    inc = tuple((float(rng.uniform(lo, 3.0)), 1.0) for _ in range(n_inc))
    prior = random_prior(rng, lo=0.0, hi=5.0, min_support=min_support)
    while prior.effective_weight <= 0:
        prior = random_prior(rng, lo=0.0, hi=5.0, min_support=min_support)
    m = int(rng.integers(1, max_m + 1))
    return Instance(c, float(rng.uniform(0.3, 2.0)), inc, (prior,) * m)


def random_reachable_state(rng, inst: Instance) -> MarketState:
    """Reveal a random number of entrants with values drawn from their priors."""
    state = MarketState.initial(inst)
    n_reveal = int(rng.integers(0, inst.m))
    for _ in range(n_reveal):
        groups = [g for g, n in enumerate(state.unknown) if n]
        g = int(rng.choice(groups))
        prior = inst.priors[g]
        v = prior.values[int(rng.choice(len(prior.values), p=prior.probs))]
        state = state.reveal(g, v, inst.entrant_reward)
    return state


def random_nonterminal_unit_state(rng, positive=True, min_support=1):
    while True:
        inst = random_unit_instance(rng, positive=positive, min_support=min_support)
        state = random_reachable_state(rng, inst)
        if state.m_remaining and not is_terminal(state, inst):
            return inst, state


def random_hetero_reward_instance(rng, max_m=3, max_support=2) -> Instance:
    """Heterogeneous incumbent rewards, common entrant reward, non-terminal start."""
    while True:
        c = int(rng.integers(1, 4))
        n_inc = int(rng.integers(c, 5))
        inc = tuple(
            (float(rng.uniform(0.1, 3.0)), float(rng.uniform(0.2, 3.0))) for _ in range(n_inc)
        )
        prior = random_prior(rng, max_support=max_support, lo=0.0, hi=5.0)
        if prior.effective_weight <= 0:
            continue
        m = int(rng.integers(1, max_m + 1))
        inst = Instance(c, float(rng.uniform(0.3, 2.0)), inc, (prior,) * m,
                        entrant_reward=float(rng.uniform(0.2, 3.0)))
        if not is_terminal(MarketState.initial(inst), inst):
            return inst


def random_class_c(rng, max_support=3):
    """Random two-entrant instance satisfying the class C standing assumptions."""
    from mnlexplore.hetero import ClassCInstance

    while True:
        w3 = float(rng.uniform(0.2, 2.5))
        w4 = float(rng.uniform(0.0, w3))
        p1 = random_prior(rng, max_support=max_support, lo=0.0, hi=6.0)
        p2 = random_prior(rng, max_support=max_support, lo=0.0, hi=6.0)
        if min(p1.theta_high, p2.theta_high) > w3 and p1.effective_weight > 0 and p2.effective_weight > 0:
            return ClassCInstance(p1, p2, w3, w4)


def random_fosd_pair(rng):
    """F1 shifts every support value of F2 upward; same probabilities, so h1 > h2."""
    from mnlexplore.hetero import ClassCInstance

    while True:
        f2 = random_prior(rng, max_support=3, lo=0.0, hi=4.0, min_support=2)
        shifts = np.sort(rng.uniform(0.05, 1.5, size=len(f2.values)))
        f1 = PriorSpec(tuple(v + s for v, s in zip(f2.values, shifts)), f2.probs, HStatistic.mean())
        w3 = float(rng.uniform(0.1, 3.5))
        w4 = float(rng.uniform(0.0, w3))
        if f2.theta_high > w3 and f2.effective_weight > 0:
            return ClassCInstance(f1, f2, w3, w4)
