"""Exact expected regret by dynamic programming over condensed states.

The value of a state under an epoch-stationary policy is the epoch regret of
the plan it offers plus the expected value of the state after the next entrant
purchase. States are condensed (known multiset plus unknown counts), so the
recursion is memoized on MarketState.
"""
from __future__ import annotations

import itertools
import math
from math import comb, prod
from typing import Callable

import numpy as np

from .epochs import epoch_regret, sir_order, sir_values
from .model import EPS, AssortmentPlan, Instance, MarketState, expected_revenue, plan_totals
from .optimum import best_known_assortment, expected_ex_post_optimum, is_terminal

MAX_STATES = 10**6

Decide = Callable[[MarketState, Instance], AssortmentPlan]


def state_space_bound(instance: Instance) -> int:
    return prod(
        comb(n + len(p.values), len(p.values)) for p, n in zip(instance.priors, instance.prior_counts)
    )


def _check_bound(instance: Instance, max_states: int) -> None:
    bound = state_space_bound(instance)
    if bound > max_states:
        raise ValueError(f"condensed state space has up to {bound} states (> {max_states})")


def _children(plan: AssortmentPlan, state: MarketState, instance: Instance):
    """(probability, child) pairs after the next unknown purchase under ``plan``."""
    hs = [p.effective_weight for p in instance.priors]
    U = sum(n * hs[p] for p, n in enumerate(plan.unknown_counts))
    out = []
    for p, n in enumerate(plan.unknown_counts):
        if n == 0:
            continue
        share = n * hs[p] / U
        prior = instance.priors[p]
        for v, q in zip(prior.values, prior.probs):
            out.append((share * q, state.reveal(p, v, instance.entrant_reward)))
    return out


def _has_unknown_weight(plan: AssortmentPlan, state: MarketState, instance: Instance) -> bool:
    return plan_totals(plan, state, instance)[2] > 0


class PolicyEvaluator:
    """Memoized evaluation of one epoch-stationary policy; keeps its value table."""

    def __init__(self, instance: Instance, policy, max_states: int = MAX_STATES):
        if getattr(policy, "epoch_stationary", True) is False:
            raise ValueError("exact evaluation needs an epoch-stationary policy (not UCB or TS)")
        _check_bound(instance, max_states)
        self.instance = instance
        self.policy = policy
        self.values: dict[MarketState, float] = {}
        self.plans: dict[MarketState, AssortmentPlan] = {}

    def _decide(self, state: MarketState) -> AssortmentPlan:
        plan = self.policy(state, self.instance)
        plan.validate(state, self.instance)
        return plan

    def value(self, state: MarketState) -> float:
        memo = self.values
        if state in memo:
            return memo[state]
        inst = self.instance
        plan = self._decide(state)
        self.plans[state] = plan
        if plan.n_unknown == 0:
            best = best_known_assortment(state, inst).value
            ok = is_terminal(state, inst) and expected_revenue(plan, state, inst) >= best - EPS
            val = 0.0 if ok else math.inf
        elif not _has_unknown_weight(plan, state, inst):
            val = math.inf
        else:
            val = epoch_regret(plan, state, inst, expected_ex_post_optimum(state, inst))
            for prob, child in _children(plan, state, inst):
                val += prob * self.value(child)
        memo[state] = val
        return val


def exact_policy_regret(instance: Instance, policy, max_states: int = MAX_STATES) -> float:
    """Exact regret from the initial state; +inf when the policy never finishes exploring.

    ``policy`` is a Policy object or any callable ``(state, instance) -> plan``.
    """
    return PolicyEvaluator(instance, policy, max_states).value(MarketState.initial(instance))


def _unknown_count_vectors(state: MarketState, c: int):
    ranges = [range(n + 1) for n in state.unknown]
    for counts in itertools.product(*ranges):
        if 1 <= sum(counts) <= c:
            yield counts


def _completions(state: MarketState, instance: Instance, size: int, opt: float, prune: bool):
    if prune:
        # epoch regret is affine in the SIR sum of the known completion, so the
        # best completion takes the most negative SIR values
        sirs = sir_values(state, instance, opt)
        n_neg = int((sirs < 0).sum())
        yield tuple(sir_order(sirs)[: min(size, n_neg)])
        return
    n = len(state.known)
    for k in range(0, min(size, n) + 1):
        yield from itertools.combinations(range(n), k)


class OptimalSolver:
    """Minimum expected regret over all plans, with the minimizing plans recorded."""

    def __init__(self, instance: Instance, prune: bool = True, max_states: int = MAX_STATES):
        _check_bound(instance, max_states)
        self.instance = instance
        self.prune = prune
        self.values: dict[MarketState, float] = {}
        self.plans: dict[MarketState, AssortmentPlan] = {}

    def value(self, state: MarketState) -> float:
        memo = self.values
        if state in memo:
            return memo[state]
        inst = self.instance
        if is_terminal(state, inst):
            memo[state] = 0.0
            self.plans[state] = best_known_assortment(state, inst).argmax_plan
            return 0.0
        opt = expected_ex_post_optimum(state, inst)
        best, best_plan = math.inf, None
        for counts in _unknown_count_vectors(state, inst.capacity):
            probe = AssortmentPlan.make((), counts)
            if not _has_unknown_weight(probe, state, inst):
                continue
            future = sum(p * self.value(ch) for p, ch in _children(probe, state, inst))
            for ids in _completions(state, inst, inst.capacity - sum(counts), opt, self.prune):
                plan = AssortmentPlan.make(ids, counts)
                val = epoch_regret(plan, state, inst, opt) + future
                if val < best - 1e-15:
                    best, best_plan = val, plan
        memo[state] = best
        self.plans[state] = best_plan
        return best


def optimal_value(instance: Instance, prune: bool = True, max_states: int = MAX_STATES) -> float:
    return OptimalSolver(instance, prune, max_states).value(MarketState.initial(instance))


def recursion_residuals(evaluator: PolicyEvaluator) -> np.ndarray:
    """|V(s) - EpochReg - sum P V(child)| over every finite, exploring state in the table."""
    inst = evaluator.instance
    res = []
    for state, val in evaluator.values.items():
        plan = evaluator.plans[state]
        if plan.n_unknown == 0 or not math.isfinite(val):
            continue
        rhs = epoch_regret(plan, state, inst)
        rhs += sum(p * evaluator.values[ch] for p, ch in _children(plan, state, inst))
        res.append(abs(val - rhs))
    return np.array(res)
