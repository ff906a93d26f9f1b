"""Seeded Monte Carlo episodes and regret estimates.

All entrant weights are drawn before the first round, which fixes the
full-information optimum OPT for the episode. Regret per round is
OPT - Rev(S_t), the conditional expectation of the realized loss given the
offered plan; purchases still drive the state.

Epoch-stationary policies offer one plan until the next entrant purchase, so
an epoch is simulated as one geometric draw. UCB is fast-forwarded between the
rounds where its quantile changes. Thompson sampling resamples every round and
runs in a compiled block kernel (see ``kernels``).

Every replication owns three generators seeded by
``SeedSequence([master_seed, replication, kind])``: entrant weights, choice
dynamics and TS samples. Results therefore depend only on
(master_seed, replication) and not on scheduling.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import (
    EPS, AssortmentPlan, Instance, MarketState, expected_revenue, plan_totals, sample_choice,
)
from .optimum import best_known_assortment, ex_post_optimum, is_terminal
from .policies import Policy, PolicyKind, make_policy, ucb_decide

DEFAULT_HORIZON_CAP = 10**6
KIND_WEIGHTS, KIND_DYNAMICS, KIND_SAMPLES = 0, 1, 2
TS_BLOCK = 2048
REALIZED_BLOCK = 1024


def stream(master_seed: int, replication: int, kind: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(replication), int(kind)]))


@dataclass
class EpisodeLog:
    rounds: int
    total_regret: float
    purchases: list[tuple[int, float]] = field(default_factory=list)
    diverged: bool = False

    def to_json(self) -> dict:
        return {
            "rounds": self.rounds,
            "total_regret": self.total_regret,
            "purchases": [[r, w] for r, w in self.purchases],
            "diverged": self.diverged,
        }


@dataclass(frozen=True)
class RegretEstimate:
    mean: float
    stderr: float
    reps: int
    diverged_count: int

    def to_json(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "reps": self.reps,
                "diverged_count": self.diverged_count}


def aggregate(totals: np.ndarray, diverged: np.ndarray) -> RegretEstimate:
    """Mean and standard error over non-diverged episodes, in replication order."""
    x = np.asarray(totals, dtype=float)[~np.asarray(diverged, dtype=bool)]
    n = x.size
    mean = float(np.sum(x) / n) if n else math.nan
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n >= 2 else math.nan
    return RegretEstimate(mean, se, len(totals), int(np.sum(diverged)))


# ------------------------------------------------------------------ helpers


def draw_entrant_weights(instance: Instance, rng: np.random.Generator) -> list[np.ndarray]:
    """Realized weights per prior group, in the order they will be revealed."""
    out = []
    for prior, n in zip(instance.priors, instance.prior_counts):
        idx = rng.choice(len(prior.values), size=n, p=np.array(prior.probs))
        out.append(np.array(prior.values, dtype=float)[idx])
    return out


def realized_optimum(instance: Instance, queues: list[np.ndarray]) -> float:
    products = list(instance.incumbents)
    for q in queues:
        products += [(float(w), instance.entrant_reward) for w in q]
    return ex_post_optimum(products, instance)


@dataclass(frozen=True)
class _PlanInfo:
    plan: AssortmentPlan
    rev: float
    p_unknown: float
    shares: np.ndarray  # cumulative purchase shares over prior groups
    stop_ok: bool  # zero forward regret: terminal state offered its optimum
    cum: np.ndarray  # cumulative choice law over (unknown, known members, outside)
    rew: np.ndarray


def _plan_info(plan: AssortmentPlan, state: MarketState, instance: Instance) -> _PlanInfo:
    W, R, U = plan_totals(plan, state, instance)
    den = W + U + instance.outside_weight
    rev = expected_revenue(plan, state, instance)
    hs = [p.effective_weight for p in instance.priors]
    parts = np.array([n * hs[p] for p, n in enumerate(plan.unknown_counts)], dtype=float)
    shares = np.cumsum(parts / U) if U > 0 else np.zeros(len(parts))
    stop_ok = False
    if plan.n_unknown == 0:
        best = best_known_assortment(state, instance).value
        stop_ok = is_terminal(state, instance) and rev >= best - EPS
    ws = [state.known[i].weight for i in plan.known_ids]
    rs = [state.known[i].reward for i in plan.known_ids]
    cum = np.cumsum(np.array([U] + ws + [instance.outside_weight]) / den)
    rew = np.array([instance.entrant_reward] + rs + [0.0])
    return _PlanInfo(plan, rev, U / den, shares, stop_ok, cum, rew)


def _info_cache(policy: Policy) -> dict:
    return policy.__dict__.setdefault("_sim_info", {})


def _pick_group(info: _PlanInfo, rng: np.random.Generator) -> int:
    nz = np.flatnonzero(np.diff(np.concatenate(([0.0], info.shares))) > 0)
    if nz.size == 1:
        return int(nz[0])
    return int(min(np.searchsorted(info.shares, rng.random(), side="right"), len(info.shares) - 1))


# ------------------------------------------------------------------ episodes


def _run_epochs(policy: Policy, master_seed, rep, cap, realized: bool) -> EpisodeLog:
    inst = policy.instance
    queues = draw_entrant_weights(inst, stream(master_seed, rep, KIND_WEIGHTS))
    rng = stream(master_seed, rep, KIND_DYNAMICS)
    opt = realized_optimum(inst, queues)
    pos = [0] * len(queues)
    cache = _info_cache(policy)
    state = MarketState.initial(inst)
    t, reg, purchases = 0, 0.0, []
    while True:
        info = cache.get(state)
        if info is None:
            info = cache[state] = _plan_info(policy.decide(state), state, inst)
        if info.plan.n_unknown == 0 or info.p_unknown <= 0:
            if info.stop_ok:
                return EpisodeLog(t, reg, purchases, False)
            return EpisodeLog(cap, reg + (cap - t) * (opt - info.rev), purchases, True)
        if realized:
            rounds, gained, found = 0, 0.0, False
            while not found and t + rounds < cap:
                n = min(REALIZED_BLOCK, cap - t - rounds)
                found, used, gained = kernels.realized_block(info.cum, info.rew, rng.random(n), gained)
                rounds += used
            reg += rounds * opt - gained
            t += rounds
            if not found:
                return EpisodeLog(t, reg, purchases, True)
        else:
            n = int(rng.geometric(info.p_unknown))
            if t + n > cap:
                return EpisodeLog(cap, reg + (cap - t) * (opt - info.rev), purchases, True)
            reg += n * (opt - info.rev)
            t += n
        g = _pick_group(info, rng)
        w = float(queues[g][pos[g]])
        pos[g] += 1
        purchases.append((t, w))
        state = state.reveal(g, w, inst.entrant_reward)


def _run_ucb(policy: Policy, master_seed, rep, cap) -> EpisodeLog:
    inst = policy.instance
    sched = policy.kind.schedule
    prior = inst.priors[0]
    queues = draw_entrant_weights(inst, stream(master_seed, rep, KIND_WEIGHTS))
    rng = stream(master_seed, rep, KIND_DYNAMICS)
    opt = realized_optimum(inst, queues)
    cache = _info_cache(policy)
    state = MarketState.initial(inst)
    t, reg, purchases, pos = 0, 0.0, [], 0
    while True:
        r = t + 1
        key = (state, prior.quantile(sched.level(r)))
        info = cache.get(key)
        if info is None:
            info = cache[key] = _plan_info(ucb_decide(state, inst, sched, r), state, inst)
        nxt = sched.next_change(r, prior)
        seg = math.inf if nxt is None else nxt - r
        loss = opt - info.rev
        if info.plan.n_unknown == 0 or info.p_unknown <= 0:
            if nxt is None:
                if info.stop_ok:
                    return EpisodeLog(t, reg, purchases, False)
                return EpisodeLog(cap, reg + (cap - t) * loss, purchases, True)
            n = min(seg, cap - t)
            reg += n * loss
            t += n
            if t >= cap:
                return EpisodeLog(cap, reg, purchases, True)
            continue
        n = int(rng.geometric(info.p_unknown))
        if n > seg:
            n = min(seg, cap - t)
            reg += n * loss
            t += n
            if t >= cap:
                return EpisodeLog(cap, reg, purchases, True)
            continue
        if t + n > cap:
            return EpisodeLog(cap, reg + (cap - t) * loss, purchases, True)
        reg += n * loss
        t += n
        w = float(queues[0][pos])
        pos += 1
        purchases.append((t, w))
        state = state.reveal(0, w, inst.entrant_reward)


def _run_ts(policy: Policy, master_seed, rep, cap) -> EpisodeLog:
    inst = policy.instance
    if not (inst.homogeneous and inst.unit_rewards):
        raise ValueError("TS simulation needs a single prior and unit rewards")
    prior = inst.priors[0]
    queues = draw_entrant_weights(inst, stream(master_seed, rep, KIND_WEIGHTS))
    rng_d = stream(master_seed, rep, KIND_DYNAMICS)
    rng_s = stream(master_seed, rep, KIND_SAMPLES)
    opt = realized_optimum(inst, queues)
    m, c = inst.m, inst.capacity
    n_inc = len(inst.incumbents)
    known = np.zeros(n_inc + m)
    known[:n_inc] = sorted((w for w, _ in inst.incumbents), reverse=True)
    queue = queues[0].astype(float)
    values = np.array(prior.values, dtype=float)
    cdf = np.cumsum(prior.probs)
    h = prior.effective_weight
    pur_round = np.zeros(m, dtype=np.int64)
    pur_w = np.zeros(m)
    n_known, m_left, q_pos, n_pur, t, reg = n_inc, m, 0, 0, 0, 0.0
    while True:
        us = rng_s.random((TS_BLOCK, m))
        uc = rng_d.random(TS_BLOCK)
        status, rounds, reg, n_known, m_left, q_pos, n_pur = kernels.ts_block(
            known, n_known, m_left, queue, q_pos, values, cdf, h, inst.outside_weight, c,
            opt, us, uc, t, cap, reg, pur_round, pur_w, n_pur,
        )
        t += rounds
        if status != kernels.BLOCK_DONE:
            purchases = [(int(pur_round[i]), float(pur_w[i])) for i in range(n_pur)]
            return EpisodeLog(t, float(reg), purchases, status == kernels.BLOCK_CAPPED)


def run_episode(
    instance: Instance,
    policy: Policy | PolicyKind | dict | str,
    master_seed: int,
    replication_index: int,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
    estimator: str = "conditional",
) -> EpisodeLog:
    """One episode; ``estimator="realized"`` charges OPT minus realized rewards instead."""
    if horizon_cap < 1:
        raise ValueError("horizon_cap must be at least 1")
    if not isinstance(policy, Policy):
        policy = make_policy(policy, instance)
    name = policy.kind.name
    if estimator not in ("conditional", "realized"):
        raise ValueError("estimator must be 'conditional' or 'realized'")
    if name == "ts":
        if estimator != "conditional":
            raise ValueError("the realized-reward estimator covers epoch-stationary policies")
        return _run_ts(policy, master_seed, replication_index, horizon_cap)
    if name == "ucb":
        if estimator != "conditional":
            raise ValueError("the realized-reward estimator covers epoch-stationary policies")
        return _run_ucb(policy, master_seed, replication_index, horizon_cap)
    if name == "noisy_topk":
        raise ValueError("use mnlexplore.noisy for the noisy-review model")
    return _run_epochs(policy, master_seed, replication_index, horizon_cap, estimator == "realized")


def run_episodes(instance, policy, reps, master_seed, horizon_cap=DEFAULT_HORIZON_CAP,
                 threads=1, estimator="conditional") -> list[EpisodeLog]:
    if not isinstance(policy, Policy):
        policy = make_policy(policy, instance)

    def one(r):
        return run_episode(instance, policy, master_seed, r, horizon_cap, estimator)

    if threads <= 1:
        return [one(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(one, range(reps)))  # map keeps replication order


def estimate_regret(
    instance: Instance,
    policy,
    reps: int,
    master_seed: int,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
    threads: int = 1,
    estimator: str = "conditional",
) -> RegretEstimate:
    if reps < 2:
        raise ValueError("reps must be at least 2")
    logs = run_episodes(instance, policy, reps, master_seed, horizon_cap, threads, estimator)
    return aggregate(
        np.array([g.total_regret for g in logs]), np.array([g.diverged for g in logs])
    )


def run_episode_reference(
    instance: Instance,
    policy,
    master_seed: int,
    replication_index: int,
    horizon_cap: int = DEFAULT_HORIZON_CAP,
) -> EpisodeLog:
    """Round-by-round decide, sample_choice, reveal loop (slow; for cross-checks).

    Uses the same entrant-weight stream as ``run_episode`` but consumes the
    dynamics stream differently, so agreement is distributional.
    """
    if not isinstance(policy, Policy):
        policy = make_policy(policy, instance)
    inst = policy.instance
    queues = draw_entrant_weights(inst, stream(master_seed, replication_index, KIND_WEIGHTS))
    rng = stream(master_seed, replication_index, KIND_DYNAMICS)
    rng_s = stream(master_seed, replication_index, KIND_SAMPLES)
    opt = realized_optimum(inst, queues)
    pos = [0] * len(queues)
    state = MarketState.initial(inst)
    reg, purchases = 0.0, []
    name = policy.kind.name
    for t in range(1, horizon_cap + 1):
        plan = policy.decide(state, t, rng_s)
        if plan.n_unknown == 0:
            best = best_known_assortment(state, inst).value
            done = is_terminal(state, inst) and expected_revenue(plan, state, inst) >= best - EPS
            if name == "ts" and state.m_remaining:
                kth = sorted((k.weight for k in state.known), reverse=True)[inst.capacity - 1]
                done = done and inst.priors[0].theta_high <= kth
            if name == "ucb" and state.m_remaining:
                done = done and policy.kind.schedule.next_change(t, inst.priors[0]) is None
            if done:
                return EpisodeLog(t - 1, reg, purchases, False)
        reg += opt - expected_revenue(plan, state, inst)
        choice = sample_choice(plan, state, inst, rng, draw_weight=False)
        if choice.kind == "unknown":
            g = choice.index
            w = float(queues[g][pos[g]])
            pos[g] += 1
            purchases.append((t, w))
            state = state.reveal(g, w, inst.entrant_reward)
    return EpisodeLog(horizon_cap, reg, purchases, True)
