import json
import math

import numpy as np
import pytest

from mnlexplore.instances import instance_I
from mnlexplore.model import Instance, PriorSpec
from mnlexplore.oracle import exact_policy_regret
from mnlexplore.policies import PolicyKind, UcbSchedule, make_policy
from mnlexplore.simulate import (
    EpisodeLog, RegretEstimate, aggregate, estimate_regret, run_episode, run_episode_reference,
    run_episodes,
)


def _combined(a: RegretEstimate, b: RegretEstimate) -> float:
    return math.hypot(a.stderr, b.stderr)


def test_terminal_start_has_no_regret():
    low = PriorSpec.from_pairs([(0.1, 0.5), (0.5, 0.5)])
    inst = Instance(2, 1.0, ((1.0, 1.0), (0.8, 1.0)), (low,))
    for name in ("efa", "explore_one", "ts"):
        log = run_episode(inst, name, 1, 0)
        assert log.rounds == 0 and log.total_regret == 0.0 and not log.diverged


@pytest.mark.parametrize("name", ["efa", "explore_all", "ts"])
def test_episode_is_deterministic(name):
    inst = instance_I(2, 0.1)
    a = run_episode(inst, name, 7, 3)
    b = run_episode(inst, name, 7, 3)
    assert a == b
    assert run_episode(inst, name, 7, 4) != a


def test_threads_do_not_change_results():
    inst = instance_I(2, 0.1)
    a = run_episodes(inst, "ts", 64, 11, threads=1)
    b = run_episodes(inst, "ts", 64, 11, threads=4)
    assert a == b


def test_efa_simulation_matches_exact_value():
    inst = instance_I(2, 0.1)
    exact = exact_policy_regret(inst, make_policy("efa", inst))
    est = estimate_regret(inst, "efa", 20_000, 5)
    assert est.diverged_count == 0
    assert abs(est.mean - exact) <= 3.5 * est.stderr


def test_heterogeneous_reward_simulation_matches_exact():
    prior = PriorSpec.from_pairs([(0.0, 0.6), (2.5, 0.4)])
    inst = Instance(2, 1.0, ((1.0, 2.0), (1.5, 0.6), (0.5, 1.0)), (prior,) * 2, entrant_reward=1.5)
    exact = exact_policy_regret(inst, make_policy("hefa", inst))
    est = estimate_regret(inst, "hefa", 20_000, 9)
    assert abs(est.mean - exact) <= 3.5 * est.stderr


@pytest.mark.parametrize("kind", [
    PolicyKind("efa"), PolicyKind("explore_one"), PolicyKind("ts"),
    PolicyKind("ucb", UcbSchedule.affine_clamp(0.5, 0.05)),
])
def test_fast_path_matches_reference_loop(kind):
    inst = instance_I(2, 0.3)
    reps = 3000
    fast = aggregate(*zip(*[(g.total_regret, g.diverged) for g in run_episodes(inst, kind, reps, 21)]))
    ref_logs = [run_episode_reference(inst, kind, 22, r, 100_000) for r in range(reps)]
    ref = aggregate(np.array([g.total_regret for g in ref_logs]), np.array([g.diverged for g in ref_logs]))
    assert fast.diverged_count == ref.diverged_count == 0
    assert abs(fast.mean - ref.mean) <= 4 * _combined(fast, ref)


def test_realized_estimator_agrees_with_conditional():
    inst = instance_I(2, 0.1)
    a = estimate_regret(inst, "efa", 100_000, 3)
    b = estimate_regret(inst, "efa", 100_000, 4, estimator="realized")
    assert abs(a.mean - b.mean) <= 3 * _combined(a, b)
    assert b.stderr > a.stderr  # conditioning removes reward noise


def test_ucb_never_exploring_diverges():
    q = 0.1
    inst = instance_I(2, q)
    est = estimate_regret(inst, PolicyKind("ucb", UcbSchedule.constant(1 - q)), 50, 1, horizon_cap=10_000)
    assert est.diverged_count == 50 and math.isnan(est.mean)
    log = run_episode(inst, PolicyKind("ucb", UcbSchedule.constant(0.5)), 1, 0, horizon_cap=1000)
    assert log.diverged and log.rounds == 1000 and log.total_regret > 0


def test_horizon_cap_flags_divergence_for_slow_policies():
    inst = instance_I(2, 0.02)
    log = run_episode(inst, "explore_all", 1, 0, horizon_cap=3)
    assert log.diverged and log.rounds == 3
    with pytest.raises(ValueError):
        run_episode(inst, "efa", 1, 0, horizon_cap=0)


def test_estimate_requires_two_reps_and_json():
    inst = instance_I(2, 0.1)
    with pytest.raises(ValueError):
        estimate_regret(inst, "efa", 1, 0)
    log = run_episode(inst, "efa", 2, 0)
    obj = json.loads(json.dumps(log.to_json()))
    assert EpisodeLog(obj["rounds"], obj["total_regret"], [tuple(p) for p in obj["purchases"]], obj["diverged"]) == log
    est = estimate_regret(inst, "efa", 10, 2)
    assert json.loads(json.dumps(est.to_json())) == est.to_json()


def test_aggregate_excludes_diverged():
    est = aggregate(np.array([1.0, 3.0, 100.0]), np.array([False, False, True]))
    assert est.mean == 2.0 and est.reps == 3 and est.diverged_count == 1
    assert est.stderr == pytest.approx(np.std([1.0, 3.0], ddof=1) / math.sqrt(2))


def test_purchases_reveal_every_entrant_under_efa():
    inst = instance_I(4, 0.2)
    for r in range(20):
        log = run_episode(inst, "efa", 0, r)
        assert len(log.purchases) == inst.m
        rounds = [t for t, _ in log.purchases]
        assert rounds == sorted(rounds) and rounds[-1] <= log.rounds
