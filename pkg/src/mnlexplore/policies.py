"""Assortment policies: each maps a MarketState to an AssortmentPlan."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .epochs import cumulative_benefit_beta, fictitious_revenue_alpha, sir_order, sir_values
from .model import EPS, AssortmentPlan, Instance, MarketState, PriorSpec
from .optimum import best_known_assortment, expected_ex_post_optimum, top_c_indices


# ---------------------------------------------------------------- schedules


@dataclass(frozen=True)
class UcbSchedule:
    """Quantile levels p_t for UCB, t = 1, 2, ...

    ``kind`` is ``"constant"`` (uses ``p``), ``"table"`` (uses ``table``; the
    last entry repeats forever) or ``"affine"`` (p_t = min(1, a + b t)).
    """

    kind: str
    p: float = 0.0
    table: tuple[float, ...] = ()
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind == "constant":
            levels = [self.p]
        elif self.kind == "table":
            if not self.table:
                raise ValueError("table schedule needs at least one level")
            levels = list(self.table)
        elif self.kind == "affine":
            if self.b < 0:
                raise ValueError("affine schedule needs b >= 0")
            levels = [min(1.0, self.a + self.b)]
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if any(not 0.0 <= x <= 1.0 for x in levels):
            raise ValueError("schedule levels must lie in [0, 1]")
        if any(y < x for x, y in zip(levels, levels[1:])):
            raise ValueError("schedule must be nondecreasing")

    @staticmethod
    def constant(p: float) -> "UcbSchedule":
        return UcbSchedule("constant", p=float(p))

    @staticmethod
    def from_table(levels: Sequence[float]) -> "UcbSchedule":
        return UcbSchedule("table", table=tuple(float(x) for x in levels))

    @staticmethod
    def affine_clamp(a: float, b: float) -> "UcbSchedule":
        return UcbSchedule("affine", a=float(a), b=float(b))

    def level(self, t: int) -> float:
        if self.kind == "constant":
            return self.p
        if self.kind == "table":
            return self.table[min(t, len(self.table)) - 1]
        return min(1.0, self.a + self.b * t)

    def next_change(self, t: int, prior: PriorSpec) -> int | None:
        """First round t' > t whose quantile differs from round t's, or None."""
        cur = prior.quantile(self.level(t))
        if self.kind == "constant":
            return None
        if self.kind == "table":
            for s in range(t + 1, len(self.table) + 1):
                if prior.quantile(self.level(s)) != cur:
                    return s
            return None
        if self.b == 0 or cur == prior.theta_high:
            return None
        # the quantile moves once p_t exceeds the CDF level of the current value
        cdf = float(np.cumsum(prior.probs)[prior.values.index(cur)])
        s = max(t + 1, int(math.floor((cdf + 1e-12 - self.a) / self.b)) + 1)
        while s - 1 > t and prior.quantile(self.level(s - 1)) != cur:
            s -= 1
        while prior.quantile(self.level(s)) == cur:
            if self.level(s) >= 1.0:
                return None
            s += 1
        return s

    def to_json(self) -> dict:
        if self.kind == "constant":
            return {"type": "constant", "p": self.p}
        if self.kind == "table":
            return {"type": "table", "levels": list(self.table)}
        return {"type": "affine", "a": self.a, "b": self.b}

    @staticmethod
    def from_json(obj: dict) -> "UcbSchedule":
        kind = obj.get("type")
        if kind == "constant":
            return UcbSchedule.constant(obj["p"])
        if kind == "table":
            return UcbSchedule.from_table(obj["levels"])
        if kind == "affine":
            return UcbSchedule.affine_clamp(obj["a"], obj["b"])
        raise ValueError(f"unknown schedule type {kind!r}")


# ---------------------------------------------------------------- helpers


def _top_known_plan(state: MarketState, k: int, n_unknown: Sequence[int], instance: Instance) -> AssortmentPlan:
    ws = [p.weight for p in state.known]
    return AssortmentPlan.make(top_c_indices(ws, k), n_unknown)


def _exploit(state: MarketState, instance: Instance):
    """(report, OPT_t, exploit?) for the shared exploitation test."""
    rep = best_known_assortment(state, instance)
    if state.m_remaining == 0:
        return rep, rep.value, True
    opt = expected_ex_post_optimum(state, instance)
    return rep, opt, opt <= rep.value + EPS


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _homogeneous_unit(instance: Instance, who: str) -> None:
    _require(instance.homogeneous, f"{who} needs a single entrant prior")
    _require(instance.unit_rewards, f"{who} needs unit rewards")


def _explore_with(state: MarketState, instance: Instance, ell: int) -> AssortmentPlan:
    return _top_known_plan(state, instance.capacity - ell, (ell,), instance)


# ---------------------------------------------------------------- policies


def efa_decide(state: MarketState, instance: Instance) -> AssortmentPlan:
    _homogeneous_unit(instance, "EFA")
    rep, opt, exploit = _exploit(state, instance)
    if exploit:
        return rep.argmax_plan
    k = min(instance.capacity, state.m_remaining)
    ells = [ell for ell in range(1, k + 1) if opt >= fictitious_revenue_alpha(state, instance, ell) - EPS]
    assert ells, "exploration branch with an empty threshold set"
    return _explore_with(state, instance, max(ells))


def efa_level(state: MarketState, instance: Instance) -> int:
    """Number of unknowns EFA offers (0 when exploiting)."""
    return efa_decide(state, instance).n_unknown


def hefa_decide(state: MarketState, instance: Instance) -> AssortmentPlan:
    _require(instance.homogeneous, "HEFA needs a single entrant prior")
    rep, opt, exploit = _exploit(state, instance)
    if exploit:
        return rep.argmax_plan
    c = instance.capacity
    m_t = state.m_remaining
    k = min(c, m_t)
    ell_t = max(
        ell for ell in range(1, k + 1)
        if opt >= cumulative_benefit_beta(state, instance, ell, opt) - EPS
    )
    sirs = sir_values(state, instance, opt)
    n_neg = int((sirs < 0).sum())
    ell_star = min(max(ell_t, c - n_neg), m_t)
    order = sir_order(sirs)
    return AssortmentPlan.make(order[: min(c - ell_star, n_neg)], (ell_star,))


def explore_all_decide(state: MarketState, instance: Instance) -> AssortmentPlan:
    _homogeneous_unit(instance, "ExploreAll")
    rep, _, exploit = _exploit(state, instance)
    if exploit:
        return rep.argmax_plan
    return _explore_with(state, instance, min(instance.capacity, state.m_remaining))


def explore_one_decide(state: MarketState, instance: Instance) -> AssortmentPlan:
    _homogeneous_unit(instance, "ExploreOne")
    rep, _, exploit = _exploit(state, instance)
    if exploit:
        return rep.argmax_plan
    return _explore_with(state, instance, 1)


def _index_plan(state: MarketState, instance: Instance, unknown_scores: Sequence[float]) -> AssortmentPlan:
    """Top c of known weights and per-unknown scores; known first on ties, then index."""
    items = [(-k.weight, 0, i) for i, k in enumerate(state.known)]
    items += [(-s, 1, j) for j, s in enumerate(unknown_scores)]
    chosen = sorted(items)[: instance.capacity]
    known = [i for _, g, i in chosen if g == 0]
    n_unk = sum(1 for _, g, _ in chosen if g == 1)
    return AssortmentPlan.make(known, (n_unk,))


def ucb_decide(state: MarketState, instance: Instance, schedule: UcbSchedule, t: int) -> AssortmentPlan:
    _homogeneous_unit(instance, "UCB")
    if state.m_remaining == 0:
        return _index_plan(state, instance, [])
    u = instance.priors[0].quantile(schedule.level(t))
    return _index_plan(state, instance, [u] * state.m_remaining)


def ts_decide(state: MarketState, instance: Instance, rng: np.random.Generator) -> AssortmentPlan:
    _homogeneous_unit(instance, "TS")
    if state.m_remaining == 0:
        return _index_plan(state, instance, [])
    prior = instance.priors[0]
    idx = np.searchsorted(np.cumsum(prior.probs), rng.random(state.m_remaining), side="right")
    idx = np.minimum(idx, len(prior.values) - 1)
    return _index_plan(state, instance, [prior.values[i] for i in idx])


def fixed_set_decide(state: MarketState, instance: Instance, subset: Sequence[int]) -> AssortmentPlan:
    _require(instance.m == 1, "FixedSet needs a single-entrant instance")
    _require(len(subset) <= instance.capacity - 1, "FixedSet subset must have size <= c - 1")
    _require(all(0 <= i < len(instance.incumbents) for i in subset), "FixedSet subset must index incumbents")
    if state.m_remaining == 1:
        return AssortmentPlan.make(subset, (1,))
    return best_known_assortment(state, instance).argmax_plan


def is_class_c(instance: Instance) -> bool:
    return (
        instance.capacity == 2
        and instance.m == 2
        and len(instance.incumbents) == 2
        and instance.outside_weight == 1.0
        and instance.unit_rewards
    )


def hetero_prior_decide(state: MarketState, instance: Instance, subset: Sequence[int]) -> AssortmentPlan:
    """Phase 1 explores ``subset`` (entrant labels 1 and 2), phase 2 the other entrant."""
    _require(is_class_c(instance), "hetero-prior policy needs a class-C instance")
    subset = tuple(sorted(set(subset)))
    _require(len(subset) >= 1 and set(subset) <= {1, 2}, "subset must be a nonempty subset of {1, 2}")
    groups = instance.entrant_groups
    counts = [0] * len(state.unknown)
    m_t = state.m_remaining
    if m_t == 2:
        for j in subset:
            counts[groups[j - 1]] += 1
        return _top_known_plan(state, 2 - len(subset), counts, instance)
    if m_t == 1:
        counts = [1 if n else 0 for n in state.unknown]
        return _top_known_plan(state, 1, counts, instance)
    return _top_known_plan(state, 2, counts, instance)


# ---------------------------------------------------------------- PolicyKind

POLICY_NAMES = (
    "efa", "hefa", "explore_all", "explore_one", "ucb", "ts",
    "fixed_set", "hetero_prior", "noisy_topk",
)


@dataclass(frozen=True)
class PolicyKind:
    """Tagged policy description; JSON form {"policy": name, ...variant fields}."""

    name: str
    schedule: UcbSchedule | None = None
    subset: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.name!r}")
        if self.name == "ucb" and self.schedule is None:
            raise ValueError("ucb needs a schedule")
        if self.name in ("fixed_set", "hetero_prior") and self.subset is None:
            raise ValueError(f"{self.name} needs a subset")

    @property
    def epoch_stationary(self) -> bool:
        return self.name not in ("ucb", "ts")

    @property
    def label(self) -> str:
        if self.name == "ucb":
            s = self.schedule
            if s.kind == "constant":
                return f"ucb[const {s.p:g}]"
            if s.kind == "affine":
                return f"ucb[affine {s.a:g},{s.b:g}]"
            return f"ucb[table {len(s.table)}]"
        if self.subset is not None:
            return f"{self.name}{list(self.subset)}"
        return self.name

    def to_json(self) -> dict:
        out: dict = {"policy": self.name}
        if self.schedule is not None:
            out["schedule"] = self.schedule.to_json()
        if self.subset is not None:
            out["subset"] = list(self.subset)
        return out

    @staticmethod
    def from_json(obj: dict) -> "PolicyKind":
        if "policy" not in obj:
            raise ValueError("policy object needs a 'policy' field")
        sched = obj.get("schedule")
        subset = obj.get("subset")
        return PolicyKind(
            obj["policy"],
            UcbSchedule.from_json(sched) if sched is not None else None,
            tuple(int(i) for i in subset) if subset is not None else None,
        )


@dataclass
class Policy:
    """A PolicyKind bound to an instance, with a uniform ``decide`` signature."""

    kind: PolicyKind
    instance: Instance
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def epoch_stationary(self) -> bool:
        return self.kind.epoch_stationary

    def decide(self, state: MarketState, t: int = 1, rng: np.random.Generator | None = None) -> AssortmentPlan:
        inst, name = self.instance, self.kind.name
        if name == "ucb":
            return ucb_decide(state, inst, self.kind.schedule, t)
        if name == "ts":
            if rng is None:
                raise ValueError("TS needs an rng stream")
            return ts_decide(state, inst, rng)
        if name == "noisy_topk":
            raise ValueError("noisy_topk acts on the noisy-review model; see mnlexplore.noisy")
        plan = self._cache.get(state)
        if plan is None:
            if name == "efa":
                plan = efa_decide(state, inst)
            elif name == "hefa":
                plan = hefa_decide(state, inst)
            elif name == "explore_all":
                plan = explore_all_decide(state, inst)
            elif name == "explore_one":
                plan = explore_one_decide(state, inst)
            elif name == "fixed_set":
                plan = fixed_set_decide(state, inst, self.kind.subset)
            else:
                plan = hetero_prior_decide(state, inst, self.kind.subset)
            self._cache[state] = plan
        return plan

    def __call__(self, state: MarketState, instance: Instance | None = None) -> AssortmentPlan:
        return self.decide(state)


def make_policy(kind: PolicyKind | dict | str, instance: Instance) -> Policy:
    if isinstance(kind, str):
        kind = PolicyKind(kind)
    elif isinstance(kind, dict):
        kind = PolicyKind.from_json(kind)
    return Policy(kind, instance)
