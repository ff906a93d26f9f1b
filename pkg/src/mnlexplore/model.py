"""Problem data model and MNL choice primitives.

Weights are plain floats. Every object here is immutable so states can be
used as dictionary keys by the exact oracle and the simulator caches.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

EPS = 1e-9
"""Tolerance used for every comparison between revenues and optima."""


@dataclass(frozen=True)
class HStatistic:
    """How customers value an entrant that has never been purchased.

    ``kind`` is one of ``"mean"``, ``"quantile"`` or ``"fixed"``; ``value`` holds
    the quantile level or the fixed weight.
    """

    kind: str = "mean"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("mean", "quantile", "fixed"):
            raise ValueError(f"unknown h statistic {self.kind!r}")
        if self.kind == "quantile":
            if self.value is None or not 0.0 <= self.value <= 1.0:
                raise ValueError("quantile level must lie in [0, 1]")
        if self.kind == "fixed":
            if self.value is None or self.value < 0:
                raise ValueError("fixed weight must be nonnegative")

    @staticmethod
    def mean() -> "HStatistic":
        return HStatistic("mean")

    @staticmethod
    def quantile(p: float) -> "HStatistic":
        return HStatistic("quantile", float(p))

    @staticmethod
    def fixed(v: float) -> "HStatistic":
        return HStatistic("fixed", float(v))

    def to_json(self) -> dict:
        out = {"type": self.kind}
        if self.value is not None:
            out["value"] = self.value
        return out

    @staticmethod
    def from_json(obj: dict) -> "HStatistic":
        kind = obj.get("type")
        value = obj.get("value")
        return HStatistic(kind, None if value is None else float(value))


@dataclass(frozen=True)
class PriorSpec:
    """Finite-support prior over an entrant's attraction parameter."""

    values: tuple[float, ...]
    probs: tuple[float, ...]
    h: HStatistic = field(default_factory=HStatistic)

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("prior support must be non-empty")
        if len(self.values) != len(self.probs):
            raise ValueError("support values and probabilities differ in length")
        if any(v < 0 for v in self.values):
            raise ValueError("support values must be nonnegative")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("support values must be distinct and sorted ascending")
        if any(p <= 0 for p in self.probs):
            raise ValueError("support probabilities must be strictly positive")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("support probabilities must sum to 1")
        if self.h.kind == "fixed" and not self.values[0] <= self.h.value <= self.values[-1]:
            raise ValueError("fixed h must lie in the support hull")

    @staticmethod
    def from_pairs(pairs: Iterable[Sequence[float]], h: HStatistic | None = None) -> "PriorSpec":
        pairs = sorted((float(v), float(p)) for v, p in pairs)
        return PriorSpec(
            tuple(v for v, _ in pairs), tuple(p for _, p in pairs), h or HStatistic()
        )

    @staticmethod
    def bernoulli(q: float, upside: float = 1.0, h: HStatistic | None = None) -> "PriorSpec":
        """Weight ``upside`` with probability ``q``, else 0."""
        return PriorSpec.from_pairs([(0.0, 1.0 - q), (upside, q)], h)

    @property
    def theta_low(self) -> float:
        return self.values[0]

    @property
    def theta_high(self) -> float:
        return self.values[-1]

    @property
    def mean(self) -> float:
        return float(sum(v * p for v, p in zip(self.values, self.probs)))

    def cdf_levels(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def quantile(self, p: float) -> float:
        """inf{x : CDF(x) >= p}; levels are compared with a 1e-12 slack."""
        acc = 0.0
        for v, pr in zip(self.values, self.probs):
            acc += pr
            if acc >= p - 1e-12:
                return v
        return self.values[-1]

    @property
    def effective_weight(self) -> float:
        if self.h.kind == "mean":
            return self.mean
        if self.h.kind == "quantile":
            return self.quantile(self.h.value)
        return self.h.value

    def to_json(self) -> dict:
        return {
            "support": [[v, p] for v, p in zip(self.values, self.probs)],
            "h": self.h.to_json(),
        }

    @staticmethod
    def from_json(obj: dict) -> "PriorSpec":
        return PriorSpec.from_pairs(obj["support"], HStatistic.from_json(obj.get("h", {"type": "mean"})))


def effective_weight(prior: PriorSpec) -> float:
    return prior.effective_weight


@dataclass(frozen=True)
class Instance:
    """Capacity, outside weight, incumbents as (weight, reward) and entrant priors.

    Entrants sharing an identical PriorSpec are grouped; ``priors`` lists the
    distinct priors in order of first appearance and ``prior_counts`` how many
    entrants carry each one.
    """

    capacity: int
    outside_weight: float
    incumbents: tuple[tuple[float, float], ...]
    entrants: tuple[PriorSpec, ...]
    entrant_reward: float = 1.0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be at least 1")
        if not self.outside_weight > 0:
            raise ValueError("outside weight must be positive")
        if len(self.incumbents) < self.capacity:
            raise ValueError(
                "need at least `capacity` incumbents; pad with zero-weight dummies"
            )
        for w, r in self.incumbents:
            if w < 0 or not r > 0:
                raise ValueError("incumbent weights must be >= 0 and rewards > 0")
        if not self.entrant_reward > 0:
            raise ValueError("entrant reward must be positive")
        object.__setattr__(
            self, "incumbents", tuple((float(w), float(r)) for w, r in self.incumbents)
        )
        object.__setattr__(self, "entrants", tuple(self.entrants))
        priors: list[PriorSpec] = []
        groups = []
        for p in self.entrants:
            if p not in priors:
                priors.append(p)
            groups.append(priors.index(p))
        object.__setattr__(self, "_priors", tuple(priors))
        object.__setattr__(self, "_groups", tuple(groups))

    @property
    def priors(self) -> tuple[PriorSpec, ...]:
        return self._priors

    @property
    def entrant_groups(self) -> tuple[int, ...]:
        """Index into ``priors`` for each entrant."""
        return self._groups

    @property
    def prior_counts(self) -> tuple[int, ...]:
        return tuple(self._groups.count(g) for g in range(len(self._priors)))

    @property
    def m(self) -> int:
        return len(self.entrants)

    @property
    def homogeneous(self) -> bool:
        return len(self._priors) <= 1

    @property
    def unit_rewards(self) -> bool:
        return self.entrant_reward == 1.0 and all(r == 1.0 for _, r in self.incumbents)

    def to_json(self) -> dict:
        return {
            "capacity": self.capacity,
            "outside_weight": self.outside_weight,
            "incumbents": [{"weight": w, "reward": r} for w, r in self.incumbents],
            "entrants": [p.to_json() for p in self.entrants],
            "entrant_reward": self.entrant_reward,
        }

    @staticmethod
    def from_json(obj: dict) -> "Instance":
        return Instance(
            capacity=int(obj["capacity"]),
            outside_weight=float(obj["outside_weight"]),
            incumbents=tuple(
                (float(d["weight"]), float(d.get("reward", 1.0))) for d in obj["incumbents"]
            ),
            entrants=tuple(PriorSpec.from_json(e) for e in obj["entrants"]),
            entrant_reward=float(obj.get("entrant_reward", 1.0)),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class KnownProduct:
    weight: float
    reward: float
    origin: str = "incumbent"  # or "entrant"
    prior: int = -1  # prior group of a revealed entrant


@dataclass(frozen=True)
class MarketState:
    """Condensed knowledge: known products plus remaining unknown counts per prior.

    Incumbents come first in instance order. Revealed entrants follow, kept
    sorted by (prior, weight) so that two histories with the same condensed
    content compare and hash equal.
    """

    known: tuple[KnownProduct, ...]
    unknown: tuple[int, ...]

    @staticmethod
    def initial(instance: Instance) -> "MarketState":
        known = tuple(KnownProduct(w, r) for w, r in instance.incumbents)
        return MarketState(known, instance.prior_counts)

    @property
    def m_remaining(self) -> int:
        return sum(self.unknown)

    @property
    def weights(self) -> np.ndarray:
        return np.array([k.weight for k in self.known], dtype=float)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([k.reward for k in self.known], dtype=float)

    def revealed(self, prior: int) -> tuple[float, ...]:
        return tuple(k.weight for k in self.known if k.origin == "entrant" and k.prior == prior)

    def reveal(self, prior: int, weight: float, reward: float) -> "MarketState":
        if self.unknown[prior] <= 0:
            raise ValueError("no unknown entrant left for this prior")
        n_inc = sum(1 for k in self.known if k.origin == "incumbent")
        new = KnownProduct(float(weight), float(reward), "entrant", prior)
        ents = sorted(self.known[n_inc:] + (new,), key=lambda k: (k.prior, k.weight))
        unknown = list(self.unknown)
        unknown[prior] -= 1
        return MarketState(self.known[:n_inc] + tuple(ents), tuple(unknown))


@dataclass(frozen=True)
class AssortmentPlan:
    """Indices into ``MarketState.known`` plus a count of unknown entrants per prior."""

    known_ids: tuple[int, ...]
    unknown_counts: tuple[int, ...]

    @staticmethod
    def make(known_ids: Iterable[int], unknown_counts: Sequence[int]) -> "AssortmentPlan":
        return AssortmentPlan(tuple(sorted(int(i) for i in known_ids)), tuple(int(u) for u in unknown_counts))

    @property
    def n_unknown(self) -> int:
        return sum(self.unknown_counts)

    @property
    def size(self) -> int:
        return len(self.known_ids) + self.n_unknown

    def validate(self, state: MarketState, instance: Instance) -> None:
        if len(self.unknown_counts) != len(state.unknown):
            raise ValueError("plan has the wrong number of prior groups")
        if len(set(self.known_ids)) != len(self.known_ids):
            raise ValueError("plan repeats a known product")
        if any(i < 0 or i >= len(state.known) for i in self.known_ids):
            raise ValueError("plan references a product that is not known")
        if any(u < 0 or u > r for u, r in zip(self.unknown_counts, state.unknown)):
            raise ValueError("plan offers more unknown entrants than remain")
        if self.size > instance.capacity:
            raise ValueError("plan exceeds capacity")


def _plan_weights(plan: AssortmentPlan, state: MarketState, instance: Instance):
    plan.validate(state, instance)
    known_w = [state.known[i].weight for i in plan.known_ids]
    unk_w = [instance.priors[p].effective_weight for p, n in enumerate(plan.unknown_counts) for _ in range(n)]
    return known_w, unk_w


def choice_probabilities(plan: AssortmentPlan, state: MarketState, instance: Instance) -> np.ndarray:
    """Choice probabilities ordered as known members, unknown members, outside."""
    known_w, unk_w = _plan_weights(plan, state, instance)
    w = np.array(known_w + unk_w + [instance.outside_weight], dtype=float)
    return w / w.sum()


def plan_totals(plan: AssortmentPlan, state: MarketState, instance: Instance) -> tuple[float, float, float]:
    """(W, R, U): known weight, known reward-weight and unknown weight of a plan."""
    W = R = 0.0
    for i in plan.known_ids:
        W += state.known[i].weight
        R += state.known[i].reward * state.known[i].weight
    U = 0.0
    for p, n in enumerate(plan.unknown_counts):
        U += n * instance.priors[p].effective_weight
    return W, R, U


def expected_revenue(plan: AssortmentPlan, state: MarketState, instance: Instance) -> float:
    plan.validate(state, instance)
    W, R, U = plan_totals(plan, state, instance)
    return (R + instance.entrant_reward * U) / (W + U + instance.outside_weight)


@dataclass(frozen=True)
class Choice:
    kind: str  # "known", "unknown" or "outside"
    index: int = -1  # known id or prior group
    weight: float | None = None  # revealed weight when an unknown is chosen


def sample_choice(
    plan: AssortmentPlan,
    state: MarketState,
    instance: Instance,
    rng: np.random.Generator,
    draw_weight: bool = True,
) -> Choice:
    """One customer choice; an unknown pick also draws its weight unless ``draw_weight`` is off.

    Callers that pre-draw entrant weights (the simulator) pass ``draw_weight=False``.
    """
    probs = choice_probabilities(plan, state, instance)
    u = rng.random()
    j = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    j = min(j, len(probs) - 1)
    n_known = len(plan.known_ids)
    if j < n_known:
        return Choice("known", plan.known_ids[j])
    if j < len(probs) - 1:
        k = j - n_known
        for p, n in enumerate(plan.unknown_counts):
            if k < n:
                if not draw_weight:
                    return Choice("unknown", p)
                prior = instance.priors[p]
                v = prior.values[int(rng.choice(len(prior.values), p=prior.probs))]
                return Choice("unknown", p, v)
            k -= n
    return Choice("outside")
