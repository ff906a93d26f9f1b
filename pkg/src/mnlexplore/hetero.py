"""Two entrants with different priors, two incumbents, capacity two, w0 = 1.

Policies pi1, pi2 and pi12 explore entrant 1, entrant 2 or both first (with the
best incumbent filling the free slot), then the remaining entrant next to the
best known product. Their regrets are finite sums over the product of the two
supports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import HStatistic, Instance, PriorSpec

LABELS = ("pi1", "pi2", "pi12")
SUBSETS = {"pi1": (1,), "pi2": (2,), "pi12": (1, 2)}


@dataclass(frozen=True)
class ClassCInstance:
    prior1: PriorSpec
    prior2: PriorSpec
    w3: float
    w4: float

    def __post_init__(self):
        if not self.w3 >= self.w4 >= 0:
            raise ValueError("class C needs w3 >= w4 >= 0")
        for k, p in ((1, self.prior1), (2, self.prior2)):
            if not p.theta_high > self.w3:
                raise ValueError(f"entrant {k} never beats w3; exploring it is never worthwhile")
            if not p.effective_weight > 0:
                raise ValueError(f"entrant {k} has zero effective weight")

    @property
    def h1(self) -> float:
        return self.prior1.effective_weight

    @property
    def h2(self) -> float:
        return self.prior2.effective_weight

    def swapped(self) -> "ClassCInstance":
        return ClassCInstance(self.prior2, self.prior1, self.w3, self.w4)

    def to_instance(self) -> Instance:
        return Instance(
            capacity=2,
            outside_weight=1.0,
            incumbents=((self.w3, 1.0), (self.w4, 1.0)),
            entrants=(self.prior1, self.prior2),
        )

    @staticmethod
    def from_instance(inst: Instance) -> "ClassCInstance":
        if not (
            inst.capacity == 2 and inst.m == 2 and len(inst.incumbents) == 2
            and inst.outside_weight == 1.0 and inst.unit_rewards
        ):
            raise ValueError("instance is outside class C")
        (a, _), (b, _) = inst.incumbents
        return ClassCInstance(inst.entrants[0], inst.entrants[1], max(a, b), min(a, b))

    def outcomes(self):
        """(probability, w1, w2, OPT) over the joint support."""
        for v1, q1 in zip(self.prior1.values, self.prior1.probs):
            for v2, q2 in zip(self.prior2.values, self.prior2.probs):
                s = sum(sorted((v1, v2, self.w3, self.w4), reverse=True)[:2])
                yield q1 * q2, v1, v2, s / (s + 1.0)


def closed_form_regret(inst: ClassCInstance, policy: str) -> float:
    if policy not in LABELS:
        raise ValueError(f"policy must be one of {LABELS}")
    h1, h2, w3 = inst.h1, inst.h2, inst.w3
    total = 0.0
    for prob, w1, w2, opt in inst.outcomes():
        m13, m23 = max(w1, w3), max(w2, w3)
        if policy == "pi1":
            v = (w3 / h1 + m13 / h2) * (opt - 1) + (1 / h1 + 1 / h2) * opt + 2 * (opt - 1)
        elif policy == "pi2":
            v = (w3 / h2 + m23 / h1) * (opt - 1) + (1 / h1 + 1 / h2) * opt + 2 * (opt - 1)
        else:
            s = h1 + h2
            v = (
                (h1 * m13 / h2 + h2 * m23 / h1) / s * (opt - 1)
                + (1 + h1 / h2 + h2 / h1) / s * opt
                + 2 * (opt - 1)
            )
        total += prob * v
    return total


PAIRS = (("pi12", "pi1"), ("pi12", "pi2"), ("pi2", "pi1"))


def regret_difference(inst: ClassCInstance, pair: tuple[str, str]) -> float:
    """Reg(first) - Reg(second), from the direct difference formulas."""
    pair = tuple(pair)
    if pair not in PAIRS:
        raise ValueError(f"pair must be one of {PAIRS}")
    h1, h2, w3 = inst.h1, inst.h2, inst.w3
    s = h1 + h2
    total = 0.0
    for prob, w1, w2, opt in inst.outcomes():
        m13, m23 = max(w1, w3), max(w2, w3)
        if pair == ("pi12", "pi1"):
            v = (h2 / s * (m23 / h1 - m13 / h2) - w3 / h1) * (opt - 1) - opt / s
        elif pair == ("pi12", "pi2"):
            v = (h1 / s * (m13 / h2 - m23 / h1) - w3 / h2) * (opt - 1) - opt / s
        else:
            v = (w3 / h2 + m23 / h1 - w3 / h1 - m13 / h2) * (opt - 1)
        total += prob * v
    return total


def optimality_conditions(inst: ClassCInstance) -> dict[tuple[str, str], tuple[float, float]]:
    """(lhs, rhs) per pair; the first policy of the pair has lower regret iff lhs < rhs.

    The OPT/(h1+h2) term of the pi12 comparisons is moved to the right-hand side.
    """
    h1, h2, w3 = inst.h1, inst.h2, inst.w3
    s = h1 + h2
    lhs = {p: 0.0 for p in PAIRS}
    e_opt = 0.0
    for prob, w1, w2, opt in inst.outcomes():
        m13, m23 = max(w1, w3), max(w2, w3)
        lhs[PAIRS[0]] += prob * (h2 / s * (m23 / h1 - m13 / h2) - w3 / h1) * (opt - 1)
        lhs[PAIRS[1]] += prob * (h1 / s * (m13 / h2 - m23 / h1) - w3 / h2) * (opt - 1)
        lhs[PAIRS[2]] += prob * (w3 / h2 + m23 / h1 - w3 / h1 - m13 / h2) * (opt - 1)
        e_opt += prob * opt
    return {
        PAIRS[0]: (lhs[PAIRS[0]], e_opt / s),
        PAIRS[1]: (lhs[PAIRS[1]], e_opt / s),
        PAIRS[2]: (lhs[PAIRS[2]], 0.0),
    }


def classify_optimal(inst: ClassCInstance, tol: float = 1e-12) -> str:
    """Label of the smallest closed-form regret; ties resolve pi1, then pi2, then pi12."""
    regs = [closed_form_regret(inst, lab) for lab in LABELS]
    best = min(regs)
    for lab, r in zip(LABELS, regs):
        if r <= best + tol:
            return lab
    raise AssertionError("unreachable")


# ------------------------------------------------------------ Bernoulli-like


@dataclass(frozen=True)
class BernoulliLikeParams:
    """Entrant i has weight mu/p_i with probability p_i and 0 otherwise."""

    mu: float
    p1: float
    p2: float
    w3: float
    w4: float

    def __post_init__(self):
        if not (self.mu > 0 and 0 < self.p2 < self.p1 <= 1):
            raise ValueError("need mu > 0 and 0 < p2 < p1 <= 1")

    def feasibility(self) -> dict[str, bool]:
        mu, p1, w3, w4 = self.mu, self.p1, self.w3, self.w4
        return {
            "p1 < 1/6": p1 < 1 / 6,
            "w3 < mu/p1 < 2 w3": w3 < mu / p1 < 2 * w3,
            "w4 = w3/2": math.isclose(w4, w3 / 2, rel_tol=1e-12),
            "w4 > mu": w4 > mu,
            "w3 > 4": w3 > 4,
        }

    @property
    def feasible(self) -> bool:
        return all(self.feasibility().values())

    def prior(self, p: float) -> PriorSpec:
        return PriorSpec.from_pairs([(0.0, 1.0 - p), (self.mu / p, p)], HStatistic.mean())

    def to_class_c(self) -> ClassCInstance:
        return ClassCInstance(self.prior(self.p1), self.prior(self.p2), self.w3, self.w4)

    def with_p2(self, p2: float) -> "BernoulliLikeParams":
        return BernoulliLikeParams(self.mu, self.p1, p2, self.w3, self.w4)


def bernoulli_quadratic(params: BernoulliLikeParams) -> tuple[float, float, float]:
    """Coefficients (A, B, C) of Q(x) = A x^2 + B x + C.

    With D = (x (mu + p1) + mu p1)(x (w3 + 1) + mu)(p1 (w3 + 1) + mu) > 0,
    mu (Reg(pi2) - Reg(pi1)) at p2 = x equals (x - p1) Q(x) / D.
    """
    mu, p1, w3 = params.mu, params.p1, params.w3
    d1 = p1 * (w3 * (w3 - 2 * mu) + w3 - mu) + w3 * mu
    A = mu * p1 * (w3 + 1) * (p1 * (w3 + 1) + mu) + d1 * (mu + p1)
    B = (
        mu**2 * p1 * (p1 * (w3 + 1) + mu)
        + mu * p1 * (w3 - mu / p1) * (mu + p1)
        + mu * p1 * d1
    )
    C = mu**2 * p1**2 * (w3 - mu / p1)
    return A, B, C


def quadratic_value(params: BernoulliLikeParams, x: float) -> float:
    A, B, C = bernoulli_quadratic(params)
    return (A * x + B) * x + C


def quadratic_denominator(params: BernoulliLikeParams, x: float) -> float:
    mu, p1, w3 = params.mu, params.p1, params.w3
    return (x * (mu + p1) + mu * p1) * (x * (w3 + 1) + mu) * (p1 * (w3 + 1) + mu)


def threshold_theta(params: BernoulliLikeParams) -> float:
    """Positive root of Q; pi1 is optimal for p2 below it and pi2 above it."""
    flags = params.feasibility()
    bad = [k for k, ok in flags.items() if not ok]
    if bad:
        raise ValueError("infeasible parameters: " + ", ".join(bad))
    A, B, C = bernoulli_quadratic(params)
    disc = B * B - 4 * A * C
    # numerically stable form of the root (-B + sqrt(disc)) / (2A), valid since C < 0 < A
    theta = (2 * C) / (-B - math.sqrt(disc))
    assert 0 < theta < params.p1, "threshold outside (0, p1)"
    return theta
