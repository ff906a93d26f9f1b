"""Named instance families used by the experiments."""
from __future__ import annotations

from .hetero import BernoulliLikeParams
from .model import HStatistic, Instance, MarketState, PriorSpec


def instance_I(c: int, q: float) -> Instance:
    """c Bern(q) entrants; c/2 incumbents at 0.9 and c/2 at 2q; mean h; w0 = 1."""
    if c < 2 or c % 2:
        raise ValueError("I(c, q) needs an even capacity c >= 2")
    if not 0 < q < 0.45:
        raise ValueError("I(c, q) needs 0 < q < 0.45 so that 2q stays below 0.9")
    half = c // 2
    return Instance(
        capacity=c,
        outside_weight=1.0,
        incumbents=((0.9, 1.0),) * half + ((2 * q, 1.0),) * half,
        entrants=(PriorSpec.bernoulli(q, h=HStatistic.mean()),) * c,
    )


def instance_J(m: int, c: int, q: float, delta: float) -> Instance:
    """m Bern(q) entrants and c incumbents of weight q + delta."""
    if m < 1 or c < 1:
        raise ValueError("J(m, c, q, delta) needs m >= 1 and c >= 1")
    if not 0 < q < 1:
        raise ValueError("J(m, c, q, delta) needs 0 < q < 1")
    if not 0 < q + delta < 1:
        raise ValueError("J(m, c, q, delta) needs q + delta in (0, 1)")
    return Instance(
        capacity=c,
        outside_weight=1.0,
        incumbents=((q + delta, 1.0),) * c,
        entrants=(PriorSpec.bernoulli(q, h=HStatistic.mean()),) * m,
    )


def instance_bernoulli_like(mu: float, p1: float, p2: float, w3: float, w4: float) -> Instance:
    return BernoulliLikeParams(mu, p1, p2, w3, w4).to_class_c().to_instance()


def worked_example() -> tuple[Instance, MarketState]:
    """Known weights 5..9, capacity 4, five entrants worth 5 w.p. 0.9 and 10 w.p. 0.1."""
    prior = PriorSpec.from_pairs([(5.0, 0.9), (10.0, 0.1)], HStatistic.mean())
    inst = Instance(
        capacity=4,
        outside_weight=1.0,
        incumbents=tuple((float(w), 1.0) for w in (5, 6, 7, 8, 9)),
        entrants=(prior,) * 5,
    )
    return inst, MarketState.initial(inst)


NAMED = {
    "I": (instance_I, ("c", "q")),
    "J": (instance_J, ("m", "c", "q", "delta")),
    "bernoulli_like": (instance_bernoulli_like, ("mu", "p1", "p2", "w3", "w4")),
}


def build_named_instance(name: str, params: dict) -> Instance:
    if name not in NAMED:
        raise ValueError(f"unknown named instance {name!r}; choose from {sorted(NAMED)}")
    fn, keys = NAMED[name]
    missing = [k for k in keys if k not in params]
    if missing:
        raise ValueError(f"named instance {name!r} is missing parameters {missing}")
    extra = sorted(set(params) - set(keys))
    if extra:
        raise ValueError(f"named instance {name!r} got unknown parameters {extra}")
    args = [params[k] for k in keys]
    if name == "I":
        args[0] = int(args[0])
    if name == "J":
        args[0], args[1] = int(args[0]), int(args[1])
    return fn(*args)
