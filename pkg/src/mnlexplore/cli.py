"""Command-line front end.

    mnlexplore example            worked example: OPT_t, alpha(1..4), ell_t
    mnlexplore run --config F     exact and/or simulated evaluation from a JSON config
    mnlexplore baselines          EFA against ExploreAll, ExploreOne, UCB and TS
    mnlexplore hetero             sweep p2 for the Bernoulli-like two-entrant class
    mnlexplore noisy              Beta-entrant comparison of exploration companions

Exit codes: 0 success, 1 a built-in check failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .epochs import fictitious_revenue_alpha
from .hetero import LABELS, BernoulliLikeParams, classify_optimal, closed_form_regret, threshold_theta
from .instances import build_named_instance, instance_I, instance_J, worked_example
from .model import HStatistic, Instance, MarketState, PriorSpec
from .noisy import NoisyInstance, estimate_noisy_regret
from .optimum import expected_ex_post_optimum
from .oracle import exact_policy_regret
from .policies import PolicyKind, UcbSchedule, efa_decide, make_policy
from .simulate import DEFAULT_HORIZON_CAP, estimate_regret

CSV_COLUMNS = ("instance_id", "policy", "reps", "seed", "mean", "stderr", "diverged_count", "wall_ms")
MODES = ("exact", "simulate", "both")


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    """12 significant digits for floats; integers and strings unchanged."""
    if isinstance(x, (float, np.floating)):
        if math.isnan(x) or math.isinf(x):
            return str(float(x))
        return f"{float(x):.12g}"
    return str(x)


def truncate(x: float, digits: int = 3) -> float:
    f = 10**digits
    return math.floor(x * f + 1e-9) / f


# ---------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    instance: dict
    policies: list[PolicyKind]
    mode: str = "exact"
    reps: int = 1000
    master_seed: int = 0
    horizon_cap: int = DEFAULT_HORIZON_CAP
    output: str = "results.csv"
    instance_id: str = "instance"
    threads: int = 1
    timing: bool = True
    _built: Instance | None = field(default=None, repr=False, compare=False)

    def build_instance(self) -> Instance:
        if self._built is None:
            spec = self.instance
            if "named" in spec:
                self._built = build_named_instance(spec["named"], dict(spec.get("params", {})))
            else:
                self._built = Instance.from_json(spec)
        return self._built

    def to_json(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "instance": self.instance,
            "policies": [p.to_json() for p in self.policies],
            "mode": self.mode,
            "reps": self.reps,
            "seed": self.master_seed,
            "horizon_cap": self.horizon_cap,
            "output": self.output,
            "threads": self.threads,
            "timing": self.timing,
        }

    @staticmethod
    def from_json(obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        for key in ("instance", "policies"):
            if key not in obj:
                raise ConfigError(f"config field '{key}' is required")
        known = {"instance_id", "instance", "policies", "mode", "reps", "seed", "horizon_cap",
                 "output", "threads", "timing"}
        extra = sorted(set(obj) - known)
        if extra:
            raise ConfigError(f"unknown config fields {extra}")
        if not isinstance(obj["policies"], list) or not obj["policies"]:
            raise ConfigError("config field 'policies' must be a non-empty list")
        policies = []
        for i, p in enumerate(obj["policies"]):
            try:
                policies.append(PolicyKind.from_json(p))
            except (ValueError, KeyError, TypeError) as e:
                raise ConfigError(f"policies[{i}]: {e}") from e
        mode = obj.get("mode", "exact")
        if mode not in MODES:
            raise ConfigError(f"config field 'mode' must be one of {MODES}")
        cfg = ExperimentConfig(
            instance=obj["instance"],
            policies=policies,
            mode=mode,
            reps=int(obj.get("reps", 1000)),
            master_seed=int(obj.get("seed", 0)),
            horizon_cap=int(obj.get("horizon_cap", DEFAULT_HORIZON_CAP)),
            output=str(obj.get("output", "results.csv")),
            instance_id=str(obj.get("instance_id", "instance")),
            threads=int(obj.get("threads", 1)),
            timing=bool(obj.get("timing", True)),
        )
        try:
            cfg.build_instance()
        except (ValueError, KeyError, TypeError) as e:
            raise ConfigError(f"instance: {e}") from e
        if cfg.mode in ("exact", "both"):
            bad = [p.name for p in policies if not p.epoch_stationary]
            if bad:
                raise ConfigError(f"exact mode cannot evaluate {bad}; use mode 'simulate'")
        return cfg


def load_config(path: str) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    return ExperimentConfig.from_json(obj)


# ---------------------------------------------------------------- runners


def evaluate(cfg: ExperimentConfig) -> list[dict]:
    inst = cfg.build_instance()
    rows = []
    for kind in cfg.policies:
        modes = ("exact", "simulate") if cfg.mode == "both" else (cfg.mode,)
        for mode in modes:
            start = time.perf_counter()
            if mode == "exact":
                val = exact_policy_regret(inst, make_policy(kind, inst))
                est = dict(reps=0, mean=val, stderr=0.0, diverged_count=int(math.isinf(val)))
            else:
                e = estimate_regret(inst, make_policy(kind, inst), cfg.reps, cfg.master_seed,
                                    cfg.horizon_cap, cfg.threads)
                est = dict(reps=e.reps, mean=e.mean, stderr=e.stderr, diverged_count=e.diverged_count)
            wall = (time.perf_counter() - start) * 1e3 if cfg.timing else 0.0
            rows.append({
                "instance_id": cfg.instance_id,
                "policy": f"{kind.label}@{mode}",
                "seed": cfg.master_seed,
                "wall_ms": wall,
                **est,
            })
    return rows


def write_rows(rows: list[dict], out: str, columns=CSV_COLUMNS) -> None:
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for row in rows:
            wr.writerow([fmt(row[c]) for c in columns])


def _print_rows(rows, columns=CSV_COLUMNS):
    print(",".join(columns))
    for row in rows:
        print(",".join(fmt(row[c]) for c in columns))


# ---------------------------------------------------------------- commands


def cmd_example(args) -> int:
    start = time.perf_counter()
    inst, state = worked_example()
    if args.w0 is not None:
        inst = Instance(inst.capacity, args.w0, inst.incumbents, inst.entrants)
        state = MarketState.initial(inst)
    opt = expected_ex_post_optimum(state, inst)
    alphas = [fictitious_revenue_alpha(state, inst, ell) for ell in range(1, 5)]
    ell = efa_decide(state, inst).n_unknown
    elapsed = time.perf_counter() - start
    print(f"OPT_t     = {fmt(opt)}  (truncated {truncate(opt):.3f})")
    for i, a in enumerate(alphas, 1):
        print(f"alpha({i})  = {fmt(a)}  (truncated {truncate(a):.3f})")
    print(f"ell_t     = {ell}")
    print(f"elapsed   = {fmt(elapsed)} s")
    got = [truncate(opt)] + [truncate(a) for a in alphas]
    want = [0.969, 0.967, 0.968, 0.970, 0.972]
    ok = all(abs(g - w) < 1e-12 for g, w in zip(got, want)) and ell == 2
    print("check     =", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def _override(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.reps is not None:
        cfg.reps = args.reps
    if args.horizon_cap is not None:
        cfg.horizon_cap = args.horizon_cap
    if args.out is not None:
        cfg.output = args.out
    if args.threads is not None:
        cfg.threads = args.threads
    if args.no_timing:
        cfg.timing = False
    if cfg.reps < 2 and cfg.mode != "exact":
        raise ConfigError("reps must be at least 2 for simulation")
    return cfg


def cmd_run(args) -> int:
    if not args.config:
        raise ConfigError("run needs --config PATH")
    cfg = _override(load_config(args.config), args)
    rows = evaluate(cfg)
    write_rows(rows, cfg.output)
    Path(cfg.output + ".json").write_text(json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n")
    _print_rows(rows)
    return 0


def cmd_baselines(args) -> int:
    reps = args.reps or 10_000
    seed = args.seed if args.seed is not None else 0
    cap = args.horizon_cap or DEFAULT_HORIZON_CAP
    q = 0.02
    inst = instance_I(2, q)
    rows, checks = [], []

    def add(iid, label, reps_, mean, se, div, t0):
        rows.append(dict(instance_id=iid, policy=label, reps=reps_, seed=seed, mean=mean,
                         stderr=se, diverged_count=div,
                         wall_ms=0.0 if args.no_timing else (time.perf_counter() - t0) * 1e3))

    for name in ("efa", "explore_all", "explore_one"):
        t0 = time.perf_counter()
        v = exact_policy_regret(inst, make_policy(name, inst))
        add("I(2,0.02)", f"{name}@exact", 0, v, 0.0, 0, t0)
    efa_x, all_x = rows[0]["mean"], rows[1]["mean"]
    checks.append(("exact ExploreAll >= (1/q)(9/58) - 1", all_x >= (1 / q) * 9 / 58 - 1))
    checks.append(("exact EFA <= 24", efa_x <= 24))

    for kind in (PolicyKind("ts"), PolicyKind("efa"),
                 PolicyKind("ucb", UcbSchedule.constant(1 - q))):
        t0 = time.perf_counter()
        e = estimate_regret(inst, make_policy(kind, inst), reps, seed, cap, args.threads or 1)
        add("I(2,0.02)", f"{kind.label}@simulate", e.reps, e.mean, e.stderr, e.diverged_count, t0)
        if kind.name == "ts":
            checks.append(("TS mean - 3 se >= (1/q)(1-q)^2/9", e.mean - 3 * e.stderr >= (1 / q) * (1 - q) ** 2 / 9))
        elif kind.name == "efa":
            checks.append(("EFA mean + 3 se <= 24", e.mean + 3 * e.stderr <= 24))
        else:
            checks.append(("UCB constant p <= 1-q diverges always", e.diverged_count == e.reps))

    J = instance_J(64, 2, 0.125, 0.125)
    ests = {}
    for name in ("efa", "explore_one"):
        t0 = time.perf_counter()
        e = estimate_regret(J, make_policy(name, J), reps, seed, cap, args.threads or 1)
        ests[name] = e
        add("J(64,2,0.125,0.125)", f"{name}@simulate", e.reps, e.mean, e.stderr, e.diverged_count, t0)
    lo, ratio, hi = ratio_interval(ests["explore_one"], ests["efa"])
    print(f"J ratio ExploreOne/EFA = {fmt(ratio)}  3-sigma interval [{fmt(lo)}, {fmt(hi)}]")
    checks.append(("J ratio interval within [c/2, c]", lo >= 1 and hi <= 2))

    if args.out:
        write_rows(rows, args.out)
    _print_rows(rows)
    for label, ok in checks:
        print(("PASS " if ok else "FAIL ") + label)
    return 0 if all(ok for _, ok in checks) else 1


def ratio_interval(num, den, z: float = 3.0) -> tuple[float, float, float]:
    """Delta-method z-sigma interval for mean(num)/mean(den), independent samples."""
    r = num.mean / den.mean
    se = abs(r) * math.sqrt((num.stderr / num.mean) ** 2 + (den.stderr / den.mean) ** 2)
    return r - z * se, r, r + z * se


def cmd_hetero(args) -> int:
    base = BernoulliLikeParams(args.mu, args.p1, args.p1 / 2, args.w3, args.w4)
    theta = threshold_theta(base)
    grid = np.linspace(0, args.p1, args.points + 2)[1:-1]
    rows = []
    for p2 in grid:
        c = base.with_p2(float(p2)).to_class_c()
        row = {"p2": float(p2)}
        for lab in LABELS:
            row[f"reg_{lab}"] = closed_form_regret(c, lab)
        row["label"] = classify_optimal(c)
        rows.append(row)
    cols = ("p2", "reg_pi1", "reg_pi2", "reg_pi12", "label")
    if args.out:
        write_rows(rows, args.out, cols)
    _print_rows(rows, cols)
    print(f"theta = {fmt(theta)}")
    below = [r["label"] for r in rows if r["p2"] < theta]
    above = [r["label"] for r in rows if r["p2"] > theta]
    ok = all(lab == "pi1" for lab in below) and all(lab == "pi2" for lab in above)
    print("PASS" if ok else "FAIL", "labels switch from pi1 to pi2 at theta")
    return 0 if ok else 1


def cmd_noisy(args) -> int:
    reps = args.reps or 100_000
    seed = args.seed if args.seed is not None else 0
    inst = NoisyInstance(2, 1.0, (0.8, 0.5), 1.0, 1.0, args.k)
    rows, ests = [], {}
    for label, comp in (("top_c_minus_1", None), ("entrant_alone", ()), ("entrant_plus_second", (1,))):
        t0 = time.perf_counter()
        e, _ = estimate_noisy_regret(inst, comp, reps, seed, args.horizon_cap or DEFAULT_HORIZON_CAP)
        ests[label] = e
        rows.append(dict(instance_id=f"beta(1,1),k={args.k}", policy=label, reps=e.reps, seed=seed,
                         mean=e.mean, stderr=e.stderr, diverged_count=e.diverged_count,
                         wall_ms=0.0 if args.no_timing else (time.perf_counter() - t0) * 1e3))
    if args.out:
        write_rows(rows, args.out)
    _print_rows(rows)
    best = ests["top_c_minus_1"]
    ok = True
    for other in ("entrant_alone", "entrant_plus_second"):
        o = ests[other]
        gap, band = o.mean - best.mean, 3 * math.hypot(o.stderr, best.stderr)
        passed = gap > band
        ok &= passed
        print(("PASS" if passed else "FAIL"), f"{other} - top_c_minus_1 = {fmt(gap)} > {fmt(band)}")
    return 0 if ok else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mnlexplore", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--reps", type=int, help="replications per policy")
        sp.add_argument("--horizon-cap", type=int, dest="horizon_cap", help="round cap per episode")
        sp.add_argument("--out", help="CSV output path")
        sp.add_argument("--threads", type=int, help="worker threads for replications")
        sp.add_argument("--no-timing", action="store_true", dest="no_timing",
                        help="write wall_ms as 0 so reruns are byte-identical")

    ex = sub.add_parser("example", help="reproduce the worked example")
    ex.add_argument("--w0", type=float, default=None, help="override the outside weight")
    common(sub.add_parser("run", help="run a JSON experiment config"))
    common(sub.add_parser("baselines", help="EFA against the bandit baselines"))
    het = sub.add_parser("hetero", help="p2 sweep for the Bernoulli-like class")
    common(het)
    het.add_argument("--mu", type=float, default=0.7, help="common prior mean of both entrants")
    het.add_argument("--p1", type=float, default=0.1, help="probability that entrant 1 has weight mu/p1")
    het.add_argument("--w3", type=float, default=5.0, help="high incumbent weight")
    het.add_argument("--w4", type=float, default=2.5, help="low incumbent weight")
    het.add_argument("--points", type=int, default=19, help="number of p2 grid points")
    noisy = sub.add_parser("noisy", help="noisy-review exploration comparison")
    common(noisy)
    noisy.add_argument("--k", type=int, default=3, help="reviews needed to reveal the weight")
    return p


COMMANDS = {
    "example": cmd_example,
    "run": cmd_run,
    "baselines": cmd_baselines,
    "hetero": cmd_hetero,
    "noisy": cmd_noisy,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
