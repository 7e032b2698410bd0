"""``randflight`` command line: simulate | wasserstein | tails | verify.

Options come from flags and an optional ``--config`` JSON file; flags win.
The master seed resolves as ``--seed``, then the config file, then the
``FLIGHT_SEED`` environment variable, then 0. Exit status: 0 when every
verdict holds, 1 when some verdict fails (outputs are still written), 2 on
invalid input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import verification as V
from .experiments import run_convergence, run_tail_table
from .flights import Exponential, Polynomial, SuperExponential, build_flight
from .limits import sample_limit
from .stochastic import derive_seed
from .transport import BRUTE_FORCE_MAX

COMMANDS = ("simulate", "wasserstein", "tails", "verify")
REGIMES = {"poly": "polynomial", "exp": "exponential", "superexp": "superexponential"}
SOLVERS = {"exact": "exact", "brute": "brute", "entropic": "entropic"}

CONFIG_KEYS = {
    "regime", "alpha", "beta", "preset", "n", "m", "p", "d", "R", "repeats", "replicas",
    "seed", "out", "solver", "threads", "kind", "only", "corrupt_drift", "tol", "M",
}

DEFAULTS = {
    "simulate": {"regime": "poly", "n": [100], "m": 10, "d": 1, "kind": "flight", "out": "paths"},
    "wasserstein": {"regime": "exp", "n": [25, 100, 400], "m": 200, "p": 1.0, "d": 1, "repeats": 5,
                    "solver": "exact", "threads": 1, "out": "wasserstein"},
    "tails": {"regime": "exp", "n": [100, 400], "m": 500, "p": 1.0, "d": 1, "R": [1.25, 2.0, 4.0], "out": "tails"},
    "verify": {"out": "reports", "corrupt_drift": 0.0},
}
REGIME_DEFAULTS = {"alpha": 1.0, "beta": 1.0, "preset": "exp-square"}
LIMIT_DEFAULTS = {"tol": 1e-8, "M": 512}


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file of options; flags override it")
    common.add_argument("--seed", type=int, help="master seed (falls back to $FLIGHT_SEED, then 0)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int)

    regime = argparse.ArgumentParser(add_help=False)
    regime.add_argument("--regime", choices=sorted(REGIMES))
    regime.add_argument("--alpha", type=float)
    regime.add_argument("--beta", type=float)
    regime.add_argument("--preset", help="super-exponential preset: exp-square | exp-cube | double-exp")
    regime.add_argument("--n", type=int, nargs="+")
    regime.add_argument("--m", type=int)
    regime.add_argument("--d", type=int)
    regime.add_argument("--tol", type=float, help="truncation level of the exponential limit series")
    regime.add_argument("--M", type=int, help="time grid of the polynomial limit")

    parser = argparse.ArgumentParser(prog="randflight", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", parents=[common, regime], help="write sampled paths")
    sim.add_argument("--kind", choices=["flight", "limit"])

    ws = sub.add_parser("wasserstein", parents=[common, regime], help="convergence table")
    ws.add_argument("--p", type=float)
    ws.add_argument("--repeats", type=int)
    ws.add_argument("--solver", choices=sorted(SOLVERS))

    tl = sub.add_parser("tails", parents=[common, regime], help="tail-functional table")
    tl.add_argument("--p", type=float)
    tl.add_argument("--R", type=float, nargs="+")

    vf = sub.add_parser("verify", parents=[common], help="run numerical certifications")
    vf.add_argument("--only", nargs="+", help=f"subset of: {', '.join(CHECKS)}")
    vf.add_argument("--alpha", type=float)
    vf.add_argument("--beta", type=float)
    vf.add_argument("--n", type=int)
    vf.add_argument("--d", type=int)
    vf.add_argument("--replicas", type=int)
    vf.add_argument("--corrupt-drift", nargs="?", type=float, const=3.0, dest="corrupt_drift",
                    help="add a drift of this many sd (default 3) to the martingale (negative control)")
    return parser


def resolve_config(args: argparse.Namespace, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    file_cfg = {}
    if args.config is not None:
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(file_cfg) - CONFIG_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}
    cfg = {**DEFAULTS[args.command], **file_cfg, **flags}
    cfg["command"] = args.command

    if "seed" not in cfg:
        env = environ.get("FLIGHT_SEED")
        try:
            cfg["seed"] = int(env) if env not in (None, "") else 0
        except ValueError as exc:
            raise UsageError(f"FLIGHT_SEED must be an integer, got {env!r}") from exc
    if not 0 <= int(cfg["seed"]) < 2**64:
        raise UsageError("seed must be in [0, 2^64)")
    for key in ("n", "R"):
        if key in cfg and not isinstance(cfg[key], list):
            cfg[key] = [cfg[key]]
    if args.command != "verify":
        cfg.setdefault("regime", "poly")
        if cfg["regime"] not in REGIMES:
            raise UsageError(f"unknown regime {cfg['regime']!r}")
        # keep only the parameter the chosen regime reads
        for key in ("alpha", "beta", "preset"):
            if _regime_uses(cfg["regime"], key):
                cfg.setdefault(key, REGIME_DEFAULTS[key])
            else:
                cfg.pop(key, None)
        cfg = {**LIMIT_DEFAULTS, **cfg}
    return cfg


def _regime_uses(regime: str, key: str) -> bool:
    return {"poly": "alpha", "exp": "beta", "superexp": "preset"}[regime] == key


def _regime(cfg: dict):
    if cfg["regime"] == "poly":
        return Polynomial(cfg["alpha"])
    if cfg["regime"] == "exp":
        return Exponential(cfg["beta"])
    return SuperExponential(cfg["preset"])


def _positive(cfg: dict, *keys: str) -> None:
    for key in keys:
        vals = cfg[key] if isinstance(cfg[key], list) else [cfg[key]]
        if any(v < 1 for v in vals):
            raise UsageError(f"{key} must be >= 1")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def cmd_simulate(cfg: dict) -> int:
    _positive(cfg, "n", "m", "d")
    if len(cfg["n"]) != 1:
        raise UsageError("simulate takes a single --n")
    regime = _regime(cfg)
    n, d = cfg["n"][0], cfg["d"]
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(cfg["m"] - 1)))
    for i in range(cfg["m"]):
        seed = derive_seed(cfg["seed"], i)
        if cfg["kind"] == "flight":
            path = build_flight(regime, n, d, seed).path
        else:
            path = sample_limit(regime, d, seed, M=cfg["M"], tol=cfg["tol"])
        record = {"config": cfg, "index": i, "seed": seed, "path": path.to_dict()}
        (out / f"path_{i:0{width}d}.json").write_text(_dump(record), encoding="utf-8")
    return 0


def cmd_wasserstein(cfg: dict) -> int:
    _positive(cfg, "n", "m", "d", "repeats", "threads")
    if not cfg["p"] >= 1:
        raise UsageError("p must be >= 1")
    if cfg["solver"] == "brute" and cfg["m"] > BRUTE_FORCE_MAX:
        raise UsageError(f"--solver brute needs m <= {BRUTE_FORCE_MAX}, got m = {cfg['m']}")
    if any(b <= a for a, b in zip(cfg["n"], cfg["n"][1:])):
        raise UsageError("n grid must be increasing")
    regime = _regime(cfg)
    table = run_convergence(
        regime, cfg["p"], cfg["n"], cfg["m"], cfg["repeats"], cfg["seed"], d=cfg["d"],
        method=SOLVERS[cfg["solver"]], threads=cfg["threads"], M=cfg["M"], tol=cfg["tol"],
    )
    values = [r[k] for r in table.records for k in ("w_p", "baseline")]
    checks = {"nonnegative": all(v >= 0 for v in values)}
    if regime.bounded:
        # both laws live in the unit ball
        checks["unit_ball_bound"] = all(v <= 2.0 for v in values)
    trend = {"non_increasing_within_1sd": table.non_increasing(1.0),
             "final_within_baseline_3sd": table.final_within_baseline(3.0)}
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "convergence.csv", "w", encoding="utf-8", newline="") as fh:
        table.write_csv(fh)
    doc = {**table.to_dict(), "config": cfg, "invariants": checks, "trend": trend}
    (out / "convergence.json").write_text(_dump(doc), encoding="utf-8")
    return 0 if all(checks.values()) else 1


def cmd_tails(cfg: dict) -> int:
    _positive(cfg, "n", "m", "d")
    if not cfg["p"] >= 1 or any(R <= 0 for R in cfg["R"]):
        raise UsageError("need p >= 1 and R > 0")
    table = run_tail_table(_regime(cfg), cfg["p"], cfg["n"], cfg["R"], cfg["m"], cfg["seed"], d=cfg["d"])
    ok = table.bounded_rows_zero()
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "tails.csv", "w", encoding="utf-8", newline="") as fh:
        table.write_csv(fh)
    doc = {**table.to_dict(), "config": cfg, "bounded_rows_zero": ok}
    (out / "tails.json").write_text(_dump(doc), encoding="utf-8")
    return 0 if ok else 1


def _kw(cfg: dict, **mapping) -> dict:
    """Pick config values present in ``cfg``, renamed per ``mapping``."""
    return {arg: cfg[key] for arg, key in mapping.items() if cfg.get(key) is not None}


def _doob(cfg):
    sample = V.sample_martingale(cfg.get("alpha", 1.5), cfg.get("n", 200), cfg.get("replicas", 10_000),
                                 seed=cfg["seed"], d=cfg.get("d", 1))
    if cfg["corrupt_drift"]:
        sample = V.corrupt_drift(sample, cfg["corrupt_drift"])
    return V.check_doob(sample)


def _martingale(cfg):
    sample = V.sample_martingale(cfg.get("alpha", 1.5), cfg.get("n", 200), cfg.get("replicas", 20_000),
                                 seed=cfg["seed"], d=cfg.get("d", 1))
    if cfg["corrupt_drift"]:
        sample = V.corrupt_drift(sample, cfg["corrupt_drift"])
    return V.check_martingale_increments(sample, ks=[k for k in (2, 10, 50, 200) if k <= sample.n])


CHECKS = {
    "lemma1": lambda c: V.check_lemma1(**_kw(c, alpha="alpha")),
    "lemma2": lambda c: V.check_lemma2(**_kw(c, alpha="alpha")),
    "lemma3": lambda c: V.check_lemma3(**_kw(c, alpha="alpha")),
    "lemma4": lambda c: V.check_lemma4(seed=c["seed"], **_kw(c, beta="beta", mc_draws="replicas")),
    "lemma5": lambda c: V.check_lemma5(seed=c["seed"], **_kw(c, alpha="alpha", replicas="replicas")),
    "corollary1": lambda c: V.check_corollary1(seed=c["seed"], **_kw(c, alpha="alpha", replicas="replicas")),
    "doob": _doob,
    "martingale": _martingale,
    "decomposition": lambda c: V.estimate_decomposition_bounds(
        seed=c["seed"], **_kw(c, alpha="alpha", n="n", replicas="replicas", d="d")),
    "dimension": lambda c: V.check_dimension_reduction(
        seed=c["seed"], **_kw(c, alpha="alpha", n="n", replicas="replicas", d="d")),
}


def cmd_verify(cfg: dict) -> int:
    names = cfg.get("only") or list(CHECKS)
    if isinstance(names, str):
        names = [names]
    names = [x for name in names for x in name.split(",") if x]
    unknown = [x for x in names if x not in CHECKS]
    if unknown:
        raise UsageError(f"unknown checks: {', '.join(unknown)} (choose from {', '.join(CHECKS)})")
    for key in ("n", "replicas", "d"):
        if cfg.get(key) is not None and cfg[key] < 1:
            raise UsageError(f"{key} must be >= 1")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    for name in names:
        report = CHECKS[name](cfg)
        doc = {"config": cfg, **report.to_dict()}
        (out / f"{name}.json").write_text(_dump(doc), encoding="utf-8")
        print(report)
        ok = ok and report.verdict
    return 0 if ok else 1


HANDLERS = {"simulate": cmd_simulate, "wasserstein": cmd_wasserstein, "tails": cmd_tails, "verify": cmd_verify}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return HANDLERS[args.command](cfg)
    except (UsageError, ValueError) as exc:
        print(f"randflight {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
