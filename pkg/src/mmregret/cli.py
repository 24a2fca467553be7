"""Command-line front end.

Subcommands: medical, scan, bounds, wald-mse, alloc, oracle. Every command is
deterministic given its configuration and seed; CSV output uses '.' decimals
and 17 significant digits. The wald-mse command reads a flat key=value config
file, with command-line flags overriding file values.

Exit codes: 0 success, 2 config error, 3 precondition violation, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

import numpy as np

from . import engine, missing, states
from .errors import ConfigError, PreconditionError
from .mathutil import fmt17
from .rules import DecisionRule
from .sampling import SeedSpec, SurveyDesign, TrialDesign

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_IO = 4


def _global_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--reps", type=int, default=100_000,
                        help="Monte Carlo replications per state")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker processes for grid scans")
    parser.add_argument("--method", choices=("exact", "mc"), default="exact")
    parser.add_argument("--out", default=None, help="CSV output path")


def _method(args) -> engine.EvalMethod:
    if args.method == "exact":
        return engine.EvalMethod("exact")
    return engine.EvalMethod("monte_carlo", args.reps)


# ---------------------------------------------------------------------------
# medical

def medical_regrets(w_statusquo, w_worse, w_better, alpha1, alpha2):
    """Regret of the conventional and reversed tests under each hypothesis.

    Returns ((conv_sq, conv_innov), (rev_sq, rev_innov)): the regret when the
    status quo is superior (a Type I error adopts the inferior innovation) and
    when the innovation is superior (a Type II error keeps the status quo).
    """
    if w_statusquo <= 0 or w_worse <= 0 or w_better <= 0:
        raise PreconditionError("welfare values must be positive")
    for a in (alpha1, alpha2):
        if not 0.0 < a < 1.0:
            raise PreconditionError(f"error probability {a} outside (0, 1)")
    if not w_worse < w_statusquo < w_better:
        raise PreconditionError("expected ordering w_worse < w_statusquo < w_better")

    def regrets(p_type1, p_type2):
        return (p_type1 * (w_statusquo - w_worse),
                p_type2 * (w_better - w_statusquo))

    return regrets(alpha1, alpha2), regrets(alpha2, alpha1)


def cmd_medical(args) -> int:
    conv, rev = medical_regrets(args.w_statusquo, args.w_worse, args.w_better,
                                args.alpha1, args.alpha2)
    print("test          regret_sq_superior  regret_innov_superior  max_regret")
    print(f"conventional  {fmt17(conv[0]):<19} {fmt17(conv[1]):<22} {fmt17(max(conv))}")
    print(f"reversed      {fmt17(rev[0]):<19} {fmt17(rev[1]):<22} {fmt17(max(rev))}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# scan

def _scan_rule(args) -> DecisionRule:
    if args.rule == "es":
        return DecisionRule("empirical_success")
    return DecisionRule("ztest", {"alpha": args.alpha, "status_quo": args.status_quo})


def cmd_scan(args) -> int:
    rule = _scan_rule(args)
    grid = states.build_binary_grid(args.step)
    design = TrialDesign(arms=2, per_arm_n=args.n)
    report = engine.max_regret_scan(rule, grid, design, _method(args),
                                    SeedSpec(args.seed), args.workers)
    if args.out:
        engine.report_to_csv(report, args.out)
    s = report.argmax_state
    print(f"max_regret={fmt17(report.max_regret)}")
    print(f"argmax_state=(p_a={fmt17(s.p_a)}, p_b={fmt17(s.p_b)})")
    rec = next(r for r in report.per_state if r.state is s)
    if rec.error_prob is not None:
        print(f"argmax_error_prob={fmt17(rec.error_prob)}")
    print(f"argmax_effect_size={fmt17(s.effect_size)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds

def cmd_bounds(args) -> int:
    n_list = [int(x) for x in args.n.split(",")]
    print("n       bound_10              bound_11              tighter")
    for n in n_list:
        b = engine.regret_bounds(args.k, args.m, n)
        print(f"{n:<7} {fmt17(b.bound_10):<21} {fmt17(b.bound_11):<21} {b.tighter}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# wald-mse

_WALD_KEYS = {
    "predictor", "custom_table", "family",
    "theta_obs_step", "theta_obs_values", "theta_miss_step", "theta_miss_values",
    "beta_obs_shapes", "beta_miss_shapes",
    "miss_step", "miss_values", "support", "n", "miss_known",
    "max_miss", "min_miss_mean", "max_miss_mean", "max_mean_diff",
    "method", "reps", "seed", "workers", "out",
}


def parse_config(path) -> dict[str, str]:
    """Flat key=value config; '#' starts a comment; unknown keys rejected."""
    cfg: dict[str, str] = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                if key not in _WALD_KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                if key in cfg:
                    raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
                cfg[key] = value
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return cfg


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _pairs(text: str) -> list[tuple[float, float]]:
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        vals = _floats(chunk)
        if len(vals) != 2:
            raise ConfigError(f"expected 'a,b' pairs separated by ';', got {chunk!r}")
        out.append((vals[0], vals[1]))
    return out


def _param_grid(cfg, step_key, values_key):
    if values_key in cfg:
        return _floats(cfg[values_key])
    if step_key in cfg:
        step = float(cfg[step_key])
        n = round(1.0 / step)
        if abs(n * step - 1.0) > 1e-9:
            raise ConfigError(f"{step_key}={step} does not divide 1")
        return list(np.linspace(0.0, 1.0, n + 1))
    raise ConfigError(f"config needs {step_key} or {values_key}")


def _wald_predictor(cfg) -> DecisionRule:
    name = cfg.get("predictor")
    if name == "midpoint":
        return DecisionRule("midpoint")
    if name == "hodges_lehmann":
        return DecisionRule("hodges_lehmann")
    if name == "analog_mean":
        return DecisionRule("analog_predictor", {"loss": "square"})
    if name == "analog_median":
        return DecisionRule("analog_predictor", {"loss": "absolute"})
    if name == "custom":
        if "custom_table" not in cfg:
            raise ConfigError("custom predictor needs custom_table")
        rows = []
        for chunk in cfg["custom_table"].split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            m, pred = chunk.split(":")
            rows.append((float(m), float(pred)))
        rows.sort()
        return DecisionRule("custom", {"mean_table": rows})
    raise ConfigError(f"unknown predictor {name!r}")


def _wald_grid(cfg) -> states.StateGrid:
    family = cfg.get("family", "bernoulli")
    support = tuple(_floats(cfg.get("support", "0,1")))
    if len(support) != 2:
        raise ConfigError("support must be 'y0,y1'")
    if "miss_values" in cfg:
        miss = _floats(cfg["miss_values"])
    elif "miss_step" in cfg:
        miss = _param_grid(cfg, "miss_step", "miss_values")
    else:
        raise ConfigError("config needs miss_values or miss_step")
    filters = dict(
        max_miss_rate=float(cfg["max_miss"]) if "max_miss" in cfg else None,
        min_missing_mean=float(cfg["min_miss_mean"]) if "min_miss_mean" in cfg else None,
        max_missing_mean=float(cfg["max_miss_mean"]) if "max_miss_mean" in cfg else None,
        max_mean_abs_diff=float(cfg["max_mean_diff"]) if "max_mean_diff" in cfg else None,
    )
    if family == "bernoulli":
        obs = _param_grid(cfg, "theta_obs_step", "theta_obs_values")
        mis = _param_grid(cfg, "theta_miss_step", "theta_miss_values")
    elif family == "beta":
        if "beta_obs_shapes" not in cfg or "beta_miss_shapes" not in cfg:
            raise ConfigError("beta family needs beta_obs_shapes and beta_miss_shapes")
        obs = _pairs(cfg["beta_obs_shapes"])
        mis = _pairs(cfg["beta_miss_shapes"])
    else:
        raise ConfigError(f"unknown family {family!r}")
    return states.build_prediction_grid(
        family, obs_params=obs, miss_params=mis, miss_rates=miss,
        support=support, **filters)


def cmd_wald_mse(args) -> int:
    cfg = parse_config(args.config)
    rule = _wald_predictor(cfg)
    grid = _wald_grid(cfg)
    if "n" not in cfg:
        raise ConfigError("config needs n (sample size)")
    n = int(cfg["n"])
    miss_known = cfg.get("miss_known", "true").lower() in ("1", "true", "yes")
    if miss_known:
        design = SurveyDesign(mode="fixed_n", n_observed=n)
    else:
        design = SurveyDesign(mode="random_miss", total_n=n)

    method_name = args.method if args.method_set else cfg.get("method", "mc")
    reps = args.reps if args.reps_set else int(cfg.get("reps", 100_000))
    seed = args.seed if args.seed_set else int(cfg.get("seed", 0))
    workers = args.workers if args.workers_set else int(cfg.get("workers", 1))
    out = args.out if args.out is not None else cfg.get("out")

    if method_name == "exact":
        method = engine.EvalMethod("exact")
    else:
        method = engine.EvalMethod("monte_carlo", reps)

    report = engine.max_mse_scan(rule, grid, design, method, SeedSpec(seed), workers)
    if out:
        engine.report_to_csv(report, out)
    s = report.argmax_state
    print(f"max_mse={fmt17(report.max_regret)}")
    desc = (f"theta_obs={fmt17(s.dist_observed.theta)}, "
            f"theta_miss={fmt17(s.dist_missing.theta)}"
            if s.dist_observed.family == "bernoulli" else
            f"obs=Beta({fmt17(s.dist_observed.alpha)},{fmt17(s.dist_observed.beta)}), "
            f"miss=Beta({fmt17(s.dist_missing.alpha)},{fmt17(s.dist_missing.beta)})")
    print(f"argmax_state=({desc}, miss_rate={fmt17(s.miss_rate)})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# alloc

def cmd_alloc(args) -> int:
    bounds_a = tuple(_floats(args.bounds_a))
    bounds_b = tuple(_floats(args.bounds_b))
    if args.mode == "population":
        state = states.MissingDataState(args.e_a, args.e_b, args.p_a, args.p_b,
                                        bounds_a, bounds_b)
        result = missing.mmr_alloc_population(state)
    elif args.mode == "known-p":
        state = states.MissingDataState(args.e_a, args.e_b, args.p_a, args.p_b,
                                        bounds_a, bounds_b)
        result = missing.mmr_alloc_known_p(state)
    elif args.mode == "sample":
        result = missing.mmr_alloc_sample(args.e_a, args.e_b, args.p_a, args.p_b,
                                          bounds_a, bounds_b)
    else:  # sample-known-p
        if args.known_p is None:
            raise ConfigError("sample-known-p mode needs --known-p")
        if bounds_a != bounds_b:
            raise PreconditionError("sample-known-p mode needs common bounds")
        result = missing.mmr_alloc_sample_known_p(
            args.e_a, args.e_b, args.p_a, args.p_b, args.known_p, bounds_a)
    print(f"z_b={fmt17(result.z_b)}")
    print(f"regime={result.regime}")
    print(f"clamped={'yes' if result.clamped else 'no'}")
    if result.clamped:
        print(f"raw_value={fmt17(result.z_raw)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle

def cmd_oracle(args) -> int:
    if args.n > 3:
        raise PreconditionError("oracle limited to n <= 3 per arm")
    design = TrialDesign(arms=2, per_arm_n=args.n)
    grid = states.build_binary_grid(args.step)
    table, oracle_max = engine.exhaustive_mmr_oracle(design, grid)
    es_report = engine.max_regret_scan(
        DecisionRule("empirical_success"), grid, design, engine.EvalMethod("exact"))
    print(f"oracle_max_regret={fmt17(oracle_max)}")
    print(f"es_max_regret={fmt17(es_report.max_regret)}")
    if oracle_max >= es_report.max_regret - 1e-12:
        print("verdict: no deterministic rule beats the empirical success rule")
    else:
        print("verdict: a deterministic rule beats the empirical success rule")
    print("best_table_choose_b=" +
          ";".join(",".join(str(int(v)) for v in row) for row in table))
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmregret",
        description="Regret evaluation of decision rules for treatment choice "
                    "and point prediction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("medical", help="two-hypothesis regret arithmetic for a test")
    p.add_argument("--w-statusquo", type=float, default=1.0)
    p.add_argument("--w-worse", type=float, default=float(Fraction(1, 3)))
    p.add_argument("--w-better", type=float, default=5.0)
    p.add_argument("--alpha1", type=float, default=0.05, help="Type I error probability")
    p.add_argument("--alpha2", type=float, default=0.20, help="Type II error probability")
    _global_flags(p)
    p.set_defaults(func=cmd_medical)

    p = sub.add_parser("scan", help="max-regret scan of a trial-choice rule")
    p.add_argument("--rule", choices=("es", "ztest"), required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--status-quo", type=int, default=0, choices=(0, 1))
    p.add_argument("--n", type=int, required=True, help="subjects per arm")
    p.add_argument("--step", type=float, default=0.01, help="grid step")
    _global_flags(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("bounds", help="analytic max-regret bounds for empirical success")
    p.add_argument("--k", type=int, default=2, help="number of treatment arms")
    p.add_argument("--m", type=float, default=1.0, help="outcome range")
    p.add_argument("--n", required=True, help="comma-separated per-arm sample sizes")
    _global_flags(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("wald-mse", help="maximize predictor MSE over a state grid")
    p.add_argument("--config", required=True, help="flat key=value config file")
    _global_flags(p)
    p.set_defaults(func=cmd_wald_mse)

    p = sub.add_parser("alloc", help="minimax-regret allocation with missing outcomes")
    p.add_argument("--mode", required=True,
                   choices=("population", "known-p", "sample", "sample-known-p"))
    p.add_argument("--e-a", type=float, required=True)
    p.add_argument("--e-b", type=float, required=True)
    p.add_argument("--p-a", type=float, required=True)
    p.add_argument("--p-b", type=float, required=True)
    p.add_argument("--known-p", type=float, default=None)
    p.add_argument("--bounds-a", default="0,1")
    p.add_argument("--bounds-b", default="0,1")
    _global_flags(p)
    p.set_defaults(func=cmd_alloc)

    p = sub.add_parser("oracle", help="exhaustive deterministic-rule oracle (tiny n)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--step", type=float, default=0.05)
    _global_flags(p)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    # track which global flags were given explicitly, so config values
    # are only overridden when the user asked for it
    args.method_set = any(a == "--method" or a.startswith("--method=") for a in argv)
    args.reps_set = any(a == "--reps" or a.startswith("--reps=") for a in argv)
    args.seed_set = any(a == "--seed" or a.startswith("--seed=") for a in argv)
    args.workers_set = any(a == "--workers" or a.startswith("--workers=") for a in argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"precondition violation: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
