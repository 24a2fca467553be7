"""Evaluation engine: state-dependent error probability, regret, and MSE.

Evaluates a rule exactly where the sample space is enumerable (two-arm binary
trials, Bernoulli surveys with a fixed observed count) and by seeded Monte
Carlo otherwise. Also provides analytic maximum-regret bounds for the
empirical success rule and an exhaustive oracle over deterministic rules on
tiny trial designs.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import PreconditionError
from .mathutil import binom_pmf_vector, fmt17, one_sided_critical_value
from .rules import Action, DecisionRule, analog_predict, es_choose, ztest_choose
from .sampling import SeedSpec, SurveyDesign, TrialDesign, TrialOutcome
from .states import BinaryTrialState, PredictionState, StateGrid

__all__ = [
    "EvalMethod",
    "RegretBounds",
    "RegretReport",
    "StateRecord",
    "error_probability",
    "binary_regret",
    "expected_welfare",
    "max_regret_scan",
    "regret_bounds",
    "predictor_mse",
    "max_mse_scan",
    "midpoint_max_regret_formula",
    "exhaustive_mmr_oracle",
    "choice_table",
    "report_to_csv",
]

_MAX_EXACT_TRIAL_N = 10000
_MAX_EXACT_SURVEY_N = 25
_MIN_MC_REPS = 1000


@dataclass(frozen=True)
class EvalMethod:
    """Exact enumeration or Monte Carlo with a replication count."""

    mode: str = "exact"  # "exact" | "monte_carlo"
    reps: int = 100_000

    def __post_init__(self):
        if self.mode not in ("exact", "monte_carlo"):
            raise PreconditionError(f"unknown evaluation mode {self.mode!r}")
        if self.mode == "monte_carlo" and self.reps < _MIN_MC_REPS:
            raise PreconditionError(f"need at least {_MIN_MC_REPS} MC replications")


@dataclass(frozen=True)
class StateRecord:
    state: object
    error_prob: float | None
    expected_welfare: float | None
    regret: float
    mc_stderr: float = 0.0


@dataclass(frozen=True)
class RegretReport:
    per_state: tuple[StateRecord, ...]
    max_regret: float
    argmax_state: object
    method: EvalMethod
    seed: SeedSpec | None = None

    def __post_init__(self):
        regrets = [r.regret for r in self.per_state]
        if abs(self.max_regret - max(regrets)) > 1e-12:
            raise PreconditionError("max_regret does not match per-state records")


# ---------------------------------------------------------------------------
# decision tables for two-arm binary trials

def _rule_action(rule: DecisionRule, outcome: TrialOutcome, n: int) -> Action:
    if rule.kind == "empirical_success":
        return es_choose(outcome)
    if rule.kind == "ztest":
        return ztest_choose(outcome, n, rule.params.get("alpha", 0.05),
                            rule.params.get("status_quo", 0))
    if rule.kind == "custom" and "apply_trial" in rule.params:
        return rule.params["apply_trial"](outcome)
    raise PreconditionError(f"rule kind {rule.kind!r} is not a trial-choice rule")


def choice_table(rule: DecisionRule, n: int) -> np.ndarray:
    """Probability mass the rule puts on arm b, per outcome (i, j).

    Shape (n+1, n+1) indexed by (successes_a, successes_b). The empirical
    success and z-test rules are vectorized; other rules fall back to a loop
    over the (n+1)^2 outcomes.
    """
    i = np.arange(n + 1)[:, None]
    j = np.arange(n + 1)[None, :]
    if rule.kind == "empirical_success":
        return np.where(j > i, 1.0, np.where(j < i, 0.0, 0.5))
    if rule.kind == "ztest":
        alpha = rule.params.get("alpha", 0.05)
        status_quo = rule.params.get("status_quo", 0)
        pooled = (i + j) / (2.0 * n)
        se = np.sqrt(np.where((pooled > 0) & (pooled < 1),
                              pooled * (1.0 - pooled) * 2.0 / n, np.inf))
        crit = one_sided_critical_value(alpha)
        if status_quo == 0:
            z = (j - i) / n / se
            return np.where(z > crit, 1.0, 0.0)
        z = (i - j) / n / se
        return np.where(z > crit, 0.0, 1.0)
    if rule.kind == "custom" and "trial_table" in rule.params:
        table = np.asarray(rule.params["trial_table"], dtype=float)
        if table.shape != (n + 1, n + 1):
            raise PreconditionError(f"trial table shape {table.shape} != {(n + 1, n + 1)}")
        return table
    out = np.empty((n + 1, n + 1))
    for a in range(n + 1):
        for b in range(n + 1):
            out[a, b] = _rule_action(rule, TrialOutcome((a, b)), n).mass_on(1)
    return out


def _check_exact_trial(design: TrialDesign) -> None:
    if design.arms != 2 or design.outcome_range != 1.0:
        raise PreconditionError("exact mode requires a two-arm binary design")
    if design.per_arm_n > _MAX_EXACT_TRIAL_N:
        raise PreconditionError("per-arm n too large for exact enumeration")


def _prob_choose_b_exact(rule, state, design) -> float:
    _check_exact_trial(design)
    n = design.per_arm_n
    table = choice_table(rule, n)
    pa = binom_pmf_vector(n, state.p_a)
    pb = binom_pmf_vector(n, state.p_b)
    return float(pa @ table @ pb)


def _prob_choose_b_mc(rule, state, design, method, seed, state_index) -> tuple[float, float]:
    n = design.per_arm_n
    table = choice_table(rule, n)
    rng = (seed or SeedSpec()).rng(state_index, 0)
    ca = rng.binomial(n, state.p_a, size=method.reps)
    cb = rng.binomial(n, state.p_b, size=method.reps)
    mass_b = table[ca, cb]
    est = float(mass_b.mean())
    stderr = float(mass_b.std(ddof=1) / np.sqrt(method.reps)) if method.reps > 1 else 0.0
    return est, stderr


def error_probability(
    rule: DecisionRule,
    state: BinaryTrialState,
    design: TrialDesign,
    method: EvalMethod = EvalMethod(),
    seed: SeedSpec | None = None,
    state_index: int = 0,
) -> float | None:
    """Probability the rule selects the inferior arm; None when the arms tie.

    Fractional allocations contribute their mass on the inferior arm.
    """
    if state.p_a == state.p_b:
        return None
    if method.mode == "exact":
        prob_b = _prob_choose_b_exact(rule, state, design)
    else:
        prob_b, _ = _prob_choose_b_mc(rule, state, design, method, seed, state_index)
    return prob_b if state.p_a > state.p_b else 1.0 - prob_b


def binary_regret(
    rule: DecisionRule,
    state: BinaryTrialState,
    design: TrialDesign,
    method: EvalMethod = EvalMethod(),
    seed: SeedSpec | None = None,
    state_index: int = 0,
) -> float:
    """Error probability times the welfare gap |p_a - p_b|."""
    err = error_probability(rule, state, design, method, seed, state_index)
    if err is None:
        return 0.0
    return err * abs(state.p_a - state.p_b)


def expected_welfare(
    rule: DecisionRule,
    state: BinaryTrialState,
    design: TrialDesign,
    method: EvalMethod = EvalMethod(),
    seed: SeedSpec | None = None,
    state_index: int = 0,
) -> float:
    """Best attainable welfare in the state minus the rule's regret."""
    return state.best_welfare - binary_regret(rule, state, design, method, seed, state_index)


# ---------------------------------------------------------------------------
# grid scans

def _exact_binary_scan(rule, grid, design) -> list[StateRecord]:
    _check_exact_trial(design)
    n = design.per_arm_n
    table = choice_table(rule, n)
    pa = np.array([s.p_a for s in grid])
    pb = np.array([s.p_b for s in grid])
    uniq = np.unique(np.concatenate([pa, pb]))
    pmf = np.vstack([binom_pmf_vector(n, p) for p in uniq])
    # prob of choosing b for every (p_a, p_b) pair of grid probabilities
    full = pmf @ table @ pmf.T
    ia = np.searchsorted(uniq, pa)
    ib = np.searchsorted(uniq, pb)
    prob_b = full[ia, ib]
    records = []
    for k, s in enumerate(grid):
        if s.p_a == s.p_b:
            records.append(StateRecord(s, None, s.best_welfare, 0.0))
            continue
        err = prob_b[k] if s.p_a > s.p_b else 1.0 - prob_b[k]
        reg = err * abs(s.p_a - s.p_b)
        records.append(StateRecord(s, float(err), float(s.best_welfare - reg), float(reg)))
    return records


def _mc_binary_state(args) -> StateRecord:
    rule, state, design, method, seed, state_index = args
    if state.p_a == state.p_b:
        return StateRecord(state, None, state.best_welfare, 0.0)
    prob_b, se_b = _prob_choose_b_mc(rule, state, design, method, seed, state_index)
    err = prob_b if state.p_a > state.p_b else 1.0 - prob_b
    gap = abs(state.p_a - state.p_b)
    reg = err * gap
    return StateRecord(state, float(err), float(state.best_welfare - reg),
                       float(reg), float(se_b * gap))


def _parallel_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (workers * 8))))


def _assemble_report(records, method, seed) -> RegretReport:
    best = max(range(len(records)), key=lambda k: (records[k].regret, -k))
    return RegretReport(tuple(records), records[best].regret,
                        records[best].state, method, seed)


def max_regret_scan(
    rule: DecisionRule,
    grid: StateGrid,
    design: TrialDesign,
    method: EvalMethod = EvalMethod(),
    seed: SeedSpec | None = None,
    workers: int = 1,
) -> RegretReport:
    """Per-state regret of a trial-choice rule over a binary-trial grid."""
    if grid.family != "binary_trial":
        raise PreconditionError("max_regret_scan needs a binary_trial grid")
    if method.mode == "exact":
        records = _exact_binary_scan(rule, grid, design)
    else:
        args = [(rule, s, design, method, seed or SeedSpec(), k)
                for k, s in enumerate(grid)]
        records = _parallel_map(_mc_binary_state, args, workers)
    return _assemble_report(records, method, seed)


@dataclass(frozen=True)
class RegretBounds:
    bound_10: float
    bound_11: float
    tighter: int  # 10 or 11, decided numerically


def regret_bounds(k: int, m: float, n: int) -> RegretBounds:
    """Analytic upper bounds on the max regret of the empirical success rule.

    bound_10 = (2e)^(-1/2) * M * (K-1) / sqrt(n)
    bound_11 = M * sqrt(ln K) / sqrt(n)
    """
    if k < 2:
        raise PreconditionError("need at least two treatments")
    if n < 1 or m <= 0:
        raise PreconditionError("need n >= 1 and M > 0")
    b10 = (2.0 * np.e) ** -0.5 * m * (k - 1) / np.sqrt(n)
    b11 = m * np.sqrt(np.log(k)) / np.sqrt(n)
    return RegretBounds(float(b10), float(b11), 10 if b10 <= b11 else 11)


def midpoint_max_regret_formula(p_obs: float, n: int) -> float:
    """Closed-form max regret of the midpoint predictor on [0, 1] support:
    1/4 * (P(delta=1)^2 / N + P(delta=0)^2)."""
    if not 0.0 <= p_obs <= 1.0:
        raise PreconditionError(f"p_obs={p_obs} outside [0, 1]")
    if n < 1:
        raise PreconditionError("N must be >= 1")
    return 0.25 * (p_obs ** 2 / n + (1.0 - p_obs) ** 2)


# ---------------------------------------------------------------------------
# predictor evaluation

def _predict_from_mean(rule: DecisionRule, m, n_obs, p1, support):
    """Vectorized prediction for rules that depend on the sample only through
    the observed mean (and the observed fraction)."""
    y0, y1 = support
    width = y1 - y0
    if rule.kind == "hodges_lehmann":
        rn = np.sqrt(n_obs)
        m_norm = (m - y0) / width
        return y0 + width * (m_norm * rn + 0.5) / (rn + 1.0)
    if rule.kind == "midpoint":
        mid = 0.5 * (y0 + y1)
        return m * p1 + mid * (1.0 - p1)
    if rule.kind == "analog_predictor" and rule.params.get("loss", "square") == "square":
        return m
    if rule.kind == "custom" and "predict_mean" in rule.params:
        return rule.params["predict_mean"](m, p1)
    if rule.kind == "custom" and "mean_table" in rule.params:
        pts = np.asarray(rule.params["mean_table"], dtype=float)  # rows (m, pred)
        return np.interp(m, pts[:, 0], pts[:, 1])
    raise PreconditionError(f"rule kind {rule.kind!r} is not mean-based")


def _is_mean_based(rule: DecisionRule) -> bool:
    if rule.kind in ("hodges_lehmann", "midpoint"):
        return True
    if rule.kind == "analog_predictor":
        return rule.params.get("loss", "square") == "square"
    if rule.kind == "custom":
        return "predict_mean" in rule.params or "mean_table" in rule.params
    return False


def _bernoulli_median(k, n, support):
    y0, y1 = support
    mid = 0.5 * (y0 + y1)
    return np.where(2 * k > n, y1, np.where(2 * k < n, y0, mid))


def _known_p1(state: PredictionState, design: SurveyDesign) -> float:
    if design.known_miss_rate is not None:
        return 1.0 - design.known_miss_rate
    return 1.0 - state.miss_rate


def _exact_bernoulli_mse(rule, state, design) -> float:
    """Enumerate the observed success count of a fixed-N Bernoulli survey."""
    n = design.n_observed
    theta = state.dist_observed.theta
    y0, y1 = state.support
    pmf = binom_pmf_vector(n, theta)
    k = np.arange(n + 1)
    m = y0 + (k / n) * (y1 - y0)
    p1 = _known_p1(state, design)
    if rule.kind == "analog_predictor" and rule.params.get("loss") == "absolute":
        pred = _bernoulli_median(k, n, state.support)
    else:
        pred = _predict_from_mean(rule, m, n, p1, state.support)
    mu = state.population_mean
    return float(pmf @ (pred - mu) ** 2)


def _mc_mse_state(args) -> StateRecord:
    rule, state, design, method, seed, state_index = args
    rng = seed.rng(state_index, 0)
    y0, y1 = state.support
    reps = method.reps
    mu = state.population_mean
    bern = state.dist_observed.family == "bernoulli"

    if design.mode == "fixed_n":
        n_obs = np.full(reps, design.n_observed)
        p1 = np.full(reps, _known_p1(state, design))
    else:
        n_obs = rng.binomial(design.total_n, 1.0 - state.miss_rate, size=reps)
        p1 = n_obs / design.total_n

    mid = 0.5 * (y0 + y1)
    if bern:
        theta = state.dist_observed.theta
        k = rng.binomial(n_obs, theta)
        m = y0 + (k / np.maximum(n_obs, 1)) * (y1 - y0)
        if rule.kind == "analog_predictor" and rule.params.get("loss") == "absolute":
            pred = _bernoulli_median(k, n_obs, state.support)
        else:
            pred = _predict_from_mean(rule, m, np.maximum(n_obs, 1), p1, state.support)
        # zero-observation draws fall back to the support midpoint (the
        # midpoint predictor lands there anyway through p1 = 0)
        pred = np.where(n_obs > 0, pred, mid)
    else:
        pred = np.empty(reps)
        absolute = (rule.kind == "analog_predictor"
                    and rule.params.get("loss") == "absolute")
        for r in range(reps):
            nr = int(n_obs[r])
            if nr == 0:
                pred[r] = mid if not _is_mean_based(rule) else \
                    float(_predict_from_mean(rule, mid, 1, p1[r], state.support))
                continue
            ys = y0 + (y1 - y0) * rng.beta(state.dist_observed.alpha,
                                           state.dist_observed.beta, size=nr)
            if absolute:
                pred[r] = float(np.median(ys))
            else:
                pred[r] = float(_predict_from_mean(rule, ys.mean(), nr, p1[r],
                                                   state.support))
    sq = (pred - mu) ** 2
    mse = float(sq.mean())
    stderr = float(sq.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
    return StateRecord(state, None, None, mse, stderr)


def predictor_mse(
    rule: DecisionRule,
    state: PredictionState,
    design: SurveyDesign,
    method: EvalMethod = EvalMethod(),
    seed: SeedSpec | None = None,
    state_index: int = 0,
) -> float:
    """MSE of a predictor as an estimate of the population mean.

    Exact mode enumerates the observed success count and requires a Bernoulli
    observed distribution with fixed N <= 25; Monte Carlo handles the rest.
    """
    if method.mode == "exact":
        if design.mode != "fixed_n" or state.dist_observed.family != "bernoulli":
            raise PreconditionError(
                "exact MSE needs a fixed-N design with Bernoulli observed outcomes")
        if design.n_observed > _MAX_EXACT_SURVEY_N:
            raise PreconditionError(
                f"exact MSE limited to N <= {_MAX_EXACT_SURVEY_N}")
        return _exact_bernoulli_mse(rule, state, design)
    rec = _mc_mse_state((rule, state, design, method, seed or SeedSpec(), state_index))
    return rec.regret


def max_mse_scan(
    rule: DecisionRule,
    grid: StateGrid,
    design: SurveyDesign,
    method: EvalMethod = EvalMethod(),
    seed: SeedSpec | None = None,
    workers: int = 1,
) -> RegretReport:
    """Maximize predictor MSE over a prediction grid (regret = MSE here)."""
    if grid.family != "prediction":
        raise PreconditionError("max_mse_scan needs a prediction grid")
    if method.mode == "exact":
        records = [StateRecord(s, None, None, _exact_bernoulli_mse(rule, s, design))
                   for s in grid]
    else:
        args = [(rule, s, design, method, seed or SeedSpec(), k)
                for k, s in enumerate(grid)]
        records = _parallel_map(_mc_mse_state, args, workers)
    return _assemble_report(records, method, seed)


# ---------------------------------------------------------------------------
# exhaustive oracle over deterministic rules

def exhaustive_mmr_oracle(
    design: TrialDesign,
    grid: StateGrid,
) -> tuple[np.ndarray, float]:
    """Best deterministic outcome->arm table by exact max regret, for tiny n.

    Enumerates all 2^((n+1)^2) deterministic two-arm rules, so the per-arm
    sample size is capped at 3.
    """
    if design.arms != 2 or design.per_arm_n > 3:
        raise PreconditionError("oracle limited to two arms and n <= 3 per arm")
    if grid.family != "binary_trial":
        raise PreconditionError("oracle needs a binary_trial grid")
    n = design.per_arm_n
    m = (n + 1) ** 2
    n_rules = 1 << m

    # outcome probabilities, states x outcomes
    probs = np.empty((len(grid), m))
    for si, s in enumerate(grid):
        pa = binom_pmf_vector(n, s.p_a)
        pb = binom_pmf_vector(n, s.p_b)
        probs[si] = np.outer(pa, pb).ravel()

    # rule r chooses arm b on outcome o iff bit o of r is set
    bits = ((np.arange(n_rules)[:, None] >> np.arange(m)[None, :]) & 1).astype(float)

    prob_b = probs @ bits.T  # states x rules
    pa_vec = np.array([s.p_a for s in grid])
    pb_vec = np.array([s.p_b for s in grid])
    gap = np.abs(pa_vec - pb_vec)
    err = np.where(pa_vec[:, None] > pb_vec[:, None], prob_b, 1.0 - prob_b)
    err[gap == 0] = 0.0
    max_reg = (err * gap[:, None]).max(axis=0)
    best = int(np.argmin(max_reg))
    table = bits[best].reshape(n + 1, n + 1)
    return table, float(max_reg[best])


# ---------------------------------------------------------------------------
# CSV serialization

def _state_columns(state) -> tuple[list[str], list[str]]:
    if isinstance(state, BinaryTrialState):
        return ["p_a", "p_b"], [fmt17(state.p_a), fmt17(state.p_b)]
    if isinstance(state, PredictionState):
        do, dm = state.dist_observed, state.dist_missing
        if do.family == "bernoulli":
            return (["theta_obs", "theta_miss", "miss_rate"],
                    [fmt17(do.theta), fmt17(dm.theta), fmt17(state.miss_rate)])
        return (["alpha_obs", "beta_obs", "alpha_miss", "beta_miss", "miss_rate"],
                [fmt17(do.alpha), fmt17(do.beta), fmt17(dm.alpha), fmt17(dm.beta),
                 fmt17(state.miss_rate)])
    raise PreconditionError(f"cannot serialize state of type {type(state).__name__}")


def report_to_csv(report: RegretReport, path) -> None:
    """One row per state plus a summary footer row."""
    state_names, _ = _state_columns(report.per_state[0].state)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(state_names + ["error_prob", "expected_welfare", "regret", "mc_stderr"])
        for rec in report.per_state:
            _, coords = _state_columns(rec.state)
            wr.writerow(coords + [
                "" if rec.error_prob is None else fmt17(rec.error_prob),
                "" if rec.expected_welfare is None else fmt17(rec.expected_welfare),
                fmt17(rec.regret),
                fmt17(rec.mc_stderr),
            ])
        _, argmax_coords = _state_columns(report.argmax_state)
        wr.writerow(["#summary", f"max_regret={fmt17(report.max_regret)}",
                     "argmax=" + "|".join(argmax_coords),
                     f"method={report.method.mode}",
                     f"reps={report.method.reps if report.method.mode == 'monte_carlo' else 0}",
                     f"seed={report.seed.master_seed if report.seed else ''}"])
