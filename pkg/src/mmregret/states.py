"""State-space families, welfare semantics, and grid discretizations.

All evaluation in this package runs over finite grids of states. Three
families are supported:

* binary_trial  -- a pair of arm success probabilities (p_a, p_b); welfare of
  an arm is its success probability.
* prediction    -- outcome distribution given observed, outcome distribution
  given missing, and a miss rate, on a bounded outcome support.
* missing_data  -- conditional-on-observed means, observability probabilities,
  and per-arm outcome bounds for two treatments.

Types are immutable value objects; builders are pure and deterministic.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import PreconditionError

__all__ = [
    "BinaryTrialState",
    "OutcomeDist",
    "PredictionState",
    "MissingDataState",
    "StateGrid",
    "FiniteDecisionProblem",
    "build_binary_grid",
    "build_prediction_grid",
    "classify_dominance",
    "grid_to_csv",
    "grid_from_csv",
]


@dataclass(frozen=True)
class BinaryTrialState:
    """Success probabilities of two treatment arms; welfare w(t) = p_t."""

    p_a: float
    p_b: float

    def __post_init__(self):
        for name, v in (("p_a", self.p_a), ("p_b", self.p_b)):
            if not 0.0 <= v <= 1.0:
                raise PreconditionError(f"{name}={v} outside [0, 1]")

    @property
    def effect_size(self) -> float:
        return self.p_b - self.p_a

    @property
    def best_welfare(self) -> float:
        return max(self.p_a, self.p_b)


@dataclass(frozen=True)
class OutcomeDist:
    """Bernoulli(theta) or Beta(alpha, beta), rescaled to a bounded support.

    A Bernoulli outcome puts mass on the support endpoints; a Beta outcome is
    the standard Beta stretched onto [y0, y1].
    """

    family: str  # "bernoulli" | "beta"
    theta: float | None = None
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.family == "bernoulli":
            if self.theta is None or not 0.0 <= self.theta <= 1.0:
                raise PreconditionError(f"bernoulli theta={self.theta} outside [0, 1]")
        elif self.family == "beta":
            if self.alpha is None or self.beta is None or self.alpha <= 0 or self.beta <= 0:
                raise PreconditionError(
                    f"beta shapes ({self.alpha}, {self.beta}) must be positive")
        else:
            raise PreconditionError(f"unknown outcome family {self.family!r}")

    def mean(self, support: tuple[float, float]) -> float:
        y0, y1 = support
        if self.family == "bernoulli":
            frac = self.theta
        else:
            frac = self.alpha / (self.alpha + self.beta)
        return y0 + frac * (y1 - y0)


@dataclass(frozen=True)
class PredictionState:
    """Outcome-given-observed, outcome-given-missing, and a miss rate."""

    dist_observed: OutcomeDist
    dist_missing: OutcomeDist
    miss_rate: float
    support: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not 0.0 <= self.miss_rate <= 1.0:
            raise PreconditionError(f"miss_rate={self.miss_rate} outside [0, 1]")
        y0, y1 = self.support
        if not y0 < y1:
            raise PreconditionError(f"support [{y0}, {y1}] is degenerate")
        if self.dist_observed.family != self.dist_missing.family:
            raise PreconditionError("observed and missing outcome families must match")

    @property
    def observed_mean(self) -> float:
        return self.dist_observed.mean(self.support)

    @property
    def missing_mean(self) -> float:
        return self.dist_missing.mean(self.support)

    @property
    def population_mean(self) -> float:
        """Mean of the full outcome distribution (observed and missing mixed)."""
        return (1.0 - self.miss_rate) * self.observed_mean + self.miss_rate * self.missing_mean


@dataclass(frozen=True)
class MissingDataState:
    """Observable features of a two-treatment population with missing outcomes.

    e_a, e_b are the means of outcomes conditional on being observed; p_a, p_b
    the probabilities an outcome is observed; bounds the per-arm outcome
    supports. full_means, when present, are the complete (observed plus
    missing) means, needed only for welfare accounting and asymptotic
    classification.
    """

    e_a: float
    e_b: float
    p_a: float
    p_b: float
    bounds_a: tuple[float, float] = (0.0, 1.0)
    bounds_b: tuple[float, float] = (0.0, 1.0)
    full_means: tuple[float, float] | None = None

    def __post_init__(self):
        for name, p in (("p_a", self.p_a), ("p_b", self.p_b)):
            if not 0.0 <= p <= 1.0:
                raise PreconditionError(f"{name}={p} outside [0, 1]")
        for arm, e, (y0, y1) in (("a", self.e_a, self.bounds_a),
                                 ("b", self.e_b, self.bounds_b)):
            if not y0 <= y1:
                raise PreconditionError(f"arm {arm} bounds [{y0}, {y1}] inverted")
            if not y0 <= e <= y1:
                raise PreconditionError(f"e_{arm}={e} outside bounds [{y0}, {y1}]")
        if self.full_means is not None:
            for arm, mu, e, p, (y0, y1) in (
                    ("a", self.full_means[0], self.e_a, self.p_a, self.bounds_a),
                    ("b", self.full_means[1], self.e_b, self.p_b, self.bounds_b)):
                if not y0 <= mu <= y1:
                    raise PreconditionError(f"full mean of arm {arm} outside bounds")
                # mu = e*p + m*(1-p) for some feasible missing-outcome mean m
                lo = e * p + y0 * (1.0 - p)
                hi = e * p + y1 * (1.0 - p)
                if not lo - 1e-12 <= mu <= hi + 1e-12:
                    raise PreconditionError(
                        f"full mean {mu} of arm {arm} inconsistent with "
                        f"(e={e}, p={p}) and bounds [{y0}, {y1}]")


@dataclass(frozen=True)
class StateGrid:
    """A finite, ordered discretization of one state-space family."""

    family: str  # "binary_trial" | "prediction" | "missing_data"
    states: tuple
    step: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in ("binary_trial", "prediction", "missing_data"):
            raise PreconditionError(f"unknown grid family {self.family!r}")
        if len(self.states) == 0:
            raise PreconditionError("empty state grid")

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)


@dataclass(frozen=True)
class FiniteDecisionProblem:
    """Finite actions x finite states with a welfare matrix w(action, state)."""

    actions: tuple[str, ...]
    states: tuple[str, ...]
    welfare: np.ndarray  # shape (|actions|, |states|)
    prior: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.welfare, dtype=float)
        object.__setattr__(self, "welfare", w)
        if w.shape != (len(self.actions), len(self.states)):
            raise PreconditionError(
                f"welfare shape {w.shape} != ({len(self.actions)}, {len(self.states)})")
        if self.prior is not None:
            pr = np.asarray(self.prior, dtype=float)
            object.__setattr__(self, "prior", pr)
            if pr.shape != (len(self.states),):
                raise PreconditionError("prior length must match number of states")
            if np.any(pr < 0):
                raise PreconditionError("prior weights must be nonnegative")
            if abs(pr.sum() - 1.0) > 1e-12:
                raise PreconditionError(f"prior sums to {pr.sum()}, not 1")


def _lattice(step: float) -> np.ndarray:
    """Points {0, step, 2*step, ..., 1}; step must divide 1."""
    if step <= 0 or step > 0.5:
        raise PreconditionError(f"step {step} must lie in (0, 0.5]")
    n = round(1.0 / step)
    if abs(n * step - 1.0) > 1e-9:
        raise PreconditionError(f"step {step} does not divide 1")
    return np.linspace(0.0, 1.0, n + 1)


def build_binary_grid(step: float) -> StateGrid:
    """All (p_a, p_b) pairs on the square lattice with the given step, row-major."""
    pts = _lattice(step)
    states = tuple(BinaryTrialState(float(pa), float(pb))
                   for pa in pts for pb in pts)
    return StateGrid("binary_trial", states, {"p_a": step, "p_b": step})


def build_prediction_grid(
    family: str,
    *,
    obs_params: Sequence[float] | Sequence[tuple[float, float]] | None = None,
    miss_params: Sequence[float] | Sequence[tuple[float, float]] | None = None,
    miss_rates: Sequence[float],
    support: tuple[float, float] = (0.0, 1.0),
    max_miss_rate: float | None = None,
    min_missing_mean: float | None = None,
    max_missing_mean: float | None = None,
    max_mean_abs_diff: float | None = None,
    step_meta: dict | None = None,
) -> StateGrid:
    """Cartesian product of observed-, missing- and miss-rate grids, filtered.

    For the Bernoulli family the parameter grids are theta values; for Beta
    they are (alpha, beta) shape pairs supplied explicitly by the caller.
    The optional restrictions are applied as predicate filters on states.
    """
    if obs_params is None or miss_params is None or len(miss_rates) == 0:
        raise PreconditionError("all three coordinate grids must be non-empty")

    def make_dist(param):
        if family == "bernoulli":
            return OutcomeDist("bernoulli", theta=float(param))
        if family == "beta":
            a, b = param
            return OutcomeDist("beta", alpha=float(a), beta=float(b))
        raise PreconditionError(f"unknown family {family!r}")

    states = []
    for po, pm, mr in itertools.product(obs_params, miss_params, miss_rates):
        s = PredictionState(make_dist(po), make_dist(pm), float(mr), support)
        if max_miss_rate is not None and s.miss_rate > max_miss_rate:
            continue
        if min_missing_mean is not None and s.missing_mean < min_missing_mean:
            continue
        if max_missing_mean is not None and s.missing_mean > max_missing_mean:
            continue
        if max_mean_abs_diff is not None and \
                abs(s.observed_mean - s.missing_mean) > max_mean_abs_diff:
            continue
        states.append(s)
    if not states:
        raise PreconditionError("prediction grid is empty after filtering")
    return StateGrid("prediction", tuple(states), dict(step_meta or {}))


def classify_dominance(problem: FiniteDecisionProblem) -> dict[str, list[str]]:
    """Split actions into weakly dominated and undominated sets.

    Action c is weakly dominated iff some d is at least as good in every state
    and strictly better in at least one.
    """
    w = problem.welfare
    dominated = []
    for i in range(len(problem.actions)):
        for j in range(len(problem.actions)):
            if i == j:
                continue
            if np.all(w[j] >= w[i]) and np.any(w[j] > w[i]):
                dominated.append(problem.actions[i])
                break
    undominated = [a for a in problem.actions if a not in dominated]
    return {"dominated": dominated, "undominated": undominated}


# ---------------------------------------------------------------------------
# CSV dump/load, one state per row

_BINARY_HEADER = ["p_a", "p_b"]
_PREDICTION_HEADER = ["family", "obs_theta", "obs_alpha", "obs_beta",
                      "miss_theta", "miss_alpha", "miss_beta",
                      "miss_rate", "y0", "y1"]
_MISSING_HEADER = ["e_a", "e_b", "p_a", "p_b", "y0_a", "y1_a", "y0_b", "y1_b",
                   "mean_a", "mean_b"]


def grid_to_csv(grid: StateGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        if grid.family == "binary_trial":
            wr.writerow(_BINARY_HEADER)
            for s in grid:
                wr.writerow([repr(s.p_a), repr(s.p_b)])
        elif grid.family == "prediction":
            wr.writerow(_PREDICTION_HEADER)
            for s in grid:
                do, dm = s.dist_observed, s.dist_missing
                wr.writerow([
                    do.family,
                    "" if do.theta is None else repr(do.theta),
                    "" if do.alpha is None else repr(do.alpha),
                    "" if do.beta is None else repr(do.beta),
                    "" if dm.theta is None else repr(dm.theta),
                    "" if dm.alpha is None else repr(dm.alpha),
                    "" if dm.beta is None else repr(dm.beta),
                    repr(s.miss_rate), repr(s.support[0]), repr(s.support[1]),
                ])
        else:
            wr.writerow(_MISSING_HEADER)
            for s in grid:
                mu_a = "" if s.full_means is None else repr(s.full_means[0])
                mu_b = "" if s.full_means is None else repr(s.full_means[1])
                wr.writerow([repr(s.e_a), repr(s.e_b), repr(s.p_a), repr(s.p_b),
                             repr(s.bounds_a[0]), repr(s.bounds_a[1]),
                             repr(s.bounds_b[0]), repr(s.bounds_b[1]),
                             mu_a, mu_b])


def grid_from_csv(path) -> StateGrid:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [r for r in rd if r]
    if header == _BINARY_HEADER:
        states = tuple(BinaryTrialState(float(r[0]), float(r[1])) for r in rows)
        return StateGrid("binary_trial", states)
    if header == _PREDICTION_HEADER:
        states = []
        for r in rows:
            def dist(fam, th, al, be):
                if fam == "bernoulli":
                    return OutcomeDist(fam, theta=float(th))
                return OutcomeDist(fam, alpha=float(al), beta=float(be))
            states.append(PredictionState(
                dist(r[0], r[1], r[2], r[3]),
                dist(r[0], r[4], r[5], r[6]),
                float(r[7]), (float(r[8]), float(r[9]))))
        return StateGrid("prediction", tuple(states))
    if header == _MISSING_HEADER:
        states = []
        for r in rows:
            full = None
            if r[8] != "" and r[9] != "":
                full = (float(r[8]), float(r[9]))
            states.append(MissingDataState(
                float(r[0]), float(r[1]), float(r[2]), float(r[3]),
                (float(r[4]), float(r[5])), (float(r[6]), float(r[7])), full))
        return StateGrid("missing_data", tuple(states))
    raise PreconditionError(f"unrecognized grid header {header}")
