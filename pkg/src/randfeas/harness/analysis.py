"""Schedule analytics checks and cross-validated stepsize selection for the baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..baselines import PrimalDualConfig, solve_primal_dual
from ..core import RandomSource
from ..exceptions import AllDivergedError, DivergenceError, ParameterError
from ..problems import build_svm, misclassification_error
from ..schedules import (
    Binomial,
    Constant,
    DecayDiagnostics,
    Poisson,
    PowerGrowth,
    PowerRate,
    SampleSizeSchedule,
    UniformInt,
    binomial_sum_decay_bound,
    poisson_sum_decay_bound,
    sum_decay_bound,
)

__all__ = [
    "default_verification_schedules",
    "monte_carlo_decay",
    "partial_decay_sum",
    "verify_schedules",
    "GridSearchResult",
    "fold_splits",
    "grid_search_svm",
    "grid_search_primal_dual",
]

Z_LIMIT = 4.0


def default_verification_schedules():
    out = [Constant(5), PowerGrowth(2.0)]
    out += [Poisson(lam) for lam in (1.0, 2.0, 5.0)]
    out += [Binomial(n, p) for n in (1, 5, 20) for p in (0.3, 0.7)]
    out += [UniformInt(1, 10)]
    return out


def monte_carlo_decay(schedule: SampleSizeSchedule, k, q, draws, rng: RandomSource):
    """Sample mean and standard error of ``(1-q)^(N_k/2)``."""
    n = schedule.draw_many(k, rng, int(draws))
    root = DecayDiagnostics(q).root
    if len(n) and np.all(n == n[0]):
        # degenerate distribution: report the single value, not a rounded mean of copies
        return root ** int(n[0]), 0.0
    vals = root ** n.astype(np.float64)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0


def _sum_bound(schedule, q):
    """Closed-form bound on the decay series, when one applies to ``schedule``."""
    if isinstance(schedule, PowerGrowth) and schedule.floor == 0:
        return sum_decay_bound(schedule.p, q)
    rate = getattr(schedule, "lam", None) if isinstance(schedule, Poisson) else getattr(schedule, "n", None)
    if isinstance(rate, PowerRate) and rate.scale == 1.0 and schedule.floor == 0:
        if isinstance(schedule, Poisson):
            return poisson_sum_decay_bound(rate.p, q)
        if isinstance(schedule, Binomial):
            return binomial_sum_decay_bound(rate.p, schedule.p, q)
    return None


def partial_decay_sum(schedule: SampleSizeSchedule, q, K):
    """``sum_{k<=K} E[(1-q)^(N_k/2)]`` accumulated in increasing ``k``."""
    return math.fsum(schedule.expected_decay(k, q) for k in range(1, int(K) + 1))


def verify_schedules(q_list, schedules=None, draws=100_000, ks=(1,), sum_terms=10_000, seed=0):
    """Check closed-form expectations by Monte Carlo and the summability bounds.

    Returns a JSON-ready report; ``report["passed"]`` is the conjunction of
    every ``|z| <= 4`` check and every ``partial sum <= bound`` check.
    """
    schedules = default_verification_schedules() if schedules is None else list(schedules)
    entries, sums = [], []
    stream = 0
    for sched in schedules:
        for q in q_list:
            DecayDiagnostics(q)
            for k in ks:
                stream += 1
                rng = RandomSource(seed, stream)
                est, se = monte_carlo_decay(sched, k, q, draws, rng)
                exact = sched.expected_decay(k, q)
                if se > 0:
                    z = (est - exact) / se
                else:
                    z = 0.0 if est == exact else math.inf
                entries.append({
                    "schedule": sched.to_dict(), "q": q, "k": int(k), "draws": int(draws),
                    "estimate": est, "expected": exact, "stderr": se, "z": z,
                    "passed": abs(z) <= Z_LIMIT,
                })
            bound = _sum_bound(sched, q)
            if bound is not None:
                total = partial_decay_sum(sched, q, sum_terms)
                sums.append({
                    "schedule": sched.to_dict(), "q": q, "terms": int(sum_terms),
                    "partial_sum": total, "bound": bound, "passed": total <= bound,
                })
    passed = all(e["passed"] for e in entries) and all(s["passed"] for s in sums)
    return {"expectations": entries, "sum_bounds": sums, "passed": passed}


# --------------------------------------------------------------------------
# Grid search
# --------------------------------------------------------------------------


@dataclass
class GridSearchResult:
    best: tuple
    scores: dict = field(default_factory=dict)
    diverged: list = field(default_factory=list)

    def to_dict(self):
        return {
            "best": {"eta_primal": self.best[0], "eta_dual": self.best[1]},
            "scores": [
                {"eta_primal": p, "eta_dual": d, "mean_error": e}
                for (p, d), e in sorted(self.scores.items())
            ],
            "diverged": [{"eta_primal": p, "eta_dual": d} for p, d in sorted(self.diverged)],
        }


def fold_splits(n_rows, folds=3, seed=0):
    """Shuffled k-fold ``(train, validation)`` index pairs over ``range(n_rows)``."""
    from sklearn.model_selection import KFold

    return list(KFold(n_splits=folds, shuffle=True, random_state=seed).split(np.zeros((n_rows, 1))))


def grid_search_svm(X, y, mode, grid_primal, grid_dual, folds=3, iterations=200, C_reg=1e-6, seed=0):
    """k-fold search for the primal-dual stepsizes minimizing validation error.

    A pair that diverges on any fold is excluded. Ties go to the smaller
    primal, then the smaller dual stepsize.
    """
    grid_primal, grid_dual = list(grid_primal), list(grid_dual)
    if not grid_primal or not grid_dual:
        raise ParameterError("stepsize grids must be nonempty")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    splits = fold_splits(len(X), folds, seed)
    scores, diverged = {}, []
    for eta_p in grid_primal:
        for eta_d in grid_dual:
            errs = []
            try:
                for tr, va in splits:
                    problem = build_svm(X[tr], y[tr], C_reg)
                    cfg = PrimalDualConfig(mode, eta_p, eta_d, iterations, log_every=0)
                    with np.errstate(over="ignore", invalid="ignore"):
                        out = solve_primal_dual(problem, cfg)
                    w, b, _ = problem.meta["instance"].unpack(out.final_average)
                    if not (np.all(np.isfinite(w)) and math.isfinite(b)):
                        raise DivergenceError("non-finite average")
                    errs.append(misclassification_error(w, b, X[va], y[va]))
            except DivergenceError:
                diverged.append((eta_p, eta_d))
                continue
            scores[(eta_p, eta_d)] = float(np.mean(errs))
    if not scores:
        raise AllDivergedError("every stepsize pair diverged", diverged)
    best = min(scores, key=lambda pair: (scores[pair], pair[0], pair[1]))
    return GridSearchResult(best, scores, diverged)


def grid_search_primal_dual(cfg, eta_grid_primal=None, eta_grid_dual=None, folds=None):
    """Grid search driven by an SVM experiment config (training split only)."""
    from .runner import build_problem

    if cfg.problem["type"] != "svm":
        raise ParameterError("grid search is defined for SVM experiments")
    method = cfg.solver["method"]
    if method not in ("arrow-hurwicz", "alt-gda"):
        raise ParameterError("grid search applies to arrow-hurwicz or alt-gda")
    s = cfg.solver
    default_grid = [1e-3, 1e-2, 1e-1]
    gp = eta_grid_primal if eta_grid_primal is not None else s.get("grid_primal", default_grid)
    gd = eta_grid_dual if eta_grid_dual is not None else s.get("grid_dual", default_grid)
    folds = folds if folds is not None else s.get("folds", 3)
    built = build_problem(cfg)
    return grid_search_svm(
        built.split.X_train, built.split.y_train, method, gp, gd,
        folds=folds, iterations=s.get("grid_iterations", 200),
        C_reg=cfg.problem.get("C_reg", 1e-6), seed=cfg.seed,
    )
