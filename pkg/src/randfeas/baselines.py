"""Lagrangian primal-dual baselines: Arrow-Hurwicz and alternating GDA.

Both act on ``L(x, lam) = f(x) + sum_i lam_i g_i(x)`` and touch every
constraint at every iteration, which is the cost the randomized feasibility
methods avoid.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ConstrainedProblem
from .exceptions import DivergenceError, ParameterError
from .solvers import RunTrace, SolverOutput, _is_log_point, _start_point, default_log_every

__all__ = ["PrimalDualConfig", "solve_primal_dual"]

MODES = ("arrow-hurwicz", "alt-gda")


@dataclass(frozen=True)
class PrimalDualConfig:
    mode: str
    eta_primal: float
    eta_dual: float
    T: int
    log_every: Optional[int] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.eta_primal > 0 or self.eta_dual < 0:
            raise ParameterError("need eta_primal > 0 and eta_dual >= 0")
        if self.T < 1:
            raise ParameterError("T must be at least 1")


def solve_primal_dual(problem: ConstrainedProblem, cfg: PrimalDualConfig, x0=None) -> SolverOutput:
    """Projected primal descent / dual ascent from ``lam = 0``.

    Arrow-Hurwicz updates the multipliers with ``g(x_k)`` (simultaneous);
    alt-GDA uses the fresh primal point ``g(x_{k+1})``. The reported point is
    the running arithmetic mean of ``x_1 .. x_k``.
    """
    grad = problem.objective.subgradient
    cons = problem.constraints
    log_every = default_log_every(cfg.T) if cfg.log_every is None else cfg.log_every
    alternating = cfg.mode == "alt-gda"

    x = _start_point(problem, x0)
    lam = np.zeros(cons.count)
    g_now = None if alternating else cons.values(x)
    x_sum = np.zeros(problem.dim)
    running_max = 0.0
    trace = RunTrace()
    t_start = time.perf_counter()

    for k in range(1, cfg.T + 1):
        s = np.asarray(grad(x), dtype=np.float64)
        running_max = max(running_max, float(np.linalg.norm(s)))
        direction = s + cons.weighted_subgradient(x, lam) if cons.count else s
        x_new = x - cfg.eta_primal * direction
        if not np.all(np.isfinite(x_new)):
            raise DivergenceError(f"non-finite primal iterate at k={k}", trace, k)
        x_new = problem.domain.project(x_new)
        if alternating:
            g_dual = cons.values(x_new)
        else:
            g_dual = g_now
        lam = np.maximum(lam + cfg.eta_dual * g_dual, 0.0)
        if not np.all(np.isfinite(lam)):
            raise DivergenceError(f"non-finite multipliers at k={k}", trace, k)
        x = x_new
        if not alternating and k < cfg.T:
            g_now = cons.values(x)
        x_sum += x

        trace.append(k, cfg.eta_primal, cons.count, wall_time=time.perf_counter() - t_start)
        if _is_log_point(k, cfg.T, log_every):
            x_avg = x_sum / k
            fi = problem.objective.value(x)
            fa = problem.objective.value(x_avg)
            if not (math.isfinite(fi) and math.isfinite(fa)):
                raise DivergenceError(f"non-finite objective at k={k}", trace, k)
            trace.log_metrics(fi, fa, problem.infeasibility(x_avg))

    return SolverOutput(
        final_average=x_sum / cfg.T,
        final_iterate=x,
        trace=trace,
        observed_Mf=running_max,
        dual=lam,
        extra={"mode": cfg.mode},
    )
