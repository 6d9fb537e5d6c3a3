"""Outer solvers built around the randomized feasibility pass.

* :func:`solve_gradient_feasibility` -- projected gradient step on ``f``
  followed by a feasibility pass, with either the three-branch adaptive
  stepsize (linear convergence to an ``eps`` floor) or the diminishing
  ``4 / (mu (k+1))`` stepsize.
* :func:`solve_dows_family` -- DoWS and its tamed variant T-DoWS: parameter
  free stepsizes from a running distance estimate ``rbar_k`` and the
  accumulator ``p_k`` of weighted squared subgradient norms.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import ConstrainedProblem, RandomSource
from .exceptions import DivergenceError, ParameterError, ZeroInitialSubgradient
from .feasibility import FeasibilityConfig, feasibility_pass
from .schedules import PowerGrowth, SampleSizeSchedule

__all__ = [
    "RunTrace",
    "SolverOutput",
    "GradSolverConfig",
    "DowsSolverConfig",
    "adaptive_stepsize",
    "diminishing_stepsize",
    "exp_weighted_average",
    "dows_stepsize",
    "tdows_stepsize",
    "select_tau",
    "tau_average",
    "solve_gradient_feasibility",
    "solve_dows_family",
    "default_log_every",
]


@dataclass
class RunTrace:
    """Per-iteration record of a solver run.

    ``f_avg`` and ``infeas`` (summed positive violation at the reported
    average) are only filled at logging points and are NaN elsewhere.
    """

    k: list = field(default_factory=list)
    step: list = field(default_factory=list)
    n_k: list = field(default_factory=list)
    f_iter: list = field(default_factory=list)
    f_avg: list = field(default_factory=list)
    infeas: list = field(default_factory=list)
    rbar: list = field(default_factory=list)
    p: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    logged: list = field(default_factory=list)

    def __len__(self):
        return len(self.k)

    def append(self, k, step, n_k, rbar=math.nan, p=math.nan, wall_time=math.nan):
        self.k.append(int(k))
        self.step.append(float(step))
        self.n_k.append(int(n_k))
        self.rbar.append(float(rbar))
        self.p.append(float(p))
        self.wall_time.append(float(wall_time))
        self.f_iter.append(math.nan)
        self.f_avg.append(math.nan)
        self.infeas.append(math.nan)
        self.logged.append(False)

    def log_metrics(self, f_iter, f_avg, infeas):
        self.f_iter[-1] = float(f_iter)
        self.f_avg[-1] = float(f_avg)
        self.infeas[-1] = float(infeas)
        self.logged[-1] = True

    def logged_rows(self):
        """Indices into the trace lists that carry metrics."""
        return [i for i, flag in enumerate(self.logged) if flag]

    def as_arrays(self):
        return {name: np.asarray(getattr(self, name)) for name in (
            "k", "step", "n_k", "f_iter", "f_avg", "infeas", "rbar", "p", "wall_time", "logged"
        )}


@dataclass
class SolverOutput:
    final_average: np.ndarray
    final_iterate: np.ndarray
    trace: RunTrace
    observed_Mf: float
    tau: Optional[int] = None
    rbars: Optional[np.ndarray] = None
    iterates: Optional[np.ndarray] = None
    dual: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)


def default_log_every(T):
    return 1 if T <= 2000 else math.ceil(T / 2000)


def _is_log_point(k, T, log_every):
    if not log_every:
        return False
    return k % log_every == 0 or k == T


# --------------------------------------------------------------------------
# Gradient method with randomized feasibility
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GradSolverConfig:
    """Configuration of the gradient method.

    ``mode`` is ``"adaptive"`` (three-branch stepsize with tolerance ``eps``)
    or ``"diminishing"`` (``4 / (mu (k+1))``). ``L`` and ``mu`` default to the
    objective's curvature constants.
    """

    T: int
    schedule: SampleSizeSchedule = PowerGrowth(2.0)
    mode: str = "adaptive"
    eps: float = 1e6
    L: Optional[float] = None
    mu: Optional[float] = None
    feas: FeasibilityConfig = FeasibilityConfig()
    log_every: Optional[int] = None
    record_iterates: bool = False

    def __post_init__(self):
        if self.T < 1:
            raise ParameterError("T must be at least 1")
        if self.mode not in ("adaptive", "diminishing"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.mode == "adaptive" and not self.eps > 0:
            raise ParameterError("eps must be positive")
        if self.L is not None and self.mu is not None and self.mu > self.L:
            raise ParameterError("mu cannot exceed L")


def adaptive_stepsize(grad_norm, L, mu, eps):
    """``min{1/(2(L-mu)), 1/L, eps/(2 ||grad||^2)}``; absent branches count as +inf."""
    if grad_norm < 0 or not L > 0 or not mu > 0 or not eps > 0:
        raise ParameterError("need grad_norm >= 0, L > 0, mu > 0, eps > 0")
    if mu > L:
        raise ParameterError("mu cannot exceed L")
    step = 1.0 / L
    if L > mu:
        step = min(step, 1.0 / (2.0 * (L - mu)))
    if grad_norm > 0:
        step = min(step, eps / (2.0 * grad_norm * grad_norm))
    return step


def diminishing_stepsize(k, mu):
    return 4.0 / (mu * (k + 1))


def exp_weighted_average(points, decay):
    """Average of ``x_t`` with weights ``decay**(k-t) * alpha_t``.

    ``points`` is a sequence of ``(alpha_t, x_t)`` pairs, oldest first.
    """
    if len(points) == 0:
        raise ParameterError("cannot average an empty sequence")
    if not 0.0 <= decay <= 1.0:
        raise ParameterError("decay must lie in [0, 1]")
    alphas = np.array([a for a, _ in points], dtype=np.float64)
    xs = np.array([x for _, x in points], dtype=np.float64)
    if np.any(alphas <= 0):
        raise ParameterError("weights alpha_t must be positive")
    k = len(alphas)
    powers = np.arange(k - 1, -1, -1, dtype=np.float64)
    with np.errstate(under="ignore"):
        w = alphas * decay**powers if decay > 0 else np.where(powers == 0, alphas, 0.0)
    return (w @ xs) / w.sum()


class _ExpAverager:
    """Running exponentially weighted average, rebuilt when ``decay`` changes."""

    def __init__(self, dim, capacity):
        self.alphas = np.empty(capacity)
        self.xs = np.empty((capacity, dim))
        self.n = 0
        self.decay = None
        self.S = np.zeros(dim)
        self.W = 0.0

    def push(self, alpha, x, decay):
        self.alphas[self.n] = alpha
        self.xs[self.n] = x
        self.n += 1
        if decay != self.decay:
            self.decay = decay
            powers = np.arange(self.n - 1, -1, -1, dtype=np.float64)
            with np.errstate(under="ignore"):
                w = self.alphas[: self.n] * decay**powers if decay > 0 else np.where(
                    powers == 0, self.alphas[: self.n], 0.0
                )
            self.S = w @ self.xs[: self.n]
            self.W = float(w.sum())
        else:
            self.S = decay * self.S + alpha * x
            self.W = decay * self.W + alpha

    def value(self):
        return self.S / self.W


def _resolve_curvature(problem, cfg):
    L = cfg.L if cfg.L is not None else problem.objective.smoothness
    mu = cfg.mu if cfg.mu is not None else problem.objective.strong_convexity
    if L is None or mu is None:
        raise ParameterError("the gradient method needs both L and mu")
    if not (L > 0 and mu > 0) or mu > L * (1 + 1e-12):
        raise ParameterError(f"invalid curvature pair L={L}, mu={mu}")
    return float(L), float(min(mu, L))


def _start_point(problem, x0):
    if x0 is None:
        x0 = np.zeros(problem.dim)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (problem.dim,):
        raise ParameterError(f"x0 must have shape ({problem.dim},)")
    if not np.all(np.isfinite(x0)):
        raise ParameterError("x0 must be finite")
    return problem.domain.project(x0)


def _metrics(problem, x_iter, x_avg):
    f = problem.objective.value
    return f(x_iter), f(x_avg), problem.infeasibility(x_avg)


def solve_gradient_feasibility(
    problem: ConstrainedProblem,
    cfg: GradSolverConfig,
    rng: RandomSource,
    x0=None,
    *,
    schedule_rng: Optional[RandomSource] = None,
    step_callback: Optional[Callable] = None,
    inner_callback: Optional[Callable] = None,
) -> SolverOutput:
    """Run ``T`` outer iterations of gradient step + feasibility pass.

    ``step_callback(k, x_k, v_next, alpha_k)`` fires after each gradient step
    (``k`` starts at 0); ``inner_callback`` is forwarded to every feasibility
    pass.
    """
    L, mu = _resolve_curvature(problem, cfg)
    grad = problem.objective.subgradient
    sched_rng = schedule_rng if schedule_rng is not None else rng
    log_every = default_log_every(cfg.T) if cfg.log_every is None else cfg.log_every
    adaptive = cfg.mode == "adaptive"
    alpha_cap = 1.0 / L if L == mu else min(1.0 / L, 1.0 / (2.0 * (L - mu)))

    def stepsize(k, gnorm):
        if adaptive:
            return adaptive_stepsize(gnorm, L, mu, cfg.eps)
        return diminishing_stepsize(k, mu)

    x = _start_point(problem, x0)
    g = np.asarray(grad(x), dtype=np.float64)
    gnorm = float(np.linalg.norm(g))
    if not math.isfinite(gnorm):
        raise DivergenceError("non-finite gradient at the starting point", RunTrace(), 0)
    alpha = stepsize(0, gnorm)

    trace = RunTrace()
    averager = _ExpAverager(problem.dim, cfg.T) if adaptive else None
    dim_sum = np.zeros(problem.dim)
    dim_weight = 0.0
    running_max = 0.0
    iterates = [] if cfg.record_iterates else None
    t_start = time.perf_counter()

    for k in range(cfg.T):
        v = x - alpha * g
        if not np.all(np.isfinite(v)):
            raise DivergenceError(f"non-finite iterate at k={k}", trace, k)
        v = problem.domain.project(v)
        if step_callback is not None:
            step_callback(k, x, v, alpha)
        n_next = cfg.schedule.draw(k + 1, sched_rng)
        x, _ = feasibility_pass(
            v, n_next, problem.constraints, problem.domain, cfg.feas, rng,
            callback=inner_callback,
        )
        g = np.asarray(grad(x), dtype=np.float64)
        gnorm = float(np.linalg.norm(g))
        if not (math.isfinite(gnorm) and np.all(np.isfinite(x))):
            raise DivergenceError(f"non-finite gradient at k={k + 1}", trace, k + 1)
        t = k + 1
        alpha = stepsize(t, gnorm)
        running_max = max(running_max, gnorm)

        if adaptive:
            abar = alpha_cap
            if running_max > 0:
                abar = min(abar, cfg.eps / (2.0 * running_max * running_max))
            averager.push(alpha, x, 1.0 - abar * mu)
        else:
            w = (t + 1.0) ** 2
            dim_sum += w * x
            dim_weight += w
        if iterates is not None:
            iterates.append(x.copy())

        trace.append(t, alpha, n_next, wall_time=time.perf_counter() - t_start)
        if _is_log_point(t, cfg.T, log_every):
            x_avg = averager.value() if adaptive else dim_sum / dim_weight
            fi, fa, inf = _metrics(problem, x, x_avg)
            if not (math.isfinite(fi) and math.isfinite(fa)):
                raise DivergenceError(f"non-finite objective at k={t}", trace, t)
            trace.log_metrics(fi, fa, inf)

    x_avg = averager.value() if adaptive else dim_sum / dim_weight
    return SolverOutput(
        final_average=x_avg,
        final_iterate=x,
        trace=trace,
        observed_Mf=running_max,
        iterates=None if iterates is None else np.array(iterates),
        extra={"L": L, "mu": mu, "mode": cfg.mode},
    )


# --------------------------------------------------------------------------
# DoWS / T-DoWS
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DowsSolverConfig:
    """DoWS (``tamed=False``) or T-DoWS (``tamed=True``).

    ``r`` is the initial distance estimate ``rbar_0`` and ``p0`` the initial
    accumulator; plain DoWS uses ``p0 = 0``.
    """

    r: float
    T: int
    schedule: SampleSizeSchedule = PowerGrowth(2.0)
    tamed: bool = False
    p0: float = 0.0
    feas: FeasibilityConfig = FeasibilityConfig()
    log_every: Optional[int] = None
    record_iterates: bool = False

    def __post_init__(self):
        if not self.r > 0:
            raise ParameterError("r must be positive")
        if self.p0 < 0:
            raise ParameterError("p0 must be nonnegative")
        if self.T < 1:
            raise ParameterError("T must be at least 1")


def dows_stepsize(rbar, p):
    """``rbar^2 / sqrt(p)``."""
    if not p > 0:
        raise ParameterError("DoWS stepsize needs p > 0")
    return rbar * rbar / math.sqrt(p)


def tdows_stepsize(rbar, p_k, p_ref, p0_zero=True):
    """Tamed stepsize.

    With ``p0 = 0`` the reference is ``p_1`` and the step is
    ``rbar^2 / (2 sqrt(p_k) ln(e p_k / p_1))``; with ``p0 > 0`` the reference
    is ``p0`` and the step is ``rbar^2 / (sqrt(2 p_k) ln(e p_k / p0))``.
    """
    if not p_ref > 0:
        raise ParameterError("reference accumulator must be positive")
    if p_k < p_ref:
        raise ParameterError("accumulator p_k fell below its reference value")
    log_term = 1.0 + math.log(p_k / p_ref)
    if p0_zero:
        return rbar * rbar / (2.0 * math.sqrt(p_k) * log_term)
    return rbar * rbar / (math.sqrt(2.0 * p_k) * log_term)


def select_tau(rbars: Sequence[float]) -> int:
    """1-based ``argmin_{1<=k<=T} rbar_{k+1}^2 / sum_{i<=k} rbar_i^2``.

    ``rbars`` holds ``rbar_1 .. rbar_{T+1}``; ties go to the smallest index.
    """
    r = np.asarray(rbars, dtype=np.float64)
    if r.ndim != 1 or r.shape[0] < 2:
        raise ParameterError("select_tau needs rbar_1 .. rbar_{T+1} with T >= 1")
    if np.any(r <= 0):
        raise ParameterError("distance estimates must be positive")
    sq = r * r
    ratios = sq[1:] / np.cumsum(sq[:-1])
    return int(np.argmin(ratios)) + 1


def tau_average(rbars, xs, tau):
    """``sum_{k<=tau} rbar_k^2 x_k / sum_{k<=tau} rbar_k^2`` (``tau`` 1-based)."""
    r = np.asarray(rbars, dtype=np.float64)[:tau]
    xs = np.asarray(xs, dtype=np.float64)[:tau]
    w = r * r
    return (w @ xs) / w.sum()


def solve_dows_family(
    problem: ConstrainedProblem,
    cfg: DowsSolverConfig,
    rng: RandomSource,
    x0=None,
    *,
    schedule_rng: Optional[RandomSource] = None,
    step_callback: Optional[Callable] = None,
    inner_callback: Optional[Callable] = None,
) -> SolverOutput:
    """DoWS / T-DoWS with randomized feasibility.

    The start ``x0`` is projected onto the easy set and passed through one
    feasibility pass with ``N_1``; the result is both ``x_1`` and the anchor
    ``x_0`` for the distance estimates. Subsequent passes use
    ``N_2, N_3, ...``. The reported average is ``xbar_tau`` with ``tau`` from
    :func:`select_tau`; at logging points the trace holds ``f(xbar_tau_k)``
    for the horizon ``k`` reached so far.
    """
    sub = problem.objective.subgradient
    sched_rng = schedule_rng if schedule_rng is not None else rng
    log_every = default_log_every(cfg.T) if cfg.log_every is None else cfg.log_every
    dim = problem.dim

    v1 = _start_point(problem, x0)
    n_k = cfg.schedule.draw(1, sched_rng)
    x, _ = feasibility_pass(
        v1, n_k, problem.constraints, problem.domain, cfg.feas, rng, callback=inner_callback
    )
    anchor = x.copy()

    rbar = float(cfg.r)
    p = float(cfg.p0)
    p1 = None
    rbars = np.empty(cfg.T + 1)
    xs = np.empty((cfg.T, dim))
    cum_x = np.empty((cfg.T, dim))
    cum_w = np.empty(cfg.T)
    running_max = 0.0
    trace = RunTrace()
    t_start = time.perf_counter()

    for k in range(1, cfg.T + 1):
        rbar = max(float(np.linalg.norm(x - anchor)), rbar)
        s = np.asarray(sub(x), dtype=np.float64)
        s_sq = float(s @ s)
        if not math.isfinite(s_sq):
            raise DivergenceError(f"non-finite subgradient at k={k}", trace, k)
        running_max = max(running_max, math.sqrt(s_sq))
        p = p + rbar * rbar * s_sq
        if k == 1:
            p1 = p
            if p1 == 0.0:
                raise ZeroInitialSubgradient(
                    "objective subgradient vanishes at x_1 and p0 = 0"
                )
        if cfg.tamed:
            if cfg.p0 == 0.0:
                alpha = tdows_stepsize(rbar, p, p1, p0_zero=True)
            else:
                alpha = tdows_stepsize(rbar, p, cfg.p0, p0_zero=False)
        else:
            alpha = dows_stepsize(rbar, p)

        rbars[k - 1] = rbar
        xs[k - 1] = x
        w = rbar * rbar
        if k == 1:
            cum_x[0] = w * x
            cum_w[0] = w
        else:
            cum_x[k - 1] = cum_x[k - 2] + w * x
            cum_w[k - 1] = cum_w[k - 2] + w

        v = x - alpha * s
        if not np.all(np.isfinite(v)):
            raise DivergenceError(f"non-finite iterate at k={k}", trace, k)
        v = problem.domain.project(v)
        if step_callback is not None:
            step_callback(k, x, v, alpha)
        n_used = n_k
        n_k = cfg.schedule.draw(k + 1, sched_rng)
        x, _ = feasibility_pass(
            v, n_k, problem.constraints, problem.domain, cfg.feas, rng,
            callback=inner_callback,
        )
        rbar_next = max(float(np.linalg.norm(x - anchor)), rbar)

        trace.append(k, alpha, n_used, rbar=rbar, p=p, wall_time=time.perf_counter() - t_start)
        if _is_log_point(k, cfg.T, log_every):
            ratios = (np.append(rbars[1:k], rbar_next) ** 2) / cum_w[:k]
            tau_k = int(np.argmin(ratios)) + 1
            x_avg = cum_x[tau_k - 1] / cum_w[tau_k - 1]
            fi, fa, inf = _metrics(problem, xs[k - 1], x_avg)
            if not (math.isfinite(fi) and math.isfinite(fa)):
                raise DivergenceError(f"non-finite objective at k={k}", trace, k)
            trace.log_metrics(fi, fa, inf)

    rbars[cfg.T] = rbar_next
    tau = select_tau(rbars)
    x_avg = cum_x[tau - 1] / cum_w[tau - 1]
    return SolverOutput(
        final_average=x_avg,
        final_iterate=xs[cfg.T - 1].copy(),
        trace=trace,
        observed_Mf=running_max,
        tau=tau,
        rbars=rbars,
        iterates=xs.copy() if cfg.record_iterates else None,
        extra={"anchor": anchor, "tamed": cfg.tamed, "x_next": x},
    )
