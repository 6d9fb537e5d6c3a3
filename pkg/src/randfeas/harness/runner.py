"""Seeded multi-replica experiment runner and aggregation."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..baselines import PrimalDualConfig, solve_primal_dual
from ..core import ConstrainedProblem, Purpose, RandomSource, stream_id
from ..exceptions import AllDivergedError, DivergenceError
from ..feasibility import FeasibilityConfig
from ..problems import (
    DatasetSplit,
    build_svm,
    generate_qcqp,
    load_dataset_csv,
    make_separable_2d,
    misclassification_error,
    qcqp_problem,
    split_dataset,
)
from ..solvers import (
    DowsSolverConfig,
    GradSolverConfig,
    RunTrace,
    SolverOutput,
    solve_dows_family,
    solve_gradient_feasibility,
)
from .config import DOWS_METHODS, GRAD_METHODS, ExperimentConfig
from .reference import load_reference

__all__ = [
    "BuiltProblem",
    "ReplicaResult",
    "AggregateTrace",
    "build_problem",
    "primal_dual_steps",
    "run_replica",
    "aggregate",
    "run_experiment",
]


@dataclass
class BuiltProblem:
    problem: ConstrainedProblem
    kind: str
    instance: object
    f_star: Optional[float] = None
    split: Optional[DatasetSplit] = None


def build_problem(cfg: ExperimentConfig, use_reference=True) -> BuiltProblem:
    """Build the (single, shared) problem instance from ``cfg.seed``.

    ``use_reference=False`` skips reading a stored optimum, as needed when
    that file is about to be produced.
    """
    pcfg = cfg.problem
    rng = RandomSource(cfg.seed, stream_id(0, Purpose.PROBLEM))
    if pcfg["type"] == "qcqp":
        inst = generate_qcqp(
            pcfg["n"], pcfg["m"], pcfg["case"], rng,
            box_half_width=pcfg.get("box_half_width", 10.0),
        )
        f_star = inst.f_star
        if f_star is None and use_reference and "reference" in pcfg:
            f_star = float(load_reference(cfg.resolve_path(pcfg["reference"]), inst)["f_star"])
        return BuiltProblem(qcqp_problem(inst, f_star), "qcqp", inst, f_star)

    frac = pcfg.get("train_fraction", 0.8)
    standardize = pcfg.get("standardize", True)
    if "synthetic" in pcfg:
        syn = pcfg["synthetic"]
        Z, y, _ = make_separable_2d(syn["n"], syn["margin"], rng, syn.get("half_width", 3.0))
        split = split_dataset(Z, y, frac, cfg.seed, standardize)
    else:
        ds = pcfg["dataset"]
        split = load_dataset_csv(
            cfg.resolve_path(ds["path"]), ds["label_column"], ds["positive_label"],
            train_fraction=frac, seed=cfg.seed, standardize=standardize,
            header=ds.get("header"),
        )
    problem = build_svm(split.X_train, split.y_train, pcfg.get("C_reg", 1e-6))
    return BuiltProblem(problem, "svm", problem.meta["instance"], None, split)


def primal_dual_steps(cfg: ExperimentConfig, problem: ConstrainedProblem):
    """Configured stepsizes, or the defaults ``1/sqrt(T)`` (Arrow-Hurwicz) and
    ``mu / (2 L^2)`` (alt-GDA on a strongly convex objective)."""
    s = cfg.solver
    default = 1.0 / math.sqrt(cfg.T)
    obj = problem.objective
    if s["method"] == "alt-gda" and obj.strong_convexity and obj.smoothness:
        default = obj.strong_convexity / (2.0 * obj.smoothness**2)
    return s.get("eta_primal", default), s.get("eta_dual", default)


@dataclass
class ReplicaResult:
    replica: int
    trace: Optional[RunTrace]
    final_average: Optional[np.ndarray] = None
    diverged: bool = False
    error: str = ""
    summary: dict = field(default_factory=dict)


def _start(cfg, built, rid):
    if built.kind == "qcqp" and cfg.problem.get("init", "zeros") == "uniform":
        box = built.instance.box
        return RandomSource(cfg.seed, stream_id(rid, Purpose.INIT)).generator.uniform(box.lower, box.upper)
    return np.zeros(built.problem.dim)


def run_replica(cfg: ExperimentConfig, built: BuiltProblem, replica: int) -> ReplicaResult:
    """One independent run; divergence is caught and flagged, not raised."""
    rid = 0 if cfg.identical_replicas else replica
    sampling = RandomSource(cfg.seed, stream_id(rid, Purpose.SAMPLING))
    sched = RandomSource(cfg.seed, stream_id(rid, Purpose.SCHEDULE))
    x0 = _start(cfg, built, rid)
    s = cfg.solver
    method = s["method"]
    feas = FeasibilityConfig(beta=s.get("beta", 1.0))
    problem = built.problem
    t0 = time.perf_counter()
    try:
        if method in GRAD_METHODS:
            gcfg = GradSolverConfig(
                T=cfg.T, schedule=cfg.schedule,
                mode="adaptive" if method == "grad-adaptive" else "diminishing",
                eps=s.get("eps", 1e6), L=s.get("L"), mu=s.get("mu"),
                feas=feas, log_every=cfg.log_every,
            )
            out = solve_gradient_feasibility(problem, gcfg, sampling, x0, schedule_rng=sched)
        elif method in DOWS_METHODS:
            dcfg = DowsSolverConfig(
                r=s["r"], T=cfg.T, schedule=cfg.schedule, tamed=method == "tdows",
                p0=s.get("p0", 0.0), feas=feas, log_every=cfg.log_every,
            )
            out = solve_dows_family(problem, dcfg, sampling, x0, schedule_rng=sched)
        else:
            eta_p, eta_d = primal_dual_steps(cfg, problem)
            pcfg = PrimalDualConfig(method, eta_p, eta_d, cfg.T, cfg.log_every)
            with np.errstate(over="ignore", invalid="ignore"):
                out = solve_primal_dual(problem, pcfg, x0)
    except DivergenceError as exc:
        return ReplicaResult(replica, exc.trace, diverged=True, error=str(exc))
    return ReplicaResult(
        replica, out.trace, out.final_average,
        summary=_summarize(built, out, time.perf_counter() - t0),
    )


def _summarize(built: BuiltProblem, out: SolverOutput, wall):
    f = float(built.problem.objective.value(out.final_average))
    summary = {
        "f_final": f,
        "infeas_final": built.problem.infeasibility(out.final_average),
        "wall_time": wall,
    }
    if built.f_star is not None:
        summary["gap_final"] = abs(f - built.f_star)
    if out.tau is not None:
        summary["tau"] = out.tau
    if built.kind == "svm":
        w, b, _ = built.instance.unpack(out.final_average)
        summary["train_error"] = misclassification_error(w, b, built.split.X_train, built.split.y_train)
        if len(built.split.y_test):
            summary["test_error"] = misclassification_error(w, b, built.split.X_test, built.split.y_test)
    return summary


def replica_rows(result: ReplicaResult, f_star):
    """Logged rows of one replica as arrays ``k, gap, infeas, step, n_k``."""
    tr = result.trace
    rows = tr.logged_rows()
    f_avg = np.array([tr.f_avg[i] for i in rows])
    gap = np.abs(f_avg - f_star) if f_star is not None else f_avg
    return {
        "k": np.array([tr.k[i] for i in rows], dtype=np.int64),
        "gap": gap,
        "infeas": np.array([tr.infeas[i] for i in rows]),
        "step": np.array([tr.step[i] for i in rows]),
        "n_k": np.array([tr.n_k[i] for i in rows], dtype=np.float64),
    }


@dataclass
class AggregateTrace:
    """Mean and population standard deviation over the non-diverged replicas.

    When the optimal value is unknown ``mean_gap``/``std_gap`` hold ``f(xbar_k)``
    itself and ``gap_is_objective`` is set.
    """

    k: np.ndarray
    mean_gap: np.ndarray
    std_gap: np.ndarray
    mean_infeas: np.ndarray
    std_infeas: np.ndarray
    mean_step: np.ndarray
    n_k: np.ndarray
    replica_count: int
    gap_is_objective: bool = False
    diverged: list = field(default_factory=list)
    replicas: list = field(default_factory=list)
    f_star: Optional[float] = None
    name: str = ""

    COLUMNS = ("k", "mean_gap", "std_gap", "mean_infeas", "std_infeas", "mean_step", "n_k")

    def __len__(self):
        return len(self.k)

    def column(self, name):
        return getattr(self, name)

    @classmethod
    def empty(cls, name=""):
        z = np.zeros(0)
        return cls(np.zeros(0, dtype=np.int64), z, z, z, z, z, z, 0, name=name)


def aggregate(results, f_star=None, name="") -> AggregateTrace:
    ok = [r for r in results if not r.diverged]
    diverged = [r.replica for r in results if r.diverged]
    if not ok:
        raise AllDivergedError(
            f"all {len(results)} replicas diverged", [(r.replica, r.error) for r in results]
        )
    per = [replica_rows(r, f_star) for r in ok]
    k = per[0]["k"]
    for p in per[1:]:
        if not np.array_equal(p["k"], k):
            raise RuntimeError("replicas logged different iterations")

    def stack(key):
        return np.vstack([p[key] for p in per]) if len(k) else np.zeros((len(per), 0))

    gap, inf, step, nk = stack("gap"), stack("infeas"), stack("step"), stack("n_k")
    return AggregateTrace(
        k=k,
        mean_gap=gap.mean(axis=0),
        std_gap=gap.std(axis=0),
        mean_infeas=inf.mean(axis=0),
        std_infeas=inf.std(axis=0),
        mean_step=step.mean(axis=0),
        n_k=nk.mean(axis=0),
        replica_count=len(ok),
        gap_is_objective=f_star is None,
        diverged=diverged,
        replicas=list(results),
        f_star=f_star,
        name=name,
    )


def _worker(args):
    cfg, replica = args
    return run_replica(cfg, build_problem(cfg), replica)


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> AggregateTrace:
    """Run ``cfg.replicas`` replicas (optionally in worker processes) and aggregate.

    Results are collected in replica order, so serial and parallel execution
    produce identical aggregates.
    """
    built = build_problem(cfg)
    workers = cfg.workers if workers is None else workers
    if workers > 1 and cfg.replicas > 1:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.replicas)) as pool:
            results = list(pool.map(_worker, [(cfg, r) for r in range(cfg.replicas)]))
    else:
        results = [run_replica(cfg, built, r) for r in range(cfg.replicas)]
    return aggregate(results, built.f_star, cfg.name)
