"""Randomized Polyak-step feasibility pass.

Each inner step samples one constraint uniformly, takes a scaled Polyak step
on its positive part and projects back onto the easy set. The pass never
touches the full constraint family, so its cost is ``O(N)`` constraint
evaluations regardless of ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import ConstraintFamily, EasySet, RandomSource
from .exceptions import DimensionError, InconsistentSubgradient, ParameterError

__all__ = ["FeasibilityConfig", "FeasibilityTrace", "polyak_step", "feasibility_pass"]


@dataclass(frozen=True)
class FeasibilityConfig:
    beta: float = 1.0
    zero_grad_tolerance: float = 1e-14
    record_iterates: bool = False

    def __post_init__(self):
        if not 0.0 < self.beta < 2.0:
            raise ParameterError(f"beta must lie in (0, 2), got {self.beta}")
        if self.zero_grad_tolerance < 0:
            raise ParameterError("zero_grad_tolerance must be nonnegative")


@dataclass
class FeasibilityTrace:
    """Scalars seen during one pass; iterates only when requested."""

    inner_count: int = 0
    indices: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    iterates: Optional[list] = None
    output: Optional[np.ndarray] = None

    def final_max_violation(self, constraints: ConstraintFamily) -> float:
        if self.output is None:
            raise ValueError("trace has no output point")
        if constraints.count == 0:
            return 0.0
        return float(max(np.max(constraints.values(self.output)), 0.0))


def polyak_step(z, g_plus, d, beta, zero_grad_tolerance=1e-14):
    """Pre-projection Polyak point ``z - beta * g_plus / ||d||^2 * d``."""
    if g_plus < 0:
        raise ParameterError("g_plus must be nonnegative")
    z = np.asarray(z, dtype=np.float64)
    if g_plus == 0:
        return z.copy()
    d = np.asarray(d, dtype=np.float64)
    if d.shape != z.shape:
        raise DimensionError(f"subgradient shape {d.shape} does not match {z.shape}")
    dd = float(d @ d)
    if math.sqrt(dd) <= zero_grad_tolerance:
        raise InconsistentSubgradient(
            f"violation {g_plus:.3e} with subgradient norm {math.sqrt(dd):.3e}"
        )
    return z - (beta * g_plus / dd) * d


def feasibility_pass(
    v,
    N: int,
    constraints: ConstraintFamily,
    domain: EasySet,
    cfg: FeasibilityConfig = FeasibilityConfig(),
    rng: Optional[RandomSource] = None,
    *,
    indices: Optional[Sequence[int]] = None,
    callback: Optional[Callable] = None,
):
    """Run ``N`` sampled Polyak steps starting from ``v`` (assumed in ``domain``).

    Parameters
    ----------
    v : array_like
        Starting point; the caller is responsible for ``v`` lying in ``domain``.
    N : int
        Number of inner iterations. Feasible samples still count.
    constraints, domain :
        The hard family ``g_i <= 0`` and the easy set ``Y``.
    cfg : FeasibilityConfig
    rng : RandomSource
        Source of the constraint indices. Ignored when ``indices`` is given.
    indices : sequence of int, optional
        Replay an explicit sampling sequence of length ``N``.
    callback : callable, optional
        Called as ``callback(i, z_prev, z_new, g_plus, d)`` after every inner
        step; ``d`` is ``None`` for skipped steps.

    Returns
    -------
    x : ndarray
    trace : FeasibilityTrace
    """
    N = int(N)
    if N < 0:
        raise ParameterError("N must be nonnegative")
    z = np.array(v, dtype=np.float64)
    if z.ndim != 1:
        raise DimensionError("v must be a 1-D vector")
    if domain.dim is not None and z.shape[0] != domain.dim:
        raise DimensionError(f"v has dimension {z.shape[0]}, domain has {domain.dim}")
    trace = FeasibilityTrace(iterates=[] if cfg.record_iterates else None)
    m = constraints.count
    if N > 0 and m == 0:
        raise ParameterError("cannot sample from an empty constraint family")

    if indices is not None:
        idx = [int(i) for i in indices]
        if len(idx) != N:
            raise ParameterError(f"expected {N} indices, got {len(idx)}")
        if any(not 0 <= i < m for i in idx):
            raise ParameterError("replayed index out of range")
    elif N > 0:
        if rng is None:
            raise ParameterError("a RandomSource is required when N > 0")
        idx = rng.generator.integers(m, size=N).tolist()
    else:
        idx = []

    beta = cfg.beta
    tol = cfg.zero_grad_tolerance
    for i in idx:
        g = constraints.evaluate(i, z)
        if not math.isfinite(g):
            raise FloatingPointError(f"constraint {i} returned {g}")
        if g > 0.0:
            d = constraints.subgradient(i, z)
            dd = float(d @ d)
            if math.sqrt(dd) <= tol:
                raise InconsistentSubgradient(
                    f"constraint {i} violated by {g:.3e} with subgradient norm "
                    f"{math.sqrt(dd):.3e}"
                )
            z_new = domain.project(z - (beta * g / dd) * d)
            g_plus = g
        else:
            d = None
            z_new = domain.project(z)
            g_plus = 0.0
        if callback is not None:
            callback(i, z, z_new, g_plus, d)
        z = z_new
        trace.indices.append(i)
        trace.violations.append(g_plus)
        if trace.iterates is not None:
            trace.iterates.append(z.copy())
    trace.inner_count = len(idx)
    trace.output = z
    return z, trace
