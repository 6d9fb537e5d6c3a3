"""Problem abstraction, easy-set projections and seeded random streams."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import DimensionError, ParameterError

__all__ = [
    "as_vector",
    "EasySet",
    "WholeSpace",
    "Box",
    "Ball",
    "NonnegativeSlice",
    "Product",
    "project",
    "ObjectiveOracle",
    "ConstraintFamily",
    "CallableConstraints",
    "AffineConstraints",
    "CountingConstraints",
    "ConstrainedProblem",
    "RandomSource",
    "Purpose",
    "stream_id",
    "uniform_index",
]


def as_vector(x, dim=None, name="x"):
    """Return ``x`` as a finite 1-D float64 array (always a copy)."""
    v = np.array(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} contains non-finite entries")
    return v


# --------------------------------------------------------------------------
# Easy sets
# --------------------------------------------------------------------------


class EasySet:
    """Closed convex set with a closed-form Euclidean projection."""

    #: required dimension, or ``None`` when any dimension is accepted
    dim: Optional[int] = None

    def _check(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise DimensionError(f"expected a 1-D vector, got shape {x.shape}")
        if self.dim is not None and x.shape[0] != self.dim:
            raise DimensionError(
                f"vector has dimension {x.shape[0]}, set has dimension {self.dim}"
            )
        return x

    def project(self, x):
        raise NotImplementedError

    def contains(self, x, tol=1e-12):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class WholeSpace(EasySet):
    dim: Optional[int] = None

    def project(self, x):
        return self._check(x).copy()

    def contains(self, x, tol=1e-12):
        self._check(x)
        return True

    def to_dict(self):
        return {"type": "whole", "dim": self.dim}


class Box(EasySet):
    """Axis-aligned box ``lower <= x <= upper``."""

    def __init__(self, lower, upper):
        lower = np.array(lower, dtype=np.float64)
        upper = np.array(upper, dtype=np.float64)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise DimensionError("lower and upper must be 1-D of equal length")
        if np.any(lower > upper):
            raise ParameterError("Box requires lower <= upper componentwise")
        lower.setflags(write=False)
        upper.setflags(write=False)
        self.lower = lower
        self.upper = upper
        self.dim = lower.shape[0]

    @classmethod
    def cube(cls, dim, half_width):
        return cls(np.full(dim, -float(half_width)), np.full(dim, float(half_width)))

    def project(self, x):
        return np.clip(self._check(x), self.lower, self.upper)

    def contains(self, x, tol=1e-12):
        x = self._check(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def max_norm(self):
        """Largest Euclidean norm attained on the box."""
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))

    def to_dict(self):
        return {"type": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __repr__(self):
        return f"Box(dim={self.dim})"


class Ball(EasySet):
    """Euclidean ball of ``radius`` around ``center``."""

    def __init__(self, center, radius):
        center = np.array(center, dtype=np.float64)
        if center.ndim != 1:
            raise DimensionError("center must be 1-D")
        if not radius > 0:
            raise ParameterError("Ball radius must be positive")
        center.setflags(write=False)
        self.center = center
        self.radius = float(radius)
        self.dim = center.shape[0]

    def project(self, x):
        x = self._check(x)
        diff = x - self.center
        norm = np.linalg.norm(diff)
        if norm <= self.radius:
            return x.copy()
        return self.center + (self.radius / norm) * diff

    def contains(self, x, tol=1e-12):
        x = self._check(x)
        return bool(np.linalg.norm(x - self.center) <= self.radius * (1 + tol) + tol)

    def to_dict(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}

    def __repr__(self):
        return f"Ball(dim={self.dim}, radius={self.radius})"


class NonnegativeSlice(EasySet):
    """Coordinates ``start:end`` are clamped at zero; all others are free."""

    def __init__(self, start, end, dim=None):
        if not 0 <= start <= end:
            raise ParameterError("NonnegativeSlice requires 0 <= start <= end")
        if dim is not None and end > dim:
            raise ParameterError("NonnegativeSlice range exceeds dimension")
        self.start = int(start)
        self.end = int(end)
        self.dim = dim

    def _check(self, x):
        x = super()._check(x)
        if x.shape[0] < self.end:
            raise DimensionError(
                f"vector has dimension {x.shape[0]}, slice ends at {self.end}"
            )
        return x

    def project(self, x):
        out = self._check(x).copy()
        np.maximum(out[self.start:self.end], 0.0, out=out[self.start:self.end])
        return out

    def contains(self, x, tol=1e-12):
        x = self._check(x)
        return bool(np.all(x[self.start:self.end] >= -tol))

    def to_dict(self):
        return {"type": "nonneg", "start": self.start, "end": self.end, "dim": self.dim}

    def __repr__(self):
        return f"NonnegativeSlice({self.start}, {self.end})"


class Product(EasySet):
    """Cartesian product; ``blocks`` is a list of ``(start, end, set)``.

    The ranges must tile ``0..dim`` without gaps or overlap. Each component
    set sees only its own block of coordinates.
    """

    def __init__(self, blocks: Sequence[tuple]):
        blocks = sorted(((int(a), int(b), s) for a, b, s in blocks), key=lambda t: t[0])
        if not blocks:
            raise ParameterError("Product needs at least one block")
        pos = 0
        for a, b, s in blocks:
            if a != pos or b <= a:
                raise ParameterError("Product ranges must partition the dimension")
            if s.dim is not None and s.dim != b - a:
                raise DimensionError(f"block {a}:{b} does not match set dimension {s.dim}")
            pos = b
        self.blocks = tuple(blocks)
        self.dim = pos

    def project(self, x):
        x = self._check(x)
        out = np.empty_like(x)
        for a, b, s in self.blocks:
            out[a:b] = s.project(x[a:b])
        return out

    def contains(self, x, tol=1e-12):
        x = self._check(x)
        return all(s.contains(x[a:b], tol) for a, b, s in self.blocks)

    def to_dict(self):
        return {
            "type": "product",
            "blocks": [[a, b, s.to_dict()] for a, b, s in self.blocks],
        }

    def __repr__(self):
        return f"Product({list(self.blocks)!r})"


def project(easy_set: EasySet, x):
    """Euclidean projection of ``x`` onto ``easy_set``."""
    if not np.all(np.isfinite(np.asarray(x, dtype=np.float64))):
        raise ParameterError("cannot project a non-finite vector")
    return easy_set.project(x)


# --------------------------------------------------------------------------
# Objective and constraints
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ObjectiveOracle:
    """Objective ``f`` with a (sub)gradient map and optional curvature data.

    ``smoothness`` is the Lipschitz constant ``L`` of the gradient and
    ``strong_convexity`` the modulus ``mu``; both are only needed by the
    gradient method.
    """

    value: Callable[[np.ndarray], float]
    subgradient: Callable[[np.ndarray], np.ndarray]
    smoothness: Optional[float] = None
    strong_convexity: Optional[float] = None

    def __post_init__(self):
        mu, L = self.strong_convexity, self.smoothness
        if mu is not None and not mu > 0:
            raise ParameterError("strong_convexity must be positive")
        if L is not None and not L > 0:
            raise ParameterError("smoothness must be positive")
        if mu is not None and L is not None and mu > L * (1 + 1e-12):
            raise ParameterError("strong_convexity cannot exceed smoothness")


class ConstraintFamily:
    """Finite family ``g_i(x) <= 0`` for ``i = 0..count-1``.

    Subclasses implement :meth:`evaluate` and :meth:`subgradient`; the batched
    helpers fall back to loops and may be overridden with vectorized code.
    """

    count: int = 0

    def evaluate(self, i: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def subgradient(self, i: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def values(self, x):
        return np.array([self.evaluate(i, x) for i in range(self.count)], dtype=np.float64)

    def weighted_subgradient(self, x, weights):
        """``sum_i weights[i] * subgradient(i, x)``."""
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        for i in np.flatnonzero(weights):
            out += weights[i] * self.subgradient(int(i), x)
        return out

    def __len__(self):
        return self.count


class CallableConstraints(ConstraintFamily):
    """Constraint family assembled from two plain functions."""

    def __init__(self, count, evaluate, subgradient):
        if count < 0:
            raise ParameterError("constraint count must be nonnegative")
        self.count = int(count)
        self._evaluate = evaluate
        self._subgradient = subgradient

    def evaluate(self, i, x):
        return float(self._evaluate(i, x))

    def subgradient(self, i, x):
        return np.asarray(self._subgradient(i, x), dtype=np.float64)


class AffineConstraints(ConstraintFamily):
    """Halfspaces ``G[i] @ x - h[i] <= 0``."""

    def __init__(self, G, h):
        G = np.array(G, dtype=np.float64)
        h = np.array(h, dtype=np.float64)
        if G.ndim != 2 or h.shape != (G.shape[0],):
            raise DimensionError("G must be (m, n) and h must be (m,)")
        G.setflags(write=False)
        h.setflags(write=False)
        self.G = G
        self.h = h
        self.count = G.shape[0]

    def evaluate(self, i, x):
        return float(self.G[i] @ x - self.h[i])

    def subgradient(self, i, x):
        return self.G[i].copy()

    def values(self, x):
        return self.G @ x - self.h

    def weighted_subgradient(self, x, weights):
        return self.G.T @ weights


class CountingConstraints(ConstraintFamily):
    """Wrapper counting scalar constraint evaluations (batched calls count ``m``)."""

    def __init__(self, inner: ConstraintFamily):
        self.inner = inner
        self.count = inner.count
        self.evaluations = 0
        self.subgradient_calls = 0

    def evaluate(self, i, x):
        self.evaluations += 1
        return self.inner.evaluate(i, x)

    def subgradient(self, i, x):
        self.subgradient_calls += 1
        return self.inner.subgradient(i, x)

    def values(self, x):
        self.evaluations += self.count
        return self.inner.values(x)

    def weighted_subgradient(self, x, weights):
        self.subgradient_calls += self.count
        return self.inner.weighted_subgradient(x, weights)


@dataclass
class ConstrainedProblem:
    """``min f(x)`` over ``x`` in ``domain`` subject to every ``g_i(x) <= 0``.

    ``x_star``/``f_star`` hold ground truth when it is known.
    """

    objective: ObjectiveOracle
    constraints: ConstraintFamily
    domain: EasySet
    dim: int
    x_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def infeasibility(self, x):
        return float(np.sum(np.maximum(self.constraints.values(x), 0.0)))


# --------------------------------------------------------------------------
# Randomness
# --------------------------------------------------------------------------


class Purpose:
    """Stream purposes; combined with a replica id by :func:`stream_id`."""

    PROBLEM = 0
    INIT = 1
    SAMPLING = 2
    SCHEDULE = 3
    SPLIT = 4


def stream_id(replica: int, purpose: int) -> int:
    """One stream per (replica, purpose) pair."""
    if replica < 0 or not 0 <= purpose < 256:
        raise ParameterError("replica must be >= 0 and purpose in [0, 256)")
    return (int(replica) << 8) | int(purpose)


class RandomSource:
    """Counter-based random stream identified by ``(seed, stream)``.

    Backed by the Philox bit generator keyed through ``SeedSequence`` with the
    stream id as spawn key, so streams derived from one seed never share
    state and the same pair always replays the same draws.
    """

    def __init__(self, seed: int = 0, stream: int = 0):
        if seed < 0 or stream < 0:
            raise ParameterError("seed and stream must be nonnegative")
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def spawn(self, stream: int) -> "RandomSource":
        return RandomSource(self.seed, stream)

    def uniform(self) -> float:
        """One draw from ``[0, 1)``."""
        return float(self.generator.random())

    def integer(self, m: int) -> int:
        """One draw uniform on ``{0, ..., m-1}``."""
        return int(self.generator.integers(m))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


def uniform_index(rng: RandomSource, m: int) -> int:
    """Constraint index drawn uniformly from ``{0, ..., m-1}``."""
    if m < 1:
        raise ParameterError("cannot sample an index from an empty constraint family")
    return rng.integer(m)
