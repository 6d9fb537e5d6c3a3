"""Sample-size schedules ``N_k`` and closed-form decay analytics.

A schedule yields the number of feasibility samples at outer iteration
``k >= 1``, either by formula or by a draw from a discrete distribution.
``expected_decay`` returns the exact value of ``E[(1-q)^(N_k/2)]`` for each
variant; ``sum_decay_bound`` and friends give the ``tau``-uniform bounds on
the partial sums of that quantity for power-law growth.

Random variants sample by inversion of the CDF using uniforms from the
caller's :class:`~randfeas.core.RandomSource`, so draws do not depend on any
platform distribution code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .core import RandomSource
from .exceptions import ParameterError

__all__ = [
    "DecayDiagnostics",
    "ConstantRate",
    "PowerRate",
    "LogRate",
    "parse_rate",
    "SampleSizeSchedule",
    "Constant",
    "PowerGrowth",
    "LogGrowth",
    "Poisson",
    "UniformInt",
    "Binomial",
    "draw",
    "expected_decay",
    "sum_decay_bound",
    "poisson_sum_decay_bound",
    "binomial_sum_decay_bound",
    "uniform_decay_integral_bound",
    "schedule_from_dict",
]


@dataclass(frozen=True)
class DecayDiagnostics:
    """Contraction constant ``q`` of the feasibility pass, in ``(0, 1)``."""

    q: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ParameterError(f"q must lie in (0, 1), got {self.q}")

    @classmethod
    def from_constants(cls, beta, c, Mg):
        """``q = beta (2 - beta) / (c Mg^2)``."""
        return cls(beta * (2.0 - beta) / (c * Mg * Mg))

    @property
    def root(self):
        """``sqrt(1 - q)``, the per-sample factor on the distance."""
        return math.sqrt(1.0 - self.q)


def _q(diag) -> DecayDiagnostics:
    return diag if isinstance(diag, DecayDiagnostics) else DecayDiagnostics(float(diag))


# --------------------------------------------------------------------------
# Parameter maps k -> value
# --------------------------------------------------------------------------


def ceil_root(k, p):
    """Exact ``ceil(k ** (1/p))`` for integer ``k >= 0`` despite pow rounding."""
    if k <= 0:
        return 0
    k = int(k)
    inv = 1.0 / p
    if inv.is_integer():
        return k ** int(inv)
    if float(p).is_integer():
        p = int(p)  # integer powers compare exactly
    c = math.ceil(k**inv)
    while c > 1 and (c - 1) ** p >= k:
        c -= 1
    while c**p < k:
        c += 1
    return c


@dataclass(frozen=True)
class ConstantRate:
    value: float

    def __call__(self, k):
        return self.value

    def to_dict(self):
        return self.value


@dataclass(frozen=True)
class PowerRate:
    """``scale * ceil(k ** (1/p))``."""

    p: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.p > 0:
            raise ParameterError("power growth needs p > 0")

    def __call__(self, k):
        v = ceil_root(k, self.p)
        return v if self.scale == 1.0 else self.scale * v

    def to_dict(self):
        return {"growth": "power", "p": self.p, "scale": self.scale}


@dataclass(frozen=True)
class LogRate:
    """``offset + ceil(log_base(k + 1))``."""

    offset: float = 0.0
    base: float = math.e

    def __call__(self, k):
        return self.offset + math.ceil(math.log(k + 1) / math.log(self.base))

    def to_dict(self):
        return {"growth": "log", "offset": self.offset, "base": self.base}


Rate = Union[ConstantRate, PowerRate, LogRate, Callable[[int], float]]


def parse_rate(obj) -> Rate:
    """Numbers become constants; ``{"growth": ...}`` dicts become growth laws."""
    if isinstance(obj, (ConstantRate, PowerRate, LogRate)):
        return obj
    if isinstance(obj, bool):
        raise ParameterError("boolean is not a valid rate")
    if isinstance(obj, (int, float)):
        return ConstantRate(obj)
    if isinstance(obj, dict):
        kind = obj.get("growth")
        if kind == "power":
            return PowerRate(float(obj["p"]), float(obj.get("scale", 1.0)))
        if kind == "log":
            return LogRate(float(obj.get("offset", 0.0)), float(obj.get("base", math.e)))
        raise ParameterError(f"unknown rate growth {kind!r}")
    if callable(obj):
        return obj
    raise ParameterError(f"cannot interpret {obj!r} as a rate")


def _rate_dict(rate):
    if hasattr(rate, "to_dict"):
        return rate.to_dict()
    raise ParameterError("schedule uses an unserializable callable rate")


def _as_int(value, what, k):
    iv = int(round(value))
    if abs(iv - value) > 1e-9:
        raise ParameterError(f"{what} must be an integer at k={k}, got {value}")
    return iv


# --------------------------------------------------------------------------
# Schedules
# --------------------------------------------------------------------------


class SampleSizeSchedule:
    """Base class. Subclasses define the raw ``N_k`` law; ``floor`` is applied last."""

    floor: int = 0
    random: bool = False

    def _check_k(self, k):
        if k < 1:
            raise ParameterError(f"schedules are indexed from k=1, got {k}")

    def draw(self, k: int, rng: RandomSource | None = None) -> int:
        self._check_k(k)
        return max(self._raw(k, rng), self.floor)

    def draw_many(self, k: int, rng: RandomSource | None, size: int) -> np.ndarray:
        self._check_k(k)
        return np.maximum(self._raw_many(k, rng, size), self.floor)

    def _raw_many(self, k, rng, size):
        return np.full(size, self._raw(k, rng), dtype=np.int64)

    def expected_decay(self, k: int, diag) -> float:
        self._check_k(k)
        return self._decay(k, _q(diag))

    def to_dict(self):
        raise NotImplementedError


class _Deterministic(SampleSizeSchedule):
    def value(self, k):
        return max(self._raw(k, None), self.floor)

    def _decay(self, k, diag):
        return diag.root ** self.value(k)


@dataclass(frozen=True)
class Constant(_Deterministic):
    N: int
    floor: int = 0

    def __post_init__(self):
        if self.N < 0 or self.floor < 0:
            raise ParameterError("N and floor must be nonnegative")

    def _raw(self, k, rng):
        return int(self.N)

    def to_dict(self):
        return {"type": "constant", "N": self.N, "floor": self.floor}


@dataclass(frozen=True)
class PowerGrowth(_Deterministic):
    """``N_k = ceil(k ** (1/p))``."""

    p: float
    floor: int = 0

    def __post_init__(self):
        if not self.p > 0:
            raise ParameterError("PowerGrowth needs p > 0")
        if self.floor < 0:
            raise ParameterError("floor must be nonnegative")

    def _raw(self, k, rng):
        return ceil_root(k, self.p)

    def to_dict(self):
        return {"type": "power", "p": self.p, "floor": self.floor}


@dataclass(frozen=True)
class LogGrowth(_Deterministic):
    """``N_k = N0 + ceil(log_base(k + 1))``."""

    N0: int
    base: float = math.e
    floor: int = 0

    def __post_init__(self):
        if self.N0 < 0 or not self.base > 1 or self.floor < 0:
            raise ParameterError("LogGrowth needs N0 >= 0, base > 1, floor >= 0")

    def _raw(self, k, rng):
        return int(self.N0) + math.ceil(math.log(k + 1) / math.log(self.base))

    def to_dict(self):
        return {"type": "log", "N0": self.N0, "base": self.base, "floor": self.floor}


class _Discrete(SampleSizeSchedule):
    """Random schedule sampled by inversion on a (tail-truncated) CDF table."""

    random = True

    def _table(self, k):
        """Return ``(lo, pmf)`` with ``pmf[j]`` the probability of ``lo + j``."""
        raise NotImplementedError

    def _raw(self, k, rng):
        return int(self._raw_many(k, rng, 1)[0])

    def _raw_many(self, k, rng, size):
        if rng is None:
            raise ParameterError("random schedules need a RandomSource")
        lo, pmf = self._table(k)
        cdf = np.cumsum(pmf)
        u = rng.generator.random(size)
        j = np.searchsorted(cdf, u, side="right")
        return lo + np.minimum(j, len(pmf) - 1).astype(np.int64)

    def _closed_form(self, k, diag):
        raise NotImplementedError

    def _decay(self, k, diag):
        value = self._closed_form(k, diag)
        F = self.floor
        if F > 0:
            # atoms below the floor are moved to F
            lo, pmf = self._table(k)
            s = diag.root
            for j in range(lo, min(F, lo + len(pmf))):
                value += pmf[j - lo] * (s**F - s**j)
            # E[s^max(N, F)] <= s^F exactly; the correction above can overshoot by roundoff
            value = min(value, s**F)
        return float(value)


def _truncate(pmf_iter, mass_tol=1e-17, max_len=10_000_000):
    out = []
    total = 0.0
    for p in pmf_iter:
        out.append(p)
        total += p
        if total >= 1.0 - mass_tol or len(out) >= max_len:
            break
    return np.array(out)


@dataclass(frozen=True)
class Poisson(_Discrete):
    lam: Rate
    floor: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lam", parse_rate(self.lam))
        if self.floor < 0:
            raise ParameterError("floor must be nonnegative")

    def _lam(self, k):
        lam = float(self.lam(k))
        if not lam > 0 or not math.isfinite(lam):
            raise ParameterError(f"Poisson rate must be positive at k={k}, got {lam}")
        return lam

    def _table(self, k):
        lam = self._lam(k)
        lo = max(0, int(math.floor(lam - 12.0 * math.sqrt(lam) - 10.0)))
        p0 = math.exp(-lam + lo * math.log(lam) - math.lgamma(lo + 1))

        def gen():
            p, j = p0, lo
            while True:
                yield p
                j += 1
                p *= lam / j
                if j > lam and p < 1e-300:
                    return

        return lo, _truncate(gen())

    def _closed_form(self, k, diag):
        return math.exp(-self._lam(k) * (1.0 - diag.root))

    def to_dict(self):
        return {"type": "poisson", "lam": _rate_dict(self.lam), "floor": self.floor}


@dataclass(frozen=True)
class UniformInt(_Discrete):
    """``N_k`` uniform on ``{a_k, ..., b_k}`` with ``1 <= a_k < b_k``."""

    a: Rate
    b: Rate
    floor: int = 0

    def __post_init__(self):
        object.__setattr__(self, "a", parse_rate(self.a))
        object.__setattr__(self, "b", parse_rate(self.b))
        if self.floor < 0:
            raise ParameterError("floor must be nonnegative")

    def bounds(self, k):
        a = _as_int(self.a(k), "a_k", k)
        b = _as_int(self.b(k), "b_k", k)
        if a < 1 or b <= a:
            raise ParameterError(f"UniformInt needs 1 <= a_k < b_k, got ({a}, {b}) at k={k}")
        return a, b

    def _table(self, k):
        a, b = self.bounds(k)
        return a, np.full(b - a + 1, 1.0 / (b - a + 1))

    def _raw_many(self, k, rng, size):
        if rng is None:
            raise ParameterError("random schedules need a RandomSource")
        a, b = self.bounds(k)
        u = rng.generator.random(size)
        return a + np.minimum(np.floor(u * (b - a + 1)), b - a).astype(np.int64)

    def _closed_form(self, k, diag):
        a, b = self.bounds(k)
        s = diag.root
        # exact finite geometric sum
        total = math.fsum(s**j for j in range(a, b + 1))
        return total / (b - a + 1)

    def to_dict(self):
        return {
            "type": "uniform",
            "a": _rate_dict(self.a),
            "b": _rate_dict(self.b),
            "floor": self.floor,
        }


@dataclass(frozen=True)
class Binomial(_Discrete):
    n: Rate
    p: float
    floor: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n", parse_rate(self.n))
        if not 0.0 < self.p <= 1.0:
            raise ParameterError("Binomial success probability must lie in (0, 1]")
        if self.floor < 0:
            raise ParameterError("floor must be nonnegative")

    def _n(self, k):
        n = _as_int(self.n(k), "n_k", k)
        if n < 0:
            raise ParameterError(f"n_k must be nonnegative at k={k}")
        return n

    def _table(self, k):
        n, p = self._n(k), self.p
        if p == 1.0:
            return n, np.array([1.0])
        sd = math.sqrt(n * p * (1 - p))
        lo = max(0, int(math.floor(n * p - 12.0 * sd - 10.0)))
        logp0 = (
            math.lgamma(n + 1) - math.lgamma(lo + 1) - math.lgamma(n - lo + 1)
            + lo * math.log(p) + (n - lo) * math.log1p(-p)
        )
        ratio = p / (1.0 - p)

        def gen():
            prob, j = math.exp(logp0), lo
            while j <= n:
                yield prob
                prob *= (n - j) / (j + 1) * ratio
                j += 1

        return lo, _truncate(gen())

    def _closed_form(self, k, diag):
        return (1.0 - self.p * (1.0 - diag.root)) ** self._n(k)

    def to_dict(self):
        return {"type": "binomial", "n": _rate_dict(self.n), "p": self.p, "floor": self.floor}


# --------------------------------------------------------------------------
# Functional interface and bounds
# --------------------------------------------------------------------------


def draw(schedule: SampleSizeSchedule, k: int, rng: RandomSource | None = None) -> int:
    return schedule.draw(k, rng)


def expected_decay(schedule: SampleSizeSchedule, k: int, diag) -> float:
    """Exact ``E[(1-q)^(N_k/2)]``."""
    return schedule.expected_decay(k, diag)


def _check_p(p):
    if not (p > 0 and math.isfinite(p)):
        raise ParameterError(f"exponent p must be positive, got {p}")


def sum_decay_bound(p: float, diag) -> float:
    """Bound on ``sum_{k<=tau} (1-q)^(ceil(k^(1/p))/2)`` valid for every ``tau``.

    Equals ``2^p Gamma(p+1) / ln(1/(1-q))^p``.
    """
    _check_p(p)
    d = _q(diag)
    return 2.0**p * math.gamma(p + 1.0) / (-math.log1p(-d.q)) ** p


def poisson_sum_decay_bound(p: float, diag) -> float:
    """Same bound for ``N_k ~ Poisson(ceil(k^(1/p)))``: ``Gamma(p+1)/(1-sqrt(1-q))^p``."""
    _check_p(p)
    d = _q(diag)
    return math.gamma(p + 1.0) / (1.0 - d.root) ** p


def binomial_sum_decay_bound(p: float, prob: float, diag) -> float:
    """Same bound for ``N_k ~ Binomial(ceil(k^(1/p)), prob)``."""
    _check_p(p)
    if not 0.0 < prob <= 1.0:
        raise ParameterError("prob must lie in (0, 1]")
    d = _q(diag)
    a = -math.log(1.0 - prob * (1.0 - d.root))
    return math.gamma(p + 1.0) / a**p


def uniform_decay_integral_bound(a: int, b: int, diag) -> float:
    """Integral upper bound on the uniform-``{a..b}`` expectation."""
    if a < 1 or b <= a:
        raise ParameterError("need 1 <= a < b")
    d = _q(diag)
    s = d.root
    return 2.0 / ((b - a + 1) * -math.log1p(-d.q)) * (s ** (a - 1) - s**b)


_SCHEDULES = {
    "constant": lambda d: Constant(int(d["N"]), int(d.get("floor", 0))),
    "power": lambda d: PowerGrowth(float(d["p"]), int(d.get("floor", 0))),
    "log": lambda d: LogGrowth(int(d["N0"]), float(d.get("base", math.e)), int(d.get("floor", 0))),
    "poisson": lambda d: Poisson(parse_rate(d["lam"]), int(d.get("floor", 0))),
    "uniform": lambda d: UniformInt(parse_rate(d["a"]), parse_rate(d["b"]), int(d.get("floor", 0))),
    "binomial": lambda d: Binomial(parse_rate(d["n"]), float(d["p"]), int(d.get("floor", 0))),
}


def schedule_from_dict(d: dict) -> SampleSizeSchedule:
    """Inverse of ``schedule.to_dict()``; records are tagged by ``type``."""
    try:
        kind = d["type"]
    except (KeyError, TypeError):
        raise ParameterError("schedule record needs a 'type' field") from None
    if kind not in _SCHEDULES:
        raise ParameterError(f"unknown schedule type {kind!r}")
    try:
        return _SCHEDULES[kind](d)
    except KeyError as exc:
        raise ParameterError(f"schedule {kind!r} is missing field {exc.args[0]!r}") from None
