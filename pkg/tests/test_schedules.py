import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randfeas import RandomSource
from randfeas.exceptions import ParameterError
from randfeas.schedules import (
    Binomial,
    Constant,
    DecayDiagnostics,
    LogGrowth,
    Poisson,
    PowerGrowth,
    PowerRate,
    UniformInt,
    binomial_sum_decay_bound,
    ceil_root,
    draw,
    expected_decay,
    poisson_sum_decay_bound,
    schedule_from_dict,
    sum_decay_bound,
    uniform_decay_integral_bound,
)

qs = st.floats(0.01, 0.99)


def test_draw_examples():
    assert draw(PowerGrowth(2), 9) == 3
    assert all(draw(Constant(5), k) == 5 for k in (1, 17, 10**6))
    assert draw(LogGrowth(2), 1) == 2 + math.ceil(math.log(2))


@given(k=st.integers(1, 10**12), p=st.sampled_from([1, 2, 3]))
def test_ceil_root_exact(k, p):
    # integer arithmetic oracle: c^p >= k > (c-1)^p
    c = ceil_root(k, p)
    assert c**p >= k and (c - 1) ** p < k
    assert ceil_root(k, 1 / p) == k**p


def test_poisson_sample_mean():
    n = Poisson(3.0).draw_many(1, RandomSource(0, 7), 100_000)
    se = math.sqrt(3.0 / len(n))
    assert abs(n.mean() - 3.0) <= 4 * se


def test_schedule_errors():
    with pytest.raises(ParameterError):
        PowerGrowth(2).draw(0)
    with pytest.raises(ParameterError):
        UniformInt(3, 3).draw(1, RandomSource(0, 0))
    with pytest.raises(ParameterError):
        Poisson(1.0).draw(1)
    with pytest.raises(ParameterError):
        expected_decay(Constant(1), 1, 1.0)
    with pytest.raises(ParameterError):
        DecayDiagnostics(0.0)


def test_expected_decay_examples():
    assert expected_decay(Poisson(2.0), 1, 0.75) == pytest.approx(math.exp(-1.0), rel=1e-15)
    for q in (0.1, 0.5, 0.9):
        assert expected_decay(Binomial(1, 1.0), 1, q) == pytest.approx(math.sqrt(1 - q), rel=1e-15)
    assert expected_decay(Constant(0), 4, 0.3) == 1.0


def test_poisson_decay_monte_carlo():
    rng = RandomSource(1, 0)
    n = Poisson(2.0).draw_many(1, rng, 100_000)
    vals = 0.5**n
    assert abs(vals.mean() - math.exp(-1)) <= 4 * vals.std(ddof=1) / math.sqrt(len(vals))


@given(a=st.integers(1, 40), width=st.integers(1, 40), q=qs)
def test_uniform_exact_sum_and_integral_bound(a, width, q):
    b = a + width
    s = math.sqrt(1 - q)
    brute = sum(s**j for j in range(a, b + 1)) / (b - a + 1)
    val = expected_decay(UniformInt(a, b), 1, q)
    assert abs(val - brute) <= 1e-12
    assert val <= uniform_decay_integral_bound(a, b, q) * (1 + 1e-12)


@given(q=qs, floor=st.integers(0, 15), lam=st.floats(0.2, 10.0))
def test_floor_bound(q, floor, lam):
    cap = math.sqrt(1 - q) ** floor
    assert expected_decay(Poisson(lam, floor=floor), 1, q) <= cap
    assert expected_decay(Binomial(7, 0.4, floor=floor), 1, q) <= cap
    assert expected_decay(PowerGrowth(2, floor=floor), 3, q) <= cap


def test_floor_exact_against_enumeration():
    sched = Binomial(6, 0.3, floor=3)
    q = 0.4
    s = math.sqrt(1 - q)
    pmf = [math.comb(6, j) * 0.3**j * 0.7 ** (6 - j) for j in range(7)]
    brute = sum(p * s ** max(j, 3) for j, p in enumerate(pmf))
    assert expected_decay(sched, 1, q) == pytest.approx(brute, rel=1e-13)


@given(q=qs)
def test_decay_nonincreasing_in_k(q):
    for sched in (PowerGrowth(2), Poisson(PowerRate(2)), Binomial(PowerRate(1.5), 0.6)):
        vals = [expected_decay(sched, k, q) for k in range(1, 60)]
        assert all(b <= a * (1 + 1e-13) for a, b in zip(vals, vals[1:]))


def test_sum_decay_bound_examples():
    q = 1 - math.exp(-2)
    bound = sum_decay_bound(1, q)
    # 2^p Gamma(p+1) / ln(1/(1-q))^p with ln(1/(1-q)) = 2
    assert bound == pytest.approx(1.0, rel=1e-14)
    partial = math.fsum(expected_decay(PowerGrowth(1), k, q) for k in range(1, 10_001))
    assert partial == pytest.approx(1 / (math.e - 1), rel=1e-12)
    assert partial <= bound <= 2

    q = 0.1
    b2 = sum_decay_bound(2, q)
    assert b2 == pytest.approx(4 * math.gamma(3) / math.log(10 / 9) ** 2, rel=1e-14)
    assert math.fsum(expected_decay(PowerGrowth(2), k, q) for k in range(1, 10_001)) <= b2


def test_sum_decay_bound_monotone_in_q():
    vals = [sum_decay_bound(1, q) for q in np.linspace(0.05, 0.999, 40)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] > 0


def test_random_sum_bounds():
    for q in (0.05, 0.5):
        for p in (1.0, 2.0):
            s = math.fsum(expected_decay(Poisson(PowerRate(p)), k, q) for k in range(1, 3001))
            assert s <= poisson_sum_decay_bound(p, q)
            s = math.fsum(expected_decay(Binomial(PowerRate(p), 0.7), k, q) for k in range(1, 3001))
            assert s <= binomial_sum_decay_bound(p, 0.7, q)


@pytest.mark.parametrize("sched", [
    Constant(4, floor=1),
    PowerGrowth(2.0),
    LogGrowth(3, base=2.0),
    Poisson(2.5),
    Poisson(PowerRate(2.0, 3.0), floor=2),
    UniformInt(2, PowerRate(1.0)),
    Binomial(10, 0.25),
], ids=repr)
def test_dict_round_trip(sched):
    clone = schedule_from_dict(sched.to_dict())
    assert clone.to_dict() == sched.to_dict()
    a = clone.draw_many(5, RandomSource(0, 1), 50) if clone.random else [clone.draw(k) for k in range(1, 9)]
    b = sched.draw_many(5, RandomSource(0, 1), 50) if sched.random else [sched.draw(k) for k in range(1, 9)]
    assert np.array_equal(a, b)


def test_schedule_from_dict_errors():
    with pytest.raises(ParameterError):
        schedule_from_dict({"type": "nope"})
    with pytest.raises(ParameterError):
        schedule_from_dict({"type": "power"})


def test_random_draws_reproducible():
    a = Poisson(4.0).draw_many(3, RandomSource(8, 2), 1000)
    b = Poisson(4.0).draw_many(3, RandomSource(8, 2), 1000)
    assert np.array_equal(a, b) and np.all(a >= 0)
