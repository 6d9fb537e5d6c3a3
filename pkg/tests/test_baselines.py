import numpy as np
import pytest

from randfeas import AffineConstraints, ConstrainedProblem, ObjectiveOracle, WholeSpace
from randfeas.baselines import PrimalDualConfig, solve_primal_dual
from randfeas.core import Box, CountingConstraints
from randfeas.exceptions import DivergenceError, ParameterError


def half_norm_sq(dim=2):
    return ObjectiveOracle(lambda x: 0.5 * float(x @ x), lambda x: x.copy(), smoothness=1.0, strong_convexity=1.0)


def test_one_arrow_hurwicz_step():
    prob = ConstrainedProblem(half_norm_sq(), AffineConstraints(np.array([[1.0, 0.0]]), np.ones(1)), WholeSpace(), 2)
    out = solve_primal_dual(prob, PrimalDualConfig("arrow-hurwicz", 0.1, 0.1, 1), x0=np.array([2.0, 0.0]))
    np.testing.assert_allclose(out.final_iterate, [1.8, 0.0], rtol=0, atol=1e-15)
    np.testing.assert_allclose(out.dual, [0.1], rtol=0, atol=1e-15)


def test_no_constraints_is_projected_gradient():
    box = Box([-1.0, -1.0], [1.0, 1.0])
    obj = ObjectiveOracle(lambda x: 0.5 * float((x - 3) @ (x - 3)), lambda x: x - 3.0)
    prob = ConstrainedProblem(obj, AffineConstraints(np.zeros((0, 2)), np.zeros(0)), box, 2)
    out = solve_primal_dual(prob, PrimalDualConfig("alt-gda", 0.2, 0.5, 25), x0=np.array([0.0, -0.5]))
    x = np.array([0.0, -0.5])
    for _ in range(25):
        x = box.project(x - 0.2 * (x - 3.0))
    assert np.array_equal(out.final_iterate, x)
    assert out.dual.shape == (0,)


def random_affine(seed, m=30, n=5):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(m, n))
    h = rng.uniform(-1.0, 1.0, size=m)
    return AffineConstraints(G, h)


@pytest.mark.parametrize("mode", ["arrow-hurwicz", "alt-gda"])
def test_dual_nonnegative(mode):
    cons = random_affine(0)
    prob = ConstrainedProblem(half_norm_sq(), cons, Box.cube(5, 10.0), 5)
    duals = []
    orig = cons.weighted_subgradient

    def spy(x, w):
        duals.append(np.array(w))
        return orig(x, w)

    cons.weighted_subgradient = spy
    out = solve_primal_dual(prob, PrimalDualConfig(mode, 0.01, 0.05, 1000), x0=np.full(5, 4.0))
    assert len(duals) == 1000
    assert all(np.all(d >= 0) for d in duals) and np.all(out.dual >= 0)


def test_modes_agree_when_dual_frozen():
    cons = random_affine(1)
    prob = ConstrainedProblem(half_norm_sq(), cons, Box.cube(5, 10.0), 5)
    x0 = np.random.default_rng(7).uniform(-5, 5, 5)
    a = solve_primal_dual(prob, PrimalDualConfig("arrow-hurwicz", 0.05, 0.0, 200), x0=x0)
    b = solve_primal_dual(prob, PrimalDualConfig("alt-gda", 0.05, 0.0, 200), x0=x0)
    assert np.array_equal(a.final_iterate, b.final_iterate)
    assert np.array_equal(a.final_average, b.final_average)
    assert a.trace.f_avg == b.trace.f_avg


def test_modes_differ_with_dual_steps():
    cons = random_affine(1)
    prob = ConstrainedProblem(half_norm_sq(), cons, Box.cube(5, 10.0), 5)
    x0 = np.full(5, 3.0)
    a = solve_primal_dual(prob, PrimalDualConfig("arrow-hurwicz", 0.05, 0.1, 20), x0=x0)
    b = solve_primal_dual(prob, PrimalDualConfig("alt-gda", 0.05, 0.1, 20), x0=x0)
    assert not np.array_equal(a.final_iterate, b.final_iterate)


@pytest.mark.parametrize("mode", ["arrow-hurwicz", "alt-gda"])
@pytest.mark.parametrize("m", [1, 17, 40])
def test_constraint_evaluations_linear_in_m(mode, m):
    cons = CountingConstraints(random_affine(2, m=m))
    prob = ConstrainedProblem(half_norm_sq(), cons, WholeSpace(), 5)
    T = 37
    out = solve_primal_dual(prob, PrimalDualConfig(mode, 0.01, 0.01, T, log_every=10**6), x0=np.ones(5))
    # the iterations cost m each; the infeasibility proxy at each log point is extra
    logged = len(out.trace.logged_rows())
    assert logged == 1
    assert cons.evaluations - m * logged == m * T
    assert cons.subgradient_calls == m * T
    assert out.trace.n_k == [m] * T


def test_average_is_arithmetic_mean():
    cons = random_affine(3)
    prob = ConstrainedProblem(half_norm_sq(), cons, Box.cube(5, 10.0), 5)
    iterates = []
    x0 = np.full(5, 2.0)
    T = 15
    for t in range(1, T + 1):
        iterates.append(solve_primal_dual(prob, PrimalDualConfig("arrow-hurwicz", 0.1, 0.2, t), x0=x0).final_iterate)
    out = solve_primal_dual(prob, PrimalDualConfig("arrow-hurwicz", 0.1, 0.2, T), x0=x0)
    np.testing.assert_allclose(out.final_average, np.mean(iterates, axis=0), rtol=1e-14, atol=1e-14)


def test_divergence_reported():
    obj = ObjectiveOracle(lambda x: -float(x @ x), lambda x: -1e200 * x)
    prob = ConstrainedProblem(obj, random_affine(4), WholeSpace(), 5)
    with pytest.raises(DivergenceError) as info, np.errstate(over="ignore"):
        solve_primal_dual(prob, PrimalDualConfig("arrow-hurwicz", 1e200, 0.1, 50), x0=np.ones(5))
    assert info.value.trace is not None


def test_config_validation():
    with pytest.raises(ParameterError):
        PrimalDualConfig("nope", 0.1, 0.1, 5)
    with pytest.raises(ParameterError):
        PrimalDualConfig("alt-gda", 0.0, 0.1, 5)
    with pytest.raises(ParameterError):
        PrimalDualConfig("alt-gda", 0.1, -0.1, 5)
    with pytest.raises(ParameterError):
        PrimalDualConfig("alt-gda", 0.1, 0.1, 0)
