import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from randfeas import RandomSource
from randfeas.core import AffineConstraints, Purpose, stream_id
from randfeas.exceptions import DatasetError, ParameterError
from randfeas.problems import (
    QcqpInstance,
    build_svm,
    generate_eig_controlled_matrix,
    generate_qcqp,
    infeasibility,
    load_dataset_csv,
    make_separable_2d,
    misclassification_error,
    qcqp_oracles,
    reference_solve,
    split_dataset,
)
from randfeas.core import Box

DATA = Path(__file__).parent / "data"


# --------------------------------------------------------------------------
# QCQP
# --------------------------------------------------------------------------


def test_eig_matrix_identity_spectrum():
    M = generate_eig_controlled_matrix(6, 1.0, 1.0, RandomSource(0, 0))
    np.testing.assert_allclose(M, np.eye(6), rtol=0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_eig_matrix_range_and_symmetry(seed):
    M = generate_eig_controlled_matrix(5, 1.0, 10.0, RandomSource(seed, 0))
    eig = np.linalg.eigvalsh(M)
    assert eig.min() >= 1 - 1e-9 and eig.max() <= 10 + 1e-9
    assert np.max(np.abs(M - M.T)) <= 1e-12


def test_eig_matrix_errors():
    with pytest.raises(ParameterError):
        generate_eig_controlled_matrix(0, 1.0, 2.0, RandomSource(0, 0))
    with pytest.raises(ParameterError):
        generate_eig_controlled_matrix(3, 2.0, 1.0, RandomSource(0, 0))


def test_known_case_construction(qcqp_known):
    inst, prob = qcqp_known
    x = inst.x_star
    grad = (inst.A + inst.A.T) @ x + inst.b
    assert np.max(np.abs(grad)) <= 1e-10
    g = prob.constraints.values(x)
    assert np.all(g >= -2.0 - 1e-12) and np.all(g <= -1.0 + 1e-12)
    np.testing.assert_allclose(g, -inst.slack, rtol=0, atol=1e-10)
    assert infeasibility(prob.constraints, x) == 0.0
    assert inst.box.contains(x)


def random_feasible_points(inst, prob, count, seed):
    rng = RandomSource(seed, 0).generator
    # sample around x* at several scales so many samples stay feasible
    pts = []
    while len(pts) < count:
        scale = rng.choice([0.1, 1.0, 5.0])
        y = inst.box.project(inst.x_star + scale * rng.normal(size=inst.n))
        if np.all(prob.constraints.values(y) <= 0):
            pts.append(y)
    return np.array(pts)


def test_known_case_optimality_and_strong_convexity(qcqp_known):
    inst, prob = qcqp_known
    mu = prob.objective.strong_convexity
    f = prob.objective.value
    for y in random_feasible_points(inst, prob, 1000, 1):
        gap = f(y) - inst.f_star
        assert gap >= 0.0
        assert gap >= 0.5 * mu * np.sum((y - inst.x_star) ** 2) - 1e-8


@pytest.mark.parametrize("case", ["known", "sc_unknown", "convex"])
def test_generated_spectra(case):
    inst = generate_qcqp(6, 20, case, RandomSource(2, stream_id(0, Purpose.PROBLEM)))
    assert np.max(np.abs(inst.A - inst.A.T)) <= 1e-12
    eigA = np.linalg.eigvalsh(inst.A)
    lo = 0.0 if case == "convex" else 1.0
    assert eigA.min() >= lo - 1e-9 and eigA.max() <= 10 + 1e-9
    for C in inst.C:
        assert np.max(np.abs(C - C.T)) <= 1e-12
        eigC = np.linalg.eigvalsh(C + C.T)
        assert eigC.min() >= -1e-9 and eigC.max() <= 4 + 1e-9
    if case == "known":
        assert inst.x_star is not None
    else:
        assert inst.x_star is None and np.all((inst.e >= 1) & (inst.e <= 2))


def test_qcqp_generator_errors():
    with pytest.raises(ParameterError):
        generate_qcqp(0, 3, "known", RandomSource(0, 0))
    with pytest.raises(ParameterError):
        generate_qcqp(3, 3, "other", RandomSource(0, 0))


def test_qcqp_oracles_hand_example():
    inst = QcqpInstance(np.eye(2), np.zeros(2), np.zeros((1, 2, 2)), np.zeros((1, 2)), np.ones(1), Box.cube(2, 10))
    obj, cons = qcqp_oracles(inst)
    x = np.array([1.0, 1.0])
    assert obj.value(x) == 2.0
    assert np.array_equal(obj.subgradient(x), [2.0, 2.0])
    assert obj.smoothness == 2.0 and obj.strong_convexity == 2.0
    assert cons.values(x)[0] == -1.0


def test_qcqp_finite_differences(qcqp_known):
    inst, prob = qcqp_known
    rng = RandomSource(5, 0).generator
    h = 1e-5
    obj, cons = prob.objective, prob.constraints
    for _ in range(20):
        x = rng.uniform(-3, 3, inst.n)
        v = rng.normal(size=inst.n)
        fd = (obj.value(x + h * v) - obj.value(x - h * v)) / (2 * h)
        assert abs(fd - obj.subgradient(x) @ v) <= 1e-6 * max(1.0, abs(fd))
        i = int(rng.integers(inst.m))
        fd = (cons.evaluate(i, x + h * v) - cons.evaluate(i, x - h * v)) / (2 * h)
        assert abs(fd - cons.subgradient(i, x) @ v) <= 1e-6 * max(1.0, abs(fd))
    x = rng.uniform(-3, 3, inst.n)
    w = rng.uniform(0, 1, inst.m)
    manual = sum(w[i] * cons.subgradient(i, x) for i in range(inst.m))
    np.testing.assert_allclose(cons.weighted_subgradient(x, w), manual, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(cons.values(x), [cons.evaluate(i, x) for i in range(inst.m)], atol=1e-12)


def test_reference_solve_matches_known(qcqp_small_known):
    inst, _ = qcqp_small_known
    x, f, viol = reference_solve(inst)
    assert abs(f - inst.f_star) <= 1e-8 * max(1.0, abs(inst.f_star))
    assert viol <= 1e-9
    np.testing.assert_allclose(x, inst.x_star, atol=1e-5)


def test_stored_reference_cross_check():
    cp = pytest.importorskip("cvxpy")
    ref = json.loads((DATA / "qcqp_convex_seed0_reference.json").read_text())
    inst = generate_qcqp(ref["n"], ref["m"], ref["case"], RandomSource(0, stream_id(0, Purpose.PROBLEM)))
    x = cp.Variable(inst.n)
    cons = [x >= inst.box.lower, x <= inst.box.upper]
    for C, u, e in zip(inst.C, inst.u, inst.e):
        cons.append(cp.quad_form(x, cp.psd_wrap(C)) + u @ x - e <= 0)
    A = 0.5 * (inst.A + inst.A.T)
    prob = cp.Problem(cp.Minimize(cp.quad_form(x, cp.psd_wrap(A)) + inst.b @ x), cons)
    prob.solve()
    assert abs(prob.value - ref["f_star"]) <= 1e-5 * max(1.0, abs(ref["f_star"]))


# --------------------------------------------------------------------------
# SVM
# --------------------------------------------------------------------------


def one_point_svm():
    return build_svm(np.array([[1.0, 0.0]]), np.array([1.0]), C_reg=0.5)


def test_svm_constraint_examples():
    prob = one_point_svm()
    x = np.array([2.0, 0.0, 0.0, 1.0])
    assert prob.constraints.evaluate(0, x) == -2.0
    margin = np.array([1.0, 0.0, 0.0, 0.0])
    assert prob.constraints.evaluate(0, margin) == 0.0
    assert prob.objective.value(np.zeros(4)) == 0.0
    assert np.array_equal(prob.constraints.subgradient(0, x), [-1.0, 0.0, -1.0, -1.0])
    assert np.array_equal(prob.objective.subgradient(x), [2.0, 0.0, 0.0, 0.5])


def test_svm_domain_keeps_slack_nonnegative():
    prob = one_point_svm()
    p = prob.domain.project(np.array([-3.0, 4.0, -5.0, -1.0]))
    assert np.array_equal(p, [-3.0, 4.0, -5.0, 0.0])


def test_svm_label_validation():
    with pytest.raises(ParameterError):
        build_svm(np.zeros((2, 2)), np.array([1.0, 0.0]))
    with pytest.raises(ParameterError):
        build_svm(np.zeros((2, 2)), np.array([1.0, -1.0]), C_reg=0.0)


def test_svm_finite_differences():
    rng = RandomSource(3, 0).generator
    Z = rng.normal(size=(15, 3))
    y = np.where(rng.random(15) < 0.5, -1.0, 1.0)
    prob = build_svm(Z, y, C_reg=0.3)
    h = 1e-5
    for _ in range(20):
        x = rng.normal(size=prob.dim)
        x[4:] = np.abs(x[4:]) + 0.1
        v = rng.normal(size=prob.dim)
        fd = (prob.objective.value(x + h * v) - prob.objective.value(x - h * v)) / (2 * h)
        assert abs(fd - prob.objective.subgradient(x) @ v) <= 1e-6 * max(1.0, abs(fd))
        i = int(rng.integers(15))
        fd = (prob.constraints.evaluate(i, x + h * v) - prob.constraints.evaluate(i, x - h * v)) / (2 * h)
        assert abs(fd - prob.constraints.subgradient(i, x) @ v) <= 1e-6 * max(1.0, abs(fd))
    x = rng.normal(size=prob.dim)
    np.testing.assert_allclose(prob.constraints.values(x), [prob.constraints.evaluate(i, x) for i in range(15)],
                               atol=1e-12)
    w = rng.random(15)
    manual = sum(w[i] * prob.constraints.subgradient(i, x) for i in range(15))
    np.testing.assert_allclose(prob.constraints.weighted_subgradient(x, w), manual, atol=1e-12)


def test_misclassification_examples():
    Z, y, normal = make_separable_2d(200, 0.3, RandomSource(0, 0))
    assert misclassification_error(normal, 0.0, Z, y) == 0.0
    assert misclassification_error(-normal, 0.0, Z, y) == 1.0
    balanced = np.array([1.0, -1.0, 1.0, -1.0])
    assert misclassification_error(np.zeros(2), 0.0, np.ones((4, 2)), balanced) == 0.5
    with pytest.raises(ParameterError):
        misclassification_error(np.zeros(2), 0.0, np.zeros((0, 2)), np.zeros(0))


def test_infeasibility_examples():
    cons = AffineConstraints(np.eye(3), np.array([1.0, 1.0, 1.0]))
    assert infeasibility(cons, np.zeros(3)) == 0.0
    assert infeasibility(cons, np.array([1.5, 2.5, 0.0])) == 2.0


@given(st.integers(0, 2**31 - 1))
def test_infeasibility_nonnegative(seed):
    rng = np.random.default_rng(seed)
    cons = AffineConstraints(rng.normal(size=(8, 4)), rng.normal(size=8))
    assert infeasibility(cons, rng.normal(scale=10, size=4)) >= 0.0


def test_separable_generator_margin():
    Z, y, normal = make_separable_2d(500, 0.5, RandomSource(1, 0))
    assert Z.shape == (500, 2)
    assert np.all(np.abs(Z @ normal) >= 0.5)
    assert set(np.unique(y)) == {-1.0, 1.0}


# --------------------------------------------------------------------------
# datasets
# --------------------------------------------------------------------------


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_csv_label_mapping(tmp_path):
    p = write(tmp_path, "f1,f2,label\n1.0,2.0,A\n3.0,4.0,B\n")
    split = load_dataset_csv(p, "label", "A", train_fraction=1.0, standardize=False)
    order = np.argsort(split.train_index)
    assert np.array_equal(split.y_train[order], [1.0, -1.0])
    assert split.feature_names == ["f1", "f2"]


def test_csv_index_label_without_header(tmp_path):
    p = write(tmp_path, "0,1.5,2\n1,0.5,3\n")
    split = load_dataset_csv(p, 0, 1, train_fraction=1.0, standardize=False)
    assert sorted(split.y_train.tolist()) == [-1.0, 1.0]
    assert split.X_train.shape == (2, 2)


def test_csv_split_partition_and_determinism(tmp_path):
    rows = "\n".join(f"{i},{i * 0.5},{'p' if i % 2 else 'n'}" for i in range(10))
    p = write(tmp_path, "a,b,y\n" + rows + "\n")
    s1 = load_dataset_csv(p, "y", "p", seed=4)
    s2 = load_dataset_csv(p, "y", "p", seed=4)
    assert len(s1.train_index) == 8 and len(s1.test_index) == 2
    assert not set(s1.train_index) & set(s1.test_index)
    assert np.array_equal(s1.train_index, s2.train_index)
    assert np.array_equal(s1.X_test, s2.X_test)


def test_csv_errors(tmp_path):
    with pytest.raises(DatasetError, match="line 3"):
        load_dataset_csv(write(tmp_path, "a,y\n1,p\n2\n"), "y", "p")
    with pytest.raises(DatasetError, match="line 2"):
        load_dataset_csv(write(tmp_path, "a,y\nx,p\n"), "y", "p")
    with pytest.raises(DatasetError, match="not found"):
        load_dataset_csv(write(tmp_path, "a,y\n1,p\n"), "label", "p")
    with pytest.raises(DatasetError):
        load_dataset_csv(tmp_path / "missing.csv", "y", "p")
    with pytest.raises(DatasetError):
        load_dataset_csv(write(tmp_path, ""), 0, "p")


def test_standardization():
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.normal(5, 3, 200), rng.uniform(-1, 9, 200), np.full(200, 7.0)])
    y = np.where(rng.random(200) < 0.5, -1.0, 1.0)
    s = split_dataset(X, y, 0.8, seed=1)
    assert np.all(np.abs(s.X_train.mean(axis=0)) <= 1e-10)
    var = s.X_train.var(axis=0)
    assert np.all(np.abs(var[:2] - 1) <= 1e-8)
    assert np.array_equal(s.X_train[:, 2], np.zeros(160))
    # the test part uses the training statistics
    np.testing.assert_allclose(s.X_test, s.scaler.transform(X[s.test_index]), atol=0)
