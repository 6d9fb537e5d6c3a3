"""Benchmark problems: random QCQPs with controlled spectra and soft-margin SVM."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    Box,
    ConstrainedProblem,
    ConstraintFamily,
    NonnegativeSlice,
    ObjectiveOracle,
    Product,
    Purpose,
    RandomSource,
    WholeSpace,
    stream_id,
)
from .exceptions import DatasetError, DimensionError, ParameterError, RandFeasError

__all__ = [
    "QCQP_CASES",
    "QcqpInstance",
    "QcqpConstraints",
    "generate_eig_controlled_matrix",
    "generate_qcqp",
    "qcqp_oracles",
    "qcqp_problem",
    "reference_solve",
    "SvmInstance",
    "SvmConstraints",
    "build_svm",
    "DatasetSplit",
    "load_dataset_csv",
    "split_dataset",
    "make_separable_2d",
    "misclassification_error",
    "infeasibility",
]

#: case name -> (objective eigenvalue range, optimum known by construction)
QCQP_CASES = {
    "known": ((1.0, 10.0), True),
    "sc_unknown": ((1.0, 10.0), False),
    "convex": ((0.0, 10.0), False),
}


# --------------------------------------------------------------------------
# QCQP
# --------------------------------------------------------------------------


def generate_eig_controlled_matrix(n, eig_low, eig_high, rng: RandomSource):
    """Symmetric ``Q diag(lam) Q^T`` with ``lam ~ U[eig_low, eig_high]``.

    ``Q`` is the orthogonal factor of a QR decomposition of a standard
    Gaussian matrix.
    """
    if n < 1:
        raise ParameterError("matrix size must be positive")
    if eig_low > eig_high:
        raise ParameterError("eig_low must not exceed eig_high")
    G = rng.generator.standard_normal((n, n))
    Q, _ = np.linalg.qr(G)
    lam = rng.generator.uniform(eig_low, eig_high, size=n)
    M = (Q * lam) @ Q.T
    return 0.5 * (M + M.T)


@dataclass
class QcqpInstance:
    """``min <x, A x> + <b, x>`` over a box s.t. ``<x, C_i x> + <u_i, x> - e_i <= 0``."""

    A: np.ndarray
    b: np.ndarray
    C: np.ndarray  # (m, n, n)
    u: np.ndarray  # (m, n)
    e: np.ndarray  # (m,)
    box: Box
    case: str = "known"
    x_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    slack: Optional[np.ndarray] = None

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.C.shape[0]

    def objective_value(self, x):
        return float(x @ self.A @ x + self.b @ x)


def generate_qcqp(n, m, case, rng: RandomSource, box_half_width=10.0, max_retries=100):
    """Draw a QCQP instance for one of the three benchmark cases.

    ``case`` is ``"known"`` (strongly convex, optimum placed strictly inside
    the feasible set), ``"sc_unknown"`` (strongly convex) or ``"convex"``.
    For the known case the unconstrained minimizer solves
    ``(A + A^T) x = -b``; draws whose minimizer leaves the box are redrawn.
    """
    if n < 1 or m < 1:
        raise ParameterError("n and m must be positive")
    if case not in QCQP_CASES:
        raise ParameterError(f"unknown QCQP case {case!r}; choose from {sorted(QCQP_CASES)}")
    (lo, hi), known = QCQP_CASES[case]
    box = Box.cube(n, box_half_width)

    for _ in range(max_retries):
        A = generate_eig_controlled_matrix(n, lo, hi, rng)
        C = np.stack([generate_eig_controlled_matrix(n, 0.0, 2.0, rng) for _ in range(m)])
        b = rng.generator.standard_normal(n)
        u = rng.generator.standard_normal((m, n))
        if not known:
            e = rng.generator.uniform(1.0, 2.0, size=m)
            return QcqpInstance(A, b, C, u, e, box, case)
        x_opt = np.linalg.solve(A + A.T, -b)
        if not box.contains(x_opt, tol=0.0):
            continue
        slack = rng.generator.uniform(1.0, 2.0, size=m)
        e = np.einsum("i,mij,j->m", x_opt, C, x_opt) + u @ x_opt + slack
        f_opt = float(x_opt @ A @ x_opt + b @ x_opt)
        return QcqpInstance(A, b, C, u, e, box, case, x_star=x_opt, f_star=f_opt, slack=slack)
    raise RandFeasError(f"optimum left the box in {max_retries} consecutive draws")


class QcqpConstraints(ConstraintFamily):
    def __init__(self, C, u, e):
        self.C = C
        self.u = u
        self.e = e
        self.count = C.shape[0]

    def evaluate(self, i, x):
        return float(x @ self.C[i] @ x + self.u[i] @ x - self.e[i])

    def subgradient(self, i, x):
        return 2.0 * (self.C[i] @ x) + self.u[i]

    def values(self, x):
        return np.einsum("i,mij,j->m", x, self.C, x) + self.u @ x - self.e

    def jacobian(self, x):
        return 2.0 * np.einsum("mij,j->mi", self.C, x) + self.u

    def weighted_subgradient(self, x, weights):
        return 2.0 * np.einsum("m,mij,j->i", weights, self.C, x) + self.u.T @ weights


def qcqp_oracles(instance: QcqpInstance):
    """Objective oracle (with ``L``, ``mu`` from the spectrum of ``A + A^T``) and constraints."""
    A, b = instance.A, instance.b
    H = A + A.T
    eig = np.linalg.eigvalsh(H)
    L = float(eig[-1])
    mu = float(eig[0]) if eig[0] > 0 else None
    objective = ObjectiveOracle(
        value=lambda x: float(x @ A @ x + b @ x),
        subgradient=lambda x: H @ x + b,
        smoothness=L,
        strong_convexity=mu,
    )
    return objective, QcqpConstraints(instance.C, instance.u, instance.e)


def qcqp_problem(instance: QcqpInstance, f_star=None) -> ConstrainedProblem:
    objective, constraints = qcqp_oracles(instance)
    return ConstrainedProblem(
        objective=objective,
        constraints=constraints,
        domain=instance.box,
        dim=instance.n,
        x_star=instance.x_star,
        f_star=instance.f_star if f_star is None else f_star,
        name=f"qcqp-{instance.case}",
    )


def reference_solve(instance: QcqpInstance, tol=1e-12, maxiter=2000):
    """High-accuracy ``(x*, f*)`` for a QCQP via SQP (scipy SLSQP).

    Starts from the origin, which is strictly feasible because every
    ``e_i > 0``. Returns the solution, optimal value and the largest
    constraint violation at the solution.
    """
    from scipy.optimize import minimize

    objective, cons = qcqp_oracles(instance)
    res = minimize(
        objective.value,
        np.zeros(instance.n),
        jac=objective.subgradient,
        method="SLSQP",
        bounds=list(zip(instance.box.lower, instance.box.upper)),
        constraints=[{
            "type": "ineq",
            "fun": lambda x: -cons.values(x),
            "jac": lambda x: -cons.jacobian(x),
        }],
        options={"ftol": tol, "maxiter": maxiter},
    )
    if not res.success:
        raise RandFeasError(f"reference solve failed: {res.message}")
    x = res.x
    return x, float(objective.value(x)), float(max(np.max(cons.values(x)), 0.0))


# --------------------------------------------------------------------------
# Soft-margin SVM
# --------------------------------------------------------------------------


@dataclass
class SvmInstance:
    """Decision vector is packed as ``[w (d), b (1), xi (m)]``."""

    features: np.ndarray
    labels: np.ndarray
    C_reg: float

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise DimensionError("features must be (m, d) and labels (m,)")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ParameterError("labels must be -1 or +1")
        if not self.C_reg > 0:
            raise ParameterError("C_reg must be positive")

    @property
    def m(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def dim(self):
        return self.d + 1 + self.m

    def unpack(self, x):
        d = self.d
        return x[:d], float(x[d]), x[d + 1:]

    def pack(self, w, b, xi):
        return np.concatenate([np.asarray(w, float), [float(b)], np.asarray(xi, float)])


class SvmConstraints(ConstraintFamily):
    """``g_i(w, b, xi) = 1 - xi_i - y_i (w^T z_i + b)``."""

    def __init__(self, features, labels):
        self.Z = features
        self.y = labels
        self.count, self.d = features.shape
        self.dim = self.d + 1 + self.count
        self._yz = labels[:, None] * features

    def evaluate(self, i, x):
        d = self.d
        return float(1.0 - x[d + 1 + i] - self.y[i] * (self.Z[i] @ x[:d] + x[d]))

    def subgradient(self, i, x):
        d = self.d
        out = np.zeros(self.dim)
        out[:d] = -self._yz[i]
        out[d] = -self.y[i]
        out[d + 1 + i] = -1.0
        return out

    def values(self, x):
        d = self.d
        return 1.0 - x[d + 1:] - self.y * (self.Z @ x[:d] + x[d])

    def weighted_subgradient(self, x, weights):
        d = self.d
        out = np.empty(self.dim)
        out[:d] = -(self._yz.T @ weights)
        out[d] = -(self.y @ weights)
        out[d + 1:] = -weights
        return out


def build_svm(features, labels, C_reg=1e-6) -> ConstrainedProblem:
    """Soft-margin SVM ``1/2 ||w||^2 + C_reg sum xi`` with one constraint per sample.

    The easy set leaves ``(w, b)`` free and keeps ``xi >= 0``.
    """
    inst = SvmInstance(features, labels, C_reg)
    d, m = inst.d, inst.m
    slack_grad = np.full(m, inst.C_reg)

    def value(x):
        w = x[:d]
        return float(0.5 * (w @ w) + inst.C_reg * np.sum(x[d + 1:]))

    def subgradient(x):
        out = np.empty_like(x)
        out[:d] = x[:d]
        out[d] = 0.0
        out[d + 1:] = slack_grad
        return out

    domain = Product([(0, d + 1, WholeSpace()), (d + 1, d + 1 + m, NonnegativeSlice(0, m))])
    return ConstrainedProblem(
        objective=ObjectiveOracle(value, subgradient),
        constraints=SvmConstraints(inst.features, inst.labels),
        domain=domain,
        dim=inst.dim,
        name="svm",
        meta={"instance": inst},
    )


def misclassification_error(w, b, features, labels):
    """Fraction of rows with ``sign(w^T z + b) != y``; a zero score predicts +1."""
    Z = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if Z.shape[0] == 0:
        raise ParameterError("empty evaluation set")
    w = np.asarray(w, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != w.shape[0] or y.shape != (Z.shape[0],):
        raise DimensionError("feature, weight and label shapes disagree")
    pred = np.where(Z @ w + b >= 0.0, 1.0, -1.0)
    return float(np.mean(pred != y))


def infeasibility(constraints: ConstraintFamily, x) -> float:
    """``sum_i max(g_i(x), 0)``."""
    if constraints.count == 0:
        return 0.0
    return float(np.sum(np.maximum(constraints.values(np.asarray(x, dtype=np.float64)), 0.0)))


# --------------------------------------------------------------------------
# Datasets
# --------------------------------------------------------------------------


@dataclass
class DatasetSplit:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    train_index: np.ndarray
    test_index: np.ndarray
    feature_names: list = field(default_factory=list)
    scaler: object = None


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _label_matches(cell, positive_label):
    if cell == str(positive_label).strip():
        return True
    if _is_float(cell) and isinstance(positive_label, (int, float)) and not isinstance(positive_label, bool):
        return float(cell) == float(positive_label)
    return False


def split_dataset(X, y, train_fraction=0.8, seed=0, standardize=True, feature_names=None):
    """Seeded shuffle split; optional standardization fitted on the train part."""
    from sklearn.preprocessing import StandardScaler

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if not 0.0 < train_fraction <= 1.0:
        raise ParameterError("train_fraction must lie in (0, 1]")
    perm = RandomSource(seed, stream_id(0, Purpose.SPLIT)).generator.permutation(n)
    n_train = int(round(train_fraction * n))
    tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    X_train, X_test = X[tr], X[te]
    scaler = None
    if standardize and n_train > 0:
        scaler = StandardScaler().fit(X_train)
        X_train = scaler.transform(X_train)
        X_test = scaler.transform(X_test) if len(te) else X_test
    return DatasetSplit(X_train, y[tr], X_test, y[te], tr, te, list(feature_names or []), scaler)


def load_dataset_csv(
    path,
    label_column,
    positive_label,
    train_fraction=0.8,
    seed=0,
    standardize=True,
    header=None,
):
    """Read a numeric CSV into a labelled, split and standardized dataset.

    ``label_column`` is a column name (requires a header row) or a 0-based
    index. Rows whose label equals ``positive_label`` map to +1, all others
    to -1. ``header=None`` auto-detects a header: the first row is treated as
    one when any of its feature cells is not a number.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [(lineno, row) for lineno, row in enumerate(csv.reader(fh), start=1) if row]
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DatasetError("file is empty")

    first = [c.strip() for c in rows[0][1]]
    if isinstance(label_column, str):
        if header is False:
            raise DatasetError("a named label column needs a header row")
        if label_column not in first:
            raise DatasetError(f"label column {label_column!r} not found in header")
        header = True
        label_idx = first.index(label_column)
    else:
        label_idx = int(label_column)
        if label_idx < 0:
            label_idx += len(first)
        if not 0 <= label_idx < len(first):
            raise DatasetError(f"label column index {label_column} out of range")
        if header is None:
            header = any(not _is_float(c) for j, c in enumerate(first) if j != label_idx)

    names = first if header else [f"x{j}" for j in range(len(first))]
    data_rows = rows[1:] if header else rows
    width = len(first)
    feats, labels = [], []
    for lineno, row in data_rows:
        if len(row) != width:
            raise DatasetError(f"expected {width} fields, found {len(row)}", line=lineno)
        cells = [c.strip() for c in row]
        try:
            feats.append([float(c) for j, c in enumerate(cells) if j != label_idx])
        except ValueError:
            raise DatasetError("non-numeric feature value", line=lineno) from None
        labels.append(1.0 if _label_matches(cells[label_idx], positive_label) else -1.0)
    if not feats:
        raise DatasetError("file has no data rows")
    X = np.array(feats)
    if not np.all(np.isfinite(X)):
        raise DatasetError("non-finite feature values")
    feature_names = [nm for j, nm in enumerate(names) if j != label_idx]
    return split_dataset(X, np.array(labels), train_fraction, seed, standardize, feature_names)


def make_separable_2d(n, margin, rng: RandomSource, half_width=3.0):
    """Points in a square, labelled by a random line through the origin.

    Every point keeps Euclidean distance at least ``margin`` from the line.
    """
    if n < 1 or margin < 0 or margin >= half_width:
        raise ParameterError("need n >= 1 and 0 <= margin < half_width")
    angle = rng.generator.uniform(0.0, 2.0 * math.pi)
    normal = np.array([math.cos(angle), math.sin(angle)])
    points = []
    while len(points) < n:
        batch = rng.generator.uniform(-half_width, half_width, size=(2 * n, 2))
        keep = batch[np.abs(batch @ normal) >= margin]
        points.extend(keep[: n - len(points)])
    Z = np.array(points)
    y = np.where(Z @ normal >= 0.0, 1.0, -1.0)
    return Z, y, normal
