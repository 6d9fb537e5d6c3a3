"""Stored reference optima for QCQP instances whose optimum is not known by construction."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..exceptions import ConfigError, OutputError
from ..problems import QcqpInstance, reference_solve

__all__ = ["instance_fingerprint", "solve_reference", "write_reference", "load_reference"]


def instance_fingerprint(instance: QcqpInstance) -> str:
    """SHA-256 over the little-endian float64 bytes of ``A, b, C, u, e``."""
    h = hashlib.sha256()
    for arr in (instance.A, instance.b, instance.C, instance.u, instance.e):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return h.hexdigest()


def solve_reference(instance: QcqpInstance, meta=None) -> dict:
    x, f, viol = reference_solve(instance)
    record = {
        "method": "scipy-slsqp",
        "n": instance.n,
        "m": instance.m,
        "case": instance.case,
        "fingerprint": instance_fingerprint(instance),
        "f_star": f,
        "max_violation": viol,
        "x_star": [float(v) for v in x],
    }
    if meta:
        record.update(meta)
    return record


def write_reference(path, record: dict):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write reference {path}: {exc}") from None


def load_reference(path, instance: QcqpInstance = None) -> dict:
    """Read a reference record; when ``instance`` is given, check it matches."""
    try:
        with open(path, encoding="utf-8") as fh:
            record = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read reference {path}: {exc}", path=("problem", "reference")) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"reference {path} is not valid JSON: {exc}", path=("problem", "reference")) from None
    if "f_star" not in record:
        raise ConfigError(f"reference {path} has no f_star", path=("problem", "reference"))
    if instance is not None and record.get("fingerprint") != instance_fingerprint(instance):
        raise ConfigError(
            f"reference {path} was computed for a different instance "
            "(check n, m, case and seed)",
            path=("problem", "reference"),
        )
    return record
