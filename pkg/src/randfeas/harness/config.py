"""Experiment configuration: YAML on disk, validated against a JSON schema."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import yaml

from ..exceptions import ConfigError, ParameterError
from ..schedules import PowerGrowth, SampleSizeSchedule, schedule_from_dict

__all__ = [
    "ExperimentConfig",
    "OUTPUT_DIR_ENV",
    "config_schema",
    "config_from_dict",
    "load_config",
    "resolve_output_dir",
]

OUTPUT_DIR_ENV = "RANDFEAS_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "randfeas-out"

GRAD_METHODS = ("grad-adaptive", "grad-diminishing")
DOWS_METHODS = ("dows", "tdows")
PD_METHODS = ("arrow-hurwicz", "alt-gda")


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-2`` style floats (YAML 1.1 wants a dot)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def config_schema() -> dict:
    text = resources.files(__package__).joinpath("config_schema.json").read_text("utf-8")
    return json.loads(text)


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    ``problem`` and ``solver`` stay as validated mappings; ``schedule`` is
    already parsed. Relative paths inside the config are resolved against
    ``base_dir`` (the directory of the config file).
    """

    problem: dict
    solver: dict
    T: int
    schedule: SampleSizeSchedule = PowerGrowth(2.0)
    seed: int = 0
    replicas: int = 1
    log_every: Optional[int] = None
    output_dir: Optional[str] = None
    workers: int = 1
    per_replica_csv: bool = False
    identical_replicas: bool = False
    name: str = "experiment"
    base_dir: Path = field(default_factory=Path.cwd)
    raw: dict = field(default_factory=dict)

    @property
    def method(self):
        return self.solver["method"]

    def resolve_path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p


def _first_error(validator, data):
    errors = list(validator.iter_errors(data))
    if not errors:
        return None
    # prefer the deepest error: it names the offending key most precisely
    return max(errors, key=lambda e: (len(e.absolute_path), -len(e.context or ())))


def config_from_dict(data, base_dir=None) -> ExperimentConfig:
    """Validate a mapping and build an :class:`ExperimentConfig`.

    Raises :class:`ConfigError` whose ``path`` points at the offending key.
    """
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    validator = jsonschema.Draft202012Validator(config_schema())
    err = _first_error(validator, data)
    if err is not None:
        raise ConfigError(err.message, path=err.absolute_path)

    schedule = PowerGrowth(2.0)
    if "schedule" in data:
        try:
            schedule = schedule_from_dict(data["schedule"])
        except ParameterError as exc:
            raise ConfigError(str(exc), path=("schedule",)) from None

    problem, solver = data["problem"], data["solver"]
    method = solver["method"]
    if method in GRAD_METHODS and not ("L" in solver and "mu" in solver):
        if problem["type"] == "svm" or problem.get("case") == "convex":
            raise ConfigError(
                f"{method} needs a strongly convex objective; set solver L and mu explicitly",
                path=("solver", "method"),
            )
    if "L" in solver and "mu" in solver and solver["mu"] > solver["L"]:
        raise ConfigError("mu cannot exceed L", path=("solver", "mu"))

    return ExperimentConfig(
        problem=problem,
        solver=solver,
        T=data["T"],
        schedule=schedule,
        seed=data.get("seed", 0),
        replicas=data.get("replicas", 1),
        log_every=data.get("log_every"),
        output_dir=data.get("output_dir"),
        workers=data.get("workers", 1),
        per_replica_csv=data.get("per_replica_csv", False),
        identical_replicas=data.get("identical_replicas", False),
        name=data.get("name", "experiment"),
        base_dir=Path(base_dir) if base_dir is not None else Path.cwd(),
        raw=data,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"malformed YAML{where}") from None
    if data is None:
        raise ConfigError("config file is empty")
    stem = path.stem
    cfg = config_from_dict(data, base_dir=path.resolve().parent)
    if "name" not in data:
        cfg.name = stem
    return cfg


def resolve_output_dir(cfg: Optional[ExperimentConfig] = None, override=None) -> Path:
    """Command line beats config, config beats ``$RANDFEAS_OUTPUT_DIR``."""
    if override is not None:
        return Path(override)
    if cfg is not None and cfg.output_dir is not None:
        return cfg.resolve_path(cfg.output_dir)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    return Path(DEFAULT_OUTPUT_DIR)
