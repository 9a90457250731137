"""Experiment configuration: TOML or JSON files validated against per-experiment schemas.

A config has three top-level keys and one section::

    experiment = "semicircle"
    seed = 1
    output_dir = "runs/semicircle"   # optional

    [parameters]
    n = 500
    replicas = 10

JSON files use the same structure.  Unknown keys are errors.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "ConfigParseError",
    "UnknownKeyError",
    "MissingKeyError",
    "RangeError",
    "Param",
    "ExperimentConfig",
    "parse_config",
    "load_config",
]

_TOP_KEYS = {"experiment", "seed", "output_dir", "parameters"}


class ConfigError(ValueError):
    """Any problem with a configuration file; the CLI maps it to exit code 2."""


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where if "line" not in message else message)
        self.line = line
        self.column = column


class UnknownKeyError(ConfigError):
    def __init__(self, key: str, allowed):
        super().__init__(f"unknown key {key!r}; allowed: {', '.join(sorted(allowed))}")
        self.key = key


class MissingKeyError(ConfigError):
    def __init__(self, key: str):
        super().__init__(f"missing required key {key!r}")
        self.key = key


class RangeError(ConfigError):
    def __init__(self, key: str, value, rule: str):
        super().__init__(f"{key} = {value!r} is out of range: {rule}")
        self.key = key
        self.value = value


_REQUIRED = object()


@dataclass(frozen=True)
class Param:
    """One experiment parameter: default, accepted type and optional range rule."""

    default: Any = _REQUIRED
    kind: Any = int
    check: Callable[[Any], bool] | None = None
    rule: str = ""

    @property
    def required(self) -> bool:
        return self.default is _REQUIRED


def _type_ok(value, kind) -> bool:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if isinstance(value, bool):
        return bool in kinds
    if isinstance(value, int) and float in kinds:
        return True
    return isinstance(value, kinds)


def _type_name(kind) -> str:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    return " or ".join(k.__name__ for k in kinds)


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    parameters: dict = field(default_factory=dict)
    output_dir: Path | None = None
    source: Path | None = None

    def canonical(self) -> dict:
        """The fields that determine results (output location excluded)."""
        return {"experiment": self.experiment, "seed": self.seed, "parameters": self.parameters}

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, seed: int | None = None, output_dir: str | Path | None = None) -> "ExperimentConfig":
        return ExperimentConfig(
            self.experiment,
            _check_seed(seed) if seed is not None else self.seed,
            dict(self.parameters),
            Path(output_dir) if output_dir is not None else self.output_dir,
            self.source,
        )


def _check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < 2 ** 64:
        raise RangeError("seed", seed, "must fit in 64 unsigned bits")
    return seed


def parse_config(raw: dict, schemas: dict[str, dict[str, Param]] | None = None) -> ExperimentConfig:
    """Validate an already-parsed mapping."""
    if schemas is None:
        from .experiments import SCHEMAS as schemas
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")
    for key in raw:
        if key not in _TOP_KEYS:
            raise UnknownKeyError(key, _TOP_KEYS)
    for key in ("experiment", "seed"):
        if key not in raw:
            raise MissingKeyError(key)
    name = raw["experiment"]
    if name not in schemas:
        raise ConfigError(f"unknown experiment {name!r}; choose one of {', '.join(sorted(schemas))}")
    seed = _check_seed(raw["seed"])
    given = raw.get("parameters", {})
    if not isinstance(given, dict):
        raise ConfigError("[parameters] must be a table")
    schema = schemas[name]
    params = {}
    for key in given:
        if key not in schema:
            raise UnknownKeyError(f"parameters.{key}", schema)
    for key, spec in schema.items():
        if key not in given:
            if spec.required:
                raise MissingKeyError(f"parameters.{key}")
            params[key] = spec.default
            continue
        value = given[key]
        if not _type_ok(value, spec.kind):
            raise ConfigError(f"parameters.{key} must be {_type_name(spec.kind)}, got {value!r}")
        if spec.check is not None:
            try:
                ok = spec.check(value)
            except (TypeError, ValueError, IndexError, KeyError):
                ok = False
            if not ok:
                raise RangeError(f"parameters.{key}", value, spec.rule)
        params[key] = value
    out_dir = raw.get("output_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("output_dir must be a string")
    return ExperimentConfig(name, seed, params, Path(out_dir) if out_dir else None)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a ``.toml`` or ``.json`` config file and validate it."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"{path}: {exc.msg}", exc.lineno, exc.colno) from exc
    else:
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigParseError(f"{path}: {exc}", getattr(exc, "lineno", None),
                                   getattr(exc, "colno", None)) from exc
    cfg = parse_config(raw)
    cfg.source = path
    return cfg
