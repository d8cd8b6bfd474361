"""Experiment configuration: a flat, typed INI file with a schema version.

    [experiment]
    schema_version = 1
    kind = fe-survey
    master_seed = 0
    workers = 4
    out = results/fe

    [params]
    widths = 4, 6, 8
    J = -1.2

The digest covers the schema version, kind, master seed and parameters, but
not the worker count or output path, so it is identical for any scheduling.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import dataclass, field

SCHEMA_VERSION = 1
WORKERS_ENV = "RBISING_WORKERS"


class ConfigError(ValueError):
    pass


def _items(s):
    return list(s) if isinstance(s, (list, tuple)) else str(s).replace(",", " ").split()


def _ints(s):
    return [int(x) for x in _items(s)]


def _floats(s):
    return [float(x) for x in _items(s)]


def _strs(s):
    return [str(x) for x in _items(s)]


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s):
    if s is None or str(s).strip().lower() in ("", "none"):
        return None
    return float(s)


PARSERS = {"int": int, "float": float, "str": str, "bool": _bool, "ints": _ints, "floats": _floats, "strs": _strs, "opt_float": _opt_float}


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: dict
    master_seed: int = 0
    workers: int = field(default_factory=default_workers)
    out: str = "results"
    schema_version: int = SCHEMA_VERSION

    def digest(self) -> str:
        payload = {"schema_version": self.schema_version, "kind": self.kind, "master_seed": self.master_seed, "params": self.params}
        return hashlib.blake2b(json.dumps(payload, sort_keys=True).encode(), digest_size=8).hexdigest()

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["experiment"] = {
            "schema_version": str(self.schema_version),
            "kind": self.kind,
            "master_seed": str(self.master_seed),
            "workers": str(self.workers),
            "out": self.out,
        }
        cp["params"] = {k: _format(v) for k, v in sorted(self.params.items())}
        lines = []
        for sec in cp.sections():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {v}" for k, v in cp[sec].items())
            lines.append("")
        return "\n".join(lines)


def _format(v):
    if isinstance(v, (list, tuple)):
        return ", ".join(str(x) for x in v)
    return "none" if v is None else str(v)


def normalize_params(schema: dict, raw: dict, kind: str) -> dict:
    """Typed parameters from raw strings/values; defaults fill the gaps."""
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown parameters for {kind}: {sorted(unknown)}")
    out = {}
    for name, (typ, default) in schema.items():
        val = raw.get(name, default)
        try:
            out[name] = PARSERS[typ](val) if val is not None or typ == "opt_float" else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"parameter {name}: cannot read {val!r} as {typ}") from exc
    return out


def make_config(kind: str, params: dict, master_seed: int = 0, workers=None, out=None) -> ExperimentConfig:
    from .kinds import KINDS

    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    entry = KINDS[kind]
    typed = normalize_params(entry.schema, params, kind)
    entry.validate(typed)
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    return ExperimentConfig(kind, typed, int(master_seed) & ((1 << 64) - 1), workers, out or f"results/{kind}")


def load_config(path) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        if not cp.read(path):
            raise ConfigError(f"cannot read config {path}")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if "experiment" not in cp:
        raise ConfigError("config lacks an [experiment] section")
    exp = cp["experiment"]
    try:
        version = int(exp.get("schema_version", "0"))
    except ValueError as exc:
        raise ConfigError("schema_version must be an integer") from exc
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")
    if "kind" not in exp:
        raise ConfigError("config lacks kind")
    params = dict(cp["params"]) if "params" in cp else {}
    try:
        seed = int(exp.get("master_seed", "0"))
        workers = int(exp["workers"]) if "workers" in exp else None
    except ValueError as exc:
        raise ConfigError("master_seed and workers must be integers") from exc
    return make_config(exp["kind"], params, seed, workers, exp.get("out"))
