"""Declarative TOML configuration for the batch CLI.

Every config carries ``schema_version = 1`` at top level.  Sections:

    [experiment]  id ("E1".."E6", "props", or "custom"), out, seed, threads
    [model]       name ("dirac" | "klein_gordon"), epsilon or epsilons
    [wall]        kind ("flat_y" | "circle" | "expr"), radius/expression, bounds
    [branch]      m, s
    [envelope]    kind ("gaussian" | "bump" | "gaussian_real"), parameters
    [packet]      x0
    [grid]        nx, ny, xlim, ylim
    [time]        t_end, dt, order, snapshots
    [params]      free-form per-experiment overrides

Only [experiment] (with id) is mandatory for ``experiment`` runs; the
stock experiments fill in their own defaults and read overrides from
[params].  Validation errors name the offending field.
"""

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .geometry import DomainWall
from .spectral import BranchSpec, Model, ModelSpec
from .wavepacket import Envelope, RealEnvelope

__all__ = ["ExperimentConfig", "load_config", "wall_from_config", "model_from_config"]

SCHEMA_VERSION = 1


@dataclass
class ExperimentConfig:
    experiment_id: str
    out_dir: str = "out"
    seed: int = 12345
    threads: int = 2
    raw: dict = field(default_factory=dict)

    def section(self, name):
        return self.raw.get(name, {})

    @property
    def params(self):
        return self.raw.get("params", {})


def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax: {exc}")
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"field 'schema_version': expected {SCHEMA_VERSION}, got {version!r}")
    exp = raw.get("experiment")
    if not isinstance(exp, dict) or "id" not in exp:
        raise ConfigError("field 'experiment.id': missing")
    known = {"E1", "E2", "E3", "E4", "E5", "E6", "props", "custom"}
    if exp["id"] not in known:
        raise ConfigError(f"field 'experiment.id': {exp['id']!r} not one of {sorted(known)}")
    cfg = ExperimentConfig(
        experiment_id=exp["id"],
        out_dir=str(exp.get("out", "out")),
        seed=int(exp.get("seed", 12345)),
        threads=int(exp.get("threads", 2)),
        raw=raw,
    )
    if cfg.seed < 0:
        raise ConfigError("field 'experiment.seed': must be nonnegative")
    return cfg


def wall_from_config(section):
    kind = section.get("kind")
    bounds = section.get("bounds")
    if kind == "flat_y":
        return DomainWall.flat_y(tuple(bounds) if bounds else (-2.0, 2.0, -2.0, 2.0))
    if kind == "circle":
        radius = float(section.get("radius", 1.0))
        return DomainWall.circle(radius, tuple(bounds) if bounds else None)
    if kind == "expr":
        expr = section.get("expression")
        if not expr:
            raise ConfigError("field 'wall.expression': missing for kind='expr'")
        try:
            return DomainWall.from_expression(
                expr, tuple(bounds) if bounds else (-2.0, 2.0, -2.0, 2.0)
            )
        except ValueError as exc:
            raise ConfigError(f"field 'wall.expression': {exc}")
    raise ConfigError(f"field 'wall.kind': {kind!r} not one of flat_y/circle/expr")


def model_from_config(section):
    name = section.get("name", "dirac")
    try:
        model = Model(name)
    except ValueError:
        raise ConfigError(f"field 'model.name': {name!r} not one of dirac/klein_gordon")
    eps = section.get("epsilon")
    if eps is None:
        raise ConfigError("field 'model.epsilon': missing")
    try:
        return ModelSpec(model, float(eps))
    except ValueError as exc:
        raise ConfigError(f"field 'model.epsilon': {exc}")


def branch_from_config(section):
    try:
        return BranchSpec(int(section.get("m", 0)), int(section.get("s", -1)))
    except Exception as exc:
        raise ConfigError(f"field 'branch': {exc}")


def envelope_from_config(section):
    kind = section.get("kind", "gaussian")
    if kind == "gaussian":
        return Envelope.gaussian(float(section.get("center", 0.0)), float(section.get("sigma", 1.0)))
    if kind == "bump":
        if "lo" not in section or "hi" not in section:
            raise ConfigError("field 'envelope.lo/hi': required for bump")
        return Envelope.bump(float(section["lo"]), float(section["hi"]))
    if kind == "gaussian_real":
        return RealEnvelope.gaussian(
            float(section.get("width", 1.0)), float(section.get("carrier", 0.0))
        )
    raise ConfigError(f"field 'envelope.kind': {kind!r} unknown")
