"""Run configuration: one JSON file naming spaces, corpus, exponents and claims.

Every reference is validated up front so a bad config fails with
:class:`~fracmean.errors.ConfigError` before any computation starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .amalgam import NormParams
from .corpus import GENERATORS as CORPUS_GENERATORS
from .corpus import parse_entry
from .errors import ConfigError, FracmeanError
from .models import GENERATORS as SPACE_GENERATORS
from .models import generate_space


@dataclass(frozen=True)
class SpaceSpec:
    """A builtin generator with arguments, or a space file."""

    name: str = None
    params: object = None
    path: str = None

    @classmethod
    def parse(cls, raw, base=None):
        if isinstance(raw, str):
            raw = {"name": raw}
        if not isinstance(raw, dict):
            raise ConfigError(f"space entry must be a mapping or a name, got {raw!r}")
        if "file" in raw:
            path = Path(raw["file"])
            if base is not None and not path.is_absolute():
                path = Path(base) / path
            return cls(path=str(path))
        name = raw.get("name")
        if name not in SPACE_GENERATORS:
            raise ConfigError(f"unknown space generator {name!r}; known: {sorted(SPACE_GENERATORS)}")
        params = raw.get("params")
        if isinstance(params, list):
            params = tuple(params)
        return cls(name=name, params=params)

    def build(self):
        if self.path is not None:
            from .io import load_space

            return load_space(self.path)
        try:
            return generate_space(self.name, self.params)
        except TypeError as exc:
            raise ConfigError(f"bad parameters for {self.name}: {exc}") from None

    def to_dict(self):
        if self.path is not None:
            return {"file": self.path}
        params = list(self.params) if isinstance(self.params, tuple) else self.params
        return {"name": self.name, "params": params}


@dataclass(frozen=True)
class WitnessConfig:
    space: SpaceSpec
    N: int = 4
    n0: int = 1
    rho: float = 0.8
    params: NormParams = NormParams(1, 2, 4)
    per_decade: int = 8

    @classmethod
    def parse(cls, raw, base=None):
        if not isinstance(raw, dict) or "space" not in raw:
            raise ConfigError("witness block needs a space")
        params = _params(raw.get("params", [1, 2, 4]))
        if not params.q < params.alpha < params.p:
            raise ConfigError("witness exponents need q < alpha < p")
        N, n0 = int(raw.get("N", 4)), int(raw.get("n0", 1))
        if not 1 <= n0 <= N:
            raise ConfigError("witness needs 1 <= n0 <= N")
        rho = float(raw.get("rho", 0.8))
        if not 0 < rho < 1:
            raise ConfigError("witness rho must lie in (0, 1)")
        return cls(SpaceSpec.parse(raw["space"], base), N, n0, rho, params,
                   int(raw.get("per_decade", 8)))


def _params(raw):
    try:
        return NormParams.of(tuple(raw))
    except (FracmeanError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad exponent triple {raw!r}: {exc}") from None


@dataclass
class RunConfig:
    spaces: list = field(default_factory=list)
    corpus: list = field(default_factory=list)
    params: list = field(default_factory=list)
    per_decade: int = 8
    suite: list = field(default_factory=lambda: ["*"])
    seed: int = 0
    out: str = "out"
    overrides: dict = field(default_factory=dict)
    s: float = 2.0
    geometry_checks: bool = True
    witness: WitnessConfig = None
    plot_params: list = field(default_factory=list)

    KEYS = {"spaces", "corpus", "params", "per_decade", "suite", "seed", "out", "overrides",
            "s", "geometry_checks", "witness", "plot_params"}

    @classmethod
    def from_dict(cls, raw, base=None):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(raw) - cls.KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        spaces = [SpaceSpec.parse(s, base) for s in raw.get("spaces", [])]
        corpus = list(raw.get("corpus", []))
        for entry in corpus:
            name = parse_entry(entry)[0]
            if name not in CORPUS_GENERATORS:
                raise ConfigError(f"unknown corpus generator {name!r}; known: {sorted(CORPUS_GENERATORS)}")
        params = [_params(t) for t in raw.get("params", [])]
        suite = raw.get("suite", ["*"])
        suite = [suite] if isinstance(suite, str) else list(suite)
        overrides = raw.get("overrides", {})
        if not isinstance(overrides, dict):
            raise ConfigError("overrides must map claim globs to factors")
        for k, v in overrides.items():
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"override factor for {k!r} must be a positive number")
        per_decade = int(raw.get("per_decade", 8))
        if per_decade < 1:
            raise ConfigError("per_decade must be >= 1")
        s = float(raw.get("s", 2.0))
        if not s > 1:
            raise ConfigError("geometric ratio s must exceed 1")
        witness = raw.get("witness")
        witness = None if witness is None else WitnessConfig.parse(witness, base)
        plot = [_params(t) for t in raw.get("plot_params", [])]
        return cls(spaces, corpus, params, per_decade, suite, int(raw.get("seed", 0)),
                   str(raw.get("out", "out")), dict(overrides), s,
                   bool(raw.get("geometry_checks", True)), witness, plot)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(raw, base=path.parent)

    @classmethod
    def of(cls, config):
        if isinstance(config, cls):
            return config
        if isinstance(config, dict):
            return cls.from_dict(config)
        return cls.load(config)

    def replace(self, **kw):
        d = dict(vars(self))
        d.update(kw)
        return RunConfig(**d)


def default_config_path():
    return Path(__file__).with_name("data") / "default.json"
