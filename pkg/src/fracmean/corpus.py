"""Seeded test-function generators.

A corpus entry is a name with optional arguments, written ``"power(0.5)"``
or as a mapping ``{"name": "random-step", "args": [8], "count": 5}``.
Every generator is deterministic given ``(space, seed)``.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ConfigError, ParameterError
from .rearrange import SampledFunction


def _center(space):
    return space.n // 2


def zero(space, rng):
    return [SampledFunction(space, np.zeros(space.n), "zero")]


def power(space, rng, s=0.5):
    """``d(x, x0)^(-s)`` around the middle point; the singular point takes
    the value at the nearest distinct point."""
    s = float(s)
    if s <= 0:
        raise ParameterError("power profile needs s > 0")
    d = space.dist_from(_center(space)).astype(float)
    d[d == 0] = d[d > 0].min() if (d > 0).any() else 1.0
    return [SampledFunction(space, d ** -s, f"power({s:g})")]


def ball_indicator(space, rng, r=None):
    """Indicator of the ball of radius ``r`` (default: a quarter of the diameter) at the middle point."""
    r = space.diam / 4 if r is None else float(r)
    if r <= 0:
        raise ParameterError("ball radius must be > 0")
    return [SampledFunction.indicator(space, space.ball(_center(space), r), f"ball-indicator({r:g})")]


def spike(space, rng, eps=1e-300):
    """One nonzero value ``eps`` at the middle point."""
    v = np.zeros(space.n)
    v[_center(space)] = float(eps)
    return [SampledFunction(space, v, f"spike({float(eps):g})")]


def random_step(space, rng, pieces=6):
    """Piecewise-constant function on the Voronoi cells of random centers,
    with standard normal values."""
    pieces = max(1, min(int(pieces), space.n))
    centers = np.sort(rng.choice(space.n, pieces, replace=False))
    D = np.stack([space.dist_from(int(c)) for c in centers])
    cell = D.argmin(axis=0)
    values = rng.standard_normal(pieces)
    return [SampledFunction(space, values[cell], f"random-step({pieces})")]


def random_sparse(space, rng, density=0.1):
    """Independent complex normal values on a random ``density`` fraction of points."""
    keep = rng.random(space.n) < float(density)
    vals = (rng.standard_normal(space.n) + 1j * rng.standard_normal(space.n)) * keep
    return [SampledFunction(space, vals, f"random-sparse({float(density):g})")]


def cube_indicator(space, rng, level=1):
    """Indicator of a random cube of a dyadic system, ``level`` generations above the finest."""
    from .dyadic import build_sawyer_wheeden

    system = build_sawyer_wheeden(space, 0)
    gens = system.generations
    k = gens[min(int(level), len(gens) - 1)]
    j = int(rng.integers(system.n_k(k)))
    return [SampledFunction.indicator(space, system.members(k, j), f"cube-indicator({level})")]


GENERATORS = {
    "zero": zero,
    "power": power,
    "ball-indicator": ball_indicator,
    "spike": spike,
    "random-step": random_step,
    "random-sparse": random_sparse,
    "cube-indicator": cube_indicator,
}

_CALL = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*(?:\((.*)\))?\s*$")


def parse_entry(entry):
    """``(name, args, count)`` from a string or mapping corpus entry."""
    if isinstance(entry, str):
        m = _CALL.match(entry)
        if not m:
            raise ConfigError(f"cannot parse corpus entry {entry!r}")
        name, raw = m.group(1), m.group(2)
        args = [float(a) for a in raw.split(",") if a.strip()] if raw else []
        return name, args, 1
    if isinstance(entry, dict):
        if "name" not in entry:
            raise ConfigError(f"corpus entry needs a name: {entry!r}")
        return entry["name"], list(entry.get("args", [])), int(entry.get("count", 1))
    raise ConfigError(f"corpus entry must be a string or mapping, got {entry!r}")


def generate_corpus(name, seed, space, args=(), count=1):
    """Functions from one generator; repeated draws get ``#i`` suffixes."""
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ConfigError(f"unknown corpus generator {name!r}; known: {sorted(GENERATORS)}") from None
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        for f in gen(space, rng, *args):
            if count > 1:
                f.name = f"{f.name}#{i}"
            out.append(f)
    return out


def build_corpus(entries, space, seed=0):
    """All functions of a corpus spec; entry ``i`` draws from seed ``(seed, i)``."""
    out = []
    for i, entry in enumerate(entries or []):
        name, args, count = parse_entry(entry)
        out.extend(generate_corpus(name, [int(seed), i], space, args, count))
    return out
