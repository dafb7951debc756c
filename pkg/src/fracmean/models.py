"""Built-in model spaces."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ParameterError
from .space import PointSpace


def grid1d(n, h=1.0):
    """``n`` equally spaced points ``0, h, ..., (n-1)h`` with weight ``h`` each."""
    n, h = _count(n), float(h)
    x = np.arange(n) * h
    edge = np.minimum(x - x[0], x[-1] - x) + h
    return PointSpace.from_line(
        x, np.full(n, h), kappa=1.0, margin=edge, name=f"grid1d({n},{h:g})",
        grid={"dim": 1, "spacing": h, "shape": (n,)},
    )


def sqline(n, h=1.0):
    """Points of :func:`grid1d` under the quasi-metric ``|x - y|^2`` (``kappa = 2``)."""
    n, h = _count(n), float(h)
    x = np.arange(n) * h
    edge = (np.minimum(x - x[0], x[-1] - x) + h) ** 2
    return PointSpace.from_line(
        x, np.full(n, h), kappa=2.0, power=2.0, margin=edge, name=f"sqline({n},{h:g})",
    )


def grid2d(n, h=1.0):
    """``n x n`` square lattice with spacing ``h``, weight ``h^2``, Euclidean distance."""
    n, h = _count(n), float(h)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    coords = np.column_stack([i.ravel(), j.ravel()]) * h
    top = (n - 1) * h
    edge = np.minimum(np.minimum(coords, top - coords).min(axis=1) + h, np.inf)
    return PointSpace.from_coords(
        coords, np.full(n * n, h * h), kappa=1.0, margin=edge,
        name=f"grid2d({n},{h:g})", grid={"dim": 2, "spacing": h, "shape": (n, n)},
    )


def tree(depth, branching=2):
    """Leaves of a complete ``branching``-ary tree of the given depth.

    ``d(x, y) = branching ** h`` where ``h`` is the height of the lowest common
    ancestor, an ultrametric (``kappa = 1``) with unit leaf weights.
    """
    depth, b = int(depth), int(branching)
    if depth < 0 or b < 2:
        raise ParameterError("tree needs depth >= 0 and branching >= 2")
    n = b ** depth
    leaves = np.arange(n)
    height = np.zeros((n, n), dtype=int)
    for h in range(1, depth + 1):
        differ = (leaves[:, None] // b ** (h - 1)) != (leaves[None, :] // b ** (h - 1))
        height[differ] = h
    D = np.where(height > 0, float(b) ** height, 0.0)
    diam = float(b) ** depth
    return PointSpace.from_matrix(D, np.ones(n), kappa=1.0, margin=np.full(n, diam),
                                  name=f"tree({depth},{b})")


def _count(n):
    if int(n) != n or n < 1:
        raise ParameterError(f"point count must be a positive integer, got {n}")
    return int(n)


GENERATORS = {"grid1d": grid1d, "grid2d": grid2d, "sqline": sqline, "tree": tree}


def generate_space(name, params=None):
    """Build a model space by generator name.

    ``params`` is a mapping of keyword arguments or a sequence of positional
    ones, e.g. ``generate_space("grid1d", [4, 1])``.
    """
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ConfigError(f"unknown space generator {name!r}; known: {sorted(GENERATORS)}") from None
    if params is None:
        return gen()
    if isinstance(params, dict):
        return gen(**params)
    return gen(*params)
