"""Amalgam norms at a fixed scale, their dyadic and Euclidean counterparts, and
the fractional mean norm (supremum over scales).

With ``1 <= q <= alpha <= p <= inf`` and ``1/inf = 0``, the scale-``r`` norm is

    r||f||_(q,p,alpha) = ( sum_y w_y [mu(B_y)^(1/alpha - 1/p - 1/q) ||f chi_(B_y)||_q]^p )^(1/p)

with ``B_y = B(y, r)``, and ``max_y mu(B_y)^(1/alpha - 1/q) ||f chi_(B_y)||_q`` when
``p = inf``.  Every evaluation works on ``|f| / max|f|`` and rescales at
the end, so tiny functions do not underflow to a false zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UnsupportedModelError
from .exponents import INF, as_exponent, fmt, recip
from .space import radius_grid


@dataclass(frozen=True)
class NormParams:
    """Exponent triple with ``1 <= q <= alpha <= p <= inf``."""

    q: float
    alpha: float
    p: float

    def __post_init__(self):
        q = as_exponent(self.q, "q")
        a = as_exponent(self.alpha, "alpha")
        p = as_exponent(self.p, "p")
        if not q <= a <= p:
            raise ParameterError(f"need q <= alpha <= p, got ({q}, {a}, {p})")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "p", p)

    @classmethod
    def of(cls, triple):
        if isinstance(triple, NormParams):
            return triple
        return cls(*triple)

    def replace(self, **kw):
        d = {"q": self.q, "alpha": self.alpha, "p": self.p}
        d.update(kw)
        return NormParams(**d)

    @property
    def label(self):
        return f"({fmt(self.q)},{fmt(self.alpha)},{fmt(self.p)})"


@dataclass(frozen=True)
class NormValue:
    """A computed norm with the scale(s) it used.

    ``boundary_flag`` is set when a radius exceeds the space's boundary
    window; ``degenerate`` when every ball is a single point.  For a
    supremum over a grid, ``scale`` is the maximising radius and
    ``lower_bound`` is True (a finite grid only bounds the supremum below).
    """

    value: float
    scale: object
    boundary_flag: bool = False
    degenerate: bool = False
    lower_bound: bool = False

    def __float__(self):
        return float(self.value)


def _local_norms(space, u, q, r):
    """``||u chi_(B(y, r))||_q`` for every center ``y``."""
    if q == INF:
        return space.ball_max(u, r)
    return space.ball_sums(u ** q * space.weights, r) ** (1.0 / q)


def _flags(space, r):
    return r > space.boundary_window(), r <= space.min_spacing


def amalgam_terms(f, params, r):
    """Per-center terms ``mu(B_y)^(1/alpha - 1/q) ||f chi_(B_y)||_q`` (unscaled by ``max|f|``)."""
    space = f.space
    u = f.modulus / f.peak
    local = _local_norms(space, u, params.q, r)
    mu = space.ball_measures(r)
    return mu, mu ** (recip(params.alpha) - recip(params.q)) * local


def amalgam_norm_r(f, params, r):
    """Scale-``r`` amalgam norm ``r||f||_(q,p,alpha)``."""
    params = NormParams.of(params)
    if not r > 0:
        raise ParameterError(f"radius must be > 0, got {r}")
    boundary, degenerate = _flags(f.space, r)
    if f.is_zero():
        return NormValue(0.0, float(r), boundary, degenerate)
    mu, terms = amalgam_terms(f, params, r)
    if params.p == INF:
        value = float(terms.max())
    else:
        p = params.p
        scaled = mu ** (-1.0 / p) * terms
        value = math.fsum(f.space.weights * scaled ** p) ** (1.0 / p)
    return NormValue(value * f.peak, float(r), boundary, degenerate)


def cube_terms(f, params, system, k):
    """Per-cube ``mu(E_j)^(1/alpha - 1/q) ||f chi_(E_j)||_q`` (unscaled by ``max|f|``)."""
    lab = system.labels[k]
    n_cubes = system.n_k(k)
    u = f.modulus / f.peak
    mu = system.cube_measures(k)
    if params.q == INF:
        local = np.zeros(n_cubes)
        np.maximum.at(local, lab, u)
    else:
        local = np.bincount(lab, weights=u ** params.q * f.space.weights,
                            minlength=n_cubes) ** (1.0 / params.q)
    return mu ** (recip(params.alpha) - recip(params.q)) * local


def _lp_combine(values, p):
    if values.size == 0:
        return 0.0
    if p == INF:
        return float(values.max())
    top = float(values.max())
    if top == 0.0:
        return 0.0
    return top * math.fsum((values / top) ** p) ** (1.0 / p)


def dyadic_norm(f, params, system, k):
    """``||f||^(d_k)_(q,p,alpha)``: ``l^p`` combination of per-cube terms at generation ``k``."""
    params = NormParams.of(params)
    system._check_generation(k)
    if f.is_zero():
        return NormValue(0.0, k)
    return NormValue(_lp_combine(cube_terms(f, params, system, k), params.p) * f.peak, k)


def default_r_grid(space, per_decade=32):
    """Log grid from the minimum spacing up to the boundary window."""
    top = space.boundary_window()
    lo = min(space.min_spacing, top)
    return radius_grid(lo, top, per_decade)


def fractional_mean_norm(f, params, r_grid=None):
    """Maximum of :func:`amalgam_norm_r` over ``r_grid`` (a lower bound for the sup over ``r > 0``)."""
    params = NormParams.of(params)
    grid = default_r_grid(f.space) if r_grid is None else np.asarray(r_grid, dtype=float)
    if grid.size == 0:
        raise ParameterError("empty radius grid")
    best, best_r, flag = -1.0, None, False
    for r in grid:
        v = amalgam_norm_r(f, params, float(r))
        flag = flag or v.boundary_flag
        if v.value > best:
            best, best_r = v.value, float(r)
    return NormValue(best, best_r, flag, False, lower_bound=True)


def norm_profile(f, params, r_grid):
    """``[(r, r||f||_(q,p,alpha))]`` over a grid, for plot data."""
    params = NormParams.of(params)
    return [(float(r), amalgam_norm_r(f, params, float(r)).value) for r in r_grid]


# -- Euclidean cube-partition norms -----------------------------------------


def _cells(space, r):
    if space.grid is None or space.coords is None:
        raise UnsupportedModelError(f"{space!r} has no lattice layout for cube partitions")
    coords = space.coords
    cell = np.floor(coords / r)
    # guard against x/r rounding just below an integer
    cell = np.where((cell + 1) * r <= coords, cell + 1, cell)
    cell = np.where(cell * r > coords, cell - 1, cell)
    _, inverse = np.unique(cell, axis=0, return_inverse=True)
    return inverse.ravel(), int(inverse.max()) + 1


def _block_norms(f, q, r):
    cells, count = _cells(f.space, r)
    u = f.modulus / f.peak
    if q == INF:
        out = np.zeros(count)
        np.maximum.at(out, cells, u)
        return out
    return np.bincount(cells, weights=u ** q * f.space.weights, minlength=count) ** (1.0 / q)


def wiener_norm(f, q, p, r):
    """``r||f||_(q,p)``: ``l^p`` combination of ``L^q`` norms over the cubes ``[k r, (k+1) r)^n``."""
    q, p = as_exponent(q, "q"), as_exponent(p, "p")
    if not r > 0:
        raise ParameterError("radius must be > 0")
    if f.is_zero():
        _cells(f.space, r)
        return NormValue(0.0, float(r))
    return NormValue(_lp_combine(_block_norms(f, q, r), p) * f.peak, float(r))


def euclidean_amalgam_norm(f, params, r):
    """``r^(n(1/alpha - 1/q)) r||f||_(q,p)`` on a lattice model of dimension ``n``."""
    params = NormParams.of(params)
    w = wiener_norm(f, params.q, params.p, r)
    n = f.space.grid["dim"]
    factor = r ** (n * (recip(params.alpha) - recip(params.q)))
    return NormValue(w.value * factor, float(r), r > f.space.boundary_window())


# -- norm-equivalence constants ---------------------------------------------


@dataclass(frozen=True)
class SandwichConstants:
    """Constants relating the scale-``r`` norm and the dyadic norm at ``k = m_r``.

    ``dyadic <= lower * amalgam`` and ``amalgam <= upper * dyadic``.  The
    ``*_alt`` fields hold the alternative readings reported alongside.
    """

    lower: float
    upper: float
    lower_alt: float
    upper_alt: float
    lower_formula: str
    upper_formula: str


def sandwich_constants(params, card, geo, kappa):
    """Explicit equivalence constants built from the uniform cardinality bounds.

    ``p = inf``:  lower ``N1*``; upper ``[C_mu (2 kappa)^D]^(1/alpha - 1/q) N2*``
    (alternative: exponent ``1/q - 1/alpha``, the sign that the ball/cube
    measure comparison actually produces).

    ``p < inf``: lower ``N1*^((1/p)(1/q - 1/alpha + 1))`` (alternative
    ``N1*^(1/q - 1/alpha + 1/p)``); upper ``(K N3*)^(1/p)`` with
    ``K = N2*^(p/q - 1) [C_mu (2 kappa)^D]^(p/q - p/alpha + 1) N2*``.
    """
    q, a, p = params.q, params.alpha, params.p
    cm = geo.c_mu * (2 * kappa) ** geo.d_mu
    n1, n2, n3 = card.n1_star, card.n2_star, card.n3_star
    iq, ia = recip(q), recip(a)
    if p == INF:
        return SandwichConstants(
            lower=n1, upper=cm ** (ia - iq) * n2,
            lower_alt=n1, upper_alt=cm ** (iq - ia) * n2,
            lower_formula="N1*", upper_formula="[C(2k)^D]^(1/a-1/q) N2*",
        )
    ip = 1.0 / p
    pq = p * iq  # q <= p < inf, so p/q >= 1
    K = n2 ** (pq - 1) * cm ** (pq - p * ia + 1) * n2
    return SandwichConstants(
        lower=n1 ** (ip * (iq - ia + 1)), upper=(K * n3) ** ip,
        lower_alt=n1 ** (iq - ia + ip), upper_alt=(K * n3) ** ip,
        lower_formula="N1*^((1/p)(1/q-1/a+1))",
        upper_formula="(N2*^(p/q-1) [C(2k)^D]^(p/q-p/a+1) N2* N3*)^(1/p)",
    )
