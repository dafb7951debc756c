"""Sampled functions, distribution functions, rearrangements and Lorentz norms.

On a finite model every quantity here is a finite step-function
computation.  Let ``v_1 > v_2 > ... > v_K > 0`` be the distinct nonzero
values of ``|f|`` and ``L_i = mu(|f| >= v_i)``.  Then ``f_*`` equals ``v_i``
on ``[L_(i-1), L_i)``, ``t f^*(t)`` is piecewise linear, and every Lorentz
integral splits into per-interval power integrals.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy.special import comb

from .errors import DomainError, ParameterError
from .exponents import INF, as_exponent

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


class SampledFunction:
    """Values of a (real or complex) function at every point of a space."""

    def __init__(self, space, values, name=None):
        values = np.asarray(values)
        if values.shape != (space.n,):
            raise ParameterError(f"expected {space.n} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("function values must be finite")
        if not np.iscomplexobj(values):
            values = values.astype(float)
        values = values.copy()
        values.setflags(write=False)
        self.space = space
        self.values = values
        self.name = name

    @classmethod
    def from_mapping(cls, space, mapping, name=None):
        """Build from ``{point id: value}``; every point must be present."""
        values = np.zeros(space.n, dtype=complex)
        seen = np.zeros(space.n, dtype=bool)
        for pid, val in mapping.items():
            i = space.index_of(pid)
            values[i] = val
            seen[i] = True
        if not seen.all():
            missing = [space.ids[i] for i in np.flatnonzero(~seen)[:5]]
            raise DomainError(f"function misses points, e.g. {missing}")
        if not np.any(values.imag):
            values = values.real
        return cls(space, values, name)

    @classmethod
    def indicator(cls, space, members, name=None):
        v = np.zeros(space.n)
        v[np.asarray(members, dtype=np.intp)] = 1.0
        return cls(space, v, name)

    def __repr__(self):
        return f"<SampledFunction {self.name or ''} on {self.space!r}>"

    @cached_property
    def modulus(self):
        m = np.abs(self.values)
        m.setflags(write=False)
        return m

    @cached_property
    def peak(self):
        return float(self.modulus.max()) if self.modulus.size else 0.0

    def is_zero(self):
        return self.peak == 0.0

    def scaled(self, c):
        return SampledFunction(self.space, c * self.values, self.name)

    def __add__(self, other):
        if other.space is not self.space:
            raise ParameterError("functions live on different spaces")
        return SampledFunction(self.space, self.values + other.values)

    @cached_property
    def rearrangement(self):
        return Rearrangement(self)


class Rearrangement:
    """Step-function tables for ``lambda_f``, ``f_*`` and ``f^*``.

    Values are stored divided by ``peak`` (so the largest is 1); every
    evaluator multiplies back.  This keeps ``1e-300``-sized functions away
    from underflow in powers.
    """

    def __init__(self, f):
        self.peak = f.peak
        self.total = f.space.total_measure
        mod = f.modulus
        w = f.space.weights
        nz = mod > 0
        if not nz.any():
            self.values = np.zeros(0)
            self.masses = np.zeros(0)
            self.cumulative = np.zeros(0)
            self.integrals = np.zeros(0)
            return
        scaled = mod[nz] / self.peak
        distinct, inverse = np.unique(-scaled, return_inverse=True)
        self.values = -distinct                                   # v_1 > v_2 > ...
        self.masses = np.bincount(inverse, weights=w[nz])        # mu(|f| = v_i)
        self.cumulative = np.cumsum(self.masses)                 # L_i
        self.integrals = np.cumsum(self.values * self.masses)    # int_0^{L_i} f_*

    @property
    def support(self):
        return float(self.cumulative[-1]) if self.cumulative.size else 0.0

    def distribution(self, alpha):
        """``mu(|f| > alpha)``."""
        if not alpha > 0:
            raise ParameterError("distribution needs alpha > 0")
        if self.values.size == 0:
            return 0.0
        a = alpha / self.peak
        count = int(np.searchsorted(-self.values, -a, side="left"))
        return float(self.cumulative[count - 1]) if count else 0.0

    def lower(self, t):
        """``f_*(t) = inf{alpha > 0 : lambda_f(alpha) <= t}``."""
        if not t > 0:
            raise ParameterError("rearrangement needs t > 0")
        i = int(np.searchsorted(self.cumulative, t, side="right"))
        return float(self.values[i] * self.peak) if i < self.values.size else 0.0

    def upper(self, t):
        """``f^*(t) = (1/t) int_0^t f_*``."""
        if not t > 0:
            raise ParameterError("rearrangement needs t > 0")
        if self.values.size == 0:
            return 0.0
        i = int(np.searchsorted(self.cumulative, t, side="right"))
        if i >= self.values.size:
            return float(self.integrals[-1] / t * self.peak)
        before = self.integrals[i - 1] if i else 0.0
        start = self.cumulative[i - 1] if i else 0.0
        return float((before + self.values[i] * (t - start)) / t * self.peak)

    # -- Lorentz functionals, all on the normalised table -------------------

    def weak_lower(self, p):
        """``sup_t t^(1/p) f_*(t) = max_i v_i L_i^(1/p)``."""
        if self.values.size == 0:
            return 0.0
        if p == INF:
            return self.peak
        return float((self.values * self.cumulative ** (1.0 / p)).max() * self.peak)

    def lower_norm(self, p, q):
        """``[(p/q) int (t^(1/p) f_*(t))^q dt/t]^(1/q)`` in closed form."""
        if q == INF:
            return self.weak_lower(p)
        if p == INF:
            raise ParameterError("the Lorentz functional needs p < inf when q < inf")
        if self.values.size == 0:
            return 0.0
        e = q / p
        prev = np.concatenate([[0.0], self.cumulative[:-1]])
        pieces = self.values ** q * (self.cumulative ** e - prev ** e)
        total = (p / q) ** 2 * math.fsum(pieces)
        return total ** (1.0 / q) * self.peak

    def weak_upper(self, p):
        """``sup_t t^(1/p) f^*(t)``; attained at a breakpoint ``L_i`` (or ``t -> 0`` for ``p = inf``)."""
        if self.values.size == 0:
            return 0.0
        if p == INF:
            return self.peak
        # on each interval t^(1/p - 1) (c + v t) has no interior maximum
        vals = self.cumulative ** (1.0 / p - 1.0) * self.integrals
        return float(vals.max() * self.peak)

    def upper_norm(self, p, q):
        """``[(p/q) int (t^(1/p) f^*(t))^q dt/t]^(1/q)``.

        ``+inf`` when ``p = 1 < q`` is finite and ``f != 0``: there
        ``t f^*(t)`` is constant beyond the support and the tail diverges.
        """
        if q == INF:
            return self.weak_upper(p)
        if p == INF:
            raise ParameterError("the Lorentz functional needs p < inf when q < inf")
        if self.values.size == 0:
            return 0.0
        if p == 1.0:
            return INF
        s = q / p - q
        v, L, S = self.values, self.cumulative, self.integrals
        pieces = [v[0] ** q * (p / q) * L[0] ** (q / p)]
        for i in range(1, v.size):
            c = S[i - 1] - v[i] * L[i - 1]
            pieces.append(_power_affine_integral(L[i - 1], L[i], s, c, v[i], q))
        pieces.append(S[-1] ** q * L[-1] ** s / (-s))
        total = (p / q) * math.fsum(pieces)
        return total ** (1.0 / q) * self.peak

    def layer_cake(self, p):
        """``p int alpha^(p-1) lambda_f(alpha) d alpha = sum_i L_i (v_i^p - v_(i+1)^p)``."""
        if self.values.size == 0:
            return 0.0
        nxt = np.concatenate([self.values[1:], [0.0]])
        return math.fsum(self.cumulative * (self.values ** p - nxt ** p)) * self.peak ** p


def _power_affine_integral(a, b, s, c, v, q):
    """``int_a^b t^(s-1) (c + v t)^q dt`` for ``0 < a < b``, ``c, v >= 0``."""
    if q == int(q) and q <= 64:
        q = int(q)
        total = []
        for j in range(q + 1):
            coef = comb(q, j, exact=True) * c ** (q - j) * v ** j
            if coef == 0:
                continue
            e = s + j
            if e == 0:
                total.append(coef * math.log(b / a))
            else:
                total.append(coef * (b ** e - a ** e) / e)
        return math.fsum(total)
    # non-integer q: Gauss-Legendre in log t, one panel per unit of log range
    lo, hi = math.log(a), math.log(b)
    panels = max(1, math.ceil(hi - lo))
    edges = np.linspace(lo, hi, panels + 1)
    total = 0.0
    for u0, u1 in zip(edges[:-1], edges[1:]):
        u = 0.5 * (u1 - u0) * _GL_NODES + 0.5 * (u1 + u0)
        t = np.exp(u)
        total += 0.5 * (u1 - u0) * float(np.dot(_GL_WEIGHTS, t ** s * (c + v * t) ** q))
    return total


# -- public operations ------------------------------------------------------


def lebesgue_norm(f, p):
    """``(sum |f|^p w)^(1/p)``, or ``max |f|`` for ``p = inf``."""
    p = as_exponent(p, "p")
    if f.is_zero():
        return 0.0
    if p == INF:
        return f.peak
    scaled = f.modulus / f.peak
    return math.fsum(scaled ** p * f.space.weights) ** (1.0 / p) * f.peak


def distribution(f, alpha):
    """``lambda_f(alpha) = mu(|f| > alpha)``."""
    return f.rearrangement.distribution(alpha)


def decreasing_rearrangement(f, t):
    """``f_*(t)``."""
    return f.rearrangement.lower(t)


def average_rearrangement(f, t):
    """``f^*(t)``, the running average of ``f_*``."""
    return f.rearrangement.upper(t)


def lorentz_norm(f, p, q):
    """``||f||_(p,q)`` built on ``f^*`` (normalisation factor ``p/q``)."""
    p, q = as_exponent(p, "p"), as_exponent(q, "q")
    return f.rearrangement.upper_norm(p, q)


def lorentz_quasinorm(f, p, q):
    """``||f||*_(p,q)`` built on ``f_*`` (normalisation factor ``p/q``)."""
    p, q = as_exponent(p, "p"), as_exponent(q, "q")
    return f.rearrangement.lower_norm(p, q)


def weak_norm_by_levels(f, p):
    """``sup_alpha alpha lambda_f(alpha)^(1/p)`` evaluated from the raw samples.

    Independent of the rearrangement table: for each sample value ``a`` the
    mass ``mu(|f| >= a)`` is the total minus an ascending prefix sum.
    """
    p = as_exponent(p, "p")
    if f.is_zero():
        return 0.0
    if p == INF:
        return f.peak
    mod = f.modulus / f.peak
    order = np.argsort(mod, kind="stable")
    asc = mod[order]
    below = np.concatenate([[0.0], np.cumsum(f.space.weights[order])])
    first = np.searchsorted(asc, asc, side="left")
    mass_at_least = f.space.total_measure - below[first]
    ok = asc > 0
    return float((asc[ok] * np.maximum(mass_at_least[ok], 0.0) ** (1.0 / p)).max()) * f.peak


def layer_cake_power(f, p):
    """``||f||_p^p`` through the distribution function."""
    p = as_exponent(p, "p")
    if p == INF:
        raise ParameterError("layer cake needs p < inf")
    return f.rearrangement.layer_cake(p)
