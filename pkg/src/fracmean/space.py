"""Finite quasi-metric measure spaces.

A :class:`PointSpace` is a finite set of points with a quasi-metric, a
strictly positive weight per point (the measure of the singleton) and a
quasi-triangle constant ``kappa``.  Balls are open: ``B(x, r) = {y : d(x, y) < r}``.

Two storage layouts are supported.  The *dense* layout keeps the full
distance matrix and is used for small spaces (a few thousand points) and
for spaces given only by their distances.  The *line* layout stores sorted
coordinates on the real line with ``d(x, y) = |x - y| ** power``; every ball
is then a contiguous index range, which keeps ball queries ``O(log n)`` and
ball aggregates ``O(n)`` on very large grids.

The second half of the module estimates the geometric constants of a model
(doubling constant and order, reverse doubling, a regular radial profile).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse

from .errors import DomainError, ParameterError

#: spaces with at most this many points get exhaustive constant scans
EXHAUSTIVE_LIMIT = 1000
#: above this many stored nonzeros, line spaces aggregate through prefix sums
CSR_NNZ_LIMIT = 4_000_000
#: radii whose ball data each space keeps
BALL_CACHE_SIZE = 32
#: largest membership matrix kept in that cache
CACHED_NNZ_LIMIT = 1_000_000


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class PointSpace:
    """Immutable finite quasi-metric measure space.

    Use :meth:`from_matrix`, :meth:`from_line` or :meth:`from_coords` rather
    than the constructor.

    Attributes
    ----------
    n : int
        Number of points.
    weights : ndarray
        Measure of each singleton, all ``> 0``.
    kappa : float
        Quasi-triangle constant, ``d(x, y) <= kappa * (d(x, z) + d(z, y))``.
    diam : float
        Largest pairwise distance.
    margin : ndarray
        Per point, the largest radius whose ball is not cut by the edge of
        the modelled region (``inf`` when the model has no edge).
    ids : tuple
        External point identifiers; ``ids[i]`` names point ``i``.
    grid : dict or None
        Lattice layout (``dim``, ``spacing``, ``shape``) for grid models.
    """

    def __init__(self, weights, kappa, *, matrix=None, line=None, power=1.0,
                 coords=None, margin=None, ids=None, name=None, grid=None):
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise ParameterError("weights must be a nonempty 1-D array")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ParameterError("every weight must be finite and > 0")
        if not kappa >= 1:
            raise ParameterError(f"kappa must be >= 1, got {kappa}")
        n = weights.size
        self.power = float(power)
        if (matrix is None) == (line is None):
            raise ParameterError("give exactly one of matrix= or line=")

        if matrix is not None:
            D = np.asarray(matrix, dtype=float)
            if D.shape != (n, n):
                raise ParameterError(f"distance matrix must be {n}x{n}")
            if not np.all(np.isfinite(D)):
                raise ParameterError("distances must be finite")
            if np.any(np.diag(D) != 0) or not np.array_equal(D, D.T):
                raise ParameterError("distance matrix must be symmetric with zero diagonal")
            off = D[~np.eye(n, dtype=bool)]
            if np.any(off <= 0):
                raise ParameterError("distinct points must have positive distance")
            self._D = _readonly(D)
            self._x = None
            self.backend = "dense"
            self.diam = float(D.max()) if n > 1 else 0.0
            self.min_spacing = float(off.min()) if n > 1 else math.inf
        else:
            x = np.asarray(line, dtype=float)
            if x.shape != (n,):
                raise ParameterError("line coordinates must match weights")
            if n > 1 and not np.all(np.diff(x) > 0):
                raise ParameterError("line coordinates must be strictly increasing")
            self._D = None
            self._x = _readonly(x)
            self.backend = "line"
            self.diam = float(self._d(x[0], x[-1])) if n > 1 else 0.0
            self.min_spacing = float(self._d(0.0, np.diff(x)).min()) if n > 1 else math.inf

        self.n = n
        self.weights = _readonly(weights)
        self.kappa = float(kappa)
        self.total_measure = math.fsum(weights)
        self.coords = None if coords is None else _readonly(np.asarray(coords, dtype=float))
        if margin is None:
            margin = np.full(n, math.inf)
        self.margin = _readonly(np.broadcast_to(np.asarray(margin, dtype=float), (n,)).copy())
        self.ids = tuple(range(n)) if ids is None else tuple(ids)
        if len(self.ids) != n or len(set(self.ids)) != n:
            raise ParameterError("ids must be unique, one per point")
        self._index = {pid: i for i, pid in enumerate(self.ids)}
        self.name = name
        self.grid = grid

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_matrix(cls, matrix, weights, kappa=1.0, **kw):
        return cls(weights, kappa, matrix=matrix, **kw)

    @classmethod
    def from_line(cls, x, weights, kappa=1.0, power=1.0, **kw):
        return cls(weights, kappa, line=x, power=power,
                   coords=np.asarray(x, dtype=float)[:, None], **kw)

    @classmethod
    def from_coords(cls, coords, weights, kappa=1.0, power=1.0, **kw):
        """Dense space with ``d(x, y) = |x - y|_2 ** power``."""
        from scipy.spatial.distance import cdist

        coords = np.asarray(coords, dtype=float)
        D = cdist(coords, coords)
        if power != 1.0:
            D = D ** power
        return cls(weights, kappa, matrix=D, coords=coords, power=power, **kw)

    # -- basic access ---------------------------------------------------

    def __len__(self):
        return self.n

    def __repr__(self):
        label = self.name or "PointSpace"
        return f"<{label}: n={self.n}, kappa={self.kappa:g}, backend={self.backend}>"

    def index_of(self, point):
        """Position of the point with identifier ``point``."""
        try:
            return self._index[point]
        except (KeyError, TypeError):
            raise DomainError(f"unknown point {point!r}") from None

    def _check_index(self, i):
        if not (0 <= int(i) < self.n):
            raise DomainError(f"point index {i} out of range")
        return int(i)

    def _d(self, a, b):
        diff = np.abs(np.subtract(a, b))
        return diff if self.power == 1.0 else diff ** self.power

    @property
    def distance_matrix(self):
        if self._D is None:
            if self.n > 4096:
                raise MemoryError("refusing to materialise a distance matrix this large")
            return self._d(self._x[:, None], self._x[None, :])
        return self._D

    def dist(self, i, j):
        i, j = self._check_index(i), self._check_index(j)
        if self._D is not None:
            return float(self._D[i, j])
        return float(self._d(self._x[i], self._x[j]))

    def dist_from(self, i):
        """Distances from point ``i`` to every point."""
        i = self._check_index(i)
        if self._D is not None:
            return self._D[i]
        return self._d(self._x[i], self._x)

    def set_distance(self, members):
        """``min over m in members of d(m, y)`` for every point ``y``."""
        members = np.asarray(members, dtype=np.intp)
        if members.size == 0:
            return np.full(self.n, math.inf)
        if self._D is not None:
            return self._D[members].min(axis=0)
        xs = np.sort(self._x[members])
        pos = np.searchsorted(xs, self._x)
        left = self._d(self._x, xs[np.clip(pos - 1, 0, xs.size - 1)])
        right = self._d(self._x, xs[np.clip(pos, 0, xs.size - 1)])
        return np.minimum(left, right)

    # -- balls ------------------------------------------------------------

    def _line_ranges(self, centers, r):
        """Index ranges ``[lo, hi)`` of the balls ``B(x[c], r)``."""
        x = self._x
        c = x[centers]
        s = r if self.power == 1.0 else r ** (1.0 / self.power)
        lo = np.searchsorted(x, c - s, side="left")
        hi = np.searchsorted(x, c + s, side="right")
        n = x.size
        # searchsorted works on rounded c -/+ s; settle ties against d itself
        for _ in range(2):
            grow = (lo > 0) & (self._d(c, x[np.maximum(lo - 1, 0)]) < r)
            lo = lo - grow
            shrink = (lo < centers) & (self._d(c, x[np.minimum(lo, n - 1)]) >= r)
            lo = lo + shrink
            grow = (hi < n) & (self._d(c, x[np.minimum(hi, n - 1)]) < r)
            hi = hi + grow
            shrink = (hi - 1 > centers) & (self._d(c, x[np.maximum(hi - 1, 0)]) >= r)
            hi = hi - shrink
        return lo, hi

    def ball(self, i, r):
        """Sorted indices of ``B(x_i, r)``."""
        if not r > 0:
            raise ParameterError(f"radius must be > 0, got {r}")
        i = self._check_index(i)
        if self._D is not None:
            return np.flatnonzero(self._D[i] < r)
        lo, hi = self._line_ranges(np.array([i]), r)
        return np.arange(lo[0], hi[0])

    def _memo(self, key, build):
        # spaces are immutable, so per-radius ball data can be reused
        cache = self.__dict__.setdefault("_cache", {})
        if key not in cache:
            if len(cache) >= BALL_CACHE_SIZE:
                cache.pop(next(iter(cache)))
            cache[key] = build()
        return cache[key]

    def _all_ranges(self, r):
        return self._memo(("ranges", float(r)), lambda: self._line_ranges(np.arange(self.n), r))

    def membership(self, r):
        """Sparse 0/1 matrix ``M[y, x] = 1`` iff ``x`` is in ``B(y, r)``."""
        key = ("membership", float(r))
        if key in self.__dict__.get("_cache", {}):
            return self._cache[key]
        M = self._build_membership(r)
        if M.nnz <= CACHED_NNZ_LIMIT:
            self._memo(key, lambda: M)
        return M

    def _build_membership(self, r):
        if self._D is not None:
            M = sparse.csr_matrix(self._D < r, dtype=float)
        else:
            lo, hi = self._all_ranges(r)
            lengths = hi - lo
            indptr = np.concatenate([[0], np.cumsum(lengths)])
            indices = np.arange(indptr[-1]) - np.repeat(indptr[:-1] - lo, lengths)
            data = np.ones(indptr[-1])
            M = sparse.csr_matrix((data, indices, indptr), shape=(self.n, self.n))
        M.data.setflags(write=False)
        return M

    def ball_sums(self, values, r):
        """For every center ``y``, the sum of ``values`` over ``B(y, r)``."""
        values = np.asarray(values, dtype=float)
        if self._D is None:
            lo, hi = self._all_ranges(r)
            if int((hi - lo).sum()) > CSR_NNZ_LIMIT:
                prefix = np.concatenate([[0.0], np.cumsum(values)])
                return np.maximum(prefix[hi] - prefix[lo], 0.0)
        return self.membership(r) @ values

    def ball_max(self, values, r):
        """For every center ``y``, the max of ``values`` over ``B(y, r)``."""
        values = np.asarray(values, dtype=float)
        if self._D is not None:
            return np.where(self._D < r, values[None, :], -np.inf).max(axis=1)
        lo, hi = self._all_ranges(r)
        return _range_max(values, lo, hi)

    def ball_measures(self, r):
        """``mu(B(y, r))`` for every center ``y``."""
        return self._memo(("measures", float(r)), lambda: _readonly(self.ball_sums(self.weights, r)))

    def ball_measure_at(self, centers, radii):
        """Matrix ``mu(B(x_c, r))`` over the given centers (rows) and radii (columns)."""
        centers = np.asarray(centers, dtype=np.intp)
        radii = np.asarray(radii, dtype=float)
        out = np.empty((centers.size, radii.size))
        if self._D is not None:
            for row, c in enumerate(centers):
                out[row] = _sorted_profile(self._D[c], self.weights, radii)
            return out
        prefix = np.concatenate([[0.0], np.cumsum(self.weights)])
        for col, r in enumerate(radii):
            lo, hi = self._line_ranges(centers, r)
            out[:, col] = prefix[hi] - prefix[lo]
        return out

    def measure(self, subset):
        """Total weight of a collection of point indices (duplicates ignored)."""
        idx = np.unique(np.asarray(list(subset) if not isinstance(subset, np.ndarray) else subset,
                                   dtype=np.intp))
        if idx.size and (idx[0] < 0 or idx[-1] >= self.n):
            raise DomainError("subset contains indices outside the space")
        return math.fsum(self.weights[idx])

    def boundary_window(self, w=2.0):
        """Largest radius treated as free of boundary effects: ``diam / (2 kappa w)``."""
        return self.diam / (2.0 * self.kappa * w)


def _sorted_profile(row, weights, radii):
    order = np.argsort(row, kind="stable")
    d_sorted = row[order]
    cw = np.concatenate([[0.0], np.cumsum(weights[order])])
    return cw[np.searchsorted(d_sorted, radii, side="left")]


def _range_max(values, lo, hi):
    """Vectorised range-maximum over ``values[lo:hi]`` with a sparse table."""
    n = values.size
    table = [values]
    k = 1
    while (1 << k) <= n:
        prev = table[-1]
        half = 1 << (k - 1)
        table.append(np.maximum(prev[:-half], prev[half:]))
        k += 1
    length = hi - lo
    level = np.floor(np.log2(np.maximum(length, 1))).astype(int)
    out = np.empty(lo.size)
    for j in np.unique(level):
        sel = level == j
        t = table[j]
        out[sel] = np.maximum(t[lo[sel]], t[hi[sel] - (1 << j)])
    return out


# -- module-level operations ----------------------------------------------


def ball(space, center, r):
    """Point identifiers of ``B(center, r)``, in index order."""
    i = space.index_of(center)
    return [space.ids[k] for k in space.ball(i, r)]


def measure(space, subset):
    """Measure of a set of point identifiers."""
    return space.measure([space.index_of(p) for p in subset])


def radius_grid(r_min, r_max, per_decade=32):
    """Logarithmic radius grid from ``r_min`` to ``r_max`` inclusive."""
    if not 0 < r_min <= r_max:
        raise ParameterError(f"need 0 < r_min <= r_max, got ({r_min}, {r_max})")
    if r_min == r_max:
        return np.array([float(r_min)])
    count = max(2, int(math.ceil(per_decade * math.log10(r_max / r_min))) + 1)
    grid = np.geomspace(r_min, r_max, count)
    grid[0], grid[-1] = r_min, r_max
    return grid


def quasi_triangle_ratio(space, sample=None, seed=0):
    """Largest ``d(x, y) / (d(x, z) + d(z, y))`` over triples.

    Exhaustive when ``sample`` is None and the space has at most
    ``EXHAUSTIVE_LIMIT`` points; otherwise ``sample`` random triples.
    The space satisfies its quasi-triangle inequality iff the result is
    ``<= space.kappa``.
    """
    n = space.n
    if n < 3:
        return 0.0 if n < 2 else 1.0
    if sample is None and n <= EXHAUSTIVE_LIMIT:
        D = space.distance_matrix
        worst = 0.0
        for z in range(n):
            denom = D[:, z][:, None] + D[z, :][None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(denom > 0, D / denom, 0.0)
            worst = max(worst, float(ratio.max()))
        return worst
    rng = np.random.default_rng(seed)
    count = sample or 100_000
    x, y, z = (rng.integers(0, n, count) for _ in range(3))
    if space.backend == "line":
        pts = space._x
        dxy, dxz, dzy = space._d(pts[x], pts[y]), space._d(pts[x], pts[z]), space._d(pts[z], pts[y])
    else:
        D = space.distance_matrix
        dxy, dxz, dzy = D[x, y], D[x, z], D[z, y]
    denom = dxz + dzy
    ok = denom > 0
    return float((dxy[ok] / denom[ok]).max()) if ok.any() else 0.0


# -- geometric constants --------------------------------------------------


@dataclass(frozen=True)
class Sampling:
    """How (center, radius) pairs are chosen when estimating constants.

    ``exhaustive=None`` means exhaustive for spaces with at most
    ``EXHAUSTIVE_LIMIT`` points.  Exhaustive scans evaluate every radius at
    which a ball ratio can change, so the reported max/min is exact over
    the window.  Sampled scans draw ``n_centers`` centers with a seeded
    generator and use a log radius grid with ``per_decade`` points.
    """

    exhaustive: bool | None = None
    n_centers: int = 256
    per_decade: int = 32
    seed: int = 0

    def is_exhaustive(self, space):
        return space.n <= EXHAUSTIVE_LIMIT if self.exhaustive is None else self.exhaustive

    def centers(self, space):
        if self.is_exhaustive(space) or space.n <= self.n_centers:
            return np.arange(space.n)
        rng = np.random.default_rng(self.seed)
        return np.sort(rng.choice(space.n, self.n_centers, replace=False))


@dataclass(frozen=True)
class PhiFit:
    """Nondecreasing radial profile ``phi`` with ``a phi(r) <= mu(B(x, r)) <= b phi(r)``.

    ``a0, b0`` bound ``phi`` by ``a0 r^D <= phi(r) <= b0 r^delta`` for radii at
    most ``unit``; ``a1, b1`` give ``a1 r^delta <= phi(r) <= b1 r^D`` above it.
    Envelope constants are ``None`` when the table has no radius in that regime.
    """

    radii: np.ndarray
    phi: np.ndarray
    a: float
    b: float
    a0: float | None = None
    b0: float | None = None
    a1: float | None = None
    b1: float | None = None
    unit: float = 1.0

    def value(self, r):
        hit = np.flatnonzero(np.isclose(self.radii, r, rtol=1e-12, atol=0.0))
        if hit.size == 0:
            raise ParameterError(f"phi was not tabulated at r={r}")
        return float(self.phi[hit[0]])


@dataclass(frozen=True)
class GeometryConstants:
    """Empirical constants of a space of homogeneous type.

    ``c_mu = c_prime_mu * (2 kappa) ** d_mu``.  The reverse-doubling pair and
    the profile fit are optional and filled in by later estimates.
    """

    kappa: float
    c_prime_mu: float
    d_mu: float
    c_mu: float
    c_tilde_mu: float | None = None
    delta_mu: float | None = None
    phi: PhiFit | None = None
    window: tuple | None = None
    worst_pair: tuple | None = None
    degenerate: bool = False

    @classmethod
    def from_doubling(cls, kappa, c_prime_mu, **kw):
        c_prime_mu = max(1.0, float(c_prime_mu))
        d_mu = math.log2(c_prime_mu)
        return cls(kappa=float(kappa), c_prime_mu=c_prime_mu, d_mu=d_mu,
                   c_mu=c_prime_mu * (2.0 * kappa) ** d_mu, **kw)

    def with_reverse(self, c_tilde_mu, delta_mu):
        return replace(self, c_tilde_mu=c_tilde_mu, delta_mu=delta_mu)

    def with_phi(self, phi):
        return replace(self, phi=phi)

    @property
    def ball_ratio_constant(self):
        """``C_mu (2 kappa)^D_mu``: bounds ``mu(B(x, 2 kappa r)) / mu(B(x, r))``."""
        return self.c_mu * (2.0 * self.kappa) ** self.d_mu


def _check_window(window):
    r_min, r_max = (float(v) for v in window)
    if not (r_min > 0 and r_max > 0):
        raise ParameterError(f"radius window must be positive, got {window}")
    if r_min > r_max:
        raise ParameterError(f"empty radius window {window}")
    return r_min, r_max


def _one_step_ratios(space, window, sample, interior, factor=2.0):
    """All ``(x, r, mu(B(x, factor r)) / mu(B(x, r)))`` triples the policy visits."""
    r_min, r_max = _check_window(window)
    centers = sample.centers(space)
    xs, rs, ratios = [], [], []
    if sample.is_exhaustive(space):
        for c in centers:
            row = space.dist_from(c)
            pos = row[row > 0]
            cand = np.concatenate([[r_min, r_max], pos, pos / factor])
            cand = np.unique(cand[(cand >= r_min) & (cand <= r_max)])
            if interior:
                cand = cand[factor * cand <= space.margin[c]]
            if cand.size == 0:
                continue
            prof = _sorted_profile(row, space.weights, np.concatenate([cand, factor * cand]))
            small, big = prof[:cand.size], prof[cand.size:]
            xs.append(np.full(cand.size, c))
            rs.append(cand)
            ratios.append(big / small)
    else:
        radii = radius_grid(r_min, r_max, sample.per_decade)
        mu = space.ball_measure_at(centers, np.concatenate([radii, factor * radii]))
        small, big = mu[:, :radii.size], mu[:, radii.size:]
        keep = np.ones_like(small, dtype=bool)
        if interior:
            keep = factor * radii[None, :] <= space.margin[centers][:, None]
        cc, rr = np.meshgrid(centers, radii, indexing="ij")
        xs.append(cc[keep])
        rs.append(rr[keep])
        ratios.append((big / small)[keep])
    if not xs:
        raise ParameterError("no (center, radius) pairs survive the window and interior filter")
    return np.concatenate(xs), np.concatenate(rs), np.concatenate(ratios)


def estimate_doubling(space, radius_window, sample=None, interior=False):
    """Doubling constant ``C'_mu`` (max ball-doubling ratio) and derived constants.

    Parameters
    ----------
    space : PointSpace
    radius_window : (float, float)
        Base radii ``r`` range; ratios use ``B(x, 2r)`` and ``B(x, r)``.
    sample : Sampling, optional
    interior : bool
        Only use pairs with ``2r <= margin(x)``.

    Returns
    -------
    GeometryConstants
        With ``c_prime_mu``, ``d_mu = log2 c_prime_mu`` and
        ``c_mu = c_prime_mu (2 kappa)^d_mu`` filled in.
    """
    sample = sample or Sampling()
    xs, rs, ratios = _one_step_ratios(space, radius_window, sample, interior)
    k = int(np.argmax(ratios))
    return GeometryConstants.from_doubling(
        space.kappa, float(ratios[k]),
        window=tuple(float(v) for v in radius_window),
        worst_pair=(int(xs[k]), float(rs[k])),
    )


@dataclass(frozen=True)
class ReverseDoublingResult:
    c_tilde_mu: float
    delta_mu: float
    annulus_ok: bool
    degenerate: bool
    failures: tuple = ()

    @property
    def certified(self):
        return self.annulus_ok


def estimate_reverse_doubling(space, radius_window, sample=None, interior=False):
    """Fit ``mu(B1)/mu(B2) >= c_tilde (r1/r2)^delta`` for concentric nested balls.

    The smallest one-step ratio ``c_rev = min mu(B(x, 2r)) / mu(B(x, r))`` over
    the window gives ``delta = log2 c_rev`` and ``c_tilde = 2^-delta``; chaining
    one-step ratios then certifies every concentric pair inside the window.
    A one-step ratio of exactly 1 means an empty annulus ``B(x, 2r) \\ B(x, r)``;
    those pairs are returned as failures instead of raising.
    """
    sample = sample or Sampling()
    r_min, r_max = _check_window(radius_window)
    xs, rs, ratios = _one_step_ratios(space, radius_window, sample, interior)
    empty = ratios <= 1.0
    failures = tuple((int(x), float(r)) for x, r in zip(xs[empty][:20], rs[empty][:20]))
    c_rev = float(ratios.min())
    delta = math.log2(c_rev) if c_rev > 1 else 0.0
    return ReverseDoublingResult(
        c_tilde_mu=2.0 ** -delta,
        delta_mu=delta,
        annulus_ok=not empty.any(),
        degenerate=r_min == r_max,
        failures=failures,
    )


def estimate_geometry(space, radius_window, sample=None, interior=False):
    """Doubling and reverse-doubling constants over one window."""
    geo = estimate_doubling(space, radius_window, sample, interior)
    rev = estimate_reverse_doubling(space, radius_window, sample, interior)
    return replace(geo.with_reverse(rev.c_tilde_mu, rev.delta_mu),
                   degenerate=rev.degenerate or not rev.annulus_ok)


@dataclass(frozen=True)
class BallRatioReport:
    worst_upper_slack: float
    worst_lower_slack: float
    n_pairs: int
    violations: tuple = field(default=())

    @property
    def ok(self):
        return self.worst_upper_slack >= 0 and self.worst_lower_slack >= 0


def certify_ball_ratios(space, geo, radius_window, sample=None, interior=False, n_offcenter=2000):
    """Check the nested-ball growth bounds the fitted constants promise.

    Upper: ``mu(B1)/mu(B2) <= C_mu (r1/r2)^D_mu`` for concentric pairs inside
    the window and for sampled off-center pairs ``B(y, r2)`` contained in
    ``B(x, r1)`` with ``2 kappa r1`` inside the window.  Lower (when
    ``geo.delta_mu`` is set): ``mu(B1)/mu(B2) >= c_tilde (r1/r2)^delta`` for the
    concentric pairs.  Slacks are ``bound - ratio`` (upper) and
    ``ratio - bound`` (lower), relative to the ratio.
    """
    sample = sample or Sampling()
    r_min, r_max = _check_window(radius_window)
    radii = radius_grid(r_min, r_max, min(sample.per_decade, 16))
    centers = sample.centers(space)
    mu = space.ball_measure_at(centers, radii)
    worst_up, worst_lo, count = math.inf, math.inf, 0
    violations = []
    i2, i1 = np.triu_indices(radii.size, k=1)
    scale = radii[i1] / radii[i2]
    upper_bound = geo.c_mu * scale ** geo.d_mu
    lower_bound = None
    if geo.delta_mu is not None:
        lower_bound = geo.c_tilde_mu * scale ** geo.delta_mu
    for row, c in enumerate(centers):
        keep = np.ones(i1.size, dtype=bool)
        if interior:
            keep = 2 * radii[i1] <= space.margin[c]
        if not keep.any():
            continue
        ratio = mu[row, i1] / mu[row, i2]
        up = ((upper_bound - ratio) / ratio)[keep]
        worst_up = min(worst_up, float(up.min()))
        count += int(keep.sum())
        if up.min() < 0:
            violations.append(("upper", int(c)))
        if lower_bound is not None:
            lo = ((ratio - lower_bound) / ratio)[keep]
            worst_lo = min(worst_lo, float(lo.min()))
            if lo.min() < 0:
                violations.append(("lower", int(c)))

    rng = np.random.default_rng(sample.seed + 1)
    big = radii[2 * space.kappa * radii <= r_max]
    for _ in range(n_offcenter if big.size else 0):
        x = int(rng.choice(centers))
        r1 = float(rng.choice(big))
        members = space.ball(x, r1)
        y = int(rng.choice(members))
        if interior and 4 * space.kappa * r1 > space.margin[y]:
            continue
        small = radii[radii <= r1]
        r2 = float(rng.choice(small))
        inner = space.ball(y, r2)
        if space.dist_from(x)[inner].max() >= r1:
            continue
        ratio = space.measure(members) / space.measure(inner)
        up = (geo.c_mu * (r1 / r2) ** geo.d_mu - ratio) / ratio
        worst_up = min(worst_up, up)
        count += 1
        if up < 0:
            violations.append(("upper-offcenter", x, y))
    return BallRatioReport(worst_up, worst_lo, count, tuple(violations[:50]))


def fit_phi(space, radius_grid_values, geo=None, interior=False, unit=1.0):
    """Fit a nondecreasing radial profile and its two-sided ball comparability.

    ``phi(r)`` is the mean of ``mu(B(x, r))`` over centers, made nondecreasing
    by a running maximum over increasing radii.  ``a`` and ``b`` are the
    extreme ratios ``mu(B(x, r)) / phi(r)`` over the table.  When ``geo``
    carries ``d_mu`` and ``delta_mu``, the small/large radius envelopes are
    derived as well.
    """
    radii = np.unique(np.asarray(radius_grid_values, dtype=float))
    if radii.size == 0 or radii[0] <= 0:
        raise ParameterError("radius grid must be nonempty and positive")
    mean = np.empty(radii.size)
    lo = np.empty(radii.size)
    hi = np.empty(radii.size)
    for k, r in enumerate(radii):
        m = space.ball_measures(r)
        if interior:
            m = m[r <= space.margin]
            if m.size == 0:
                raise ParameterError(f"no interior centers at r={r}")
        mean[k] = math.fsum(m) / m.size
        lo[k], hi[k] = m.min(), m.max()
    phi = np.maximum.accumulate(mean)
    a = float((lo / phi).min())
    b = float((hi / phi).max())
    env = {}
    if geo is not None and geo.delta_mu is not None:
        small, large = radii <= unit, radii >= unit
        D, d = geo.d_mu, geo.delta_mu
        if small.any():
            env["a0"] = float((phi[small] / radii[small] ** D).min())
            env["b0"] = float((phi[small] / radii[small] ** d).max())
        if large.any():
            env["a1"] = float((phi[large] / radii[large] ** d).min())
            env["b1"] = float((phi[large] / radii[large] ** D).max())
    return PhiFit(radii=_readonly(radii), phi=_readonly(phi), a=a, b=b, unit=unit, **env)
