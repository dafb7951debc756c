"""Nested dyadic cube systems on finite quasi-metric measure spaces.

Two flavours are built from the same engine:

* :func:`build_sawyer_wheeden` -- scale ``rho > 1``, generation ``k`` has
  cubes comparable to balls of radius ``rho**k``; larger ``k`` is coarser.
* :func:`build_christ` -- scale ``rho in (0, 1)``; larger ``k`` is finer.

Construction uses nested greedy nets.  Starting from the coarsest level
(a single center, point 0), each finer net is seeded with the coarser
centers and completed greedily in point-index order.  Finest-level cubes
are nearest-center cells (ties to the lower center index); a cube at a
coarser level is the union of the finer cubes whose centers lie in its
nearest-center cell.  Every invariant is then checked on the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationError, ParameterError

#: default net separation for Sawyer-Wheeden systems, in units of ``kappa^2 rho^k``
SW_SEPARATION = 4.0


# -- generation index -------------------------------------------------------


def generation_index(r, rho, kappa):
    """The unique integer ``m`` with ``rho^(m+1) <= r/(2 kappa) < rho^(m+2)``.

    Found by integer search on exponents, comparing ``2 kappa rho^e``
    against ``r`` so that ``r = 2 kappa rho^(m+1)`` lands on the left,
    inclusive side.
    """
    if not r > 0 or not rho > 1 or not kappa >= 1:
        raise ParameterError("generation_index needs r > 0, rho > 1, kappa >= 1")
    m = math.floor(math.log(r / (2 * kappa), rho)) - 1
    while 2 * kappa * rho ** (m + 1) > r:
        m -= 1
    while 2 * kappa * rho ** (m + 2) <= r:
        m += 1
    return m


# -- cardinality constants --------------------------------------------------


@dataclass(frozen=True)
class Cardinality:
    """Scale-dependent bounds ``N1, N2, N3`` and their uniform versions."""

    n1: float
    n2: float
    n3: float
    n1_star: float
    n2_star: float
    n3_star: float


def cardinality_constants(k, r, geo, rho, kappa):
    """Constants bounding ball/cube measure ratios and neighbour counts.

    ``N1 = C[kappa(rho + r/rho^k)]^D``, ``N2 = C[kappa(2 kappa rho + r/rho^k)]^D``,
    ``N3 = C[kappa((2 kappa^2 + 1) rho + r/rho^k)]^D N2``; the starred values
    are the uniform bounds valid at ``k = m_r``.
    """
    C, D = geo.c_mu, geo.d_mu
    s = r / rho ** k
    n1 = C * (kappa * (rho + s)) ** D
    n2 = C * (kappa * (2 * kappa * rho + s)) ** D
    n3 = C * (kappa * ((2 * kappa ** 2 + 1) * rho + s)) ** D * n2
    n1s = C * (kappa * rho * (1 + 2 * kappa * rho)) ** D
    n2s = C * (2 * kappa ** 2 * rho * (1 + rho)) ** D
    n3s = C * (kappa * rho * (2 * kappa ** 2 + 2 * kappa * rho + 1)) ** D * n2s
    return Cardinality(n1, n2, n3, n1s, n2s, n3s)


# -- cube systems -------------------------------------------------------------


@dataclass(frozen=True)
class Cube:
    k: int
    j: int
    center: int
    members: np.ndarray
    parent: tuple | None


class CubeSystem:
    """Nested partitions of a space indexed by generation.

    ``labels[k][x]`` is the index ``j`` of the generation-``k`` cube holding
    point ``x``; ``centers[k][j]`` is its center and ``parents[k][j]`` the
    index of the containing cube in the next coarser generation.
    """

    finer_is_larger_k = False

    def __init__(self, space, rho, generations, labels, centers, parents):
        self.space = space
        self.rho = float(rho)
        self.generations = tuple(generations)
        self.labels = labels
        self.centers = centers
        self.parents = parents
        for arr in (*labels.values(), *centers.values(), *parents.values()):
            arr.setflags(write=False)
        self._measures = {}

    # generations are listed finest first
    @property
    def finest(self):
        return self.generations[0]

    @property
    def coarsest(self):
        return self.generations[-1]

    def coarser(self, k):
        return k - 1 if self.finer_is_larger_k else k + 1

    def _check_generation(self, k):
        if k not in self.labels:
            raise ParameterError(f"generation {k} is not part of this system "
                                 f"({self.finest}..{self.coarsest})")

    def n_k(self, k):
        self._check_generation(k)
        return int(self.centers[k].size)

    def members(self, k, j):
        self._check_generation(k)
        return np.flatnonzero(self.labels[k] == j)

    def cube(self, k, j):
        self._check_generation(k)
        if not 0 <= j < self.n_k(k):
            raise ParameterError(f"no cube {j} in generation {k}")
        parent = None
        if k != self.coarsest:
            parent = (self.coarser(k), int(self.parents[k][j]))
        return Cube(k, j, int(self.centers[k][j]), self.members(k, j), parent)

    def cube_measures(self, k):
        if k not in self._measures:
            self._check_generation(k)
            self._measures[k] = np.bincount(self.labels[k], weights=self.space.weights,
                                            minlength=self.n_k(k))
        return self._measures[k]

    def scale(self, k):
        return self.rho ** k

    def containing(self, k, x):
        self._check_generation(k)
        return int(self.labels[k][x])

    def certify_partition_and_nesting(self):
        """Check per-generation partitions and nesting; raise on violation."""
        total = self.space.total_measure
        for k in self.generations:
            lab = self.labels[k]
            counts = np.bincount(lab, minlength=self.n_k(k))
            if counts.size != self.n_k(k) or np.any(counts == 0):
                j = int(np.flatnonzero(counts == 0)[0]) if np.any(counts == 0) else -1
                raise CertificationError("empty or unlabeled cube", k=k, j=j, invariant="partition")
            mass = math.fsum(self.cube_measures(k))
            if abs(mass - total) > 1e-12 * total:
                raise CertificationError("cube measures do not add up", k=k, invariant="partition")
            if k != self.coarsest:
                up = self.coarser(k)
                bad = np.flatnonzero(self.parents[k][lab] != self.labels[up])
                if bad.size:
                    j = int(lab[bad[0]])
                    raise CertificationError("cube straddles two coarser cubes",
                                             k=k, j=j, invariant="nesting")
        return True

    def dump(self):
        """Rows ``(k, j, center id, member ids, parent)`` for every cube."""
        ids = self.space.ids
        rows = []
        for k in self.generations:
            order = np.argsort(self.labels[k], kind="stable")
            bounds = np.concatenate([[0], np.cumsum(np.bincount(self.labels[k],
                                                                 minlength=self.n_k(k)))])
            for j in range(self.n_k(k)):
                mem = order[bounds[j]:bounds[j + 1]]
                parent = None if k == self.coarsest else [self.coarser(k), int(self.parents[k][j])]
                rows.append({"k": k, "j": j, "center": ids[self.centers[k][j]],
                             "members": [ids[i] for i in mem], "parent": parent})
        return rows


class DyadicSystem(CubeSystem):
    """Cubes ``E^k_j`` with ``B(x^k_j, rho^k) ⊆ E^k_j ⊆ B(x^k_j, rho^(k+1))``."""

    finer_is_larger_k = False

    @property
    def m(self):
        return self.finest


class ChristSystem(CubeSystem):
    """Cubes ``Q^k_a`` with ``rho in (0, 1)`` and achieved ball constants.

    ``z[k][a]`` is the deepest point of the cube (largest distance to its
    complement).  ``c0`` and ``c1`` are the achieved constants
    ``B(z, c0 rho^k) ⊆ Q`` and ``diam Q <= c1 rho^k``.  ``c2, eta`` are an
    empirical fit of the small-boundary property and are not guaranteed.
    """

    finer_is_larger_k = True

    def __init__(self, *args, z=None, depth=None, c0=None, c1=None, c2=None, eta=None, **kw):
        super().__init__(*args, **kw)
        self.z = z
        self.depth = depth
        self.c0, self.c1, self.c2, self.eta = c0, c1, c2, eta


# -- net construction -------------------------------------------------------


def _greedy_net_dense(space, seeds, s):
    D = space.distance_matrix
    mind = np.full(space.n, math.inf)
    chosen = np.zeros(space.n, dtype=bool)
    for c in seeds:
        chosen[c] = True
        mind = np.minimum(mind, D[c])
    for i in range(space.n):
        if not chosen[i] and mind[i] >= s:
            chosen[i] = True
            mind = np.minimum(mind, D[i])
    return np.flatnonzero(chosen)


def _greedy_net_line(space, seeds, s):
    """Greedy net on a line in index order; gaps between seeds are independent."""
    x = space._x
    n = x.size
    if s <= space.min_spacing:
        return np.arange(n)
    shift = s if space.power == 1.0 else s ** (1.0 / space.power)
    nxt = np.searchsorted(x, x + shift, side="left")
    # settle rounding against the distance itself
    idx = np.arange(n)
    too_close = (nxt < n) & (space._d(x, x[np.minimum(nxt, n - 1)]) < s)
    nxt = nxt + too_close
    far_enough = (nxt - 1 > idx) & (space._d(x, x[np.maximum(nxt - 1, 0)]) >= s)
    nxt = nxt - far_enough
    nxt = nxt.tolist()
    seeds = sorted(int(c) for c in seeds)
    out = list(seeds)
    dist = space._d
    if not seeds:
        c = 0
        while c < n:
            out.append(c)
            c = nxt[c]
        return np.array(sorted(out))
    c = 0
    b = seeds[0]
    while c < b and dist(x[c], x[b]) >= s:
        out.append(c)
        c = nxt[c]
    for a, b in zip(seeds, seeds[1:]):
        c = nxt[a]
        while c < b and dist(x[c], x[b]) >= s:
            out.append(c)
            c = nxt[c]
    c = nxt[seeds[-1]]
    while c < n:
        out.append(c)
        c = nxt[c]
    return np.array(sorted(out), dtype=np.intp)


def _nearest(space, centers, targets=None):
    """Index into ``centers`` of the nearest center for each target point.

    Ties go to the lower center index; ``centers`` must be sorted.
    """
    targets = np.arange(space.n) if targets is None else np.asarray(targets)
    if space.backend == "line":
        x = space._x
        cx = x[centers]
        pos = np.searchsorted(cx, x[targets])
        left = np.clip(pos - 1, 0, cx.size - 1)
        right = np.clip(pos, 0, cx.size - 1)
        dl = space._d(x[targets], cx[left])
        dr = space._d(x[targets], cx[right])
        return np.where(dl <= dr, left, right)
    D = space.distance_matrix
    return np.argmin(D[np.ix_(targets, centers)], axis=1)


def _build_levels(space, scales, separation):
    """Nested nets and labels.

    ``scales`` are listed coarsest first.  Returns per-level center arrays,
    point labels and parent maps, each coarsest first.
    """
    nets = []
    seeds = np.array([0], dtype=np.intp)
    net_fn = _greedy_net_line if space.backend == "line" else _greedy_net_dense
    for idx, sc in enumerate(scales):
        if idx == 0:
            nets.append(seeds)
            continue
        seeds = net_fn(space, seeds, separation * sc)
        nets.append(seeds)
    labels = [None] * len(scales)
    parents = [None] * len(scales)
    labels[-1] = _nearest(space, nets[-1]).astype(np.int32)
    for lev in range(len(scales) - 2, -1, -1):
        fine_centers = nets[lev + 1]
        par = _nearest(space, nets[lev], fine_centers).astype(np.int32)
        parents[lev + 1] = par
        labels[lev] = par[labels[lev + 1]]
    parents[0] = np.zeros(1, dtype=np.int32)
    return nets, labels, parents


def _own_center_distance(space, centers, labels):
    own = centers[labels]
    if space.backend == "line":
        return space._d(space._x[own], space._x)
    return space.distance_matrix[own, np.arange(space.n)]


def certify_ball_containment(system, inner_scale, outer_scale):
    """Worst relative slacks of ``B(c, inner) ⊆ E ⊆ B(c, outer)`` over all cubes.

    ``inner_scale(k)`` and ``outer_scale(k)`` give the radii per generation.
    Returns ``(k, inner_slack, outer_slack, worst_j)`` per generation; the
    inner slack may be zero (open balls), the outer one must be positive.
    """
    space = system.space
    out = []
    for k in system.generations:
        lab, cen = system.labels[k], system.centers[k]
        own = _own_center_distance(space, cen, lab)
        outer = np.zeros(cen.size)
        np.maximum.at(outer, lab, own)
        foreign = _foreign_distance(space, cen, lab)
        r_in, r_out = inner_scale(k), outer_scale(k)
        in_slack = (foreign - r_in) / r_in
        out_slack = (r_out - outer) / r_out
        worst = int(np.argmin(np.minimum(in_slack, out_slack)))
        out.append((k, float(in_slack.min()), float(out_slack.min()), worst))
    return out


def _foreign_distance(space, centers, labels):
    """For each cube, the distance from its center to the nearest non-member."""
    n_cubes = centers.size
    if n_cubes == 1:
        return np.full(1, math.inf)
    if space.backend == "line":
        x = space._x
        # nearest non-member on each side of the center: walk runs of equal labels
        change = np.flatnonzero(np.diff(labels) != 0)
        run_start = np.concatenate([[0], change + 1])
        run_end = np.concatenate([change + 1, [labels.size]])
        run_of = np.repeat(np.arange(run_start.size), run_end - run_start)
        res = np.empty(n_cubes)
        r = run_of[centers]
        left = run_start[r] - 1
        right = run_end[r]
        dl = np.where(left >= 0, space._d(x[centers], x[np.maximum(left, 0)]), math.inf)
        dr = np.where(right < labels.size,
                      space._d(x[centers], x[np.minimum(right, labels.size - 1)]), math.inf)
        res[:] = np.minimum(dl, dr)
        return res
    D = space.distance_matrix[centers]
    mask = labels[None, :] == np.arange(n_cubes)[:, None]
    return np.where(mask, math.inf, D).min(axis=1)


def _complement_distance(space, labels):
    """Per point, the distance to the nearest point outside its own cube."""
    n = space.n
    if labels.max() == 0:
        return np.full(n, math.inf)
    if space.backend == "line":
        x = space._x
        change = np.flatnonzero(np.diff(labels) != 0)
        run_start = np.concatenate([[0], change + 1])
        run_end = np.concatenate([change + 1, [n]])
        run_of = np.repeat(np.arange(run_start.size), run_end - run_start)
        left = run_start[run_of] - 1
        right = run_end[run_of]
        dl = np.where(left >= 0, space._d(x, x[np.maximum(left, 0)]), math.inf)
        dr = np.where(right < n, space._d(x, x[np.minimum(right, n - 1)]), math.inf)
        return np.minimum(dl, dr)
    D = space.distance_matrix
    return np.where(labels[:, None] == labels[None, :], math.inf, D).min(axis=1)


def _cube_diameters(space, labels, n_cubes):
    if space.backend == "line":
        lo = np.full(n_cubes, space.n)
        hi = np.full(n_cubes, -1)
        idx = np.arange(space.n)
        np.minimum.at(lo, labels, idx)
        np.maximum.at(hi, labels, idx)
        return space._d(space._x[lo], space._x[hi])
    D = space.distance_matrix
    same = labels[:, None] == labels[None, :]
    per_point = np.where(same, D, 0.0).max(axis=1)
    diam = np.zeros(n_cubes)
    np.maximum.at(diam, labels, per_point)
    return diam


# -- builders -------------------------------------------------------------


def _pack(levels_coarse_first, nets, labels, parents):
    """Re-key per-level arrays by generation index."""
    lab = {k: labels[i] for i, k in enumerate(levels_coarse_first)}
    cen = {k: np.asarray(nets[i], dtype=np.intp) for i, k in enumerate(levels_coarse_first)}
    par = {k: parents[i] for i, k in enumerate(levels_coarse_first)}
    return lab, cen, par


def build_sawyer_wheeden(space, m, rho=None, separation=None, certify=True):
    """Dyadic system with generations ``m, m+1, ...`` up to a single covering cube.

    ``rho`` defaults to ``8 kappa^5``.  Level-``k`` centers form a greedy net
    with separation ``separation * rho**k`` (default ``4 kappa^2 rho**k``).  With ``certify`` (default) a
    violated containment ``B(x, rho^k) ⊆ E ⊆ B(x, rho^(k+1))`` raises
    :class:`CertificationError` naming the cube.
    """
    kappa = space.kappa
    rho = 8 * kappa ** 5 if rho is None else float(rho)
    if not rho > 1:
        raise ParameterError(f"Sawyer-Wheeden scale must exceed 1, got {rho}")
    if separation is None:
        separation = SW_SEPARATION * kappa ** 2
    m = int(m)
    top = m
    while separation * rho ** top <= space.diam:
        top += 1
    gens_coarse_first = list(range(top, m - 1, -1))
    nets, labels, parents = _build_levels(space, [rho ** k for k in gens_coarse_first], separation)
    lab, cen, par = _pack(gens_coarse_first, nets, labels, parents)
    system = DyadicSystem(space, rho, gens_coarse_first[::-1], lab, cen, par)
    system.separation = separation
    if certify:
        system.certify_partition_and_nesting()
        for k, in_slack, out_slack, j in certify_ball_containment(
                system, lambda k: rho ** k, lambda k: rho ** (k + 1)):
            if in_slack < 0 or out_slack <= 0:
                raise CertificationError(
                    f"cube ({k}, {j}) breaks B(x, rho^k) ⊆ E ⊆ B(x, rho^(k+1))",
                    k=k, j=j, inner_slack=in_slack, outer_slack=out_slack)
    return system


def build_christ(space, rho=0.5, finest=None, coarsest=None, fit_boundary=True):
    """Christ-type cube system with ``rho in (0, 1)``.

    Generations run from ``coarsest`` (one cube) to ``finest`` (all
    singletons) unless given.  Level-``k`` centers form a greedy
    ``rho**k``-separated net.  The achieved constants ``c0`` and ``c1`` are
    measured exactly; ``c2`` and ``eta`` are fitted when ``fit_boundary``.
    """
    rho = float(rho)
    if not 0 < rho < 1:
        raise ParameterError(f"Christ scale must lie in (0, 1), got {rho}")
    # nets are always seeded from a level that covers the space; a finer
    # requested ``coarsest`` just drops the generations above it
    top = math.floor(math.log(max(space.diam, space.min_spacing)) / math.log(rho))
    while rho ** top <= space.diam:
        top -= 1
    coarsest = top if coarsest is None else int(coarsest)
    if finest is None:
        finest = math.ceil(math.log(space.min_spacing) / math.log(rho)) if space.n > 1 else coarsest
        while rho ** finest > space.min_spacing:
            finest += 1
    if finest < coarsest:
        raise ParameterError("finest generation must not be coarser than the coarsest")
    built = list(range(min(top, coarsest), finest + 1))
    nets, labels, parents = _build_levels(space, [rho ** k for k in built], 1.0)
    drop = built.index(coarsest)
    gens_coarse_first = built[drop:]
    lab, cen, par = _pack(gens_coarse_first, nets[drop:], labels[drop:], parents[drop:])
    system = ChristSystem(space, rho, gens_coarse_first[::-1], lab, cen, par)
    system.certify_partition_and_nesting()

    z, depth = {}, {}
    c0, c1 = math.inf, 0.0
    for k in system.generations:
        comp = _complement_distance(space, lab[k])
        n_cubes = cen[k].size
        # deepest point per cube, ties to the lowest index
        order = np.lexsort((np.arange(space.n), -comp, lab[k]))
        first = np.searchsorted(lab[k][order], np.arange(n_cubes))
        z[k] = order[first].astype(np.intp)
        depth[k] = comp[z[k]]
        finite = np.isfinite(depth[k])
        if finite.any():
            c0 = min(c0, float(depth[k][finite].min()) / rho ** k)
        c1 = max(c1, float(_cube_diameters(space, lab[k], n_cubes).max()) / rho ** k)
    system.z, system.depth = z, depth
    system.c0 = c0 if math.isfinite(c0) else 1.0
    system.c1 = c1
    if fit_boundary:
        system.c2, system.eta = fit_small_boundary(system)
    return system


def fit_small_boundary(system, t_grid=None, min_members=8):
    """Fit ``mu{x in Q : d(x, Q^c) <= t rho^k} <= c2 t^eta mu(Q)``.

    ``eta`` is the least-squares log-log slope of the worst boundary-layer
    fraction against ``t``; ``c2`` is then the smallest constant that makes
    the bound hold on every cube and ``t`` in the grid.  Generations whose
    typical cube holds fewer than ``min_members`` points are skipped.
    """
    space = system.space
    t_grid = np.geomspace(0.05, 1.0, 12) if t_grid is None else np.asarray(t_grid, dtype=float)
    worst = np.zeros(t_grid.size)
    for k in system.generations:
        n_cubes = system.n_k(k)
        if n_cubes < 2 or space.n / n_cubes < min_members:
            continue
        lab = system.labels[k]
        comp = _complement_distance(space, lab)
        mu_q = system.cube_measures(k)
        for i, t in enumerate(t_grid):
            layer = np.bincount(lab, weights=space.weights * (comp <= t * system.rho ** k),
                                minlength=n_cubes)
            worst[i] = max(worst[i], float((layer / mu_q).max()))
    ok = worst > 0
    if ok.sum() < 2:
        return None, None
    eta = float(np.polyfit(np.log(t_grid[ok]), np.log(worst[ok]), 1)[0])
    c2 = float((worst[ok] / t_grid[ok] ** eta).max())
    return c2, eta


# -- neighbour sets ---------------------------------------------------------


def neighbor_T(system, k, r, x):
    """Indices of generation-``k`` cubes meeting ``B(x, r)``."""
    system._check_generation(k)
    return np.unique(system.labels[k][system.space.ball(x, r)])


def neighbor_S(system, k, r, j):
    """Indices of generation-``k`` cubes meeting ``B(y, r)`` for some ``y`` in cube ``j``."""
    members = system.members(k, j)
    if members.size == 0:
        raise ParameterError(f"no cube {j} in generation {k}")
    near = system.space.set_distance(members) < r
    return np.unique(system.labels[k][near])


def neighbor_counts(system, k, r):
    """``(#T(x) for every point, #S(j) for every cube)`` at generation ``k``."""
    space = system.space
    lab = system.labels[k]
    n_cubes = system.n_k(k)
    M = space.membership(r).tocoo()
    pair_cube = np.unique(np.stack([M.row, lab[M.col]]), axis=1)
    t_counts = np.bincount(pair_cube[0], minlength=space.n)
    # cube j sees cube i iff some y in j has a ball point in i
    cube_pairs = np.unique(np.stack([lab[pair_cube[0]], pair_cube[1]]), axis=1)
    s_counts = np.bincount(cube_pairs[0], minlength=n_cubes)
    return t_counts, s_counts


# -- measure comparability ----------------------------------------------------


@dataclass
class ComparabilityReport:
    k: int
    r: float
    n1: float
    n2: float
    worst_eq12: float
    worst_eq13: float
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def certify_measure_comparability(system, k, r, geo):
    """Check ``mu(B(y,r)) <= N1 mu(E_j)`` for ``y`` in ``E_j`` and
    ``mu(E_i) <= N2 mu(E_j)`` for ``i`` in ``S(j)``.

    Slacks are relative: ``(bound - lhs) / bound``.  Violations are listed,
    not raised.
    """
    space = system.space
    card = cardinality_constants(k, r, geo, system.rho, space.kappa)
    lab = system.labels[k]
    mu_cube = system.cube_measures(k)
    ball_mu = space.ball_measures(r)
    bound12 = card.n1 * mu_cube[lab]
    slack12 = (bound12 - ball_mu) / bound12
    violations = [("eq12", int(y)) for y in np.flatnonzero(slack12 < 0)[:20]]

    M = space.membership(r).tocoo()
    pairs = np.unique(np.stack([lab[M.row], lab[M.col]]), axis=1)
    j, i = pairs
    bound13 = card.n2 * mu_cube[j]
    slack13 = (bound13 - mu_cube[i]) / bound13
    violations += [("eq13", int(a), int(b)) for a, b in zip(j[slack13 < 0][:20], i[slack13 < 0][:20])]
    return ComparabilityReport(k, float(r), card.n1, card.n2,
                               float(slack12.min()), float(slack13.min()), violations)
