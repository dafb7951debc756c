"""An indicator function with bounded fractional mean norm and growing weak norm.

Stage ``n`` selects generation-``n`` cubes ``Q^n_(beta_j)`` sitting at the
deepest points of coarse cubes ``Q^(g_n)_j``, ``g_n = -2^n - 1``, that keep
distance ``> c1 rho^(g_n)`` from the region ``F_n`` already used.  Each
stage's union ``E_n`` has measure in ``[m, m + w_n)`` with ``m = mu(E_1)``
and ``w_n = b b0 c1^delta rho^(n delta)``.  Far-apart stages add to the
weak norm like ``(count * m)^(1/alpha)`` while the amalgam norm of each
stage decays geometrically, so ``f = chi_(union E_n)`` separates the two
spaces.  On a finite model only the trend over the feasible stages is
certified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .amalgam import NormParams, amalgam_norm_r
from .dyadic import build_christ
from .errors import CertificationError, ParameterError
from .exponents import INF, recip
from .rearrange import SampledFunction, lorentz_quasinorm
from .space import Sampling, estimate_geometry, fit_phi, radius_grid


class WitnessInfeasible(CertificationError):
    """The space cannot host the requested stages; ``details['max_feasible_N']`` says how many it can."""


def coarse_generation(n):
    return -(2 ** n) - 1


def max_feasible_stage(space, rho):
    """Largest ``N`` with ``rho^(-2^N - 1) <= diam``."""
    N = 0
    while rho ** coarse_generation(N + 1) <= space.diam:
        N += 1
    return N


def _runs(idx):
    """Sorted indices as ``[[start, stop), ...]`` runs."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        return []
    cut = np.flatnonzero(np.diff(idx) != 1) + 1
    starts = np.concatenate([[0], cut])
    stops = np.concatenate([cut, [idx.size]])
    return [[int(idx[a]), int(idx[b - 1]) + 1] for a, b in zip(starts, stops)]


def _from_runs(runs):
    if not runs:
        return np.zeros(0, dtype=np.intp)
    return np.concatenate([np.arange(a, b) for a, b in runs]).astype(np.intp)


@dataclass
class WitnessConstants:
    """Fitted constants the construction and its checks rely on."""

    rho: float
    kappa: float
    c0: float
    c1: float
    d_mu: float
    delta_mu: float
    a: float
    b: float
    a0: float
    b0: float
    unit: float

    def bracket_width(self, n):
        return self.b * self.b0 * self.c1 ** self.delta_mu * self.rho ** (n * self.delta_mu)

    def first_stage_bounds(self):
        lo = self.a * self.a0 * self.c0 ** self.d_mu * self.rho ** self.d_mu
        hi = self.b * self.b0 * self.c1 ** self.delta_mu * self.rho ** self.delta_mu
        return lo, hi

    def r_n(self, n):
        """Radius below which no ball meets two selected cubes of stage ``n``."""
        k, c1, rho = self.kappa, self.c1, self.rho
        tail = k + 2 * k ** 3 * c1 + 2 * k ** 5 * c1 + k ** 4
        return rho ** n / (2 * k ** 4) * (rho ** (coarse_generation(n) - n) - tail)

    def stage_exponent(self, params):
        """``D (1/alpha - 1/q) + delta (1/q - 1/p)``."""
        q, a, p = params.q, params.alpha, params.p
        return self.d_mu * (recip(a) - recip(q)) + self.delta_mu * (recip(q) - recip(p))


@dataclass
class Stage:
    n: int
    generation: int
    avoided: list            # coarse cube ids forming F_n
    selected: list           # coarse cube ids J_n
    fine: list               # generation-n cube ids beta_j
    bracket: tuple           # [m, m + w_n)
    measure: float
    complete: bool
    members: list = field(default_factory=list)  # E_n as index runs
    cube_members: list = field(default_factory=list)  # index runs per selected fine cube
    separations: list = field(default_factory=list)  # d(Q_j, F_n) per selected j
    proximities: list = field(default_factory=list)  # d(z_j, Q^n_beta_j)

    def indices(self):
        return _from_runs(self.members)

    def to_dict(self):
        return {
            "n": self.n, "generation": self.generation, "avoided": self.avoided,
            "selected": self.selected, "fine": self.fine, "bracket": list(self.bracket),
            "measure": self.measure, "complete": self.complete, "members": self.members,
            "separations": self.separations, "proximities": self.proximities,
            "cube_members": self.cube_members,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["bracket"] = tuple(d["bracket"])
        return cls(**d)


@dataclass
class WitnessPlan:
    """Stage records plus the constants needed to recheck them."""

    space_name: str
    n0: int
    N: int
    m: float
    first_cube: int
    constants: WitnessConstants
    stages: list
    christ: object = None  # not serialised

    def stage(self, n):
        for s in self.stages:
            if s.n == n:
                return s
        raise ParameterError(f"no stage {n} in this plan")

    def union(self, space, upto=None, start=None):
        """Indicator of ``E_start ∪ ... ∪ E_upto``."""
        start = self.n0 if start is None else start
        upto = self.N if upto is None else upto
        idx = [s.indices() for s in self.stages if start <= s.n <= upto]
        idx = np.unique(np.concatenate(idx)) if idx else np.zeros(0, dtype=np.intp)
        return SampledFunction.indicator(space, idx, f"witness[{start}..{upto}]")

    def to_dict(self):
        return {
            "space": self.space_name, "n0": self.n0, "N": self.N, "m": self.m,
            "first_cube": self.first_cube, "constants": vars(self.constants).copy(),
            "stages": [s.to_dict() for s in self.stages],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(space_name=d["space"], n0=int(d["n0"]), N=int(d["N"]), m=float(d["m"]),
                   first_cube=int(d["first_cube"]), constants=WitnessConstants(**d["constants"]),
                   stages=[Stage.from_dict(s) for s in d["stages"]])


def fit_witness_constants(space, christ, N, sample=None):
    """Doubling, reverse doubling and profile constants over the radii the stages use."""
    rho = christ.rho
    lo = christ.c0 * rho ** N
    hi = min(christ.c1 * rho ** coarse_generation(N), space.diam / 4)
    lo = max(lo, space.min_spacing)
    sample = sample or Sampling()
    geo = estimate_geometry(space, (lo, max(hi, 2 * lo)), sample)
    unit = christ.c1 * rho  # small-radius envelope must reach every cube radius used
    stage_radii = [c * rho ** n for n in range(1, N + 1) for c in (christ.c0, christ.c1, 1.0)]
    radii = np.concatenate([radius_grid(lo, max(hi, 2 * lo), 8), stage_radii])
    phi = fit_phi(space, radii, geo, unit=unit)
    return WitnessConstants(
        rho=rho, kappa=space.kappa, c0=christ.c0, c1=christ.c1, d_mu=geo.d_mu,
        delta_mu=geo.delta_mu, a=phi.a, b=phi.b, a0=phi.a0, b0=phi.b0, unit=unit,
    )


def _cube_distances(space, labels, n_cubes, region):
    """``d(Q_j, region)`` for every cube ``j`` of a labelling."""
    dist = space.set_distance(region)
    out = np.full(n_cubes, math.inf)
    np.minimum.at(out, labels, dist)
    return out


def build_witness(space, christ=None, n0=1, N=4, rho=0.8, first_point=0, constants=None):
    """Run the staged construction; returns ``(f, plan)`` with ``f = chi_(E_n0 ∪ ... ∪ E_N)``.

    ``J_n`` is chosen greedily in coarse-cube index order until the stage
    measure reaches ``m``.  Raises :class:`WitnessInfeasible` when the space
    has no generation ``-2^N - 1``.
    """
    if not 1 <= n0 <= N:
        raise ParameterError("need 1 <= n0 <= N")
    rho = christ.rho if christ is not None else float(rho)
    top = max_feasible_stage(space, rho)
    if N > top:
        raise WitnessInfeasible(f"stage {N} needs scale rho^{coarse_generation(N)} "
                                f"= {rho ** coarse_generation(N):.6g} > diam {space.diam:.6g}",
                                max_feasible_N=top, requested_N=N)
    if christ is None:
        christ = build_christ(space, rho=rho, finest=N, coarsest=coarse_generation(N),
                              fit_boundary=False)
    for k in (N, coarse_generation(N)):
        christ._check_generation(k)
    const = constants or fit_witness_constants(space, christ, N)

    lab1 = christ.labels[1]
    first = int(lab1[first_point])
    e1 = christ.members(1, first)
    m = space.measure(e1)
    used = [e1]
    stages = [Stage(1, 1, [], [], [first], (m, m + const.bracket_width(1)), m, True,
                    members=_runs(e1), cube_members=[_runs(e1)])]
    for n in range(2, N + 1):
        g = coarse_generation(n)
        lab_g = christ.labels[g]
        region = np.unique(np.concatenate(used))
        avoided = np.unique(lab_g[region])
        region_f = np.flatnonzero(np.isin(lab_g, avoided))
        n_cubes = christ.n_k(g)
        dist = _cube_distances(space, lab_g, n_cubes, region_f)
        eligible = np.flatnonzero(dist > const.c1 * rho ** g)
        width = const.bracket_width(n)
        total, chosen, fine, seps, prox, pts = 0.0, [], [], [], [], []
        mu_fine = christ.cube_measures(n)
        for j in eligible:
            z = int(christ.z[g][j])
            beta = int(christ.labels[n][z])
            chosen.append(int(j))
            fine.append(beta)
            seps.append(float(dist[j]))
            prox.append(0.0)  # z lies in its own generation-n cube
            pts.append(christ.members(n, beta))
            total += float(mu_fine[beta])
            if total >= m:
                break
        members = np.unique(np.concatenate(pts)) if pts else np.zeros(0, dtype=np.intp)
        measure = space.measure(members) if members.size else 0.0
        stages.append(Stage(n, g, avoided.tolist(), chosen, fine, (m, m + width), measure,
                            measure >= m, members=_runs(members), cube_members=[_runs(c) for c in pts],
                            separations=seps, proximities=prox))
        used.append(region_f)
        used.append(members)
    plan = WitnessPlan(space.name, n0, N, m, first, const, stages, christ)
    return plan.union(space), plan


# -- certification ----------------------------------------------------------


def stage_critical_radius(space, plan, n):
    """``min_x`` of the second-smallest distance from ``x`` to the stage's cubes:
    a ball meets two cubes exactly when its radius exceeds this at its center."""
    st = plan.stage(n)
    christ = plan.christ
    if len(st.fine) < 2:
        return math.inf
    if christ is not None:
        cubes = [christ.members(n, b) for b in st.fine]
    else:
        cubes = _split_runs(st)
    D = np.stack([space.set_distance(c) for c in cubes])
    second = np.partition(D, 1, axis=0)[1]
    return float(second.min())


def _split_runs(stage):
    return [_from_runs(runs) for runs in stage.cube_members]


@dataclass
class DisjointnessReport:
    n: int
    r_n: float
    critical: float
    samples: int
    violations: list

    @property
    def ok(self):
        return not self.violations and self.critical >= self.r_n


def separation_ball_disjointness(space, plan, n, x=None, r=None, samples=256, seed=0):
    """Check that balls of radius ``<= r_n`` meet at most one selected cube of stage ``n``.

    The exhaustive part computes the critical radius over every center.
    Explicit ``(x, r)`` pairs, or ``samples`` seeded ones with ``r < r_n``,
    are also tested by direct ball queries.
    """
    st = plan.stage(n)
    rn = plan.constants.r_n(n)
    critical = stage_critical_radius(space, plan, n)
    christ = plan.christ
    cube_of = np.full(space.n, -1)
    cubes = [christ.members(n, b) for b in st.fine] if christ is not None else _split_runs(st)
    for i, c in enumerate(cubes):
        cube_of[c] = i
    if x is None:
        rng = np.random.default_rng(seed)
        xs = rng.integers(space.n, size=samples)
        rs = rng.random(samples) * max(rn, 0.0)
    else:
        xs, rs = np.atleast_1d(x), np.atleast_1d(r)
    violations = []
    for xi, ri in zip(xs, rs):
        if ri <= 0:
            continue
        met = np.unique(cube_of[space.ball(int(xi), float(ri))])
        met = met[met >= 0]
        if met.size > 1 and ri <= rn:
            violations.append((int(xi), float(ri), met.tolist()))
    return DisjointnessReport(n, rn, critical, len(xs), violations)


@dataclass
class WitnessCertificate:
    params: NormParams
    r_grid: np.ndarray
    stage_norms: dict          # n -> max_r r||chi_E_n||
    stage_measures: dict       # n -> mu(E_n)
    union_norms: dict          # N -> max_r r||f_N||
    weak_norms: dict           # N -> ||f_N||*_(alpha,inf)
    union_measures: dict       # N -> mu(union)
    exponent: float
    fitted_c: float
    fitted_c_printed: float


def certify_witness(space, plan, params=(1, 2, 4), n0=None, r_grid=None, per_decade=8):
    """Norms of each stage and of each partial union over a radius grid."""
    params = NormParams.of(params)
    if not params.q < params.alpha < params.p:
        raise ParameterError("the witness needs q < alpha < p")
    n0 = plan.n0 if n0 is None else n0
    if r_grid is None:
        r_grid = radius_grid(space.min_spacing, space.boundary_window(), per_decade)
    r_grid = np.asarray(r_grid, dtype=float)

    def sup_norm(f):
        return max(amalgam_norm_r(f, params, float(r)).value for r in r_grid)

    stage_norms, stage_measures = {}, {}
    for st in plan.stages:
        if st.n < n0:
            continue
        f = SampledFunction.indicator(space, st.indices())
        stage_norms[st.n] = sup_norm(f)
        stage_measures[st.n] = st.measure
    union_norms, weak_norms, union_measures = {}, {}, {}
    for N in range(n0, plan.N + 1):
        f = plan.union(space, upto=N, start=n0)
        union_norms[N] = sup_norm(f)
        weak_norms[N] = lorentz_quasinorm(f, params.alpha, INF)
        union_measures[N] = space.measure(np.flatnonzero(f.values))
    E = plan.constants.stage_exponent(params)
    rho = plan.constants.rho
    first = min(stage_norms)
    base = stage_measures[first] ** (1 / params.p)
    fitted = stage_norms[first] / (base * (rho ** first) ** E)
    fitted_printed = stage_norms[first] / (base * (rho ** -first) ** E)
    return WitnessCertificate(params, r_grid, stage_norms, stage_measures, union_norms,
                              weak_norms, union_measures, E, fitted, fitted_printed)


def record_witness(space, plan, cert, rec, samples=256):
    """Write every witness claim into a :class:`~fracmean.verify.Recorder`."""
    c = plan.constants
    tag = space.name
    P = cert.params
    lo, hi = c.first_stage_bounds()
    rec.bound("witness-first-stage", f"{tag}|lower", None, None, lo, plan.m)
    rec.bound("witness-first-stage", f"{tag}|upper", None, None, plan.m, hi)
    for st in plan.stages:
        fid = f"{tag}|n={st.n}"
        rec.bound("witness-brackets", f"{fid}|lower", None, None, st.bracket[0], st.measure)
        rec.strict("witness-brackets", f"{fid}|upper", None, None, st.measure, st.bracket[1])
        if st.n == 1:
            continue
        gap = c.c1 * c.rho ** st.generation
        for j, sep in zip(st.selected, st.separations):
            rec.strict("witness-separation", f"{fid}|j={j}", None, None, gap, sep)
        for j, d in zip(st.selected, st.proximities):
            rec.strict("witness-proximity", f"{fid}|j={j}", None, None, d, c.rho ** st.n)
        rep = separation_ball_disjointness(space, plan, st.n, samples=samples)
        # below the threshold r_n <= 0 the statement is vacuous
        rec.bound("witness-disjointness", fid, None, rep.r_n, rep.r_n, rep.critical,
                  degenerate=rep.r_n <= 0)
        rec.exact("witness-disjointness", f"{fid}|sampled", None, rep.r_n,
                  float(len(rep.violations)), 0.0, not rep.violations)
    first = min(cert.stage_norms)
    for n, S in cert.stage_norms.items():
        shape = cert.stage_measures[n] ** (1 / P.p)
        rec.bound("witness-stage-bound", f"{tag}|n={n}", P, None, S,
                  shape * (c.rho ** n) ** cert.exponent, cert.fitted_c, degenerate=n == first)
        rec.bound("witness-stage-bound-printed", f"{tag}|n={n}", P, None, S,
                  shape * (c.rho ** -n) ** cert.exponent, cert.fitted_c_printed, degenerate=n == first)
    Ns = sorted(cert.union_norms)
    base_N = Ns[1] if len(Ns) > 1 else Ns[0]
    for prev, N in zip(Ns, Ns[1:]):
        growth = (cert.union_measures[N] / cert.union_measures[prev]) ** (1 / P.alpha)
        rec.strict("witness-weak-growth", f"{tag}|N={N}", P, None,
                   cert.weak_norms[prev], cert.weak_norms[N])
        rec.bound("witness-weak-growth", f"{tag}|N={N}|rate", P, None,
                  growth, cert.weak_norms[N] / cert.weak_norms[prev])
        r_prev = cert.union_norms[prev] / cert.weak_norms[prev]
        r_next = cert.union_norms[N] / cert.weak_norms[N]
        rec.bound("witness-ratio-trend", f"{tag}|N={N}", P, None, r_next, r_prev, 1.1)
    for N in Ns:
        if N >= base_N:
            rec.bound("witness-amalgam-bounded", f"{tag}|N={N}", P, None,
                      cert.union_norms[N], cert.union_norms[base_N], 1.5)


def witness_reports(wconfig, rec):
    """Build, certify and record the witness described by a config block."""
    space = wconfig.space.build()
    _, plan = build_witness(space, n0=wconfig.n0, N=wconfig.N, rho=wconfig.rho)
    cert = certify_witness(space, plan, wconfig.params, per_decade=wconfig.per_decade)
    record_witness(space, plan, cert, rec)
    return plan, cert
