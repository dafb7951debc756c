"""Claim-level certification of the embeddings and equivalences between the norms.

Every check compares two computed sides.  A *bound* record asserts
``lhs <= constant * base``; an *equality* record asserts ``lhs == rhs`` to a
relative tolerance.  Claims are grouped into :class:`VerificationReport`
objects keyed by a stable claim id.

Claim kinds:

``explicit``
    asserted with a constant given by a closed formula (possibly built
    from fitted geometric constants).
``empirical``
    the constant is only known to exist; the report carries the corpus
    maximum and asserts finiteness or an explicit stability band.
``reported``
    computed and written to the ledger but never asserted (alternative
    readings of a formula).
"""

from __future__ import annotations

import fnmatch
import math
from dataclasses import dataclass, field

import numpy as np

from .amalgam import (
    NormParams, amalgam_norm_r, default_r_grid, dyadic_norm, euclidean_amalgam_norm,
    sandwich_constants,
)
from .dyadic import build_sawyer_wheeden, cardinality_constants, generation_index, neighbor_counts
from .errors import ParameterError
from .exponents import INF, fmt, recip
from .kernel import (
    averaging_kernel, bridge_sides, check_young_strong, check_young_weak, kernel_mixed_norm,
)
from .rearrange import (
    SampledFunction, layer_cake_power, lebesgue_norm, lorentz_norm, lorentz_quasinorm,
    weak_norm_by_levels,
)
from .space import estimate_doubling, fit_phi, radius_grid

#: relative tolerance for bounds: slack >= -TOLERANCE * (|lhs| + |rhs|)
TOLERANCE = 1e-9
#: relative tolerance for identities
EQUALITY_TOLERANCE = 1e-10

EXPLICIT, EMPIRICAL, REPORTED = "explicit", "empirical", "reported"
PASS, FAIL, DEGENERATE = "pass", "fail", "degenerate"

# claim id -> (kind, constant formula)
CLAIMS = {
    "null-exact": (EXPLICIT, "r||f|| = 0 iff f = 0"),
    "homogeneity": (EXPLICIT, "||c f|| = |c| ||f||"),
    "triangle": (EXPLICIT, "||f + g|| <= 1 * (||f|| + ||g||)"),
    "weak-two-routes": (EXPLICIT, "sup_t t^(1/p) f_*(t) = sup_a a lambda_f(a)^(1/p)"),
    "layer-cake": (EXPLICIT, "||f||_p^p = p int a^(p-1) lambda_f(a) da"),
    "q-monotone": (EXPLICIT, "r||f||_(q1,p,a) <= 1 * r||f||_(q2,p,a), q1 < q2 <= a"),
    "p-monotone-dyadic": (EXPLICIT, "||f||^d_(q,p2,a) <= 1 * ||f||^d_(q,p1,a), p1 < p2"),
    "p-monotone": (EXPLICIT, "r||f||_(q,p2,a) <= U(p2) L(p1) r||f||_(q,p1,a)"),
    "p-monotone-stability": (EMPIRICAL, "max_r ratio / min_r ratio <= U(p2) L(p1)"),
    "lebesgue-pinf": (EXPLICIT, "r||f||_(q,inf,a) <= 1 * ||f||_a"),
    "lebesgue-dyadic": (EXPLICIT, "||f||^d_(q,p,a) <= 1 * ||f||_a, p < inf"),
    "lebesgue-sandwich": (EXPLICIT, "r||f||_(q,p,a) <= U ||f||_a, p < inf"),
    "sandwich-pinf-lower": (EXPLICIT, "||f||^d <= N1* r||f||"),
    "sandwich-pinf-upper": (EXPLICIT, "r||f|| <= [C(2k)^D]^(1/a-1/q) N2* ||f||^d"),
    "sandwich-pfin-lower": (EXPLICIT, "||f||^d <= N1*^((1/p)(1/q-1/a+1)) r||f||"),
    "sandwich-pfin-upper": (EXPLICIT, "r||f|| <= (N2*^(p/q-1) [C(2k)^D]^(p/q-p/a+1) N2* N3*)^(1/p) ||f||^d"),
    "cardinality-ball-cube": (EXPLICIT, "mu(B(y,r)) <= N1(k,r) mu(E_j), y in E_j"),
    "cardinality-cube-cube": (EXPLICIT, "mu(E_i) <= N2(k,r) mu(E_j), i in S(j)"),
    "cardinality-T": (EXPLICIT, "#T(x) <= N2(k,r)"),
    "cardinality-S": (EXPLICIT, "#S(j) <= N3(k,r)"),
    "reverse-qap-dyadic": (EXPLICIT, "||f||^d_(a,a,a) = ||f||_a"),
    "reverse-qap": (EXPLICIT, "||f||_a <= L r||f||_(a,a,a)"),
    "reverse-qa-pinf": (EXPLICIT, "||f||_a <= 1 * sup_r r||f||_(a,a,inf)"),
    "reverse-qa-pfin-local": (EXPLICIT, "||f chi_B(y,r)||_a <= N2*^(1/a-1/p) L r||f||_(a,a,p)"),
    "reverse-qa-pfin": (EXPLICIT, "||f||_a <= N2*^(1/a-1/p) L sup_r r||f||_(a,a,p)"),
    "reverse-ap-sup": (EXPLICIT, "||f||_inf <= 1 * r_min||f||_(q,inf,inf)"),
    "reverse-ap-lp": (EXPLICIT, "||f||_p <= 1 * r_min||f||_(q,p,p) (f_r limit)"),
    "young-weak": (EXPLICIT, "||T|g| ||*_(c,inf) <= 2^c (t/(t-1))^b (t/c)^(c(1-t)b/(t b')) ||K||_b ||g||*_(t,inf)"),
    "kernel-bridge": (EXPLICIT, "r||f||_(q,p,a) = ||T(|f|^q)||_(p/q)^(1/q)"),
    "kernel-column": (EXPLICIT, "max_y ||K(., y)||_b = 1"),
    "kernel-row": (EXPLICIT, "max_x ||K(x, .)||_b <= [C(2k)^D]^(1/b)"),
    "lorentz-strong": (EMPIRICAL, "r||f||_(q,p,a) <= (C_emp ||K||_b)^(1/q) ||f||*_(a,p)"),
    "kolmogorov-pinf-dyadic": (EXPLICIT, "||f||^d_(q,inf,a) <= (a/(a-q))^(1/q) ||f||*_(a,inf), any generation"),
    "kolmogorov-pinf": (EXPLICIT, "r||f||_(q,inf,a) <= (a/(a-q))^(1/q) ||f||*_(a,inf)"),
    "kolmogorov-pfin-dyadic": (EXPLICIT, "||f||^d <= S^(1/q-1/a) b^(1/q-1/a) (a/(a-q))^(1/q-a/(qp)) "
                                         "(C' s^p/(s^(p-a)-1))^(1/p) ||f||*_(a,inf)"),
    "kolmogorov-pfin": (EXPLICIT, "r||f|| <= U * [kolmogorov-pfin-dyadic constant] ||f||*_(a,inf)"),
    "kolmogorov-pfin-printed": (REPORTED, "||f||^d <= S^(1/q-1/a) (a/(a-q))^((1/q)(1-a/p)) "
                                          "(s^(2a-p)/(s^(p-a)-1))^(1/p) C^(1/p) ||f||*_(a,inf)"),
    "euclidean-comparability": (EMPIRICAL, "max_r F(r) <= 2 * min_r F(r), F = worst two-sided ball/cube ratio"),
    "witness-first-stage": (EXPLICIT, "a a0 c0^D rho^D <= mu(E_1) <= b b0 c1^delta rho^delta"),
    "witness-brackets": (EXPLICIT, "m <= mu(E_n) < m + b b0 c1^delta rho^(n delta)"),
    "witness-separation": (EXPLICIT, "d(Q_j, F_n) > c1 rho^(-2^n-1)"),
    "witness-proximity": (EXPLICIT, "d(z_j, Q^n_(beta_j)) < rho^n"),
    "witness-disjointness": (EXPLICIT, "B(x, r) meets two selected cubes only if r > r_n"),
    "witness-stage-bound": (EMPIRICAL, "max_r r||chi_E_n|| <= C mu(E_n)^(1/p) (rho^n)^(D(1/a-1/q)+delta(1/q-1/p))"),
    "witness-stage-bound-printed": (REPORTED, "max_r r||chi_E_n|| <= C mu(E_n)^(1/p) (rho^-n)^(D(1/a-1/q)+delta(1/q-1/p))"),
    "witness-weak-growth": (EXPLICIT, "||f_N||*_(a,inf) strictly increasing in N"),
    "witness-amalgam-bounded": (EXPLICIT, "max_r r||f_N|| <= 1.5 * max_r r||f_N0||"),
    "witness-ratio-trend": (EXPLICIT, "amalgam/weak ratio nonincreasing in N within 10%"),
}


def list_claims():
    """``[(claim id, kind, formula)]`` in registry order."""
    return [(cid, kind, formula) for cid, (kind, formula) in CLAIMS.items()]


def select_claims(patterns):
    """Claim ids matching any of the glob ``patterns`` (all claims for ``None``)."""
    if patterns is None:
        return list(CLAIMS)
    if isinstance(patterns, str):
        patterns = [patterns]
    return [c for c in CLAIMS if any(fnmatch.fnmatchcase(c, p) for p in patterns)]


# -- records and reports ----------------------------------------------------


@dataclass(frozen=True)
class CaseRecord:
    """One compared pair.  ``rhs`` already includes ``constant``; ``best`` is
    the smallest constant this case alone would need."""

    claim: str
    function: str
    q: float | None
    alpha: float | None
    p: float | None
    r: float | None
    lhs: float
    rhs: float
    constant: float
    slack: float
    verdict: str
    best: float = math.nan

    @property
    def relative_slack(self):
        scale = abs(self.lhs) + abs(self.rhs)
        return self.slack / scale if scale > 0 else 0.0


@dataclass
class VerificationReport:
    claim: str
    kind: str
    formula: str
    records: list = field(default_factory=list)

    @property
    def verdict(self):
        live = [r for r in self.records if r.verdict != DEGENERATE]
        if any(r.verdict == FAIL for r in live):
            return FAIL
        if self.records and not live:
            return DEGENERATE
        return PASS

    @property
    def asserted(self):
        return self.kind != REPORTED

    @property
    def empirical_constant(self):
        vals = [r.best for r in self.records if r.verdict != DEGENERATE and not math.isnan(r.best)]
        return max(vals) if vals else math.nan

    @property
    def worst_relative_slack(self):
        vals = [r.relative_slack for r in self.records if r.verdict != DEGENERATE]
        return min(vals) if vals else 0.0

    @property
    def failures(self):
        return [r for r in self.records if r.verdict == FAIL]


def _ratio(lhs, base):
    if lhs == 0:
        return 0.0
    return lhs / base if base > 0 else math.inf


class Recorder:
    """Collects records per claim, applying constant overrides.

    ``overrides`` maps claim-id globs to a factor multiplying the claim's
    explicit constant; ``claims`` restricts which claims are recorded.
    """

    def __init__(self, claims=None, overrides=None, tolerance=TOLERANCE):
        self.enabled = set(select_claims(claims))
        self.overrides = dict(overrides or {})
        self.tolerance = tolerance
        self.reports = {}

    def wants(self, claim):
        return claim in self.enabled

    def factor(self, claim):
        f = 1.0
        for pattern, value in self.overrides.items():
            if fnmatch.fnmatchcase(claim, pattern):
                f *= float(value)
        return f

    def _report(self, claim):
        if claim not in self.reports:
            kind, formula = CLAIMS[claim]
            self.reports[claim] = VerificationReport(claim, kind, formula)
        return self.reports[claim]

    def _add(self, claim, fid, params, r, lhs, rhs, constant, slack, verdict, best):
        q = a = p = None
        if params is not None:
            q, a, p = params.q, params.alpha, params.p
        rec = CaseRecord(claim, str(fid), q, a, p, None if r is None else float(r),
                         float(lhs), float(rhs), float(constant), float(slack), verdict, float(best))
        self._report(claim).records.append(rec)
        return rec

    def bound(self, claim, fid, params, r, lhs, base, constant=1.0, degenerate=False):
        """Assert ``lhs <= constant * base``."""
        if not self.wants(claim):
            return None
        constant = constant * self.factor(claim)
        rhs = constant * base if base != 0 else 0.0
        slack = rhs - lhs if math.isfinite(rhs) or rhs != lhs else 0.0
        if degenerate:
            verdict = DEGENERATE
        elif math.isnan(slack) or not math.isfinite(lhs):
            verdict = FAIL
        else:
            verdict = PASS if slack >= -self.tolerance * (abs(lhs) + abs(rhs)) else FAIL
        return self._add(claim, fid, params, r, lhs, rhs, constant, slack, verdict, _ratio(lhs, base))

    def strict(self, claim, fid, params, r, lhs, base, constant=1.0, degenerate=False):
        """Assert ``lhs < constant * base``."""
        if not self.wants(claim):
            return None
        constant = constant * self.factor(claim)
        rhs = constant * base
        slack = rhs - lhs if rhs != lhs else 0.0
        if degenerate:
            verdict = DEGENERATE
        else:
            verdict = PASS if lhs < rhs else FAIL
        return self._add(claim, fid, params, r, lhs, rhs, constant, slack, verdict, _ratio(lhs, base))

    def equal(self, claim, fid, params, r, lhs, rhs, tol=EQUALITY_TOLERANCE, degenerate=False):
        """Assert ``lhs == rhs`` to relative ``tol``; slack is ``-|lhs - rhs|``."""
        if not self.wants(claim):
            return None
        constant = self.factor(claim)
        rhs = rhs * constant
        gap = abs(lhs - rhs)
        ok = gap <= tol * max(abs(lhs), abs(rhs)) or (lhs == rhs)
        verdict = DEGENERATE if degenerate else (PASS if ok else FAIL)
        best = lhs / rhs if rhs else (1.0 if lhs == 0 else math.inf)
        return self._add(claim, fid, params, r, lhs, rhs, constant, -gap, verdict, best)

    def exact(self, claim, fid, params, r, lhs, rhs, ok):
        """Record a logical check (no constant)."""
        if not self.wants(claim):
            return None
        return self._add(claim, fid, params, r, lhs, rhs, 1.0, 0.0 if ok else -1.0,
                         PASS if ok else FAIL, math.nan)

    def extend(self, reports):
        for rep in reports:
            if not self.wants(rep.claim):
                continue
            self._report(rep.claim).records.extend(rep.records)

    def result(self):
        order = list(CLAIMS)
        return [self.reports[c] for c in order if c in self.reports]


# -- per-space context ------------------------------------------------------


class SpaceContext:
    """Geometry shared by every check on one space.

    ``geo`` holds doubling constants measured over the full radius range
    (half the minimum spacing up to the diameter), so ball-ratio bounds
    hold at every scale the checks touch.  ``system`` is a certified
    dyadic system whose finest generation covers ``m_r`` for every grid
    radius.
    """

    def __init__(self, space, per_decade=8, r_grid=None, rho=None):
        self.space = space
        self.kappa = space.kappa
        window = (space.min_spacing / 2, max(space.diam, space.min_spacing))
        self.geo = estimate_doubling(space, window)
        grid = default_r_grid(space, per_decade) if r_grid is None else np.asarray(r_grid, float)
        if grid.size == 0:
            raise ParameterError("empty radius grid")
        self.r_grid = grid
        rho = 8 * self.kappa ** 5 if rho is None else rho
        m = min(generation_index(float(r), rho, self.kappa) for r in grid)
        self.system = build_sawyer_wheeden(space, m, rho=rho)
        self.rho = self.system.rho
        self._phi = None

    def m_r(self, r):
        return generation_index(float(r), self.rho, self.kappa)

    def card(self, r):
        return cardinality_constants(self.m_r(r), r, self.geo, self.rho, self.kappa)

    def sandwich(self, params, r):
        return sandwich_constants(params, self.card(r), self.geo, self.kappa)

    @property
    def extended_grid(self):
        """The radius grid continued past the diameter (balls eventually cover the space)."""
        top = 4 * self.kappa * max(self.space.diam, self.space.min_spacing)
        extra = radius_grid(float(self.r_grid[-1]), top, 4)
        return np.unique(np.concatenate([self.r_grid, extra]))

    @property
    def phi(self):
        """Radial profile tabulated on the grid and at every ``rho^(m_r + 1)``."""
        if self._phi is None:
            cube_radii = [self.rho ** (self.m_r(r) + 1) for r in self.r_grid]
            self._phi = fit_phi(self.space, np.concatenate([self.r_grid, cube_radii]))
        return self._phi


def _fid(f):
    return f.name or "f"


# -- individual checks ------------------------------------------------------


def check_null(f, params, r, rec=None):
    """``r||f|| = 0`` exactly when ``f = 0``."""
    rec = rec or Recorder()
    params = NormParams.of(params)
    value = amalgam_norm_r(f, params, r).value
    rec.exact("null-exact", _fid(f), params, r, value, 0.0, (value == 0.0) == f.is_zero())
    return rec.result()


LORENTZ_NORM_PAIRS = ((2.0, 1.0), (2.0, 2.0), (3.0, 2.0), (2.0, INF), (4.0, INF))
LORENTZ_QUASI_PAIRS = ((1.0, 1.0), (2.0, 1.0), (2.0, 2.0), (3.0, 2.0))


def _norm_family(ctx, params_list):
    """``[(label, params, r, callable f -> value)]`` for the axiom checks."""
    out = []
    for params in params_list:
        for r in ctx.r_grid[:: max(1, ctx.r_grid.size // 4)]:
            r = float(r)
            k = ctx.m_r(r)
            out.append(("amalgam", params, r, lambda f, P=params, R=r: amalgam_norm_r(f, P, R).value))
            out.append(("dyadic", params, r,
                        lambda f, P=params, K=k: dyadic_norm(f, P, ctx.system, K).value))
    for p, q in LORENTZ_NORM_PAIRS:
        out.append((f"lorentz({fmt(p)},{fmt(q)})", None, None, lambda f, P=p, Q=q: lorentz_norm(f, P, Q)))
    for p, q in LORENTZ_QUASI_PAIRS:
        out.append((f"lorentz*({fmt(p)},{fmt(q)})", None, None,
                    lambda f, P=p, Q=q: lorentz_quasinorm(f, P, Q)))
    return out


HOMOGENEITY_SCALARS = (0.125, -3.7, 0.6 - 0.8j, 1e-200)


def check_norm_axioms(ctx, functions, params_list, rec=None):
    """Absolute homogeneity and the triangle inequality for every norm family."""
    rec = rec or Recorder()
    family = _norm_family(ctx, params_list)
    n = len(functions)
    for i, f in enumerate(functions):
        g = functions[(i + 1) % n] if n > 1 else f
        h = f + g
        for label, params, r, norm in family:
            nf = norm(f)
            for c in HOMOGENEITY_SCALARS:
                rec.equal("homogeneity", f"{_fid(f)}|{label}|c={c}", params, r,
                          norm(f.scaled(c)), abs(c) * nf, tol=1e-12)
            rec.bound("triangle", f"{_fid(f)}+{_fid(g)}|{label}", params, r, norm(h), nf + norm(g))
    return rec.result()


def check_lorentz_identities(f, exponents=(1.0, 1.5, 2.0, 3.0, 4.5), rec=None):
    """Weak norm by rearrangement vs by levels; ``L^p`` norm by layer cake."""
    rec = rec or Recorder()
    for p in exponents:
        rec.equal("weak-two-routes", f"{_fid(f)}|p={fmt(p)}", None, None,
                  lorentz_quasinorm(f, p, INF), weak_norm_by_levels(f, p), tol=1e-12)
        if f.is_zero():
            rec.equal("layer-cake", f"{_fid(f)}|p={fmt(p)}", None, None, layer_cake_power(f, p), 0.0)
            continue
        # compare in units of max|f| so tiny functions keep their precision
        unit = SampledFunction(f.space, f.modulus / f.peak)
        rec.equal("layer-cake", f"{_fid(f)}|p={fmt(p)}", None, None,
                  layer_cake_power(unit, p), lebesgue_norm(unit, p) ** p)
    return rec.result()


def check_q_monotone(f, q1, q2, params, r, rec=None):
    """``r||f||_(q1,p,alpha) <= r||f||_(q2,p,alpha)`` with constant 1."""
    rec = rec or Recorder()
    params = NormParams.of(params)
    if not q1 < q2 <= params.alpha:
        raise ParameterError("need q1 < q2 <= alpha")
    lo = amalgam_norm_r(f, params.replace(q=q1), r).value
    hi = amalgam_norm_r(f, params.replace(q=q2), r).value
    rec.bound("q-monotone", f"{_fid(f)}|q1={fmt(q1)}", params.replace(q=q2), r, lo, hi)
    return rec.result()


def check_p_monotone(f, p1, p2, params, ctx, rec=None):
    """``p``-monotonicity at the dyadic level (constant 1) and at each scale
    (constant ``U(p2) L(p1)`` from the two sandwich bounds)."""
    rec = rec or Recorder()
    params = NormParams.of(params)
    if not params.alpha <= p1 < p2:
        raise ParameterError("need alpha <= p1 < p2")
    P1, P2 = params.replace(p=p1), params.replace(p=p2)
    fid = f"{_fid(f)}|p1={fmt(p1)}"
    ratios = []
    for r in ctx.r_grid:
        r = float(r)
        k = ctx.m_r(r)
        rec.bound("p-monotone-dyadic", fid, P2, r,
                  dyadic_norm(f, P2, ctx.system, k).value, dyadic_norm(f, P1, ctx.system, k).value)
        a1 = amalgam_norm_r(f, P1, r).value
        a2 = amalgam_norm_r(f, P2, r).value
        const = ctx.sandwich(P2, r).upper * ctx.sandwich(P1, r).lower
        rec.bound("p-monotone", fid, P2, r, a2, a1, const)
        if a1 > 0:
            ratios.append((r, a2 / a1))
    if ratios:
        # spread of the per-scale constant, against the width of the sandwich band
        vals = [v for _, v in ratios]
        band = max(ctx.sandwich(P2, r).upper * ctx.sandwich(P1, r).lower for r, _ in ratios)
        rec.bound("p-monotone-stability", fid, P2, None, max(vals) / min(vals), 1.0, band)
    return rec.result()


def check_lebesgue_embedding(f, params, ctx, rec=None):
    """Domination by ``||f||_alpha``: constant 1 for the ``p = inf`` scale norm
    and for the dyadic norm, the sandwich constant at each scale otherwise."""
    rec = rec or Recorder()
    params = NormParams.of(params)
    la = lebesgue_norm(f, params.alpha)
    fid = _fid(f)
    collapse = params.q == params.alpha == params.p
    for r in ctx.r_grid:
        r = float(r)
        if params.p == INF:
            rec.bound("lebesgue-pinf", fid, params, r, amalgam_norm_r(f, params, r).value, la)
            continue
        d = dyadic_norm(f, params, ctx.system, ctx.m_r(r)).value
        rec.bound("lebesgue-dyadic", fid, params, r, d, la, degenerate=collapse)
        rec.bound("lebesgue-sandwich", fid, params, r, amalgam_norm_r(f, params, r).value, la,
                  ctx.sandwich(params, r).upper)
    return rec.result()


def check_sandwich(f, params, ctx, rec=None):
    """Both equivalence bounds between the scale-``r`` and dyadic norms at ``k = m_r``."""
    rec = rec or Recorder()
    params = NormParams.of(params)
    tag = "pinf" if params.p == INF else "pfin"
    fid = _fid(f)
    for r in ctx.r_grid:
        r = float(r)
        k = ctx.m_r(r)
        sc = ctx.sandwich(params, r)
        a = amalgam_norm_r(f, params, r)
        d = dyadic_norm(f, params, ctx.system, k).value
        rec.bound(f"sandwich-{tag}-lower", fid, params, r, d, a.value, sc.lower, degenerate=a.boundary_flag)
        rec.bound(f"sandwich-{tag}-upper", fid, params, r, a.value, d, sc.upper, degenerate=a.boundary_flag)
    return rec.result()


def check_cardinality(ctx, generations=None, radii=None, rec=None):
    """Measure comparability and neighbour-count bounds, exhaustive over points and cubes."""
    rec = rec or Recorder()
    space, system = ctx.space, ctx.system
    gens = list(system.generations[:3]) if generations is None else list(generations)
    if radii is None:
        idx = np.unique(np.linspace(0, ctx.r_grid.size - 1, 5).round().astype(int))
        radii = ctx.r_grid[idx]
    for k in gens:
        lab = system.labels[k]
        mu_cube = system.cube_measures(k)
        for r in radii:
            r = float(r)
            card = cardinality_constants(k, r, ctx.geo, ctx.rho, ctx.kappa)
            fid = f"{space.name}|k={k}"
            ball = space.ball_measures(r)
            rec.bound("cardinality-ball-cube", fid, None, r, float((ball / mu_cube[lab]).max()), 1.0, card.n1)
            M = space.membership(r).tocoo()
            pairs = np.unique(np.stack([lab[M.row], lab[M.col]]), axis=1)
            worst = float((mu_cube[pairs[1]] / mu_cube[pairs[0]]).max())
            rec.bound("cardinality-cube-cube", fid, None, r, worst, 1.0, card.n2)
            t_counts, s_counts = neighbor_counts(system, k, r)
            rec.bound("cardinality-T", fid, None, r, float(t_counts.max()), 1.0, card.n2)
            rec.bound("cardinality-S", fid, None, r, float(s_counts.max()), 1.0, card.n3)
    return rec.result()


def _local_lebesgue(f, a, r):
    """``max_y ||f chi_(B(y, r))||_a``."""
    space = f.space
    u = f.modulus / f.peak
    if a == INF:
        return float(space.ball_max(u, r).max()) * f.peak
    return float(space.ball_sums(u ** a * space.weights, r).max()) ** (1.0 / a) * f.peak


def check_reverse_embedding(f, params, ctx, rec=None):
    """``||f||_alpha <= C ||f||_(q,p,alpha)`` when ``q = alpha`` or ``alpha = p``.

    * ``q = alpha = p``: the dyadic norm equals ``||f||_alpha``; ``C`` is the
      sandwich lower constant.
    * ``q = alpha < p = inf``: ``C = 1`` (balls eventually cover the space).
    * ``q = alpha < p < inf``: ``C = N2*^(1/alpha - 1/p) L``.
    * ``q < alpha = p``: ``|f| = f_r`` once balls are single points, so
      ``C = 1`` at the finest grid radius for both ``L^inf`` and ``L^p``.
    """
    rec = rec or Recorder()
    params = NormParams.of(params)
    q, a, p = params.q, params.alpha, params.p
    fid = _fid(f)
    la = lebesgue_norm(f, a)
    if q == a == p:
        for k in ctx.system.generations:
            rec.equal("reverse-qap-dyadic", f"{fid}|k={k}", params, None,
                      dyadic_norm(f, params, ctx.system, k).value, la)
        for r in ctx.r_grid:
            r = float(r)
            rec.bound("reverse-qap", fid, params, r, la, amalgam_norm_r(f, params, r).value,
                      ctx.sandwich(params, r).lower)
    elif q == a and p == INF:
        sup = max(amalgam_norm_r(f, params, float(r)).value for r in ctx.extended_grid)
        rec.bound("reverse-qa-pinf", fid, params, None, la, sup)
    elif q == a:
        best_sup = 0.0
        const = None
        for r in ctx.r_grid:
            r = float(r)
            card = ctx.card(r)
            c = card.n2_star ** (recip(a) - recip(p)) * ctx.sandwich(params, r).lower
            const = c if const is None else max(const, c)
            amal = amalgam_norm_r(f, params, r).value
            rec.bound("reverse-qa-pfin-local", fid, params, r,
                      0.0 if f.is_zero() else _local_lebesgue(f, a, r), amal, c)
        for r in ctx.extended_grid:
            best_sup = max(best_sup, amalgam_norm_r(f, params, float(r)).value)
        rec.bound("reverse-qa-pfin", fid, params, None, la, best_sup, const)
    elif a == p:
        r0 = float(ctx.r_grid[0])
        rec.bound("reverse-ap-sup", fid, params, r0, lebesgue_norm(f, INF),
                  amalgam_norm_r(f, NormParams(q, INF, INF), r0).value)
        if p < INF:
            rec.bound("reverse-ap-lp", fid, params, r0, lebesgue_norm(f, p),
                      amalgam_norm_r(f, params, r0).value)
    return rec.result()


YOUNG_TRIPLES = ((2.0, 4.0 / 3.0, 4.0), (1.5, 1.5, 3.0), (4.0 / 3.0, 2.0, 4.0), (1.0, 2.0, 2.0))


def check_young_weak_family(g, ctx, radii=None, triples=YOUNG_TRIPLES, rec=None):
    """Weak-type Young inequality with the explicit constant, for both
    averaging-kernel centerings."""
    rec = rec or Recorder()
    radii = ctx.r_grid[:: max(1, ctx.r_grid.size // 3)] if radii is None else radii
    for r in radii:
        for beta, t, gamma in triples:
            for centered in ("y", "x"):
                K = averaging_kernel(ctx.space, float(r), beta, centered=centered)
                rep = check_young_weak(g, K, beta, t, gamma)
                base = rep.rhs / rep.constant if rep.constant else 0.0
                rec.bound("young-weak", f"{_fid(g)}|{centered}|b={beta:g},t={t:g},c={gamma:g}",
                          None, float(r), rep.lhs, base, rep.constant)
    return rec.result()


def _bridge_beta(params):
    ib = 1.0 - params.q * recip(params.alpha) + params.q * recip(params.p)
    return 1.0 / ib if ib > 0 else INF


def check_kernel_bridge(f, params, ctx, radii=None, rec=None):
    """The averaging-kernel identity for the scale-``r`` norm and the kernel's
    column and row norms."""
    rec = rec or Recorder()
    params = NormParams.of(params)
    if params.q == INF:
        return rec.result()
    beta = _bridge_beta(params)
    radii = ctx.r_grid if radii is None else radii
    for r in radii:
        r = float(r)
        lhs, rhs = bridge_sides(f, params, r)
        rec.equal("kernel-bridge", _fid(f), params, r, lhs, rhs)
    return rec.result()


def check_kernel_norms(ctx, params_list, rec=None):
    rec = rec or Recorder()
    bound = ctx.geo.ball_ratio_constant
    for params in params_list:
        params = NormParams.of(params)
        if params.q == INF:
            continue
        beta = _bridge_beta(params)
        for r in ctx.r_grid:
            r = float(r)
            K = averaging_kernel(ctx.space, r, beta)
            _, col, row = kernel_mixed_norm(K, beta, parts=True)
            fid = f"{ctx.space.name}|b={fmt(beta)}"
            rec.equal("kernel-column", fid, params, r, col, 1.0)
            rec.bound("kernel-row", fid, params, r, row, 1.0, bound ** recip(beta))
    return rec.result()


def check_lorentz_strong(functions, params, ctx, rec=None):
    """Scale-``r`` norm against ``||f||*_(alpha,p)`` through the kernel bridge,
    with the strong-type constant taken as the corpus maximum ratio."""
    rec = rec or Recorder()
    params = NormParams.of(params)
    q, a, p = params.q, params.alpha, params.p
    if not q < a < p:
        return rec.result()
    beta, t, gamma = _bridge_beta(params), a / q, p / q
    rows = []
    for r in ctx.r_grid:
        r = float(r)
        K = averaging_kernel(ctx.space, r, beta)
        kn = kernel_mixed_norm(K, beta)
        for f in functions:
            if f.is_zero():
                rows.append((f, r, 0.0, 0.0, 0.0))
                continue
            g = SampledFunction(f.space, (f.modulus / f.peak) ** q)
            ratio = check_young_strong(g, K, beta, t, gamma).ratio
            lhs = amalgam_norm_r(f, params, r).value
            base = kn ** (1.0 / q) * lorentz_quasinorm(f, a, p)
            rows.append((f, r, ratio, lhs, base))
    c_emp = max((row[2] for row in rows), default=0.0)
    if not math.isfinite(c_emp):
        c_emp = math.inf
    for f, r, _, lhs, base in rows:
        rec.bound("lorentz-strong", _fid(f), params, r, lhs, base, c_emp ** (1.0 / q))
    return rec.result()


def kolmogorov_constants(params, ctx, r, s=2.0):
    """``(re-derived, as printed)`` dyadic-level constants for ``q < alpha < p < inf``.

    Both multiply ``||f||*_(alpha,inf)``.  The re-derived value counts the
    top shell ``s^-1 < d_j <= 1`` and keeps the signs of the exponents;
    the ``b`` and ``phi`` factors of the count bound cancel there.
    """
    q, a, p = params.q, params.alpha, params.p
    k = ctx.m_r(r)
    radius = ctx.rho ** (k + 1)
    phi = ctx.phi.value(radius)
    b = ctx.phi.b
    sup_ratio = float((phi / ctx.system.cube_measures(k)).max())
    e = recip(q) - recip(a)
    kol = a / (a - q)
    head = sup_ratio ** e
    c_prime = 4 ** (a / q) * a / (3 * (a - q))
    derived = (head * b ** e * kol ** (1 / q - a / (q * p))
               * (c_prime * s ** p / (s ** (p - a) - 1)) ** (1 / p))
    c_printed = 4 ** (a / q) * a * b ** (a / q - 1) / (3 * (a - q))
    printed = (head * kol ** ((1 / q) * (1 - a / p))
               * (s ** (2 * a - p) / (s ** (p - a) - 1)) ** (1 / p) * c_printed ** (1 / p))
    return derived, printed


def check_kolmogorov(f, params, ctx, s=2.0, rec=None):
    """Scale and dyadic norms against ``||f||*_(alpha,inf)`` for ``q < alpha``."""
    rec = rec or Recorder()
    params = NormParams.of(params)
    q, a, p = params.q, params.alpha, params.p
    if not q < a:
        return rec.result()
    fid = _fid(f)
    A = lorentz_quasinorm(f, a, INF)
    kol = (a / (a - q)) ** (1.0 / q)
    pinf = params.replace(p=INF)
    for k in ctx.system.generations:
        rec.bound("kolmogorov-pinf-dyadic", f"{fid}|k={k}", pinf, None,
                  dyadic_norm(f, pinf, ctx.system, k).value, A, kol)
    for r in ctx.r_grid:
        r = float(r)
        rec.bound("kolmogorov-pinf", fid, pinf, r, amalgam_norm_r(f, pinf, r).value, A, kol)
    if p == INF or not a < p:
        return rec.result()
    for r in ctx.r_grid:
        r = float(r)
        derived, printed = kolmogorov_constants(params, ctx, r, s)
        d = dyadic_norm(f, params, ctx.system, ctx.m_r(r)).value
        rec.bound("kolmogorov-pfin-dyadic", fid, params, r, d, A, derived)
        rec.bound("kolmogorov-pfin-printed", fid, params, r, d, A, printed)
        rec.bound("kolmogorov-pfin", fid, params, r, amalgam_norm_r(f, params, r).value, A,
                  ctx.sandwich(params, r).upper * derived)
    return rec.result()


def check_euclidean(functions, params_list, ctx, rec=None):
    """Ball-based vs half-open-cube norms on lattice models: the worst
    two-sided ratio per radius must stay within a factor 2 band over the grid."""
    rec = rec or Recorder()
    if ctx.space.grid is None:
        return rec.result()
    factors = []
    for r in ctx.r_grid:
        r = float(r)
        worst = 1.0
        for params in params_list:
            for f in functions:
                if f.is_zero():
                    continue
                ball = amalgam_norm_r(f, params, r).value
                cube = euclidean_amalgam_norm(f, params, r).value
                worst = max(worst, ball / cube, cube / ball)
        factors.append((r, worst))
    low = min(v for _, v in factors)
    for r, v in factors:
        rec.bound("euclidean-comparability", ctx.space.name, None, r, v, low, 2.0)
    return rec.result()


# -- suite ------------------------------------------------------------------


def run_checks(ctx, functions, params_list, claims=None, overrides=None, s=2.0):
    """Every function-level check on one space; returns reports in registry order."""
    rec = Recorder(claims, overrides)
    params_list = [NormParams.of(p) for p in params_list]
    check_cardinality(ctx, rec=rec)
    check_kernel_norms(ctx, params_list, rec=rec)
    if functions:
        check_norm_axioms(ctx, functions, params_list, rec=rec)
        check_euclidean(functions, params_list, ctx, rec=rec)
    for params in params_list:
        check_lorentz_strong(functions, params, ctx, rec=rec)
    for f in functions:
        check_lorentz_identities(f, rec=rec)
        check_young_weak_family(f, ctx, rec=rec)
        for params in params_list:
            for r in ctx.r_grid:
                check_null(f, params, float(r), rec=rec)
            if params.q < params.alpha:
                for q2 in sorted({(params.q + params.alpha) / 2, params.alpha}):
                    for r in ctx.r_grid:
                        check_q_monotone(f, params.q, q2, params, float(r), rec=rec)
            if params.p < INF:
                for p2 in (2 * params.p, INF):
                    check_p_monotone(f, params.p, p2, params, ctx, rec=rec)
            check_lebesgue_embedding(f, params, ctx, rec=rec)
            check_sandwich(f, params, ctx, rec=rec)
            check_reverse_embedding(f, params, ctx, rec=rec)
            check_kernel_bridge(f, params, ctx, rec=rec)
            check_kolmogorov(f, params, ctx, s=s, rec=rec)
    return rec.result()


@dataclass
class Ledger:
    """Reports merged over every space, in claim-registry order."""

    reports: list

    @classmethod
    def merge(cls, groups):
        merged = {}
        for reports in groups:
            for rep in reports:
                tgt = merged.setdefault(rep.claim, VerificationReport(rep.claim, rep.kind, rep.formula))
                tgt.records.extend(rep.records)
        return cls([merged[c] for c in CLAIMS if c in merged])

    def __getitem__(self, claim):
        for rep in self.reports:
            if rep.claim == claim:
                return rep
        raise KeyError(claim)

    def __contains__(self, claim):
        return any(rep.claim == claim for rep in self.reports)

    @property
    def failed(self):
        return [rep.claim for rep in self.reports if rep.asserted and rep.verdict == FAIL]

    @property
    def passed(self):
        return not self.failed

    @property
    def exit_code(self):
        return 0 if self.passed else 1

    def records(self):
        for rep in self.reports:
            yield from rep.records


def space_reports(config, index):
    """Reports for the ``index``-th configured space; ``None`` when it has nothing to check."""
    from .corpus import build_corpus

    space = config.spaces[index].build()
    functions = build_corpus(config.corpus, space, config.seed)
    for f in functions:
        f.name = f"{space.name}:{f.name}"
    if not functions and not config.geometry_checks:
        return None
    ctx = SpaceContext(space, per_decade=config.per_decade)
    return run_checks(ctx, functions, config.params, config.suite, config.overrides, s=config.s)


def witness_group(config):
    from .witness import witness_reports

    rec = Recorder(config.suite, config.overrides)
    witness_reports(config.witness, rec)
    return rec.result()


def run_suite(config, jobs=1):
    """Run the configured checks over every space and corpus; deterministic under the seed.

    With ``jobs > 1`` spaces run in worker processes; results are merged
    in config order so the ledger does not depend on scheduling.
    """
    from .config import RunConfig

    config = RunConfig.of(config)
    tasks = [(space_reports, (config, i)) for i in range(len(config.spaces))]
    if config.witness is not None and any(c.startswith("witness") for c in select_claims(config.suite)):
        tasks.append((witness_group, (config,)))
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fn, *args) for fn, args in tasks]
            groups = [fut.result() for fut in futures]
    else:
        groups = [fn(*args) for fn, args in tasks]
    return Ledger.merge([g for g in groups if g is not None])
