"""The ten acceptance criteria, each at its stated tolerance and time budget."""

import json
import math
import time

import numpy as np
import pytest

from fracmean.amalgam import NormParams
from fracmean.cli import main
from fracmean.config import RunConfig, default_config_path
from fracmean.corpus import build_corpus
from fracmean.exponents import INF
from fracmean.kernel import averaging_kernel, bridge_sides, check_young_weak
from fracmean.models import grid1d
from fracmean.verify import (
    EQUALITY_TOLERANCE, FAIL, REPORTED, Recorder, SpaceContext, check_cardinality,
    check_euclidean, check_lebesgue_embedding, check_lorentz_identities, check_norm_axioms,
    check_q_monotone, check_reverse_embedding, check_sandwich, run_suite,
)
from fracmean.witness import build_witness, certify_witness, record_witness

CONFIG = RunConfig.load(default_config_path())


@pytest.fixture(scope="module")
def shipped():
    """``{space name: (context, corpus)}`` for every space of the default config."""
    out = {}
    for spec in CONFIG.spaces:
        space = spec.build()
        fs = build_corpus(CONFIG.corpus, space, CONFIG.seed)
        for f in fs:
            f.name = f"{space.name}:{f.name}"
        out[space.name] = (SpaceContext(space, per_decade=CONFIG.per_decade), fs)
    return out


def _records(reports, claim):
    return [r for rep in reports if rep.claim == claim for r in rep.records]


def _rel(rec):
    scale = max(abs(rec.lhs), abs(rec.rhs))
    return rec.slack / scale if scale else 0.0


def _note(request, text):
    request.node.criterion_detail = text
    print(text)


@pytest.mark.criterion(1, "norm axioms")
def test_norm_axioms(shipped, request):
    t0 = time.perf_counter()
    rec = Recorder(["homogeneity", "triangle"])
    for ctx, fs in shipped.values():
        check_norm_axioms(ctx, fs, CONFIG.params, rec=rec)
    elapsed = time.perf_counter() - t0
    hom, tri = rec.reports["homogeneity"].records, rec.reports["triangle"].records
    cases = {(r.function.split("|c=")[0], r.q, r.alpha, r.p, r.r) for r in hom}
    worst_h = max(abs(r.slack) / max(abs(r.rhs), 1e-300) for r in hom)
    worst_t = min(_rel(r) for r in tri)
    _note(request, f"{len(cases)} cases, homogeneity gap {worst_h:.1e}, "
                   f"triangle slack {worst_t:.1e}, {elapsed:.1f}s")
    assert len(cases) >= 200
    assert worst_h <= 1e-12
    assert worst_t >= -1e-10
    assert elapsed < 60


@pytest.mark.criterion(2, "sandwich with explicit constants")
def test_sandwich(shipped, request):
    t0 = time.perf_counter()
    lines = []
    for name in ("grid1d(256,1)", "sqline(64,1)"):
        ctx, fs = shipped[name]
        reps = []
        for f in fs:
            for params in CONFIG.params:
                reps += check_sandwich(f, params, ctx)
        for branch in ("pinf", "pfin"):
            recs = [r for c in ("lower", "upper") for r in _records(reps, f"sandwich-{branch}-{c}")
                    if r.verdict != "degenerate"]
            fails = [r for r in recs if r.verdict == FAIL]
            lines.append(f"{name} {branch}: {len(recs)} cases, {len(fails)} violations")
            assert len(recs) >= 50
            assert not fails
    elapsed = time.perf_counter() - t0
    _note(request, "; ".join(lines) + f", {elapsed:.1f}s")
    assert elapsed < 300


@pytest.mark.criterion(3, "constant-1 embeddings")
def test_constant_one_embeddings(shipped, request):
    t0 = time.perf_counter()
    rec = Recorder(["q-monotone", "lebesgue-pinf", "lebesgue-dyadic"])
    for ctx, fs in shipped.values():
        for f in fs:
            for params in CONFIG.params:
                check_lebesgue_embedding(f, params, ctx, rec=rec)
                if params.q > 1 and params.q < INF:
                    for r in ctx.r_grid:
                        check_q_monotone(f, 1.0, params.q, params, float(r), rec=rec)
    elapsed = time.perf_counter() - t0
    counts = {c: len(rep.records) for c, rep in rec.reports.items()}
    worst = min(_rel(r) for rep in rec.reports.values() for r in rep.records if r.verdict != "degenerate")
    _note(request, f"{counts}, worst relative slack {worst:.1e}, {elapsed:.1f}s")
    assert set(counts) == {"q-monotone", "lebesgue-pinf", "lebesgue-dyadic"}
    assert worst >= -1e-10
    assert elapsed < 60


@pytest.mark.criterion(4, "reverse embeddings")
def test_reverse_embeddings(shipped, request):
    cases = {"q=a=p": (2, 2, 2), "q=a<p=inf": (2, 2, INF), "q=a<p<inf": (2, 2, 4), "q<a=p": (1, 2, 2)}
    reps = []
    for ctx, fs in shipped.values():
        for f in fs:
            for params in cases.values():
                reps += check_reverse_embedding(f, params, ctx)
    claims = {rep.claim for rep in reps}
    fails = [r for rep in reps for r in rep.records if r.verdict == FAIL]
    eq = _records(reps, "reverse-qap-dyadic")
    gap = max(abs(r.lhs - r.rhs) / max(abs(r.rhs), 1e-300) for r in eq)
    _note(request, f"{len(claims)} claims, {sum(len(r.records) for r in reps)} records, "
                   f"{len(fails)} failures, dyadic equality gap {gap:.1e}")
    assert {"reverse-qap", "reverse-qa-pinf", "reverse-qa-pfin", "reverse-ap-sup", "reverse-ap-lp"} <= claims
    assert not fails
    assert gap <= 1e-10


@pytest.mark.criterion(5, "cardinality certificates")
def test_cardinality(shipped, request):
    lines = []
    for name, (ctx, _) in shipped.items():
        reps = check_cardinality(ctx)
        T, S = _records(reps, "cardinality-T"), _records(reps, "cardinality-S")
        gens = {r.function for r in T}
        radii = {r.r for r in T}
        assert len(gens) == 3 and len(radii) == 5
        bad = [r for r in T + S if r.verdict == FAIL]
        lines.append(f"{name}: {len(T)}+{len(S)} scans, {len(bad)} violations")
        assert not bad
    _note(request, "; ".join(lines))


@pytest.mark.criterion(6, "weak-type Young inequality and kernel bridge")
def test_young_and_bridge(shipped, request):
    triples = ((2.0, 4 / 3, 4.0), (1.5, 1.5, 3.0), (4 / 3, 2.0, 4.0))
    bridge_params = (NormParams(1, 2, 4), NormParams(1.5, 3, 6), NormParams(2, 2, 4))
    worst_young, worst_bridge, n_young, n_bridge = math.inf, 0.0, 0, 0
    for name in ("grid1d(256,1)", "sqline(64,1)"):
        ctx, _ = shipped[name]
        fs = build_corpus([{"name": "random-step", "args": [8], "count": 20}], ctx.space, 11)
        r = float(ctx.r_grid[ctx.r_grid.size // 2])
        for beta, t, gamma in triples:
            K = averaging_kernel(ctx.space, r, beta)
            for g in fs:
                rep = check_young_weak(g, K, beta, t, gamma)
                worst_young = min(worst_young, rep.slack / rep.rhs)
                n_young += 1
        for params in bridge_params:
            for f in fs:
                lhs, rhs = bridge_sides(f, params, r)
                worst_bridge = max(worst_bridge, abs(lhs - rhs) / lhs)
                n_bridge += 1
    _note(request, f"{n_young} Young cases, worst relative slack {worst_young:.3g}; "
                   f"{n_bridge} bridge cases, worst gap {worst_bridge:.1e}")
    assert n_young >= 120 and n_bridge >= 120
    assert worst_young >= -1e-10
    assert worst_bridge <= 1e-10


@pytest.mark.criterion(7, "Lorentz identities")
def test_lorentz_identities(shipped, request):
    reps = []
    for _, fs in shipped.values():
        for f in fs:
            reps += check_lorentz_identities(f)
    weak, cake = _records(reps, "weak-two-routes"), _records(reps, "layer-cake")
    gap_w = max(abs(r.lhs - r.rhs) / max(abs(r.rhs), 1e-300) for r in weak)
    gap_c = max(abs(r.lhs - r.rhs) / max(abs(r.rhs), 1e-300) for r in cake)
    _note(request, f"{len(weak)} weak-norm pairs gap {gap_w:.1e}; {len(cake)} layer-cake gap {gap_c:.1e}")
    assert gap_w <= 1e-12
    assert gap_c <= 1e-10


@pytest.mark.criterion(8, "witness trend on grid1d(2^18)")
def test_witness_trend(request):
    t0 = time.perf_counter()
    space = grid1d(2 ** 18, 2.0 ** -6)
    _, plan = build_witness(space, N=4, rho=0.8)
    cert = certify_witness(space, plan, (1, 2, 4))
    rec = Recorder(["witness-*"])
    record_witness(space, plan, cert, rec)
    elapsed = time.perf_counter() - t0
    weak = [cert.weak_norms[N] for N in (2, 3, 4)]
    amal = [cert.union_norms[N] for N in (2, 3, 4)]
    _note(request, f"weak {['%.4g' % w for w in weak]}, amalgam {['%.4g' % a for a in amal]}, "
                   f"{elapsed:.0f}s")
    assert all(st.complete and st.bracket[0] <= st.measure < st.bracket[1] for st in plan.stages)
    assert [st.n for st in plan.stages] == [1, 2, 3, 4]
    assert weak[0] < weak[1] < weak[2]
    assert max(amal) <= 1.5 * amal[0]
    asserted = [r for r in rec.result() if r.kind != REPORTED]
    assert all(r.verdict != FAIL for r in asserted), [r.claim for r in asserted if r.verdict == FAIL]
    assert elapsed < 600


@pytest.mark.criterion(9, "Euclidean cross-check")
def test_euclidean(shipped, request):
    ctx, fs = shipped["grid1d(256,1)"]
    recs = _records(check_euclidean(fs, CONFIG.params, ctx), "euclidean-comparability")
    factors = [r.lhs for r in recs]
    spread = max(factors) / min(factors)
    _note(request, f"factor {min(factors):.3g}..{max(factors):.3g} over {len(factors)} radii, spread {spread:.3g}")
    assert len(factors) >= 5
    assert spread < 2


@pytest.mark.criterion(10, "negative control")
def test_negative_control(tmp_path, request):
    cfg = {"spaces": [{"name": "grid1d", "params": [64, 1]}, {"name": "sqline", "params": [32]}],
           "corpus": ["power(0.5)", "ball-indicator", {"name": "random-step", "count": 3}],
           "params": [[1, 2, 4], [1, 2, "inf"], [2, 2, 2], [2, 2, 4], [1, 2, 2], [2, 2, "inf"]],
           "per_decade": 4}
    base = run_suite(RunConfig.from_dict(cfg))
    assert base.passed
    low = run_suite(RunConfig.from_dict(dict(cfg, overrides={"*": 0.1})))
    flipped = set(low.failed)
    explicit = [rep for rep in base.reports if rep.kind == "explicit"]
    tight, loose = set(), {}
    for rep in explicit:
        ratios = [r.best / r.constant for r in rep.records
                  if r.verdict != "degenerate" and not math.isnan(r.best) and r.constant > 0]
        t = max(ratios, default=0.0)
        if t > 0.1 * (1 + 1e-6):
            tight.add(rep.claim)
        elif t < 0.1 * (1 - 1e-6):
            loose[rep.claim] = t
    assert tight <= flipped
    assert not (flipped & set(loose))
    path = tmp_path / "neg.json"
    path.write_text(json.dumps(dict(cfg, overrides={"*": 0.1})))
    code = main(["run", str(path), "--out", str(tmp_path / "o"), "--quiet"])
    _note(request, f"{len(flipped)} claims flip, {len(loose)} loose claims keep passing "
                   f"({', '.join(sorted(loose))}), CLI exit {code}")
    assert flipped and code == 1
