import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracmean.amalgam import (
    NormParams, amalgam_norm_r, default_r_grid, dyadic_norm, euclidean_amalgam_norm,
    fractional_mean_norm, norm_profile, sandwich_constants, wiener_norm,
)
from fracmean.dyadic import Cardinality, build_sawyer_wheeden
from fracmean.errors import ParameterError, UnsupportedModelError
from fracmean.exponents import INF
from fracmean.models import grid1d, tree
from fracmean.rearrange import SampledFunction, lebesgue_norm
from fracmean.space import GeometryConstants


def test_four_point_oracle(line4):
    f = SampledFunction.indicator(line4, [0])
    assert amalgam_norm_r(f, (1, 1, INF), 1.5).value == 1


def test_zero_function_all_params(line4):
    z = SampledFunction(line4, np.zeros(4))
    for params in ((1, 2, 4), (2, 2, 2), (1, INF, INF)):
        for r in (0.5, 1.5, 3):
            assert amalgam_norm_r(z, params, r).value == 0


def test_dyadic_singleton_oracle(f3102, line4):
    sys = build_sawyer_wheeden(line4, -1, rho=8)
    assert sys.n_k(-1) == 4
    v = dyadic_norm(f3102, (1, 2, 4), sys, -1).value
    assert v == pytest.approx(98 ** 0.25, rel=1e-15)


@pytest.mark.parametrize("a", [1.0, 2.0, 3.5])
def test_dyadic_diagonal_is_lebesgue(f3102, line4, a):
    sys = build_sawyer_wheeden(line4, -1, rho=8)
    for k in sys.generations:
        v = dyadic_norm(f3102, (a, a, a), sys, k).value
        assert v == pytest.approx(lebesgue_norm(f3102, a), rel=1e-12)


def test_single_radius_grid(f3102):
    r = 1.7
    assert fractional_mean_norm(f3102, (1, 2, 4), [r]).value == amalgam_norm_r(f3102, (1, 2, 4), r).value


def test_fractional_mean_is_grid_max(line64):
    rng = np.random.default_rng(1)
    f = SampledFunction(line64, rng.standard_normal(64))
    grid = default_r_grid(line64, 8)
    v = fractional_mean_norm(f, (1, 2, 4), grid)
    prof = norm_profile(f, (1, 2, 4), grid)
    assert v.value == max(val for _, val in prof)
    assert v.lower_bound
    assert v.scale in grid


def test_boundary_and_degenerate_flags(line64):
    f = SampledFunction.indicator(line64, [3])
    assert amalgam_norm_r(f, (1, 2, 4), 0.5).degenerate
    assert amalgam_norm_r(f, (1, 2, 4), 60).boundary_flag


def test_wiener_recombines_blocks():
    sp = grid1d(40, 0.25)
    f = SampledFunction.indicator(sp, np.flatnonzero(sp.coords[:, 0] < 1))
    for a in (1.0, 2.0, 3.0):
        v = euclidean_amalgam_norm(f, (a, a, a), 0.75).value
        assert v == pytest.approx(lebesgue_norm(f, a), rel=1e-12)
    g = SampledFunction(sp, np.sin(np.arange(40.0)))
    for r in (0.3, 1.1, 4.0):
        assert wiener_norm(g, 2, 2, r).value == pytest.approx(lebesgue_norm(g, 2), rel=1e-12)


def test_euclidean_needs_grid(tree4):
    f = SampledFunction.indicator(tree4, [0])
    with pytest.raises(UnsupportedModelError):
        euclidean_amalgam_norm(f, (1, 2, 4), 1.0)


def test_param_validation():
    with pytest.raises(ParameterError):
        NormParams(2, 1, 4)
    with pytest.raises(ParameterError):
        NormParams(0.5, 1, 2)
    assert NormParams(1, "inf", "inf").p == INF
    with pytest.raises(ParameterError):
        amalgam_norm_r(SampledFunction.indicator(grid1d(4), [0]), (1, 2, 4), 0)


def test_sandwich_constant_formulas():
    geo = GeometryConstants.from_doubling(1.0, 2.0)
    card = Cardinality(0, 0, 0, 3.0, 5.0, 7.0)
    cm = geo.c_mu * 2 ** geo.d_mu
    s = sandwich_constants(NormParams(1, 2, INF), card, geo, 1.0)
    assert s.lower == 3.0
    assert s.upper == pytest.approx(cm ** (0.5 - 1) * 5.0)
    s = sandwich_constants(NormParams(1, 2, 4), card, geo, 1.0)
    assert s.lower == pytest.approx(3.0 ** (0.25 * (1 - 0.5 + 1)))
    K = 5.0 ** 3 * cm ** (4 - 2 + 1) * 5.0
    assert s.upper == pytest.approx((K * 7.0) ** 0.25)


vals = arrays(np.float64, 24, elements=st.floats(-50, 50, allow_nan=False))
triples = st.sampled_from([(1, 2, 4), (1, 2, INF), (2, 2, 2), (1.5, 3, 6), (2, 3, INF), (1, 1, 3)])
radii = st.floats(0.5, 12)
SPACE = grid1d(24, 1)


@given(vals, triples, radii, st.floats(-20, 20))
def test_homogeneity(v, params, r, c):
    f = SampledFunction(SPACE, v)
    a = amalgam_norm_r(f.scaled(c), params, r).value
    b = abs(c) * amalgam_norm_r(f, params, r).value
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@given(vals, vals, triples, radii)
def test_triangle(u, v, params, r):
    f, g = SampledFunction(SPACE, u), SampledFunction(SPACE, v)
    lhs = amalgam_norm_r(f + g, params, r).value
    rhs = amalgam_norm_r(f, params, r).value + amalgam_norm_r(g, params, r).value
    assert lhs <= rhs * (1 + 1e-10) + 1e-300


@given(vals, radii, st.sampled_from([(1, 1.5), (1, 2), (1.5, 2)]), st.sampled_from([4.0, INF]))
def test_q_monotone(v, r, qs, p):
    f = SampledFunction(SPACE, v)
    q1, q2 = qs
    small = amalgam_norm_r(f, (q1, 2, p), r).value
    big = amalgam_norm_r(f, (q2, 2, p), r).value
    assert small <= big * (1 + 1e-10) + 1e-300


@given(vals, radii, st.sampled_from([1.0, 1.5, 2.0]))
def test_pinf_below_lebesgue(v, r, q):
    f = SampledFunction(SPACE, v)
    assert amalgam_norm_r(f, (q, 2, INF), r).value <= lebesgue_norm(f, 2) * (1 + 1e-10) + 1e-300


@given(vals, st.sampled_from([(1, 2, 4), (1.5, 2, 3), (2, 2, 2)]))
def test_dyadic_below_lebesgue(v, params):
    f = SampledFunction(SPACE, v)
    sys = build_sawyer_wheeden(SPACE, -1)
    for k in sys.generations:
        assert dyadic_norm(f, params, sys, k).value <= lebesgue_norm(f, params[1]) * (1 + 1e-10) + 1e-300


@given(vals, radii)
def test_diagonal_small_radius_is_lebesgue(v, r):
    # q = alpha = p: each point is counted mu(B) times and divided by mu(B)
    f = SampledFunction(SPACE, v)
    if r <= 1:
        assert amalgam_norm_r(f, (2, 2, 2), r).value == pytest.approx(lebesgue_norm(f, 2), rel=1e-12, abs=1e-300)
