import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fracmean.errors import ParameterError
from fracmean.kernel import (
    Kernel, apply_kernel, averaging_kernel, bridge_sides, check_young_strong, check_young_weak,
    kernel_mixed_norm, weak_type_constant,
)
from fracmean.models import grid1d, sqline
from fracmean.rearrange import SampledFunction


def test_zero_kernel(line4, f3102):
    K = Kernel(line4, np.zeros((4, 4)))
    assert np.all(apply_kernel(f3102, K).values == 0)
    assert kernel_mixed_norm(K, 2) == 0


def test_constant_kernel_sums():
    sp = grid1d(3, 1)
    g = SampledFunction(sp, np.array([1.0, -2.0, 5.0]))
    K = Kernel(sp, np.ones((3, 3)))
    assert np.all(apply_kernel(g, K).values == 4.0)


def test_x_centred_averaging_kernel(line64):
    r, y0 = 2.5, 20
    K = averaging_kernel(line64, r, 1.0, centered="x")
    ball = line64.ball(y0, r)
    g = SampledFunction.indicator(line64, ball)
    mu = line64.ball_measures(r)
    expected = sum(line64.weights[x] / mu[x] for x in ball)
    assert apply_kernel(g, K).values[y0] == pytest.approx(expected, rel=1e-14)


def test_y_centred_columns_have_unit_norm(line64):
    K = averaging_kernel(line64, 3.0, 2.0)
    _, col, _ = kernel_mixed_norm(K, 2.0, parts=True)
    assert col == pytest.approx(1.0, rel=1e-14)


def test_weak_constant_value():
    beta, t, gamma = 2.0, 4 / 3, 4.0
    expected = 2 ** 4 * (4.0) ** 2 * (1 / 3) ** (4 * (-1 / 3) * 2 * 0.5 / (4 / 3))
    assert weak_type_constant(beta, t, gamma) == pytest.approx(expected, rel=1e-14)


def test_exponent_relation_enforced(line64):
    g = SampledFunction.indicator(line64, [1])
    K = averaging_kernel(line64, 2.0, 2.0)
    with pytest.raises(ParameterError):
        check_young_weak(g, K, 2, 2, 2)
    with pytest.raises(ParameterError):
        weak_type_constant(1, 1, 1)


def test_young_zero_function(line64):
    K = averaging_kernel(line64, 2.0, 2.0)
    z = SampledFunction(line64, np.zeros(64))
    rep = check_young_weak(z, K, 2, 4 / 3, 4)
    assert rep.lhs == rep.rhs == rep.slack == 0
    assert check_young_strong(z, K, 2, 4 / 3, 4).ratio == 0


@pytest.mark.parametrize("triple", [(2, 4 / 3, 4), (1.5, 1.5, 3), (4 / 3, 2, 4)])
def test_young_weak_cube_indicator(line64, triple):
    from fracmean.dyadic import build_sawyer_wheeden

    sys = build_sawyer_wheeden(line64, 0)
    g = SampledFunction.indicator(line64, sys.members(0, 2))
    K = averaging_kernel(line64, 3.0, triple[0])
    assert check_young_weak(g, K, *triple).ok


def test_young_weak_random_sweep():
    rng = np.random.default_rng(7)
    for sp in (grid1d(48, 1), sqline(32)):
        for triple in ((2, 4 / 3, 4), (1.5, 1.5, 3), (4 / 3, 2, 4)):
            K = averaging_kernel(sp, 2.0 if sp.kappa == 1 else 9.0, triple[0])
            for _ in range(20):
                cells = rng.integers(0, 5, sp.n)
                g = SampledFunction(sp, rng.standard_normal(5)[cells])
                assert check_young_weak(g, K, *triple).slack >= 0


def test_young_strong_ratio_finite(line64):
    rng = np.random.default_rng(3)
    g = SampledFunction(line64, rng.standard_normal(64))
    K = averaging_kernel(line64, 4.0, 2.0)
    rep = check_young_strong(g, K, 2, 4 / 3, 4)
    assert 0 < rep.ratio < math.inf


SPACE = grid1d(32, 1)


@given(arrays(np.float64, 32, elements=st.floats(-30, 30, allow_nan=False)),
       st.sampled_from([(1, 2, 4), (1, 2, 2), (1.5, 3, 6), (2, 2, 4), (1, 1, 3)]),
       st.floats(0.6, 10))
def test_bridge_identity(v, params, r):
    f = SampledFunction(SPACE, v)
    lhs, rhs = bridge_sides(f, params, r)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-300)
