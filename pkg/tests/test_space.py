import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracmean.errors import DomainError, ParameterError
from fracmean.models import grid1d, grid2d, sqline
from fracmean.space import (
    PointSpace, Sampling, ball, certify_ball_ratios, estimate_doubling, estimate_geometry,
    estimate_reverse_doubling, fit_phi, measure, quasi_triangle_ratio, radius_grid,
)


def test_ball_on_four_point_line(line4):
    assert ball(line4, 1, 1.5) == [0, 1, 2]


@pytest.mark.parametrize("center", [0, 1, 3])
def test_ball_below_spacing_is_center(line4, center):
    assert ball(line4, center, 1.0) == [center]


def test_measure_examples(line4):
    assert measure(line4, []) == 0
    assert measure(line4, [0, 2]) == 2


def test_unknown_center_is_domain_error(line4):
    with pytest.raises(DomainError):
        ball(line4, 17, 1.0)


def test_line_doubling_interior():
    sp = grid1d(256, 1)
    geo = estimate_doubling(sp, (4, 32), interior=True)
    assert 1.6 <= geo.c_prime_mu <= 2.4
    assert 0.8 <= geo.d_mu <= 1.2
    assert geo.c_mu == pytest.approx(geo.c_prime_mu * 2 ** geo.d_mu)


def test_lattice_doubling_interior():
    sp = grid2d(32, 1)
    geo = estimate_doubling(sp, (3, 6), interior=True)
    assert 1.6 <= geo.d_mu <= 2.4


def test_tiny_window_has_trivial_doubling(line4):
    geo = estimate_doubling(line4, (0.25, 0.25))
    assert geo.c_prime_mu == 1 and geo.d_mu == 0


def test_reverse_doubling_line_interior():
    sp = grid1d(256, 1)
    rev = estimate_reverse_doubling(sp, (4, 32), interior=True)
    assert rev.certified
    assert 0.8 <= rev.delta_mu <= 1.2


def test_isolated_cluster_fails_annulus():
    x = np.concatenate([np.arange(16.0), 1000 + np.arange(16.0)])
    sp = PointSpace.from_line(x, np.ones(32))
    rev = estimate_reverse_doubling(sp, (20, 200))
    assert not rev.certified and rev.failures


def test_single_radius_window_is_degenerate(line64):
    rev = estimate_reverse_doubling(line64, (3, 3))
    assert rev.degenerate


def test_phi_ratio_on_line_interior():
    sp = grid1d(256, 1)
    phi = fit_phi(sp, radius_grid(2, 32, 8), interior=True)
    assert phi.b / phi.a <= 2
    assert np.all(np.diff(phi.phi) >= 0)


def test_phi_single_point_space():
    sp = PointSpace.from_line([0.0], [3.0])
    phi = fit_phi(sp, [1.0, 2.0])
    assert phi.a == phi.b == 1


def test_phi_lattice_slope():
    sp = grid2d(16, 1)
    radii = radius_grid(1.5, 4, 8)
    phi = fit_phi(sp, radii, interior=True)
    slope = np.polyfit(np.log(phi.radii), np.log(phi.phi), 1)[0]
    assert 1.6 <= slope <= 2.4


def test_phi_envelopes_bracket_profile():
    sp = grid1d(128, 1)
    radii = radius_grid(1, 30, 8)
    geo = estimate_geometry(sp, (1, 30))
    phi = fit_phi(sp, radii, geo, unit=4.0)
    small = phi.radii <= 4
    assert np.all(phi.a0 * phi.radii[small] ** geo.d_mu <= phi.phi[small] * (1 + 1e-12))
    assert np.all(phi.phi[small] <= phi.b0 * phi.radii[small] ** geo.delta_mu * (1 + 1e-12))


def test_quasi_triangle_certificate(sq32):
    assert quasi_triangle_ratio(sq32) <= 2.0
    assert quasi_triangle_ratio(sq32) > 1.0


def test_ball_ratio_certificate(line64):
    window = (1, 16)
    geo = estimate_geometry(line64, window)
    assert certify_ball_ratios(line64, geo, window).ok


def test_invalid_weights_and_windows():
    with pytest.raises(ParameterError):
        PointSpace.from_line([0.0, 1.0], [1.0, 0.0])
    with pytest.raises(ParameterError):
        estimate_doubling(grid1d(8), (4, 2))
    with pytest.raises(ParameterError):
        radius_grid(0, 1)


def test_radius_grid_endpoints():
    g = radius_grid(0.5, 50, 4)
    assert g[0] == 0.5 and g[-1] == 50 and np.all(np.diff(g) > 0)


def test_sampled_matches_exhaustive_on_line():
    sp = grid1d(300, 1)
    exact = estimate_doubling(sp, (2, 20), Sampling(exhaustive=True))
    approx = estimate_doubling(sp, (2, 20), Sampling(exhaustive=False, n_centers=300, per_decade=64))
    assert approx.c_prime_mu <= exact.c_prime_mu + 1e-12


@given(st.integers(2, 40), st.floats(0.3, 12), st.integers(0, 39))
def test_ball_sums_match_direct_scan(n, r, c):
    sp = grid1d(n, 1)
    c = c % n
    vals = np.arange(n, dtype=float) ** 2
    direct = vals[sp.ball(c, r)].sum()
    assert sp.ball_sums(vals, r)[c] == pytest.approx(direct)
    assert sp.ball_measures(r)[c] == pytest.approx(len(sp.ball(c, r)))


@given(st.integers(3, 30), st.floats(0.2, 40))
def test_sqline_ball_is_interval(n, r):
    sp = sqline(n)
    for c in (0, n // 2, n - 1):
        pts = sp.ball(c, r)
        assert np.all(np.diff(pts) == 1)
        assert all(abs(p - c) ** 2 < r for p in pts)


@given(st.floats(0.01, 100), st.floats(1.01, 3))
def test_doubling_constants_relation(c, kappa):
    from fracmean.space import GeometryConstants

    geo = GeometryConstants.from_doubling(kappa, c)
    assert geo.d_mu == pytest.approx(math.log2(max(1.0, c)))
    assert geo.c_mu == pytest.approx(max(1.0, c) * (2 * kappa) ** geo.d_mu)
