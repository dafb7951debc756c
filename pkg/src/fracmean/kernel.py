"""Positive kernels, the operator ``Tg(y) = sum_x g(x) K(x, y) w_x`` and Young-type checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ParameterError
from .exponents import INF, as_exponent, recip
from .rearrange import SampledFunction, lebesgue_norm, lorentz_quasinorm

DENSE_KERNEL_LIMIT = 1000


class Kernel:
    """Nonnegative kernel ``K(x, y)`` stored as an ``n x n`` matrix (rows ``x``, columns ``y``)."""

    def __init__(self, space, matrix, name=None):
        if sparse.issparse(matrix):
            matrix = matrix.tocsr()
            data = matrix.data
        else:
            matrix = np.asarray(matrix, dtype=float)
            data = matrix
        if matrix.shape != (space.n, space.n):
            raise ParameterError(f"kernel must be {space.n}x{space.n}")
        if np.any(data < 0) or not np.all(np.isfinite(data)):
            raise ParameterError("kernel entries must be finite and >= 0")
        self.space = space
        self.matrix = matrix
        self.name = name

    @property
    def is_sparse(self):
        return sparse.issparse(self.matrix)

    def dense(self):
        return self.matrix.toarray() if self.is_sparse else self.matrix


def averaging_kernel(space, r, beta, centered="y"):
    """Ball-averaging kernel.

    ``centered="y"`` (default): ``K(x, y) = mu(B(y, r))^(-1/beta) chi_(B(y, r))(x)``;
    its columns have ``beta``-norm exactly 1 and ``T(|f|^q)`` reproduces the
    scale-``r`` amalgam norm.  ``centered="x"`` uses ``mu(B(x, r))^(-1/beta)``.
    Stored sparse, keyed by ball membership.
    """
    beta = as_exponent(beta, "beta")
    M = space.membership(r).tocsr()  # M[y, x] = 1 iff x in B(y, r)
    mu = space.ball_measures(r)
    ib = recip(beta)
    if centered == "y":
        K = sparse.diags(mu ** -ib) @ M          # row y scaled by mu(B_y)
        K = K.T.tocsr()                          # now indexed [x, y]
    elif centered == "x":
        K = (M @ sparse.diags(mu ** -ib)).T.tocsr()
    else:
        raise ParameterError("centered must be 'x' or 'y'")
    if space.n <= DENSE_KERNEL_LIMIT:
        K = K.toarray()
    return Kernel(space, K, name=f"averaging(r={r:g}, beta={beta:g}, {centered})")


def apply_kernel(g, K):
    """``Tg(y) = sum_x g(x) K(x, y) w_x``."""
    if g.space is not K.space and g.space.n != K.space.n:
        raise ParameterError("function and kernel live on different spaces")
    gw = g.values * g.space.weights
    out = K.matrix.T @ gw
    return SampledFunction(g.space, np.asarray(out).ravel(), name=f"T{g.name or ''}")


def kernel_mixed_norm(K, beta, parts=False):
    """``max(max_y ||K(., y)||_beta, max_x ||K(x, .)||_beta)`` with weighted norms.

    With ``parts=True`` return ``(mixed, column_max, row_max)``.
    """
    beta = as_exponent(beta, "beta")
    w = K.space.weights
    M = K.matrix
    if beta == INF:
        if K.is_sparse:
            col = M.max(axis=0).toarray().ravel()
            row = M.max(axis=1).toarray().ravel()
        else:
            col, row = M.max(axis=0), M.max(axis=1)
    else:
        P = M.power(beta) if K.is_sparse else M ** beta
        col = np.asarray(P.T @ w).ravel() ** (1 / beta)   # integrate over x
        row = np.asarray(P @ w).ravel() ** (1 / beta)     # integrate over y
    col_max = float(col.max()) if col.size else 0.0
    row_max = float(row.max()) if row.size else 0.0
    mixed = max(col_max, row_max)
    return (mixed, col_max, row_max) if parts else mixed


def _check_young_exponents(beta, t, gamma):
    beta, t, gamma = (as_exponent(v, n) for v, n in ((beta, "beta"), (t, "t"), (gamma, "gamma")))
    if abs(recip(gamma) - (recip(beta) + recip(t) - 1.0)) > 1e-12:
        raise ParameterError(f"need 1/gamma = 1/beta + 1/t - 1, got ({beta}, {t}, {gamma})")
    return beta, t, gamma


def weak_type_constant(beta, t, gamma):
    """``2^gamma (t/(t-1))^beta (t/gamma)^(gamma (1-t) beta / (t beta'))``, ``beta'`` the conjugate of ``beta``."""
    beta, t, gamma = _check_young_exponents(beta, t, gamma)
    if not (1 < t < INF) or gamma == INF:
        raise ParameterError("the explicit weak-type constant needs 1 < t < inf and gamma < inf")
    inv_conj = 1.0 - recip(beta)  # 1/beta'
    expo = gamma * (1 - t) * beta * inv_conj / t
    return 2.0 ** gamma * (t / (t - 1)) ** beta * (t / gamma) ** expo


@dataclass(frozen=True)
class YoungReport:
    lhs: float
    rhs: float
    constant: float
    kernel_norm: float
    slack: float
    ratio: float

    @property
    def ok(self):
        return self.slack >= 0


def check_young_weak(g, K, beta, t, gamma, constant=None):
    """``||T|g| ||*_(gamma,inf) <= C ||K||_(beta,mixed) ||g||*_(t,inf)``.

    ``C`` defaults to :func:`weak_type_constant`.  The left side uses ``|g|``
    (the operator applied to the modulus), which dominates ``|Tg|``.
    Slack is ``rhs - lhs``.
    """
    beta, t, gamma = _check_young_exponents(beta, t, gamma)
    C = weak_type_constant(beta, t, gamma) if constant is None else constant
    kn = kernel_mixed_norm(K, beta)
    if g.is_zero():
        return YoungReport(0.0, 0.0, C, kn, 0.0, 0.0)
    Tg = apply_kernel(SampledFunction(g.space, g.modulus), K)
    lhs = lorentz_quasinorm(Tg, gamma, INF)
    rhs = C * kn * lorentz_quasinorm(g, t, INF)
    return YoungReport(lhs, rhs, C, kn, rhs - lhs, lhs / rhs if rhs > 0 else math.inf)


def check_young_strong(g, K, beta, t, gamma):
    """Empirical ratio ``||Tg||_gamma / (||K||_(beta,mixed) ||g||*_(t,gamma))``.

    The strong-type constant has no explicit value, so only the ratio is
    returned (as both ``ratio`` and ``constant``); it is 0 for ``g = 0``.
    """
    beta, t, gamma = _check_young_exponents(beta, t, gamma)
    kn = kernel_mixed_norm(K, beta)
    if g.is_zero():
        return YoungReport(0.0, 0.0, 0.0, kn, 0.0, 0.0)
    lhs = lebesgue_norm(apply_kernel(g, K), gamma)
    base = kn * lorentz_quasinorm(g, t, gamma)
    ratio = lhs / base if base > 0 else math.inf
    return YoungReport(lhs, base, ratio, kn, 0.0, ratio)


def bridge_sides(f, params, r):
    """Both sides of ``r||f||_(q,p,alpha) = ||T(|f|^q)||_(p/q)^(1/q)``.

    ``T`` is the ``y``-centred averaging kernel with ``1/beta = 1 - q/alpha + q/p``.
    Computed in units of ``max|f|`` to keep powers in range; returns
    ``(amalgam, bridge)`` rescaled.
    """
    from .amalgam import NormParams, amalgam_norm_r

    params = NormParams.of(params)
    if params.q == INF:
        raise ParameterError("the kernel bridge needs q < inf")
    q = params.q
    ib = 1.0 - q * recip(params.alpha) + q * recip(params.p)
    beta = 1.0 / ib if ib > 0 else INF
    lhs = amalgam_norm_r(f, params, r).value
    if f.is_zero():
        return lhs, 0.0
    K = averaging_kernel(f.space, r, beta)
    u = SampledFunction(f.space, (f.modulus / f.peak) ** q)
    Tu = apply_kernel(u, K)
    gamma = params.p / q
    rhs = lebesgue_norm(Tu, gamma) ** (1.0 / q) * f.peak
    return lhs, rhs
