"""Copula of ``(W_1, M_1, m_1)``, its bivariate margins and their Spearman rho.

By self-similarity the copula does not depend on the horizon. Coordinates
are the ranks ``u = Phi(W)``, ``v = 2 Phi(M) - 1`` and ``w = 2 Phi(m)``.
Points with a coordinate equal to 0 or 1 are resolved through the copula
boundary conditions before any quantile is taken.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError, SeriesConvergenceError
from .joint_dist import _max_min_std, joint_cdf_std_terms
from .special_fn import DEFAULT_CONTROL, SeriesControl, norm_cdf, norm_quantile


class CopulaPoint(NamedTuple):
    u: float
    v: float
    w: float


def _check_unit(**coords: float) -> None:
    for name, val in coords.items():
        if not 0.0 <= val <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {val}")


def quantile_w(u: float) -> float:
    """Quantile of ``W_1``."""
    return norm_quantile(u)


def quantile_max(v: float) -> float:
    """Quantile of ``M_1``: ``Phi^{-1}((1 + v) / 2)``."""
    if not 0.0 < v < 1.0:
        raise DomainError(f"quantile_max needs 0 < v < 1, got {v}")
    return -norm_quantile(0.5 * (1.0 - v))


def quantile_min(w: float) -> float:
    """Quantile of ``m_1``: ``Phi^{-1}(w / 2)``."""
    if not 0.0 < w < 1.0:
        raise DomainError(f"quantile_min needs 0 < w < 1, got {w}")
    # halving the smallest subnormal would underflow to 0
    return norm_quantile(max(0.5 * w, 5e-324))


# ---------------------------------------------------------------------------
# bivariate margins

def copula_wm(u: float, v: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Copula of ``(W, M)``; supported on ``2u <= 1 + v``."""
    _check_unit(u=u, v=v)
    if u == 0.0 or v == 0.0:
        return 0.0
    if u == 1.0:
        return v
    if v == 1.0:
        return u
    if 2.0 * u > 1.0 + v:
        return v
    return u - norm_cdf(norm_quantile(u) - 2.0 * quantile_max(v))


def copula_wmin(u: float, w: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Copula of ``(W, m)``; supported on ``w <= 2u``."""
    _check_unit(u=u, w=w)
    if u == 0.0 or w == 0.0:
        return 0.0
    if u == 1.0:
        return w
    if w == 1.0:
        return u
    if 2.0 * u <= w:
        return u
    return w - norm_cdf(2.0 * quantile_min(w) - norm_quantile(u))


def copula_maxmin_terms(v: float, w: float,
                        ctrl: SeriesControl = DEFAULT_CONTROL) -> tuple[float, int]:
    _check_unit(v=v, w=w)
    if v == 0.0 or w == 0.0:
        return 0.0, 0
    if v == 1.0:
        return w, 0
    if w == 1.0:
        return v, 0
    return _max_min_std(quantile_max(v), quantile_min(w), ctrl)


def copula_maxmin(v: float, w: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Copula of ``(M, m)``; full support on the unit square."""
    return copula_maxmin_terms(v, w, ctrl)[0]


# ---------------------------------------------------------------------------
# trivariate copula

def copula3_terms(u: float, v: float, w: float,
                  ctrl: SeriesControl = DEFAULT_CONTROL) -> tuple[float, int]:
    """:func:`copula3` plus the largest number of series terms used."""
    _check_unit(u=u, v=v, w=w)
    if u == 0.0 or v == 0.0 or w == 0.0:
        return 0.0, 0
    if w == 1.0:
        return copula_wm(u, v, ctrl), 0
    if v == 1.0:
        return copula_wmin(u, w, ctrl), 0
    if u == 1.0:
        return copula_maxmin_terms(v, w, ctrl)

    x, y = norm_quantile(u), quantile_max(v)
    if 2.0 * u <= w:
        return u - norm_cdf(x - 2.0 * y), 0
    return joint_cdf_std_terms(x, y, quantile_min(w), ctrl)


def copula3(u: float, v: float, w: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Trivariate copula ``C_{W,M,m}(u, v, w)``.

    Three regimes split by ``2u <= w`` (the path ends below the quantile of
    the minimum), ``w < 2u <= 1 + v`` and ``2u > 1 + v``. Supported on the
    polyhedron ``w <= 2u <= 1 + v``. The last two regimes are the joint CDF
    of the triple at the quantiles, so they share its series evaluation.
    """
    return copula3_terms(u, v, w, ctrl)[0]


# ---------------------------------------------------------------------------
# symmetry identities, exposed as residuals

def involution_residual3(u: float, v: float, w: float,
                         ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Residual of the identity from ``(U, V, W) -> (1 - U, 1 - W, 1 - V)``.

    The map sends the copula's generators to another set of generators, so
    inclusion-exclusion gives
    ``C(u,v,w) = u + v + w - 2 + C(1,1-w,1-v) + C(1-u,1,1-v) + C(1-u,1-w,1) - C(1-u,1-w,1-v)``.
    """
    rhs = (u + v + w - 2.0
           + copula3(1.0, 1.0 - w, 1.0 - v, ctrl)
           + copula3(1.0 - u, 1.0, 1.0 - v, ctrl)
           + copula3(1.0 - u, 1.0 - w, 1.0, ctrl)
           - copula3(1.0 - u, 1.0 - w, 1.0 - v, ctrl))
    return copula3(u, v, w, ctrl) - rhs


def survival_residual(u: float, w: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``C_{W,m}(u, w) - (u + w - 1 + C_{W,M}(1 - u, 1 - w))``."""
    return copula_wmin(u, w, ctrl) - (u + w - 1.0 + copula_wm(1.0 - u, 1.0 - w, ctrl))


def self_duality_residual(v: float, w: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``C_{M,m}(v, w) - (v + w - 1 + C_{M,m}(1 - w, 1 - v))``."""
    return copula_maxmin(v, w, ctrl) - (v + w - 1.0 + copula_maxmin(1.0 - w, 1.0 - v, ctrl))


# ---------------------------------------------------------------------------
# Spearman rho

def spearman_rho_wm() -> float:
    """Spearman rho of ``C_{W,M}``: ``2 - (6/pi) arccos(sqrt(6)/3)``."""
    return 2.0 - 6.0 / math.pi * math.acos(math.sqrt(6.0) / 3.0)


def spearman_rho_wmin() -> float:
    """Spearman rho of ``C_{W,m}``; equal to that of ``C_{W,M}`` by survival duality."""
    return spearman_rho_wm()


def maxmin_rho_term(n: int) -> float:
    """``n``-th bracket of the alternating series for the Spearman rho of ``C_{M,m}``."""
    d0 = math.sqrt(2.0 * (n * (n + 1) + 1))
    d1 = math.sqrt(2.0 * ((n + 1) * (n + 2) + 1))
    return (math.acos(n / d0) + math.acos((n + 1) / d0)
            - math.acos((n + 1) / d1) - math.acos((n + 2) / d1))


def maxmin_rho_partial(n_terms: int) -> float:
    """Plain partial sum of the rho series after ``n_terms`` brackets."""
    total = math.fsum((-1) ** n * maxmin_rho_term(n) for n in range(n_terms))
    return 24.0 / math.pi * total - 3.0


def _averaged(partials: np.ndarray) -> float:
    # repeated pairwise averaging over the last half of the partial sums
    m = partials.shape[0] // 2
    row = partials[-(m + 1):]
    while row.shape[0] > 1:
        row = 0.5 * (row[:-1] + row[1:])
    return float(row[0])


def spearman_rho_maxmin_terms(ctrl: SeriesControl = DEFAULT_CONTROL) -> tuple[float, int]:
    """:func:`spearman_rho_maxmin` plus the number of brackets summed."""
    partials = []
    total = 0.0
    prev = math.nan
    for n in range(ctrl.max_terms):
        total += (-1) ** n * maxmin_rho_term(n)
        partials.append(total)
        if n < 3:
            continue
        est = _averaged(np.asarray(partials))
        if abs(est - prev) * 24.0 / math.pi < ctrl.tol:
            return 24.0 / math.pi * est - 3.0, n + 1
        prev = est
    raise SeriesConvergenceError("spearman_rho_maxmin", ctrl.max_terms,
                                 abs(est - prev) * 24.0 / math.pi)


def spearman_rho_maxmin(ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Spearman rho of ``C_{M,m}``.

    Computed as ``(24/pi) sum_n (-1)^n t_n - 3`` with ``t_n`` from
    :func:`maxmin_rho_term`. The brackets decay only like ``n^-3``, so the
    alternating sum is accelerated by repeated averaging of its partial
    sums; the loop stops once two successive accelerated estimates of rho
    differ by less than ``ctrl.tol``.
    """
    return spearman_rho_maxmin_terms(ctrl)[0]
