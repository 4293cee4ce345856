"""Joint law of ``(W_t, M_t, m_t)``: a Wiener process, its running maximum
and its running minimum.

All distribution functions take levels in the units of ``W`` and a horizon
``t``; by self-similarity they reduce to the ``t = 1`` law evaluated at
``level / sqrt(t)``. Infinite levels (``math.inf`` / ``-math.inf``) are
accepted everywhere, so every marginal is also reachable as a limit of
:func:`joint_cdf_std`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import DomainError
from .errors import SeriesConvergenceError
from .special_fn import DEFAULT_CONTROL, SeriesControl, norm_cdf, norm_cdf_diff, psi_terms

inf = math.inf

# barrier spacing (in units of sqrt(t)) below which the exit series is replaced
# by its scale-free limit
DEGENERATE_SPACING = 1e-8
# below this standardized spacing y - z the sine expansion replaces the image series
DUAL_SPACING = 2.0


class TriplePoint(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class BarrierPair:
    """Lower and upper barrier for the two-sided exit time of ``W``."""

    z_bar: float
    y_bar: float

    def __post_init__(self):
        if not (self.z_bar < 0.0 < self.y_bar):
            raise DomainError(
                f"barriers need z_bar < 0 < y_bar, got z_bar={self.z_bar}, y_bar={self.y_bar}"
            )


def in_support(x: float, y: float, z: float) -> bool:
    """Whether ``(x, y, z)`` lies in the closed support of the triple."""
    return z <= 0.0 <= y and z <= x <= y


def _check_horizon(t: float) -> float:
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError(f"horizon t must be positive and finite, got {t}")
    return math.sqrt(t)


# ---------------------------------------------------------------------------
# standardized (t = 1) building blocks

def _w_max_std(x: float, y: float) -> float:
    if y <= 0.0 or x == -inf:
        return 0.0
    if y == inf:
        return norm_cdf(x)
    if x < y:
        return norm_cdf_diff(x, x - 2.0 * y)
    return math.erf(y / math.sqrt(2.0))  # 2 Phi(y) - 1


def _w_min_std(x: float, z: float) -> float:
    if x == -inf or z == -inf:
        return 0.0
    if z <= min(0.0, x):
        # 2 Phi(z) - Phi(2z - x), with 2z - x <= z
        return norm_cdf(z) + norm_cdf_diff(z, 2.0 * z - x)
    return norm_cdf(x)


def _strip_mass(x: float, y: float, z: float, ctrl: SeriesControl) -> tuple[float, int]:
    """``P(W_1 <= x, z < m_1, M_1 < y)`` for finite ``z < 0 < y``, by the
    sine expansion of the density killed outside ``(z, y)``.

    The k-th term is bounded by ``4 exp(-w^2/2) / (L w)`` with
    ``w = k pi / L``; summation stops once that bound is below ``ctrl.tol``.
    """
    width = y - z
    c = min(x, y) - z
    if c <= 0.0:
        return 0.0, 0
    total = 0.0
    bound = math.inf
    for k in range(1, ctrl.max_terms + 1):
        w = k * math.pi / width
        damp = math.exp(-0.5 * w * w)
        half = math.sin(0.5 * w * c)
        total += (4.0 / (width * w)) * math.sin(-w * z) * damp * half * half
        bound = 4.0 * damp / (width * w)
        if bound < ctrl.tol:
            return total, k
    raise SeriesConvergenceError("strip_sine", ctrl.max_terms, bound)


def _max_min_std(y: float, z: float, ctrl: SeriesControl) -> tuple[float, int]:
    if y <= 0.0 or z == -inf:
        return 0.0, 0
    if y == inf:
        return min(1.0, 2.0 * norm_cdf(z)), 0
    if z >= 0.0:
        return math.erf(y / math.sqrt(2.0)), 0
    if y - z < DUAL_SPACING:
        mass, n = _strip_mass(y, y, z, ctrl)
        return max(0.0, math.erf(y / math.sqrt(2.0)) - mass), n
    r, s = 2.0 * y, 2.0 * (y - z)
    a, na = psi_terms(z, r, s, ctrl)
    b, nb = psi_terms(2.0 * z - y, r, s, ctrl)
    return 2.0 * a - 2.0 * b, max(na, nb)


def joint_cdf_std_terms(x: float, y: float, z: float,
                        ctrl: SeriesControl = DEFAULT_CONTROL) -> tuple[float, int]:
    """:func:`joint_cdf_std` plus the largest number of series terms used."""
    if y <= 0.0 or x == -inf or z == -inf:
        return 0.0, 0
    if y == inf:
        return _w_min_std(x, z), 0
    if z >= 0.0:
        return _w_max_std(x, y), 0
    # from here z < 0 < y, both finite
    if x < z:
        return norm_cdf_diff(x, x - 2.0 * y), 0
    if y - z < DUAL_SPACING:
        mass, n = _strip_mass(x, y, z, ctrl)
        return max(0.0, _w_max_std(x, y) - mass), n
    r, s = 2.0 * y, 2.0 * (y - z)
    a, na = psi_terms(z, r, s, ctrl)
    if x <= y:
        b, nb = psi_terms(x + 2.0 * z - 2.0 * y, r, s, ctrl)
        c, nc = psi_terms(-x + 2.0 * z, r, s, ctrl)
        return 2.0 * a - b - c, max(na, nb, nc)
    b, nb = psi_terms(2.0 * z - y, r, s, ctrl)
    return 2.0 * a - 2.0 * b, max(na, nb)


def joint_cdf_std(x: float, y: float, z: float,
                  ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``P(W_1 <= x, M_1 <= y, m_1 <= z)``.

    Six regimes: zero for ``y <= 0``; the ``(W, M)`` law when ``z >= 0`` or
    when ``x < z < 0``; and two combinations of :func:`~.special_fn.psi`
    with ``r = 2y`` and ``s = 2(y - z)`` inside the corridor ``z < 0 < y``
    (``z <= x <= y``, and ``x > y``). On a boundary the closed branch wins;
    the function is continuous there anyway.

    When ``y - z < DUAL_SPACING`` the image series needs many terms, and the
    corridor branches are evaluated instead as the ``(W, M)`` law minus the
    mass that never left ``(z, y)``, using the sine expansion of that mass.
    """
    return joint_cdf_std_terms(x, y, z, ctrl)[0]


def joint_cdf(x: float, y: float, z: float, t: float = 1.0,
              ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``P(W_t <= x, M_t <= y, m_t <= z)``."""
    rt = _check_horizon(t)
    return joint_cdf_std(x / rt, y / rt, z / rt, ctrl)


def cdf_max(y: float, t: float = 1.0) -> float:
    """``P(M_t <= y) = max(0, 2 Phi(y / sqrt(t)) - 1)``."""
    rt = _check_horizon(t)
    if y <= 0.0:
        return 0.0
    return math.erf(y / (rt * math.sqrt(2.0)))


def cdf_min(z: float, t: float = 1.0) -> float:
    """``P(m_t <= z) = min(1, 2 Phi(z / sqrt(t)))``."""
    rt = _check_horizon(t)
    if z >= 0.0:
        return 1.0
    return 2.0 * norm_cdf(z / rt)


def cdf_w_max(x: float, y: float, t: float = 1.0) -> float:
    """``P(W_t <= x, M_t <= y)``."""
    rt = _check_horizon(t)
    return _w_max_std(x / rt, y / rt)


def cdf_w_min(x: float, z: float, t: float = 1.0) -> float:
    """``P(W_t <= x, m_t <= z)``."""
    rt = _check_horizon(t)
    return _w_min_std(x / rt, z / rt)


def cdf_max_min(y: float, z: float, t: float = 1.0,
                ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``P(M_t <= y, m_t <= z)``."""
    rt = _check_horizon(t)
    return _max_min_std(y / rt, z / rt, ctrl)[0]


# ---------------------------------------------------------------------------
# two-sided exit time tau = min(T_y, T_z)

def _scaled(b: BarrierPair, t: float) -> tuple[float, float]:
    rt = _check_horizon(t)
    return b.y_bar / rt, b.z_bar / rt


def _degenerate(y: float, z: float) -> bool:
    return y - z < DEGENERATE_SPACING


def _lower_first_sine(y: float, z: float, ctrl: SeriesControl) -> float:
    # gambler's-ruin limit minus the boundary flux still to arrive after t = 1
    width = y - z
    rest = 0.0
    for k in range(1, ctrl.max_terms + 1):
        w = k * math.pi / width
        damp = math.exp(-0.5 * w * w)
        rest += 2.0 / (k * math.pi) * math.sin(-w * z) * damp
        bound = 2.0 * damp / (k * math.pi)
        if bound < ctrl.tol:
            return y / width - rest
    raise SeriesConvergenceError("exit_flux_sine", ctrl.max_terms, bound)


def _lower_first_std(y: float, z: float, ctrl: SeriesControl) -> float:
    if _degenerate(y, z):
        return y / (y - z)
    if y - z < DUAL_SPACING:
        return _lower_first_sine(y, z, ctrl)
    return 2.0 * psi_terms(z, 2.0 * y, 2.0 * (y - z), ctrl)[0]


def prob_hit_lower_first(b: BarrierPair, t: float = 1.0,
                         ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``P(W_tau = z_bar, tau <= t)``: the lower barrier is reached first, by ``t``."""
    y, z = _scaled(b, t)
    return _lower_first_std(y, z, ctrl)


def prob_hit_upper_first(b: BarrierPair, t: float = 1.0,
                         ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``P(W_tau = y_bar, tau <= t)``; the mirror image of :func:`prob_hit_lower_first`."""
    y, z = _scaled(b, t)
    return _lower_first_std(-z, -y, ctrl)


def prob_exit_by(b: BarrierPair, t: float = 1.0,
                 ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``P(tau <= t)``, the probability of leaving ``(z_bar, y_bar)`` by time ``t``."""
    y, z = _scaled(b, t)
    if _degenerate(y, z):
        return 1.0
    return prob_hit_lower_first(b, t, ctrl) + prob_hit_upper_first(b, t, ctrl)


def restricted_cdf_leq(x: float, b: BarrierPair, t: float = 1.0,
                       ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``P(W_t <= x, W_tau = y_bar, tau <= t)`` for ``x <= y_bar``."""
    if x > b.y_bar:
        raise DomainError(f"restricted_cdf_leq needs x <= y_bar, got x={x} > {b.y_bar}")
    y, z = _scaled(b, t)
    xs = x / math.sqrt(t)
    return psi_terms(xs - 2.0 * y, -2.0 * z, 2.0 * (y - z), ctrl)[0]


def restricted_cdf_geq(x: float, b: BarrierPair, t: float = 1.0,
                       ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """``P(W_t >= x, W_tau = z_bar, tau <= t)`` for ``x >= z_bar``."""
    if x < b.z_bar:
        raise DomainError(f"restricted_cdf_geq needs x >= z_bar, got x={x} < {b.z_bar}")
    y, z = _scaled(b, t)
    xs = x / math.sqrt(t)
    return psi_terms(-xs + 2.0 * z, 2.0 * y, 2.0 * (y - z), ctrl)[0]
