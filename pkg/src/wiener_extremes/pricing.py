"""Black-Scholes call and the double-knock-out call as a two-sided image series.

Write ``S_t = S_0 exp(sigma W_t)``. Under the measure in which ``W`` is a
standard Wiener process, the law of ``W_T`` killed on leaving ``(z, y)``
has the image density

    sum_k  phi_T(xi - 2k(y - z))  -  phi_T(xi - 2y - 2k(y - z)),

with ``y = ln(B/S_0)/sigma`` and ``z = ln(A/S_0)/sigma``. Changing back to
the pricing measure turns every image into a call spread on a shifted spot,
weighted by ``exp(theta * shift)`` with ``theta = r/sigma - sigma/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .errors import ConsistencyError, DomainError, SeriesConvergenceError
from .special_fn import DEFAULT_CONTROL, SeriesControl, norm_cdf, norm_cdf_diff, norm_pdf

# barriers closer than this (in log-price / sigma units) are refused
MIN_BARRIER_SPACING = 1e-6
DEFAULT_MAX_K = 50


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes market and double-barrier call contract."""

    s0: float
    k_strike: float
    a_low: float
    b_high: float
    t_mat: float
    r_rate: float
    sigma: float

    def __post_init__(self):
        if not (self.s0 > 0.0 and self.k_strike > 0.0):
            raise DomainError("requires S0 > 0 and K > 0")
        if not (self.sigma > 0.0 and self.t_mat > 0.0):
            raise DomainError("requires sigma > 0 and T > 0")
        if not math.isfinite(self.r_rate):
            raise DomainError("requires a finite rate")
        if not (0.0 < self.a_low < self.k_strike):
            raise DomainError("requires 0 < A < K")
        if not self.a_low < self.s0:
            raise DomainError("requires A < S0")
        if not self.k_strike < self.b_high:
            raise DomainError("requires K < B")
        if not self.s0 < self.b_high:
            raise DomainError("requires S0 < B")

    @property
    def theta(self) -> float:
        """Drift of ``W = ln(S/S0)/sigma`` under the pricing measure."""
        return self.r_rate / self.sigma - 0.5 * self.sigma

    def log_barriers(self) -> tuple[float, float]:
        """``(y, z)``: the barriers on the scale of ``W``."""
        return (math.log(self.b_high / self.s0) / self.sigma,
                math.log(self.a_low / self.s0) / self.sigma)


def bs_call(s0: float, k_strike: float, t_mat: float, r_rate: float, sigma: float) -> float:
    if not (s0 > 0.0 and k_strike > 0.0 and t_mat > 0.0 and sigma > 0.0):
        raise DomainError("bs_call needs positive spot, strike, maturity and volatility")
    vol = sigma * math.sqrt(t_mat)
    d1 = (math.log(s0 / k_strike) + (r_rate + 0.5 * sigma * sigma) * t_mat) / vol
    d2 = d1 - vol
    return s0 * norm_cdf(d1) - k_strike * math.exp(-r_rate * t_mat) * norm_cdf(d2)


def _scaled_mass(log_scale: float, mass: float) -> float:
    if mass <= 0.0:
        return 0.0
    return math.exp(log_scale + math.log(mass))


def _image_block(shift: float, mp: MarketParams) -> float:
    # exp(theta*shift) * e^{-rT} E[(S'_T - K) 1{K <= S'_T < B}],  S'_0 = S0 e^{sigma*shift}.
    # Equal to the call-spread-minus-digital block, without its cancellation.
    theta, sig, t = mp.theta, mp.sigma, mp.t_mat
    vol = sig * math.sqrt(t)
    base = sig * shift + (mp.r_rate - 0.5 * sig * sig) * t
    d2_k = (base - math.log(mp.k_strike / mp.s0)) / vol
    d2_b = (base - math.log(mp.b_high / mp.s0)) / vol
    spot_part = _scaled_mass(math.log(mp.s0) + (theta + sig) * shift,
                             norm_cdf_diff(d2_k + vol, d2_b + vol))
    cash_part = _scaled_mass(math.log(mp.k_strike) + theta * shift - mp.r_rate * t,
                             norm_cdf_diff(d2_k, d2_b))
    return spot_part - cash_part


def double_barrier_term(k: int, mp: MarketParams) -> float:
    """The ``k``-th summand of the double-knock-out call series.

    Pairs the direct image at shift ``-2k(y - z)`` with the reflected image at
    ``-2k(y - z) + 2y``. Each image contributes

        exp(theta * d) * (C_BS(S0 e^{sigma d}, K) - C_BS(S0 e^{sigma d}, B)
                          - e^{-rT} (B - K) Phi((d - y + theta T) / sqrt(T)))

    which is evaluated as a single corridor expectation.
    """
    y, z = mp.log_barriers()
    d = -2.0 * k * (y - z)
    return _image_block(d, mp) - _image_block(d + 2.0 * y, mp)


def price_double_barrier_terms(mp: MarketParams, ctrl: SeriesControl = DEFAULT_CONTROL,
                               max_k: int = DEFAULT_MAX_K) -> tuple[float, int]:
    """:func:`price_double_barrier` plus the number of summands used."""
    y, z = mp.log_barriers()
    if y - z < MIN_BARRIER_SPACING:
        raise DomainError(f"barriers too close: y - z = {y - z:.3e} < {MIN_BARRIER_SPACING}")
    total = double_barrier_term(0, mp)
    k = 0
    for k in range(1, max_k + 1):
        up = double_barrier_term(k, mp)
        down = double_barrier_term(-k, mp)
        total += up + down
        if abs(up) < ctrl.tol and abs(down) < ctrl.tol:
            break
    else:
        raise SeriesConvergenceError("double_barrier", 2 * max_k + 1, max(abs(up), abs(down)))

    ceiling = bs_call(mp.s0, mp.k_strike, mp.t_mat, mp.r_rate, mp.sigma)
    if total < -1e-8 or total > ceiling + 1e-8:
        raise ConsistencyError(
            f"double-barrier price {total!r} outside [0, {ceiling!r}] for {mp}"
        )
    return total, 2 * k + 1


def price_double_barrier(mp: MarketParams, ctrl: SeriesControl = DEFAULT_CONTROL,
                         max_k: int = DEFAULT_MAX_K) -> float:
    """Price of the call knocked out when ``S`` leaves ``(A, B)`` before ``T``.

    Sums :func:`double_barrier_term` outward from ``k = 0`` until both
    ``|term(k)|`` and ``|term(-k)|`` fall below ``ctrl.tol``.

    Raises:
        DomainError: barriers closer than ``MIN_BARRIER_SPACING``.
        SeriesConvergenceError: no convergence within ``|k| <= max_k``.
        ConsistencyError: result outside ``[0, bs_call]`` by more than 1e-8.
    """
    return price_double_barrier_terms(mp, ctrl, max_k)[0]


def price_up_and_out(mp: MarketParams, epsabs: float = 1e-9) -> float:
    """Up-and-out call (upper barrier ``mp.b_high`` only; ``mp.a_low`` is not used).

    Integrates the discounted, measure-changed payoff against the law of
    ``W_T`` killed at ``y``, ``phi_T(xi) - phi_T(xi - 2y)``, over the finite
    window ``ln(K/S0)/sigma <= xi <= y``.
    """
    if not mp.b_high > max(mp.s0, mp.k_strike):
        raise DomainError("requires B > max(S0, K)")
    y = math.log(mp.b_high / mp.s0) / mp.sigma
    lo = math.log(mp.k_strike / mp.s0) / mp.sigma
    theta, t = mp.theta, mp.t_mat
    rt = math.sqrt(t)
    disc = math.exp(-mp.r_rate * t - 0.5 * theta * theta * t)

    def integrand(xi):
        payoff = mp.s0 * math.exp(mp.sigma * xi) - mp.k_strike
        killed = (norm_pdf(xi / rt) - norm_pdf((xi - 2.0 * y) / rt)) / rt
        return disc * math.exp(theta * xi) * payoff * killed

    value, err = integrate.quad(integrand, lo, y, epsabs=epsabs, epsrel=1e-12, limit=200)
    if not err <= epsabs:
        raise ConsistencyError(f"up-and-out quadrature error estimate {err:.2e} above {epsabs:.0e}")
    return value
