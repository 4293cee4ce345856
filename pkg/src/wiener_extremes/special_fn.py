"""Standard-normal primitives and the Gaussian-difference series ``psi``.

Everything here is scalar and pure. ``norm_cdf`` is evaluated through
``erfc`` so both tails keep full relative precision, and differences of
two CDF values go through :func:`norm_cdf_diff`, which picks the tail in
which the subtraction is benign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

from .errors import DomainError, SeriesConvergenceError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy shared by every infinite series in the package.

    Attributes:
        tol: a series stops at the first term whose magnitude drops below
            this value (once the terms are known to be decreasing).
        max_terms: hard cap on the number of summed terms; reaching it with
            the last term still ``>= tol`` raises
            :class:`~wiener_extremes.errors.SeriesConvergenceError`.
    """

    tol: float = 1e-13
    max_terms: int = 200

    def __post_init__(self):
        if not (self.tol > 0.0 and math.isfinite(self.tol)):
            raise DomainError(f"tol must be a positive finite number, got {self.tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer, got {self.max_terms}")

    def halved(self) -> SeriesControl:
        return SeriesControl(tol=self.tol / 2.0, max_terms=self.max_terms)


DEFAULT_CONTROL = SeriesControl()


def norm_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def norm_cdf(x: float) -> float:
    """Standard normal CDF; accepts ``±inf``."""
    return 0.5 * math.erfc(-x / _SQRT2)


def norm_cdf_diff(a: float, b: float) -> float:
    """``Phi(a) - Phi(b)`` without cancellation in the upper tail."""
    if a > 0.0 and b > 0.0:
        return 0.5 * (math.erfc(b / _SQRT2) - math.erfc(a / _SQRT2))
    return 0.5 * (math.erfc(-a / _SQRT2) - math.erfc(-b / _SQRT2))


def _lower_quantile(p: float) -> float:
    # p in (0, 0.5]; one Halley step against the erfc-based CDF.
    x = _STD_NORMAL.inv_cdf(p)
    if not math.isfinite(x):
        return x
    err = norm_cdf(x) - p
    dens = norm_pdf(x)
    if dens > 0.0:
        step = err / dens
        x -= step / (1.0 + 0.5 * x * step)
    return x


def norm_quantile(p: float) -> float:
    """Inverse of :func:`norm_cdf` on the open unit interval.

    Raises:
        DomainError: if ``p`` is not strictly between 0 and 1.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"norm_quantile needs 0 < p < 1, got {p}")
    if p <= 0.5:
        return _lower_quantile(p)
    # 1 - p is exact for p in [0.5, 1)
    return -_lower_quantile(1.0 - p)


def psi_terms(q: float, r: float, s: float,
              ctrl: SeriesControl = DEFAULT_CONTROL) -> tuple[float, int]:
    """Evaluate ``sum_{k>=0} Phi(q - k s) - Phi(q - r - k s)``.

    Returns the truncated sum together with the number of terms used. The
    k-th term is a Gaussian mass over an interval of width ``r`` centred at
    ``q - r/2 - k s``; the terms decrease once that centre is at or below
    zero, and only from there on is a small term taken as the stop signal.

    Raises:
        DomainError: for ``r < 0`` or ``s`` not positive and finite.
        SeriesConvergenceError: when ``ctrl.max_terms`` terms were summed
            and the last one is still ``>= ctrl.tol``.
    """
    if not r >= 0.0:
        raise DomainError(f"psi needs r >= 0, got {r}")
    if not (s > 0.0 and math.isfinite(s)):
        raise DomainError(f"psi needs a positive finite step s, got {s}")
    if r == 0.0 or q == -math.inf:
        return 0.0, 1

    total = 0.0
    term = 0.0
    for k in range(ctrl.max_terms):
        upper = q - k * s
        term = norm_cdf_diff(upper, upper - r)
        total += term
        if term < ctrl.tol and upper - 0.5 * r <= 0.0:
            return total, k + 1
    raise SeriesConvergenceError("psi", ctrl.max_terms, term)


def psi(q: float, r: float, s: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """The series ``Psi(q, r, s)``; see :func:`psi_terms`."""
    return psi_terms(q, r, s, ctrl)[0]
