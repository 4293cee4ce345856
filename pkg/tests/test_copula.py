import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiener_extremes.copula import (
    copula3,
    copula3_terms,
    copula_maxmin,
    copula_wm,
    copula_wmin,
    involution_residual3,
    maxmin_rho_partial,
    quantile_max,
    quantile_min,
    quantile_w,
    self_duality_residual,
    spearman_rho_maxmin,
    spearman_rho_maxmin_terms,
    spearman_rho_wm,
    spearman_rho_wmin,
    survival_residual,
)
from wiener_extremes.errors import DomainError, SeriesConvergenceError
from wiener_extremes.joint_dist import cdf_max, cdf_min, joint_cdf_std
from wiener_extremes.special_fn import SeriesControl

unit = st.floats(0.0, 1.0)
open_unit = st.floats(1e-9, 1 - 1e-9)


def test_quantiles():
    assert quantile_w(0.8413447461) == pytest.approx(1.0, abs=1e-9)
    for p in (1e-6, 0.2, 0.5, 0.9, 1 - 1e-9):
        assert quantile_max(p) >= 0 and quantile_min(p) <= 0
        assert cdf_max(quantile_max(p)) == pytest.approx(p, abs=1e-10)
        assert cdf_min(quantile_min(p)) == pytest.approx(p, abs=1e-10)
    assert quantile_max(1e-12) == pytest.approx(0.0, abs=1e-11)
    assert quantile_min(1 - 1e-12) == pytest.approx(0.0, abs=1e-11)
    for f in (quantile_w, quantile_max, quantile_min):
        for p in (0.0, 1.0):
            with pytest.raises(DomainError):
                f(p)


@settings(max_examples=300)
@given(open_unit, open_unit, open_unit)
def test_sklar_consistency_with_joint_cdf(u, v, w):
    expected = joint_cdf_std(quantile_w(u), quantile_max(v), quantile_min(w))
    assert copula3(u, v, w) == pytest.approx(expected, abs=1e-10)


@settings(max_examples=200)
@given(unit, unit, unit)
def test_grounded_and_bounded(u, v, w):
    c = copula3(u, v, w)
    assert -1e-15 <= c <= min(u, v, w) + 1e-12
    assert copula3(0.0, v, w) == copula3(u, 0.0, w) == copula3(u, v, 0.0) == 0.0


@pytest.mark.parametrize("x", [0.0, 0.1, 0.5, 0.77, 1.0])
def test_uniform_margins(x):
    assert copula3(x, 1.0, 1.0) == x
    assert copula3(1.0, x, 1.0) == x
    assert copula3(1.0, 1.0, x) == x
    for c in (copula_wm, copula_wmin, copula_maxmin):
        assert c(x, 1.0) == x and c(1.0, x) == x


def test_margins_are_limits_of_interior_values():
    near = 1 - 1e-13
    for x in (0.1, 0.5, 0.9):
        assert copula3(x, near, near) == pytest.approx(x, abs=1e-6)
        assert copula_maxmin(x, near) == pytest.approx(x, abs=1e-6)


@settings(max_examples=200)
@given(open_unit, open_unit)
def test_bivariate_margins_of_the_triple(a, b):
    assert copula_wm(a, b) == pytest.approx(copula3(a, b, 1.0), abs=1e-14)
    assert copula_wmin(a, b) == pytest.approx(copula3(a, 1.0, b), abs=1e-14)
    assert copula_maxmin(a, b) == pytest.approx(copula3(1.0, a, b), abs=1e-14)
    # the same margins reached from the interior
    near = 1 - 1e-14
    assert copula_wm(a, b) == pytest.approx(copula3(a, b, near), abs=1e-6)


def test_branch_values():
    assert copula_wm(0.9, 0.5) == 0.5          # 1 + v < 2u
    assert copula_wmin(0.2, 0.5) == 0.2        # 2u <= w
    assert copula3(0.2, 0.5, 0.5) == pytest.approx(0.2 - (1 - copula_wm(0.8, 1.0) + 0.0) * 0 - (
        0.2 - copula_wm(0.2, 0.5)), abs=1e-15)


def test_lower_branch_matches_wm_margin():
    # with 2u <= w the path ended below the min quantile, so m <= q_min is automatic
    for u, v, w in [(0.2, 0.5, 0.5), (0.1, 0.9, 0.3), (0.05, 0.2, 0.11)]:
        assert copula3(u, v, w) == pytest.approx(copula_wm(u, v), abs=1e-15)


def _box_volume(c, lo, hi):
    dim = len(lo)
    vol = 0.0
    for corner in itertools.product((0, 1), repeat=dim):
        pt = [hi[i] if k else lo[i] for i, k in enumerate(corner)]
        vol += (-1) ** (dim - sum(corner)) * c(*pt)
    return vol


@pytest.mark.parametrize("c,dim", [(copula_wm, 2), (copula_wmin, 2), (copula_maxmin, 2), (copula3, 3)])
def test_box_volumes_nonnegative(c, dim):
    rng = random.Random(dim * 101 + hash(c.__name__) % 97)
    for _ in range(1000):
        lo, hi = zip(*(sorted((rng.random(), rng.random())) for _ in range(dim)))
        assert _box_volume(c, lo, hi) >= -1e-10


def test_involution_identity_of_triple():
    rng = random.Random(5)
    for _ in range(300):
        assert abs(involution_residual3(rng.random(), rng.random(), rng.random())) <= 1e-9


@pytest.mark.parametrize("u,v,w", [(0.0, 0.4, 0.3), (1.0, 0.4, 0.3), (0.5, 1.0, 0.0), (0.3, 0.3, 1.0)])
def test_involution_identity_on_faces(u, v, w):
    assert abs(involution_residual3(u, v, w)) <= 1e-12


def test_survival_and_self_duality_on_grid():
    grid = [i / 20 for i in range(21)]
    for a, b in itertools.product(grid, grid):
        assert abs(survival_residual(a, b)) <= 1e-12
        assert abs(self_duality_residual(a, b)) <= 1e-12


def test_rejects_out_of_range():
    for bad in (-0.1, 1.1):
        with pytest.raises(DomainError):
            copula3(bad, 0.5, 0.5)
        with pytest.raises(DomainError):
            copula_wm(0.5, bad)


def test_tolerance_halving_is_stable():
    ctrl = SeriesControl(tol=1e-6)
    rng = random.Random(2)
    for _ in range(100):
        u, v, w = rng.random(), rng.random(), rng.random()
        assert abs(copula3(u, v, w, ctrl) - copula3(u, v, w, ctrl.halved())) < ctrl.tol


def test_term_counts():
    value, n = copula3_terms(0.5, 0.5, 0.5)
    assert n >= 1 and value == copula3(0.5, 0.5, 0.5)
    assert copula3_terms(0.1, 0.5, 0.5)[1] == 0


# ---------------------------------------------------------------------------
# Spearman rho

def test_rho_wm_closed_form():
    assert spearman_rho_wm() == pytest.approx(2 - 6 / math.pi * math.acos(math.sqrt(6) / 3), abs=1e-15)
    assert spearman_rho_wm() == pytest.approx(0.8245, abs=5e-5)
    assert spearman_rho_wmin() == spearman_rho_wm()


def test_rho_maxmin_value():
    rho, n = spearman_rho_maxmin_terms()
    assert rho == pytest.approx(0.80649, abs=5e-5)
    assert n < 200
    assert spearman_rho_maxmin() == rho


def test_rho_maxmin_bracketed_by_partial_sums():
    rho = spearman_rho_maxmin()
    for n in (10, 51, 200):
        lo, hi = sorted((maxmin_rho_partial(n), maxmin_rho_partial(n + 1)))
        assert lo <= rho <= hi
    # plain partial sums converge like n^-3 toward the accelerated value
    assert abs(maxmin_rho_partial(2000) - rho) < 1e-8


def test_rho_maxmin_tolerance_halving():
    ctrl = SeriesControl(tol=1e-7)
    assert abs(spearman_rho_maxmin(ctrl) - spearman_rho_maxmin(ctrl.halved())) < ctrl.tol


def test_rho_maxmin_non_convergence():
    with pytest.raises(SeriesConvergenceError):
        spearman_rho_maxmin(SeriesControl(tol=1e-15, max_terms=6))
