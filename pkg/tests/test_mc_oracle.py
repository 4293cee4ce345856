import math

import numpy as np
import pytest

from wiener_extremes import mc_oracle
from wiener_extremes.errors import DomainError, ResourceError
from wiener_extremes.joint_dist import BarrierPair, cdf_max, joint_cdf
from wiener_extremes.mc_oracle import (
    BLOCK_PATHS,
    PathConfig,
    empirical_copula,
    empirical_joint_cdf,
    has_ties,
    knockout_payoffs,
    mc_price_double_barrier,
    mean_and_se,
    pseudo_observations,
    simulate_log_prices,
    simulate_triples,
)
from wiener_extremes.pricing import MarketParams, price_double_barrier


@pytest.fixture(scope="module")
def batch():
    return simulate_triples(PathConfig(3000, 64, 2.0, seed=9), barriers=[BarrierPair(-1.0, 1.0)])


def test_support_containment_is_exact(batch):
    assert np.all(batch.run_max >= np.maximum(batch.w_end, 0.0))
    assert np.all(batch.run_min <= np.minimum(batch.w_end, 0.0))
    for s in list(batch)[:50]:
        assert s.run_min <= s.w_end <= s.run_max and s.run_min <= 0.0 <= s.run_max


def test_exit_sides_consistent_with_extremes(batch):
    side = batch.exit_side[0]
    assert np.all(side[batch.run_max < 1.0] != 1)
    assert np.all(side[batch.run_min > -1.0] != -1)
    stayed = (batch.run_max < 1.0) & (batch.run_min > -1.0)
    assert np.array_equal(side == 0, stayed)


def test_two_step_paths_reproduce_the_stream():
    cfg = PathConfig(5, 2, 1.0, seed=4)
    out = simulate_triples(cfg)
    z = mc_oracle._block_stream(4, 0).standard_normal((5, 2)) * math.sqrt(0.5)
    first, end = z[:, 0], z.sum(axis=1)
    assert np.allclose(out.w_end, end, atol=1e-15)
    assert np.allclose(out.run_max, np.maximum.reduce([np.zeros(5), first, end]), atol=1e-15)
    assert np.allclose(out.run_min, np.minimum.reduce([np.zeros(5), first, end]), atol=1e-15)


@pytest.mark.parametrize("n_paths", [1, BLOCK_PATHS, 2 * BLOCK_PATHS + 17])
def test_results_independent_of_worker_count(n_paths):
    cfg = PathConfig(n_paths, 1500, 1.0, seed=123)
    bars = [BarrierPair(-0.5, 0.7)]
    serial = simulate_triples(cfg, bars, workers=1)
    threaded = simulate_triples(cfg, bars, workers=3)
    for name in ("w_end", "run_max", "run_min", "exit_side"):
        assert np.array_equal(getattr(serial, name), getattr(threaded, name))


def test_seed_changes_samples():
    a = simulate_triples(PathConfig(100, 10, seed=1))
    b = simulate_triples(PathConfig(100, 10, seed=2))
    assert not np.array_equal(a.w_end, b.w_end)


def test_terminal_value_is_centered_gaussian():
    out = simulate_triples(PathConfig(40_000, 8, 3.0, seed=5))
    assert abs(np.mean(out.w_end)) < 4 * math.sqrt(3.0 / 40_000)
    assert np.var(out.w_end) == pytest.approx(3.0, rel=0.03)


def test_discrete_maximum_approaches_continuous_law_from_above():
    n = 20_000
    est = []
    for steps in (100, 1000, 10_000):
        est.append(empirical_joint_cdf(simulate_triples(PathConfig(n, steps, seed=31)), math.inf, 1.0, math.inf))
    two_se = 2 * math.sqrt(0.25 / n)
    exact = cdf_max(1.0)
    assert est[0] >= est[1] - two_se >= est[2] - 2 * two_se >= exact - 3 * two_se
    assert est[0] > exact + 0.01


def test_empirical_cdf_close_to_analytic():
    out = simulate_triples(PathConfig(20_000, 2000, seed=8))
    for x, y, z in [(0.0, 1.0, -1.0), (0.5, 1.5, -0.5), (-0.3, 0.8, -1.2)]:
        assert abs(empirical_joint_cdf(out, x, y, z) - joint_cdf(x, y, z)) < 3 * 0.5 / math.sqrt(20_000) + 0.02


def test_pseudo_observations_are_ranks():
    out = simulate_triples(PathConfig(500, 20, seed=3))
    pobs = pseudo_observations(out)
    assert pobs.shape == (500, 3)
    assert np.array_equal(np.sort(pobs[:, 0]), np.arange(1, 501) / 500)
    # paths that never went above zero share one average rank
    at_zero = out.run_max == 0.0
    assert at_zero.any()
    assert np.all(pobs[at_zero, 1] == (at_zero.sum() + 1) / 2 / 500)
    assert empirical_copula(out, 1.0, 1.0, 1.0) == 1.0
    assert empirical_copula(out, 0.3, 1.0, 1.0, pobs) == pytest.approx(0.3)


def test_ties_detected():
    assert has_ties(simulate_triples(PathConfig(500, 2, seed=3)))
    batch = mc_oracle.PathBatch(PathConfig(3, 2), np.array([0.1, 0.2, 0.3]),
                                np.array([0.5, 0.6, 0.7]), np.array([-0.1, -0.2, -0.3]))
    assert not has_ties(batch)


def test_empty_inputs_rejected():
    empty = mc_oracle.PathBatch(PathConfig(1, 2), np.empty(0), np.empty(0), np.empty(0))
    with pytest.raises(DomainError):
        empirical_joint_cdf(empty, 0, 1, -1)
    with pytest.raises(DomainError):
        pseudo_observations(empty)


@pytest.mark.parametrize("kw", [dict(n_paths=0, n_steps=10), dict(n_paths=5, n_steps=1),
                                dict(n_paths=5, n_steps=10, t=0.0), dict(n_paths=5, n_steps=10, seed=-1),
                                dict(n_paths=5, n_steps=10, seed=2**64)])
def test_path_config_validation(kw):
    with pytest.raises(DomainError):
        PathConfig(**kw)


def test_memory_budget_enforced():
    with pytest.raises(ResourceError):
        simulate_triples(PathConfig(10**9, 10), max_mem_mb=100)
    with pytest.raises(ResourceError):
        simulate_triples(PathConfig(1000, 10), max_mem_mb=1)


def test_mean_and_se():
    mean, se = mean_and_se(np.array([1.0, 2.0, 3.0, 4.0]))
    assert mean == 2.5 and se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert math.isnan(mean_and_se(np.array([1.0]))[1])


def test_log_price_paths_are_risk_neutral():
    mp = MarketParams(100.0, 100.0, 80.0, 130.0, 2.0, 0.05, 0.2)
    paths = simulate_log_prices(mp, PathConfig(40_000, 4, seed=1))
    assert paths.config.t == 2.0
    disc_spot = math.exp(-0.1) * 100.0 * np.exp(paths.w_end)
    mean, se = mean_and_se(disc_spot)
    assert abs(mean - 100.0) < 4 * se


def test_knockout_payoffs_respect_barriers():
    mp = MarketParams(100.0, 100.0, 80.0, 130.0, 1.0, 0.05, 0.2)
    paths = simulate_log_prices(mp, PathConfig(5000, 200, seed=2))
    pay = knockout_payoffs(paths, mp, use_bg_correction=False)
    knocked = (paths.run_max >= math.log(1.3)) | (paths.run_min <= math.log(0.8))
    assert np.all(pay[knocked] == 0.0) and np.all(pay >= 0.0)
    assert np.all(knockout_payoffs(paths, mp) <= pay)


def test_bg_correction_reduces_monitoring_bias():
    mp = MarketParams(100.0, 100.0, 80.0, 130.0, 1.0, 0.05, 0.2)
    exact = price_double_barrier(mp)
    cfg = PathConfig(60_000, 50, seed=6)
    raw, se = mc_price_double_barrier(mp, cfg, use_bg_correction=False)
    corrected, se_c = mc_price_double_barrier(mp, cfg)
    assert raw - exact > 3 * se
    assert abs(corrected - exact) < 3 * se_c + 0.02
