"""Brute-force Monte-Carlo oracle for the running extremes of Brownian paths.

Paths are built from exact Gaussian increments on a uniform grid and the
extremes are taken over the grid points (including ``t = 0``). Nothing here
uses the analytic formulas, so agreement with them is informative.

Random numbers come from PCG64 streams keyed by ``(seed, block)`` where a
block is a fixed run of ``BLOCK_PATHS`` consecutive paths. The mapping from
path index to stream does not depend on how blocks are scheduled, so
serial and threaded runs give bit-identical results.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba
import numpy as np
from scipy.stats import rankdata

from .errors import DomainError, ResourceError
from .joint_dist import BarrierPair
from .pricing import MarketParams

BLOCK_PATHS = 1024
TIME_CHUNK = 1024
DEFAULT_MAX_MEM_MB = 2048
# Broadie-Glasserman-Kou constant: -zeta(1/2) / sqrt(2 pi)
BG_BETA = 0.5826


@dataclass(frozen=True)
class PathConfig:
    n_paths: int
    n_steps: int
    t: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError(f"n_paths must be >= 1, got {self.n_paths}")
        if self.n_steps < 2:
            raise DomainError(f"n_steps must be >= 2, got {self.n_steps}")
        if not (self.t > 0.0 and math.isfinite(self.t)):
            raise DomainError(f"t must be positive and finite, got {self.t}")
        if not (0 <= self.seed < 2**64):
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def dt(self) -> float:
        return self.t / self.n_steps


class TripleSample(NamedTuple):
    w_end: float
    run_max: float
    run_min: float


@dataclass
class PathBatch:
    """Per-path terminal value and grid extremes of simulated paths.

    ``exit_side[j, i]`` is ``+1`` if path ``i`` reached ``barriers[j].y_bar``
    before ``barriers[j].z_bar`` (on the grid), ``-1`` for the reverse and
    ``0`` if it stayed strictly inside.
    """

    config: PathConfig
    w_end: np.ndarray
    run_max: np.ndarray
    run_min: np.ndarray
    barriers: tuple[BarrierPair, ...] = ()
    exit_side: np.ndarray | None = None

    def __len__(self) -> int:
        return self.w_end.shape[0]

    def __getitem__(self, i: int) -> TripleSample:
        return TripleSample(float(self.w_end[i]), float(self.run_max[i]), float(self.run_min[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


@numba.njit(nogil=True, cache=True)
def _advance(z, drift, vol, x, hi, lo, uppers, lowers, side):
    n_paths, n_cols = z.shape
    n_bar = uppers.shape[0]
    for i in range(n_paths):
        xi = x[i]
        h = hi[i]
        l = lo[i]
        for j in range(n_cols):
            xi += drift + vol * z[i, j]
            if xi > h:
                h = xi
            elif xi < l:
                l = xi
            for b in range(n_bar):
                if side[b, i] == 0:
                    if xi >= uppers[b]:
                        side[b, i] = 1
                    elif xi <= lowers[b]:
                        side[b, i] = -1
        x[i] = xi
        hi[i] = h
        lo[i] = l


def _block_stream(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _run_block(cfg: PathConfig, block: int, drift: float, vol: float,
               uppers: np.ndarray, lowers: np.ndarray):
    start = block * BLOCK_PATHS
    rows = min(BLOCK_PATHS, cfg.n_paths - start)
    rng = _block_stream(cfg.seed, block)
    x = np.zeros(rows)
    hi = np.zeros(rows)
    lo = np.zeros(rows)
    side = np.zeros((uppers.shape[0], rows), dtype=np.int8)
    buf = np.empty(rows * TIME_CHUNK)
    sd = math.sqrt(cfg.dt)
    done = 0
    while done < cfg.n_steps:
        cols = min(TIME_CHUNK, cfg.n_steps - done)
        z = buf[: rows * cols].reshape(rows, cols)
        rng.standard_normal(out=z)
        _advance(z, drift * cfg.dt, vol * sd, x, hi, lo, uppers, lowers, side)
        done += cols
    return start, x, hi, lo, side


def _check_budget(cfg: PathConfig, n_bar: int, workers: int, max_mem_mb: float | None):
    budget = DEFAULT_MAX_MEM_MB if max_mem_mb is None else max_mem_mb
    need = cfg.n_paths * (24 + n_bar) + workers * BLOCK_PATHS * TIME_CHUNK * 8
    if need > budget * 2**20:
        raise ResourceError(
            f"simulation needs about {need / 2**20:.0f} MB, budget is {budget:.0f} MB"
        )


def _simulate(cfg: PathConfig, drift: float, vol: float,
              barriers: Sequence[BarrierPair], workers: int,
              max_mem_mb: float | None) -> PathBatch:
    barriers = tuple(barriers)
    workers = max(1, int(workers))
    _check_budget(cfg, len(barriers), workers, max_mem_mb)
    uppers = np.array([b.y_bar for b in barriers], dtype=float)
    lowers = np.array([b.z_bar for b in barriers], dtype=float)

    w_end = np.empty(cfg.n_paths)
    run_max = np.empty(cfg.n_paths)
    run_min = np.empty(cfg.n_paths)
    side = np.zeros((len(barriers), cfg.n_paths), dtype=np.int8)

    def store(res):
        start, x, hi, lo, sd = res
        stop = start + x.shape[0]
        w_end[start:stop] = x
        run_max[start:stop] = hi
        run_min[start:stop] = lo
        side[:, start:stop] = sd

    n_blocks = -(-cfg.n_paths // BLOCK_PATHS)
    job = lambda blk: _run_block(cfg, blk, drift, vol, uppers, lowers)  # noqa: E731
    if workers == 1:
        for blk in range(n_blocks):
            store(job(blk))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(job, range(n_blocks)):
                store(res)
    return PathBatch(cfg, w_end, run_max, run_min, barriers, side if barriers else None)


def simulate_triples(cfg: PathConfig, barriers: Sequence[BarrierPair] = (),
                     workers: int = 1, max_mem_mb: float | None = None) -> PathBatch:
    """Simulate ``(W_t, M_t, m_t)`` on ``cfg.n_paths`` discretized paths.

    Optionally records, for each pair in ``barriers``, which side of the
    corridor each path left first.

    Raises:
        ResourceError: if the request exceeds ``max_mem_mb``.
    """
    return _simulate(cfg, 0.0, 1.0, barriers, workers, max_mem_mb)


def empirical_joint_cdf(samples: PathBatch, x: float, y: float, z: float) -> float:
    """Fraction of samples with ``w_end <= x``, ``run_max <= y`` and ``run_min <= z``."""
    if len(samples) == 0:
        raise DomainError("empirical_joint_cdf needs at least one sample")
    hit = (samples.w_end <= x) & (samples.run_max <= y) & (samples.run_min <= z)
    return float(np.count_nonzero(hit)) / len(samples)


def pseudo_observations(samples: PathBatch) -> np.ndarray:
    """Rank-transform the three coordinates to ``(n, 3)`` values in ``(0, 1]``.

    Average ranks divided by ``n``. On a grid some paths never leave one side
    of zero, so ``run_max == 0`` or ``run_min == 0`` repeats; those ties share
    their average rank.
    """
    n = len(samples)
    if n == 0:
        raise DomainError("pseudo_observations needs at least one sample")
    cols = (samples.w_end, samples.run_max, samples.run_min)
    return np.column_stack([rankdata(c, method="average") / n for c in cols])


def has_ties(samples: PathBatch) -> bool:
    return any(np.unique(c).size < c.size for c in (samples.w_end, samples.run_max, samples.run_min))


def empirical_copula(samples: PathBatch, u: float, v: float, w: float,
                     pobs: np.ndarray | None = None) -> float:
    """Empirical copula of the triples at ``(u, v, w)``.

    Pass precomputed ``pobs`` from :func:`pseudo_observations` when
    evaluating many points.
    """
    if pobs is None:
        pobs = pseudo_observations(samples)
    if pobs.shape[0] == 0:
        raise DomainError("empirical_copula needs at least one sample")
    hit = (pobs[:, 0] <= u) & (pobs[:, 1] <= v) & (pobs[:, 2] <= w)
    return float(np.count_nonzero(hit)) / pobs.shape[0]


# ---------------------------------------------------------------------------
# double-barrier call under risk-neutral GBM

def simulate_log_prices(mp: MarketParams, cfg: PathConfig, workers: int = 1,
                        max_mem_mb: float | None = None) -> PathBatch:
    """Paths of ``log(S_t / S_0)`` under the risk-neutral measure, horizon ``mp.t_mat``.

    ``cfg.t`` is ignored in favour of the option maturity.
    """
    cfg = PathConfig(cfg.n_paths, cfg.n_steps, mp.t_mat, cfg.seed)
    drift = mp.r_rate - 0.5 * mp.sigma**2
    return _simulate(cfg, drift, mp.sigma, (), workers, max_mem_mb)


def knockout_payoffs(paths: PathBatch, mp: MarketParams,
                     use_bg_correction: bool = True) -> np.ndarray:
    """Discounted double-knock-out call payoffs of simulated log-price paths."""
    log_lo = math.log(mp.a_low / mp.s0)
    log_hi = math.log(mp.b_high / mp.s0)
    if use_bg_correction:
        shift = BG_BETA * mp.sigma * math.sqrt(paths.config.dt)
        log_lo += shift
        log_hi -= shift
    alive = (paths.run_min > log_lo) & (paths.run_max < log_hi)
    s_end = mp.s0 * np.exp(paths.w_end)
    return math.exp(-mp.r_rate * mp.t_mat) * np.where(alive, np.maximum(s_end - mp.k_strike, 0.0), 0.0)


def mean_and_se(values: np.ndarray) -> tuple[float, float]:
    n = values.shape[0]
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return mean, se


def mc_price_double_barrier(mp: MarketParams, cfg: PathConfig, use_bg_correction: bool = True,
                            workers: int = 1,
                            max_mem_mb: float | None = None) -> tuple[float, float]:
    """Monte-Carlo knock-out call price and its standard error.

    Barriers are monitored on the simulation grid; with
    ``use_bg_correction`` they are moved inward by
    ``exp(BG_BETA * sigma * sqrt(dt))`` to mimic continuous monitoring.
    """
    paths = simulate_log_prices(mp, cfg, workers, max_mem_mb)
    return mean_and_se(knockout_payoffs(paths, mp, use_bg_correction))
