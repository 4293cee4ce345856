"""Joint law of a Wiener process with its running maximum and minimum."""

from .errors import ConsistencyError, DomainError, ResourceError, SeriesConvergenceError
from .special_fn import DEFAULT_CONTROL, SeriesControl, norm_cdf, norm_pdf, norm_quantile, psi
from .joint_dist import (
    BarrierPair,
    TriplePoint,
    cdf_max,
    cdf_max_min,
    cdf_min,
    cdf_w_max,
    cdf_w_min,
    joint_cdf,
    joint_cdf_std,
    prob_exit_by,
    prob_hit_lower_first,
    prob_hit_upper_first,
    restricted_cdf_geq,
    restricted_cdf_leq,
)
from .copula import (
    CopulaPoint,
    copula3,
    copula_maxmin,
    copula_wm,
    copula_wmin,
    quantile_max,
    quantile_min,
    quantile_w,
    spearman_rho_maxmin,
    spearman_rho_wm,
    spearman_rho_wmin,
)
from .pricing import MarketParams, bs_call, double_barrier_term, price_double_barrier, price_up_and_out

from .mc_oracle import (
    PathConfig,
    empirical_copula,
    empirical_joint_cdf,
    mc_price_double_barrier,
    simulate_triples,
)

__version__ = "0.1.0"
