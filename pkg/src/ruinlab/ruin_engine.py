"""Finite-time ruin under constant interest force: simulation and asymptotics.

The discounted surplus only decreases at claim instants (premiums are
nondecreasing), so first passage below zero happens at a claim epoch and the
path simulation is exact, never time-discretized: ruin occurs iff at some
claim epoch σ_k ≤ T

    Σ_{j≤k} X_j e^{−r σ_j}  >  x + ∫₀^{σ_k} e^{−rs} C(ds).

Every path therefore reduces to a scalar "ruin level"
G = max_k (S_k − premium_k); ruin at capital x is G > x, which is what makes
common random numbers across the x-grid (and exact monotonicity in x) free.

Estimators:

* crude — mean of ruin indicators, vectorized via the order-statistics
  representation of the arrival epochs (Poisson count, then conditional
  i.i.d. epochs with density λ(s)/Λ(T); the representation itself is a
  tested invariant against thinning);
* single big jump (``sbj``) — conditional Monte Carlo: one uniformly chosen
  claim index K is never drawn; given the latent value, the arrivals and the
  other n−1 claims, the probability that claim K both is the largest
  discounted claim and completes first passage is available in closed form
  from the conditional tail, and the path contributes n times it.  Exact
  epoch-wise thresholds keep the estimator unbiased for any premium rate.

The asymptotic evaluator integrates F̄(x e^{ru}) λ(u) over [0, T] by adaptive
quadrature, using the dependence model's marginal tail by default (for the
implemented models the marginal and reference tails agree asymptotically;
the raw-reference variant is also reported for comparison).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import integrate

from .dependence import DependenceModel
from .errors import DomainError, NumericalError, ParameterError
from .heavy_tails import TailDistribution
from .montecarlo import EstimateWithCI, accumulate, derive_seed
from .poisson_process import IntensityModel, PiecewiseConstantIntensity, sample_thinning

__all__ = [
    "RuinExperimentConfig",
    "PathRecord",
    "RuinEstimate",
    "simulate_path",
    "estimate_ruin_crude",
    "estimate_ruin_sbj",
    "asymptotic_integral",
    "x_grid_for_tail_scales",
    "run_ruin_experiment",
]

logger = logging.getLogger(__name__)

#: chunk size for ruin kernels; smaller than the package default because each
#: path expands into O(N(T)) columns.
RUIN_CHUNK = 1 << 15

_PILOT_PATHS = 4096
_PILOT_STREAM = 9_999


@dataclass(frozen=True)
class RuinExperimentConfig:
    """Complete description of one ruin experiment.

    ``premium_rate`` is the deterministic premium rate c.  An optional
    compound-Poisson premium stream (``premium_jump_rate`` > 0 with
    exponential jump sizes of mean ``premium_jump_mean``) is accepted for the
    sandwich invariant; the vectorized estimators require it to be off.
    """

    base: TailDistribution
    dm: DependenceModel
    im: IntensityModel
    interest: float
    horizon: float
    x_grid: tuple
    paths: int
    seed: int
    premium_rate: float = 0.0
    estimator: str = "sbj"
    pilot_fallback: bool = True
    premium_jump_rate: float = 0.0
    premium_jump_mean: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x_grid", tuple(float(v) for v in self.x_grid))
        problems = []
        if not self.interest > 0:
            problems.append(f"interest force must be positive, got {self.interest}")
        if not self.horizon > 0:
            problems.append(f"horizon must be positive, got {self.horizon}")
        if self.premium_rate < 0:
            problems.append(f"premium rate must be nonnegative, got {self.premium_rate}")
        if len(self.x_grid) == 0 or any(v <= 0 for v in self.x_grid):
            problems.append("x_grid must contain positive values")
        if any(b >= a for a, b in zip(self.x_grid[1:], self.x_grid)):
            problems.append("x_grid must be strictly increasing")
        if self.paths < 1_000:
            problems.append(f"paths must be at least 1000, got {self.paths}")
        if self.estimator not in ("crude", "sbj"):
            problems.append(f"estimator must be crude or sbj, got {self.estimator!r}")
        if self.premium_jump_rate < 0 or (self.premium_jump_rate > 0 and self.premium_jump_mean <= 0):
            problems.append("premium jumps need rate >= 0 and a positive mean when enabled")
        if self.dm.base != self.base:
            problems.append("dependence model must be built on the configured claim distribution")
        if problems:
            raise ParameterError("; ".join(problems))

    @property
    def has_premium_jumps(self) -> bool:
        return self.premium_jump_rate > 0


@dataclass(frozen=True)
class PathRecord:
    """One simulated path, with everything needed to re-derive its ruin level."""

    latent: object
    arrivals: np.ndarray
    claims: np.ndarray
    discounts: np.ndarray
    discounted_sums: np.ndarray
    premium_integrals: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    horizon: float

    @property
    def ruin_level(self) -> float:
        """max_k (S_k − premium_k); ruin at capital x iff the level exceeds x."""
        if self.arrivals.size == 0:
            return -np.inf
        return float(np.max(self.discounted_sums - self.premium_integrals))

    def ruin_level_at(self, horizon: float) -> float:
        """Ruin level using only epochs up to the given (coupled) horizon."""
        k = int(np.searchsorted(self.arrivals, horizon, side="right"))
        if k == 0:
            return -np.inf
        return float(np.max(self.discounted_sums[:k] - self.premium_integrals[:k]))

    def first_ruin_index(self, x: float):
        exceed = np.nonzero(self.discounted_sums - self.premium_integrals > x)[0]
        return int(exceed[0]) if exceed.size else None


def _discounted_premium(cfg: RuinExperimentConfig, t, jump_times=None, jump_sizes=None):
    """∫₀ᵗ e^{−rs} C(ds) for the rate-plus-jumps premium stream."""
    t = np.asarray(t, dtype=float)
    r = cfg.interest
    out = cfg.premium_rate * (1.0 - np.exp(-r * t)) / r
    if jump_times is not None and jump_times.size:
        disc = jump_sizes * np.exp(-r * jump_times)
        cum = np.concatenate([[0.0], np.cumsum(disc)])
        out = out + cum[np.searchsorted(jump_times, t, side="right")]
    return out


def simulate_path(cfg: RuinExperimentConfig, x: float, rng: np.random.Generator):
    """Simulate one surplus path; returns (ruined, record).

    Draw order is fixed: latent, thinning arrivals, claims, premium jumps.
    Ruin is checked only at claim epochs (exact; see module docstring).
    """
    if not x > 0:
        raise DomainError(f"initial surplus must be positive, got {x}")
    latent = cfg.dm.sample_latent(rng)
    arrivals = sample_thinning(cfg.im, cfg.horizon, rng).times
    n = arrivals.size
    claims = np.asarray(cfg.dm.sample_claims(latent, n, rng)) if n else np.empty(0)
    if cfg.has_premium_jumps:
        k = rng.poisson(cfg.premium_jump_rate * cfg.horizon)
        jump_times = np.sort(rng.random(k)) * cfg.horizon
        jump_sizes = rng.exponential(cfg.premium_jump_mean, k)
    else:
        jump_times = np.empty(0)
        jump_sizes = np.empty(0)
    discounts = np.exp(-cfg.interest * arrivals)
    sums = np.cumsum(claims * discounts)
    premiums = _discounted_premium(cfg, arrivals, jump_times, jump_sizes)
    record = PathRecord(latent, arrivals, claims, discounts, sums, premiums, jump_times, jump_sizes, cfg.horizon)
    return record.ruin_level > x, record


def _sorted_epoch_matrix(rng, m, cfg):
    """Counts and the (m, n_max) sorted epoch matrix with +inf padding.

    Only the epochs actually present on each path are drawn and inverted
    (flat draw scattered row-wise), then each row is sorted into order
    statistics.
    """
    total = float(cfg.im.cumulative(cfg.horizon))
    counts = rng.poisson(total, m)
    n_max = int(counts.max()) if m else 0
    if n_max == 0:
        return counts, np.empty((m, 0))
    used = np.arange(n_max) < counts[:, None]
    targets = rng.random(int(counts.sum())) * total
    flat = np.asarray(cfg.im.inverse_cumulative(targets, cfg.horizon), dtype=float)
    epochs = np.full((m, n_max), np.inf)
    epochs[used] = flat
    epochs.sort(axis=1)
    return counts, epochs


def _ruin_levels_kernel_body(rng, m, cfg):
    counts, epochs = _sorted_epoch_matrix(rng, m, cfg)
    if epochs.shape[1] == 0:
        return np.full(m, -np.inf)
    latent = cfg.dm.sample_latent(rng, m)
    claims = cfg.dm.claims_given_latent(latent, epochs.shape, rng)
    discounts = np.exp(-cfg.interest * epochs)  # 0 at the +inf padding
    sums = np.cumsum(claims * discounts, axis=1)
    levels = sums - _discounted_premium(cfg, np.where(np.isfinite(epochs), epochs, cfg.horizon))
    valid = np.arange(epochs.shape[1]) < counts[:, None]
    return np.where(valid, levels, -np.inf).max(axis=1)


def _crude_grid_kernel(rng, m, cfg, xs):
    if cfg.has_premium_jumps:
        levels = np.empty(m)
        for i in range(m):  # slow reference path; premium jumps are sandwich-test scale
            _, record = simulate_path(cfg, float(xs[0]), rng)
            levels[i] = record.ruin_level
    else:
        levels = _ruin_levels_kernel_body(rng, m, cfg)
    hits = (levels[:, None] > np.asarray(xs)).sum(axis=0).astype(float)
    return (hits,)


def _sbj_grid_kernel(rng, m, cfg, xs):
    if cfg.has_premium_jumps:
        raise ParameterError("the single-big-jump estimator requires a deterministic premium rate")
    xs = np.asarray(xs, dtype=float)
    counts, epochs = _sorted_epoch_matrix(rng, m, cfg)
    n_cols = epochs.shape[1]
    if n_cols == 0:
        zeros = np.zeros(xs.size)
        return zeros, zeros
    latent = cfg.dm.sample_latent(rng, m)
    claims = cfg.dm.claims_given_latent(latent, epochs.shape, rng)
    discounts = np.exp(-cfg.interest * epochs)

    # Index K of the claim to integrate out, uniform among the path's claims;
    # its drawn value is simply never used.
    k_idx = np.minimum((rng.random(m) * np.maximum(counts, 1)).astype(np.int64), np.maximum(counts - 1, 0))
    idx = np.arange(n_cols)
    valid = idx < counts[:, None]
    not_k = idx != k_idx[:, None]

    y = claims * discounts
    y_others = np.where(not_k, y, 0.0)
    partial = np.cumsum(y_others, axis=1)  # S_k without claim K
    max_others = np.maximum(np.where(valid & not_k, y, -np.inf).max(axis=1, initial=0.0), 0.0)
    premium = _discounted_premium(cfg, np.where(np.isfinite(epochs), epochs, cfg.horizon))
    d_k = np.take_along_axis(discounts, k_idx[:, None], axis=1)[:, 0]
    safe_dk = np.where(counts > 0, d_k, 1.0)
    lat_arr = np.asarray(latent, dtype=float)

    before_k = valid & (idx < k_idx[:, None])
    from_k = valid & (idx >= k_idx[:, None])
    sums = np.zeros(xs.size)
    sums_sq = np.zeros(xs.size)
    for j, x in enumerate(xs):
        thresholds = x + premium
        ruined_before = ((partial > thresholds) & before_k).any(axis=1)
        shortfall = np.where(from_k, thresholds - partial, np.inf).min(axis=1)
        t_star = np.where(ruined_before, max_others, np.maximum(max_others, shortfall))
        contrib = np.where(
            counts > 0,
            counts * cfg.dm.conditional_tail(lat_arr, t_star / safe_dk),
            0.0,
        )
        sums[j] = contrib.sum()
        sums_sq[j] = (contrib * contrib).sum()
    return sums, sums_sq


def _crude_grid(cfg: RuinExperimentConfig, xs, seed: int, workers=None):
    (hits,) = accumulate(seed, cfg.paths, _crude_grid_kernel, (cfg, tuple(xs)), RUIN_CHUNK, workers)
    return [EstimateWithCI.from_hits(float(h), cfg.paths) for h in np.atleast_1d(hits)]


def _sbj_grid(cfg: RuinExperimentConfig, xs, seed: int, workers=None):
    sums, sums_sq = accumulate(seed, cfg.paths, _sbj_grid_kernel, (cfg, tuple(xs)), RUIN_CHUNK, workers)
    return [
        EstimateWithCI.from_sums(float(s), float(s2), cfg.paths)
        for s, s2 in zip(np.atleast_1d(sums), np.atleast_1d(sums_sq))
    ]


def _pilot_variances(cfg: RuinExperimentConfig, xs, seed: int):
    """Per-x sample variances of the SBJ contribution and the crude indicator."""
    pilot_seed = derive_seed(seed, _PILOT_STREAM)
    pilot = replace(cfg, paths=_PILOT_PATHS, pilot_fallback=False)
    sums, sums_sq = accumulate(pilot_seed, _PILOT_PATHS, _sbj_grid_kernel, (pilot, tuple(xs)), RUIN_CHUNK)
    (hits,) = accumulate(pilot_seed, _PILOT_PATHS, _crude_grid_kernel, (pilot, tuple(xs)), RUIN_CHUNK)
    n = _PILOT_PATHS
    mean = np.atleast_1d(sums) / n
    var_sbj = np.maximum(np.atleast_1d(sums_sq) / n - mean**2, 0.0)
    p = np.atleast_1d(hits) / n
    var_crude = p * (1.0 - p)
    return var_sbj, var_crude


def estimate_ruin_crude(cfg: RuinExperimentConfig, x: float, seed: int | None = None) -> EstimateWithCI:
    """Crude Monte Carlo estimate of the finite-time ruin probability at x.

    Calls sharing a seed share every path, so estimates along an x-grid are
    pathwise monotone (the per-path ruin level is simply re-thresholded).
    """
    if not x > 0:
        raise DomainError(f"initial surplus must be positive, got {x}")
    return _crude_grid(cfg, [float(x)], cfg.seed if seed is None else seed)[0]


def estimate_ruin_sbj(cfg: RuinExperimentConfig, x: float, seed: int | None = None) -> EstimateWithCI:
    """Single-big-jump (conditional) estimate of the ruin probability at x.

    When ``cfg.pilot_fallback`` is set, a pilot run compares the estimator's
    variance against crude Monte Carlo and falls back to crude (with a logged
    notice) if conditioning does not pay at this x.
    """
    if not x > 0:
        raise DomainError(f"initial surplus must be positive, got {x}")
    use_seed = cfg.seed if seed is None else seed
    if cfg.pilot_fallback:
        var_sbj, var_crude = _pilot_variances(cfg, [float(x)], use_seed)
        if var_sbj[0] > var_crude[0]:
            logger.info(
                "sbj pilot variance %.3e exceeds crude %.3e at x=%g; falling back to crude",
                var_sbj[0],
                var_crude[0],
                x,
            )
            return estimate_ruin_crude(cfg, x, use_seed)
    return _sbj_grid(cfg, [float(x)], use_seed)[0]


def asymptotic_integral(
    base: TailDistribution,
    dm: DependenceModel,
    im: IntensityModel,
    interest: float,
    horizon: float,
    x: float,
    use_marginal: bool = True,
) -> float:
    """∫₀ᵀ F̄(x e^{ru}) λ(u) du by adaptive quadrature (relative tol 1e-9).

    ``use_marginal`` selects the dependence model's exact marginal tail
    (the default); the raw reference tail is available for comparison.
    """
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    if not horizon > 0 or not interest > 0:
        raise DomainError("horizon and interest must be positive")
    tail = dm.marginal_tail if use_marginal else base.tail

    def integrand(u):
        lam = float(np.asarray(im.intensity(u)))
        return float(tail(x * np.exp(interest * u))) * lam

    points = None
    if isinstance(im, PiecewiseConstantIntensity):
        points = [b for b in im.breaks if 0.0 < b < horizon]
    value, err = integrate.quad(
        integrand, 0.0, horizon, epsabs=0.0, epsrel=1e-9, limit=500, points=points
    )
    if not np.isfinite(value) or (value > 0 and err > 1e-6 * value):
        raise NumericalError(
            f"asymptotic integral quadrature failed at x={x!r}", achieved=err, requested=1e-6 * value
        )
    return float(value)


def x_grid_for_tail_scales(
    base: TailDistribution,
    dm: DependenceModel,
    im: IntensityModel,
    interest: float,
    horizon: float,
    scales: Sequence[float],
    use_marginal: bool = True,
) -> tuple:
    """Resolve target tail scales into an increasing x-grid.

    The scale of a ruin experiment is the size of the quantity being
    estimated, so x solves ∫₀ᵀ F̄(x e^{ru}) λ(u) du = s by bisection in
    log-x (the integral is strictly decreasing in x).
    """
    scales = [float(s) for s in scales]
    if any(not 0 < s for s in scales):
        raise DomainError(f"tail scales must be positive, got {scales}")

    def value(x):
        return asymptotic_integral(base, dm, im, interest, horizon, x, use_marginal)

    out = []
    for s in scales:
        lo = max(base.support_min, 1e-12) * (1.0 + 1e-9) + 1e-300
        lo = max(lo, 1e-12)
        if value(lo) < s:
            raise DomainError(f"tail scale {s} is not reachable: integral at x→0 is below it")
        hi = max(2.0 * lo, 1.0)
        for _ in range(200):
            if value(hi) < s:
                break
            hi *= 4.0
        else:
            raise NumericalError(f"failed to bracket tail scale {s}")
        log_lo, log_hi = np.log(lo), np.log(hi)
        for _ in range(80):
            mid = 0.5 * (log_lo + log_hi)
            if value(np.exp(mid)) >= s:
                log_lo = mid
            else:
                log_hi = mid
            if log_hi - log_lo < 1e-12:
                break
        out.append(float(np.exp(0.5 * (log_lo + log_hi))))
    grid = tuple(sorted(out))
    if any(b >= a for a, b in zip(grid[1:], grid)):
        raise DomainError("tail scales resolve to a non-increasing x-grid; scales must be distinct")
    return grid


@dataclass(frozen=True)
class RuinEstimate:
    """One x-grid row: estimate, asymptotic value and their ratio."""

    x: float
    psi_hat: EstimateWithCI
    asymptotic_value: float
    ratio: float
    asymptotic_base: float
    estimator: str

    def __post_init__(self):
        if not -1e-12 <= self.psi_hat.point <= 1.0 + 1e-12:
            raise ParameterError(f"ruin probability estimate {self.psi_hat.point} outside [0, 1]")
        if not self.asymptotic_value > 0:
            raise ParameterError(f"asymptotic value must be positive, got {self.asymptotic_value}")


def run_ruin_experiment(cfg: RuinExperimentConfig, workers: int | None = None):
    """Estimate ψ and the asymptotic integral over the configured x-grid.

    Returns one :class:`RuinEstimate` per grid point, computed on common
    random numbers across the grid.
    """
    xs = list(cfg.x_grid)
    if cfg.estimator == "crude":
        estimates = _crude_grid(cfg, xs, cfg.seed, workers)
        tags = ["crude"] * len(xs)
    else:
        if cfg.pilot_fallback:
            var_sbj, var_crude = _pilot_variances(cfg, xs, cfg.seed)
            use_sbj = var_sbj <= var_crude
            for j, x in enumerate(xs):
                if not use_sbj[j]:
                    logger.info(
                        "sbj pilot variance %.3e exceeds crude %.3e at x=%g; falling back to crude",
                        var_sbj[j],
                        var_crude[j],
                        x,
                    )
        else:
            use_sbj = np.ones(len(xs), dtype=bool)
        estimates = [None] * len(xs)
        tags = [None] * len(xs)
        sbj_xs = [x for j, x in enumerate(xs) if use_sbj[j]]
        crude_xs = [x for j, x in enumerate(xs) if not use_sbj[j]]
        if sbj_xs:
            for x, est in zip(sbj_xs, _sbj_grid(cfg, sbj_xs, cfg.seed, workers)):
                j = xs.index(x)
                estimates[j] = est
                tags[j] = "sbj"
        if crude_xs:
            for x, est in zip(crude_xs, _crude_grid(cfg, crude_xs, cfg.seed, workers)):
                j = xs.index(x)
                estimates[j] = est
                tags[j] = "crude"

    out = []
    for x, est, tag in zip(xs, estimates, tags):
        asym = asymptotic_integral(cfg.base, cfg.dm, cfg.im, cfg.interest, cfg.horizon, x, use_marginal=True)
        asym_base = asymptotic_integral(cfg.base, cfg.dm, cfg.im, cfg.interest, cfg.horizon, x, use_marginal=False)
        out.append(RuinEstimate(x, est, asym, est.point / asym, asym_base, tag))
    return out
