"""Tail equivalences of randomly weighted sums, weighted maxima and marginal sums.

For conditionally independent claims X_i and positive bounded weights θ_i the
three quantities

    P(Σ θ_i X_i > x),   P(max θ_i X_i > x),   Σ P(θ_i X_i > x)

are asymptotically equal; :func:`estimate_tail_triple` measures all three on
common random numbers.  :func:`uniformity_sweep` scans deterministic weight
lattices inside [a, b]^n for the uniform version of the sum equivalence, and
:func:`kesten_bound_probe` checks the geometric-in-n envelope
V(ε)·(1+ε)^n·F̄(x) on unweighted n-fold sums.

Estimation regime: when the reference tail at the most favorable weight,
F̄(x / b), falls below ``RARE_EVENT_TAIL`` the crude indicators are replaced
by a conditional single-big-jump estimator (the same construction as the ruin
engine's): the sum probability integrates the largest weighted claim out in
closed form, and the max and marginal probabilities become conditional
expectations given the latent draw and weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import ClassVar, Sequence

import numpy as np

from .dependence import DependenceModel
from .errors import BudgetError, DomainError, ParameterError
from .montecarlo import DEFAULT_CHUNK, EstimateWithCI, accumulate

__all__ = [
    "DeterministicWeights",
    "UniformWeights",
    "TailTriple",
    "estimate_tail_triple",
    "UniformitySweep",
    "uniformity_sweep",
    "KestenProbe",
    "kesten_bound_probe",
    "RARE_EVENT_TAIL",
    "SWEEP_BUDGET",
]

#: below this reference-tail scale the crude indicator estimators switch to
#: the conditional single-big-jump form.
RARE_EVENT_TAIL = 1e-5

#: documented budget for uniformity sweeps: n · grid_per_dim**n must not exceed it.
SWEEP_BUDGET = 100_000


@dataclass(frozen=True)
class DeterministicWeights:
    """Fixed positive weights c_1..c_n; bound b = max(c)."""

    values: tuple

    kind: ClassVar[str] = "deterministic"

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) == 0:
            raise ParameterError("need at least one weight")
        if any(not np.isfinite(v) or v <= 0 for v in values):
            raise ParameterError(f"deterministic weights must lie in (0, inf), got {values}")

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def bound(self) -> float:
        return max(self.values)

    def draw(self, rng, m):
        return None  # constant; no randomness consumed

    def label(self) -> str:
        return "|".join(repr(v) for v in self.values)


@dataclass(frozen=True)
class UniformWeights:
    """n i.i.d. weights on (low, high]; P(0 < θ_i ≤ high) = 1 exactly."""

    n: int
    low: float
    high: float

    kind: ClassVar[str] = "uniform"

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"need at least one weight, got n={self.n}")
        if not (0 < self.low < self.high) or not np.isfinite(self.high):
            raise ParameterError(f"uniform weights require 0 < low < high < inf, got ({self.low}, {self.high})")

    @property
    def bound(self) -> float:
        return self.high

    def draw(self, rng, m):
        # high − U·(high−low) lies in (low, high], keeping the bound sharp.
        return self.high - rng.random((m, self.n)) * (self.high - self.low)

    def label(self) -> str:
        return f"uniform({self.low!r},{self.high!r}]^{self.n}"


@dataclass(frozen=True)
class TailTriple:
    """The three tail estimates at one threshold, on common random numbers."""

    x: float
    p_sum: EstimateWithCI
    p_max: EstimateWithCI
    sum_marginals: EstimateWithCI
    estimator: str

    @property
    def ratio_sum(self) -> float:
        return _safe_ratio(self.p_sum.point, self.sum_marginals.point)

    @property
    def ratio_max(self) -> float:
        return _safe_ratio(self.p_max.point, self.sum_marginals.point)


def _safe_ratio(num: float, den: float) -> float:
    return num / den if den > 0 else float("nan")


def _weighted_claims(rng, m, dm, weights):
    latent = dm.sample_latent(rng, m)
    claims = dm.claims_given_latent(latent, (m, weights.n), rng)
    theta = weights.draw(rng, m)
    if theta is None:
        y = claims * np.asarray(weights.values)
        theta = np.broadcast_to(np.asarray(weights.values), claims.shape)
    else:
        y = claims * theta
    return latent, y, theta


def _crude_counts(y, x):
    s_hit = y.sum(axis=1) > x
    m_hit = y.max(axis=1) > x
    counts = (y > x).sum(axis=1).astype(float)
    violations = np.count_nonzero(m_hit & ~s_hit)  # max ≤ sum must hold pathwise
    return (
        float(np.count_nonzero(s_hit)),
        float(np.count_nonzero(m_hit)),
        float(counts.sum()),
        float((counts * counts).sum()),
        float(violations),
    )


def _triple_crude_kernel(rng, m, dm, weights, x):
    _, y, _ = _weighted_claims(rng, m, dm, weights)
    return _crude_counts(y, x)


def _sbj_statistics(dm, latent, y, theta, x):
    """Per-path SBJ statistics: (sum estimator Z, conditional max prob, conditional marginal sum)."""
    m, n = y.shape
    lat_col = np.asarray(latent, dtype=float).reshape(m, 1)
    if n >= 2:
        part = np.partition(y, n - 2, axis=1)
        top, second = part[:, -1], part[:, -2]
    else:
        top = y[:, 0]
        second = np.zeros(m)
    s_all = y.sum(axis=1)
    m_minus = np.where(y == top[:, None], second[:, None], top[:, None])
    thresholds = np.maximum(m_minus, x - (s_all[:, None] - y))
    z = dm.conditional_tail(lat_col, thresholds / theta).sum(axis=1)
    q = dm.conditional_tail(lat_col, x / theta)
    q_sum = q.sum(axis=1)
    with np.errstate(divide="ignore"):
        p_max = -np.expm1(np.log1p(-np.minimum(q, 1.0)).sum(axis=1))
    return z, p_max, q_sum


def _triple_sbj_kernel(rng, m, dm, weights, x):
    latent, y, theta = _weighted_claims(rng, m, dm, weights)
    z, p_max, q_sum = _sbj_statistics(dm, latent, y, theta, x)
    return (
        float(z.sum()),
        float((z * z).sum()),
        float(p_max.sum()),
        float((p_max * p_max).sum()),
        float(q_sum.sum()),
        float((q_sum * q_sum).sum()),
    )


def _pick_estimator(dm, weights, x, estimator):
    if estimator not in ("auto", "crude", "sbj"):
        raise ParameterError(f"estimator must be one of auto|crude|sbj, got {estimator!r}")
    if estimator != "auto":
        return estimator
    return "crude" if dm.base.tail(x / weights.bound) >= RARE_EVENT_TAIL else "sbj"


def estimate_tail_triple(
    dm: DependenceModel,
    weights,
    x: float,
    paths: int,
    seed: int,
    estimator: str = "auto",
    chunk_size: int = DEFAULT_CHUNK,
    workers: int | None = None,
) -> TailTriple:
    """Estimate (P(Σθ_iX_i > x), P(max θ_iX_i > x), ΣP(θ_iX_i > x)) with CIs.

    All three statistics share each path's latent draw, claims and weights,
    so their pathwise orderings are exact.  Calls with the same seed share
    the full random stream, which is how common random numbers across an
    x-grid are obtained.
    """
    if paths < 1_000:
        raise DomainError(f"paths must be at least 1000, got {paths}")
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    mode = _pick_estimator(dm, weights, x, estimator)
    if mode == "crude":
        s_hits, m_hits, c_tot, c_sq, violations = accumulate(
            seed, paths, _triple_crude_kernel, (dm, weights, x), chunk_size, workers
        )
        if violations:
            raise AssertionError("pathwise max/sum domination violated; nonnegativity broken")
        triple = TailTriple(
            x,
            EstimateWithCI.from_hits(float(s_hits), paths),
            EstimateWithCI.from_hits(float(m_hits), paths),
            EstimateWithCI.from_sums(float(c_tot), float(c_sq), paths),
            "crude",
        )
        if triple.p_max.point > triple.p_sum.point or triple.sum_marginals.point < triple.p_max.point:
            raise AssertionError("common-random-number ordering violated")
        return triple
    z, z2, pm, pm2, q, q2 = accumulate(seed, paths, _triple_sbj_kernel, (dm, weights, x), chunk_size, workers)
    return TailTriple(
        x,
        EstimateWithCI.from_sums(float(z), float(z2), paths),
        EstimateWithCI.from_sums(float(pm), float(pm2), paths),
        EstimateWithCI.from_sums(float(q), float(q2), paths),
        "sbj",
    )


@dataclass(frozen=True)
class UniformitySweep:
    """Lattice scan result: per-point triples plus the worst-case ratio pair."""

    x: float
    lattice: np.ndarray
    triples: tuple
    min_ratio: float
    max_ratio: float


def _sweep_crude_kernel(rng, m, dm, n, lattice, x):
    latent = dm.sample_latent(rng, m)
    claims = dm.claims_given_latent(latent, (m, n), rng)
    out = []
    for c in lattice:
        out.extend(_crude_counts(claims * c, x))
    return tuple(out)


def _sweep_sbj_kernel(rng, m, dm, n, lattice, x):
    latent = dm.sample_latent(rng, m)
    claims = dm.claims_given_latent(latent, (m, n), rng)
    out = []
    for c in lattice:
        theta = np.broadcast_to(np.asarray(c), claims.shape)
        z, p_max, q_sum = _sbj_statistics(dm, latent, claims * c, theta, x)
        out.extend(
            (
                float(z.sum()),
                float((z * z).sum()),
                float(p_max.sum()),
                float((p_max * p_max).sum()),
                float(q_sum.sum()),
                float((q_sum * q_sum).sum()),
            )
        )
    return tuple(out)


def uniformity_sweep(
    dm: DependenceModel,
    a: float,
    b: float,
    n: int,
    grid_per_dim: int,
    x: float,
    paths: int,
    seed: int,
    estimator: str = "auto",
    chunk_size: int = DEFAULT_CHUNK,
    workers: int | None = None,
) -> UniformitySweep:
    """p_sum / sum_marginals over the lattice of weight vectors in [a, b]^n.

    All lattice points share the same claims (common random numbers); the
    all-zero corner cannot occur because a > 0 is required.  Returns the
    per-point triples and the (min, max) of the ratio over the lattice.
    """
    if not (0 < a < b):
        raise DomainError(f"need 0 < a < b, got a={a}, b={b}")
    if grid_per_dim < 2:
        raise DomainError(f"grid_per_dim must be at least 2, got {grid_per_dim}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    lattice_size = grid_per_dim**n
    if n * lattice_size > SWEEP_BUDGET:
        raise BudgetError(
            f"lattice budget exceeded: n*grid_per_dim**n = {n * lattice_size} > {SWEEP_BUDGET}"
        )
    if paths < 1_000:
        raise DomainError(f"paths must be at least 1000, got {paths}")
    axes = np.linspace(a, b, grid_per_dim)
    lattice = np.asarray(list(product(axes, repeat=n)), dtype=float)

    mode = _pick_estimator(dm, DeterministicWeights(tuple(np.full(n, b))), x, estimator)
    if mode == "crude":
        flat = accumulate(seed, paths, _sweep_crude_kernel, (dm, n, lattice, x), chunk_size, workers)
        per_point = 5
    else:
        flat = accumulate(seed, paths, _sweep_sbj_kernel, (dm, n, lattice, x), chunk_size, workers)
        per_point = 6

    triples = []
    for j, c in enumerate(lattice):
        vals = [float(v) for v in flat[j * per_point : (j + 1) * per_point]]
        if mode == "crude":
            s_hits, m_hits, c_tot, c_sq, violations = vals
            if violations:
                raise AssertionError("pathwise max/sum domination violated")
            triples.append(
                TailTriple(
                    x,
                    EstimateWithCI.from_hits(s_hits, paths),
                    EstimateWithCI.from_hits(m_hits, paths),
                    EstimateWithCI.from_sums(c_tot, c_sq, paths),
                    "crude",
                )
            )
        else:
            z, z2, pm, pm2, q, q2 = vals
            triples.append(
                TailTriple(
                    x,
                    EstimateWithCI.from_sums(z, z2, paths),
                    EstimateWithCI.from_sums(pm, pm2, paths),
                    EstimateWithCI.from_sums(q, q2, paths),
                    "sbj",
                )
            )
    ratios = np.asarray([t.ratio_sum for t in triples])
    return UniformitySweep(x, lattice, tuple(triples), float(np.nanmin(ratios)), float(np.nanmax(ratios)))


@dataclass(frozen=True)
class KestenProbe:
    """Ratios of n-fold sum tails to the geometric envelope (1+ε)^n F̄(x)."""

    x: float
    eps: float
    reference_tail: float
    estimates: tuple
    bound_ratios: tuple

    @property
    def v_hat(self) -> float:
        """Smallest constant V making the envelope hold over the probed n."""
        return max(self.bound_ratios)

    def rows(self):
        for i, (est, ratio) in enumerate(zip(self.estimates, self.bound_ratios)):
            yield i + 1, est, ratio


def _kesten_kernel(rng, m, dm, n_max, x):
    latent = dm.sample_latent(rng, m)
    claims = dm.claims_given_latent(latent, (m, n_max), rng)
    hits = (np.cumsum(claims, axis=1) > x).sum(axis=0).astype(float)
    return (hits,)


def kesten_bound_probe(
    dm: DependenceModel,
    eps: float,
    n_max: int,
    x: float,
    paths: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK,
    workers: int | None = None,
) -> KestenProbe:
    """Estimate P(Σ_{k≤n} X_k > x) for n = 1..n_max against V(ε)(1+ε)^n F̄(x).

    Requires identically distributed marginals, which every construction in
    this package provides (the latent draw is shared, claims exchangeable).
    The normalizing tail is the reference (base) tail, matching the bound's
    statement.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if n_max < 1:
        raise DomainError(f"n_max must be positive, got {n_max}")
    if paths < 1_000:
        raise DomainError(f"paths must be at least 1000, got {paths}")
    (hits,) = accumulate(seed, paths, _kesten_kernel, (dm, n_max, x), chunk_size, workers)
    fbar = dm.base.tail(x)
    estimates = tuple(EstimateWithCI.from_hits(float(h), paths) for h in hits)
    ratios = tuple(
        est.point / ((1.0 + eps) ** n * fbar) for n, est in enumerate(estimates, start=1)
    )
    return KestenProbe(x, eps, fbar, estimates, ratios)
