"""Conditionally independent claim constructions and assumption probes.

The abstract conditioning σ-algebra is realized as a single latent draw
shared by all claims of a path:

* ``Independent`` — no latent state; claims are i.i.d. base draws.
* ``CommonShock`` — X_i = Z_i + W with Z_i i.i.d. base and W a shared
  shock with bounded support [0, w_max].
* ``BoundedScaleMixture`` — X_i = Θ · Z_i with Θ a shared discrete mixing
  draw on atoms inside [θ_min, θ_max] ⊂ (0, ∞); restricted to
  dominated-variation bases (Pareto), where the envelope
  r(x) = F̄(x/θ_max)/F̄(x) stays bounded.

Given the latent draw, claims are mutually independent by construction, and
the conditional tails are available in closed form, which is what both the
assumption probes and the conditional (single-big-jump) estimators consume.
Each model's envelope r(x) satisfies P(X_i > x | latent) ≤ r(x)·F̄(x) almost
surely with the event sets B_i(x) equal to the whole space.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, ClassVar, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericalError, ParameterError
from .heavy_tails import TailDistribution

__all__ = [
    "ShockLaw",
    "UniformShock",
    "BetaShock",
    "DependenceModel",
    "Independent",
    "CommonShock",
    "BoundedScaleMixture",
    "AssumptionProbe",
    "probe_assumption_d3",
]


class ShockLaw(ABC):
    """Bounded nonnegative shock law on [0, w_max] with a density."""

    name: ClassVar[str]

    w_max: float

    @abstractmethod
    def sample(self, rng: np.random.Generator, size=None):
        ...

    @abstractmethod
    def density(self, w):
        ...


@dataclass(frozen=True)
class UniformShock(ShockLaw):
    """Uniform on [0, w_max]; the default shock law.  w_max = 0 degenerates to no shock."""

    w_max: float

    name: ClassVar[str] = "uniform"

    def __post_init__(self):
        if self.w_max < 0 or not np.isfinite(self.w_max):
            raise ParameterError(f"uniform shock requires finite w_max >= 0, got {self.w_max}")

    def sample(self, rng, size=None):
        if self.w_max == 0.0:
            return 0.0 if size is None else np.zeros(size)
        return rng.random(size) * self.w_max

    def density(self, w):
        w = np.asarray(w, dtype=float)
        if self.w_max == 0.0:
            return np.zeros_like(w)
        return np.where((w >= 0) & (w <= self.w_max), 1.0 / self.w_max, 0.0)


@dataclass(frozen=True)
class BetaShock(ShockLaw):
    """Beta(a, b) scaled onto [0, w_max]."""

    a: float
    b: float
    w_max: float

    name: ClassVar[str] = "beta"

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ParameterError(f"beta shock requires a, b > 0, got a={self.a}, b={self.b}")
        if not self.w_max > 0 or not np.isfinite(self.w_max):
            raise ParameterError(f"beta shock requires finite w_max > 0, got {self.w_max}")

    def sample(self, rng, size=None):
        return rng.beta(self.a, self.b, size) * self.w_max

    def density(self, w):
        from scipy.stats import beta as beta_dist

        w = np.asarray(w, dtype=float)
        return beta_dist.pdf(w / self.w_max, self.a, self.b) / self.w_max


class DependenceModel(ABC):
    """Latent-state construction making claims conditionally i.i.d."""

    kind: ClassVar[str]

    base: TailDistribution

    @abstractmethod
    def sample_latent(self, rng: np.random.Generator, size=None):
        """Draw the shared latent value (vectorized when size is given)."""

    @abstractmethod
    def conditional_log_tail(self, latent, t):
        """log P(X > t | latent); broadcasts latent against t."""

    @abstractmethod
    def marginal_tail(self, x):
        """Exact marginal tail P(X_i > x), integrating out the latent."""

    @abstractmethod
    def r_envelope(self, x):
        """Nondecreasing r(x) with P(X > x | latent) ≤ r(x)·F̄(x) a.s."""

    def conditional_tail(self, latent, t):
        return np.exp(self.conditional_log_tail(latent, t))

    def sample_claims(self, latent, n: int, rng: np.random.Generator):
        """n conditionally i.i.d. claims for one latent value."""
        if n < 1:
            raise DomainError(f"n must be a positive integer, got {n}")
        return self.claims_given_latent(latent, (int(n),), rng)

    @abstractmethod
    def claims_given_latent(self, latent, shape, rng: np.random.Generator):
        """Claims array of the given shape; latent broadcasts along axis 0."""

    def marginal_log_tail(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.marginal_tail(x))


@dataclass(frozen=True)
class Independent(DependenceModel):
    """Plain i.i.d. claims; the latent value is a unit token."""

    base: TailDistribution

    kind: ClassVar[str] = "independent"

    def sample_latent(self, rng, size=None):
        return None if size is None else np.zeros(size)

    def conditional_log_tail(self, latent, t):
        return self.base.log_tail(t)

    def marginal_tail(self, x):
        return self.base.tail(x)

    def r_envelope(self, x):
        x = np.asarray(x, dtype=float)
        return np.ones_like(x)

    def claims_given_latent(self, latent, shape, rng):
        return self.base.sample(rng, shape)


@dataclass(frozen=True)
class CommonShock(DependenceModel):
    """X_i = Z_i + W with a shared bounded shock W."""

    base: TailDistribution
    shock: ShockLaw

    kind: ClassVar[str] = "common_shock"

    def sample_latent(self, rng, size=None):
        return self.shock.sample(rng, size)

    def conditional_log_tail(self, latent, t):
        w = np.asarray(latent, dtype=float)
        return self.base.log_tail(np.asarray(t, dtype=float) - w)

    def marginal_tail(self, x):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if self.shock.w_max == 0.0:
            out = self.base.tail(xs)
            return float(out[0]) if scalar else out
        out = np.empty_like(xs)
        for i, xi in enumerate(xs):
            val, err = integrate.quad(
                lambda w: self.base.tail(xi - w) * self.shock.density(w),
                0.0,
                self.shock.w_max,
                epsabs=0.0,
                epsrel=1e-10,
                limit=200,
            )
            if not np.isfinite(val) or (val > 0 and err > 1e-6 * val):
                raise NumericalError(
                    f"marginal tail quadrature failed at x={xi!r}", achieved=err, requested=1e-6 * val
                )
            out[i] = val
        return float(out[0]) if scalar else out

    def r_envelope(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(self.base.log_tail(x - self.shock.w_max) - self.base.log_tail(x))

    def claims_given_latent(self, latent, shape, rng):
        w = np.asarray(latent, dtype=float)
        if w.ndim == 1 and len(shape) == 2:
            w = w[:, None]
        return self.base.sample(rng, shape) + w


@dataclass(frozen=True)
class BoundedScaleMixture(DependenceModel):
    """X_i = Θ · Z_i with Θ a shared discrete draw on positive atoms.

    The base must belong to class D (Pareto here): for lognormal or Weibull
    bases the envelope r(x) = F̄(x/θ_max)/F̄(x) grows faster than any power,
    so the third dependence-assumption quantity is not verifiable on a desk
    grid and the construction is rejected.
    """

    base: TailDistribution
    atoms: tuple
    probs: tuple

    kind: ClassVar[str] = "scale_mixture"

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)
        if len(atoms) == 0 or len(atoms) != len(probs):
            raise ParameterError("scale mixture needs matching nonempty atoms and probs")
        if any(a <= 0 or not np.isfinite(a) for a in atoms):
            raise ParameterError(f"mixing atoms must lie in (0, inf), got {atoms}")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ParameterError(f"mixing probs must be a probability vector, got {probs}")
        if not self.base.dominated_varying:
            raise ParameterError(
                f"scale mixture requires a dominated-variation (class D) base, got {self.base.family}"
            )

    @property
    def theta_max(self) -> float:
        return max(self.atoms)

    def sample_latent(self, rng, size=None):
        atoms = np.asarray(self.atoms)
        idx = rng.choice(len(atoms), size=size, p=np.asarray(self.probs))
        return atoms[idx]

    def conditional_log_tail(self, latent, t):
        theta = np.asarray(latent, dtype=float)
        return self.base.log_tail(np.asarray(t, dtype=float) / theta)

    def marginal_tail(self, x):
        x = np.asarray(x, dtype=float)
        parts = [p * self.base.tail(x / a) for a, p in zip(self.atoms, self.probs)]
        out = parts[0]
        for part in parts[1:]:
            out = out + part
        return out

    def r_envelope(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(self.base.log_tail(x / self.theta_max) - self.base.log_tail(x))

    def claims_given_latent(self, latent, shape, rng):
        theta = np.asarray(latent, dtype=float)
        if theta.ndim == 1 and len(shape) == 2:
            theta = theta[:, None]
        return self.base.sample(rng, shape) * theta


@dataclass(frozen=True)
class AssumptionProbe:
    """Envelope and limit quantities of the dependence assumptions on a grid.

    ``d3_i`` is P(complement of B_i(h(x))), identically zero here because
    both constructions take B_i(x) as the whole space.  ``d3_ii`` is
    r(x)·F̄(h(x)) and ``d3_iii_ratio`` is
    r(x)·∫_{h(x)}^{x−h(x)} F̄(x−y) F(dy) / F̄(x); tests assert each tends to
    its limit along the grid.
    """

    x_grid: np.ndarray
    r_values: np.ndarray
    d3_i: np.ndarray
    d3_ii: np.ndarray
    d3_iii_ratio: np.ndarray
    b_event: str = "whole-space"

    def rows(self):
        for i, x in enumerate(self.x_grid):
            yield x, self.r_values[i], self.d3_i[i], self.d3_ii[i], self.d3_iii_ratio[i]


def probe_assumption_d3(dm: DependenceModel, h: Callable, x_grid: Sequence[float]) -> AssumptionProbe:
    """Evaluate the closed-form r envelope and the three assumption quantities.

    Grid points must be increasing and exceed twice their h value so the
    middle integration range [h(x), x − h(x)] is nonempty.
    """
    grid = np.asarray(x_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("x_grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("x_grid must be strictly increasing")
    hx = np.asarray(h(grid), dtype=float)
    bad = np.nonzero(grid <= 2.0 * hx)[0]
    if bad.size:
        raise DomainError(
            f"grid too small/coarse: need x > 2 h(x); violated at x={grid[bad[0]]!r} (h={hx[bad[0]]!r})"
        )

    base = dm.base
    r_vals = np.asarray(dm.r_envelope(grid), dtype=float)
    d3_i = np.zeros_like(grid)
    d3_ii = r_vals * base.tail(hx)
    d3_iii = np.empty_like(grid)
    for i, (x, hv) in enumerate(zip(grid, hx)):
        integrand = lambda y: base.tail(x - y) * base.density(y)  # noqa: E731
        val, err = integrate.quad(integrand, hv, x - hv, epsabs=0.0, epsrel=1e-9, limit=400)
        if not np.isfinite(val):
            raise NumericalError(f"assumption probe quadrature failed at x={x!r}")
        d3_iii[i] = r_vals[i] * val / base.tail(x)
    return AssumptionProbe(grid, r_vals, d3_i, d3_ii, d3_iii)
