"""Heavy-tailed claim-size distributions with exact tail functions.

Each family exposes the survival function F̄ (``tail``), its logarithm
(``log_tail``, the primitive everything else is built on so extreme tails
never underflow), the density, the tail quantile (inverse survival function)
and an inverse-transform sampler.  Families carry membership flags for the
subexponential, long-tailed and dominated-variation classes, plus a
closed-form insensitivity function h with h(x) ↑ ∞, h(x)/x ↓ 0 and
F̄(x − h(x)) / F̄(x) → 1.

Numerical diagnostics for the class memberships live here as well:
:func:`convolution_tail_ratio` measures F̄*²(x)/F̄(x) (→ 2 exactly for the
subexponential families) and :func:`insensitivity_check` measures
F̄(x − h(x))/F̄(x) along a grid.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, ClassVar, Sequence

import numpy as np
from scipy import integrate
from scipy.special import log_ndtr, ndtr
from scipy.stats import norm

from .errors import DomainError, NumericalError, ParameterError

__all__ = [
    "TailDistribution",
    "Pareto",
    "Lognormal",
    "Weibull",
    "Exponential",
    "InsensitivityFunction",
    "convolution_tail_ratio",
    "insensitivity_check",
]


@dataclass(frozen=True)
class InsensitivityFunction:
    """Power function h(x) = x**exponent with exponent in (0, 1).

    Any such power satisfies the three defining conditions everywhere on
    (0, ∞): h is nondecreasing, h(x)/x = x**(exponent-1) is nonincreasing,
    and h(x) → ∞.
    """

    exponent: float

    def __post_init__(self):
        if not 0.0 < self.exponent < 1.0:
            raise ParameterError(f"insensitivity exponent must lie in (0, 1), got {self.exponent}")

    def __call__(self, x):
        return np.asarray(x, dtype=float) ** self.exponent


def _prepare(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _finish(values, scalar):
    return float(values) if scalar else values


class TailDistribution(ABC):
    """A claim-size law on [support_min, ∞) with unbounded support.

    Subclasses implement ``log_tail``, ``density`` and ``quantile``; the
    survival function, CDF and sampler derive from those.  All evaluation
    methods accept scalars or numpy arrays.
    """

    family: ClassVar[str]
    subexponential: ClassVar[bool]
    long_tailed: ClassVar[bool]
    dominated_varying: ClassVar[bool]

    #: left endpoint of the support (0 except for Pareto).
    support_min: float = 0.0

    @abstractmethod
    def log_tail(self, x):
        """log F̄(x); equals 0 for x at or below the support minimum."""

    @abstractmethod
    def density(self, x):
        """Density f(x), zero below the support minimum."""

    @abstractmethod
    def quantile(self, p):
        """Tail quantile: the x with F̄(x) = p, for p in (0, 1]."""

    def tail(self, x):
        """Survival function F̄(x) = P(X > x), computed as exp(log_tail)."""
        arr, scalar = _prepare(x)
        return _finish(np.exp(self.log_tail(arr)), scalar)

    def cdf(self, x):
        arr, scalar = _prepare(x)
        return _finish(-np.expm1(self.log_tail(arr)), scalar)

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform sampling: quantile applied to a (0, 1] uniform draw."""
        u = 1.0 - rng.random(size)
        return self.quantile(u)

    def insensitivity(self) -> InsensitivityFunction:
        """The family's closed-form member of the insensitivity class."""
        raise DomainError(f"{self.family} is not long-tailed; it has no insensitivity function")


@dataclass(frozen=True)
class Pareto(TailDistribution):
    """Pareto on [scale, ∞): F̄(x) = (x/scale)**(-alpha).

    This parameterization (rather than the shifted Lomax form) keeps the
    two-fold convolution checks in closed reach.  Member of S, L and D.
    """

    alpha: float
    scale: float = 1.0

    family: ClassVar[str] = "pareto"
    subexponential: ClassVar[bool] = True
    long_tailed: ClassVar[bool] = True
    dominated_varying: ClassVar[bool] = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError(f"pareto requires alpha > 0, got {self.alpha}")
        if not self.scale > 0:
            raise ParameterError(f"pareto requires scale > 0, got {self.scale}")

    @property
    def support_min(self) -> float:
        return self.scale

    def log_tail(self, x):
        arr, scalar = _prepare(x)
        xs = np.maximum(arr, self.scale)
        return _finish(-self.alpha * np.log(xs / self.scale), scalar)

    def density(self, x):
        arr, scalar = _prepare(x)
        with np.errstate(divide="ignore"):
            vals = np.where(
                arr >= self.scale,
                self.alpha / self.scale * np.maximum(arr / self.scale, 1.0) ** (-self.alpha - 1.0),
                0.0,
            )
        return _finish(vals, scalar)

    def quantile(self, p):
        arr, scalar = _prepare(p)
        return _finish(self.scale * arr ** (-1.0 / self.alpha), scalar)

    def insensitivity(self) -> InsensitivityFunction:
        return InsensitivityFunction(0.5)


@dataclass(frozen=True)
class Lognormal(TailDistribution):
    """Lognormal: log X ~ Normal(mu, sigma²).  Member of S and L but not D."""

    mu: float
    sigma: float

    family: ClassVar[str] = "lognormal"
    subexponential: ClassVar[bool] = True
    long_tailed: ClassVar[bool] = True
    dominated_varying: ClassVar[bool] = False

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError(f"lognormal requires sigma > 0, got {self.sigma}")

    def log_tail(self, x):
        arr, scalar = _prepare(x)
        with np.errstate(divide="ignore"):
            z = np.where(arr > 0, (np.log(np.maximum(arr, 1e-308)) - self.mu) / self.sigma, -np.inf)
        return _finish(log_ndtr(-z), scalar)

    def density(self, x):
        arr, scalar = _prepare(x)
        with np.errstate(divide="ignore"):
            z = np.where(arr > 0, (np.log(np.maximum(arr, 1e-308)) - self.mu) / self.sigma, np.inf)
            vals = np.where(arr > 0, np.exp(-0.5 * z * z) / (np.sqrt(2 * np.pi) * self.sigma * np.maximum(arr, 1e-308)), 0.0)
        return _finish(vals, scalar)

    def quantile(self, p):
        arr, scalar = _prepare(p)
        return _finish(np.exp(self.mu + self.sigma * norm.isf(arr)), scalar)

    def insensitivity(self) -> InsensitivityFunction:
        return InsensitivityFunction(0.5)


@dataclass(frozen=True)
class Weibull(TailDistribution):
    """Heavy-tailed Weibull: F̄(x) = exp(-(x/scale)**shape), shape in (0, 1).

    Shapes at or above 1 are rejected: the subexponential flag would be wrong
    there.  Member of S and L but not D.
    """

    shape: float
    scale: float = 1.0

    family: ClassVar[str] = "weibull"
    subexponential: ClassVar[bool] = True
    long_tailed: ClassVar[bool] = True
    dominated_varying: ClassVar[bool] = False

    def __post_init__(self):
        if not 0 < self.shape < 1:
            raise ParameterError(f"weibull requires shape in (0, 1), got {self.shape}")
        if not self.scale > 0:
            raise ParameterError(f"weibull requires scale > 0, got {self.scale}")

    def log_tail(self, x):
        arr, scalar = _prepare(x)
        return _finish(-np.maximum(arr, 0.0) ** self.shape / self.scale**self.shape, scalar)

    def density(self, x):
        arr, scalar = _prepare(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.maximum(arr, 0.0) / self.scale
            vals = np.where(arr > 0, self.shape / self.scale * t ** (self.shape - 1.0) * np.exp(-(t**self.shape)), 0.0)
        return _finish(vals, scalar)

    def quantile(self, p):
        arr, scalar = _prepare(p)
        return _finish(self.scale * (-np.log(arr)) ** (1.0 / self.shape), scalar)

    def insensitivity(self) -> InsensitivityFunction:
        # x**e with e = min(1/2, (1-shape)/2) keeps h(x) = o(x**(1-shape)),
        # which is what F̄(x-h(x)) ~ F̄(x) needs for every shape in (0,1).
        return InsensitivityFunction(min(0.5, (1.0 - self.shape) / 2.0))


@dataclass(frozen=True)
class Exponential(TailDistribution):
    """Light-tailed control family: F̄(x) = exp(-rate·x).  In none of S, L, D."""

    rate: float

    family: ClassVar[str] = "exponential"
    subexponential: ClassVar[bool] = False
    long_tailed: ClassVar[bool] = False
    dominated_varying: ClassVar[bool] = False

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError(f"exponential requires rate > 0, got {self.rate}")

    def log_tail(self, x):
        arr, scalar = _prepare(x)
        return _finish(-self.rate * np.maximum(arr, 0.0), scalar)

    def density(self, x):
        arr, scalar = _prepare(x)
        vals = np.where(arr >= 0, self.rate * np.exp(-self.rate * np.maximum(arr, 0.0)), 0.0)
        return _finish(vals, scalar)

    def quantile(self, p):
        arr, scalar = _prepare(p)
        return _finish(-np.log(arr) / self.rate, scalar)


def convolution_tail_ratio(dist: TailDistribution, x: float, quad_tol: float = 1e-9) -> float:
    """F̄*²(x) / F̄(x), the two-fold convolution tail over the single tail.

    F̄*²(x) = F̄(x) + ∫₀ˣ F̄(x−y) f(y) dy, evaluated by adaptive quadrature
    split at x/2 so both big-jump contributions get their own panels.  The
    absolute quadrature tolerance is quad_tol · F̄(x).  Converges to 2 for
    subexponential families; grows without bound for the exponential.
    """
    if not x > 0:
        raise DomainError(f"convolution_tail_ratio requires x > 0, got {x}")
    if not quad_tol > 0:
        raise DomainError(f"quad_tol must be positive, got {quad_tol}")
    fbar = dist.tail(x)
    lo = dist.support_min
    if x <= lo:
        return 1.0

    def integrand(y):
        return dist.tail(x - y) * dist.density(y)

    mid = max(x / 2.0, lo)
    eps_abs = 0.5 * quad_tol * fbar
    part1, err1 = integrate.quad(integrand, lo, mid, epsabs=eps_abs, epsrel=1e-9, limit=400)
    part2, err2 = integrate.quad(integrand, mid, x, epsabs=eps_abs, epsrel=1e-9, limit=400)
    conv = fbar + part1 + part2
    achieved = err1 + err2
    if achieved > quad_tol * fbar and achieved > 1e-8 * conv:
        raise NumericalError(
            f"convolution quadrature reached {achieved:.3e}, requested {quad_tol * fbar:.3e}",
            achieved=achieved,
            requested=quad_tol * fbar,
        )
    return conv / fbar


def insensitivity_check(dist: TailDistribution, h: Callable, x_grid: Sequence[float]) -> np.ndarray:
    """F̄(x − h(x)) / F̄(x) for each grid point; tends to 1 when h ∈ H(F).

    The grid must be increasing with h(x) < x everywhere on it.
    """
    grid = np.asarray(x_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("x_grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("x_grid must be strictly increasing")
    hx = np.asarray(h(grid), dtype=float)
    bad = np.nonzero(hx >= grid)[0]
    if bad.size:
        raise DomainError(f"h(x) >= x at grid point x={grid[bad[0]]!r} (h={hx[bad[0]]!r})")
    return np.exp(dist.log_tail(grid - hx) - dist.log_tail(grid))
