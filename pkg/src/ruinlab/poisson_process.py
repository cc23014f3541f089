"""Nonhomogeneous Poisson arrival generation on a finite horizon.

Two samplers are provided and are distributionally equal:

* :func:`sample_thinning` — Lewis–Shedler thinning of a homogeneous
  Poisson(λ_max) candidate stream;
* :func:`sample_conditional` — given N(T) = n, the arrival epochs are the
  order statistics of n i.i.d. draws with density λ(s)/Λ(T) on [0, T]
  (inverse transform on Λ(s)/Λ(T)).

Cumulative intensities are closed-form per kind; no quadrature is involved.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import DegenerateModelError, DomainError, ModelConsistencyError, ParameterError

__all__ = [
    "IntensityModel",
    "ConstantIntensity",
    "SinusoidalIntensity",
    "PiecewiseConstantIntensity",
    "ArrivalSequence",
    "sample_thinning",
    "sample_conditional",
]


class IntensityModel(ABC):
    """Intensity λ(t) with closed-form cumulative Λ(t) and inverse."""

    kind: ClassVar[str]

    @abstractmethod
    def intensity(self, t):
        """λ(t); vectorized."""

    @abstractmethod
    def cumulative(self, t):
        """Λ(t) = ∫₀ᵗ λ(u) du in closed form; vectorized."""

    @abstractmethod
    def inverse_cumulative(self, y, t_max: float):
        """Smallest t in [0, t_max] with Λ(t) ≥ y; requires y ≤ Λ(t_max)."""

    @abstractmethod
    def max_intensity(self, horizon: float) -> float:
        """Upper bound λ_max for λ(t) on [0, horizon], used by thinning."""


@dataclass(frozen=True)
class ConstantIntensity(IntensityModel):
    """λ(t) = rate."""

    rate: float

    kind: ClassVar[str] = "constant"

    def __post_init__(self):
        if self.rate < 0:
            raise ParameterError(f"constant intensity requires rate >= 0, got {self.rate}")

    def intensity(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.rate)

    def cumulative(self, t):
        return self.rate * np.asarray(t, dtype=float)

    def inverse_cumulative(self, y, t_max):
        if self.rate == 0:
            raise DegenerateModelError("constant intensity 0 has no inverse cumulative")
        return np.asarray(y, dtype=float) / self.rate

    def max_intensity(self, horizon):
        return self.rate


@dataclass(frozen=True)
class SinusoidalIntensity(IntensityModel):
    """λ(t) = base + amplitude · sin(2π t / period).

    Nonnegativity requires amplitude ≤ base.  Λ(t) = base·t +
    amplitude · period/(2π) · (1 − cos(2π t / period)); the inverse is by
    monotone bisection to tolerance 1e-12 · max(t_max, 1).
    """

    base: float
    amplitude: float
    period: float

    kind: ClassVar[str] = "sinusoidal"

    def __post_init__(self):
        if self.base < 0:
            raise ParameterError(f"sinusoidal intensity requires base >= 0, got {self.base}")
        if not 0 <= self.amplitude <= self.base:
            raise ParameterError(
                f"sinusoidal intensity requires 0 <= amplitude <= base for nonnegativity, "
                f"got amplitude={self.amplitude}, base={self.base}"
            )
        if not self.period > 0:
            raise ParameterError(f"sinusoidal intensity requires period > 0, got {self.period}")

    @property
    def _omega(self) -> float:
        return 2.0 * np.pi / self.period

    def intensity(self, t):
        return self.base + self.amplitude * np.sin(self._omega * np.asarray(t, dtype=float))

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        return self.base * t + self.amplitude / self._omega * (1.0 - np.cos(self._omega * t))

    def inverse_cumulative(self, y, t_max):
        # Bracketed Newton with bisection fallback: the bracket [lo, hi] is
        # maintained monotonically, so convergence to 1e-12·max(t_max, 1) is
        # guaranteed even where the intensity touches zero (base == amplitude).
        if self.base == 0.0:
            raise DegenerateModelError("sinusoidal intensity with base 0 is identically zero")
        y = np.asarray(y, dtype=float)
        lo = np.zeros_like(y)
        hi = np.full_like(y, float(t_max))
        tol = 1e-12 * max(float(t_max), 1.0)
        # Absolute noise floor of Λ in float64; below it comparisons carry no
        # information (matters only near instants where the intensity is 0).
        f_eps = 8.0 * np.finfo(float).eps * max(float(self.cumulative(t_max)), 1.0)
        # Λ(t) >= base·t, so the root is at most y/base.
        t = np.minimum(y / self.base, hi)
        done = np.zeros(t.shape, dtype=bool)
        for _ in range(100):
            f = self.cumulative(t) - y
            above = f >= 0
            lo = np.where(above | done, lo, t)
            hi = np.where(~above | done, hi, t)
            done |= (hi - lo <= tol) | (np.abs(f) <= f_eps)
            if bool(np.all(done)):
                break
            lam = self.intensity(t)
            with np.errstate(divide="ignore", invalid="ignore"):
                proposal = t - f / lam
            mid = 0.5 * (lo + hi)
            keep = done | (np.isfinite(proposal) & (proposal > lo) & (proposal < hi))
            t = np.where(done, t, np.where(keep, proposal, mid))
        return np.clip(t, lo, hi)

    def max_intensity(self, horizon):
        return self.base + self.amplitude


@dataclass(frozen=True)
class PiecewiseConstantIntensity(IntensityModel):
    """λ(t) = levels[i] on [breaks[i-1], breaks[i]); levels[-1] beyond the last break."""

    breaks: tuple
    levels: tuple

    kind: ClassVar[str] = "piecewise"

    def __post_init__(self):
        breaks = tuple(float(b) for b in self.breaks)
        levels = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "levels", levels)
        if len(levels) != len(breaks) + 1:
            raise ParameterError(
                f"piecewise intensity needs len(levels) == len(breaks) + 1, got {len(levels)} and {len(breaks)}"
            )
        if any(v < 0 for v in levels):
            raise ParameterError("piecewise intensity levels must be nonnegative")
        if any(b <= 0 for b in breaks) or any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise ParameterError("piecewise intensity breaks must be positive and strictly increasing")
        edges = np.concatenate([[0.0], breaks])
        areas = np.concatenate([[0.0], np.cumsum(np.diff(edges) * np.asarray(levels[:-1]))])
        object.__setattr__(self, "_edges", edges)
        object.__setattr__(self, "_areas", areas)

    def intensity(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(np.asarray(self.breaks), t, side="right")
        return np.asarray(self.levels, dtype=float)[idx]

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._edges, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.levels) - 1)
        return self._areas[idx] + np.asarray(self.levels, dtype=float)[idx] * (t - self._edges[idx])

    def inverse_cumulative(self, y, t_max):
        y = np.asarray(y, dtype=float)
        idx = np.searchsorted(self._areas, y, side="left") - 1
        idx = np.clip(idx, 0, len(self.levels) - 1)
        levels = np.asarray(self.levels, dtype=float)[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            extra = np.where(levels > 0, (y - self._areas[idx]) / np.where(levels > 0, levels, 1.0), 0.0)
        return self._edges[idx] + extra

    def max_intensity(self, horizon):
        edges = self._edges
        active = [lvl for lvl, lo in zip(self.levels, edges) if lo < horizon]
        return max(active) if active else self.levels[-1]


@dataclass(frozen=True)
class ArrivalSequence:
    """Strictly increasing arrival epochs within (0, horizon]."""

    times: np.ndarray
    horizon: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        if times.ndim != 1:
            raise ParameterError("arrival times must be one-dimensional")
        if times.size:
            if np.any(np.diff(times) <= 0):
                raise ParameterError("arrival times must be strictly increasing")
            if times[0] <= 0 or times[-1] > self.horizon:
                raise ParameterError("arrival times must lie in (0, horizon]")

    def __len__(self) -> int:
        return int(self.times.size)


def sample_thinning(im: IntensityModel, horizon: float, rng: np.random.Generator) -> ArrivalSequence:
    """Lewis–Shedler thinning over [0, horizon].

    Candidates arrive at rate λ_max and survive with probability
    λ(t)/λ_max; the accepted epochs form a nonhomogeneous Poisson process
    with intensity λ.  Raises ModelConsistencyError if λ(t) is observed
    above the declared λ_max.
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    lam_max = float(im.max_intensity(horizon))
    if not np.isfinite(lam_max):
        raise ParameterError("max_intensity must be finite for thinning")
    if lam_max == 0.0:
        return ArrivalSequence(np.empty(0), horizon)

    while True:  # repeats only on a floating-point tie among accepted epochs
        count = rng.poisson(lam_max * horizon)
        candidates = np.sort(rng.random(count)) * horizon
        lam = np.asarray(im.intensity(candidates), dtype=float)
        if np.any(lam > lam_max * (1.0 + 1e-12)):
            worst = candidates[np.argmax(lam)]
            raise ModelConsistencyError(
                f"intensity {lam.max()!r} at t={worst!r} exceeds declared bound {lam_max!r}"
            )
        accepted = candidates[rng.random(count) * lam_max < lam]
        if accepted.size < 2 or np.all(np.diff(accepted) > 0):
            return ArrivalSequence(accepted, horizon)


def sample_conditional(im: IntensityModel, horizon: float, n: int, rng: np.random.Generator) -> ArrivalSequence:
    """Arrival epochs given N(horizon) = n: order statistics of n i.i.d.
    draws with density λ(s)/Λ(horizon)."""
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    if n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    total = float(im.cumulative(horizon))
    if total <= 0:
        raise DegenerateModelError(f"cumulative intensity over [0, {horizon}] is zero")
    while True:
        targets = rng.random(n) * total
        epochs = np.sort(np.asarray(im.inverse_cumulative(targets, horizon), dtype=float))
        if epochs.size < 2 or np.all(np.diff(epochs) > 0):
            epochs = np.minimum(np.maximum(epochs, np.nextafter(0.0, 1.0)), horizon)
            return ArrivalSequence(epochs, horizon)
