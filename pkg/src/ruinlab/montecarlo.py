"""Seeded, chunked Monte Carlo accumulation with deterministic reduction.

Every estimator in the package funnels its path loop through
:func:`accumulate`: paths are split into fixed-size chunks, each chunk owns a
generator derived from ``(seed, chunk_index)``, and chunk results are summed
in chunk-index order.  Chunk boundaries do not depend on the worker count, so
results are bit-identical whether chunks run sequentially or on a process
pool.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

#: paths per chunk; fixed so that results never depend on the worker count.
DEFAULT_CHUNK = 1 << 17

#: normal quantile for the 95% confidence intervals used everywhere.
Z_95 = 1.959963984540054


def splitmix64(state: int) -> int:
    """One splitmix64 output step (finalizer included)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Mix an index into a 64-bit master seed.

    Used for per-experiment seeds (index = experiment position in the suite)
    so that appending experiments never perturbs earlier ones, and for any
    other documented sub-stream split.
    """
    return splitmix64((master_seed + (index + 1) * _GOLDEN) & _MASK64)


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """Generator owned by one chunk, derived from (seed, chunk_index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & _MASK64, chunk_index])))


def worker_count(requested: int | None = None) -> int:
    """Resolve the worker count; RUINLAB_WORKERS caps it."""
    n = requested if requested is not None else 1
    cap = os.environ.get("RUINLAB_WORKERS")
    if cap is not None:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, n)


def _run_chunk(task):
    kernel, seed, index, size, args = task
    rng = chunk_rng(seed, index)
    out = kernel(rng, size, *args)
    return index, out


def accumulate(seed: int, total: int, kernel, args=(), chunk_size: int = DEFAULT_CHUNK, workers: int | None = None):
    """Run ``kernel(rng, n, *args)`` over ``total`` paths in chunks and sum the results.

    ``kernel`` must return a tuple of floats / numpy arrays whose shapes do
    not depend on ``n``; the tuples are summed elementwise across chunks in
    chunk-index order.  ``kernel`` and ``args`` must be picklable when
    ``workers > 1``.
    """
    sizes = []
    remaining = int(total)
    while remaining > 0:
        sizes.append(min(chunk_size, remaining))
        remaining -= sizes[-1]
    tasks = [(kernel, seed, i, n, args) for i, n in enumerate(sizes)]

    nworkers = worker_count(workers)
    if nworkers > 1 and len(tasks) > 1:
        results = {}
        with ProcessPoolExecutor(max_workers=min(nworkers, len(tasks))) as pool:
            for index, out in pool.map(_run_chunk, tasks):
                results[index] = out
        ordered = [results[i] for i in range(len(tasks))]
    else:
        ordered = [_run_chunk(t)[1] for t in tasks]

    acc = [np.asarray(part, dtype=np.float64).copy() for part in ordered[0]]
    for out in ordered[1:]:
        for slot, part in zip(acc, out):
            slot += np.asarray(part, dtype=np.float64)
    return tuple(acc)


@dataclass(frozen=True)
class EstimateWithCI:
    """Point estimate with normal-approximation confidence interval.

    The universal Monte Carlo return type: ``point`` is the sample mean,
    ``se`` its standard error, ``(ci_lo, ci_hi)`` the 95% interval and
    ``n_samples`` the path count.  ``degenerate`` flags an estimate built
    from zero hits (the value is then an upper-bound statement, not a
    measurement).
    """

    point: float
    se: float
    ci_lo: float
    ci_hi: float
    n_samples: int
    degenerate: bool = False

    @classmethod
    def from_sums(cls, total: float, total_sq: float, n: int, degenerate: bool | None = None) -> "EstimateWithCI":
        """Build from a running sum and sum of squares of the per-path statistic."""
        if n <= 0:
            raise ValueError("need at least one sample")
        mean = total / n
        if n > 1:
            var = max((total_sq - n * mean * mean) / (n - 1), 0.0)
        else:
            var = 0.0
        se = float(np.sqrt(var / n))
        if degenerate is None:
            degenerate = total == 0.0 and total_sq == 0.0
        return cls(float(mean), se, float(mean - Z_95 * se), float(mean + Z_95 * se), int(n), bool(degenerate))

    @classmethod
    def from_hits(cls, hits: float, n: int) -> "EstimateWithCI":
        """Build from a hit count of a 0/1 indicator (sum of squares equals the sum)."""
        return cls.from_sums(hits, hits, n, degenerate=hits == 0)

    def overlaps(self, other: "EstimateWithCI") -> bool:
        return self.ci_lo <= other.ci_hi and other.ci_lo <= self.ci_hi
