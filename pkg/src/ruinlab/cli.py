"""Experiment CLI: orchestration, reproducible outputs, manifests and plots.

Every results artifact (CSV, SVG) is a deterministic function of
(config, seed, worker count); the manifest additionally records wall time and
is the one non-reproducible file.  Master seed → per-experiment seeds via the
splittable scheme in :mod:`ruinlab.montecarlo` (experiment index mixed with a
fixed 64-bit hash), so adding experiments never perturbs earlier ones.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ExperimentSuite,
    LatticeWeights,
    dump_suite,
    format_distribution,
    parse_config,
)
from .errors import ConfigError, RuinlabError
from .heavy_tails import convolution_tail_ratio, insensitivity_check
from .dependence import probe_assumption_d3
from .montecarlo import chunk_rng, derive_seed, worker_count
from .poisson_process import sample_conditional, sample_thinning
from .ruin_engine import (
    RuinExperimentConfig,
    asymptotic_integral,
    run_ruin_experiment,
    x_grid_for_tail_scales,
)
from .weighted_sums import estimate_tail_triple, uniformity_sweep

_KIND_BY_COMMAND = {
    "simulate-ruin": "ruin",
    "weighted-sums": "weighted-sums",
    "diagnose-dist": "diagnose-dist",
    "validate-assumptions": "validate-assumptions",
    "poisson-check": "poisson-check",
}


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _version() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"ruinlab-{__version__}"


# ---------------------------------------------------------------------------
# per-kind runners: (experiment, seed, overrides) -> (columns, rows, plot kind)


def _resolve_ruin_grid(exp):
    if exp.x_grid is not None:
        return tuple(exp.x_grid)
    return x_grid_for_tail_scales(
        exp.dist, exp.dependence, exp.intensity, exp.interest, exp.horizon, exp.tail_scales
    )


def _run_ruin(exp, seed, paths_override, workers):
    grid = _resolve_ruin_grid(exp)
    paths = paths_override or exp.paths
    cfg = RuinExperimentConfig(
        base=exp.dist,
        dm=exp.dependence,
        im=exp.intensity,
        interest=exp.interest,
        horizon=exp.horizon,
        x_grid=grid,
        paths=paths,
        seed=seed,
        premium_rate=exp.premium_rate,
        estimator=exp.estimator,
        pilot_fallback=exp.pilot_fallback,
    )
    rows = []
    for est in run_ruin_experiment(cfg, workers=workers):
        rows.append(
            [
                est.x,
                est.psi_hat.point,
                est.psi_hat.se,
                est.psi_hat.ci_lo,
                est.psi_hat.ci_hi,
                est.asymptotic_value,
                est.ratio,
                est.estimator,
                paths,
                seed,
                est.asymptotic_base,
            ]
        )
    columns = ["x", "psi_hat", "se", "ci_lo", "ci_hi", "asymptotic", "ratio", "estimator", "paths", "seed", "asymptotic_base"]
    return columns, rows, "ruin"


def _weighted_sums_grid(exp):
    if exp.x_grid is not None:
        return tuple(exp.x_grid)
    return tuple(sorted(float(exp.dist.quantile(s)) for s in exp.tail_scales))


def _triple_row(x, label, triple):
    return [
        x,
        label,
        triple.p_sum.point,
        triple.p_sum.se,
        triple.p_max.point,
        triple.p_max.se,
        triple.sum_marginals.point,
        triple.ratio_sum,
        triple.ratio_max,
    ]


def _run_weighted_sums(exp, seed, paths_override, workers):
    grid = _weighted_sums_grid(exp)
    paths = paths_override or exp.paths
    rows = []
    for x in grid:
        if isinstance(exp.weights, LatticeWeights):
            sweep = uniformity_sweep(
                exp.dependence,
                exp.weights.low,
                exp.weights.high,
                exp.weights.n,
                exp.weights.points,
                x,
                paths,
                seed,
                workers=workers,
            )
            for point, triple in zip(sweep.lattice, sweep.triples):
                rows.append(_triple_row(x, "|".join(repr(c) for c in point), triple))
        else:
            triple = estimate_tail_triple(exp.dependence, exp.weights, x, paths, seed, workers=workers)
            rows.append(_triple_row(x, exp.weights.label(), triple))
    columns = ["x", "weights", "p_sum", "p_sum_se", "p_max", "p_max_se", "sum_marginals", "ratio_sum", "ratio_max"]
    return columns, rows, "weighted-sums"


def _run_diagnose_dist(exp, seed, paths_override, workers):
    dist = exp.dist
    rows = []
    try:
        h = dist.insensitivity()
    except RuinlabError:
        h = None
    for x in exp.x_grid:
        conv = convolution_tail_ratio(dist, x, exp.quad_tol)
        insens = float(insensitivity_check(dist, h, [x])[0]) if h is not None and h(x) < x else float("nan")
        rows.append([x, dist.tail(x), dist.log_tail(x), conv, insens])
    columns = ["x", "tail", "log_tail", "conv_ratio", "insens_ratio"]
    return columns, rows, None


def _run_validate_assumptions(exp, seed, paths_override, workers):
    dm = exp.dependence
    probe = probe_assumption_d3(dm, exp.dist.insensitivity(), exp.x_grid)
    rows = []
    for x, r, d3i, d3ii, d3iii in probe.rows():
        marginal = float(dm.marginal_tail(x))
        rows.append([x, r, d3i, d3ii, d3iii, marginal, marginal / exp.dist.tail(x)])
    columns = ["x", "r", "d3_i", "d3_ii", "d3_iii_ratio", "marginal_tail", "marginal_over_base"]
    return columns, rows, None


def _run_poisson_check(exp, seed, paths_override, workers):
    from scipy import stats

    im, horizon = exp.intensity, exp.horizon
    runs = paths_override or exp.runs
    rng = chunk_rng(seed, 0)
    total = float(im.cumulative(horizon))

    counts = np.empty(runs, dtype=np.int64)
    first = []
    last = []
    cond_pool = []
    want_cond = exp.ks_samples
    for i in range(runs):
        times = sample_thinning(im, horizon, rng).times
        counts[i] = times.size
        if times.size:
            first.append(times[0])
            last.append(times[-1])
        if times.size == exp.conditional_n and len(cond_pool) < want_cond:
            cond_pool.extend(times.tolist())
    extra_attempts = 0
    max_extra = 50 * runs
    while len(cond_pool) < want_cond and extra_attempts < max_extra:
        times = sample_thinning(im, horizon, rng).times
        extra_attempts += 1
        if times.size == exp.conditional_n:
            cond_pool.extend(times.tolist())

    # chi-square of N(T) against Poisson(Λ(T)); the last cell collects >= kmax,
    # and cells are pooled so every expected count is at least 5
    kmax = int(stats.poisson.isf(1e-12, total)) + 1
    probs = np.append(stats.poisson.pmf(np.arange(kmax), total), stats.poisson.sf(kmax - 1, total))
    observed = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1).astype(float)
    expected = probs * runs
    obs_bins, exp_bins = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= 5.0:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
            o_acc = e_acc = 0.0
    if exp_bins:
        obs_bins[-1] += o_acc
        exp_bins[-1] += e_acc
    obs_arr = np.asarray(obs_bins)
    exp_arr = np.asarray(exp_bins) * obs_arr.sum() / sum(exp_bins)
    chi2_stat, chi2_p = stats.chisquare(obs_arr, exp_arr)

    # two-stage resample for the joint-law consistency checks
    rng2 = chunk_rng(seed, 1)
    first2, last2, cond2 = [], [], []
    draws = rng2.poisson(total, runs)
    for n in draws:
        if n == 0:
            continue
        times = sample_conditional(im, horizon, int(n), rng2).times
        first2.append(times[0])
        last2.append(times[-1])
    while len(cond2) < len(cond_pool):
        times = sample_conditional(im, horizon, exp.conditional_n, rng2).times
        cond2.extend(times.tolist())

    ks_first = stats.ks_2samp(np.asarray(first), np.asarray(first2)).statistic if first and first2 else float("nan")
    ks_last = stats.ks_2samp(np.asarray(last), np.asarray(last2)).statistic if last and last2 else float("nan")
    if cond_pool:
        ks_cond = stats.ks_2samp(np.asarray(cond_pool), np.asarray(cond2[: len(cond_pool)])).statistic
    else:
        ks_cond = float("nan")

    rows = [
        ["lambda_total", total, f"Lambda({_fmt(horizon)})"],
        ["count_mean", float(counts.mean()), f"target {_fmt(total)}"],
        ["count_var", float(counts.var()), f"target {_fmt(total)}"],
        ["chi2_stat", float(chi2_stat), f"{len(obs_bins)} bins"],
        ["chi2_pvalue", float(chi2_p), "reject below 1e-3"],
        ["ks_sigma1", float(ks_first), "thinning vs two-stage, first epoch"],
        ["ks_sigma_last", float(ks_last), "thinning vs two-stage, last epoch"],
        ["ks_conditional", float(ks_cond), f"pooled epochs given N={exp.conditional_n} ({len(cond_pool)} each)"],
    ]
    return ["check", "value", "detail"], rows, None


_RUNNERS = {
    "ruin": _run_ruin,
    "weighted-sums": _run_weighted_sums,
    "diagnose-dist": _run_diagnose_dist,
    "validate-assumptions": _run_validate_assumptions,
    "poisson-check": _run_poisson_check,
}


def _run_one(task):
    exp, seed, paths_override, workers = task
    started = time.perf_counter()
    try:
        columns, rows, plot_kind = _RUNNERS[exp.kind](exp, seed, paths_override, workers)
        return columns, rows, plot_kind, None, time.perf_counter() - started
    except Exception as err:  # failure marker goes to the manifest
        return None, None, None, f"{type(err).__name__}: {err}", time.perf_counter() - started


# ---------------------------------------------------------------------------
# suite orchestration


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_plot(path: Path, columns, rows, plot_kind):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "ruinlab"
    fig, ax = plt.subplots(figsize=(6, 4))
    col = {name: i for i, name in enumerate(columns)}
    xs = [row[col["x"]] for row in rows]
    if plot_kind == "ruin":
        ax.plot(xs, [row[col["ratio"]] for row in rows], "o-", label="psi_hat / asymptotic")
    else:
        ax.plot(xs, [row[col["ratio_sum"]] for row in rows], "o", label="p_sum / sum_marginals")
        ax.plot(xs, [row[col["ratio_max"]] for row in rows], "x", label="p_max / sum_marginals")
    ax.axhline(1.0, color="gray", lw=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("x")
    ax.set_ylabel("ratio")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def run_suite(
    suite: ExperimentSuite,
    out_dir: str | None = None,
    master_seed: int | None = None,
    paths_override: int | None = None,
    plots: bool = False,
    parallel: bool = False,
    selected_kind: str | None = None,
    workers: int | None = None,
    single_out: str | None = None,
) -> int:
    """Run (a kind-filtered view of) the suite; returns the process exit status."""
    if single_out is not None:
        out = Path(single_out).resolve().parent
    else:
        out = Path(out_dir if out_dir is not None else suite.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = suite.seed if master_seed is None else master_seed

    chosen = [
        (index, exp)
        for index, exp in enumerate(suite.experiments)
        if selected_kind is None or exp.kind == selected_kind
    ]
    if not chosen:
        print(f"no experiments of kind {selected_kind!r} in the suite", file=sys.stderr)
        return 2

    tasks = [(exp, derive_seed(seed, index), paths_override, workers) for index, exp in chosen]
    if parallel and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=worker_count(len(tasks))) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    config_hash = hashlib.sha256(dump_suite(suite).encode()).hexdigest()
    entries = []
    failed = False
    for (index, exp), (columns, rows, plot_kind, error, wall) in zip(chosen, results):
        entry = {
            "name": exp.name,
            "kind": exp.kind,
            "seed": derive_seed(seed, index),
            "config_sha256": config_hash,
            "version": _version(),
            "wall_time_s": wall,
        }
        if paths_override is not None:
            entry["overrides"] = {"paths": paths_override}
        if error is not None:
            failed = True
            entry["status"] = "failed"
            entry["error"] = error
        else:
            if single_out is not None and len(chosen) == 1:
                csv_path = Path(single_out).resolve()
            else:
                csv_path = out / f"{exp.name}.csv"
            _write_csv(csv_path, columns, rows)
            entry["status"] = "ok"
            entry["csv"] = csv_path.name
            if plots and plot_kind is not None:
                plot_path = out / f"{exp.name}.svg"
                _write_plot(plot_path, columns, rows, plot_kind)
                entry["plot"] = plot_path.name
        entries.append(entry)

    manifest = {
        "version": _version(),
        "master_seed": seed,
        "config_sha256": config_hash,
        "entries": entries,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ruinlab", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="suite configuration file")
    common.add_argument("--out-dir", default=None, help="output directory (overrides the suite's out_dir)")
    common.add_argument("--seed", type=int, default=None, help="master seed override")
    common.add_argument("--paths", type=int, default=None, help="path-count override for every experiment")
    common.add_argument("--plots", action="store_true", help="emit ratio-vs-x SVG plots next to the CSVs")
    common.add_argument("--parallel", action="store_true", help="run experiments concurrently")

    sub = parser.add_subparsers(dest="command", required=True)
    for command in _KIND_BY_COMMAND:
        p = sub.add_parser(command, parents=[common], help=f"run the suite's {_KIND_BY_COMMAND[command]} experiments")
        if command in ("simulate-ruin", "weighted-sums"):
            p.add_argument("--out", default=None, help="CSV path when exactly one experiment is selected")
        if command == "weighted-sums":
            p.add_argument("--x-grid", default=None, help="comma-separated x values overriding the configured grid")
    p = sub.add_parser("asymptotic", parents=[common], help="print asymptotic integral values")
    p.add_argument("--x", required=True, help="comma-separated x values")
    sub.add_parser("dump-config", parents=[common], help="print the canonical configuration")
    return parser


def _load_suite(args) -> ExperimentSuite:
    text = Path(args.config).read_text()
    return parse_config(text)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        suite = _load_suite(args)
    except ConfigError as err:
        for message in err.errors:
            print(f"config error: {message}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return 2

    if args.command == "dump-config":
        sys.stdout.write(dump_suite(suite))
        return 0

    if args.command == "asymptotic":
        ruins = [e for e in suite.experiments if e.kind == "ruin"]
        if not ruins:
            print("no ruin experiments in the suite", file=sys.stderr)
            return 2
        xs = [float(v) for v in args.x.split(",") if v.strip()]
        for exp in ruins:
            print(f"# {exp.name}: {format_distribution(exp.dist)}")
            print("x,asymptotic,asymptotic_base")
            for x in xs:
                marginal = asymptotic_integral(exp.dist, exp.dependence, exp.intensity, exp.interest, exp.horizon, x)
                raw = asymptotic_integral(
                    exp.dist, exp.dependence, exp.intensity, exp.interest, exp.horizon, x, use_marginal=False
                )
                print(f"{_fmt(x)},{_fmt(marginal)},{_fmt(raw)}")
        return 0

    kind = _KIND_BY_COMMAND[args.command]
    if getattr(args, "x_grid", None):
        xs = tuple(sorted(float(v) for v in args.x_grid.split(",") if v.strip()))
        replaced = []
        for exp in suite.experiments:
            if exp.kind == "weighted-sums":
                from dataclasses import replace as dc_replace

                exp = dc_replace(exp, x_grid=xs, tail_scales=None)
            replaced.append(exp)
        suite = ExperimentSuite(suite.seed, suite.out_dir, tuple(replaced))

    out_arg = getattr(args, "out", None)
    if out_arg is not None:
        matching = [e for e in suite.experiments if e.kind == kind]
        if len(matching) != 1:
            print(f"--out requires exactly one {kind} experiment, found {len(matching)}", file=sys.stderr)
            return 2
        return run_suite(
            suite,
            master_seed=args.seed,
            paths_override=args.paths,
            plots=args.plots,
            parallel=args.parallel,
            selected_kind=kind,
            single_out=out_arg,
        )

    return run_suite(
        suite,
        out_dir=args.out_dir,
        master_seed=args.seed,
        paths_override=args.paths,
        plots=args.plots,
        parallel=args.parallel,
        selected_kind=kind,
    )


if __name__ == "__main__":
    sys.exit(main())
