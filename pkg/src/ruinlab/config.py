"""Experiment-suite configuration: parsing, validation and canonical dumps.

The format is line-oriented key = value text with ``[experiment NAME]``
section headers; values are numbers, bare words, ``[...]`` lists or model
specs like ``pareto{alpha=1.5, scale=1.0}``.  The full EBNF lives in the
README.  Parsing collects *all* problems (syntax errors carry line:col;
semantic errors name the offending key and constraint) and raises one
:class:`~ruinlab.errors.ConfigError` with the complete list.

:func:`dump_suite` renders a suite in canonical form; parsing a dump and
dumping again is byte-identical.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .dependence import BetaShock, BoundedScaleMixture, CommonShock, DependenceModel, Independent, UniformShock
from .errors import ConfigError
from .heavy_tails import Exponential, Lognormal, Pareto, TailDistribution, Weibull
from .poisson_process import ConstantIntensity, IntensityModel, PiecewiseConstantIntensity, SinusoidalIntensity
from .weighted_sums import DeterministicWeights, UniformWeights

__all__ = [
    "ExperimentSuite",
    "RuinExperiment",
    "WeightedSumsExperiment",
    "DiagnoseDistExperiment",
    "ValidateAssumptionsExperiment",
    "PoissonCheckExperiment",
    "parse_config",
    "parse_distribution",
    "parse_intensity",
    "parse_dependence",
    "dump_suite",
    "format_distribution",
    "format_intensity",
    "format_dependence",
]

EXPERIMENT_KINDS = ("ruin", "weighted-sums", "diagnose-dist", "validate-assumptions", "poisson-check")


# ---------------------------------------------------------------------------
# value grammar


@dataclass(frozen=True)
class Spec:
    """A parsed ``name{key=value, ...}`` (or bare ``name``) value."""

    name: str
    args: tuple  # of (key, value) pairs

    def as_dict(self):
        return dict(self.args)


Value = Union[float, int, str, list, Spec]

_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-/]*")
_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


class _Cursor:
    def __init__(self, text: str, line: int, col_offset: int = 0):
        self.text = text
        self.pos = 0
        self.line = line
        self.col_offset = col_offset

    def where(self) -> str:
        return f"{self.line}:{self.pos + self.col_offset + 1}"

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def fail(self, message: str):
        raise _ParseFailure(f"{self.where()}: {message}")


class _ParseFailure(Exception):
    pass


def _parse_value(cur: _Cursor) -> Value:
    cur.skip_ws()
    ch = cur.peek()
    if ch == "":
        cur.fail("expected a value")
    if ch == "[":
        cur.pos += 1
        items = []
        cur.skip_ws()
        if cur.peek() == "]":
            cur.pos += 1
            return items
        while True:
            items.append(_parse_value(cur))
            cur.skip_ws()
            if cur.peek() == ",":
                cur.pos += 1
                continue
            if cur.peek() == "]":
                cur.pos += 1
                return items
            cur.fail("expected ',' or ']' in list")
    if not (ch.isalpha() or ch == "_"):
        m = _NUMBER.match(cur.text, cur.pos)
        if not m:
            cur.fail(f"unexpected character {ch!r}")
        cur.pos = m.end()
        literal = m.group(0)
        if re.fullmatch(r"[+-]?\d+", literal):
            return int(literal)
        return float(literal)
    m = _WORD.match(cur.text, cur.pos)
    if not m:
        cur.fail(f"unexpected character {ch!r}")
    name = m.group(0)
    cur.pos = m.end()
    cur.skip_ws()
    if cur.peek() != "{":
        return name if name not in ("true", "false") else name == "true"
    cur.pos += 1
    args = []
    cur.skip_ws()
    if cur.peek() == "}":
        cur.pos += 1
        return Spec(name, tuple(args))
    while True:
        cur.skip_ws()
        km = _WORD.match(cur.text, cur.pos)
        if not km:
            cur.fail("expected a parameter name")
        key = km.group(0)
        cur.pos = km.end()
        cur.skip_ws()
        if cur.peek() != "=":
            cur.fail(f"expected '=' after parameter {key!r}")
        cur.pos += 1
        args.append((key, _parse_value(cur)))
        cur.skip_ws()
        if cur.peek() == ",":
            cur.pos += 1
            continue
        if cur.peek() == "}":
            cur.pos += 1
            return Spec(name, tuple(args))
        cur.fail("expected ',' or '}' in spec")


# ---------------------------------------------------------------------------
# typed experiments


@dataclass(frozen=True)
class RuinExperiment:
    name: str
    dist: TailDistribution
    dependence: DependenceModel
    intensity: IntensityModel
    interest: float
    horizon: float
    premium_rate: float
    paths: int
    estimator: str
    pilot_fallback: bool
    x_grid: Optional[tuple]
    tail_scales: Optional[tuple]

    kind = "ruin"


@dataclass(frozen=True)
class WeightedSumsExperiment:
    name: str
    dist: TailDistribution
    dependence: DependenceModel
    weights: object  # DeterministicWeights | UniformWeights | LatticeWeights spec
    paths: int
    x_grid: Optional[tuple]
    tail_scales: Optional[tuple]

    kind = "weighted-sums"


@dataclass(frozen=True)
class LatticeWeights:
    """Deterministic weight lattice [low, high]^n with points per axis."""

    n: int
    low: float
    high: float
    points: int


@dataclass(frozen=True)
class DiagnoseDistExperiment:
    name: str
    dist: TailDistribution
    x_grid: tuple
    quad_tol: float

    kind = "diagnose-dist"


@dataclass(frozen=True)
class ValidateAssumptionsExperiment:
    name: str
    dist: TailDistribution
    dependence: DependenceModel
    x_grid: tuple

    kind = "validate-assumptions"


@dataclass(frozen=True)
class PoissonCheckExperiment:
    name: str
    intensity: IntensityModel
    horizon: float
    runs: int
    conditional_n: int
    ks_samples: int

    kind = "poisson-check"


@dataclass(frozen=True)
class ExperimentSuite:
    seed: int
    out_dir: str
    experiments: tuple


# ---------------------------------------------------------------------------
# model builders


class _Check:
    """Collects semantic problems with key context."""

    def __init__(self, errors: list, where: str):
        self.errors = errors
        self.where = where

    def fail(self, key: str, message: str):
        self.errors.append(f"{self.where}: key {key!r}: {message}")

    def number(self, key: str, value, lo=None, lo_strict=None) -> Optional[float]:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            self.fail(key, f"expected a number, got {value!r}")
            return None
        v = float(value)
        if lo is not None and v < lo:
            self.fail(key, f"must be >= {lo}, got {value!r}")
            return None
        if lo_strict is not None and v <= lo_strict:
            self.fail(key, f"must be > {lo_strict}, got {value!r}")
            return None
        return v

    def integer(self, key: str, value, lo=None) -> Optional[int]:
        if not isinstance(value, int) or isinstance(value, bool):
            self.fail(key, f"expected an integer, got {value!r}")
            return None
        if lo is not None and value < lo:
            self.fail(key, f"must be >= {lo}, got {value!r}")
            return None
        return value

    def number_list(self, key: str, value, increasing=False, positive=False) -> Optional[tuple]:
        if not isinstance(value, list) or not value or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            self.fail(key, f"expected a nonempty list of numbers, got {value!r}")
            return None
        vals = tuple(float(v) for v in value)
        if positive and any(v <= 0 for v in vals):
            self.fail(key, f"values must be positive, got {value!r}")
            return None
        if increasing and any(b <= a for a, b in zip(vals, vals[1:])):
            self.fail(key, f"values must be strictly increasing, got {value!r}")
            return None
        return vals


def _known_keys(check: _Check, spec: Spec, allowed):
    for key, _ in spec.args:
        if key not in allowed:
            check.fail(f"{spec.name}.{key}", f"unknown parameter (allowed: {', '.join(sorted(allowed))})")


def parse_distribution(spec, check: _Check, key: str) -> Optional[TailDistribution]:
    if isinstance(spec, str):
        spec = Spec(spec, ())
    if not isinstance(spec, Spec):
        check.fail(key, f"expected a distribution spec, got {spec!r}")
        return None
    args = spec.as_dict()
    try:
        if spec.name == "pareto":
            _known_keys(check, spec, {"alpha", "scale"})
            return Pareto(float(args["alpha"]), float(args.get("scale", 1.0)))
        if spec.name == "lognormal":
            _known_keys(check, spec, {"mu", "sigma"})
            return Lognormal(float(args["mu"]), float(args["sigma"]))
        if spec.name == "weibull":
            _known_keys(check, spec, {"shape", "scale"})
            return Weibull(float(args["shape"]), float(args.get("scale", 1.0)))
        if spec.name == "exponential":
            _known_keys(check, spec, {"rate"})
            return Exponential(float(args["rate"]))
    except KeyError as missing:
        check.fail(key, f"{spec.name} needs parameter {missing.args[0]!r}")
        return None
    except (TypeError, ValueError) as err:
        check.fail(key, str(err))
        return None
    check.fail(key, f"unknown distribution family {spec.name!r} (pareto, lognormal, weibull, exponential)")
    return None


def parse_intensity(spec, check: _Check, key: str) -> Optional[IntensityModel]:
    if isinstance(spec, str):
        spec = Spec(spec, ())
    if not isinstance(spec, Spec):
        check.fail(key, f"expected an intensity spec, got {spec!r}")
        return None
    args = spec.as_dict()
    try:
        if spec.name == "constant":
            _known_keys(check, spec, {"rate"})
            return ConstantIntensity(float(args["rate"]))
        if spec.name == "sinusoidal":
            _known_keys(check, spec, {"base", "amplitude", "period"})
            return SinusoidalIntensity(float(args["base"]), float(args["amplitude"]), float(args["period"]))
        if spec.name == "piecewise":
            _known_keys(check, spec, {"breaks", "levels"})
            breaks = args["breaks"]
            levels = args["levels"]
            if not isinstance(breaks, list) or not isinstance(levels, list):
                check.fail(key, "piecewise needs list-valued breaks and levels")
                return None
            return PiecewiseConstantIntensity(tuple(float(b) for b in breaks), tuple(float(v) for v in levels))
    except KeyError as missing:
        check.fail(key, f"{spec.name} needs parameter {missing.args[0]!r}")
        return None
    except (TypeError, ValueError) as err:
        check.fail(key, str(err))
        return None
    check.fail(key, f"unknown intensity kind {spec.name!r} (constant, sinusoidal, piecewise)")
    return None


def parse_dependence(spec, base: Optional[TailDistribution], check: _Check, key: str) -> Optional[DependenceModel]:
    if base is None:
        return None
    if isinstance(spec, str):
        spec = Spec(spec, ())
    if not isinstance(spec, Spec):
        check.fail(key, f"expected a dependence spec, got {spec!r}")
        return None
    args = spec.as_dict()
    try:
        if spec.name == "independent":
            _known_keys(check, spec, set())
            return Independent(base)
        if spec.name == "common_shock":
            _known_keys(check, spec, {"law", "max", "a", "b"})
            law = args.get("law", "uniform")
            w_max = float(args.get("max", 1.0))
            if law == "uniform":
                return CommonShock(base, UniformShock(w_max))
            if law == "beta":
                return CommonShock(base, BetaShock(float(args["a"]), float(args["b"]), w_max))
            check.fail(key, f"unknown shock law {law!r} (uniform, beta)")
            return None
        if spec.name == "scale_mixture":
            _known_keys(check, spec, {"atoms", "probs"})
            atoms = args["atoms"]
            if not isinstance(atoms, list):
                check.fail(key, "scale_mixture needs list-valued atoms")
                return None
            probs = args.get("probs", [1.0 / len(atoms)] * len(atoms))
            if not isinstance(probs, list):
                check.fail(key, "scale_mixture needs list-valued probs")
                return None
            return BoundedScaleMixture(base, tuple(float(a) for a in atoms), tuple(float(p) for p in probs))
    except KeyError as missing:
        check.fail(key, f"{spec.name} needs parameter {missing.args[0]!r}")
        return None
    except (TypeError, ValueError) as err:
        check.fail(key, str(err))
        return None
    check.fail(key, f"unknown dependence kind {spec.name!r} (independent, common_shock, scale_mixture)")
    return None


def _parse_weights(spec, check: _Check, key: str):
    if not isinstance(spec, Spec):
        check.fail(key, f"expected a weights spec (uniform / fixed / lattice), got {spec!r}")
        return None
    args = spec.as_dict()
    try:
        if spec.name == "uniform":
            _known_keys(check, spec, {"n", "low", "high"})
            return UniformWeights(int(args["n"]), float(args["low"]), float(args["high"]))
        if spec.name == "fixed":
            _known_keys(check, spec, {"values"})
            values = args["values"]
            if not isinstance(values, list):
                check.fail(key, "fixed weights need list-valued values")
                return None
            return DeterministicWeights(tuple(float(v) for v in values))
        if spec.name == "lattice":
            _known_keys(check, spec, {"n", "low", "high", "points"})
            n = int(args["n"])
            low = float(args["low"])
            high = float(args["high"])
            points = int(args.get("points", 5))
            if not 0 < low < high:
                check.fail(key, f"lattice needs 0 < low < high, got ({low}, {high})")
                return None
            if points < 2 or n < 1:
                check.fail(key, "lattice needs points >= 2 and n >= 1")
                return None
            return LatticeWeights(n, low, high, points)
    except KeyError as missing:
        check.fail(key, f"{spec.name} needs parameter {missing.args[0]!r}")
        return None
    except (TypeError, ValueError) as err:
        check.fail(key, str(err))
        return None
    check.fail(key, f"unknown weights kind {spec.name!r} (uniform, fixed, lattice)")
    return None


def _grid_or_scales(check: _Check, params: dict):
    x_grid = None
    tail_scales = None
    if "x_grid" in params:
        x_grid = check.number_list("x_grid", params["x_grid"], increasing=True, positive=True)
    if "tail_scales" in params:
        tail_scales = check.number_list("tail_scales", params["tail_scales"], positive=True)
        if tail_scales is not None and any(s >= 1 for s in tail_scales):
            check.fail("tail_scales", "scales must lie in (0, 1)")
            tail_scales = None
    if ("x_grid" in params) == ("tail_scales" in params):
        check.fail("x_grid", "exactly one of x_grid and tail_scales is required")
        return None, None
    return x_grid, tail_scales


def _build_experiment(name: str, params: dict, check: _Check):
    kind = params.get("kind")
    if kind not in EXPERIMENT_KINDS:
        check.fail("kind", f"must be one of {', '.join(EXPERIMENT_KINDS)}, got {kind!r}")
        return None

    def dist_and_dep():
        if "dist" in params:
            dist = parse_distribution(params["dist"], check, "dist")
        else:
            dist = _required(check, "dist")
        dep = parse_dependence(params.get("dependence", "independent"), dist, check, "dependence")
        return dist, dep

    if kind == "ruin":
        _reject_unknown(check, params, {"kind", "dist", "dependence", "intensity", "interest", "horizon",
                                        "premium_rate", "paths", "estimator", "pilot_fallback", "x_grid",
                                        "tail_scales"})
        dist, dep = dist_and_dep()
        intensity = parse_intensity(params.get("intensity"), check, "intensity") if "intensity" in params else _required(check, "intensity")
        interest = check.number("interest", params.get("interest"), lo_strict=0.0) if "interest" in params else _required(check, "interest")
        horizon = check.number("horizon", params.get("horizon"), lo_strict=0.0) if "horizon" in params else _required(check, "horizon")
        premium = check.number("premium_rate", params.get("premium_rate", 0.0), lo=0.0)
        paths = check.integer("paths", params.get("paths"), lo=1000) if "paths" in params else _required(check, "paths")
        estimator = params.get("estimator", "sbj")
        if estimator not in ("crude", "sbj"):
            check.fail("estimator", f"must be crude or sbj, got {estimator!r}")
        pilot = params.get("pilot_fallback", True)
        if not isinstance(pilot, bool):
            check.fail("pilot_fallback", f"must be true or false, got {pilot!r}")
            pilot = True
        x_grid, tail_scales = _grid_or_scales(check, params)
        if None in (dist, dep, intensity, interest, horizon, premium, paths) or (x_grid is None and tail_scales is None):
            return None
        return RuinExperiment(name, dist, dep, intensity, interest, horizon, premium, paths, estimator, pilot, x_grid, tail_scales)

    if kind == "weighted-sums":
        _reject_unknown(check, params, {"kind", "dist", "dependence", "weights", "paths", "x_grid", "tail_scales"})
        dist, dep = dist_and_dep()
        weights = _parse_weights(params.get("weights"), check, "weights") if "weights" in params else _required(check, "weights")
        paths = check.integer("paths", params.get("paths"), lo=1000) if "paths" in params else _required(check, "paths")
        x_grid, tail_scales = _grid_or_scales(check, params)
        if None in (dist, dep, weights, paths) or (x_grid is None and tail_scales is None):
            return None
        return WeightedSumsExperiment(name, dist, dep, weights, paths, x_grid, tail_scales)

    if kind == "diagnose-dist":
        _reject_unknown(check, params, {"kind", "dist", "x_grid", "quad_tol"})
        dist = parse_distribution(params.get("dist"), check, "dist") if "dist" in params else _required(check, "dist")
        x_grid = check.number_list("x_grid", params.get("x_grid"), increasing=True, positive=True) if "x_grid" in params else _required(check, "x_grid")
        quad_tol = check.number("quad_tol", params.get("quad_tol", 1e-9), lo_strict=0.0)
        if None in (dist, x_grid, quad_tol):
            return None
        return DiagnoseDistExperiment(name, dist, x_grid, quad_tol)

    if kind == "validate-assumptions":
        _reject_unknown(check, params, {"kind", "dist", "dependence", "x_grid"})
        dist, dep = dist_and_dep()
        x_grid = check.number_list("x_grid", params.get("x_grid"), increasing=True, positive=True) if "x_grid" in params else _required(check, "x_grid")
        if None in (dist, dep, x_grid):
            return None
        return ValidateAssumptionsExperiment(name, dist, dep, x_grid)

    _reject_unknown(check, params, {"kind", "intensity", "horizon", "runs", "conditional_n", "ks_samples"})
    intensity = parse_intensity(params.get("intensity"), check, "intensity") if "intensity" in params else _required(check, "intensity")
    horizon = check.number("horizon", params.get("horizon"), lo_strict=0.0) if "horizon" in params else _required(check, "horizon")
    runs = check.integer("runs", params.get("runs", 100_000), lo=100)
    conditional_n = check.integer("conditional_n", params.get("conditional_n", 3), lo=1)
    ks_samples = check.integer("ks_samples", params.get("ks_samples", 10_000), lo=100)
    if None in (intensity, horizon, runs, conditional_n, ks_samples):
        return None
    return PoissonCheckExperiment(name, intensity, horizon, runs, conditional_n, ks_samples)


def _required(check: _Check, key: str):
    check.fail(key, "required")
    return None


def _reject_unknown(check: _Check, params: dict, allowed):
    for key in params:
        if key not in allowed:
            check.fail(key, f"unknown key for this experiment kind (allowed: {', '.join(sorted(allowed))})")


# ---------------------------------------------------------------------------
# suite parsing


def parse_config(text: str) -> ExperimentSuite:
    """Parse and fully validate a suite; raises ConfigError listing every problem."""
    errors: list = []
    top: dict = {}
    sections: list = []  # (name, line, params dict)
    current: Optional[dict] = None
    seen_names = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        indent = len(line) - len(stripped)
        if stripped.startswith("["):
            m = re.fullmatch(r"\[\s*experiment\s+([A-Za-z_][A-Za-z0-9_\-]*)\s*\]", stripped)
            if not m:
                errors.append(f"{lineno}:{indent + 1}: malformed section header (expected [experiment NAME])")
                current = None
                continue
            name = m.group(1)
            if name in seen_names:
                errors.append(f"{lineno}:{indent + 1}: duplicate experiment name {name!r}")
            seen_names.add(name)
            current = {}
            sections.append((name, lineno, current))
            continue
        if "=" not in stripped:
            errors.append(f"{lineno}:{indent + 1}: expected key = value")
            continue
        key_part, value_part = stripped.split("=", 1)
        key = key_part.strip()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", key):
            errors.append(f"{lineno}:{indent + 1}: invalid key {key_part.strip()!r}")
            continue
        cur = _Cursor(value_part, lineno, col_offset=len(line) - len(value_part))
        try:
            value = _parse_value(cur)
            cur.skip_ws()
            if cur.peek():
                cur.fail(f"trailing text {cur.text[cur.pos:].strip()!r}")
        except _ParseFailure as failure:
            errors.append(str(failure))
            continue
        target = top if current is None else current
        if key in target:
            errors.append(f"{lineno}:{indent + 1}: duplicate key {key!r}")
        target[key] = value

    seed = top.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors.append(f"top level: key 'seed': expected a nonnegative integer, got {seed!r}")
        seed = 0
    out_dir = top.get("out_dir", "out")
    if not isinstance(out_dir, str):
        errors.append(f"top level: key 'out_dir': expected a path word, got {out_dir!r}")
        out_dir = "out"
    for key in top:
        if key not in ("seed", "out_dir"):
            errors.append(f"top level: key {key!r}: unknown (allowed: seed, out_dir)")

    experiments = []
    for name, lineno, params in sections:
        check = _Check(errors, f"experiment {name!r} (line {lineno})")
        built = _build_experiment(name, params, check)
        if built is not None:
            experiments.append(built)

    if not sections:
        errors.append("suite must contain >=1 experiment")

    if errors:
        raise ConfigError(errors)
    return ExperimentSuite(seed, out_dir, tuple(experiments))


# ---------------------------------------------------------------------------
# canonical dump


def format_distribution(dist: TailDistribution) -> str:
    if isinstance(dist, Pareto):
        return f"pareto{{alpha={dist.alpha!r}, scale={dist.scale!r}}}"
    if isinstance(dist, Lognormal):
        return f"lognormal{{mu={dist.mu!r}, sigma={dist.sigma!r}}}"
    if isinstance(dist, Weibull):
        return f"weibull{{shape={dist.shape!r}, scale={dist.scale!r}}}"
    if isinstance(dist, Exponential):
        return f"exponential{{rate={dist.rate!r}}}"
    raise TypeError(f"unknown distribution {dist!r}")


def format_intensity(im: IntensityModel) -> str:
    if isinstance(im, ConstantIntensity):
        return f"constant{{rate={im.rate!r}}}"
    if isinstance(im, SinusoidalIntensity):
        return f"sinusoidal{{base={im.base!r}, amplitude={im.amplitude!r}, period={im.period!r}}}"
    if isinstance(im, PiecewiseConstantIntensity):
        breaks = ", ".join(repr(b) for b in im.breaks)
        levels = ", ".join(repr(v) for v in im.levels)
        return f"piecewise{{breaks=[{breaks}], levels=[{levels}]}}"
    raise TypeError(f"unknown intensity {im!r}")


def format_dependence(dm: DependenceModel) -> str:
    if isinstance(dm, Independent):
        return "independent"
    if isinstance(dm, CommonShock):
        if isinstance(dm.shock, UniformShock):
            return f"common_shock{{law=uniform, max={dm.shock.w_max!r}}}"
        if isinstance(dm.shock, BetaShock):
            return f"common_shock{{law=beta, a={dm.shock.a!r}, b={dm.shock.b!r}, max={dm.shock.w_max!r}}}"
    if isinstance(dm, BoundedScaleMixture):
        atoms = ", ".join(repr(a) for a in dm.atoms)
        probs = ", ".join(repr(p) for p in dm.probs)
        return f"scale_mixture{{atoms=[{atoms}], probs=[{probs}]}}"
    raise TypeError(f"unknown dependence model {dm!r}")


def _format_weights(weights) -> str:
    if isinstance(weights, UniformWeights):
        return f"uniform{{n={weights.n!r}, low={weights.low!r}, high={weights.high!r}}}"
    if isinstance(weights, DeterministicWeights):
        values = ", ".join(repr(v) for v in weights.values)
        return f"fixed{{values=[{values}]}}"
    if isinstance(weights, LatticeWeights):
        return f"lattice{{n={weights.n!r}, low={weights.low!r}, high={weights.high!r}, points={weights.points!r}}}"
    raise TypeError(f"unknown weights {weights!r}")


def _format_list(values) -> str:
    return "[" + ", ".join(repr(float(v)) for v in values) + "]"


def dump_suite(suite: ExperimentSuite) -> str:
    """Canonical text form; parse(dump(s)) == s and dump is a fixed point."""
    lines = [f"seed = {suite.seed!r}", f"out_dir = {suite.out_dir}", ""]
    for exp in suite.experiments:
        lines.append(f"[experiment {exp.name}]")
        lines.append(f"kind = {exp.kind}")
        if exp.kind == "ruin":
            lines.append(f"dist = {format_distribution(exp.dist)}")
            lines.append(f"dependence = {format_dependence(exp.dependence)}")
            lines.append(f"intensity = {format_intensity(exp.intensity)}")
            lines.append(f"interest = {exp.interest!r}")
            lines.append(f"horizon = {exp.horizon!r}")
            lines.append(f"premium_rate = {exp.premium_rate!r}")
            lines.append(f"paths = {exp.paths!r}")
            lines.append(f"estimator = {exp.estimator}")
            lines.append(f"pilot_fallback = {'true' if exp.pilot_fallback else 'false'}")
            if exp.x_grid is not None:
                lines.append(f"x_grid = {_format_list(exp.x_grid)}")
            else:
                lines.append(f"tail_scales = {_format_list(exp.tail_scales)}")
        elif exp.kind == "weighted-sums":
            lines.append(f"dist = {format_distribution(exp.dist)}")
            lines.append(f"dependence = {format_dependence(exp.dependence)}")
            lines.append(f"weights = {_format_weights(exp.weights)}")
            lines.append(f"paths = {exp.paths!r}")
            if exp.x_grid is not None:
                lines.append(f"x_grid = {_format_list(exp.x_grid)}")
            else:
                lines.append(f"tail_scales = {_format_list(exp.tail_scales)}")
        elif exp.kind == "diagnose-dist":
            lines.append(f"dist = {format_distribution(exp.dist)}")
            lines.append(f"x_grid = {_format_list(exp.x_grid)}")
            lines.append(f"quad_tol = {exp.quad_tol!r}")
        elif exp.kind == "validate-assumptions":
            lines.append(f"dist = {format_distribution(exp.dist)}")
            lines.append(f"dependence = {format_dependence(exp.dependence)}")
            lines.append(f"x_grid = {_format_list(exp.x_grid)}")
        else:
            lines.append(f"intensity = {format_intensity(exp.intensity)}")
            lines.append(f"horizon = {exp.horizon!r}")
            lines.append(f"runs = {exp.runs!r}")
            lines.append(f"conditional_n = {exp.conditional_n!r}")
            lines.append(f"ks_samples = {exp.ks_samples!r}")
        lines.append("")
    return "\n".join(lines)
