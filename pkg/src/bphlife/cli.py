"""Command-line front end.

Usage::

    bphlife {validate,curves,apv,hazard,simulate,agedist} --config run.json [--out DIR]

The config is a flat JSON object; see ``configs/table1.json`` and the README
for the schema. Exit codes: 0 success, 1 validation error, 2 numerical
failure, 3 Monte Carlo check failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .actuarial import APV_COLUMNS, DiscountSpec, annuities, apv_table, physiological_age_from_real_age, \
    state_probabilities, state_probability_curves
from .distributions import bph_survival, conditional_hazard, singular_mass, minlife_rep, ph_mean
from .model import ModelParams, ParameterError, build_model, validate_params
from .numerics import NumericalError
from .simulation import (both_alive_indicator, discounted_joint_annuity, estimate_correlation,
                         estimate_functional, simulate_paths, simultaneous_indicator, survival_indicator)

log = logging.getLogger("bphlife")

COMMANDS = ("validate", "curves", "apv", "hazard", "simulate", "agedist")
PARAM_KEYS = ("a_m", "b_m", "c_m", "a_f", "b_f", "c_f", "lambda_c", "lambda", "lambda_in",
              "lambda_rm", "lambda_rf", "lambda_wm", "lambda_wf", "n")
OPTIONAL_DEFAULTS = {
    "grid_start": 0.0,
    "grid_stop": 60.0,
    "grid_step": 0.5,
    "interest_rates": [0.05, 0.10, 0.15],
    "t_death": 20.0,
    "seed": 42,
    "n_paths": 1_000_000,
    "output_dir": "out",
}
AGE_KEYS = ("i", "j", "husband_age", "wife_age")
ALLOWED_KEYS = set(PARAM_KEYS) | set(OPTIONAL_DEFAULTS) | set(AGE_KEYS)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_ORACLE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: ModelParams
    command: str | None = None
    husband_age: float | None = None
    wife_age: float | None = None
    grid: tuple[float, float, float] = (0.0, 60.0, 0.5)
    interest_rates: list[float] = field(default_factory=lambda: [0.05, 0.10, 0.15])
    t_death: float = 20.0
    seed: int = 42
    n_paths: int = 1_000_000
    output_dir: Path = Path("out")
    raw: dict = field(default_factory=dict)

    def times(self) -> np.ndarray:
        start, stop, step = self.grid
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return start + step * np.arange(count)


def _number(raw: dict, key: str, *, integer: bool = False):
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {key!r}: expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"field {key!r}: expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"field {key!r}: must be finite")
    return float(value)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a flat JSON run configuration."""
    if not text.strip():
        raise ConfigError("missing required field: config is empty")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    unknown = sorted(set(raw) - ALLOWED_KEYS)
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(unknown)}")
    missing = [k for k in PARAM_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing required field(s): {', '.join(missing)}")

    has_phys = [k in raw for k in ("i", "j")]
    has_real = [k in raw for k in ("husband_age", "wife_age")]
    if all(has_phys) == all(has_real) or any(has_phys) != all(has_phys) or any(has_real) != all(has_real):
        raise ConfigError("supply exactly one of {i, j} or {husband_age, wife_age}")

    values = {k: _number(raw, k) for k in PARAM_KEYS if k != "n"}
    values["lambda_"] = values.pop("lambda")
    values["n"] = _number(raw, "n", integer=True)
    cfg = RunConfig(params=None, raw=raw)  # type: ignore[arg-type]
    if all(has_phys):
        values["i"] = _number(raw, "i", integer=True)
        values["j"] = _number(raw, "j", integer=True)
    else:
        cfg.husband_age = _number(raw, "husband_age")
        cfg.wife_age = _number(raw, "wife_age")
        for key in ("husband_age", "wife_age"):
            if getattr(cfg, key) < 0:
                raise ConfigError(f"field {key!r}: must be >= 0")
        values["i"] = values["j"] = 1  # replaced once ages are mapped
    params = ModelParams(**values)
    try:
        validate_params(params)
    except ParameterError as exc:
        raise ConfigError(f"field(s) {', '.join(exc.problems)}: {exc}") from None
    cfg.params = params

    opts = {**OPTIONAL_DEFAULTS, **{k: raw[k] for k in OPTIONAL_DEFAULTS if k in raw}}
    start = _number(opts, "grid_start")
    stop = _number(opts, "grid_stop")
    step = _number(opts, "grid_step")
    if step <= 0:
        raise ConfigError("field 'grid_step': must be > 0")
    if start < 0 or stop < start:
        raise ConfigError("fields 'grid_start'/'grid_stop': need 0 <= start <= stop")
    cfg.grid = (start, stop, step)

    rates = opts["interest_rates"]
    if not isinstance(rates, list) or not rates:
        raise ConfigError("field 'interest_rates': expected a non-empty array")
    for k, r in enumerate(rates):
        if isinstance(r, bool) or not isinstance(r, (int, float)) or not r > -1:
            raise ConfigError(f"field 'interest_rates[{k}]': rate must be a number > -1, got {r!r}")
    cfg.interest_rates = [float(r) for r in rates]

    cfg.t_death = _number(opts, "t_death")
    if cfg.t_death < 0:
        raise ConfigError("field 't_death': must be >= 0")
    cfg.seed = _number(opts, "seed", integer=True)
    cfg.n_paths = _number(opts, "n_paths", integer=True)
    if cfg.n_paths < 1:
        raise ConfigError("field 'n_paths': must be >= 1")
    if not isinstance(opts["output_dir"], str):
        raise ConfigError("field 'output_dir': expected a string")
    cfg.output_dir = Path(opts["output_dir"])
    return cfg


def resolve_ages(cfg: RunConfig) -> tuple[ModelParams, dict]:
    """Map real ages to physiological ages when the config gives real ages."""
    if cfg.husband_age is None:
        return cfg.params, {"i": cfg.params.i, "j": cfg.params.j, "source": "config"}
    husband = physiological_age_from_real_age(cfg.params, "male", cfg.husband_age)
    wife = physiological_age_from_real_age(cfg.params, "female", cfg.wife_age)
    params = cfg.params.replace(i=husband.rounded_index, j=wife.rounded_index)
    validate_params(params)
    return params, {
        "i": params.i, "j": params.j, "source": "real_age",
        "husband_age": cfg.husband_age, "wife_age": cfg.wife_age,
        "husband_mean_physiological_age": husband.mean,
        "wife_mean_physiological_age": wife.mean,
    }


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def write_curve(path: Path, times, values) -> None:
    with open(path, "w") as fh:
        for t, v in zip(times, values):
            fh.write(f"{_fmt(t)} {_fmt(v)}\n")


def read_curve(path: Path) -> np.ndarray:
    return np.loadtxt(path, ndmin=2)


def _write_manifest(out: Path, cfg: RunConfig, command: str, extra: dict) -> None:
    canonical = json.dumps(cfg.raw, sort_keys=True, separators=(",", ":"))
    manifest = {
        "command": command,
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "seed": cfg.seed,
        "versions": {
            "bphlife": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        **extra,
    }
    (out / f"{command}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_validate(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    params, ages = resolve_ages(cfg)
    gen = build_model(params)
    return EXIT_OK, {"physiological_ages": ages, "dim": gen.dim}


def cmd_curves(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    params, ages = resolve_ages(cfg)
    gen = build_model(params)
    times = cfg.times()
    curves = state_probability_curves(gen, times)
    for name, values in curves.items():
        values = np.clip(values, 0.0, 1.0)
        write_curve(out / f"{name}.data", times, values)
    return EXIT_OK, {"physiological_ages": ages, "files": [f"{k}.data" for k in curves]}


def cmd_apv(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    params, ages = resolve_ages(cfg)
    gen = build_model(params)
    rows = apv_table(gen, cfg.interest_rates)
    with open(out / "apv.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(APV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row["rate"])] + [f"{row[c]:.6f}" for c in APV_COLUMNS[1:]])
    return EXIT_OK, {"physiological_ages": ages, "files": ["apv.csv"]}


def cmd_hazard(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    params, ages = resolve_ages(cfg)
    gen = build_model(params)
    times = [t for t in cfg.times() if t > cfg.t_death]
    files = {"husband": "mu_husband_given_wife_death.data", "wife": "mu_wife_given_husband_death.data"}
    for survivor, name in files.items():
        values = [conditional_hazard(gen, survivor, cfg.t_death, t) for t in times]
        write_curve(out / name, times, values)
    return EXIT_OK, {"physiological_ages": ages, "t_death": cfg.t_death, "files": list(files.values())}


def cmd_simulate(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    params, ages = resolve_ages(cfg)
    gen = build_model(params)
    paths = simulate_paths(gen, cfg.n_paths, cfg.seed)
    n = len(paths)
    delta = DiscountSpec(cfg.interest_rates[0]).delta

    checks = []

    def check(name, closed, functional, indicator):
        est = estimate_functional(paths, functional)
        z = est.z_score(closed, binomial=indicator)
        checks.append((name, closed, est.value, est.test_se(closed, indicator), z, abs(z) <= 4.0))

    for t in (10.0, 30.0, 50.0):
        check(f"p00({t:g})", state_probabilities(gen, t).p00, both_alive_indicator(t), True)
    check("bph_survival(10,20)", bph_survival(gen, 10.0, 20.0), survival_indicator(10.0, 20.0), True)
    check("singular_mass(0)", singular_mass(gen, 0.0), simultaneous_indicator, True)
    check(f"a_joint(delta={delta:.6g})", annuities(gen, DiscountSpec.from_delta(delta))["a_joint"],
          discounted_joint_annuity(delta), False)
    check("mean_min_lifetime", ph_mean(minlife_rep(gen)),
          lambda p: np.minimum(p.t_x, p.t_y), False)

    with open(out / "simulate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("quantity", "closed_form", "monte_carlo", "std_error", "z", "agree"))
        for name, closed, value, se, z, ok in checks:
            writer.writerow((name, _fmt(closed), _fmt(value), _fmt(se), f"{z:.4f}", int(ok)))

    extra = {"physiological_ages": ages, "n_paths": n, "files": ["simulate.csv"]}
    if n >= 1000:
        corr = estimate_correlation(paths.head(100_000), seed=cfg.seed)
        extra["correlation"] = {k: {"value": v.value, "bootstrap_se": v.std_error, "n_paths": v.n_paths}
                                for k, v in corr.items()}
        extra["correlation"]["pearson_in_range"] = bool(-1 / 3 <= corr["pearson"].value <= 1)
    status = EXIT_OK if all(c[-1] for c in checks) else EXIT_ORACLE
    return status, extra


def cmd_agedist(cfg: RunConfig, out: Path) -> tuple[int, dict]:
    husband_age = cfg.husband_age if cfg.husband_age is not None else 42.0
    wife_age = cfg.wife_age if cfg.wife_age is not None else 35.0
    husband = physiological_age_from_real_age(cfg.params, "male", husband_age)
    wife = physiological_age_from_real_age(cfg.params, "female", wife_age)
    with open(out / "agedist.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("physiological_age", "husband", "wife"))
        for k, (ph, pw) in enumerate(zip(husband.probabilities, wife.probabilities), start=1):
            writer.writerow((k, _fmt(ph), _fmt(pw)))
    summary = {
        "husband": {"real_age": husband_age, "mean": husband.mean, "rounded_index": husband.rounded_index},
        "wife": {"real_age": wife_age, "mean": wife.mean, "rounded_index": wife.rounded_index},
    }
    print(json.dumps(summary))
    return EXIT_OK, {"agedist": summary, "files": ["agedist.csv"]}


HANDLERS = {
    "validate": cmd_validate,
    "curves": cmd_curves,
    "apv": cmd_apv,
    "hazard": cmd_hazard,
    "simulate": cmd_simulate,
    "agedist": cmd_agedist,
}


def _grid_arg(text: str) -> tuple[float, float, float]:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must look like START:STOP:STEP") from None
    return start, stop, step


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bphlife", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="flat JSON run configuration")
    parser.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, help="override the simulation seed")
    parser.add_argument("--n-paths", type=int, help="override the number of simulated paths")
    parser.add_argument("--grid", type=_grid_arg, help="override the time grid, START:STOP:STEP")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _error(kind: str, exc: Exception) -> None:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config.read_text(encoding="utf-8"))
        if args.seed is not None:
            cfg.seed = args.seed
        if args.n_paths is not None:
            if args.n_paths < 1:
                raise ConfigError("--n-paths must be >= 1")
            cfg.n_paths = args.n_paths
        if args.grid is not None:
            start, stop, step = args.grid
            if step <= 0 or start < 0 or stop < start:
                raise ConfigError("--grid needs 0 <= START <= STOP and STEP > 0")
            cfg.grid = args.grid
        if args.out is not None:
            cfg.output_dir = args.out
    except (OSError, ConfigError) as exc:
        _error("validation", exc)
        return EXIT_INVALID
    cfg.command = args.command

    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    try:
        status, extra = HANDLERS[args.command](cfg, out)
    except (ParameterError, ConfigError) as exc:
        _error("validation", exc)
        return EXIT_INVALID
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        _error("numerical", exc)
        return EXIT_NUMERICAL
    _write_manifest(out, cfg, args.command, extra)
    log.info("%s finished with status %d", args.command, status)
    if status == EXIT_ORACLE:
        _error("oracle", RuntimeError("Monte Carlo disagreement beyond 4 standard errors; see simulate.csv"))
    return status


if __name__ == "__main__":
    sys.exit(main())
