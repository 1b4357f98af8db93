"""Config-driven command line: runs experiments and validations, emits CSV/JSONL.

Exit codes: 0 success, 1 runtime failure, 2 config error, 3 validation failure.
Verbosity via the HYBRIDJUMP_LOG environment variable (debug|info|quiet).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import localization_bound, make_grid, regularity_report
from .errors import ConfigError, HybridJumpError
from .families import build_family
from .boltzmann import boltzmann_experiment
from .regimes import ThreeRegimeExample, three_regime_experiment
from .regions import Region
from .reportio import write_csv, write_json, write_jsonl
from .simulate import SimConfig, collect_paths, terminal_samples
from .validation import run_validation_suite

log = logging.getLogger("hybridjump")

TEST_FUNCTIONS = {
    "sin": lambda x: np.sin(x),
    "cos": lambda x: np.cos(x),
    "identity": lambda x: np.asarray(x, dtype=float),
    "exp_neg_sq": lambda x: np.exp(-np.asarray(x, dtype=float) ** 2),
}


# ---------------------------------------------------------------------------
# config validation: exact key sets, typed leaves, dotted error paths
# ---------------------------------------------------------------------------

def _require(cfg: dict, path: str, key: str, typ, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError("missing required field", f"{path}.{key}" if path else key)
        return default
    val = cfg[key]
    if typ is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, typ):
        raise ConfigError(f"expected {getattr(typ, '__name__', typ)}, got {type(val).__name__}",
                          f"{path}.{key}" if path else key)
    return val


def _reject_unknown(cfg: dict, path: str, known):
    for key in cfg:
        if key not in known:
            raise ConfigError("unknown field", f"{path}.{key}" if path else key)


def _sim_config(cfg: dict, path: str, seed: int) -> SimConfig:
    _reject_unknown(cfg, path, {"horizon", "flow_step", "n_paths", "representation"})
    return SimConfig(
        horizon=_require(cfg, path, "horizon", float, required=True),
        flow_step=_require(cfg, path, "flow_step", float, 1e-3),
        n_paths=_require(cfg, path, "n_paths", int, 1),
        representation=_require(cfg, path, "representation", str, "fictive"),
        seed=seed,
    )


def _region(cfg, path: str) -> Region | None:
    if cfg is None:
        return None
    if isinstance(cfg, list):
        try:
            return Region.from_intervals(*[tuple(iv) for iv in cfg])
        except Exception as exc:
            raise ConfigError(f"bad interval list: {exc}", path)
    raise ConfigError("region must be a list of [lo, hi] pairs", path)


def _model(cfg: dict, path: str):
    _reject_unknown(cfg, path, {"family", "params"})
    family = _require(cfg, path, "family", str, required=True)
    params = _require(cfg, path, "params", dict, {})
    return build_family(family, params)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(cfg: dict, seed: int, out: Path, workers):
    _reject_unknown(cfg, "", {"description", "model", "region", "x0", "sim",
                              "dump_paths", "f"})
    model = _model(_require(cfg, "", "model", dict, required=True), "model")
    region = _region(cfg.get("region"), "region")
    sim = _sim_config(_require(cfg, "", "sim", dict, required=True), "sim", seed)
    x0 = np.asarray(_require(cfg, "", "x0", list, [0.0]), dtype=float)
    fname = _require(cfg, "", "f", str, "identity")
    if fname not in TEST_FUNCTIONS:
        raise ConfigError(f"unknown test function {fname!r}", "f")
    f = TEST_FUNCTIONS[fname]
    samples = terminal_samples(model, region, x0, lambda xT: float(np.atleast_1d(f(xT))[0]),
                               sim, parallel_workers=workers)
    write_csv(out / "terminal.csv", cfg, ["path", "value"],
              [[i, float(v)] for i, v in enumerate(samples)])
    if cfg.get("dump_paths"):
        records = collect_paths(model, region, x0, sim)
        write_jsonl(out / "paths.jsonl", cfg, [r.to_json_dict() for r in records])
    log.info("simulate: %d paths, mean=%r", sim.n_paths, float(samples.mean()))
    return 0


def _cmd_weak_error(cfg: dict, seed: int, out: Path, workers):
    _reject_unknown(cfg, "", {"description", "model_a", "model_b", "sweep", "sim",
                              "region", "x0", "f"})
    sweep = _require(cfg, "", "sweep", dict, required=True)
    _reject_unknown(sweep, "sweep", {"param", "values"})
    pname = _require(sweep, "sweep", "param", str, required=True)
    values = _require(sweep, "sweep", "values", list, required=True)
    sim = _sim_config(_require(cfg, "", "sim", dict, required=True), "sim", seed)
    x0 = np.asarray(_require(cfg, "", "x0", list, [0.0]), dtype=float)
    fname = _require(cfg, "", "f", str, "identity")
    f = TEST_FUNCTIONS.get(fname)
    if f is None:
        raise ConfigError(f"unknown test function {fname!r}", "f")
    region = _region(cfg.get("region"), "region")
    ma_cfg = _require(cfg, "", "model_a", dict, required=True)
    mb_cfg = _require(cfg, "", "model_b", dict, required=True)

    from .weakerr import WeakErrorReport, weak_error_row

    def samples_for(mcfg, mpath, value, stream_offset):
        # the sweep always varies model_a; model_b follows only if it
        # explicitly names the parameter
        params = dict(mcfg.get("params", {}))
        if mpath == "model_a" or pname in params:
            params[pname] = value
        model = build_family(_require(mcfg, mpath, "family", str, required=True), params)
        sub = SimConfig(sim.horizon, sim.flow_step, sim.n_paths, sim.representation,
                        seed + stream_offset)
        fn = lambda xT: float(np.atleast_1d(f(xT))[0])
        return terminal_samples(model, region, x0, fn, sub, parallel_workers=workers)

    report = WeakErrorReport()
    for i, value in enumerate(values):
        sa = samples_for(ma_cfg, "model_a", value, 1000 + i)
        sb = samples_for(mb_cfg, "model_b", value, 2000 + i)
        report.rows.append(weak_error_row(float(value), sa, sb))
    if len(report.rows) >= 3:
        try:
            report.fit()
        except HybridJumpError:
            pass
    write_csv(out / "weak_error.csv", cfg,
              ["param", "error", "ci_low", "ci_high", "n_paths", "fitted_rate"],
              list(report.csv_rows()))
    return 0


def _cmd_three_regimes(cfg: dict, seed: int, out: Path, workers):
    _reject_unknown(cfg, "", {"description", "epsilon_list", "n_paths", "horizon",
                              "flow_step", "x0", "f"})
    eps_list = _require(cfg, "", "epsilon_list", list, [0.02, 0.01, 0.005, 0.0025])
    n_paths = _require(cfg, "", "n_paths", int, 200_000)
    horizon = _require(cfg, "", "horizon", float, 1.0)
    flow_step = _require(cfg, "", "flow_step", float, 1e-3)
    x0 = _require(cfg, "", "x0", float, 0.5)
    fname = _require(cfg, "", "f", str, "sin")
    if fname not in TEST_FUNCTIONS:
        raise ConfigError(f"unknown test function {fname!r}", "f")
    report = three_regime_experiment(eps_list, TEST_FUNCTIONS[fname], horizon=horizon,
                                     x0=x0, n_paths=n_paths, flow_step=flow_step,
                                     seed=seed)
    write_csv(out / "three_regimes.csv", cfg,
              ["epsilon", "error", "ci_low", "ci_high", "n_paths", "fitted_rate"],
              list(report.csv_rows()))
    log.info("three-regimes: fitted rate %r (stderr %r)", report.slope, report.slope_stderr)
    print(f"fitted_rate={report.slope!r} stderr={report.slope_stderr!r} "
          f"r_squared={report.r_squared!r}")
    return 0


def _cmd_boltzmann(cfg: dict, seed: int, out: Path, workers):
    _reject_unknown(cfg, "", {"description", "order", "nu", "kappa", "eta0",
                              "delta_list", "n_particles", "n_replicas", "horizon",
                              "theta_floor", "drift_step"})
    order = _require(cfg, "", "order", int, 1)
    nu = _require(cfg, "", "nu", float, required=True)
    kappa = _require(cfg, "", "kappa", float, required=True)
    report = boltzmann_experiment(
        _require(cfg, "", "delta_list", list, [0.4, 0.2, 0.1]),
        nu=nu, kappa=kappa, order=order,
        n_particles=_require(cfg, "", "n_particles", int, 2000),
        n_replicas=_require(cfg, "", "n_replicas", int, 200),
        horizon=_require(cfg, "", "horizon", float, 0.5),
        eta0=_require(cfg, "", "eta0", float, 0.75),
        theta_floor=_require(cfg, "", "theta_floor", float, 0.01),
        drift_step=_require(cfg, "", "drift_step", float, 0.02),
        seed=seed)
    rows = [[r.param, order, r.estimate, r.ci_low, r.ci_high,
             report.meta["theoretical_exponent"], report.meta["n_particles"],
             report.meta["n_replicas"]] for r in report.rows]
    write_csv(out / "boltzmann.csv", cfg,
              ["delta", "order", "error", "ci_low", "ci_high",
               "theoretical_exponent", "n_particles", "n_replicas"], rows)
    log.info("boltzmann: errors %s", [r.estimate for r in report.rows])
    return 0


def _cmd_constants(cfg: dict, seed: int, out: Path, workers):
    _reject_unknown(cfg, "", {"description", "model", "region", "q", "horizon",
                              "c_universal", "grid", "localization"})
    model = _model(_require(cfg, "", "model", dict, required=True), "model")
    region = _region(cfg.get("region"), "region")
    q = _require(cfg, "", "q", int, 2)
    horizon = _require(cfg, "", "horizon", float, 1.0)
    c_universal = _require(cfg, "", "c_universal", float, 1.0)
    gcfg = _require(cfg, "", "grid", dict, {})
    _reject_unknown(gcfg, "grid", {"times", "points"})
    times = gcfg.get("times", [0.0])
    points = gcfg.get("points", [[v] for v in np.linspace(-2, 2, 9)])
    grid = make_grid(times, points)
    rep = regularity_report(model, region, q, horizon, c_universal, grid)
    payload = {"regularity": json.loads(rep.to_json())}
    loc = cfg.get("localization")
    if loc is not None:
        _reject_unknown(loc, "localization", {"g1", "g2", "x0_gap"})
        g1 = _region(_require(loc, "localization", "g1", list, required=True),
                     "localization.g1")
        g2 = _region(_require(loc, "localization", "g2", list, required=True),
                     "localization.g2")
        bound = localization_bound(model, g1, g2, horizon, c_universal,
                                   _require(loc, "localization", "x0_gap", float, 0.0),
                                   grid)
        payload["localization"] = {
            "value": bound.value, "alpha_difference": bound.alpha_difference,
            "c_mu": bound.c_mu, "c_mu_estimated": bound.c_mu_estimated,
            "exponent": bound.exponent,
        }
    write_json(out / "constants.json", cfg, payload)
    return 0


def _cmd_validate(cfg: dict, seed: int, out: Path, workers):
    _reject_unknown(cfg, "", {"description", "quick"})
    quick = bool(cfg.get("quick", False))
    results = run_validation_suite(seed=seed, quick=quick)
    width = max(len(r.name) for r in results)
    all_pass = True
    rows = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        all_pass &= r.passed
        print(f"{r.name:<{width}}  {status}  {r.detail}")
        rows.append([r.name, status, r.detail])
    write_csv(out / "validate.csv", cfg, ["check", "status", "detail"], rows)
    return 0 if all_pass else 3


COMMANDS = {
    "simulate": _cmd_simulate,
    "weak-error": _cmd_weak_error,
    "three-regimes": _cmd_three_regimes,
    "boltzmann": _cmd_boltzmann,
    "constants": _cmd_constants,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hybridjump",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON config path (defaults per subcommand)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=os.cpu_count())
        p.add_argument("--out", type=Path, default=Path("."))
    args = parser.parse_args(argv)

    level = {"debug": logging.DEBUG, "info": logging.INFO,
             "quiet": logging.ERROR}.get(os.environ.get("HYBRIDJUMP_LOG", "info"),
                                         logging.INFO)
    logging.basicConfig(level=level, format="%(name)s %(levelname)s %(message)s")

    if args.config is not None:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    else:
        cfg = {}
    if not isinstance(cfg, dict):
        print("config error: top level must be an object", file=sys.stderr)
        return 2

    try:
        return COMMANDS[args.command](cfg, args.seed, args.out, args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HybridJumpError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
