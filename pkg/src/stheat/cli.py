"""Declarative experiment runner: JSON config in, convergence tables out.

Config schema (flat JSON object):
  problem         str    "heat1d-smooth", "heat2d-smooth", "heat1d-lowreg", "impulse"
  q               int    temporal trial degree, default 0
  p               int    spatial degree 1..3, default 2
  levels          list   spatial refinements n, nonempty, strictly increasing
  coupling_c      float  time step law k = c * h^gamma, default 1.0
  coupling_gamma  float  default 2.0
  explicit_N      list   per-level interval counts; overrides the coupling law
  epsilon         float  kink exponent parameter of "heat1d-lowreg", default 0.1
  errors          bool   compute error norms (requires an exact solution), default true
  diagnostics     bool   emit inf-sup / c_S / CFL / stability per level, default false
  out_dir         str    output directory, default "results"
  seed            int    seed of the residual spot check, default 0

Artifacts written to the output directory: rates.csv (one row per level,
per-pair rates in the last two columns), loglog.csv (plot-ready k-vs-error
pairs), summary.json (fitted rates, expected orders, pass flags).  The
`diagnose` subcommand writes diagnostics.json instead.  The directory is
taken from --out if given, else the STHEAT_OUT_DIR environment variable,
else the config.  Floats are written with 17 significant digits and JSON
keys are sorted, so reruns of the same config are byte-identical.
"""

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .analysis import (DIAGNOSTIC_GUARD, DiagnosticsReport, cfl_constant,
                       cs_constant, error_norms, fit_rate, infsup_discrete,
                       stability_check)
from .fem import assemble
from .problems import problem_by_id, validate_residual
from .solver import run_decomposed
from .timegrid import make_uniform_partition

OUT_DIR_ENV = "STHEAT_OUT_DIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_NO_EXACT = 4
EXIT_UNWRITABLE = 5


class ConfigError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    q: int = 0
    p: int = 2
    levels: tuple = ()
    coupling_c: float = 1.0
    coupling_gamma: float = 2.0
    explicit_N: tuple = None
    epsilon: float = 0.1
    errors: bool = True
    diagnostics: bool = False
    out_dir: str = "results"
    seed: int = 0

    def __post_init__(self):
        if not self.levels:
            raise ConfigError("levels must be a nonempty list")
        if list(self.levels) != sorted(set(self.levels)):
            raise ConfigError("levels must be strictly increasing")
        if any(int(n) != n or n < 2 for n in self.levels):
            raise ConfigError("levels must be integers >= 2")
        if self.q < 0:
            raise ConfigError("q must be >= 0")
        if self.p not in (1, 2, 3):
            raise ConfigError("p must be 1, 2 or 3")
        if self.coupling_c <= 0 or self.coupling_gamma <= 0:
            raise ConfigError("coupling constants must be positive")
        if self.explicit_N is not None:
            if len(self.explicit_N) != len(self.levels):
                raise ConfigError("explicit_N must match levels in length")
            if any(int(N) != N or N < 1 for N in self.explicit_N):
                raise ConfigError("explicit_N entries must be integers >= 1")


_CONFIG_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def parse_config(text):
    """Parse the JSON text of a config file into an ExperimentConfig."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("invalid JSON: %s" % exc)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    if "problem" not in raw:
        raise ConfigError("config needs a problem id")
    for key in ("levels", "explicit_N"):
        if raw.get(key) is not None:
            raw[key] = tuple(raw[key])
    try:
        cfg = ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc))
    try:
        problem_by_id(cfg.problem, cfg.epsilon)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc))
    return cfg


def config_to_dict(cfg):
    out = dataclasses.asdict(cfg)
    out["levels"] = list(cfg.levels)
    out["explicit_N"] = None if cfg.explicit_N is None else list(cfg.explicit_N)
    return out


def level_geometry(cfg, idx, final_time):
    """Interval count for refinement level idx under the coupling law."""
    n = cfg.levels[idx]
    if cfg.explicit_N is not None:
        return n, int(cfg.explicit_N[idx])
    h = 1.0 / n
    k_target = cfg.coupling_c * h ** cfg.coupling_gamma
    return n, max(1, int(round(final_time / k_target)))


def _trial_dimension(dimension, n, p, N, q):
    dof = n * p - 1
    if dimension == 2:
        dof = dof * dof
    return (N * (q + 1) + 1) * dof


def coarsen_for_guard(cfg, n, N, dimension, final_time):
    """Largest surrogate (n', N') obeying the coupling law with the trial
    dimension inside the dense-diagnostics guard."""
    for n_s in range(n, 1, -1):
        if cfg.explicit_N is not None:
            N_s = max(1, int(round(N * (n_s / n) ** cfg.coupling_gamma)))
        else:
            _, N_s = level_geometry(
                dataclasses.replace(cfg, levels=(n_s,), explicit_N=None), 0, final_time)
        if _trial_dimension(dimension, n_s, cfg.p, N_s, cfg.q) <= DIAGNOSTIC_GUARD:
            return n_s, N_s
    raise ConfigError("no surrogate within the diagnostics guard")


def run_level(cfg, idx, problem):
    """Solve one refinement level; returns a result dict."""
    n, N = level_geometry(cfg, idx, problem.final_time)
    space = assemble(problem.dimension, n, cfg.p)
    partition = make_uniform_partition(problem.final_time, N)
    solution = run_decomposed(problem, space, partition, cfg.q)
    row = {"n": n, "N": N, "h": space.h, "k": partition.k_max}
    if cfg.errors:
        report = error_norms(solution, problem)
        row["err_u1_L2V"] = report.err_u1_L2V
        row["err_u2_nodal_max"] = report.err_u2_nodal_max
    if cfg.diagnostics:
        row["diagnostics"] = level_diagnostics(cfg, n, N, problem, solution)
    return row


def level_diagnostics(cfg, n, N, problem, solution=None):
    """Inf-sup, c_S and CFL constants for a level, on a coarsened surrogate
    obeying the same step law whenever the dense guard would trip."""
    n_s, N_s = coarsen_for_guard(cfg, n, N, problem.dimension, problem.final_time)
    space = assemble(problem.dimension, n_s, cfg.p)
    partition = make_uniform_partition(problem.final_time, N_s)
    c_B, C_B = infsup_discrete(space, partition, cfg.q)
    c_S = cs_constant(space, partition, cfg.q)
    report = DiagnosticsReport(c_B=c_B, C_B=C_B, c_S=c_S,
                               C_CFL=cfl_constant(space, partition.k_max))
    block = report.to_dict()
    block["surrogate"] = {"n": n_s, "N": N_s, "coarsened": bool(n_s != n or N_s != N)}
    if solution is not None and not problem.impulses and problem.rhs is not None:
        block["stability"] = stability_check(solution, problem, c_S)
    return block


def _fmt(value):
    return "%.17g" % float(value)


def _pair_rates(ks, errs):
    rates = [None]
    for i in range(1, len(ks)):
        rates.append(float(np.log(errs[i - 1] / errs[i]) / np.log(ks[i - 1] / ks[i])))
    return rates


def emit_report(cfg, rows, out_dir):
    """Write rates.csv, loglog.csv and summary.json; byte-stable."""
    os.makedirs(out_dir, exist_ok=True)
    with_errors = all("err_u1_L2V" in r for r in rows) and rows
    summary = {"config": config_to_dict(cfg), "levels": []}
    for row in rows:
        entry = {k: row[k] for k in ("n", "N", "h", "k")}
        if "err_u1_L2V" in row:
            entry["err_u1_L2V"] = row["err_u1_L2V"]
            entry["err_u2_nodal_max"] = row["err_u2_nodal_max"]
        if "diagnostics" in row:
            entry["diagnostics"] = row["diagnostics"]
        summary["levels"].append(entry)

    lines = ["N,h,k,err_u1_L2V,err_u2_nodal_max,rate_u1,rate_u2"]
    log_lines = ["k,err_u1_L2V,err_u2_nodal_max"]
    if with_errors:
        ks = [r["k"] for r in rows]
        e1 = [r["err_u1_L2V"] for r in rows]
        e2 = [r["err_u2_nodal_max"] for r in rows]
        r1, r2 = _pair_rates(ks, e1), _pair_rates(ks, e2)
        for i, row in enumerate(rows):
            lines.append(",".join([
                str(row["N"]), _fmt(row["h"]), _fmt(row["k"]), _fmt(e1[i]), _fmt(e2[i]),
                "" if r1[i] is None else _fmt(r1[i]),
                "" if r2[i] is None else _fmt(r2[i])]))
            log_lines.append(",".join([_fmt(ks[i]), _fmt(e1[i]), _fmt(e2[i])]))
        expected = {"u1": cfg.q + 1, "u2": 2 * (cfg.q + 1)}
        fitted = {"u1": fit_rate(list(zip(ks, e1))), "u2": fit_rate(list(zip(ks, e2)))}
        summary["rates"] = {
            "fitted": fitted,
            "per_pair_u1": r1[1:],
            "per_pair_u2": r2[1:],
        }
        summary["expected"] = expected
        summary["pass"] = {
            key: bool(expected[key] - 0.35 <= fitted[key] <= expected[key] + 0.65)
            for key in ("u1", "u2")
        }
    else:
        for row in rows:
            lines.append(",".join([str(row["N"]), _fmt(row["h"]), _fmt(row["k"]), "", "", "", ""]))

    _write_text(os.path.join(out_dir, "rates.csv"), "\n".join(lines) + "\n")
    _write_text(os.path.join(out_dir, "loglog.csv"), "\n".join(log_lines) + "\n")
    _write_text(os.path.join(out_dir, "summary.json"),
                json.dumps(summary, sort_keys=True, indent=2) + "\n")


def _write_text(path, text):
    with open(path, "w") as handle:
        handle.write(text)


def _resolve_out_dir(cfg, cli_out):
    if cli_out:
        return cli_out
    return os.environ.get(OUT_DIR_ENV) or cfg.out_dir


def run_experiment(cfg, out_dir, parallel=1, quiet=False):
    problem = problem_by_id(cfg.problem, cfg.epsilon)
    if cfg.errors and problem.exact is None:
        print("error: problem %r has no exact solution; set errors=false" % cfg.problem,
              file=sys.stderr)
        return EXIT_NO_EXACT
    try:
        if problem.exact is not None:
            validate_residual(problem, seed=cfg.seed)
        if parallel > 1:
            with ThreadPoolExecutor(max_workers=parallel) as pool:
                futures = [pool.submit(run_level, cfg, i, problem)
                           for i in range(len(cfg.levels))]
                rows = [f.result() for f in futures]
        else:
            rows = [run_level(cfg, i, problem) for i in range(len(cfg.levels))]
    except (np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        print("error: solver failure: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    if not quiet:
        for row in rows:
            msg = "n=%-4d N=%-6d k=%.3e" % (row["n"], row["N"], row["k"])
            if "err_u1_L2V" in row:
                msg += "  err_u1=%.6e  err_u2=%.6e" % (
                    row["err_u1_L2V"], row["err_u2_nodal_max"])
            print(msg)
    try:
        emit_report(cfg, rows, out_dir)
    except OSError as exc:
        print("error: cannot write %r: %s" % (out_dir, exc), file=sys.stderr)
        return EXIT_UNWRITABLE
    if not quiet and "err_u1_L2V" in rows[-1]:
        ks = [r["k"] for r in rows]
        fit1 = fit_rate([(k, r["err_u1_L2V"]) for k, r in zip(ks, rows)])
        fit2 = fit_rate([(k, r["err_u2_nodal_max"]) for k, r in zip(ks, rows)])
        print("fitted rates: u1 %.4f (expected %d), u2 %.4f (expected %d)"
              % (fit1, cfg.q + 1, fit2, 2 * (cfg.q + 1)))
    return EXIT_OK


def run_diagnose(cfg, out_dir, quiet=False):
    problem = problem_by_id(cfg.problem, cfg.epsilon)
    try:
        n, N = level_geometry(cfg, 0, problem.final_time)
        block = level_diagnostics(cfg, n, N, problem)
    except (np.linalg.LinAlgError, RuntimeError) as exc:
        print("error: solver failure: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    try:
        os.makedirs(out_dir, exist_ok=True)
        _write_text(os.path.join(out_dir, "diagnostics.json"),
                    json.dumps({"config": config_to_dict(cfg), "diagnostics": block},
                               sort_keys=True, indent=2) + "\n")
    except OSError as exc:
        print("error: cannot write %r: %s" % (out_dir, exc), file=sys.stderr)
        return EXIT_UNWRITABLE
    if not quiet:
        print("c_B=%.12f C_B=%.12f c_S=%.6f C_CFL=%.6f (n=%d, N=%d)"
              % (block["c_B"], block["C_B"], block["c_S"], block["C_CFL"],
                 block["surrogate"]["n"], block["surrogate"]["N"]))
    return EXIT_OK


def _load_config(path):
    try:
        with open(path) as handle:
            return parse_config(handle.read())
    except OSError as exc:
        raise ConfigError("cannot read config: %s" % exc)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="stheat",
                                     description="space-time heat experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a convergence experiment")
    run_p.add_argument("config")
    run_p.add_argument("--out", default=None, help="output directory override")
    run_p.add_argument("--parallel", type=int, default=1, metavar="W",
                       help="worker threads across levels")
    run_p.add_argument("--quiet", action="store_true")
    diag_p = sub.add_parser("diagnose", help="inf-sup / c_S / CFL constants only")
    diag_p.add_argument("config")
    diag_p.add_argument("--out", default=None)
    diag_p.add_argument("--quiet", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = _load_config(args.config)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG

    out_dir = _resolve_out_dir(cfg, args.out)
    if args.command == "run":
        return run_experiment(cfg, out_dir, parallel=max(1, args.parallel),
                              quiet=args.quiet)
    return run_diagnose(cfg, out_dir, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
