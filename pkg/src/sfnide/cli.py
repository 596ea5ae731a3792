"""Command-line entry point.

Usage::

    sfnide {solve,converge,gronwall,quadrature} --config PATH
           [--out DIR] [--seed U64] [--workers N]

Every run validates the whole config first, then writes ``run_meta.txt``
into the output directory before computing anything.  Failures print one
line ``error: <category>: <message>`` on stderr and exit with 1 (config),
2 (numeric) or 3 (I/O).
"""

import argparse
import os
import sys

import numpy as np

from . import __version__
from .brownian import GENERATOR_NAME, sample_path
from .config import SUBCOMMANDS, build_problem, emit, parse_config
from .errors import ConfigError, ConvergenceError, SfnideError
from .gronwall import GronwallProblem, PiecewiseLinear, SeriesPolicy, gronwall_series
from .harness import run_study
from .model import build_kernel_rules
from .quadrature import build_jacobi_rule, moment_table
from .solver import em_solve, em_solve_batch

__all__ = ["main", "EXIT_CONFIG", "EXIT_NUMERIC", "EXIT_IO"]

EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="sfnide", description="EM solver, convergence studies "
                     "and Gronwall bounds for fractional neutral SVIEs.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="key = value config file")
    parser.add_argument("--out", dest="output_dir", help="output directory")
    parser.add_argument("--seed", type=int, help="master seed override (u64)")
    parser.add_argument("--workers", type=int, help="worker threads")
    return parser


def _header(config, extra=()):
    lines = [f"# version={__version__}"]
    lines += [f"# {k}={v}" for k, v in extra]
    for line in emit(config).splitlines():
        key, value = line.split(" = ", 1)
        lines.append(f"# {key}={value}")
    return lines


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_meta(config):
    os.makedirs(config.output_dir, exist_ok=True)
    text = (f"# sfnide run metadata\n# version={__version__}\n"
            f"# generator={GENERATOR_NAME}\n" + emit(config))
    with open(os.path.join(config.output_dir, "run_meta.txt"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _run_solve(config):
    problem = build_problem(config)
    grid = problem.grid(config.n_steps)
    rules = build_kernel_rules(problem.orders, config.quad_order)
    extra = [("generator", GENERATOR_NAME), ("problem_name", problem.name)]
    if config.paths == 1:
        path = sample_path(config.seed, 0, grid, problem.wiener_dim)
        traj = em_solve(problem, grid, path, rules, config.compensated)
        cols = ["t"] + [f"Z_{k + 1}" for k in range(problem.dim)]
        rows = [",".join(repr(float(x)) for x in (t, *z))
                for t, z in zip(traj.times, traj.values)]
        _write_lines(os.path.join(config.output_dir, "trajectory.csv"),
                     _header(config, extra) + [",".join(cols)] + rows)
        return
    mom = em_solve_batch(problem, grid, config.seed, config.paths, rules,
                         config.workers, compensated=config.compensated)
    rows = [f"{k + 1},{float(mom.mean[k])!r},{float(mom.second_moment[k])!r},"
            f"{float(mom.variance[k])!r}" for k in range(problem.dim)]
    _write_lines(os.path.join(config.output_dir, "moments.csv"),
                 _header(config, extra) + ["component,mean,second_moment,variance"]
                 + rows)


def _function(spec):
    return PiecewiseLinear(spec) if isinstance(spec, tuple) else spec


def _run_gronwall(config):
    problem = GronwallProblem(config.alpha, config.alpha_i,
                              tuple(_function(a) for a in config.a_i),
                              _function(config.b), _function(config.g), config.horizon)
    problem.validate()
    policy = SeriesPolicy(config.k_max, config.tail_tol, config.quad_order)
    rows = []
    for t in config.times:
        res = gronwall_series(problem, t, policy)
        if not res.converged:
            raise ConvergenceError(
                f"series not converged at t={t!r} within k_max={config.k_max} "
                f"(tail estimate {res.tail_estimate:.3e})")
        rows.append(f"{t!r},{res.value!r},{res.shells_used},{res.tail_estimate!r}")
    _write_lines(os.path.join(config.output_dir, "gronwall.csv"),
                 _header(config) + ["t,bound,shells_used,tail_estimate"] + rows)


def _run_quadrature(config):
    rule = build_jacobi_rule(config.exponent_a, config.exponent_b, config.quad_order)
    rows = [f"{k},{float(x)!r},{float(w)!r}"
            for k, (x, w) in enumerate(zip(rule.nodes, rule.weights))]
    _write_lines(os.path.join(config.output_dir, "quadrature.csv"),
                 _header(config) + ["index,node,weight"] + rows)
    print("k,quadrature,exact,rel_error")
    for k, approx, exact, rel in moment_table(rule):
        print(f"{k},{approx:.17g},{exact:.17g},{rel:.3e}")


_RUNNERS = {"solve": _run_solve, "converge": lambda c: run_study(c, __version__),
            "gronwall": _run_gronwall, "quadrature": _run_quadrature}


def _fail(category, message, code):
    message = " ".join(str(message).split())
    print(f"error: {category}: {message}", file=sys.stderr)
    return code


def main(argv=None):
    """Run one subcommand; returns the process exit code."""
    try:
        args = _build_parser().parse_args(argv)
        overrides = {"seed": args.seed, "workers": args.workers,
                     "output_dir": args.output_dir}
        config = parse_config(args.config, args.subcommand, overrides)
    except (_UsageError, ConfigError) as exc:
        return _fail("config", exc, EXIT_CONFIG)
    try:
        _write_meta(config)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    try:
        with np.errstate(all="ignore"):
            _RUNNERS[config.subcommand](config)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except SfnideError as exc:
        return _fail("numeric", exc, EXIT_NUMERIC)
    except (ArithmeticError, ValueError) as exc:
        return _fail("numeric", exc, EXIT_NUMERIC)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    return 0


if __name__ == "__main__":
    sys.exit(main())
