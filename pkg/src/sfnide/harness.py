"""Strong-convergence experiments built on coupled coarse/fine simulations.

The error at step size h is estimated without an exact solution as

    e_h = sqrt( mean_i |Z_h(T, w_i) - Z_{h/2}(T, w_i)|^2 ),

where both runs of sample i are driven by the same Brownian path: the fine
path is generated at 2N steps and coarsened to N.
"""

from dataclasses import dataclass, field
import math
import os

import numpy as np

from .brownian import GENERATOR_NAME, coarsen, derive_seed, sample_path
from .errors import DomainError, NonFiniteStateError
from .model import build_kernel_rules, check_rules, Grid
from .solver import DEFAULT_CHUNK_SIZE, map_chunks, solve_increments

__all__ = ["ConvergenceStudy", "coupled_error", "coupled_terminals", "fit_rate",
           "convergence_study", "run_study", "continuous_dependence_probe",
           "write_study_csv", "write_study_svg", "STUDY_COLUMNS"]

STUDY_COLUMNS = ("N", "h", "e", "log2h", "log2e")


@dataclass
class ConvergenceStudy:
    problem_name: str
    params: dict
    alpha: float
    levels: tuple
    n_paths: int
    master_seed: int
    quad_order: int
    errors: tuple = ()
    slope: float = math.nan
    intercept: float = math.nan
    residual: float = math.nan
    horizon: float = 1.0
    metadata: dict = field(default_factory=dict)

    @property
    def h_values(self):
        return tuple(self.horizon / n for n in self.levels)

    def rows(self):
        return [(n, h, e, math.log2(h), math.log2(e))
                for n, h, e in zip(self.levels, self.h_values, self.errors)]


def coupled_terminals(problem, n_coarse, n_paths, master_seed, rules=None,
                      workers=1, chunk_size=DEFAULT_CHUNK_SIZE, level=None):
    """Terminal states of coupled coarse (N) and fine (2N) runs, per path.

    Path i's fine increments come from ``sample_path(master_seed, i, ...)`` at
    2N steps; the coarse increments are its exact coarsening.

    Returns:
        ``(coarse, fine)`` arrays of shape ``(n_paths, d)``.
    """
    if int(n_coarse) != n_coarse or n_coarse < 1:
        raise DomainError(f"coarse step count must be a positive integer, got {n_coarse!r}")
    if rules is None:
        rules = build_kernel_rules(problem.orders)
    check_rules(problem.orders, rules)
    fine_grid = Grid(2 * int(n_coarse), problem.horizon)
    coarse_grid = Grid(int(n_coarse), problem.horizon)
    r = problem.wiener_dim

    def chunk(start, stop):
        fine_paths = [sample_path(master_seed, i, fine_grid, r) for i in range(start, stop)]
        fine_inc = np.stack([p.increments for p in fine_paths])
        coarse_inc = np.stack([coarsen(p).increments for p in fine_paths])
        try:
            zc = solve_increments(problem, coarse_grid, coarse_inc, rules, path_offset=start)[-1]
            zf = solve_increments(problem, fine_grid, fine_inc, rules, path_offset=start)[-1]
        except NonFiniteStateError as exc:
            raise NonFiniteStateError(
                f"{exc} (level {level}, coarse N={n_coarse})",
                step=exc.step, path=exc.path, level=level) from exc
        return zc, zf

    parts = map_chunks(chunk, int(n_paths), chunk_size, workers)
    return (np.concatenate([c for c, _ in parts]), np.concatenate([f for _, f in parts]))


def _mean(values):
    """Sample mean shifted by the first value; exact when all values agree."""
    values = np.asarray(values, dtype=float)
    first = values[0]
    return float(first + np.sum(values - first) / len(values))


def coupled_error(problem, n_coarse, n_paths, master_seed, rules=None, workers=1,
                  chunk_size=DEFAULT_CHUNK_SIZE, level=None):
    """Root-mean-square gap between coupled runs with N and 2N steps.

    The path mean is a fixed-order reduction, so the value does not depend
    on ``workers``.
    """
    coarse, fine = coupled_terminals(problem, n_coarse, n_paths, master_seed, rules,
                                     workers, chunk_size, level)
    sq = np.sum((coarse - fine) ** 2, axis=1)
    return math.sqrt(_mean(sq))


def fit_rate(h_values, e_values):
    """Least-squares line through (log2 h, log2 e).

    Returns:
        ``(slope, intercept, residual)`` with ``residual`` the Euclidean norm
        of the fit residuals.
    """
    h = np.asarray(h_values, dtype=float)
    e = np.asarray(e_values, dtype=float)
    if h.shape != e.shape or h.size < 3:
        raise DomainError("fit_rate needs at least three (h, e) pairs")
    if np.any(h <= 0) or np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise DomainError("fit_rate needs positive finite h and e values")
    x, y = np.log2(h), np.log2(e)
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    if sxx == 0.0:
        raise DomainError("fit_rate is degenerate: all step sizes are equal")
    slope = float(np.dot(xc, y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    residual = float(np.linalg.norm(y - (slope * x + intercept)))
    return slope, intercept, residual


def convergence_study(problem, levels, n_paths, master_seed, quad_order=16,
                      workers=1, chunk_size=DEFAULT_CHUNK_SIZE, shared_paths=False):
    """Coupled errors on every level plus the fitted log-log slope.

    Level k draws its paths from ``derive_seed(master_seed, k)`` unless
    ``shared_paths`` is set, in which case every level uses ``master_seed``.
    """
    levels = tuple(int(n) for n in levels)
    if len(levels) < 3:
        raise DomainError("a convergence study needs at least three levels")
    for a, b in zip(levels, levels[1:]):
        if b != 2 * a:
            raise DomainError(f"levels must double: {a} -> {b}")
    rules = build_kernel_rules(problem.orders, quad_order)
    errors = []
    failures = []
    for k, n in enumerate(levels):
        seed = master_seed if shared_paths else derive_seed(master_seed, k)
        try:
            e = coupled_error(problem, n, n_paths, seed, rules, workers, chunk_size, level=k)
        except NonFiniteStateError as exc:
            failures.append(f"level {k} (N={n}): {exc}")
            continue
        if not (e > 0.0 and math.isfinite(e)):
            failures.append(f"level {k} (N={n}): error estimate {e!r} is not positive")
        errors.append(e)
    if failures:
        raise NonFiniteStateError("convergence study failed: " + "; ".join(failures))
    study = ConvergenceStudy(problem.name, dict(problem.params), problem.orders.alpha,
                             levels, int(n_paths), int(master_seed), int(quad_order),
                             tuple(errors), horizon=problem.horizon)
    study.slope, study.intercept, study.residual = fit_rate(study.h_values, errors)
    study.metadata = {"generator": GENERATOR_NAME,
                      "seed_derivation": "shared" if shared_paths else "per-level"}
    return study


def _fmt(x):
    if isinstance(x, (tuple, list)):
        return ",".join(_fmt(v) for v in x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_study_csv(study, path, version):
    lines = ["# sfnide convergence study", f"# version={version}",
             f"# problem={study.problem_name}"]
    for key in sorted(study.params):
        lines.append(f"# {key}={_fmt(study.params[key])}")
    lines += [f"# levels={_fmt(study.levels)}", f"# paths={study.n_paths}",
              f"# seed={study.master_seed}", f"# quad_order={study.quad_order}"]
    for key in sorted(study.metadata):
        lines.append(f"# {key}={study.metadata[key]}")
    lines += [f"# slope={study.slope!r}", f"# intercept={study.intercept!r}",
              f"# residual={study.residual!r}", ",".join(STUDY_COLUMNS)]
    for row in study.rows():
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_study_svg(study, path):
    """Log2-log2 error plot with a dashed reference line of slope alpha."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = np.array(study.rows())
    x, y = rows[:, 3], rows[:, 4]
    with matplotlib.rc_context({"svg.hashsalt": "sfnide", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(x, y, "o-", label=f"EM error (slope {study.slope:.3f})")
        ref = y[-1] + study.alpha * (x - x[-1])
        ax.plot(x, ref, "k--", label=f"slope alpha = {study.alpha:g}")
        ax.set_xlabel("log2 h")
        ax.set_ylabel("log2 e")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def run_study(config, version="0.1.0"):
    """Run the study a validated converge config describes and write its files.

    Writes ``study.csv``, ``study_meta.txt`` and ``study.svg`` into
    ``config.output_dir``.
    """
    from .config import build_problem, emit

    problem = build_problem(config)
    study = convergence_study(problem, config.levels, config.paths, config.seed,
                              config.quad_order, config.workers,
                              shared_paths=config.shared_paths)
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    write_study_csv(study, os.path.join(out, "study.csv"), version)
    with open(os.path.join(out, "study_meta.txt"), "w", encoding="utf-8") as fh:
        fh.write(emit(config))
        fh.write(f"# version={version}\n# generator={GENERATOR_NAME}\n")
        fh.write(f"# slope={study.slope!r}\n# intercept={study.intercept!r}\n"
                 f"# residual={study.residual!r}\n")
    write_study_svg(study, os.path.join(out, "study.svg"))
    return study


def continuous_dependence_probe(problem, deltas, n_steps, n_paths, master_seed,
                                rules=None, workers=1, chunk_size=DEFAULT_CHUNK_SIZE):
    """Mean-square gap at T between runs from z0 and z0 + delta on shared paths.

    Returns:
        List of ``(delta, mean_square_difference)`` in the order given.
    """
    deltas = [float(x) for x in deltas]
    if any(x < 0 for x in deltas) or any(b > a for a, b in zip(deltas, deltas[1:])):
        raise DomainError("deltas must be non-negative and non-increasing")
    if rules is None:
        rules = build_kernel_rules(problem.orders)
    grid = Grid(n_steps, problem.horizon)
    r = problem.wiener_dim
    shifted = [problem.with_initial_value(problem.z0 + dlt) for dlt in deltas]

    def chunk(start, stop):
        inc = np.stack([sample_path(master_seed, i, grid, r).increments
                        for i in range(start, stop)])
        base = solve_increments(problem, grid, inc, rules, path_offset=start)[-1]
        return [np.sum((solve_increments(p, grid, inc, rules, path_offset=start)[-1] - base) ** 2,
                       axis=1) for p in shifted]

    parts = map_chunks(chunk, int(n_paths), chunk_size, workers)
    table = []
    for k, dlt in enumerate(deltas):
        sq = np.concatenate([part[k] for part in parts])
        table.append((dlt, _mean(sq)))
    return table
