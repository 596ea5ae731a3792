"""Euler-Maruyama scheme on the stochastic Volterra form.

For every step n the scheme rebuilds the whole history sum

    Z_n = z0 + sum_{j<n} [ sum_i F_i(t_n, t_j, Z_j) h + G_0(t_n, t_j, Z_j) h
                           + G_1(t_n, t_j, Z_j) h + G_2(t_n, t_j, Z_j) dW_j ]

with the kernels evaluated afresh at (t_n, t_j), so a path costs O(N^2)
kernel evaluations.  Coefficients that do not depend on t_n (f_i, g0, and
g1/g2 when flagged time-free) are evaluated once per history point and
cached; only the singular factors in (t_n - t_j) are recomputed.

Many paths are integrated together along a leading batch axis.  Every
per-path operation is elementwise and the history sum is an ordered
``cumsum`` over j, so a path's result does not depend on which batch it was
computed in.  That is what makes batch results independent of the worker
count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .brownian import SeedRecord, sample_path
from .errors import EvaluationError, MismatchError, NonFiniteStateError, DomainError
from .model import _coefficient, build_kernel_rules, check_rules, jacobi_zeroth_factor
from .specialfn import gamma

__all__ = ["Trajectory", "BatchMoments", "em_solve", "em_solve_batch",
           "solve_increments", "map_chunks", "DEFAULT_CHUNK_SIZE"]

DEFAULT_CHUNK_SIZE = 64


@dataclass(frozen=True)
class Trajectory:
    """EM iterates on a grid; ``values[n]`` is Z_n and ``values[0] == z0``."""

    grid: object
    values: np.ndarray
    orders: object
    seed_record: SeedRecord = None

    @property
    def times(self):
        return self.grid.nodes

    @property
    def terminal(self):
        return self.values[-1]


@dataclass(frozen=True)
class BatchMoments:
    mean: np.ndarray
    second_moment: np.ndarray
    variance: np.ndarray
    n_paths: int
    master_seed: int


def _noise_product(g, dw):
    """sum_k g[..., k] * dw[..., k] over the Wiener axis, in index order."""
    out = g[..., 0] * dw[..., None, 0]
    for k in range(1, g.shape[-1]):
        out = out + g[..., k] * dw[..., None, k]
    return out


def _ordered_sum(terms, compensated):
    """Sum over axis 0 strictly in index order (optionally Kahan-compensated)."""
    if not compensated:
        return np.cumsum(terms, axis=0)[-1]
    total = np.zeros_like(terms[0])
    carry = np.zeros_like(terms[0])
    for row in terms:
        y = row - carry
        t = total + y
        carry = (t - total) - y
        total = t
    return total


class _Integrator:
    """Holds the per-problem constants shared by all steps of a batch."""

    def __init__(self, problem, grid, rules):
        self.problem = problem
        self.grid = grid
        orders = problem.orders
        self.rules = rules
        self.alpha = orders.alpha
        self.inv_gamma_alpha = 1.0 / gamma(orders.alpha)
        self.neutral = [(a, 1.0 / gamma(a)) for a in orders.alpha_i]
        self.beta = {1: orders.beta1, 2: orders.beta2}
        self.time_free = {1: problem.g1_time_free, 2: problem.g2_time_free}
        self.zeroth = {j: jacobi_zeroth_factor(orders, j) for j in (1, 2)}

    def _generic_inner(self, j, n, t, Z, dW):
        """Quadrature form of G_j for all history points j' < n at once."""
        p = self.problem
        rule = self.rules[j]
        fn = p.g1 if j == 1 else p.g2
        tail = (p.dim,) if j == 1 else (p.dim, p.wiener_dim)
        lags = t[n] - t[:n]
        taus = lags[:, None] * rule.nodes[None, :] + t[:n, None]
        m = Z.shape[1]
        z = np.broadcast_to(Z[:n, None], (n, rule.n, m, p.dim))
        values = _coefficient(fn, (taus[:, :, None], t[:n, None, None], z), tail, f"g{j}")
        acc = rule.weights[0] * values[:, 0]
        for k in range(1, rule.n):
            acc = acc + rule.weights[k] * values[:, k]
        if j == 2:
            acc = _noise_product(acc, dW[:n])
        return acc

    def run(self, increments, compensated=False, path_offset=0):
        p = self.problem
        grid = self.grid
        n_steps, h = grid.n_steps, grid.h
        t = grid.nodes
        m = increments.shape[0]
        d = p.dim
        dW = np.ascontiguousarray(np.transpose(increments, (1, 0, 2)))

        Z = np.empty((n_steps + 1, m, d))
        Z[0] = p.z0
        f_cache = [np.empty((n_steps, m, d)) for _ in p.f]
        g0_cache = np.empty((n_steps, m, d))
        g_cache = {j: np.empty((n_steps, m, d)) for j in (1, 2) if self.time_free[j]}

        for n in range(1, n_steps + 1):
            j = n - 1
            zj, tj = Z[j], t[j]
            try:
                for i, f_i in enumerate(p.f):
                    f_cache[i][j] = _coefficient(f_i, (tj, zj), (d,), f"f_{i + 1}")
                g0_cache[j] = _coefficient(p.g0, (tj, zj), (d,), "g0")
                if 1 in g_cache:
                    g_cache[1][j] = _coefficient(p.g1, (tj, tj, zj), (d,), "g1")
                if 2 in g_cache:
                    g2 = _coefficient(p.g2, (tj, tj, zj), (d, p.wiener_dim), "g2")
                    g_cache[2][j] = _noise_product(g2, dW[j])
                generic = {k: self._generic_inner(k, n, t, Z, dW)
                           for k in (1, 2) if not self.time_free[k]}
            except EvaluationError as exc:
                raise NonFiniteStateError(
                    f"coefficient evaluation failed at step {n}: {exc}", step=n) from exc

            lags = t[n] - t[:n]
            terms = None
            for i, (a_i, inv_g) in enumerate(self.neutral):
                w = lags ** (a_i - 1.0) * inv_g * h
                part = w[:, None, None] * f_cache[i][:n]
                terms = part if terms is None else terms + part
            w = lags ** (self.alpha - 1.0) * self.inv_gamma_alpha * h
            part = w[:, None, None] * g0_cache[:n]
            terms = part if terms is None else terms + part
            for k in (1, 2):
                power = lags ** (self.alpha - self.beta[k])
                scale = h if k == 1 else 1.0
                if self.time_free[k]:
                    w = power * self.zeroth[k] * scale
                    terms = terms + w[:, None, None] * g_cache[k][:n]
                else:
                    w = power * self.inv_gamma_alpha * scale
                    terms = terms + w[:, None, None] * generic[k]

            Z[n] = p.z0 + _ordered_sum(terms, compensated)
            if not np.all(np.isfinite(Z[n])):
                bad = int(np.flatnonzero(~np.all(np.isfinite(Z[n]), axis=-1))[0])
                raise NonFiniteStateError(
                    f"non-finite state at step {n} on path {path_offset + bad}",
                    step=n, path=path_offset + bad)
        return Z


def _resolve_rules(problem, rules, quad_order):
    if rules is None:
        rules = build_kernel_rules(problem.orders, quad_order)
    check_rules(problem.orders, rules)
    return rules


def solve_increments(problem, grid, increments, rules=None, compensated=False,
                     path_offset=0, quad_order=16):
    """Integrate a stack of Brownian increment arrays.

    Args:
        increments: array of shape ``(M, N, r)``.

    Returns:
        States of shape ``(N + 1, M, d)``.
    """
    increments = np.asarray(increments, dtype=float)
    if increments.ndim != 3 or increments.shape[1:] != (grid.n_steps, problem.wiener_dim):
        raise MismatchError(
            f"increments shape {increments.shape} does not match "
            f"(M, {grid.n_steps}, {problem.wiener_dim})")
    if grid.horizon != problem.horizon:
        raise MismatchError(f"grid horizon {grid.horizon} != problem horizon {problem.horizon}")
    rules = _resolve_rules(problem, rules, quad_order)
    return _Integrator(problem, grid, rules).run(increments, compensated, path_offset)


def em_solve(problem, grid, path, rules=None, compensated=False):
    """Run the EM scheme along one Brownian path.

    Raises:
        MismatchError: if the path, grid, problem or rules disagree.
        NonFiniteStateError: if a state becomes non-finite (step is recorded).
    """
    if path.grid != grid:
        raise MismatchError(f"path grid {path.grid} does not match solver grid {grid}")
    if path.wiener_dim != problem.wiener_dim:
        raise MismatchError(
            f"path has {path.wiener_dim} Wiener components, problem needs {problem.wiener_dim}")
    states = solve_increments(problem, grid, path.increments[None], rules, compensated,
                              path_offset=path.seed_record.path_index)
    return Trajectory(grid, states[:, 0, :], problem.orders, path.seed_record)


def map_chunks(fn, n_items, chunk_size=DEFAULT_CHUNK_SIZE, workers=1):
    """Apply ``fn(start, stop)`` to fixed item chunks, results in chunk order.

    Chunk boundaries depend only on ``chunk_size``, never on ``workers``.
    """
    if n_items < 1:
        raise DomainError("need at least one item")
    bounds = [(s, min(s + chunk_size, n_items)) for s in range(0, n_items, chunk_size)]
    if workers <= 1 or len(bounds) == 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


def _path_increments(master_seed, start, stop, grid, r):
    return np.stack([sample_path(master_seed, i, grid, r).increments
                     for i in range(start, stop)])


def em_solve_batch(problem, grid, master_seed, n_paths, rules=None, workers=1,
                   chunk_size=DEFAULT_CHUNK_SIZE, compensated=False):
    """Moments of Z_N over ``n_paths`` independent paths.

    Path i uses ``sample_path(master_seed, i, ...)``; results depend only on
    ``(master_seed, n_paths)`` and the problem, not on ``workers``.
    """
    if int(n_paths) != n_paths or n_paths < 1:
        raise DomainError(f"n_paths must be a positive integer, got {n_paths!r}")
    rules = _resolve_rules(problem, rules, 16)

    def chunk(start, stop):
        inc = _path_increments(master_seed, start, stop, grid, problem.wiener_dim)
        return solve_increments(problem, grid, inc, rules, compensated, path_offset=start)[-1]

    terminal = np.concatenate(map_chunks(chunk, int(n_paths), chunk_size, workers))
    mean = np.sum(terminal, axis=0) / n_paths
    second = np.sum(terminal ** 2, axis=0) / n_paths
    variance = np.sum((terminal - mean) ** 2, axis=0) / n_paths
    return BatchMoments(mean, second, variance, int(n_paths), int(master_seed))
