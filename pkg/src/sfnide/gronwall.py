"""Series bound for Gronwall inequalities with several weakly singular kernels.

For ``u(t) <= g(t) + sum_i a_i(t) int_0^t (t-s)^(alpha_i-1) u(s) ds
+ b(t) int_0^t (t-s)^(alpha-1) u(s) ds`` the bound is the Neumann series of
the (commuting) kernel operators.  Shell k collects every product with k
operator factors:

    S_k = sum_{j<=k} C(k, j) (b Gamma(alpha))^(k-j)
          sum_{l_1+..+l_n=j} multinom(j; l) prod_i (a_i Gamma(alpha_i))^(l_i)
          * (1 / Gamma(mu)) int_0^t (t-s)^(mu-1) g(s) ds,

    mu = sum_i l_i alpha_i + (k-j) alpha,

with S_0 = g(t).  a_i and b are evaluated once at the query time.  Every
coefficient is assembled as a sum of logarithms, exponentiated once and then
multiplied by its g-integral.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache
import math
import numbers
import warnings

import numpy as np

from .errors import ConvergenceError, DomainError, MismatchError
from .model import AssumptionWarning
from .quadrature import build_jacobi_rule
from .specialfn import log_gamma

__all__ = ["GronwallProblem", "SeriesPolicy", "GronwallResult", "weak_compositions",
           "log_multinomial", "gronwall_series", "gronwall_bound",
           "gronwall_bound_constant_g", "PiecewiseLinear"]


@dataclass(frozen=True)
class PiecewiseLinear:
    """Tabulated function, linearly interpolated and held constant outside."""

    points: tuple

    def __post_init__(self):
        pts = tuple(sorted((float(t), float(v)) for t, v in self.points))
        if not pts:
            raise DomainError("a table needs at least one point")
        object.__setattr__(self, "points", pts)

    def __call__(self, t):
        ts, vs = zip(*self.points)
        return np.interp(t, ts, vs)


def _evaluate(fn, t):
    if isinstance(fn, numbers.Real):
        return float(fn)
    return float(fn(t))


@dataclass(frozen=True)
class GronwallProblem:
    """Data of the integral inequality.

    ``a_i``, ``b`` and ``g`` may be plain numbers (constants) or callables of
    one time argument.  ``g`` is a constant whenever it is given as a number.
    """

    alpha: float
    alpha_i: tuple
    a_i: tuple
    b: object
    g: object
    horizon: float

    def __post_init__(self):
        object.__setattr__(self, "alpha_i", tuple(float(a) for a in self.alpha_i))
        object.__setattr__(self, "a_i", tuple(self.a_i))
        if len(self.alpha_i) != len(self.a_i):
            raise MismatchError(
                f"{len(self.a_i)} coefficients a_i but {len(self.alpha_i)} orders alpha_i")
        for name, a in [("alpha", self.alpha)] + [(f"alpha_{i + 1}", a)
                                                  for i, a in enumerate(self.alpha_i)]:
            if not (0.0 < a <= 1.0):
                raise DomainError(f"{name} must lie in (0, 1], got {a!r}")
        if not (self.horizon > 0.0):
            raise DomainError(f"horizon must be positive, got {self.horizon!r}")

    @property
    def g_is_constant(self):
        return isinstance(self.g, numbers.Real)

    def validate(self, n_probe=33):
        """Warn (AssumptionWarning) if a_i or b look negative or decreasing."""
        ts = np.linspace(0.0, self.horizon, n_probe, endpoint=False)
        ok = True
        for name, fn in [("b", self.b)] + [(f"a_{i + 1}", a) for i, a in enumerate(self.a_i)]:
            vals = np.array([_evaluate(fn, t) for t in ts])
            if np.any(vals < 0) or np.any(np.diff(vals) < 0):
                warnings.warn(f"{name} is not non-negative and non-decreasing on the probe grid",
                              AssumptionWarning)
                ok = False
        return ok


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation policy: stop after three consecutive shells below tail_tol."""

    k_max: int = 120
    tail_tol: float = 1e-12
    quad_nodes: int = 32
    patience: int = 3

    def __post_init__(self):
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise DomainError(f"k_max must be a positive integer, got {self.k_max!r}")
        if not (self.tail_tol > 0.0):
            raise DomainError(f"tail_tol must be positive, got {self.tail_tol!r}")


@dataclass(frozen=True)
class GronwallResult:
    value: float
    shells_used: int
    tail_estimate: float
    converged: bool
    shells: tuple = field(default=(), repr=False)


def weak_compositions(j, n):
    """All n-tuples of non-negative integers summing to j, lexicographic order."""
    if int(j) != j or j < 0:
        raise DomainError(f"j must be a non-negative integer, got {j!r}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    return list(_compositions(int(j), int(n)))


@lru_cache(maxsize=None)
def _compositions(j, n):
    if n == 1:
        return ((j,),)
    return tuple((first,) + rest for first in range(j + 1)
                 for rest in _compositions(j - first, n - 1))


@lru_cache(maxsize=4096)
def _composition_array(j, n):
    arr = np.array(_compositions(j, n), dtype=float).reshape(-1, n)
    arr.setflags(write=False)
    return arr


def log_multinomial(j, parts):
    """ln( j! / (l_1! ... l_n!) ) for a composition ``parts`` of j."""
    parts = tuple(int(p) for p in parts)
    if sum(parts) != j or any(p < 0 for p in parts):
        raise MismatchError(f"parts {parts} do not form a composition of {j}")
    return log_gamma(j + 1.0) - sum(log_gamma(p + 1.0) for p in parts)


class _KernelMoment:
    """(1 / Gamma(mu)) int_0^t (t-s)^(mu-1) g(s) ds as ``exp(log_part) * linear_part``.

    The g-dependent factor stays linear so that scaling g scales every shell
    by exactly the same floating-point factor.
    """

    def __init__(self, g, t, quad_nodes):
        self.t = t
        self.log_t = math.log(t)
        self.constant = isinstance(g, numbers.Real)
        self.g = g
        self.quad_nodes = quad_nodes
        self._cache = {}

    def parts(self, mu):
        """``(log_part, linear_part)`` arrays for an array of orders."""
        mu = np.asarray(mu, dtype=float)
        if self.constant:
            # int_0^t (t-s)^(mu-1) ds = t^mu / mu
            return mu * self.log_t - log_gamma(mu + 1.0), np.full(mu.shape, float(self.g))
        linear = np.empty(mu.shape)
        for idx, m in np.ndenumerate(mu):
            linear[idx] = self._integral(float(m))
        return mu * self.log_t - log_gamma(mu), linear

    def _integral(self, mu):
        cached = self._cache.get(mu)
        if cached is not None:
            return cached
        # s = t v turns the integral into t^mu int_0^1 (1-v)^(mu-1) g(t v) dv
        rule = build_jacobi_rule(mu - 1.0, 0.0, self.quad_nodes)
        vals = np.array([_evaluate(self.g, self.t * v) for v in rule.nodes])
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise DomainError("g must be non-negative and finite on (0, t)")
        value = float(np.dot(rule.weights, vals))
        self._cache[mu] = value
        return value


@lru_cache(maxsize=512)
def _shell_index(k, n):
    """Stacked compositions of every j <= k (rows) and their m = k - j."""
    comps = np.vstack([_composition_array(j, n) for j in range(k + 1)])
    m = k - comps.sum(axis=1)
    log_fact = np.sum(log_gamma(comps + 1.0), axis=1)
    for arr in (comps, m, log_fact):
        arr.setflags(write=False)
    return comps, m, log_fact


def _shell(k, log_a, orders_a, log_b, alpha, moment):
    """Contribution of all k-fold operator products."""
    n = len(orders_a)
    if n == 0:
        if log_b == -np.inf:
            return 0.0
        log_moment, linear = moment.parts(np.array([k * alpha]))
        return float(np.exp(k * log_b + log_moment[0]) * linear[0])
    comps, m, log_fact = _shell_index(k, n)
    if log_b == -np.inf:
        keep = m == 0
        comps, m, log_fact = comps[keep], m[keep], log_fact[keep]
        log_b_part = 0.0
    else:
        log_b_part = m * log_b
    # C(k, j) * j! / prod(l_i!) = k! / ((k - j)! prod(l_i!))
    log_coef = log_gamma(k + 1.0) - log_gamma(m + 1.0) - log_fact
    mu = comps @ orders_a + m * alpha
    log_moment, linear = moment.parts(mu)
    logs = log_coef + log_b_part + comps @ log_a + log_moment
    return float(np.sum(np.exp(logs) * linear))


def gronwall_series(problem, t, policy=None):
    """Evaluate the bound at ``t`` and report truncation diagnostics.

    Shells are summed until ``policy.patience`` consecutive shells each add
    no more than ``tail_tol`` times the running sum.

    Raises:
        DomainError: if ``t`` is not in (0, T).
        ConvergenceError: ("series not converged") if shells are still
            growing at ``k_max``.
    """
    if policy is None:
        policy = SeriesPolicy()
    t = float(t)
    if not (0.0 < t < problem.horizon):
        raise DomainError(f"t must lie in (0, {problem.horizon}), got {t}")

    g_t = _evaluate(problem.g, t)
    if g_t < 0:
        raise DomainError("g must be non-negative")
    b_t = _evaluate(problem.b, t)
    a_t = [_evaluate(a, t) for a in problem.a_i]
    if b_t < 0 or any(a < 0 for a in a_t):
        raise DomainError("a_i and b must be non-negative")

    # kernels with a zero coefficient only ever contribute l_i = 0
    active = [(a, order) for a, order in zip(a_t, problem.alpha_i) if a > 0.0]
    log_a = np.array([math.log(a) + log_gamma(order) for a, order in active])
    orders_a = np.array([order for _, order in active])
    log_b = math.log(b_t) + log_gamma(problem.alpha) if b_t > 0.0 else -np.inf

    moment = _KernelMoment(problem.g, t, policy.quad_nodes)
    shells = [g_t]
    total = g_t
    quiet = 0
    for k in range(1, policy.k_max + 1):
        s_k = _shell(k, log_a, orders_a, log_b, problem.alpha, moment)
        if not math.isfinite(s_k):
            raise ConvergenceError(f"series not converged: shell {k} overflowed")
        shells.append(s_k)
        total += s_k
        quiet = quiet + 1 if s_k <= policy.tail_tol * total else 0
        if quiet >= policy.patience:
            return GronwallResult(total, k + 1, _tail(shells), True, tuple(shells))

    if len(shells) > 2 and shells[-1] >= shells[-2] and shells[-1] > 0:
        raise ConvergenceError(
            f"series not converged: shells still growing at k_max={policy.k_max}"
            f" (last shell {shells[-1]:.3e})")
    return GronwallResult(total, len(shells), _tail(shells), False, tuple(shells))


def _tail(shells):
    """Geometric estimate of the neglected remainder."""
    last, prev = shells[-1], shells[-2] if len(shells) > 1 else 0.0
    if last == 0.0:
        return 0.0
    if prev <= 0.0 or last >= prev:
        return math.inf
    ratio = last / prev
    return last * ratio / (1.0 - ratio)


def gronwall_bound(problem, t, policy=None):
    """Upper bound for u(t); g-integrals use Jacobi quadrature unless g is a number.

    A constant ``g`` supplied as a callable always takes the quadrature path.
    """
    return gronwall_series(problem, t, policy).value


def gronwall_bound_constant_g(problem, t, policy=None):
    """Bound for constant g via the closed form int_0^t (t-s)^(mu-1) ds = t^mu / mu.

    Accepts a number or a callable for ``g``; a callable is sampled once at
    ``t`` (for non-decreasing g this gives g(t) times the constant-g series).
    """
    g_t = _evaluate(problem.g, t)
    return gronwall_series(replace(problem, g=g_t), t, policy).value
