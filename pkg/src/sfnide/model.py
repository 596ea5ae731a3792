"""Problem data, Volterra kernels and built-in problems.

Coefficient callables follow one broadcasting convention so the solver can
evaluate many paths and history points in a single call:

* ``f_i(t, z)`` and ``g0(t, z)`` return arrays of shape ``z.shape``;
* ``g1(t, s, z)`` returns ``z.shape`` and ``g2(t, s, z)`` returns
  ``z.shape + (r,)``.

``z`` has shape ``batch + (d,)`` and the time arguments are scalars or arrays
broadcastable to ``batch``; a function mixing a time array with ``z`` should
index it as ``t[..., None]``.  Callables must be pure.
"""

from dataclasses import dataclass, field, replace
import math
import warnings

import numpy as np

from .errors import DomainError, EvaluationError, MismatchError, ShapeError
from .quadrature import JacobiRule, build_jacobi_rule
from .specialfn import beta, gamma

__all__ = [
    "FractionalOrders", "ProblemSpec", "Grid", "AssumptionWarning",
    "eval_F", "eval_G0", "eval_Gj", "build_kernel_rules", "check_rules",
    "check_linear_growth", "example1", "linear_test", "EXAMPLE1_PARAMETER_SETS",
    "jacobi_zeroth_factor",
    "DEFAULT_QUAD_ORDER",
]

DEFAULT_QUAD_ORDER = 16

#: (alpha, alpha_1, beta_1, beta_2) for the four curves of the Example 1 study.
EXAMPLE1_PARAMETER_SETS = (
    (0.4, 0.5, 0.6, 0.4),
    (0.4, 0.5, 0.8, 0.3),
    (0.8, 0.9, 0.6, 0.4),
    (0.8, 0.9, 0.8, 0.3),
)


class AssumptionWarning(UserWarning):
    """A sampled spot check of a growth or monotonicity condition failed."""


def _order_problems(alpha, alpha_i, beta1, beta2):
    problems = []
    if not (0.0 < alpha <= 1.0):
        problems.append(("alpha", f"alpha must lie in (0, 1], got {alpha!r}"))
    for i, a in enumerate(alpha_i, start=1):
        if not (0.0 < alpha <= a <= 1.0):
            problems.append(
                ("alpha_i", f"alpha_{i} must lie in [alpha, 1] = [{alpha!r}, 1], got {a!r}"))
    if not (0.0 < beta1 < 1.0):
        problems.append(("beta1", f"beta1 must lie in (0, 1), got {beta1!r}"))
    if not (0.0 < beta2 < 0.5):
        problems.append(("beta2", f"beta2 must lie in (0, 0.5), got {beta2!r}"))
    return problems


@dataclass(frozen=True)
class FractionalOrders:
    """Caputo order, neutral-term orders and the two kernel singularities."""

    alpha: float
    alpha_i: tuple = ()
    beta1: float = 0.5
    beta2: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "alpha_i", tuple(float(a) for a in self.alpha_i))
        object.__setattr__(self, "beta1", float(self.beta1))
        object.__setattr__(self, "beta2", float(self.beta2))
        problems = _order_problems(self.alpha, self.alpha_i, self.beta1, self.beta2)
        if problems:
            raise DomainError("; ".join(msg for _, msg in problems))

    @property
    def n_neutral(self):
        return len(self.alpha_i)


@dataclass(frozen=True)
class Grid:
    """Uniform mesh t_n = n * h on [0, T] with h = T / N."""

    n_steps: int
    horizon: float

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise DomainError(f"horizon must be positive, got {self.horizon!r}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def h(self):
        return self.horizon / self.n_steps

    @property
    def nodes(self):
        return np.arange(self.n_steps + 1, dtype=float) * self.h


@dataclass(frozen=True)
class ProblemSpec:
    """Data of a d-dimensional neutral stochastic fractional equation.

    ``g1_time_free`` / ``g2_time_free`` declare that g1 / g2 ignore their first
    (outer time) argument.  The solver then replaces the inner Jacobi
    quadrature by its exact zeroth moment, which is what the quadrature
    computes for such integrands anyway.
    """

    dim: int
    wiener_dim: int
    orders: FractionalOrders
    f: tuple
    g0: object
    g1: object
    g2: object
    z0: np.ndarray
    horizon: float = 1.0
    g1_time_free: bool = False
    g2_time_free: bool = False
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(self.f))
        z0 = np.array(self.z0, dtype=float).reshape(-1)
        z0.setflags(write=False)
        object.__setattr__(self, "z0", z0)
        if self.dim < 1 or self.wiener_dim < 1:
            raise DomainError("dim and wiener_dim must be positive")
        if len(self.f) != self.orders.n_neutral:
            raise MismatchError(
                f"{len(self.f)} neutral coefficients but {self.orders.n_neutral} orders alpha_i")
        if z0.shape != (self.dim,):
            raise ShapeError(f"z0 must have shape ({self.dim},), got {z0.shape}")
        if not (self.horizon > 0.0):
            raise DomainError(f"horizon must be positive, got {self.horizon!r}")
        # probe the diffusion shape once; non-square noise is the usual slip
        _coefficient(self.g2, (self.horizon, 0.0, z0), (self.dim, self.wiener_dim), "g2")

    def with_initial_value(self, z0):
        return replace(self, z0=np.array(z0, dtype=float))

    def grid(self, n_steps):
        return Grid(n_steps, self.horizon)


def _coefficient(fn, args, tail, name):
    """Evaluate a coefficient and coerce it to ``batch + tail``."""
    z = args[-1]
    batch = np.shape(z)[:-1]
    out = np.asarray(fn(*args), dtype=float)
    try:
        out = np.broadcast_to(out, batch + tuple(tail))
    except ValueError:
        raise ShapeError(
            f"{name} returned shape {out.shape}, expected {batch + tuple(tail)}") from None
    if not np.all(np.isfinite(out)):
        raise EvaluationError(f"{name} returned non-finite values")
    return out


def _lag(t, s):
    lag = np.asarray(t, dtype=float) - np.asarray(s, dtype=float)
    if np.any(lag <= 0.0):
        raise DomainError("kernels need s < t; the diagonal s = t is singular")
    return lag


def eval_F(i, orders, f_i, t, s, z):
    """Neutral kernel F_i(t, s, z) = f_i(s, z) (t - s)**(alpha_i - 1) / Gamma(alpha_i).

    ``i`` is zero-based.
    """
    a = orders.alpha_i[i]
    lag = _lag(t, s)
    value = _coefficient(f_i, (s, np.asarray(z, dtype=float)), (np.shape(z)[-1],), f"f_{i + 1}")
    return value * (lag ** (a - 1.0) / gamma(a))[..., None]


def eval_G0(orders, g0, t, s, z):
    """Drift kernel G_0(t, s, z) = g0(s, z) (t - s)**(alpha - 1) / Gamma(alpha)."""
    a = orders.alpha
    lag = _lag(t, s)
    value = _coefficient(g0, (s, np.asarray(z, dtype=float)), (np.shape(z)[-1],), "g0")
    return value * (lag ** (a - 1.0) / gamma(a))[..., None]


def eval_Gj(j, orders, g_j, rule, t, s, z, wiener_dim=None):
    """Substituted double-singular kernel G_1 or G_2 at one point.

    Computes ``(t - s)**(alpha - beta_j) / Gamma(alpha)`` times the Jacobi
    quadrature of ``u -> g_j((t - s) u + s, s, z)`` against
    ``(1 - u)**(alpha - 1) * u**(-beta_j)``.  For ``j == 2`` the result has
    shape ``(d, r)`` with ``r = wiener_dim`` (inferred when omitted).
    """
    if j not in (1, 2):
        raise DomainError(f"kernel index must be 1 or 2, got {j!r}")
    beta_j = orders.beta1 if j == 1 else orders.beta2
    check_rules(orders, {j: rule})
    t = float(t)
    s = float(s)
    lag = float(_lag(t, s))
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    if j == 2 and wiener_dim is None:
        wiener_dim = np.shape(g_j(t, s, z))[-1]
    tail = (d,) if j == 1 else (d, wiener_dim)

    taus = lag * rule.nodes + s
    zb = np.broadcast_to(z, (rule.n,) + z.shape)
    values = _coefficient(g_j, (taus, s, zb), tail, f"g{j}")
    integral = np.tensordot(rule.weights, values, axes=(0, 0))
    return integral * (lag ** (orders.alpha - beta_j) / gamma(orders.alpha))


def build_kernel_rules(orders, n=DEFAULT_QUAD_ORDER):
    """Jacobi rules for G_1 and G_2, keyed by kernel index."""
    return {
        1: build_jacobi_rule(orders.alpha - 1.0, -orders.beta1, n),
        2: build_jacobi_rule(orders.alpha - 1.0, -orders.beta2, n),
    }


def check_rules(orders, rules):
    """Raise MismatchError unless each rule matches its (alpha, beta_j) pair."""
    for j, rule in rules.items():
        beta_j = orders.beta1 if j == 1 else orders.beta2
        if not isinstance(rule, JacobiRule):
            raise MismatchError(f"rule for G_{j} is not a JacobiRule")
        if rule.exponent_a != orders.alpha - 1.0 or rule.exponent_b != -beta_j:
            raise MismatchError(
                f"rule for G_{j} has exponents ({rule.exponent_a}, {rule.exponent_b}),"
                f" expected ({orders.alpha - 1.0}, {-beta_j})")


def check_linear_growth(problem, bound, n_samples=64, seed=0, radius=10.0):
    """Spot-check |coefficient| <= bound * (1 + |z|) on random samples.

    Returns ``"pass"`` or ``"warn"``; a failure also emits AssumptionWarning.
    Never raises on a violated bound.
    """
    rng = np.random.default_rng(seed)
    T = problem.horizon
    d = problem.dim
    worst = 0.0
    for _ in range(n_samples):
        s, t = np.sort(rng.uniform(0.0, T, size=2))
        z = rng.uniform(-radius, radius, size=d)
        scale = bound * (1.0 + np.linalg.norm(z))
        values = [np.asarray(f_i(s, z)) for f_i in problem.f]
        values.append(np.asarray(problem.g0(s, z)))
        values.append(np.asarray(problem.g1(t, s, z)))
        values.append(np.asarray(problem.g2(t, s, z)))
        for v in values:
            worst = max(worst, float(np.linalg.norm(v)) / scale)
    if worst <= 1.0:
        return "pass"
    warnings.warn(
        f"linear growth bound {bound} exceeded by factor {worst:.3g}", AssumptionWarning)
    return "warn"


def _example1_f(t, z):
    return np.cos(np.asarray(t)[..., None] * z)


def _example1_g(t, s, z):
    return np.asarray(s)[..., None] * np.sin(z)


def _example1_g2(t, s, z):
    return (np.asarray(s)[..., None] * np.sin(z))[..., None]


def example1(alpha, alpha1, beta1, beta2):
    """Scalar test problem with cos(t z) neutral/drift terms and s sin(z) kernels.

    d = r = 1, z0 = 1, T = 1.  Raises DomainError for inadmissible orders.
    """
    orders = FractionalOrders(alpha, (alpha1,), beta1, beta2)
    return ProblemSpec(
        dim=1, wiener_dim=1, orders=orders,
        f=(_example1_f,), g0=_example1_f, g1=_example1_g, g2=_example1_g2,
        z0=np.array([1.0]), horizon=1.0,
        g1_time_free=True, g2_time_free=True,
        name="example1",
        params={"alpha": alpha, "alpha_i": (alpha1,), "beta1": beta1, "beta2": beta2},
    )


def _constant(c, with_noise_axis=False):
    c = float(c)

    def fn(*args):
        z = np.asarray(args[-1], dtype=float)
        out = np.full(z.shape, c)
        return out[..., None] if with_noise_axis else out

    return fn


def linear_test(alpha, alpha_i=(), beta1=0.5, beta2=0.25, coef_f=None,
                coef_g0=0.0, coef_g1=0.0, coef_g2=0.0, z0=1.0, horizon=1.0):
    """Scalar fixture whose coefficients are constants (zero by default)."""
    orders = FractionalOrders(alpha, tuple(alpha_i), beta1, beta2)
    if coef_f is None:
        coef_f = (0.0,) * len(orders.alpha_i)
    return ProblemSpec(
        dim=1, wiener_dim=1, orders=orders,
        f=tuple(_constant(c) for c in coef_f),
        g0=_constant(coef_g0), g1=_constant(coef_g1),
        g2=_constant(coef_g2, with_noise_axis=True),
        z0=np.array([float(z0)]), horizon=horizon,
        g1_time_free=True, g2_time_free=True,
        name="linear_test",
        params={"alpha": alpha, "alpha_i": tuple(alpha_i), "beta1": beta1,
                "beta2": beta2, "coef_f": tuple(coef_f), "coef_g0": coef_g0,
                "coef_g1": coef_g1, "coef_g2": coef_g2},
    )


def jacobi_zeroth_factor(orders, j):
    """B(1 - beta_j, alpha) / Gamma(alpha): the kernel factor for time-free g_j."""
    beta_j = orders.beta1 if j == 1 else orders.beta2
    return beta(1.0 - beta_j, orders.alpha) / gamma(orders.alpha)
