"""Gauss-Jacobi rules on [0, 1] for the weight (1 - u)**a * u**b.

Nodes and weights come from the Golub-Welsch eigenproblem on the symmetric
tridiagonal Jacobi matrix of the monic Jacobi recurrence on [-1, 1], mapped
affinely with ``u = (1 + x) / 2``.  Under that map the exponent of
``(1 - x)`` becomes the exponent of ``(1 - u)``, so the recurrence is built
with ``(a, b) = (exponent_a, exponent_b)`` directly.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import ConvergenceError, DomainError, EvaluationError
from .specialfn import beta

__all__ = ["JacobiRule", "build_jacobi_rule", "integrate", "moment_table",
           "MAX_NODES"]

MAX_NODES = 200


@dataclass(frozen=True)
class JacobiRule:
    """Immutable Gauss-Jacobi rule for (1 - u)**exponent_a * u**exponent_b."""

    exponent_a: float
    exponent_b: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n(self):
        return len(self.nodes)

    def zeroth_moment(self):
        """Exact integral of the weight function, B(b + 1, a + 1)."""
        return beta(self.exponent_b + 1.0, self.exponent_a + 1.0)

    def monomial_moment(self, k):
        """Exact integral of u**k against the weight."""
        return beta(k + self.exponent_b + 1.0, self.exponent_a + 1.0)


def _recurrence(a, b, n):
    """Diagonal and off-diagonal of the Jacobi matrix on [-1, 1]."""
    k = np.arange(n, dtype=float)
    ab = a + b
    two_k = 2.0 * k + ab
    diag = np.empty(n)
    diag[0] = (b - a) / (ab + 2.0)
    if n > 1:
        kk = two_k[1:]
        diag[1:] = (b * b - a * a) / (kk * (kk + 2.0))

    off = np.empty(max(n - 1, 0))
    if n > 1:
        # k = 1 is written separately: the generic form has a removable
        # 0/0 at a + b = -1
        off[0] = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) ** 2 * (3.0 + ab))
        if n > 2:
            k = np.arange(2, n, dtype=float)
            tk = 2.0 * k + ab
            off[1:] = (4.0 * k * (k + a) * (k + b) * (k + ab)
                       / (tk * tk * (tk + 1.0) * (tk - 1.0)))
    return diag, np.sqrt(off)


def build_jacobi_rule(exponent_a, exponent_b, n):
    """Build the n-point Gauss rule for (1 - u)**exponent_a * u**exponent_b on [0, 1].

    Args:
        exponent_a: power of (1 - u), must exceed -1.
        exponent_b: power of u, must exceed -1.
        n: number of nodes, 1 <= n <= 200.

    Returns:
        JacobiRule with strictly increasing nodes in (0, 1) and positive
        weights summing to B(exponent_b + 1, exponent_a + 1).

    Raises:
        DomainError: for exponents <= -1 or n out of range.
        ConvergenceError: if the tridiagonal eigensolver fails.
    """
    a, b = float(exponent_a), float(exponent_b)
    if not (a > -1.0 and b > -1.0):
        raise DomainError(
            f"Jacobi exponents must exceed -1, got a={a}, b={b}")
    if int(n) != n or not (1 <= n <= MAX_NODES):
        raise DomainError(f"node count must be in [1, {MAX_NODES}], got {n}")
    n = int(n)

    diag, off = _recurrence(a, b, n)
    try:
        x, vecs = eigh_tridiagonal(diag, off, lapack_driver="stev")
    except LinAlgError as exc:
        raise ConvergenceError(f"Golub-Welsch eigensolve failed: {exc}") from exc

    # zeroth moment on [0, 1]; the 2**(a+b+1) of [-1, 1] cancels in the map
    mu0 = beta(b + 1.0, a + 1.0)
    weights = mu0 * vecs[0, :] ** 2
    nodes = 0.5 * (1.0 + x)
    order = np.argsort(nodes, kind="stable")
    return JacobiRule(a, b, np.ascontiguousarray(nodes[order]),
                      np.ascontiguousarray(weights[order]))


def integrate(rule, fn):
    """Apply ``rule`` to ``fn``: sum_k weights[k] * fn(nodes[k]).

    ``fn`` may return a scalar or an array; every node's value must share one
    shape.  A non-finite value raises EvaluationError naming the node.
    """
    total = None
    for k, (u, w) in enumerate(zip(rule.nodes, rule.weights)):
        value = np.asarray(fn(float(u)), dtype=float)
        if not np.all(np.isfinite(value)):
            raise EvaluationError(
                f"integrand is not finite at node {k} (u={u!r})")
        total = w * value if total is None else total + w * value
    return float(total) if total.ndim == 0 else total


def moment_table(rule, max_degree=None):
    """Rows ``(k, quadrature, exact, rel_error)`` for u**k, k <= 2n - 1."""
    if max_degree is None:
        max_degree = 2 * rule.n - 1
    rows = []
    for k in range(max_degree + 1):
        approx = float(np.sum(rule.weights * rule.nodes ** k))
        exact = rule.monomial_moment(k)
        rows.append((k, approx, exact, abs(approx - exact) / abs(exact)))
    return rows

