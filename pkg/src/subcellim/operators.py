"""Reference-element operators for Lobatto spectral element discretizations.

All operators act on the reference interval [-1, 1].  Two-dimensional actions
are never assembled as Kronecker products; they are applied line by line with
the quadrature weight of the transverse index supplying the tensor mass
scaling (see :func:`apply_axis`).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractViolationError, NumericsError

MAX_DEGREE = 8

_NEWTON_TOL = 1e-15
_NEWTON_MAXIT = 100


@dataclass(frozen=True)
class QuadratureRule1D:
    """Legendre-Gauss-Lobatto rule of degree ``degree`` (``degree + 1`` nodes)."""

    degree: int
    nodes: np.ndarray
    weights: np.ndarray


def _legendre_and_derivative(n, x):
    """Evaluate P_n and P_n' at ``x`` via three-term recurrences.

    The derivative uses P'_{k+1} = P'_{k-1} + (2k+1) P_k, which stays
    well-defined at the interval endpoints.
    """
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x), np.zeros_like(x)
    p_a, p_b = np.ones_like(x), x.copy()
    dp_a, dp_b = np.zeros_like(x), np.ones_like(x)
    for k in range(1, n):
        p_c = ((2 * k + 1) * x * p_b - k * p_a) / (k + 1)
        dp_c = dp_a + (2 * k + 1) * p_b
        p_a, p_b = p_b, p_c
        dp_a, dp_b = dp_b, dp_c
    return p_b, dp_b


def lgl_rule(N):
    """Build the degree-``N`` Legendre-Gauss-Lobatto quadrature rule.

    The interior nodes are the roots of (1 - r^2) P_N'(r), found by Newton
    iteration started from Chebyshev-Lobatto guesses.  Since
    d/dr [(1 - r^2) P_N'] = -N(N+1) P_N, each Newton update is

        r <- r + (1 - r^2) P_N'(r) / (N (N+1) P_N(r)).

    Weights are w_i = 2 / (N (N+1) P_N(r_i)^2).
    """
    if not (1 <= N <= MAX_DEGREE):
        raise ConfigurationError(f"polynomial degree must be in [1, {MAX_DEGREE}], got {N}")
    n = N + 1
    nodes = np.empty(n)
    nodes[0], nodes[-1] = -1.0, 1.0
    if N >= 2:
        r = -np.cos(np.pi * np.arange(1, N) / N)
        for _ in range(_NEWTON_MAXIT):
            p, dp = _legendre_and_derivative(N, r)
            step = (1.0 - r * r) * dp / (N * (N + 1) * p)
            r = r + step
            if np.max(np.abs(step)) < _NEWTON_TOL:
                break
        else:
            raise NumericsError(f"LGL Newton iteration did not converge for N={N}")
        nodes[1:-1] = r
    p, _ = _legendre_and_derivative(N, nodes)
    weights = 2.0 / (N * (N + 1) * p * p)
    return QuadratureRule1D(degree=N, nodes=nodes, weights=weights)


def _differentiation_matrix(nodes):
    """Nodal differentiation matrix via the barycentric Lagrange formula."""
    n = len(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / np.prod(diff, axis=1)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (bary[j] / bary[i]) / (nodes[i] - nodes[j])
        D[i, i] = -np.sum(D[i, :])
    return D


def _sparse_low_order(n):
    """Sparse low-order operator from integrating the subcell hat basis."""
    Q = np.zeros((n, n))
    for i in range(n - 1):
        Q[i, i + 1] = 0.5
        Q[i + 1, i] = -0.5
    Q[0, 0] = -0.5
    Q[-1, -1] = 0.5
    return Q


def _difference_blocks(n):
    """Volume/surface split of the (N+1) x (N+2) subcell difference operator."""
    vol = np.zeros((n, n + 1))
    surf = np.zeros((n, n + 1))
    for i in range(n):
        if i > 0:
            vol[i, i] = -1.0
        if i < n - 1:
            vol[i, i + 1] = 1.0
    surf[0, 0] = -1.0
    surf[-1, -1] = 1.0
    return vol, surf


def _legendre_vandermonde(nodes):
    """Vandermonde of the L2-orthonormal Legendre basis at the given nodes."""
    n = len(nodes)
    V = np.empty((n, n))
    p_prev = np.ones(n)
    V[:, 0] = p_prev * np.sqrt(0.5)
    if n > 1:
        p = nodes.copy()
        V[:, 1] = p * np.sqrt(1.5)
        for k in range(1, n - 1):
            p_next = ((2 * k + 1) * nodes * p - k * p_prev) / (k + 1)
            p_prev, p = p, p_next
            V[:, k + 1] = p * np.sqrt((2 * k + 3) / 2.0)
    return V


@dataclass(frozen=True)
class OperatorSet:
    """All 1D reference operators of a degree-N Lobatto element."""

    degree: int
    rule: QuadratureRule1D
    M1d: np.ndarray    # quadrature weights (diagonal mass), shape (N+1,)
    D1d: np.ndarray    # differentiation
    Q1d: np.ndarray    # weighted differentiation M D
    B1d: np.ndarray    # boundary integration, 2 x (N+1)
    E1d: np.ndarray    # face extrapolation, 2 x (N+1)
    Qlow1d: np.ndarray         # sparse low-order operator
    Dvol1d: np.ndarray         # volume difference block, (N+1) x (N+2)
    Dsurf1d: np.ndarray        # surface difference block, (N+1) x (N+2)
    Vleg: np.ndarray = field(repr=False, default=None)   # orthonormal Legendre Vandermonde
    Vinv: np.ndarray = field(repr=False, default=None)   # nodal -> modal transform

    @property
    def n(self):
        return self.degree + 1

    @property
    def tri1d(self):
        """Skew part Qlow - Qlow^T used by the graph-viscosity stencil."""
        return self.Qlow1d - self.Qlow1d.T


def build_operator_set(N):
    """Construct every reference operator for polynomial degree ``N``."""
    rule = lgl_rule(N)
    n = N + 1
    D = _differentiation_matrix(rule.nodes)
    Q = rule.weights[:, None] * D
    B = np.zeros((2, n))
    B[0, 0], B[1, -1] = -1.0, 1.0
    E = np.zeros((2, n))
    E[0, 0], E[1, -1] = 1.0, 1.0
    Qlow = _sparse_low_order(n)
    Dvol, Dsurf = _difference_blocks(n)
    V = _legendre_vandermonde(rule.nodes)
    return OperatorSet(
        degree=N, rule=rule, M1d=rule.weights.copy(), D1d=D, Q1d=Q, B1d=B, E1d=E,
        Qlow1d=Qlow, Dvol1d=Dvol, Dsurf1d=Dsurf, Vleg=V, Vinv=np.linalg.inv(V),
    )


# Operators whose 2D Kronecker definition carries the transverse mass weight
# (Q_x = M1d (x) Q1d etc.); the difference and extrapolation operators do not.
_MASS_WEIGHTED = {"Q", "Qlow", "B"}
_PLAIN = {"D", "E", "Dvol", "Dsurf", "Delta"}


def _op_matrix(ops, op):
    if op == "Q":
        return ops.Q1d
    if op == "D":
        return ops.D1d
    if op == "Qlow":
        return ops.Qlow1d
    if op == "B":
        return ops.B1d
    if op == "E":
        return ops.E1d
    if op == "Dvol":
        return ops.Dvol1d
    if op == "Dsurf":
        return ops.Dsurf1d
    if op == "Delta":
        return ops.Dvol1d + ops.Dsurf1d
    raise ContractViolationError(f"unknown operator id {op!r}")


def apply_axis(ops, op, axis, field, dim):
    """Apply a reference operator along one axis of a nodal field.

    ``field`` holds one scalar component: shape ``(n,)`` for ``dim == 1``
    (or ``(n+1,)`` entries for difference-operator inputs) and ``(n, n)``
    for ``dim == 2`` in ``[y, x]`` node ordering.  The result equals the
    action of the assembled Kronecker operator (e.g. ``Q_x = M1d (x) Q1d``)
    without materializing it.

    ``op='M'`` applies the full (tensor) diagonal mass regardless of axis.
    """
    field = np.asarray(field, dtype=float)
    w = ops.M1d
    if op == "M":
        if dim == 1:
            return w * field
        return w[:, None] * w[None, :] * field
    A = _op_matrix(ops, op)
    if dim == 1:
        return A @ field
    if axis not in ("x", "y"):
        raise ContractViolationError(f"axis must be 'x' or 'y', got {axis!r}")
    if field.shape[-1 if axis == "x" else 0] != A.shape[1]:
        raise ContractViolationError(
            f"field shape {field.shape} incompatible with operator {op!r} along {axis}")
    if axis == "x":
        out = field @ A.T
        if op in _MASS_WEIGHTED:
            out = w[:, None] * out
    else:
        out = A @ field
        if op in _MASS_WEIGHTED:
            out = out * w[None, :]
    return out
