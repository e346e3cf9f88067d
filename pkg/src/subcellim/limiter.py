"""Entropy linear program, greedy solver and convex-constraint limiting.

Per element and dimension the volume limiting factors solve the continuous
knapsack problem

    max sum(l)   s.t.   a^T l <= b,   0 <= l <= l^C,

where ``a`` couples entropy-variable differences to the high/low subcell flux
gap and ``b`` is the (optionally shock-scaled) low-order entropy margin.  The
sorted greedy algorithm solves it exactly in O(m log m).
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import discretization as disc
from ._kernels import get_backend
from .errors import ContractViolationError, InfeasibleLPError, AdmissibilityError

CONSTRAINT_MODES = ("none", "positivity", "tvd", "minentropy", "minentropy_relaxed")

B_CLAMP_REL = 1e-10


@dataclass(frozen=True)
class LPInstance:
    """One continuous-knapsack instance: coefficients, bound, upper bounds."""

    a: np.ndarray
    b: float
    U: np.ndarray


@dataclass(frozen=True)
class LimiterConfig:
    """User-facing limiter settings (see the ``[limiter]`` config section)."""

    entropy_enabled: bool = True
    beta: float = 0.0
    constraint_mode: str = "none"
    relax: float = 0.5
    eps0: float = 1e-14
    kappa: float = 1.0
    blending: bool = False
    force_low: bool = False
    phi_global: float = float("nan")

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ContractViolationError(f"beta must be in [0, 1], got {self.beta}")
        if self.eps0 <= 0.0:
            raise ContractViolationError("eps0 must be positive")
        if self.constraint_mode not in CONSTRAINT_MODES:
            raise ContractViolationError(
                f"constraint mode {self.constraint_mode!r} not one of {CONSTRAINT_MODES}")

    def with_phi_global(self, value):
        return replace(self, phi_global=float(value))


def greedy_solve(lp, eps0=1e-14):
    """Sorted greedy solution of one LP instance (reference implementation).

    Starts from the upper bounds and zeroes coefficients in decreasing order,
    setting one fractional pivot; coefficients below ``eps0`` are never
    touched.  Ties break by original index, so the output is deterministic.
    """
    a = np.asarray(lp.a, dtype=float)
    U = np.asarray(lp.U, dtype=float)
    if np.any(U < -1e-14) or np.any(U > 1.0 + 1e-14):
        raise ContractViolationError("upper bounds must lie in [0, 1]")
    tol = B_CLAMP_REL * max(1.0, float(np.sum(np.abs(a) * U)))
    b = float(lp.b)
    if b < -tol:
        raise InfeasibleLPError(
            f"entropy LP infeasible: b = {b:.6e} below -{tol:.1e} "
            "(low-order entropy stability violated upstream)")
    b = max(b, 0.0)
    x = U.copy()
    s = float(a @ x)
    if s <= b:
        return x
    for i in np.argsort(-a, kind="stable"):
        if a[i] < eps0:
            break
        s -= a[i] * x[i]
        if s <= b:
            x[i] = (b - s) / a[i]
            break
        x[i] = 0.0
    return x


def smoothness_ramp(s, degree, kappa=1.0):
    """Map the modal indicator s through the sin ramp around s0 = log10(N^-4)."""
    s = np.asarray(s, dtype=float)
    s0 = math.log10(degree ** -4.0)
    mid = 0.5 * (1.0 + np.sin(0.5 * np.pi * (s - s0) / kappa))
    return np.where(s < s0 - kappa, 0.0, np.where(s > s0 + kappa, 1.0, mid))


def modal_smoothness(values, ops, kappa=1.0, backend=None):
    """Elementwise smoothness factor of a nodal component ``[K, ny, nx]``."""
    backend = backend or get_backend()
    values = np.asarray(values, dtype=float)
    squeeze = values.ndim == 2
    if squeeze:
        values = values[None]
    s = backend.modal_smoothness_s(values, ops.Vinv, ops.degree)
    eps = smoothness_ramp(s, ops.degree, kappa)
    return (float(eps[0]) if squeeze else eps)


_BLEND_SHARPNESS = math.log((1.0 - 0.0001) / 0.0001)


def blending_alpha(eps, degree):
    """Elementwise blending function, increasing from 1e-4 at eps = 0."""
    tau = 0.5 * 10.0 ** (-1.8 * (degree + 1.0) ** 0.25)
    z = -_BLEND_SHARPNESS / tau * (np.asarray(eps, dtype=float) - tau)
    return 1.0 / (1.0 + np.exp(np.clip(z, -700.0, 700.0)))


def assemble_entropy_lp(v, fbarH, fbarL, psi, w_t, scale, bound_scale=1.0,
                        backend=None):
    """Entropy LP for one axis of one or more elements (axis layout arrays).

    Returns one :class:`LPInstance` per element with all-ones upper bounds.
    """
    backend = backend or get_backend()
    bs = np.broadcast_to(np.asarray(bound_scale, dtype=float), (v.shape[0],))
    a, b, slack, mag = backend.assemble_entropy_lp(v, psi, fbarH, fbarL,
                                                   np.asarray(w_t, float), scale, bs)
    if not np.all(np.isfinite(a)) or not np.all(np.isfinite(b)):
        from .errors import NumericsError
        raise NumericsError(f"non-finite LP data in element {int(np.argmax(~np.isfinite(b)))}")
    return [LPInstance(a=a[e], b=float(b[e]), U=np.ones(a.shape[1])) for e in range(a.shape[0])]


# ---------------------------------------------------------------------------
# convex-constraint factors (reference entry points; axis-layout arrays)
# ---------------------------------------------------------------------------

def positivity_factors(u_low, fbarH, fbarL, dt, mass, relax, dim=1, backend=None):
    """Largest factors keeping substate density/internal energy above relax * low."""
    backend = backend or get_backend()
    dfa = fbarH[:, :, 1:-1, :] - fbarL[:, :, 1:-1, :]
    return backend.positivity_factors(u_low, dfa, dt, mass, 2.0 * dim, relax)


def tvd_density_factors(u_low, fbarH, fbarL, dt, mass, relax, rho_min, rho_max,
                        dim=1, backend=None):
    """Two-sided stencil density bounds plus the internal-energy condition."""
    backend = backend or get_backend()
    dfa = fbarH[:, :, 1:-1, :] - fbarL[:, :, 1:-1, :]
    return backend.tvd_factors(u_low, dfa, dt, mass, 2.0 * dim, relax, rho_min, rho_max)


def min_entropy_factors(u_low, fbarH, fbarL, dt, mass, phi_bound, gamma,
                        dim=1, backend=None):
    """Bisection factors enforcing phi(substates) >= nodal bounds."""
    backend = backend or get_backend()
    dfa = fbarH[:, :, 1:-1, :] - fbarL[:, :, 1:-1, :]
    return backend.min_entropy_factors(u_low, dfa, dt, mass, 2.0 * dim, phi_bound, gamma)


# ---------------------------------------------------------------------------
# full stage limiting (Alg. 3)
# ---------------------------------------------------------------------------

def _scalar_to_axis(values, axis, mesh):
    v5 = values.reshape(values.shape + (1,))
    return disc.to_axis_layout(v5, axis)[..., 0]


def _per_element_to_axis(values, axis, mesh):
    """Reorder a per-element [K] array into an axis pipeline's element order."""
    if axis == "x" or mesh.dim == 1:
        return values
    return np.ascontiguousarray(values.reshape(mesh.Ky, mesh.Kx).T).reshape(-1)


def _axis_mask_to_elements(mask, axis, mesh):
    if axis == "x" or mesh.dim == 1:
        return mask
    return np.ascontiguousarray(mask.reshape(mesh.Kx, mesh.Ky).T).reshape(-1)


@dataclass
class StageLimiting:
    """Limiting factors for one RK stage plus bookkeeping counters."""

    factors: dict                 # axis -> [E, L, n-1]
    smoothness: np.ndarray        # per-element eps (or None)
    limited_mask: np.ndarray      # per-element bool, any factor < 1
    min_factor: np.ndarray        # per-element min factor
    fallback_count: int = 0


def low_order_candidate(field, ops, pieces, dt, backend=None):
    """Forward-Euler low-order update u + dt M^-1 sum_k Delta_k fbar^L_k."""
    backend = backend or get_backend()
    mesh = field.mesh
    mdudt = np.zeros_like(field.u)
    for axis, p in pieces.items():
        zero = np.zeros(p.fbarL.shape[:2] + (p.fbarL.shape[2] - 2,))
        q = backend.blend_difference(p.fbarL, p.fbarL, zero)
        mdudt += disc.from_axis_layout(q, axis, mesh)
    m = mesh.mass_template(ops)
    return field.u + dt * mdudt / m[None, None, :, :, None]


def stage_factors(field, model, ops, cfg, dt, pieces, backend=None):
    """Compute the per-axis limiting factors of one stage (Alg. 3).

    ``pieces`` maps axis -> :class:`AxisPieces` with recovered fluxes and
    entropy data present.  Returns a :class:`StageLimiting`.
    """
    backend = backend or get_backend()
    mesh = field.mesh
    axes = disc.axes_of(mesh)
    nel = mesh.num_elements
    dim = mesh.dim

    if cfg.force_low:
        factors = {ax: np.zeros(pieces[ax].fbarL.shape[:2] + (pieces[ax].fbarL.shape[2] - 2,))
                   for ax in axes}
        return StageLimiting(factors=factors, smoothness=None,
                             limited_mask=np.ones(nel, bool),
                             min_factor=np.zeros(nel))

    need_eps = (cfg.beta > 0.0 or cfg.blending
                or cfg.constraint_mode == "minentropy_relaxed")
    eps = None
    if need_eps:
        comp = field.u[..., 0].reshape(nel, field.u.shape[2], field.u.shape[3])
        s = backend.modal_smoothness_s(np.ascontiguousarray(comp), ops.Vinv, ops.degree)
        eps = smoothness_ramp(s, ops.degree, cfg.kappa)

    fallback = 0
    bounds_by_axis = {}
    if cfg.constraint_mode != "none":
        if model.model_id != 0:
            raise ContractViolationError(
                f"constraint mode {cfg.constraint_mode!r} requires the Euler model")
        u_low = low_order_candidate(field, ops, pieces, dt, backend)
        adm = (u_low[..., 0] > 0.0) & (
            u_low[..., -1] - 0.5 * np.sum(u_low[..., 1:-1] ** 2, axis=-1)
            / u_low[..., 0] > 0.0)
        if not np.all(adm):
            idx = np.unravel_index(np.argmax(~adm), adm.shape)
            raise AdmissibilityError(
                f"low-order forward-Euler candidate inadmissible at element/node {idx}; "
                "the CFL condition was violated upstream", element=idx)
        if cfg.constraint_mode == "tvd":
            rho = np.ascontiguousarray(
                u_low[..., 0].reshape(nel, u_low.shape[2], u_low.shape[3]))
            mn, mx = backend.stencil_min_max(rho)
            shape5 = u_low.shape[:4]
            bounds_by_axis = {ax: (
                _scalar_to_axis(mn.reshape(shape5), ax, mesh),
                _scalar_to_axis(mx.reshape(shape5), ax, mesh)) for ax in axes}
        elif cfg.constraint_mode in ("minentropy", "minentropy_relaxed"):
            phi = backend.specific_entropy(field.u, model.gamma)
            mn, _ = backend.stencil_min_max(
                np.ascontiguousarray(phi.reshape(nel, phi.shape[2], phi.shape[3])))
            mn = mn.reshape(phi.shape)
            if cfg.constraint_mode == "minentropy_relaxed":
                phi_g = cfg.phi_global
                if not np.isfinite(phi_g):
                    phi_g = float(np.min(phi))
                e = eps.reshape(mesh.Ky, mesh.Kx)[:, :, None, None]
                mn = e * mn + (1.0 - e) * phi_g
            bounds_by_axis = {ax: _scalar_to_axis(mn, ax, mesh) for ax in axes}
        u_low_by_axis = {ax: disc.to_axis_layout(u_low, ax) for ax in axes}

    factors = {}
    masks = []
    mins = []
    for axis in axes:
        p = pieces[axis]
        E, L, np1, C = p.fbarH.shape
        n = np1 - 1
        if cfg.constraint_mode == "none":
            U = np.ones((E, L, n - 1))
        else:
            mass_t = disc.axis_mass(mesh, ops, axis)
            ul = u_low_by_axis[axis]
            if cfg.constraint_mode == "positivity":
                U = positivity_factors(ul, p.fbarH, p.fbarL, dt, mass_t,
                                       cfg.relax, dim, backend)
            elif cfg.constraint_mode == "tvd":
                mn, mx = bounds_by_axis[axis]
                U = tvd_density_factors(ul, p.fbarH, p.fbarL, dt, mass_t,
                                        cfg.relax, mn, mx, dim, backend)
            else:
                U, fb = min_entropy_factors(ul, p.fbarH, p.fbarL, dt, mass_t,
                                            bounds_by_axis[axis], model.gamma,
                                            dim, backend)
                fallback += fb
        if cfg.entropy_enabled:
            if eps is None:
                bscale = np.ones(E)
            else:
                bscale = 1.0 - cfg.beta * _per_element_to_axis(eps, axis, mesh)
            a, b, slack, mag = backend.assemble_entropy_lp(
                p.vT, p.psiT, p.fbarH, p.fbarL, p.w_t, p.scale, bscale)
            tol = B_CLAMP_REL * np.maximum(1.0, mag)
            bad = slack < -tol
            if np.any(bad):
                e = int(np.argmax(bad))
                raise InfeasibleLPError(
                    f"entropy LP infeasible in element {e} along {axis}: "
                    f"slack {slack[e]:.6e} < -{tol[e]:.1e}")
            b = np.maximum(b, 0.0)
            x = backend.greedy_batch(a, b, U.reshape(E, -1), cfg.eps0)
            lfac = x.reshape(E, L, n - 1)
        else:
            lfac = U
        if cfg.blending:
            alpha = blending_alpha(_per_element_to_axis(eps, axis, mesh), ops.degree)
            lfac = np.minimum(lfac, (1.0 - alpha)[:, None, None])
        factors[axis] = lfac
        flat = lfac.reshape(E, -1)
        if flat.shape[1]:
            masks.append(_axis_mask_to_elements(
                np.any(flat < 1.0 - 1e-12, axis=1), axis, mesh))
            mins.append(_axis_mask_to_elements(np.min(flat, axis=1), axis, mesh))
        else:
            masks.append(np.zeros(E, bool))
            mins.append(np.ones(E))

    limited = np.logical_or.reduce(masks)
    min_factor = np.minimum.reduce(mins)
    return StageLimiting(factors=factors, smoothness=eps, limited_mask=limited,
                         min_factor=min_factor, fallback_count=fallback)


def compute_limiting_factors(field, model, ops, cfg, dt, backend=None):
    """Build the stage pieces and run Alg. 3 on the current state."""
    backend = backend or get_backend()
    tables = disc.compute_face_fluxes(field, model, ops, backend)
    pieces = {ax: disc.compute_axis_pieces(field, model, ops, tables, ax, backend)
              for ax in disc.axes_of(field.mesh)}
    return stage_factors(field, model, ops, cfg, dt, pieces, backend), pieces, tables
