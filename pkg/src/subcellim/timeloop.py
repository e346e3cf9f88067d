"""SSPRK(3,3) time integration with the invariant-domain CFL condition."""

from dataclasses import dataclass, field as dc_field

import numpy as np

from . import discretization as disc
from . import limiter as lim
from ._kernels import get_backend
from .errors import AdmissibilityError, NumericsError

_AXIS_ID = {"x": 0, "y": 1}


def nodal_wavespeed_aggregate(field, model, ops, backend=None):
    """lambda_i = sum_j Lambda_ij over the low-order stencil plus face terms."""
    backend = backend or get_backend()
    mesh = field.mesh
    lam = np.zeros(field.u.shape[:-1])
    for axis in disc.axes_of(mesh):
        uT = disc.to_axis_layout(field.u, axis)
        w_t, scale = disc.axis_weights(mesh, ops, axis)
        uL, uR = disc.face_states(field, ops, axis)
        Kperp, Kp1, L, C = uL.shape
        Kax = Kp1 - 1
        extW = np.ascontiguousarray(uL[:, :Kax]).reshape(Kperp * Kax, L, C)
        extE = np.ascontiguousarray(uR[:, 1:]).reshape(Kperp * Kax, L, C)
        lamT = backend.cfl_lambda(uT, extW, extE, w_t, scale,
                                  _AXIS_ID[axis], model.model_id, model.gamma)
        lam += disc.from_axis_layout(lamT[..., None], axis, mesh)[..., 0]
    return lam


def cfl_dt(field, model, ops, safety=1.0, backend=None):
    """Timestep Delta t = 1/2 min_i m_i / (2 lambda_i), times a safety factor."""
    lam = nodal_wavespeed_aggregate(field, model, ops, backend)
    if not np.all(np.isfinite(lam)):
        raise NumericsError("non-finite wavespeed aggregate in CFL estimate")
    m = field.mesh.mass_template(ops)[None, None, :, :]
    with np.errstate(divide="ignore"):
        dt = 0.5 * np.min(np.where(lam > 0.0, m / (2.0 * lam), np.inf))
    if not np.isfinite(dt):
        raise NumericsError("CFL timestep is unbounded (zero wavespeeds everywhere)")
    return safety * float(dt)


def ssprk33_step(u, dt, rhs):
    """One optimal third-order SSP Runge-Kutta step of du/dt = rhs(u).

    u1 = u + dt L(u); u2 = 3/4 u + 1/4 (u1 + dt L(u1));
    u3 = 1/3 u + 2/3 (u2 + dt L(u2)).
    """
    u1 = u + dt * rhs(u)
    u2 = 0.75 * u + 0.25 * (u1 + dt * rhs(u1))
    return u / 3.0 + 2.0 / 3.0 * (u2 + dt * rhs(u2))


@dataclass
class StageDiag:
    """Per-stage limiter bookkeeping aggregated into step diagnostics."""

    max_entropy_residual: float = -np.inf
    limited_mask: np.ndarray = None
    fallback_count: int = 0


def compute_rhs(field, model, ops, cfg, dt, backend=None, diag=None):
    """Limited semi-discrete rate du/dt for one RK stage (Alg. 3 applied).

    ``diag`` (a :class:`StageDiag`) accumulates the post-limit cell entropy
    residual and the set of limited elements.
    """
    backend = backend or get_backend()
    mesh = field.mesh
    pure_high = (not cfg.entropy_enabled and cfg.constraint_mode == "none"
                 and not cfg.blending and not cfg.force_low)
    tables = disc.compute_face_fluxes(field, model, ops, backend)
    pieces = {}
    for axis in disc.axes_of(mesh):
        pieces[axis] = disc.compute_axis_pieces(
            field, model, ops, tables, axis, backend,
            need_high=True, need_low=not pure_high, need_entropy=True)
    if pure_high:
        limited = None
        factors = None
    else:
        limited = lim.stage_factors(field, model, ops, cfg, dt, pieces, backend)
        factors = limited.factors
    mdudt = np.zeros_like(field.u)
    for axis, p in pieces.items():
        if pure_high:
            fbar = p.fbarH
        else:
            fbar = p.fbarL.copy()
            fbar[:, :, 1:-1, :] += factors[axis][..., None] * (
                p.fbarH[:, :, 1:-1, :] - p.fbarL[:, :, 1:-1, :])
        q = fbar[:, :, 1:, :] - fbar[:, :, :-1, :]
        mdudt += disc.from_axis_layout(q, axis, mesh)
        if diag is not None:
            res = backend.entropy_residual(p.vT, fbar, p.psiT, p.w_t, p.scale)
            diag.max_entropy_residual = max(diag.max_entropy_residual,
                                            float(np.max(res)))
    if diag is not None and limited is not None:
        if diag.limited_mask is None:
            diag.limited_mask = limited.limited_mask.copy()
        else:
            diag.limited_mask |= limited.limited_mask
        diag.fallback_count += limited.fallback_count
    m = mesh.mass_template(ops)
    return mdudt / m[None, None, :, :, None]


def check_admissible(field, model, stage=None):
    ok = model.is_admissible(field.u)
    if not np.all(ok):
        idx = np.unravel_index(np.argmax(~ok), ok.shape)
        raise AdmissibilityError(
            f"inadmissible state at element ({idx[0]}, {idx[1]}), node ({idx[2]}, {idx[3]})"
            + (f" in RK stage {stage}" if stage is not None else ""),
            element=idx[:2], node=idx[2:], stage=stage)


@dataclass
class DiagnosticsRecord:
    """Per-step scalars recorded by :func:`advance`."""

    t: float
    dt: float
    totals: np.ndarray
    total_entropy: float
    max_entropy_residual: float
    min_density: float
    min_pressure: float
    limited_elements: int


@dataclass
class RunState:
    """Mutable integration state threaded through :func:`advance`."""

    t: float
    step: int
    field: object
    dt: float = 0.0
    diagnostics: list = dc_field(default_factory=list)
    snapshots: list = dc_field(default_factory=list)
    lp_fallbacks: int = 0


def _record(state, model, ops, dt, diag):
    field = state.field
    m = field.mesh.mass_template(ops)[None, None, :, :, None]
    totals = np.sum(m * field.u, axis=(0, 1, 2, 3))
    eta = model.entropy(field.u)
    total_entropy = float(np.sum(m[..., 0] * eta))
    if model.model_id == 0:
        min_rho = float(np.min(field.u[..., 0]))
        min_p = float(np.min(model.pressure(field.u)))
    else:
        min_rho = float(np.min(field.u[..., 0]))
        min_p = min_rho
    limited = int(np.sum(diag.limited_mask)) if diag.limited_mask is not None else 0
    state.diagnostics.append(DiagnosticsRecord(
        t=state.t, dt=dt, totals=totals, total_entropy=total_entropy,
        max_entropy_residual=diag.max_entropy_residual,
        min_density=min_rho, min_pressure=min_p, limited_elements=limited))


def advance(field, model, ops, cfg, t_final, cfl_safety=1.0, snapshot_times=(),
            backend=None, max_steps=10_000_000):
    """Integrate to ``t_final`` with SSPRK(3,3), limiting every stage.

    The CFL timestep is evaluated on each step's first-stage state and reused
    for all three stages; the last step is truncated to land exactly on
    ``t_final`` (and on every requested snapshot time).  Returns a
    :class:`RunState` with the final field, per-step diagnostics and
    ``(time, field)`` snapshots.

    On failure the exception carries ``last_state`` (the last accepted field)
    for post-mortem output.
    """
    backend = backend or get_backend()
    state = RunState(t=0.0, step=0, field=field.copy())
    if cfg.constraint_mode == "minentropy_relaxed" and not np.isfinite(cfg.phi_global):
        from ._kernels import numpy_backend
        cfg = cfg.with_phi_global(float(np.min(
            numpy_backend.specific_entropy(field.u, model.gamma))))
    snaps = sorted(t for t in snapshot_times if 0.0 < t <= t_final)
    check_admissible(state.field, model, stage=0)
    if t_final <= 0.0:
        return state
    tiny = 1e-12 * max(1.0, t_final)
    try:
        while state.t < t_final - tiny:
            if state.step >= max_steps:
                raise NumericsError(f"exceeded {max_steps} steps before reaching t={t_final}")
            dt = cfl_dt(state.field, model, ops, cfl_safety, backend)
            dt = min(dt, t_final - state.t)
            for ts in snaps:
                if state.t < ts - tiny:
                    dt = min(dt, ts - state.t)
                    break
            diag = StageDiag()

            def rhs(u, _d=diag):
                f = state.field.__class__(mesh=state.field.mesh, u=u)
                return compute_rhs(f, model, ops, cfg, dt, backend, diag=_d)

            u = state.field.u
            u1 = u + dt * rhs(u)
            check_admissible(state.field.__class__(mesh=field.mesh, u=u1), model, stage=1)
            u2 = 0.75 * u + 0.25 * (u1 + dt * rhs(u1))
            check_admissible(state.field.__class__(mesh=field.mesh, u=u2), model, stage=2)
            u3 = u / 3.0 + 2.0 / 3.0 * (u2 + dt * rhs(u2))
            state.field = state.field.__class__(mesh=field.mesh, u=u3)
            check_admissible(state.field, model, stage=3)
            state.t += dt
            state.step += 1
            state.dt = dt
            state.lp_fallbacks += diag.fallback_count
            _record(state, model, ops, dt, diag)
            for ts in snaps:
                if abs(state.t - ts) <= tiny:
                    state.snapshots.append((state.t, state.field.copy()))
        state.t = t_final
    except Exception as exc:
        exc.last_state = state
        raise
    return state
