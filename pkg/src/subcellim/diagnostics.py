"""Error norms, entropy residuals and convergence tables."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import discretization as disc
from . import mesh as msh
from . import operators as op_mod
from . import timeloop
from ._kernels import get_backend


def conserved_totals(field, ops):
    """Quadrature of every conservative component over the domain."""
    m = field.mesh.mass_template(ops)[None, None, :, :, None]
    return np.sum(m * field.u, axis=(0, 1, 2, 3))


def l2_error(field, ops, exact, t):
    """Sum of relative mass-weighted L2 errors over the components.

    ``exact(X, Y, t)`` is evaluated at the LGL nodes (no over-integration).
    Components whose exact norm vanishes are skipped with a warning.
    """
    X, Y = field.mesh.node_coords(ops)
    ue = np.asarray(exact(X, Y, t), dtype=float)
    m = field.mesh.mass_template(ops)[None, None, :, :]
    total = 0.0
    for c in range(field.ncomp):
        denom = np.sqrt(np.sum(m * ue[..., c] ** 2))
        if denom == 0.0:
            warnings.warn(f"component {c} has zero exact norm; skipped in l2_error")
            continue
        num = np.sqrt(np.sum(m * (field.u[..., c] - ue[..., c]) ** 2))
        total += num / denom
    return float(total)


def entropy_residuals(field, model, ops, factors=None, backend=None):
    """Cell entropy residual v^T Delta^vol fbar - 1^T B psi per element/axis.

    ``factors`` maps axis -> limiting factors; omitted axes (or ``None``)
    evaluate the unlimited DGSEM fluxes.  Negative values mean the cell
    entropy inequality holds.
    """
    backend = backend or get_backend()
    tables = disc.compute_face_fluxes(field, model, ops, backend)
    out = {}
    for axis in disc.axes_of(field.mesh):
        p = disc.compute_axis_pieces(field, model, ops, tables, axis, backend)
        lfac = None if factors is None else factors.get(axis)
        if lfac is None:
            fbar = p.fbarH
        else:
            fbar = p.fbarL.copy()
            fbar[:, :, 1:-1, :] += lfac[..., None] * (p.fbarH[:, :, 1:-1, :]
                                                      - p.fbarL[:, :, 1:-1, :])
        out[axis] = backend.entropy_residual(p.vT, fbar, p.psiT, p.w_t, p.scale)
    return out


@dataclass
class ConvergenceRow:
    degree: int
    k: int
    error: float
    rate: float


def convergence_table(problem, n_values, k_values, limiter_cfg, cfl_safety=1.0,
                      t_final=None, backend=None):
    """Run the (N, K) matrix of a problem with a known exact solution.

    ``k_values`` count elements across the shorter domain extent; the other
    direction scales by the domain aspect ratio so elements stay square.
    Rates are log2(e_K / e_2K) between consecutive rows.
    """
    if problem.exact is None:
        from .errors import ConfigurationError
        raise ConfigurationError(f"problem {problem.name!r} has no exact solution")
    (x0, x1), (y0, y1) = problem.domain
    t_end = problem.default_final_time if t_final is None else t_final
    rows = []
    for N in n_values:
        ops = op_mod.build_operator_set(N)
        prev = None
        for K in k_values:
            if problem.dim == 1:
                mesh = problem.build_mesh(K)
            else:
                aspect = (x1 - x0) / (y1 - y0)
                kx = int(round(K * aspect))
                mesh = problem.build_mesh(kx, K)
            model = problem.model()
            field = msh.field_from_initial(mesh, ops, problem.ncomp, problem.initial)
            state = timeloop.advance(field, model, ops, limiter_cfg, t_end,
                                     cfl_safety=cfl_safety, backend=backend)
            err = l2_error(state.field, ops, problem.exact, t_end)
            rate = float("nan") if prev is None else float(np.log2(prev / err))
            rows.append(ConvergenceRow(degree=N, k=K, error=err, rate=rate))
            prev = err
    return rows
