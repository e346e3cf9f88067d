"""High/low-order residuals, face fluxes and algebraic subcell flux recovery.

The per-axis computations run in the axis-processing layout ``[E, L, n, C]``
(see :mod:`subcellim._kernels`).  The x direction reshapes the field without
copying; the y direction works on a transposed copy so both directions share
the same kernels.
"""

from dataclasses import dataclass

import numpy as np

from . import models
from ._kernels import get_backend
from .errors import InternalConsistencyError

RECOVERY_TOL = 1e-10

_AXIS_ID = {"x": 0, "y": 1}


def axes_of(mesh):
    return ("x",) if mesh.dim == 1 else ("x", "y")


# ---------------------------------------------------------------------------
# layout helpers
# ---------------------------------------------------------------------------

def to_axis_layout(u, axis):
    """View/copy ``u[Ky,Kx,ny,nx,C]`` as ``[E, L, n, C]`` for one axis."""
    Ky, Kx, ny, nx, C = u.shape
    if axis == "x":
        return u.reshape(Ky * Kx, ny, nx, C)
    return np.ascontiguousarray(u.transpose(1, 0, 3, 2, 4)).reshape(Kx * Ky, nx, ny, C)


def from_axis_layout(q, axis, mesh):
    """Inverse of :func:`to_axis_layout` for nodal result arrays."""
    Ky, Kx = mesh.Ky, mesh.Kx
    if axis == "x":
        E, L, n, C = q.shape
        return q.reshape(Ky, Kx, L, n, C)
    E, L, n, C = q.shape
    return np.ascontiguousarray(
        q.reshape(Kx, Ky, L, n, C).transpose(1, 0, 3, 2, 4))


def axis_weights(mesh, ops, axis):
    """(transverse weights, transverse metric scale) for one axis."""
    if mesh.dim == 1:
        return np.ones(1), 1.0
    return ops.rule.weights, mesh.axis_scale(axis)


def axis_mass(mesh, ops, axis):
    """Mass template in the axis layout, shape [L, n]."""
    m = mesh.mass_template(ops)
    return m if axis == "x" else np.ascontiguousarray(m.T)


# ---------------------------------------------------------------------------
# face fluxes
# ---------------------------------------------------------------------------

def _face_line_coords(mesh, ops, axis):
    """Node coordinates of the transverse lines at element faces.

    For axis x: (y values [K_perp, L],) used at x = const faces; analogous
    for y.  1D meshes have a single degenerate line.
    """
    if mesh.dim == 1:
        return np.zeros((1, 1))
    r = ops.rule.nodes
    if axis == "x":
        base = mesh.y0 + mesh.hy * np.arange(mesh.Ky)
        return base[:, None] + 0.5 * mesh.hy * (r[None, :] + 1.0)
    base = mesh.x0 + mesh.hx * np.arange(mesh.Kx)
    return base[:, None] + 0.5 * mesh.hx * (r[None, :] + 1.0)


def face_states(field, ops, axis):
    """Left/right states at every face along one axis, boundaries included.

    Returns ``(uL, uR)`` shaped ``[Kperp, Kax+1, L, C]`` where face ``f``
    separates elements ``f-1`` and ``f`` along the axis; periodic sides wrap
    and the two wrap faces carry identical state pairs.
    """
    mesh = field.mesh
    u = field.u
    Ky, Kx, ny, nx, C = u.shape
    if axis == "x":
        lo_side, hi_side = "west", "east"
        first = u[:, :, :, 0, :].reshape(Ky, Kx, ny, C)
        last = u[:, :, :, -1, :].reshape(Ky, Kx, ny, C)
        Kax, L = Kx, ny
        lo_coord, hi_coord = mesh.x0, mesh.x1
    else:
        lo_side, hi_side = "south", "north"
        first = np.ascontiguousarray(u[:, :, 0, :, :].transpose(1, 0, 2, 3))
        last = np.ascontiguousarray(u[:, :, -1, :, :].transpose(1, 0, 2, 3))
        Kax, L = Ky, nx
        lo_coord, hi_coord = mesh.y0, mesh.y1
    Kperp = first.shape[0]
    uL = np.empty((Kperp, Kax + 1, L, C))
    uR = np.empty((Kperp, Kax + 1, L, C))
    uL[:, 1:] = last
    uR[:, :Kax] = first
    bc_lo = mesh.bcs[lo_side]
    bc_hi = mesh.bcs[hi_side]
    line = _face_line_coords(mesh, ops, axis)          # [Kperp, L]
    if bc_lo.kind == "periodic":
        uL[:, 0] = last[:, -1]
        uR[:, Kax] = first[:, 0]
    else:
        cst_lo = np.full_like(line, lo_coord)
        cst_hi = np.full_like(line, hi_coord)
        if axis == "x":
            uL[:, 0] = bc_lo.exterior(cst_lo, line, uR[:, 0])
            uR[:, Kax] = bc_hi.exterior(cst_hi, line, uL[:, Kax])
        else:
            uL[:, 0] = bc_lo.exterior(line, cst_lo, uR[:, 0])
            uR[:, Kax] = bc_hi.exterior(line, cst_hi, uL[:, Kax])
    return uL, uR


def compute_face_fluxes(field, model, ops, backend=None):
    """Single-valued LLF fluxes at every face, oriented along +x / +y.

    Returns a dict ``axis -> table`` with shapes ``[Ky, Kx+1, ny, C]`` for x
    and ``[Kx, Ky+1, nx, C]`` for y (the y table lives in the transposed
    element ordering used by the y-axis pipeline).
    """
    backend = backend or get_backend()
    tables = {}
    for axis in axes_of(field.mesh):
        uL, uR = face_states(field, ops, axis)
        Kperp, Kp1, L, C = uL.shape
        fstar, _ = backend.llf_line(
            uL.reshape(-1, L, C), uR.reshape(-1, L, C),
            _AXIS_ID[axis], model.model_id, model.gamma)
        tables[axis] = fstar.reshape(Kperp, Kp1, L, C)
    return tables


def face_fstar_pair(tables, axis):
    """Per-element west/east (south/north) face fluxes in axis layout."""
    t = tables[axis]
    Kperp, Kp1, L, C = t.shape
    Kax = Kp1 - 1
    fsW = np.ascontiguousarray(t[:, :Kax]).reshape(Kperp * Kax, L, C)
    fsE = np.ascontiguousarray(t[:, 1:]).reshape(Kperp * Kax, L, C)
    return fsW, fsE


# ---------------------------------------------------------------------------
# per-axis residual pieces
# ---------------------------------------------------------------------------

@dataclass
class AxisPieces:
    """Everything one axis contributes to a stage, in axis layout."""

    axis: str
    uT: np.ndarray
    fsW: np.ndarray
    fsE: np.ndarray
    w_t: np.ndarray
    scale: float
    rvolH: np.ndarray = None
    rvolL: np.ndarray = None
    fbarH: np.ndarray = None
    fbarL: np.ndarray = None
    vT: np.ndarray = None
    psiT: np.ndarray = None


def compute_axis_pieces(field, model, ops, tables, axis, backend=None,
                        need_high=True, need_low=True, need_entropy=True,
                        v5=None):
    """Volume residuals, recovered subcell fluxes and entropy data for one axis.

    ``v5`` optionally supplies precomputed entropy variables on the untransposed
    field (they are axis-independent and shared between directions).
    """
    backend = backend or get_backend()
    aid = _AXIS_ID[axis]
    uT = to_axis_layout(field.u, axis)
    w_t, scale = axis_weights(field.mesh, ops, axis)
    fsW, fsE = face_fstar_pair(tables, axis)
    pieces = AxisPieces(axis=axis, uT=uT, fsW=fsW, fsE=fsE, w_t=w_t, scale=scale)
    fT = backend.nodal_flux(uT, aid, model.model_id, model.gamma)
    if need_high:
        pieces.rvolH = backend.high_order_volume(fT, ops.Q1d, w_t, scale)
        pieces.fbarH, defect = backend.recover_fluxes(pieces.rvolH, fsW, fsE, w_t, scale)
        if defect > RECOVERY_TOL:
            raise InternalConsistencyError(
                f"high-order subcell recovery defect {defect:.3e} along {axis}")
    if need_low:
        pieces.rvolL = backend.low_order_volume(uT, fT, w_t, scale, aid,
                                                model.model_id, model.gamma)
        pieces.fbarL, defect = backend.recover_fluxes(pieces.rvolL, fsW, fsE, w_t, scale)
        if defect > RECOVERY_TOL:
            raise InternalConsistencyError(
                f"low-order subcell recovery defect {defect:.3e} along {axis}")
    if need_entropy:
        if v5 is not None:
            pieces.vT = to_axis_layout(v5, axis)
        else:
            pieces.vT = backend.entropy_vars(uT, model.model_id, model.gamma)
        pieces.psiT = backend.entropy_potential(uT, aid, model.model_id, model.gamma)
    return pieces


def recover_subcell_fluxes(rvol_line, fbar_first, fbar_last, tol=RECOVERY_TOL):
    """Single-line recovery of algebraic subcell fluxes.

    ``rvol_line`` holds the N+1 volume-part residual entries of one node
    line; ``fbar_first``/``fbar_last`` are the mass-weighted interface values
    (i.e. minus the weighted numerical fluxes).  Interior values are partial
    sums of the volume rows (the volume difference operator's first column is
    zero); the rows must sum to zero for the overdetermined recovery to be
    consistent, which is equivalent to the endpoint condition on the full
    residual's cumulative sums.
    """
    r = np.asarray(rvol_line, dtype=float)
    n = r.shape[0]
    fbar = np.empty((n + 1,) + r.shape[1:])
    fbar[0] = fbar_first
    fbar[1:n] = np.cumsum(r[: n - 1], axis=0)
    fbar[n] = fbar_last
    defect = float(np.max(np.abs(np.sum(r, axis=0))))
    if defect > tol * max(1.0, float(np.sum(np.abs(r)))):
        raise InternalConsistencyError(
            f"subcell recovery inconsistent: line conservation defect {defect:.3e}")
    return fbar


# ---------------------------------------------------------------------------
# assembled residuals
# ---------------------------------------------------------------------------

@dataclass
class Residual:
    """Mass-weighted rate M du/dt together with the face-flux tables."""

    mdudt: np.ndarray          # [Ky, Kx, ny, nx, C]
    face_tables: dict          # axis -> single-valued +axis-oriented fluxes

    def outward_face_flux(self, side, ky, kx):
        """Face flux seen by element (ky, kx) oriented along its outward normal."""
        if side in ("west", "east"):
            t = self.face_tables["x"]
            val = t[ky, kx] if side == "west" else t[ky, kx + 1]
            return val if side == "east" else -val
        t = self.face_tables["y"]
        val = t[kx, ky] if side == "south" else t[kx, ky + 1]
        return val if side == "north" else -val


def _full_from_vol(rvol, fsW, fsE, w_t, scale):
    """Add the surface rows to a per-axis volume residual."""
    out = rvol.copy()
    wgt = scale * w_t[None, :, None]
    out[:, :, 0, :] += wgt * fsW
    out[:, :, -1, :] -= wgt * fsE
    return out


def _assemble(field, model, ops, order, backend):
    backend = backend or get_backend()
    tables = compute_face_fluxes(field, model, ops, backend)
    mdudt = np.zeros_like(field.u)
    for axis in axes_of(field.mesh):
        p = compute_axis_pieces(field, model, ops, tables, axis, backend,
                                need_high=(order == "high"),
                                need_low=(order == "low"), need_entropy=False)
        rvol = p.rvolH if order == "high" else p.rvolL
        q = _full_from_vol(rvol, p.fsW, p.fsE, p.w_t, p.scale)
        mdudt += from_axis_layout(q, axis, field.mesh)
    return Residual(mdudt=mdudt, face_tables=tables)


def dgsem_residual(field, model, ops, backend=None):
    """DGSEM residual M du/dt = -sum_k [Q_k f_k + E^T B_k (f* - f(u_f))]."""
    return _assemble(field, model, ops, "high", backend)


def low_order_residual(field, model, ops, backend=None):
    """Graph-viscosity low-order residual (sparse operators, LLF subcell fluxes)."""
    return _assemble(field, model, ops, "low", backend)


def limited_residual(field, model, ops, factors, backend=None, tables=None,
                     pieces=None):
    """Residual of the subcell-limited scheme for given limiting factors.

    ``factors`` maps axis -> ``[E, L, n-1]`` arrays in [0, 1].  With factors
    identically one (zero) this reproduces the DGSEM (low-order) residual.
    """
    backend = backend or get_backend()
    for arrs in factors.values():
        if np.any(arrs < -1e-14) or np.any(arrs > 1.0 + 1e-14):
            from .errors import ContractViolationError
            raise ContractViolationError("limiting factors must lie in [0, 1]")
    if tables is None:
        tables = compute_face_fluxes(field, model, ops, backend)
    mdudt = np.zeros_like(field.u)
    for axis in axes_of(field.mesh):
        p = (pieces or {}).get(axis) or compute_axis_pieces(
            field, model, ops, tables, axis, backend, need_entropy=False)
        q = backend.blend_difference(p.fbarH, p.fbarL, np.clip(factors[axis], 0.0, 1.0))
        mdudt += from_axis_layout(q, axis, field.mesh)
    return Residual(mdudt=mdudt, face_tables=tables)
