"""Uniform Cartesian element meshes with periodic/inflow/outflow boundaries.

Fields are stored as ``u[Ky, Kx, ny, nx, Nc]`` with node ordering ``[y, x]``
inside each element.  One-dimensional problems use ``Ky = ny = 1``; the
y direction then carries no terms at all.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError

SIDES = ("west", "east", "south", "north")


@dataclass(frozen=True)
class BoundaryCondition:
    """One side's boundary treatment.

    ``periodic`` wraps the topology; ``outflow`` copies the interior trace;
    ``inflow`` evaluates ``state`` at the face nodes.  ``state`` may return
    per-node exterior values given ``(x, y, interior_trace)`` so that a side
    can mix prescribed and copied states (e.g. a jet inflow strip).
    """

    kind: str                      # 'periodic' | 'outflow' | 'inflow'
    state: object = None           # callable(x, y, interior) -> exterior

    def exterior(self, x, y, interior):
        if self.kind == "outflow":
            return interior
        if self.kind == "inflow":
            return self.state(x, y, interior)
        raise ContractViolationError("periodic sides have no exterior state")


def periodic():
    return BoundaryCondition(kind="periodic")


def outflow():
    return BoundaryCondition(kind="outflow")


def inflow(state):
    return BoundaryCondition(kind="inflow", state=state)


@dataclass(frozen=True)
class Mesh:
    """Uniform Cartesian mesh of ``Kx x Ky`` elements on a rectangle."""

    dim: int
    Kx: int
    Ky: int
    x0: float
    x1: float
    y0: float
    y1: float
    bcs: dict = field(default_factory=dict)   # side name -> BoundaryCondition

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ContractViolationError(f"mesh dim must be 1 or 2, got {self.dim}")
        if self.Kx < 1 or self.Ky < 1:
            raise ContractViolationError("element counts must be positive")
        sides = SIDES if self.dim == 2 else SIDES[:2]
        for side in sides:
            if side not in self.bcs:
                raise ContractViolationError(f"missing boundary condition for side {side!r}")
        for a, b in (("west", "east"), ("south", "north")):
            if a in self.bcs and (self.bcs[a].kind == "periodic") != (
                    self.bcs.get(b, self.bcs[a]).kind == "periodic"):
                raise ContractViolationError(f"periodic sides {a}/{b} must pair")

    @property
    def hx(self):
        return (self.x1 - self.x0) / self.Kx

    @property
    def hy(self):
        return (self.y1 - self.y0) / self.Ky if self.dim == 2 else float("nan")

    @property
    def num_elements(self):
        return self.Kx * self.Ky

    def jacobian(self):
        """Volume scaling of the reference mass matrix."""
        return 0.5 * self.hx if self.dim == 1 else 0.25 * self.hx * self.hy

    def axis_scale(self, axis):
        """Transverse metric factor carried by all terms of one direction."""
        if self.dim == 1:
            return 1.0
        return 0.5 * self.hy if axis == "x" else 0.5 * self.hx

    def node_coords(self, ops):
        """Physical node coordinates, each shaped ``[Ky, Kx, ny, nx]``."""
        r = ops.rule.nodes
        ex = self.x0 + self.hx * np.arange(self.Kx)
        x1d = ex[:, None] + 0.5 * self.hx * (r[None, :] + 1.0)     # [Kx, nx]
        if self.dim == 1:
            X = x1d[None, :, None, :]
            return np.broadcast_to(X, (1, self.Kx, 1, ops.n)).copy(), np.zeros((1, self.Kx, 1, ops.n))
        ey = self.y0 + self.hy * np.arange(self.Ky)
        y1d = ey[:, None] + 0.5 * self.hy * (r[None, :] + 1.0)     # [Ky, ny]
        X = np.broadcast_to(x1d[None, :, None, :], (self.Ky, self.Kx, ops.n, ops.n)).copy()
        Y = np.broadcast_to(y1d[:, None, :, None], (self.Ky, self.Kx, ops.n, ops.n)).copy()
        return X, Y

    def mass_template(self, ops):
        """Lumped nodal mass ``m[j, i]`` shared by every element."""
        w = ops.rule.weights
        if self.dim == 1:
            return self.jacobian() * w[None, :]
        return self.jacobian() * w[:, None] * w[None, :]


def interval_mesh(Kx, x0, x1, bc_west, bc_east):
    return Mesh(dim=1, Kx=Kx, Ky=1, x0=x0, x1=x1, y0=0.0, y1=0.0,
                bcs={"west": bc_west, "east": bc_east})


def rectangle_mesh(Kx, Ky, x0, x1, y0, y1, bcs):
    return Mesh(dim=2, Kx=Kx, Ky=Ky, x0=x0, x1=x1, y0=y0, y1=y1, bcs=dict(bcs))


@dataclass
class ElementField:
    """Conservative nodal values on every element of a mesh."""

    mesh: Mesh
    u: np.ndarray        # [Ky, Kx, ny, nx, Nc]

    @property
    def ncomp(self):
        return self.u.shape[-1]

    @property
    def n(self):
        return self.u.shape[3]

    def copy(self):
        return ElementField(mesh=self.mesh, u=self.u.copy())


def field_from_initial(mesh, ops, ncomp, initial):
    """Sample ``initial(x, y) -> state`` at every node."""
    X, Y = mesh.node_coords(ops)
    u = np.asarray(initial(X, Y), dtype=float)
    if u.shape != X.shape + (ncomp,):
        raise ContractViolationError(
            f"initial condition returned shape {u.shape}, expected {X.shape + (ncomp,)}")
    return ElementField(mesh=mesh, u=np.ascontiguousarray(u))
