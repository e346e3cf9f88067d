"""Benchmark problem setups: initial conditions, boundaries, exact solutions."""

import math
from dataclasses import dataclass

import numpy as np

from . import mesh as msh
from . import models
from .errors import ConfigurationError

PROBLEM_NAMES = ("sod", "kpp", "vortex", "kelvin_helmholtz", "astro_jet")


@dataclass(frozen=True)
class ProblemSetup:
    """Everything needed to instantiate one benchmark run."""

    name: str
    dim: int
    domain: tuple                 # ((x0, x1), (y0, y1))
    gamma: float
    default_final_time: float
    initial: object               # callable(X, Y) -> conservative states
    boundary: dict                # side -> BoundaryCondition
    exact: object = None          # callable(X, Y, t) -> conservative states
    plot_range: tuple = None      # metadata only

    @property
    def ncomp(self):
        return 1 if self.name == "kpp" else self.dim + 2

    def model(self, gamma=None):
        if self.name == "kpp":
            return models.kpp_model()
        return models.euler_model(self.dim, self.gamma if gamma is None else gamma)

    def build_mesh(self, Kx, Ky=None):
        (x0, x1), (y0, y1) = self.domain
        if self.dim == 1:
            return msh.interval_mesh(Kx, x0, x1, self.boundary["west"], self.boundary["east"])
        return msh.rectangle_mesh(Kx, Ky if Ky is not None else Kx,
                                  x0, x1, y0, y1, self.boundary)


# ---------------------------------------------------------------------------
# modified Sod shock tube (1D), with the exact Riemann solution as oracle
# ---------------------------------------------------------------------------

SOD_LEFT = (1.0, 0.75, 1.0)       # rho, u, p
SOD_RIGHT = (0.125, 0.0, 0.1)
SOD_JUMP = 0.3


def _sod_initial(gamma):
    def initial(X, Y):
        prim = np.empty(X.shape + (3,))
        left = X < SOD_JUMP
        for arr, vals in ((left, SOD_LEFT), (~left, SOD_RIGHT)):
            prim[arr] = vals
        return models.euler_conservative(prim, gamma)
    return initial


def exact_riemann(left, right, gamma):
    """Exact solver for the 1D Euler Riemann problem (Newton on p*).

    ``left``/``right`` are (rho, u, p) primitive triples.  Returns a callable
    ``xi -> (rho, u, p)`` of the similarity variable xi = x / t.
    """
    rl, ul, pl = left
    rr, ur, pr = right
    g = gamma
    cl = math.sqrt(g * pl / rl)
    cr = math.sqrt(g * pr / rr)

    def f_side(p, rho, pk, ck):
        if p > pk:          # shock
            A = 2.0 / ((g + 1.0) * rho)
            B = (g - 1.0) / (g + 1.0) * pk
            val = (p - pk) * math.sqrt(A / (p + B))
            der = math.sqrt(A / (B + p)) * (1.0 - 0.5 * (p - pk) / (B + p))
        else:               # rarefaction
            val = 2.0 * ck / (g - 1.0) * ((p / pk) ** ((g - 1.0) / (2.0 * g)) - 1.0)
            der = 1.0 / (rho * ck) * (p / pk) ** (-(g + 1.0) / (2.0 * g))
        return val, der

    p = max(1e-8, 0.5 * (pl + pr))
    for _ in range(100):
        fl, dl = f_side(p, rl, pl, cl)
        fr, dr = f_side(p, rr, pr, cr)
        dp = (fl + fr + (ur - ul)) / (dl + dr)
        p_new = max(1e-12, p - dp)
        if abs(p_new - p) < 1e-14 * max(1.0, p):
            p = p_new
            break
        p = p_new
    pstar = p
    ustar = 0.5 * (ul + ur) + 0.5 * (f_side(p, rr, pr, cr)[0] - f_side(p, rl, pl, cl)[0])

    def sample(xi):
        xi = np.asarray(xi, dtype=float)
        rho = np.empty_like(xi)
        u = np.empty_like(xi)
        pp = np.empty_like(xi)
        for i, s in np.ndenumerate(xi):
            if s <= ustar:      # left of contact
                if pstar > pl:  # left shock
                    sl = ul - cl * math.sqrt((g + 1.0) / (2 * g) * pstar / pl
                                             + (g - 1.0) / (2 * g))
                    if s < sl:
                        rho[i], u[i], pp[i] = rl, ul, pl
                    else:
                        rs = rl * ((pstar / pl + (g - 1) / (g + 1))
                                   / ((g - 1) / (g + 1) * pstar / pl + 1.0))
                        rho[i], u[i], pp[i] = rs, ustar, pstar
                else:           # left rarefaction
                    head = ul - cl
                    cstar = cl * (pstar / pl) ** ((g - 1.0) / (2.0 * g))
                    tail = ustar - cstar
                    if s < head:
                        rho[i], u[i], pp[i] = rl, ul, pl
                    elif s > tail:
                        rs = rl * (pstar / pl) ** (1.0 / g)
                        rho[i], u[i], pp[i] = rs, ustar, pstar
                    else:
                        uf = 2.0 / (g + 1.0) * (cl + (g - 1.0) / 2.0 * ul + s)
                        cf = 2.0 / (g + 1.0) * (cl + (g - 1.0) / 2.0 * (ul - s))
                        rho[i] = rl * (cf / cl) ** (2.0 / (g - 1.0))
                        u[i] = uf
                        pp[i] = pl * (cf / cl) ** (2.0 * g / (g - 1.0))
            else:               # right of contact
                if pstar > pr:  # right shock
                    sr = ur + cr * math.sqrt((g + 1.0) / (2 * g) * pstar / pr
                                             + (g - 1.0) / (2 * g))
                    if s > sr:
                        rho[i], u[i], pp[i] = rr, ur, pr
                    else:
                        rs = rr * ((pstar / pr + (g - 1) / (g + 1))
                                   / ((g - 1) / (g + 1) * pstar / pr + 1.0))
                        rho[i], u[i], pp[i] = rs, ustar, pstar
                else:           # right rarefaction
                    head = ur + cr
                    cstar = cr * (pstar / pr) ** ((g - 1.0) / (2.0 * g))
                    tail = ustar + cstar
                    if s > head:
                        rho[i], u[i], pp[i] = rr, ur, pr
                    elif s < tail:
                        rs = rr * (pstar / pr) ** (1.0 / g)
                        rho[i], u[i], pp[i] = rs, ustar, pstar
                    else:
                        uf = 2.0 / (g + 1.0) * (-cr + (g - 1.0) / 2.0 * ur + s)
                        cf = 2.0 / (g + 1.0) * (cr - (g - 1.0) / 2.0 * (ur - s))
                        rho[i] = rr * (cf / cr) ** (2.0 / (g - 1.0))
                        u[i] = uf
                        pp[i] = pr * (cf / cr) ** (2.0 * g / (g - 1.0))
        return rho, u, pp

    sample.p_star = pstar
    sample.u_star = ustar
    return sample


def _sod_exact(gamma):
    solver = exact_riemann(SOD_LEFT, SOD_RIGHT, gamma)

    def exact(X, Y, t):
        if t <= 0.0:
            return _sod_initial(gamma)(X, Y)
        rho, u, p = solver((np.asarray(X) - SOD_JUMP) / t)
        prim = np.stack([rho, u, p], axis=-1)
        return models.euler_conservative(prim, gamma)

    return exact


def _sod_setup(gamma=1.4):
    left_state = models.euler_conservative(np.array(SOD_LEFT), gamma)

    def inflow_state(x, y, interior):
        out = np.empty_like(interior)
        out[...] = left_state
        return out

    return ProblemSetup(
        name="sod", dim=1, domain=((0.0, 1.0), (0.0, 0.0)), gamma=gamma,
        default_final_time=0.2, initial=_sod_initial(gamma),
        boundary={"west": msh.inflow(inflow_state), "east": msh.outflow()},
        exact=_sod_exact(gamma))


# ---------------------------------------------------------------------------
# 2D KPP rotating-wave problem
# ---------------------------------------------------------------------------

def _kpp_setup():
    def initial(X, Y):
        inside = (X - 1.0) ** 2 + (Y - 1.0) ** 2 <= 1.0
        u = np.where(inside, 3.5 * np.pi, 0.25 * np.pi)
        return u[..., None]

    bc = {s: msh.outflow() for s in msh.SIDES}
    return ProblemSetup(
        name="kpp", dim=2, domain=((0.0, 2.0), (0.0, 2.0)), gamma=float("nan"),
        default_final_time=1.0, initial=initial, boundary=bc,
        plot_range=(-0.5, 12.0))


# ---------------------------------------------------------------------------
# isentropic vortex (2D) with the advected analytic solution
# ---------------------------------------------------------------------------

VORTEX_STRENGTH = 5.0
VORTEX_CENTER = (5.0, 5.0)


def _vortex_state(X, Y, t, gamma, beta=VORTEX_STRENGTH):
    """Advected isentropic vortex on the periodic [0,20] x [0,10] box.

    Profile: du = -beta e^(1-r^2) (y-y0)/(2pi), dv analogous, and the
    isentropic temperature dip dT = -(gamma-1) beta^2 e^(2(1-r^2))/(16 gamma
    pi^2); background (rho, u, v, p) = (1, 1, 0, 1).
    """
    Lx, Ly = 20.0, 10.0
    dx = np.mod(np.asarray(X) - VORTEX_CENTER[0] - t + 0.5 * Lx, Lx) - 0.5 * Lx
    dy = np.mod(np.asarray(Y) - VORTEX_CENTER[1] + 0.5 * Ly, Ly) - 0.5 * Ly
    r2 = dx * dx + dy * dy
    expf = np.exp(1.0 - r2)
    du = -beta * expf * dy / (2.0 * np.pi)
    dv = beta * expf * dx / (2.0 * np.pi)
    dT = -(gamma - 1.0) * beta**2 * np.exp(2.0 * (1.0 - r2)) / (16.0 * gamma * np.pi**2)
    T = 1.0 + dT
    rho = T ** (1.0 / (gamma - 1.0))
    p = rho * T
    prim = np.stack([rho, 1.0 + du, dv, p], axis=-1)
    return models.euler_conservative(prim, gamma)


def _vortex_setup(gamma=1.4):
    bc = {s: msh.periodic() for s in msh.SIDES}
    return ProblemSetup(
        name="vortex", dim=2, domain=((0.0, 20.0), (0.0, 10.0)), gamma=gamma,
        default_final_time=1.0,
        initial=lambda X, Y: _vortex_state(X, Y, 0.0, gamma),
        boundary=bc,
        exact=lambda X, Y, t: _vortex_state(X, Y, t, gamma))


# ---------------------------------------------------------------------------
# Kelvin-Helmholtz instability (2D, periodic)
# ---------------------------------------------------------------------------

def _kh_setup(gamma=1.4):
    def initial(X, Y):
        B = np.tanh(15.0 * Y + 7.5) - np.tanh(15.0 * Y - 7.5)
        rho = 0.5 + 0.75 * B
        u = 0.5 * (B - 1.0)
        v = 0.1 * np.sin(2.0 * np.pi * X)
        p = np.ones_like(rho)
        return models.euler_conservative(np.stack([rho, u, v, p], axis=-1), gamma)

    bc = {s: msh.periodic() for s in msh.SIDES}
    return ProblemSetup(
        name="kelvin_helmholtz", dim=2, domain=((-1.0, 1.0), (-1.0, 1.0)),
        gamma=gamma, default_final_time=10.0, initial=initial, boundary=bc,
        plot_range=(0.5, 2.5))


# ---------------------------------------------------------------------------
# Mach ~2000 astrophysical jet (2D)
# ---------------------------------------------------------------------------

JET_AMBIENT = (0.5, 0.0, 0.0, 0.4127)      # rho, u, v, p
JET_INFLOW = (5.0, 800.0, 0.0, 0.4127)
JET_STRIP = 0.05


def _jet_setup(gamma=5.0 / 3.0):
    ambient = models.euler_conservative(np.array(JET_AMBIENT), gamma)
    jet = models.euler_conservative(np.array(JET_INFLOW), gamma)

    def initial(X, Y):
        out = np.empty(np.shape(X) + (4,))
        out[...] = ambient
        return out

    def inflow_state(x, y, interior):
        # jet state inside the strip |y| <= 0.05, interior copy elsewhere
        out = interior.copy()
        strip = np.abs(y) <= JET_STRIP
        out[strip] = jet
        return out

    bc = {"west": msh.inflow(inflow_state), "east": msh.outflow(),
          "south": msh.outflow(), "north": msh.outflow()}
    return ProblemSetup(
        name="astro_jet", dim=2, domain=((-0.5, 0.5), (-0.5, 0.5)), gamma=gamma,
        default_final_time=0.001, initial=initial, boundary=bc,
        plot_range=(0.01, 30.0))


_FACTORIES = {
    "sod": _sod_setup,
    "kpp": _kpp_setup,
    "vortex": _vortex_setup,
    "kelvin_helmholtz": _kh_setup,
    "astro_jet": _jet_setup,
}


def setup_problem(name, gamma=None):
    """Build a named benchmark problem, optionally overriding gamma."""
    if name not in _FACTORIES:
        raise ConfigurationError(
            f"unknown problem {name!r}; choose one of {PROBLEM_NAMES}")
    factory = _FACTORIES[name]
    if gamma is None or name == "kpp":
        return factory()
    return factory(gamma=gamma)
