"""Conservation-law models: compressible Euler (1D/2D) and the 2D KPP scalar.

State arrays carry the conservative components on the last axis:
``(rho, rho*u, E)`` in 1D, ``(rho, rho*u, rho*v, E)`` in 2D, and the scalar
itself for KPP.  Every function is vectorized over leading axes.

The Euler entropy pair used throughout is

    eta(u) = -rho * s,        s = log(p * rho^(-gamma)),

whose entropy potential is psi_k = (gamma - 1) * (momentum_k); the entropy
flux is F_k = u_k * eta.  Any positive rescaling of eta rescales the limiter's
constraint row and bound identically, so the limiting factors are invariant
to this normalization.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, ContractViolationError

MODEL_EULER = 0
MODEL_KPP = 1

_AXES = {"x": 0, "y": 1}


def _axis_index(axis):
    try:
        return _AXES[axis]
    except KeyError:
        raise ContractViolationError(f"axis must be 'x' or 'y', got {axis!r}") from None


def _check_admissible(rho, rhoe, what):
    bad = ~((rho > 0.0) & (rhoe > 0.0))
    if np.any(bad):
        idx = np.unravel_index(np.argmax(bad), np.shape(bad))
        raise AdmissibilityError(
            f"inadmissible state passed to {what}: rho={np.asarray(rho)[idx]:.6g}, "
            f"rho*e={np.asarray(rhoe)[idx]:.6g} at index {idx}",
            node=idx,
        )


def euler_pressure(u, gamma):
    """Pressure p = (gamma - 1)(E - |m|^2 / (2 rho))."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    ke = 0.5 * np.sum(u[..., 1:-1] ** 2, axis=-1) / rho
    return (gamma - 1.0) * (u[..., -1] - ke)


def euler_internal_energy(u):
    """rho*e = E - |m|^2 / (2 rho)."""
    u = np.asarray(u, dtype=float)
    return u[..., -1] - 0.5 * np.sum(u[..., 1:-1] ** 2, axis=-1) / u[..., 0]


def euler_is_admissible(u):
    u = np.asarray(u, dtype=float)
    return (u[..., 0] > 0.0) & (euler_internal_energy(u) > 0.0)


def euler_primitive(u, gamma):
    """Conservative -> (rho, velocity components..., p)."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    vel = u[..., 1:-1] / rho[..., None]
    p = euler_pressure(u, gamma)
    return np.concatenate([rho[..., None], vel, p[..., None]], axis=-1)


def euler_conservative(prim, gamma):
    """(rho, velocity components..., p) -> conservative."""
    prim = np.asarray(prim, dtype=float)
    rho = prim[..., 0]
    vel = prim[..., 1:-1]
    p = prim[..., -1]
    mom = rho[..., None] * vel
    E = p / (gamma - 1.0) + 0.5 * rho * np.sum(vel**2, axis=-1)
    return np.concatenate([rho[..., None], mom, E[..., None]], axis=-1)


def euler_flux(u, axis, gamma):
    """Physical Euler flux along ``axis`` ('x' or 'y')."""
    u = np.asarray(u, dtype=float)
    k = _axis_index(axis)
    if u.shape[-1] == 3 and k == 1:
        raise ContractViolationError("1D Euler state has no y-flux")
    rho = u[..., 0]
    rhoe = euler_internal_energy(u)
    _check_admissible(rho, rhoe, "euler_flux")
    p = (gamma - 1.0) * rhoe
    vk = u[..., 1 + k] / rho
    f = u * vk[..., None]
    f[..., 1 + k] += p
    f[..., -1] += p * vk
    return f


def euler_entropy(u, gamma):
    """Mathematical entropy eta = -rho * log(p rho^(-gamma))."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    rhoe = euler_internal_energy(u)
    _check_admissible(rho, rhoe, "euler_entropy")
    p = (gamma - 1.0) * rhoe
    s = np.log(p) - gamma * np.log(rho)
    return -rho * s


def euler_entropy_variables(u, gamma):
    """Gradient of eta = -rho s with respect to the conservative variables."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    rhoe = euler_internal_energy(u)
    _check_admissible(rho, rhoe, "euler_entropy_variables")
    p = (gamma - 1.0) * rhoe
    s = np.log(p) - gamma * np.log(rho)
    v = np.empty_like(u)
    ke = 0.5 * np.sum(u[..., 1:-1] ** 2, axis=-1) / rho
    v[..., 0] = (gamma - s) - (gamma - 1.0) * ke / p
    v[..., 1:-1] = (gamma - 1.0) * u[..., 1:-1] / p[..., None]
    v[..., -1] = -(gamma - 1.0) * rho / p
    return v


def euler_entropy_potential(u, axis, gamma):
    """psi_k = (gamma - 1) * momentum_k."""
    u = np.asarray(u, dtype=float)
    k = _axis_index(axis)
    return (gamma - 1.0) * u[..., 1 + k]


def euler_entropy_flux(u, axis, gamma):
    """Entropy flux F_k = u_k * eta."""
    u = np.asarray(u, dtype=float)
    k = _axis_index(axis)
    return (u[..., 1 + k] / u[..., 0]) * euler_entropy(u, gamma)


def euler_entropy_quantities(u, gamma):
    """Return (eta, v, psi) at a state; psi collects all flux directions."""
    eta = euler_entropy(u, gamma)
    v = euler_entropy_variables(u, gamma)
    ncomp = np.asarray(u).shape[-1]
    axes = ("x",) if ncomp == 3 else ("x", "y")
    psi = np.stack([euler_entropy_potential(u, a, gamma) for a in axes], axis=-1)
    return eta, v, psi


def specific_entropy_phi(u, gamma):
    """Modified specific entropy phi = rho^(1-gamma) e, e = rho*e / rho."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    rhoe = euler_internal_energy(u)
    _check_admissible(rho, rhoe, "specific_entropy_phi")
    return rho ** (-gamma) * rhoe


def euler_max_wavespeed(uL, uR, normal, gamma):
    """Davis estimate: max over both states of |u.n| + sqrt(gamma p / rho)."""
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    normal = np.asarray(normal, dtype=float)
    out = None
    for u in (uL, uR):
        rho = u[..., 0]
        rhoe = euler_internal_energy(u)
        _check_admissible(rho, rhoe, "euler_max_wavespeed")
        p = (gamma - 1.0) * rhoe
        un = np.sum(u[..., 1:-1] * normal, axis=-1) / rho
        lam = np.abs(un) + np.sqrt(gamma * p / rho)
        out = lam if out is None else np.maximum(out, lam)
    return out


def kpp_flux(u, axis):
    """KPP flux f(u) = (sin u, cos u)."""
    u = np.asarray(u, dtype=float)[..., 0]
    k = _axis_index(axis)
    f = np.sin(u) if k == 0 else np.cos(u)
    return f[..., None]


def kpp_entropy(u):
    return 0.5 * np.asarray(u, dtype=float)[..., 0] ** 2


def kpp_entropy_variables(u):
    return np.asarray(u, dtype=float).copy()


def kpp_entropy_potential(u, axis):
    """psi = v f - F with F' = v f': psi = (-cos u, sin u)."""
    u = np.asarray(u, dtype=float)[..., 0]
    k = _axis_index(axis)
    return -np.cos(u) if k == 0 else np.sin(u)


def kpp_max_wavespeed(uL, uR, normal):
    """Two-state bound max |f'(u) . n| = |(cos u, -sin u) . n|, at most 1."""
    normal = np.asarray(normal, dtype=float)
    out = None
    for u in (np.asarray(uL, dtype=float), np.asarray(uR, dtype=float)):
        s = u[..., 0]
        lam = np.abs(np.cos(s) * normal[..., 0] - np.sin(s) * normal[..., 1])
        out = lam if out is None else np.maximum(out, lam)
    return out


@dataclass(frozen=True)
class ConservationLawModel:
    """Bundle of the callable roles a conservation law exposes to the solver."""

    name: str
    dim: int
    ncomp: int
    model_id: int
    gamma: float = float("nan")

    def flux(self, u, axis):
        if self.model_id == MODEL_EULER:
            return euler_flux(u, axis, self.gamma)
        return kpp_flux(u, axis)

    def entropy(self, u):
        if self.model_id == MODEL_EULER:
            return euler_entropy(u, self.gamma)
        return kpp_entropy(u)

    def entropy_variables(self, u):
        if self.model_id == MODEL_EULER:
            return euler_entropy_variables(u, self.gamma)
        return kpp_entropy_variables(u)

    def entropy_potential(self, u, axis):
        if self.model_id == MODEL_EULER:
            return euler_entropy_potential(u, axis, self.gamma)
        return kpp_entropy_potential(u, axis)

    def entropy_flux(self, u, axis):
        if self.model_id == MODEL_EULER:
            return euler_entropy_flux(u, axis, self.gamma)
        u = np.asarray(u, dtype=float)[..., 0]
        return u * np.sin(u) + np.cos(u) if axis == "x" else u * np.cos(u) - np.sin(u)

    def max_wavespeed(self, uL, uR, normal):
        if self.model_id == MODEL_EULER:
            return euler_max_wavespeed(uL, uR, normal, self.gamma)
        return kpp_max_wavespeed(uL, uR, normal)

    def is_admissible(self, u):
        if self.model_id == MODEL_EULER:
            return euler_is_admissible(u)
        return np.ones(np.asarray(u).shape[:-1], dtype=bool)

    def pressure(self, u):
        if self.model_id == MODEL_EULER:
            return euler_pressure(u, self.gamma)
        return np.zeros(np.asarray(u).shape[:-1])


def euler_model(dim, gamma=1.4):
    """Compressible Euler equations in ``dim`` space dimensions."""
    if dim not in (1, 2):
        raise ContractViolationError(f"Euler model supports dim 1 or 2, got {dim}")
    return ConservationLawModel(
        name="euler", dim=dim, ncomp=dim + 2, model_id=MODEL_EULER, gamma=float(gamma))


def kpp_model():
    """Scalar 2D KPP model with rotational flux (sin u, cos u)."""
    return ConservationLawModel(name="kpp", dim=2, ncomp=1, model_id=MODEL_KPP)


def llf_flux(uL, uR, normal, model):
    """Local Lax-Friedrichs flux along unit normal ``normal``.

    0.5 [f(uL) + f(uR)] . n - 0.5 lambda_max (uR - uL)
    """
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    normal = np.asarray(normal, dtype=float)
    lam = model.max_wavespeed(uL, uR, normal)
    axes = ("x",) if model.ncomp == 3 else ("x", "y")
    fn = None
    for k, axis in enumerate(axes):
        nk = normal[..., k]
        if np.all(nk == 0.0):
            continue
        term = 0.5 * (model.flux(uL, axis) + model.flux(uR, axis)) * nk[..., None]
        fn = term if fn is None else fn + term
    if fn is None:
        fn = np.zeros_like(uL)
    return fn - 0.5 * lam[..., None] * (uR - uL)
