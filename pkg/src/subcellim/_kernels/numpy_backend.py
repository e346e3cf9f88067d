"""Vectorized numpy implementation of the hot solver kernels.

Layout convention for all per-axis kernels: ``[E, L, n, C]`` where E indexes
elements (ordered so that neighbors along the processed axis are adjacent in
the face tables), L the transverse node lines, n the nodes along the axis and
C the conservative components.  Geometric scaling enters through ``scale``
(the transverse half-width) and the transverse weights ``w_t``; the mass
template handles the rest.

Model dispatch is by integer id (0 = Euler, 1 = KPP) so the numba twin can
share the exact same call signatures.
"""

import numpy as np

MODEL_EULER = 0
MODEL_KPP = 1


# ---------------------------------------------------------------------------
# pointwise physics (unchecked: callers guarantee admissibility)
# ---------------------------------------------------------------------------

def _internal_energy(u):
    return u[..., -1] - 0.5 * np.sum(u[..., 1:-1] ** 2, axis=-1) / u[..., 0]


def nodal_flux(u, axis_id, model_id, gamma):
    """Physical flux component along physical axis ``axis_id``."""
    if model_id == MODEL_KPP:
        s = u[..., 0]
        f = np.sin(s) if axis_id == 0 else np.cos(s)
        return f[..., None]
    rho = u[..., 0]
    p = (gamma - 1.0) * _internal_energy(u)
    vk = u[..., 1 + axis_id] / rho
    f = u * vk[..., None]
    f[..., 1 + axis_id] += p
    f[..., -1] += p * vk
    return f


def node_speed(u, axis_id, model_id, gamma):
    """Per-node Davis speed |v_k| + c (Euler) or |grad f . e_k| (KPP)."""
    if model_id == MODEL_KPP:
        s = u[..., 0]
        return np.abs(np.cos(s)) if axis_id == 0 else np.abs(np.sin(s))
    rho = u[..., 0]
    p = (gamma - 1.0) * _internal_energy(u)
    return np.abs(u[..., 1 + axis_id] / rho) + np.sqrt(gamma * p / rho)


def entropy_vars(u, model_id, gamma):
    """Entropy variables of eta = -rho s (Euler) or u^2/2 (KPP)."""
    if model_id == MODEL_KPP:
        return u.copy()
    rho = u[..., 0]
    rhoe = _internal_energy(u)
    p = (gamma - 1.0) * rhoe
    s = np.log(p) - gamma * np.log(rho)
    v = np.empty_like(u)
    v[..., 0] = (gamma - s) - 0.5 * (gamma - 1.0) * np.sum(u[..., 1:-1] ** 2, axis=-1) / (rho * p)
    v[..., 1:-1] = (gamma - 1.0) * u[..., 1:-1] / p[..., None]
    v[..., -1] = -(gamma - 1.0) * rho / p
    return v


def entropy_potential(u, axis_id, model_id, gamma):
    """Entropy potential psi_k as a scalar field."""
    if model_id == MODEL_KPP:
        s = u[..., 0]
        return -np.cos(s) if axis_id == 0 else np.sin(s)
    return (gamma - 1.0) * u[..., 1 + axis_id]


def specific_entropy(u, gamma):
    """phi = rho^(-gamma) * rho e; nonpositive density maps to -inf."""
    rho = u[..., 0]
    rhoe = _internal_energy(u)
    with np.errstate(invalid="ignore"):
        phi = np.where(rho > 0.0, np.abs(rho) ** (-gamma) * rhoe, -np.inf)
    return phi


# ---------------------------------------------------------------------------
# face fluxes
# ---------------------------------------------------------------------------

def llf_line(uL, uR, axis_id, model_id, gamma):
    """Local Lax-Friedrichs flux oriented along +axis for face node arrays."""
    lam = np.maximum(node_speed(uL, axis_id, model_id, gamma),
                     node_speed(uR, axis_id, model_id, gamma))
    fstar = 0.5 * (nodal_flux(uL, axis_id, model_id, gamma)
                   + nodal_flux(uR, axis_id, model_id, gamma)) \
        - 0.5 * lam[..., None] * (uR - uL)
    return fstar, lam


# ---------------------------------------------------------------------------
# residual volume parts and subcell flux recovery
# ---------------------------------------------------------------------------

def high_order_volume(f, Q1d, w_t, scale):
    """DGSEM per-line volume part: scale * w_l * (-Q f + B-correction)."""
    rvol = -np.einsum("ik,elkc->elic", Q1d, f)
    rvol[:, :, 0, :] -= f[:, :, 0, :]
    rvol[:, :, -1, :] += f[:, :, -1, :]
    return scale * w_t[None, :, None, None] * rvol


def low_order_volume(u, f, w_t, scale, axis_id, model_id, gamma):
    """Graph-viscosity per-line volume part of the sparse low-order scheme."""
    sigma = node_speed(u, axis_id, model_id, gamma)      # [E, L, n]
    rvol = np.zeros_like(u)
    # central part: -(tri o F) 1 with F_ij = (f_i + f_j)/2, tri = +/-1 off-diagonals
    avg = 0.5 * (f[:, :, 1:, :] + f[:, :, :-1, :])       # pair i, i+1
    rvol[:, :, :-1, :] -= avg
    rvol[:, :, 1:, :] += avg
    # dissipation: +(Lambda o D) 1 with Lambda_ij = max(sigma_i, sigma_j)/2
    lam = 0.5 * np.maximum(sigma[:, :, 1:], sigma[:, :, :-1])[..., None]
    jump = lam * (u[:, :, 1:, :] - u[:, :, :-1, :])
    rvol[:, :, :-1, :] += jump
    rvol[:, :, 1:, :] -= jump
    return scale * w_t[None, :, None, None] * rvol


def recover_fluxes(rvol, fstar_w, fstar_e, w_t, scale):
    """Cumulative-sum recovery of algebraic subcell fluxes on every line.

    Returns ``fbar[E, L, n+1, C]`` with the mass-weighted interface fluxes at
    the ends, plus the worst relative line-conservation defect (the per-line
    volume part must sum to zero for the recovery to be well-posed).
    """
    E, L, n, C = rvol.shape
    fbar = np.empty((E, L, n + 1, C))
    wgt = scale * w_t[None, :, None]
    fbar[:, :, 0, :] = -wgt * fstar_w
    # interior values are partial sums of the volume rows alone: the volume
    # difference operator's first column is zero, so fbar_0 does not enter
    fbar[:, :, 1:n, :] = np.cumsum(rvol[:, :, : n - 1, :], axis=2)
    fbar[:, :, n, :] = -wgt * fstar_e
    defect = np.abs(np.sum(rvol, axis=2))
    norm = np.maximum(1.0, np.sum(np.abs(rvol), axis=2))
    return fbar, float(np.max(defect / norm))


def blend_difference(fbarH, fbarL, lfac):
    """Per-axis residual contribution Delta applied to the blended fluxes.

    ``lfac[E, L, n-1]`` are the volume-interface limiting factors; the
    interface entries (0 and n) of the high/low fluxes coincide, so no factor
    is needed there.
    """
    E, L, np1, C = fbarH.shape
    fbar = fbarL.copy()
    fbar[:, :, 1:-1, :] += lfac[..., None] * (fbarH[:, :, 1:-1, :] - fbarL[:, :, 1:-1, :])
    return fbar[:, :, 1:, :] - fbar[:, :, :-1, :]


# ---------------------------------------------------------------------------
# entropy linear program
# ---------------------------------------------------------------------------

def assemble_entropy_lp(v, psi, fbarH, fbarL, w_t, scale, bound_scale):
    """Coefficients and bound of the per-element entropy LP for one axis.

    a_(l,m) = (v_(l,m-1) - v_(l,m)) . (fbarH - fbarL)_(l,m)
    b = bound_scale * (1^T B psi - 1^T d^L)

    Returns ``(a[E, L*(n-1)], b[E], slack[E], mag[E])``: ``slack`` is the
    unscaled low-order entropy margin ``1^T B psi - 1^T d^L`` (nonnegative up
    to rounding by the low-order entropy inequality) and ``mag`` its
    magnitude scale for relative feasibility tolerances.
    """
    dv = v[:, :, :-1, :] - v[:, :, 1:, :]                 # [E, L, n-1, C]
    dfa = fbarH[:, :, 1:-1, :] - fbarL[:, :, 1:-1, :]
    a = np.sum(dv * dfa, axis=-1)                         # [E, L, n-1]
    dL = np.sum(dv * fbarL[:, :, 1:-1, :], axis=(-1, -2, -3))
    P = scale * np.sum(w_t[None, :] * (psi[:, :, -1] - psi[:, :, 0]), axis=1)
    slack = P - dL
    mag = scale * np.sum(w_t[None, :] * (np.abs(psi[:, :, -1]) + np.abs(psi[:, :, 0])),
                         axis=1) + np.sum(np.abs(dv * fbarL[:, :, 1:-1, :]), axis=(-1, -2, -3))
    return a.reshape(a.shape[0], -1), bound_scale * slack, slack, mag


def greedy_batch(a, b, U, eps0):
    """Batched sorted greedy solve of max 1^T x s.t. a^T x <= b, 0 <= x <= U.

    ``b`` must already be clamped nonnegative.  Entries with coefficients
    below ``eps0`` are never touched (they keep their upper bound).
    """
    x = U.copy()
    if x.shape[1] == 0:
        return x
    s0 = np.einsum("em,em->e", a, x)
    active = np.where(s0 > b)[0]
    if active.size == 0:
        return x
    aa = a[active]
    uu = U[active]
    bb = b[active]
    m = aa.shape[1]
    order = np.argsort(-aa, axis=1, kind="stable")
    a_s = np.take_along_axis(aa, order, axis=1)
    u_s = np.take_along_axis(uu, order, axis=1)
    csum = np.cumsum(a_s * u_s, axis=1)
    rem = csum[:, -1:] - csum                     # dot product after zeroing 0..k
    feasible = rem <= bb[:, None]
    small = a_s < eps0
    first_small = np.where(small.any(axis=1), small.argmax(axis=1), m)
    first_feas = np.where(feasible.any(axis=1), feasible.argmax(axis=1), m)
    stop = np.minimum(first_feas, first_small)
    x_s = np.where(np.arange(m)[None, :] < stop[:, None], 0.0, u_s)
    pivot_rows = np.where(first_feas < first_small)[0]
    if pivot_rows.size:
        p = first_feas[pivot_rows]
        frac = (bb[pivot_rows] - rem[pivot_rows, p]) / a_s[pivot_rows, p]
        x_s[pivot_rows, p] = np.clip(frac, 0.0, u_s[pivot_rows, p])
    xx = np.empty_like(x_s)
    np.put_along_axis(xx, order, x_s, axis=1)
    x[active] = xx
    return x


def entropy_residual(v, fbar, psi, w_t, scale):
    """Per-element v^T Delta^vol fbar - 1^T B psi for one axis."""
    dv = v[:, :, :-1, :] - v[:, :, 1:, :]
    vol = np.sum(dv * fbar[:, :, 1:-1, :], axis=(-1, -2, -3))
    P = scale * np.sum(w_t[None, :] * (psi[:, :, -1] - psi[:, :, 0]), axis=1)
    return vol - P


def limited_rhs_axis(fbarH, fbarL, lfac, v, psi, w_t, scale):
    """Blend, difference and entropy-audit one axis in a single pass.

    Returns the per-axis contribution to M du/dt and the per-element
    post-limit volume entropy residual of the blended fluxes.
    """
    fbar = fbarL.copy()
    fbar[:, :, 1:-1, :] += lfac[..., None] * (fbarH[:, :, 1:-1, :] - fbarL[:, :, 1:-1, :])
    q = fbar[:, :, 1:, :] - fbar[:, :, :-1, :]
    return q, entropy_residual(v, fbar, psi, w_t, scale)


# ---------------------------------------------------------------------------
# convex-constraint upper bounds
# ---------------------------------------------------------------------------

def _substate_increments(ulow, dfa, dt, mass_t, sub_factor):
    """Linear substate increments for both nodes adjacent to each interface.

    A-substate (left node): u_low + l * incA; B-substate (right node):
    u_low - l * incB.
    """
    coefA = sub_factor * dt / mass_t[None, :, :-1, None]
    coefB = sub_factor * dt / mass_t[None, :, 1:, None]
    return coefA * dfa, coefB * dfa


def _largest_l_linear(q0, slope):
    """Largest l in [0,1] with q0 + l*slope >= 0, given q0 >= -0 (clamped)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = np.where(slope < 0.0, np.maximum(q0, 0.0) / (-slope), np.inf)
    return np.minimum(bound, 1.0)


def _largest_l_quadratic(c2, c1, c0):
    """Largest l in [0,1] with c2 l^2 + c1 l + c0 >= 0 on [0, l], c0 >= ~0."""
    c0 = np.maximum(c0, 0.0)
    out = np.ones_like(c0)
    lin = np.abs(c2) < 1e-300
    # linear fallback
    with np.errstate(divide="ignore", invalid="ignore"):
        lin_bound = np.where(c1 < 0.0, c0 / (-c1), np.inf)
    disc = c1 * c1 - 4.0 * c2 * c0
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = (-c1 - sq) / (2.0 * c2)
        r2 = (-c1 + sq) / (2.0 * c2)
    lo = np.minimum(r1, r2)
    hi = np.maximum(r1, r2)
    down = np.where(~lin & (c2 < 0.0), hi, np.inf)          # feasible up to larger root
    up_roots = ~lin & (c2 > 0.0) & (disc >= 0.0)
    up = np.full_like(c0, np.inf)
    up = np.where(up_roots & (lo >= 0.0), lo, up)           # blocked by nearer root
    up = np.where(up_roots & (lo < 0.0) & (hi > 0.0), 0.0, up)
    out = np.minimum(out, np.where(lin, lin_bound, np.where(c2 < 0.0, down, up)))
    return np.clip(out, 0.0, 1.0)


def _rhoe_quadratic_bound(u0, inc, sign, emin):
    """Largest l keeping rho*e(u0 + sign*l*inc) >= emin (quadratic form)."""
    rho0, E0 = u0[..., 0], u0[..., -1]
    m0 = u0[..., 1:-1]
    arho, aE = sign * inc[..., 0], sign * inc[..., -1]
    am = sign * inc[..., 1:-1]
    c2 = 2.0 * arho * aE - np.sum(am * am, axis=-1)
    c1 = 2.0 * (rho0 * aE + E0 * arho) - 2.0 * np.sum(m0 * am, axis=-1) - 2.0 * emin * arho
    c0 = 2.0 * rho0 * E0 - np.sum(m0 * m0, axis=-1) - 2.0 * emin * rho0
    return _largest_l_quadratic(c2, c1, c0)


def positivity_factors(ulow, dfa, dt, mass_t, sub_factor, relax):
    """Per-interface bounds keeping rho and rho*e above relax * low-order."""
    incA, incB = _substate_increments(ulow, dfa, dt, mass_t, sub_factor)
    uA0 = ulow[:, :, :-1, :]
    uB0 = ulow[:, :, 1:, :]
    lmax = _largest_l_linear((1.0 - relax) * uA0[..., 0], incA[..., 0])
    lmax = np.minimum(lmax, _largest_l_linear((1.0 - relax) * uB0[..., 0], -incB[..., 0]))
    rheA = uA0[..., -1] - 0.5 * np.sum(uA0[..., 1:-1] ** 2, axis=-1) / uA0[..., 0]
    rheB = uB0[..., -1] - 0.5 * np.sum(uB0[..., 1:-1] ** 2, axis=-1) / uB0[..., 0]
    lmax = np.minimum(lmax, _rhoe_quadratic_bound(uA0, incA, +1.0, relax * rheA))
    lmax = np.minimum(lmax, _rhoe_quadratic_bound(uB0, incB, -1.0, relax * rheB))
    return lmax


def tvd_factors(ulow, dfa, dt, mass_t, sub_factor, relax, rho_min, rho_max):
    """Two-sided density bounds plus the relaxed internal-energy condition."""
    incA, incB = _substate_increments(ulow, dfa, dt, mass_t, sub_factor)
    uA0 = ulow[:, :, :-1, :]
    uB0 = ulow[:, :, 1:, :]
    mnA, mxA = rho_min[:, :, :-1], rho_max[:, :, :-1]
    mnB, mxB = rho_min[:, :, 1:], rho_max[:, :, 1:]
    lmax = _largest_l_linear(uA0[..., 0] - mnA, incA[..., 0])
    lmax = np.minimum(lmax, _largest_l_linear(mxA - uA0[..., 0], -incA[..., 0]))
    lmax = np.minimum(lmax, _largest_l_linear(uB0[..., 0] - mnB, -incB[..., 0]))
    lmax = np.minimum(lmax, _largest_l_linear(mxB - uB0[..., 0], incB[..., 0]))
    rheA = uA0[..., -1] - 0.5 * np.sum(uA0[..., 1:-1] ** 2, axis=-1) / uA0[..., 0]
    rheB = uB0[..., -1] - 0.5 * np.sum(uB0[..., 1:-1] ** 2, axis=-1) / uB0[..., 0]
    lmax = np.minimum(lmax, _rhoe_quadratic_bound(uA0, incA, +1.0, relax * rheA))
    lmax = np.minimum(lmax, _rhoe_quadratic_bound(uB0, incB, -1.0, relax * rheB))
    return lmax


_BISECT_ITERS = 40


def min_entropy_factors(ulow, dfa, dt, mass_t, sub_factor, phi_bound, gamma):
    """Bisection for the largest l with phi(substates) above the nodal bounds.

    Returns the factors plus the number of interfaces where even l = 0 (the
    pure low-order substate) violated the bound and was accepted anyway.
    """
    incA, incB = _substate_increments(ulow, dfa, dt, mass_t, sub_factor)
    uA0 = ulow[:, :, :-1, :]
    uB0 = ulow[:, :, 1:, :]
    bndA = phi_bound[:, :, :-1]
    bndB = phi_bound[:, :, 1:]

    def ok(l):
        ll = l[..., None]
        okA = specific_entropy(uA0 + ll * incA, gamma) >= bndA
        okB = specific_entropy(uB0 - ll * incB, gamma) >= bndB
        return okA & okB

    one = np.ones(uA0.shape[:-1])
    feas1 = ok(one)
    feas0 = ok(np.zeros_like(one))
    fallback = int(np.sum(~feas0 & ~feas1))
    # bisect only where l=1 fails but l=0 holds
    need = ~feas1 & feas0
    lo_b = np.zeros_like(one)
    hi_b = np.ones_like(one)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo_b + hi_b)
        good = ok(mid)
        lo_b = np.where(good, mid, lo_b)
        hi_b = np.where(good, hi_b, mid)
    out = np.where(feas1, 1.0, np.where(need, lo_b, 0.0))
    return out, fallback


# ---------------------------------------------------------------------------
# element-level utilities
# ---------------------------------------------------------------------------

def stencil_min_max(values):
    """Min/max over each node's sparse low-order stencil (self + face neighbors).

    ``values[K, ny, nx]``; the stencil never crosses element boundaries.
    """
    mn = values.copy()
    mx = values.copy()
    for arr, op in ((mn, np.minimum), (mx, np.maximum)):
        arr[:, :, 1:] = op(arr[:, :, 1:], values[:, :, :-1])
        arr[:, :, :-1] = op(arr[:, :, :-1], values[:, :, 1:])
        if values.shape[1] > 1:
            arr[:, 1:, :] = op(arr[:, 1:, :], values[:, :-1, :])
            arr[:, :-1, :] = op(arr[:, :-1, :], values[:, 1:, :])
    return mn, mx


def modal_smoothness_s(comp, Vinv, degree):
    """Highest-mode log energy ratio of one component, per element.

    ``comp[K, ny, nx]`` nodal values; returns s = log10(max of the one- and
    two-highest-mode energy ratios), floored at -1e9 for zero higher-mode
    energy.  For degree 1 only the top-mode ratio is defined.
    """
    K, ny, nx = comp.shape
    if ny == 1:
        mu = np.einsum("di,kli->kld", Vinv, comp)
    else:
        mu = np.einsum("aj,di,kji->kad", Vinv, Vinv, comp)
    mu2 = mu * mu
    tot = np.sum(mu2, axis=(1, 2))
    cy1 = ny if ny == 1 else ny - 1
    cy2 = ny if ny == 1 else max(ny - 2, 0)
    clip1 = np.sum(mu2[:, :cy1, : nx - 1], axis=(1, 2))
    clip2 = np.sum(mu2[:, :cy2, : max(nx - 2, 0)], axis=(1, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(tot > 0.0, (tot - clip1) / tot, 0.0)
        r2 = np.where(clip1 > 0.0, (clip1 - clip2) / clip1, 0.0)
    ratio = np.maximum(r1, r2) if degree >= 2 else r1
    out = np.full(K, -1e9)
    pos = ratio > 0.0
    out[pos] = np.log10(ratio[pos])
    return out


def cfl_lambda(u, uextW, uextE, w_t, scale, axis_id, model_id, gamma):
    """One axis' contribution to the nodal wavespeed aggregate Sum_j Lambda_ij."""
    sigma = node_speed(u, axis_id, model_id, gamma)
    lam = np.zeros(u.shape[:-1])
    pair = np.maximum(sigma[:, :, 1:], sigma[:, :, :-1])
    lam[:, :, :-1] += 0.5 * pair
    lam[:, :, 1:] += 0.5 * pair
    sw = node_speed(uextW, axis_id, model_id, gamma)
    se = node_speed(uextE, axis_id, model_id, gamma)
    lam[:, :, 0] += 0.5 * np.maximum(sigma[:, :, 0], sw)
    lam[:, :, -1] += 0.5 * np.maximum(sigma[:, :, -1], se)
    return scale * w_t[None, :, None] * lam
