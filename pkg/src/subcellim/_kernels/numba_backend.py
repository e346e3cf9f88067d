"""Numba @njit implementation of the hot solver kernels.

Same call signatures and layout conventions as
:mod:`subcellim._kernels.numpy_backend`; see that module for documentation.
All kernels are cached to disk so repeated processes skip compilation.
"""

import numpy as np
from numba import njit

MODEL_EULER = 0
MODEL_KPP = 1


# ---------------------------------------------------------------------------
# pointwise physics
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _rhoe_point(u):
    ke = 0.0
    for c in range(1, u.shape[0] - 1):
        ke += u[c] * u[c]
    return u[u.shape[0] - 1] - 0.5 * ke / u[0]


@njit(cache=True, inline="always")
def _speed_point(u, axis_id, model_id, gamma):
    if model_id == MODEL_KPP:
        if axis_id == 0:
            return abs(np.cos(u[0]))
        return abs(np.sin(u[0]))
    rho = u[0]
    p = (gamma - 1.0) * _rhoe_point(u)
    return abs(u[1 + axis_id] / rho) + np.sqrt(gamma * p / rho)


@njit(cache=True, inline="always")
def _flux_point(u, axis_id, model_id, gamma, out):
    if model_id == MODEL_KPP:
        out[0] = np.sin(u[0]) if axis_id == 0 else np.cos(u[0])
        return
    rho = u[0]
    p = (gamma - 1.0) * _rhoe_point(u)
    vk = u[1 + axis_id] / rho
    for c in range(u.shape[0]):
        out[c] = u[c] * vk
    out[1 + axis_id] += p
    out[u.shape[0] - 1] += p * vk


@njit(cache=True)
def nodal_flux(u, axis_id, model_id, gamma):
    E, L, n, C = u.shape
    f = np.empty_like(u)
    for e in range(E):
        for l in range(L):
            for i in range(n):
                _flux_point(u[e, l, i], axis_id, model_id, gamma, f[e, l, i])
    return f


@njit(cache=True)
def node_speed(u, axis_id, model_id, gamma):
    E, L, n, C = u.shape
    s = np.empty((E, L, n))
    for e in range(E):
        for l in range(L):
            for i in range(n):
                s[e, l, i] = _speed_point(u[e, l, i], axis_id, model_id, gamma)
    return s


@njit(cache=True)
def entropy_vars(u, model_id, gamma):
    E, L, n, C = u.shape
    v = np.empty_like(u)
    if model_id == MODEL_KPP:
        for e in range(E):
            for l in range(L):
                for i in range(n):
                    v[e, l, i, 0] = u[e, l, i, 0]
        return v
    for e in range(E):
        for l in range(L):
            for i in range(n):
                w = u[e, l, i]
                rho = w[0]
                rhoe = _rhoe_point(w)
                p = (gamma - 1.0) * rhoe
                s = np.log(p) - gamma * np.log(rho)
                ke = 0.0
                for c in range(1, C - 1):
                    ke += w[c] * w[c]
                v[e, l, i, 0] = (gamma - s) - 0.5 * (gamma - 1.0) * ke / (rho * p)
                for c in range(1, C - 1):
                    v[e, l, i, c] = (gamma - 1.0) * w[c] / p
                v[e, l, i, C - 1] = -(gamma - 1.0) * rho / p
    return v


@njit(cache=True)
def entropy_potential(u, axis_id, model_id, gamma):
    E, L, n, C = u.shape
    psi = np.empty((E, L, n))
    for e in range(E):
        for l in range(L):
            for i in range(n):
                if model_id == MODEL_KPP:
                    psi[e, l, i] = -np.cos(u[e, l, i, 0]) if axis_id == 0 \
                        else np.sin(u[e, l, i, 0])
                else:
                    psi[e, l, i] = (gamma - 1.0) * u[e, l, i, 1 + axis_id]
    return psi


@njit(cache=True)
def specific_entropy(u, gamma):
    K, ny, nx, C = u.shape
    phi = np.empty((K, ny, nx))
    for k in range(K):
        for j in range(ny):
            for i in range(nx):
                rho = u[k, j, i, 0]
                if rho > 0.0:
                    phi[k, j, i] = rho ** (-gamma) * _rhoe_point(u[k, j, i])
                else:
                    phi[k, j, i] = -np.inf
    return phi


# ---------------------------------------------------------------------------
# face fluxes
# ---------------------------------------------------------------------------

@njit(cache=True)
def llf_line(uL, uR, axis_id, model_id, gamma):
    F, L, C = uL.shape
    fstar = np.empty_like(uL)
    lam = np.empty((F, L))
    fl = np.empty(C)
    fr = np.empty(C)
    for f in range(F):
        for l in range(L):
            a = uL[f, l]
            b = uR[f, l]
            sp = max(_speed_point(a, axis_id, model_id, gamma),
                     _speed_point(b, axis_id, model_id, gamma))
            lam[f, l] = sp
            _flux_point(a, axis_id, model_id, gamma, fl)
            _flux_point(b, axis_id, model_id, gamma, fr)
            for c in range(C):
                fstar[f, l, c] = 0.5 * (fl[c] + fr[c]) - 0.5 * sp * (b[c] - a[c])
    return fstar, lam


# ---------------------------------------------------------------------------
# residual volume parts and subcell flux recovery
# ---------------------------------------------------------------------------

@njit(cache=True)
def high_order_volume(f, Q1d, w_t, scale):
    E, L, n, C = f.shape
    rvol = np.empty_like(f)
    for e in range(E):
        for l in range(L):
            wgt = scale * w_t[l]
            for i in range(n):
                for c in range(C):
                    acc = 0.0
                    for k in range(n):
                        acc -= Q1d[i, k] * f[e, l, k, c]
                    if i == 0:
                        acc -= f[e, l, 0, c]
                    if i == n - 1:
                        acc += f[e, l, n - 1, c]
                    rvol[e, l, i, c] = wgt * acc
    return rvol


@njit(cache=True)
def low_order_volume(u, f, w_t, scale, axis_id, model_id, gamma):
    E, L, n, C = f.shape
    rvol = np.zeros_like(f)
    for e in range(E):
        for l in range(L):
            wgt = scale * w_t[l]
            for i in range(n - 1):
                sp = max(_speed_point(u[e, l, i], axis_id, model_id, gamma),
                         _speed_point(u[e, l, i + 1], axis_id, model_id, gamma))
                for c in range(C):
                    avg = 0.5 * (f[e, l, i, c] + f[e, l, i + 1, c])
                    jump = 0.5 * sp * (u[e, l, i + 1, c] - u[e, l, i, c])
                    rvol[e, l, i, c] += wgt * (jump - avg)
                    rvol[e, l, i + 1, c] += wgt * (avg - jump)
    return rvol


@njit(cache=True)
def recover_fluxes(rvol, fstar_w, fstar_e, w_t, scale):
    E, L, n, C = rvol.shape
    fbar = np.empty((E, L, n + 1, C))
    worst = 0.0
    for e in range(E):
        for l in range(L):
            wgt = scale * w_t[l]
            for c in range(C):
                fbar[e, l, 0, c] = -wgt * fstar_w[e, l, c]
                acc = 0.0
                norm = 0.0
                for i in range(n - 1):
                    acc += rvol[e, l, i, c]
                    norm += abs(rvol[e, l, i, c])
                    fbar[e, l, i + 1, c] = acc
                acc += rvol[e, l, n - 1, c]
                norm += abs(rvol[e, l, n - 1, c])
                fbar[e, l, n, c] = -wgt * fstar_e[e, l, c]
                rel = abs(acc) / max(1.0, norm)
                if rel > worst:
                    worst = rel
    return fbar, worst


@njit(cache=True)
def blend_difference(fbarH, fbarL, lfac):
    E, L, np1, C = fbarH.shape
    n = np1 - 1
    q = np.empty((E, L, n, C))
    for e in range(E):
        for l in range(L):
            for c in range(C):
                prev = fbarL[e, l, 0, c]
                for i in range(1, np1):
                    if 0 < i < n:
                        cur = fbarL[e, l, i, c] + lfac[e, l, i - 1] * (
                            fbarH[e, l, i, c] - fbarL[e, l, i, c])
                    else:
                        cur = fbarL[e, l, i, c]
                    q[e, l, i - 1, c] = cur - prev
                    prev = cur
    return q


# ---------------------------------------------------------------------------
# entropy linear program
# ---------------------------------------------------------------------------

@njit(cache=True)
def assemble_entropy_lp(v, psi, fbarH, fbarL, w_t, scale, bound_scale):
    E, L, n, C = v.shape
    m = L * (n - 1)
    a = np.empty((E, m))
    b = np.empty(E)
    slack = np.empty(E)
    mag = np.empty(E)
    for e in range(E):
        dL = 0.0
        P = 0.0
        mg = 0.0
        idx = 0
        for l in range(L):
            wgt = scale * w_t[l]
            P += wgt * (psi[e, l, n - 1] - psi[e, l, 0])
            mg += wgt * (abs(psi[e, l, n - 1]) + abs(psi[e, l, 0]))
            for i in range(1, n):
                acc = 0.0
                low = 0.0
                alow = 0.0
                for c in range(C):
                    dv = v[e, l, i - 1, c] - v[e, l, i, c]
                    acc += dv * (fbarH[e, l, i, c] - fbarL[e, l, i, c])
                    low += dv * fbarL[e, l, i, c]
                    alow += abs(dv * fbarL[e, l, i, c])
                a[e, idx] = acc
                dL += low
                mg += alow
                idx += 1
        slack[e] = P - dL
        b[e] = bound_scale[e] * slack[e]
        mag[e] = mg
    return a, b, slack, mag


@njit(cache=True)
def greedy_batch(a, b, U, eps0):
    E, m = a.shape
    x = U.copy()
    for e in range(E):
        s = 0.0
        for j in range(m):
            s += a[e, j] * x[e, j]
        if s <= b[e]:
            continue
        order = np.argsort(-a[e], kind="mergesort")
        for k in range(m):
            i = order[k]
            if a[e, i] < eps0:
                break
            s -= a[e, i] * x[e, i]
            if s <= b[e]:
                frac = (b[e] - s) / a[e, i]
                if frac < 0.0:
                    frac = 0.0
                if frac > U[e, i]:
                    frac = U[e, i]
                x[e, i] = frac
                break
            x[e, i] = 0.0
    return x


@njit(cache=True)
def entropy_residual(v, fbar, psi, w_t, scale):
    E, L, n, C = v.shape
    res = np.empty(E)
    for e in range(E):
        acc = 0.0
        for l in range(L):
            wgt = scale * w_t[l]
            acc -= wgt * (psi[e, l, n - 1] - psi[e, l, 0])
            for i in range(1, n):
                for c in range(C):
                    acc += (v[e, l, i - 1, c] - v[e, l, i, c]) * fbar[e, l, i, c]
        res[e] = acc
    return res


@njit(cache=True)
def limited_rhs_axis(fbarH, fbarL, lfac, v, psi, w_t, scale):
    E, L, np1, C = fbarH.shape
    n = np1 - 1
    q = np.empty((E, L, n, C))
    res = np.empty(E)
    for e in range(E):
        acc = 0.0
        for l in range(L):
            wgt = scale * w_t[l]
            acc -= wgt * (psi[e, l, n - 1] - psi[e, l, 0])
            for c in range(C):
                prev = fbarL[e, l, 0, c]
                for i in range(1, np1):
                    if 0 < i < n:
                        cur = fbarL[e, l, i, c] + lfac[e, l, i - 1] * (
                            fbarH[e, l, i, c] - fbarL[e, l, i, c])
                        acc += (v[e, l, i - 1, c] - v[e, l, i, c]) * cur
                    else:
                        cur = fbarL[e, l, i, c]
                    q[e, l, i - 1, c] = cur - prev
                    prev = cur
        res[e] = acc
    return q, res


# ---------------------------------------------------------------------------
# convex-constraint upper bounds
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _largest_l_linear_point(q0, slope):
    if slope >= 0.0:
        return 1.0
    if q0 < 0.0:
        q0 = 0.0
    r = q0 / (-slope)
    return r if r < 1.0 else 1.0


@njit(cache=True, inline="always")
def _largest_l_quadratic_point(c2, c1, c0):
    if c0 < 0.0:
        c0 = 0.0
    if c2 == 0.0:
        if c1 >= 0.0:
            return 1.0
        r = c0 / (-c1)
        return r if r < 1.0 else 1.0
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        # no real roots: upward parabola with g(0) >= 0 is always feasible,
        # downward cannot happen with g(0) >= 0
        return 1.0 if c2 > 0.0 else 0.0
    sq = np.sqrt(disc)
    r1 = (-c1 - sq) / (2.0 * c2)
    r2 = (-c1 + sq) / (2.0 * c2)
    lo = min(r1, r2)
    hi = max(r1, r2)
    if c2 < 0.0:
        r = hi
    else:
        if lo >= 0.0:
            r = lo
        elif hi <= 0.0:
            return 1.0
        else:
            return 0.0
    if r < 0.0:
        return 0.0
    return r if r < 1.0 else 1.0


@njit(cache=True, inline="always")
def _rhoe_bound_point(u0, inc, sign, emin):
    C = u0.shape[0]
    arho = sign * inc[0]
    aE = sign * inc[C - 1]
    c2 = 2.0 * arho * aE
    c1 = 2.0 * (u0[0] * aE + u0[C - 1] * arho) - 2.0 * emin * arho
    c0 = 2.0 * u0[0] * u0[C - 1] - 2.0 * emin * u0[0]
    for c in range(1, C - 1):
        am = sign * inc[c]
        c2 -= am * am
        c1 -= 2.0 * u0[c] * am
        c0 -= u0[c] * u0[c]
    return _largest_l_quadratic_point(c2, c1, c0)


@njit(cache=True)
def positivity_factors(ulow, dfa, dt, mass_t, sub_factor, relax):
    E, L, nm1, C = dfa.shape
    out = np.empty((E, L, nm1))
    inc = np.empty(C)
    for e in range(E):
        for l in range(L):
            for i in range(nm1):
                cA = sub_factor * dt / mass_t[l, i]
                cB = sub_factor * dt / mass_t[l, i + 1]
                uA = ulow[e, l, i]
                uB = ulow[e, l, i + 1]
                lmax = 1.0
                # density, A substate (left node, +cA) and B (right node, -cB)
                lmax = min(lmax, _largest_l_linear_point(
                    (1.0 - relax) * uA[0], cA * dfa[e, l, i, 0]))
                lmax = min(lmax, _largest_l_linear_point(
                    (1.0 - relax) * uB[0], -cB * dfa[e, l, i, 0]))
                for c in range(C):
                    inc[c] = cA * dfa[e, l, i, c]
                lmax = min(lmax, _rhoe_bound_point(uA, inc, 1.0, relax * _rhoe_point(uA)))
                for c in range(C):
                    inc[c] = cB * dfa[e, l, i, c]
                lmax = min(lmax, _rhoe_bound_point(uB, inc, -1.0, relax * _rhoe_point(uB)))
                out[e, l, i] = lmax
    return out


@njit(cache=True)
def tvd_factors(ulow, dfa, dt, mass_t, sub_factor, relax, rho_min, rho_max):
    E, L, nm1, C = dfa.shape
    out = np.empty((E, L, nm1))
    inc = np.empty(C)
    for e in range(E):
        for l in range(L):
            for i in range(nm1):
                cA = sub_factor * dt / mass_t[l, i]
                cB = sub_factor * dt / mass_t[l, i + 1]
                uA = ulow[e, l, i]
                uB = ulow[e, l, i + 1]
                drho = dfa[e, l, i, 0]
                lmax = 1.0
                lmax = min(lmax, _largest_l_linear_point(
                    uA[0] - rho_min[e, l, i], cA * drho))
                lmax = min(lmax, _largest_l_linear_point(
                    rho_max[e, l, i] - uA[0], -cA * drho))
                lmax = min(lmax, _largest_l_linear_point(
                    uB[0] - rho_min[e, l, i + 1], -cB * drho))
                lmax = min(lmax, _largest_l_linear_point(
                    rho_max[e, l, i + 1] - uB[0], cB * drho))
                for c in range(C):
                    inc[c] = cA * dfa[e, l, i, c]
                lmax = min(lmax, _rhoe_bound_point(uA, inc, 1.0, relax * _rhoe_point(uA)))
                for c in range(C):
                    inc[c] = cB * dfa[e, l, i, c]
                lmax = min(lmax, _rhoe_bound_point(uB, inc, -1.0, relax * _rhoe_point(uB)))
                out[e, l, i] = lmax
    return out


_BISECT_ITERS = 40


@njit(cache=True, inline="always")
def _phi_ok_point(u0, inc, sign, l, bound, gamma):
    rho = u0[0] + sign * l * inc[0]
    if rho <= 0.0:
        return False
    ke = 0.0
    for c in range(1, u0.shape[0] - 1):
        mc = u0[c] + sign * l * inc[c]
        ke += mc * mc
    rhoe = (u0[u0.shape[0] - 1] + sign * l * inc[u0.shape[0] - 1]) - 0.5 * ke / rho
    return rho ** (-gamma) * rhoe >= bound


@njit(cache=True)
def min_entropy_factors(ulow, dfa, dt, mass_t, sub_factor, phi_bound, gamma):
    E, L, nm1, C = dfa.shape
    out = np.empty((E, L, nm1))
    incA = np.empty(C)
    incB = np.empty(C)
    fallback = 0
    for e in range(E):
        for l in range(L):
            for i in range(nm1):
                cA = sub_factor * dt / mass_t[l, i]
                cB = sub_factor * dt / mass_t[l, i + 1]
                for c in range(C):
                    incA[c] = cA * dfa[e, l, i, c]
                    incB[c] = cB * dfa[e, l, i, c]
                uA = ulow[e, l, i]
                uB = ulow[e, l, i + 1]
                bA = phi_bound[e, l, i]
                bB = phi_bound[e, l, i + 1]
                if _phi_ok_point(uA, incA, 1.0, 1.0, bA, gamma) and \
                        _phi_ok_point(uB, incB, -1.0, 1.0, bB, gamma):
                    out[e, l, i] = 1.0
                    continue
                if not (_phi_ok_point(uA, incA, 1.0, 0.0, bA, gamma)
                        and _phi_ok_point(uB, incB, -1.0, 0.0, bB, gamma)):
                    out[e, l, i] = 0.0
                    fallback += 1
                    continue
                lo = 0.0
                hi = 1.0
                for _ in range(_BISECT_ITERS):
                    mid = 0.5 * (lo + hi)
                    if _phi_ok_point(uA, incA, 1.0, mid, bA, gamma) and \
                            _phi_ok_point(uB, incB, -1.0, mid, bB, gamma):
                        lo = mid
                    else:
                        hi = mid
                out[e, l, i] = lo
    return out, fallback


# ---------------------------------------------------------------------------
# element-level utilities
# ---------------------------------------------------------------------------

@njit(cache=True)
def stencil_min_max(values):
    K, ny, nx = values.shape
    mn = values.copy()
    mx = values.copy()
    for k in range(K):
        for j in range(ny):
            for i in range(nx):
                lo = values[k, j, i]
                hi = lo
                if i > 0:
                    lo = min(lo, values[k, j, i - 1])
                    hi = max(hi, values[k, j, i - 1])
                if i < nx - 1:
                    lo = min(lo, values[k, j, i + 1])
                    hi = max(hi, values[k, j, i + 1])
                if j > 0:
                    lo = min(lo, values[k, j - 1, i])
                    hi = max(hi, values[k, j - 1, i])
                if j < ny - 1:
                    lo = min(lo, values[k, j + 1, i])
                    hi = max(hi, values[k, j + 1, i])
                mn[k, j, i] = lo
                mx[k, j, i] = hi
    return mn, mx


@njit(cache=True)
def modal_smoothness_s(comp, Vinv, degree):
    K, ny, nx = comp.shape
    out = np.empty(K)
    tmp = np.empty((ny, nx))
    mu = np.empty((ny, nx))
    for k in range(K):
        for j in range(ny):
            for d in range(nx):
                acc = 0.0
                for i in range(nx):
                    acc += Vinv[d, i] * comp[k, j, i]
                tmp[j, d] = acc
        if ny == 1:
            for d in range(nx):
                mu[0, d] = tmp[0, d]
        else:
            for a in range(ny):
                for d in range(nx):
                    acc = 0.0
                    for j in range(ny):
                        acc += Vinv[a, j] * tmp[j, d]
                    mu[a, d] = acc
        tot = 0.0
        clip1 = 0.0
        clip2 = 0.0
        cy1 = ny if ny == 1 else ny - 1
        cy2 = ny if ny == 1 else max(ny - 2, 0)
        for a in range(ny):
            for d in range(nx):
                m2 = mu[a, d] * mu[a, d]
                tot += m2
                if a < cy1 and d < nx - 1:
                    clip1 += m2
                if a < cy2 and d < nx - 2:
                    clip2 += m2
        r1 = (tot - clip1) / tot if tot > 0.0 else 0.0
        r2 = (clip1 - clip2) / clip1 if clip1 > 0.0 else 0.0
        ratio = max(r1, r2) if degree >= 2 else r1
        out[k] = np.log10(ratio) if ratio > 0.0 else -1e9
    return out


@njit(cache=True)
def cfl_lambda(u, uextW, uextE, w_t, scale, axis_id, model_id, gamma):
    E, L, n, C = u.shape
    lam = np.zeros((E, L, n))
    for e in range(E):
        for l in range(L):
            s_prev = _speed_point(u[e, l, 0], axis_id, model_id, gamma)
            lam[e, l, 0] += 0.5 * max(
                s_prev, _speed_point(uextW[e, l], axis_id, model_id, gamma))
            for i in range(n - 1):
                s_next = _speed_point(u[e, l, i + 1], axis_id, model_id, gamma)
                pair = 0.5 * max(s_prev, s_next)
                lam[e, l, i] += pair
                lam[e, l, i + 1] += pair
                s_prev = s_next
            lam[e, l, n - 1] += 0.5 * max(
                s_prev, _speed_point(uextE[e, l], axis_id, model_id, gamma))
            wgt = scale * w_t[l]
            for i in range(n):
                lam[e, l, i] *= wgt
    return lam
