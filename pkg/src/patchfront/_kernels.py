"""Inner loops shared by the stationary, wave and Cauchy solvers.

Each loop is written once as plain Python taking a scalar evaluator
``fn(args, u)``.  For polynomial reactions it is compiled with numba and
called with :func:`horner`; custom reactions run the uncompiled version
with a Python callable.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def horner(coef, x):
    acc = 0.0
    for i in range(coef.shape[0]):
        acc = acc * x + coef[i]
    return acc


@njit(cache=True)
def neg_horner_shifted(packed, u):
    # packed[0] is the shift, the rest are descending coefficients
    y = u - packed[0]
    acc = 0.0
    for i in range(1, packed.shape[0]):
        acc = acc * y + packed[i]
    return -acc


# --- stationary branches ---------------------------------------------------

def _first_order_branch(I, iargs, u0, sign, d, h, n, tol, out_u, out_du):
    """du/dy = sign*sqrt(2 I(u)/d); returns index of failure or -1."""
    u = u0
    out_u[0] = u
    v = I(iargs, u)
    out_du[0] = sign * math.sqrt(2.0 * v / d) if v > 0 else 0.0
    for j in range(1, n + 1):
        v1 = I(iargs, u)
        if v1 < -tol:
            return j
        k1 = sign * math.sqrt(2.0 * max(v1, 0.0) / d)
        v2 = I(iargs, u + 0.5 * h * k1)
        if v2 < -tol:
            return j
        k2 = sign * math.sqrt(2.0 * max(v2, 0.0) / d)
        v3 = I(iargs, u + 0.5 * h * k2)
        if v3 < -tol:
            return j
        k3 = sign * math.sqrt(2.0 * max(v3, 0.0) / d)
        v4 = I(iargs, u + h * k3)
        if v4 < -tol:
            return j
        k4 = sign * math.sqrt(2.0 * max(v4, 0.0) / d)
        u = u + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        out_u[j] = u
        v = I(iargs, u)
        if v < -tol:
            return j
        out_du[j] = sign * math.sqrt(2.0 * max(v, 0.0) / d)
    return -1


def _second_order_branch(f, fargs, u0, p0, d, h, n, stop_below, bound, out_u, out_p):
    """u'' = -f(u)/d with RK4.

    Stops after the first step where p < 0 and u < stop_below.  Returns the
    index of the last filled sample, or -(index) on blow-up past ``bound``.
    """
    u = u0
    p = p0
    out_u[0] = u
    out_p[0] = p
    for j in range(1, n + 1):
        k1u = p
        k1p = -f(fargs, u) / d
        k2u = p + 0.5 * h * k1p
        k2p = -f(fargs, u + 0.5 * h * k1u) / d
        k3u = p + 0.5 * h * k2p
        k3p = -f(fargs, u + 0.5 * h * k2u) / d
        k4u = p + h * k3p
        k4p = -f(fargs, u + h * k3u) / d
        u = u + h * (k1u + 2.0 * k2u + 2.0 * k3u + k4u) / 6.0
        p = p + h * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        out_u[j] = u
        out_p[j] = p
        if not (abs(u) <= bound):
            return -j
        if p < 0.0 and u < stop_below:
            return j
    return n


first_order_branch = njit(cache=True)(_first_order_branch)
second_order_branch = njit(cache=True)(_second_order_branch)
first_order_branch_py = _first_order_branch
second_order_branch_py = _second_order_branch


# --- bistable speed shooting -----------------------------------------------

def _shoot_front(g, gargs, c, d, e0, q0, ds, e_stop, nmax, qmin):
    """Integrate d e'' + c e' + g(e) = 0 from (e0, q0) forward in s.

    Here e = K - phi and g(e) = -f(K - e).  Stops when e >= e_stop
    (status 0), when e' <= 0 or e' < qmin away from the start so the
    trajectory turns back or stalls (status 1), or after nmax steps (status 2).  Returns (e, e', status).
    """
    e = e0
    q = q0
    for j in range(nmax):
        k1a = q
        k1b = -(c * q + g(gargs, e)) / d
        k2a = q + 0.5 * ds * k1b
        k2b = -(c * k2a + g(gargs, e + 0.5 * ds * k1a)) / d
        k3a = q + 0.5 * ds * k2b
        k3b = -(c * k3a + g(gargs, e + 0.5 * ds * k2a)) / d
        k4a = q + ds * k3b
        k4b = -(c * k4a + g(gargs, e + ds * k3a)) / d
        e = e + ds * (k1a + 2.0 * k2a + 2.0 * k3a + k4a) / 6.0
        q = q + ds * (k1b + 2.0 * k2b + 2.0 * k3b + k4b) / 6.0
        if q <= 0.0:
            return e, q, 1
        if e >= e_stop:
            return e, q, 0
        if q < qmin and e > 2.0 * e0:
            # settled onto an interior equilibrium: counts as turning back
            return e, q, 1
    return e, q, 2


shoot_front = njit(cache=True)(_shoot_front)
shoot_front_py = _shoot_front


# --- front profile in the travelling coordinate ----------------------------

def _front_rk4(f, fargs, phi0, p0, c, d, ds, first, n, out_phi, out_p):
    """phi' = p, d p' = -c p - f(phi).  The first step has size ``first``."""
    phi = phi0
    p = p0
    out_phi[0] = phi
    out_p[0] = p
    for j in range(1, n + 1):
        hs = first if j == 1 else ds
        k1a = p
        k1b = -(c * p + f(fargs, phi)) / d
        k2a = p + 0.5 * hs * k1b
        k2b = -(c * k2a + f(fargs, phi + 0.5 * hs * k1a)) / d
        k3a = p + 0.5 * hs * k2b
        k3b = -(c * k3a + f(fargs, phi + 0.5 * hs * k2a)) / d
        k4a = p + hs * k3b
        k4b = -(c * k4a + f(fargs, phi + hs * k3a)) / d
        phi = phi + hs * (k1a + 2.0 * k2a + 2.0 * k3a + k4a) / 6.0
        p = p + hs * (k1b + 2.0 * k2b + 2.0 * k3b + k4b) / 6.0
        out_phi[j] = phi
        out_p[j] = p
    return n


def _front_until(f, fargs, phi0, p0, c, d, ds, target, increasing, nmax):
    """Integrate until phi crosses ``target``; return (steps, overshoot time).

    The returned time is the total integration length to the crossing,
    refined by secant iteration on the final partial step.
    """
    phi = phi0
    p = p0
    for j in range(nmax):
        k1a = p
        k1b = -(c * p + f(fargs, phi)) / d
        k2a = p + 0.5 * ds * k1b
        k2b = -(c * k2a + f(fargs, phi + 0.5 * ds * k1a)) / d
        k3a = p + 0.5 * ds * k2b
        k3b = -(c * k3a + f(fargs, phi + 0.5 * ds * k2a)) / d
        k4a = p + ds * k3b
        k4b = -(c * k4a + f(fargs, phi + ds * k3a)) / d
        nphi = phi + ds * (k1a + 2.0 * k2a + 2.0 * k3a + k4a) / 6.0
        np_ = p + ds * (k1b + 2.0 * k2b + 2.0 * k3b + k4b) / 6.0
        crossed = (nphi >= target) if increasing else (nphi <= target)
        if crossed:
            # secant on the partial step length tau in (0, ds]
            ta = 0.0
            ga = phi - target
            tb = ds
            gb = nphi - target
            for _ in range(60):
                if gb == ga:
                    break
                tc = tb - gb * (tb - ta) / (gb - ga)
                q1a = p
                q1b = -(c * p + f(fargs, phi)) / d
                q2a = p + 0.5 * tc * q1b
                q2b = -(c * q2a + f(fargs, phi + 0.5 * tc * q1a)) / d
                q3a = p + 0.5 * tc * q2b
                q3b = -(c * q3a + f(fargs, phi + 0.5 * tc * q2a)) / d
                q4a = p + tc * q3b
                gc = phi + tc * (q1a + 2.0 * q2a + 2.0 * q3a + q4a) / 6.0 - target
                ta, ga, tb, gb = tb, gb, tc, gc
                if abs(gc) < 1e-15 * (1.0 + abs(target)):
                    break
            return j, j * ds + tb
        if not (math.isfinite(nphi) and math.isfinite(np_)):
            return -1, 0.0
        phi = nphi
        p = np_
    return -1, 0.0


front_rk4 = njit(cache=True)(_front_rk4)
front_until = njit(cache=True)(_front_until)
front_rk4_py = _front_rk4
front_until_py = _front_until


# --- explicit Euler for the two-patch Cauchy problem -----------------------

@njit(cache=True, nogil=True)
def cauchy_advance(u, work, nl, h, dt, d1, d2, sigma, c1, c2, nsteps, order,
                   expand, thresh, clipped):
    """Advance ``u`` in place by up to ``nsteps`` explicit steps.

    Returns (steps_done, status) with status 0 on completion, 1 when a side
    needs expansion, 2 on negativity beyond -1e-12, 3 on non-finite values.
    ``clipped[0]`` accumulates the number of clipped undershoots.
    """
    n = u.shape[0]
    last = n - 1
    l1 = dt * d1 / (h * h)
    l2 = dt * d2 / (h * h)
    for s in range(nsteps):
        for j in range(n):
            if j == nl:
                continue
            if j < nl:
                lam = l1
                fu = horner(c1, u[j])
            else:
                lam = l2
                fu = horner(c2, u[j])
            left = u[j - 1] if j > 0 else u[1]
            right = u[j + 1] if j < last else u[last - 1]
            v = u[j] + lam * (left - 2.0 * u[j] + right) + dt * fu
            work[j] = v
        if order == 1:
            work[nl] = (work[nl - 1] + sigma * work[nl + 1]) / (1.0 + sigma)
        else:
            work[nl] = (4.0 * work[nl - 1] - work[nl - 2]
                        + sigma * (4.0 * work[nl + 1] - work[nl + 2])) / (3.0 * (1.0 + sigma))
        for j in range(n):
            v = work[j]
            if not math.isfinite(v):
                return s + 1, 3
            if v < 0.0:
                if v < -1e-12:
                    return s + 1, 2
                clipped[0] += 1
                v = 0.0
            elif v < 1e-200:
                v = 0.0
            u[j] = v
        if expand:
            mx = 0.0
            for j in range(10):
                if u[j] > mx:
                    mx = u[j]
                if u[last - j] > mx:
                    mx = u[last - j]
            if mx > thresh:
                return s + 1, 1
    return nsteps, 0


def cauchy_step_numpy(u, nl, h, dt, d1, d2, sigma, f1, f2, order):
    """One explicit step with vectorised numpy; used for custom reactions."""
    ext = np.empty(u.shape[0] + 2)
    ext[1:-1] = u
    ext[0] = u[1]
    ext[-1] = u[-2]
    lap = (ext[:-2] - 2.0 * u + ext[2:]) / (h * h)
    new = np.empty_like(u)
    new[:nl] = u[:nl] + dt * (d1 * lap[:nl] + f1(u[:nl]))
    new[nl + 1:] = u[nl + 1:] + dt * (d2 * lap[nl + 1:] + f2(u[nl + 1:]))
    if order == 1:
        new[nl] = (new[nl - 1] + sigma * new[nl + 1]) / (1.0 + sigma)
    else:
        new[nl] = (4.0 * new[nl - 1] - new[nl - 2]
                   + sigma * (4.0 * new[nl + 1] - new[nl + 2])) / (3.0 * (1.0 + sigma))
    return new
