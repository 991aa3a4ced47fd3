"""Travelling fronts of the homogeneous equations d u'' + c u' + f(u) = 0.

Bistable speeds come from shooting in e = K - phi along the unstable
manifold of K and matching the stable manifold of 0.  The profile
is then assembled from two numerically stable halves: one leaving K forward
in s and one leaving 0 backward in s, glued where phi = theta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy import optimize
from scipy.interpolate import PchipInterpolator

from . import _kernels as _k
from .errors import ConfigError, NumericalError
from .reaction import MassSign, Reaction, Verdict

ZERO_SPEED = 1e-9
SHOOT_STEP = 2e-2
MANIFOLD_OFFSET = 1e-8
STOP_FRACTION = 1e-4


@dataclass(frozen=True)
class KppFrontData:
    c_star: float
    growth: float
    d: float

    def lambda_c(self, c: float) -> float:
        if c < self.c_star * (1 - 1e-14):
            raise ValueError(f"lambda_c needs c >= c* = {self.c_star}")
        disc = max(c * c - 4.0 * self.d * self.growth, 0.0)
        return (c - math.sqrt(disc)) / (2.0 * self.d)


@dataclass(frozen=True, eq=False)
class FrontProfile:
    c: float
    K: float
    theta: float
    d: float
    decay_alpha: float
    decay_beta: float
    tail_a0: float
    tail_a1: float
    tail_b0: float
    tail_b1: float
    s: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)

    def __post_init__(self):
        for a in (self.s, self.phi, self.dphi):
            a.setflags(write=False)
        object.__setattr__(self, "_interp", PchipInterpolator(self.s, self.phi,
                                                             extrapolate=False))

    @property
    def samples(self) -> List[Tuple[float, float]]:
        return list(zip(self.s.tolist(), self.phi.tolist()))

    def __call__(self, s):
        return front_eval(self, s)


def _rates(c: float, d: float, f: Reaction) -> Tuple[float, float]:
    a = (c + math.sqrt(c * c - 4.0 * d * float(f.deriv(0.0)))) / (2.0 * d)
    b = (-c + math.sqrt(c * c - 4.0 * d * float(f.deriv(f.K)))) / (2.0 * d)
    return a, b


def _require_bistable(f: Reaction):
    cls = f.classify()
    if cls.verdict is not Verdict.BISTABLE:
        raise ConfigError("travelling-front shooting needs a bistable reaction")
    return cls


def _second_derivative(f: Reaction, u: float) -> float:
    p = f.poly
    if p is not None:
        return float(p.deriv(2)(u))
    h = 1e-5 * f.K
    return float((f.deriv(u + h) - f.deriv(u - h)) / (2 * h))


def shooting_step(f: Reaction, d: float) -> float:
    return SHOOT_STEP / max(1.0, math.sqrt(f.max_abs_deriv(0.0, f.K) / d))


def bistable_speed(f: Reaction, d: float, tol: float = 1e-10, ds: float = None) -> float:
    """The unique front speed of a bistable reaction, by Brent root finding on shooting.

    For each trial c the trajectory leaves K along its unstable manifold and
    is followed until phi falls to a small level phi_s, where its slope is
    compared with the stable manifold of 0 expanded to second order.
    """
    _require_bistable(f)
    if not d > 0:
        raise ConfigError("diffusivity must be positive")
    K = f.K
    eps = MANIFOLD_OFFSET * K
    phi_s = STOP_FRACTION * K
    dK, d0 = float(f.deriv(K)), float(f.deriv(0.0))
    ddK, dd0 = _second_derivative(f, K), _second_derivative(f, 0.0)
    compiled, fn, args = _reflected_kernel(f)
    kern = _k.shoot_front if compiled else _k.shoot_front_py
    ds = ds or shooting_step(f, d)

    def shoot(c: float) -> float:
        # positive when the trajectory passes above the stable manifold of 0
        beta = (-c + math.sqrt(c * c - 4.0 * d * dK)) / (2.0 * d)
        q2 = ddK / (2.0 * (3.0 * d * beta + c))
        alpha = (c + math.sqrt(c * c - 4.0 * d * d0)) / (2.0 * d)
        # generous cap: a connection needs about log(1/offset)/beta + log(1/stop)/alpha
        horizon = 20.0 * (math.log(1.0 / MANIFOLD_OFFSET) / beta
                          + math.log(1.0 / STOP_FRACTION) / alpha + 10.0)
        nmax = int(horizon / ds) + 1
        e, q, status = kern(fn, args, c, d, eps, beta * eps + q2 * eps * eps, ds, K - phi_s,
                            nmax, 1e-14 * K)
        if status != 0:
            return -1.0
        phi = K - e
        p2 = -dd0 / (2.0 * (c - 3.0 * d * alpha))
        return q - (alpha * phi - p2 * phi * phi)

    scale = math.sqrt(d * f.max_abs_deriv(0.0, K))
    bound = 10.0 * scale
    # widen from the natural speed scale; distant trial speeds are the slow shots
    width = scale
    while True:
        lo, hi = -width, width
        if shoot(lo) > 0 and shoot(hi) <= 0:
            break
        if width >= bound:
            raise NumericalError(f"no speed bracket found in |c| <= {bound}")
        width = min(2.0 * width, bound)
    c = optimize.brentq(shoot, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)
    return 0.0 if abs(c) < ZERO_SPEED else c


def _reflected_kernel(f: Reaction):
    """Kernel evaluator for g(e) = -f(K - e), the reaction seen by e = K - phi."""
    p = f.poly
    if p is not None:
        from numpy.polynomial import Polynomial
        g = -p(Polynomial([f.K, -1.0]))
        return True, _k.horner, np.ascontiguousarray(g.coef[::-1], dtype=float)
    fn, K = f.eval_fn, f.K
    return False, (lambda _a, e: -float(fn(K - e))), None


def _half(kernel, c: float, d: float, start: Tuple[float, float], ds: float,
          target: float, increasing: bool):
    """Integrate from ``start`` with step ``ds`` (sign gives direction) to phi=target.

    Returns arrays ordered from the start point to the target, with the last
    sample exactly at the crossing.
    """
    compiled, fn, args = kernel
    until = _k.front_until if compiled else _k.front_until_py
    rk4 = _k.front_rk4 if compiled else _k.front_rk4_py
    nmax = int(2e7)
    j, total = until(fn, args, start[0], start[1], c, d, ds, target, increasing, nmax)
    if j < 0:
        raise NumericalError("front profile integration never reached theta")
    steps = int(math.floor(total / ds + 1e-9))
    first = total - steps * ds
    if abs(first) < 1e-12 * abs(ds):
        first, n = ds, steps
    else:
        n = steps + 1
    phi = np.empty(n + 1)
    p = np.empty(n + 1)
    rk4(fn, args, start[0], start[1], c, d, ds, first, n, phi, p)
    return phi, p, first


def bistable_front(f: Reaction, d: float, speed: float = None) -> FrontProfile:
    """Speed, sampled profile with phi(0)=theta, and tail data of the front."""
    cls = _require_bistable(f)
    if speed is None:
        # a finer shooting step keeps the slope jump at the glue point negligible
        c = bistable_speed(f, d, tol=1e-12, ds=0.25 * shooting_step(f, d))
    else:
        c = float(speed)
    K = f.K
    theta = f.unstable_zero()
    alpha, beta = _rates(c, d, f)
    ds = 1e-3 / max(1.0, math.sqrt(f.max_abs_deriv(0.0, K) / d))
    eps = 1e-10 * K
    # left half in e = K - phi, which keeps full precision near K: e' = beta e
    eL, qL, firstL = _half(_reflected_kernel(f), c, d, (eps, beta * eps), ds, K - theta, True)
    phiL, pL = K - eL, -qL
    phiL[-1] = theta if abs(eL[-1] - (K - theta)) <= 1e-10 else phiL[-1]
    # right half: leave 0 backward in s, p = -alpha phi
    phiR, pR, firstR = _half(f.kernel_eval(), c, d, (eps, -alpha * eps), -ds, theta, True)
    # grid: left samples sit at s = -(total_L) ... 0; the first step is partial
    nL = len(phiL) - 1
    sL = -ds * np.arange(nL, -1, -1, dtype=float)
    sL[0] = -(ds * (nL - 1) + firstL)
    nR = len(phiR) - 1
    sR = ds * np.arange(nR, -1, -1, dtype=float)
    sR[0] = ds * (nR - 1) + abs(firstR)
    # drop the unevenly spaced first samples so the stored grid is uniform
    s = np.concatenate([sL[1:], sR[::-1][1:-1]])
    phi = np.concatenate([phiL[1:], phiR[::-1][1:-1]])
    dphi = np.concatenate([pL[1:], pR[::-1][1:-1]])
    phi[nL - 1] = theta
    if abs(phiL[-1] - theta) > 1e-10 or abs(phiR[-1] - theta) > 1e-10:
        raise NumericalError("front normalisation phi(0)=theta not reached")
    if not np.all(np.diff(phi) < 0):
        raise NumericalError("front profile is not strictly decreasing")
    right = s > 0
    left = s < 0
    ra = phi[right] * np.exp(alpha * s[right])
    rb = (K - phi[left]) * np.exp(-beta * s[left])
    return FrontProfile(
        c=c, K=K, theta=theta, d=d, decay_alpha=alpha, decay_beta=beta,
        tail_a0=float(ra.min()), tail_a1=float(ra.max()),
        tail_b0=float(rb.min()), tail_b1=float(rb.max()),
        s=s, phi=phi, dphi=dphi)


def front_residual(p: FrontProfile, f: Reaction) -> float:
    """Max |d phi'' + c phi' + f(phi)| at interior samples."""
    ds = p.s[1] - p.s[0]
    u = p.phi
    d2 = (-u[:-4] + 16 * u[1:-3] - 30 * u[2:-2] + 16 * u[3:-1] - u[4:]) / (12 * ds * ds)
    d1 = (u[:-4] - 8 * u[1:-3] + 8 * u[3:-1] - u[4:]) / (12 * ds)
    return float(np.max(np.abs(p.d * d2 + p.c * d1 + f(u[2:-2]))))


def front_eval(p: FrontProfile, s):
    """Profile value at s: monotone interpolation inside, exponential tails outside."""
    s = np.asarray(s, dtype=float)
    lo, hi = p.s[0], p.s[-1]
    inside = p._interp(np.clip(s, lo, hi))
    left = p.K - (p.K - p.phi[0]) * np.exp(p.decay_beta * (np.minimum(s, lo) - lo))
    right = p.phi[-1] * np.exp(-p.decay_alpha * (np.maximum(s, hi) - hi))
    out = np.where(s < lo, left, np.where(s > hi, right, inside))
    return out if out.ndim else float(out)


def kpp_speed(f: Reaction, d: float) -> KppFrontData:
    if f.classify().verdict is not Verdict.KPP:
        raise ConfigError("kpp_speed needs a KPP reaction")
    g = float(f.deriv(0.0))
    return KppFrontData(c_star=2.0 * math.sqrt(d * g), growth=g, d=float(d))


def speed_sign(c: float) -> int:
    return 0 if abs(c) < ZERO_SPEED else (1 if c > 0 else -1)


def mass_sign_int(f: Reaction) -> int:
    return {MassSign.NEGATIVE: -1, MassSign.ZERO: 0, MassSign.POSITIVE: 1}[f.mass_sign()]


__all__ = ["FrontProfile", "KppFrontData", "bistable_speed", "bistable_front", "front_eval",
           "front_residual", "kpp_speed", "speed_sign"]
