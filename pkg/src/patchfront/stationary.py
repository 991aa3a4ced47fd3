"""Stationary solutions of the two-patch problem built from first integrals.

Each branch of a steady state solves ``d u'' + f(u) = 0`` on one side of the
interface and satisfies ``(d/2) u'^2 = int_u^limit f``.  Monotone stretches
are integrated in that first-order form, which is stable towards the limit;
stretches through a turning point use the second-order form.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicHermiteSpline

from . import _kernels as _k
from .errors import ConfigError, NumericalError, TheoremViolation
from .reaction import MassSign, Reaction, Verdict, theta_star

ROOT_TOL = 1e-12
SCAN_CELLS = 1000


class NotAConnection(NumericalError):
    """Integration from a candidate interface value does not reach its limit."""


@dataclass(frozen=True)
class PatchModel:
    d1: float
    d2: float
    sigma: float
    f1: Reaction
    f2: Reaction

    def __post_init__(self):
        for name in ("d1", "d2", "sigma"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive real, got {v!r}")

    @property
    def coupling(self) -> float:
        """The factor d1 sigma^2 / d2 in the interface balance."""
        return self.d1 * self.sigma ** 2 / self.d2

    def side(self, i: int) -> Tuple[float, Reaction]:
        return (self.d1, self.f1) if i == 1 else (self.d2, self.f2)


class ProfileKind(enum.Enum):
    CONN_K_TO_ZERO = "ConnKtoZero"
    CONN_K_TO_K = "ConnKtoK"
    HALF_BUMP = "HalfBump"


class Rule(enum.Enum):
    MASS_NEGATIVE = "mass_negative"
    BALANCED_K1_LT_K2 = "balanced_K1_lt_K2"
    POSITIVE_K1_LE_THETA_STAR = "positive_K1_le_theta_star"
    DEGENERATE = "degenerate"
    ROOT_OUTSIDE_CLAUSES = "root_outside_clauses"
    NO_ROOT = "no_root"


@dataclass(frozen=True)
class ExistenceVerdict:
    exists: bool
    rule: Rule
    roots: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class StationaryProfile:
    """A sampled steady state.

    ``x_left``/``u_left``/``du_left`` run from the interface outwards to
    ``-L_left``; the right arrays run from the interface to ``L_right``.  For
    a half bump only the right arrays are used and the profile is even.
    """

    kind: ProfileKind
    xi: float
    slope_left: float
    slope_right: float
    left_limit: float
    right_limit: float
    h: float
    x_left: np.ndarray = field(repr=False)
    u_left: np.ndarray = field(repr=False)
    du_left: np.ndarray = field(repr=False)
    x_right: np.ndarray = field(repr=False)
    u_right: np.ndarray = field(repr=False)
    du_right: np.ndarray = field(repr=False)
    radius: Optional[float] = None

    def __post_init__(self):
        for name in ("x_left", "u_left", "du_left", "x_right", "u_right", "du_right"):
            getattr(self, name).setflags(write=False)
        object.__setattr__(self, "_spl_left", _spline(self.x_left[::-1], self.u_left[::-1],
                                                      self.du_left[::-1]))
        object.__setattr__(self, "_spl_right", _spline(self.x_right, self.u_right, self.du_right))

    @property
    def L_tail(self) -> float:
        return float(self.x_right[-1])

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.x_left[:0:-1], self.x_right])

    @property
    def u(self) -> np.ndarray:
        return np.concatenate([self.u_left[:0:-1], self.u_right])

    @property
    def samples(self) -> List[Tuple[float, float]]:
        return list(zip(self.x.tolist(), self.u.tolist()))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        right = x >= 0
        xr = x[right]
        out[right] = np.where(xr > self.x_right[-1], self.right_limit, self._spl_right(
            np.minimum(xr, self.x_right[-1])))
        xl = x[~right]
        lo = self.x_left[-1]
        out[~right] = np.where(xl < lo, self.left_limit, self._spl_left(np.maximum(xl, lo)))
        if self.kind is ProfileKind.HALF_BUMP:
            # the last Hermite cell can dip below zero by roundoff
            np.maximum(out, 0.0, out=out)
        return out if out.ndim else float(out)


def _spline(x, u, du):
    if len(x) < 2:
        return lambda z: np.full_like(np.asarray(z, dtype=float), u[0])
    return CubicHermiteSpline(x, u, du, extrapolate=True)


# --- residual diagnostics ----------------------------------------------------

def second_difference(u: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order five-point second derivative at interior points 2..n-3."""
    return (-u[:-4] + 16 * u[1:-3] - 30 * u[2:-2] + 16 * u[3:-1] - u[4:]) / (12 * h * h)


def ode_residual(p: StationaryProfile, m: Optional[PatchModel] = None,
                 f2: Optional[Reaction] = None, d2: Optional[float] = None) -> float:
    """Max of |d u'' + f(u)| over interior samples of both branches."""
    if p.kind is ProfileKind.HALF_BUMP:
        if f2 is None:
            f2, d2 = m.f2, m.d2
        u = np.concatenate([p.u_right[:0:-1], p.u_right])
        return float(np.max(np.abs(d2 * second_difference(u, p.h) + f2(u[2:-2]))))
    worst = 0.0
    for u, (d, f) in ((p.u_left, m.side(1)), (p.u_right, m.side(2))):
        if len(u) >= 5:
            worst = max(worst, float(np.max(np.abs(d * second_difference(u, p.h) + f(u[2:-2])))))
    return worst


def first_integral_defect(p: StationaryProfile, m: PatchModel) -> float:
    """Spread of (d/2) u'^2 - int_u^limit f along each branch."""
    worst = 0.0
    for u, du, limit, (d, f) in ((p.u_left, p.du_left, p.left_limit, m.side(1)),
                                 (p.u_right, p.du_right, p.right_limit, m.side(2))):
        I = f.energy(limit)
        vals = 0.5 * d * du ** 2 - np.array([I(v) for v in u])
        worst = max(worst, float(np.max(vals) - np.min(vals)))
    return worst


# --- interface equations -----------------------------------------------------

def _check_kpp_or_positive_bistable(f1: Reaction) -> None:
    c = f1.classify()
    if c.verdict is Verdict.KPP:
        return
    if c.verdict is Verdict.BISTABLE and c.mass_sign is MassSign.POSITIVE:
        return
    raise ConfigError("f1 must be KPP, or bistable with positive mass")


def _scan_roots(g, lo: float, hi: float, include_lo: bool, include_hi: bool,
                cells: int = SCAN_CELLS) -> List[float]:
    xs = np.linspace(lo, hi, cells + 1)
    vals = np.array([g(x) for x in xs])
    roots: List[float] = []
    for j in range(cells + 1):
        if vals[j] == 0.0 and (0 < j < cells or (j == 0 and include_lo)
                               or (j == cells and include_hi)):
            roots.append(float(xs[j]))
    for j in range(cells):
        a, b = vals[j], vals[j + 1]
        if a * b < 0:
            r = optimize.brentq(g, xs[j], xs[j + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                maxiter=200)
            if abs(g(r)) >= ROOT_TOL:
                raise NumericalError(f"root refinement stalled at {r} with residual {g(r)}")
            roots.append(float(r))
    roots.sort()
    out: List[float] = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-9 * max(1.0, abs(r)):
            out.append(r)
    return out


def interface_residual_U(m: PatchModel):
    """xi -> int_xi^K1 f1 + (d1 sigma^2/d2) int_0^xi f2."""
    E1 = m.f1.energy(m.f1.K)
    c = m.coupling
    return lambda xi: E1(xi) + c * m.f2.mass(0.0, xi)


def interface_residual_V(m: PatchModel):
    """xi -> int_xi^K1 f1 - (d1 sigma^2/d2) int_xi^K2 f2."""
    E1 = m.f1.energy(m.f1.K)
    E2 = m.f2.energy(m.f2.K)
    c = m.coupling
    return lambda xi: E1(xi) - c * E2(xi)


def solve_interface_value_U(m: PatchModel) -> ExistenceVerdict:
    """Find every interface value of a steady state connecting K1 to 0."""
    _check_kpp_or_positive_bistable(m.f1)
    c2 = m.f2.classify()
    if c2.verdict is not Verdict.BISTABLE:
        raise ConfigError("f2 must be bistable")
    K1, K2 = m.f1.K, m.f2.K
    G = interface_residual_U(m)
    ts = None
    if c2.mass_sign is MassSign.NEGATIVE:
        hi, closed = K1, False
        clause = Rule.MASS_NEGATIVE
    elif c2.mass_sign is MassSign.ZERO:
        hi, closed = min(K1, K2), False
        clause = Rule.BALANCED_K1_LT_K2 if K1 < K2 else None
    else:
        ts = c2.theta_star
        hi, closed = ts, True
        clause = Rule.POSITIVE_K1_LE_THETA_STAR if K1 <= ts * (1 + 1e-12) else None
    roots = _scan_roots(G, 0.0, hi, include_lo=False, include_hi=False)
    if closed and abs(G(hi)) < ROOT_TOL and (not roots or abs(roots[-1] - hi) > 1e-9):
        roots.append(float(hi))
    degenerate = ts is not None and abs(K1 - ts) <= 1e-9 * K1 and any(
        abs(r - ts) <= 1e-9 * ts for r in roots)
    if degenerate:
        roots = [ts if abs(r - ts) <= 1e-9 * ts else r for r in roots]
    if roots:
        rule = Rule.DEGENERATE if degenerate else (clause or Rule.ROOT_OUTSIDE_CLAUSES)
        return ExistenceVerdict(True, rule, tuple(roots))
    if clause is not None:
        raise TheoremViolation(
            f"existence clause {clause.value} holds but no interface value was found")
    return ExistenceVerdict(False, Rule.NO_ROOT, ())


def _v_hypotheses_hold(m: PatchModel) -> bool:
    v1 = m.f1.classify()
    v2 = m.f2.classify()
    if v1.verdict is Verdict.KPP and v2.verdict is Verdict.KPP:
        return True
    if v2.verdict is Verdict.BISTABLE and v2.mass_sign is not MassSign.NEGATIVE:
        if v1.verdict is Verdict.KPP:
            return True
        if v1.verdict is Verdict.BISTABLE and v1.mass_sign is not MassSign.NEGATIVE:
            return True
    return False


def solve_interface_value_V(m: PatchModel, strict: bool = True) -> List[float]:
    """Interface values of steady states connecting K1 to K2.

    When the existence hypotheses hold and nothing is found, a
    :class:`TheoremViolation` is raised (``strict``) so the failure is loud.
    """
    hyp = _v_hypotheses_hold(m)
    K1, K2 = m.f1.K, m.f2.K
    if K1 == K2:
        return [K1]
    H = interface_residual_V(m)
    lo, hi = min(K1, K2), max(K1, K2)
    roots = _scan_roots(H, lo, hi, include_lo=False, include_hi=False)
    if not roots and hyp and strict:
        raise TheoremViolation("existence hypotheses for V hold but no interface value was found")
    return roots


# --- branch integration ------------------------------------------------------

def default_step(m: PatchModel) -> float:
    bound = max(m.f1.K, m.f2.K)
    mx = max(m.f1.max_abs_deriv(0.0, bound), m.f2.max_abs_deriv(0.0, bound))
    return 1e-3 * min(1.0, 1.0 / math.sqrt(mx)) if mx > 0 else 1e-3


def decay_rate(f: Reaction, d: float, eq: float) -> float:
    return math.sqrt(abs(float(f.deriv(eq))) / d)


def default_tail(rates: Sequence[float]) -> float:
    mu = min(r for r in rates)
    if not mu > 0:
        raise NumericalError("degenerate linearisation: zero decay rate at a limit state")
    return max(40.0 / math.sqrt(mu), 30.0 / mu)


def _energy_tol(f: Reaction, limit: float, u0: float) -> float:
    scale = abs(f.mass(min(u0, limit), max(u0, limit))) + abs(f.K) ** 2 * 1e-3
    return 1e-13 * max(scale, 1.0)


def _monotone_branch(f: Reaction, d: float, u0: float, limit: float, h: float, n: int):
    """Sample u(y), y = 0..n*h, moving monotonically from u0 towards limit."""
    u = np.empty(n + 1)
    du = np.empty(n + 1)
    if u0 == limit:
        u[:] = limit
        du[:] = 0.0
        return u, du
    sign = 1.0 if limit > u0 else -1.0
    compiled, fn, args = f.kernel_energy(limit)
    kern = _k.first_order_branch if compiled else _k.first_order_branch_py
    bad = kern(fn, args, float(u0), sign, float(d), float(h), int(n),
               _energy_tol(f, limit, u0), u, du)
    if bad >= 0:
        raise NotAConnection(
            f"first integral turns negative at step {bad}: u={u[max(bad - 1, 0)]} "
            f"does not connect to {limit}")
    return u, du


def _turning_branch(f: Reaction, d: float, u0: float, p0: float, h: float, n: int,
                    switch_below: float, bound: float):
    """Second-order integration through a maximum, then first-order descent to 0."""
    u = np.empty(n + 1)
    p = np.empty(n + 1)
    compiled, fn, args = f.kernel_eval()
    kern = _k.second_order_branch if compiled else _k.second_order_branch_py
    j = kern(fn, args, float(u0), float(p0), float(d), float(h), int(n), switch_below,
             bound, u, p)
    if j < 0:
        raise NotAConnection(f"integration blew up past {bound} at step {-j}")
    if j == n:
        if u[-1] > switch_below:
            raise NotAConnection("branch did not turn back towards 0")
        return u, p
    tail_u, tail_du = _monotone_branch(f, d, u[j], 0.0, h, n - j)
    u[j:] = tail_u
    p[j:] = tail_du
    return u, p


def _assemble(kind, xi, sl, sr, ll, rl, h, ul, dul, ur, dur, radius=None):
    nl, nr = len(ul) - 1, len(ur) - 1
    return StationaryProfile(
        kind=kind, xi=float(xi), slope_left=float(sl), slope_right=float(sr),
        left_limit=float(ll), right_limit=float(rl), h=float(h),
        x_left=-h * np.arange(nl + 1), u_left=ul, du_left=-dul,
        x_right=h * np.arange(nr + 1), u_right=ur, du_right=dur, radius=radius)


def _tail_check(p: StationaryProfile) -> None:
    el = abs(p.u_left[-1] - p.left_limit)
    er = abs(p.u_right[-1] - p.right_limit)
    if el >= 1e-6 or er >= 1e-6:
        raise NumericalError(f"tails not converged (left {el:.2e}, right {er:.2e}); "
                             "increase L_tail")


def _sgn(x: float) -> float:
    return (x > 0) - (x < 0)


def construct_U(m: PatchModel, xi: float, L_tail: Optional[float] = None,
                h: Optional[float] = None) -> StationaryProfile:
    """Sample the steady state with U(0)=xi, U(-inf)=K1, U(+inf)=0."""
    K1, K2 = m.f1.K, m.f2.K
    if not 0 < xi < max(K1, K2) * (1 + 1e-12):
        raise ConfigError(f"interface value {xi} outside (0, max(K1, K2))")
    h = h or default_step(m)
    if L_tail is None:
        L_tail = default_tail([decay_rate(m.f1, m.d1, K1), decay_rate(m.f2, m.d2, 0.0)])
    n = int(math.ceil(L_tail / h))
    E1 = m.f1.energy(K1)
    m2 = m.f2.mass(0.0, xi)
    e1 = E1(xi)
    if e1 < -ROOT_TOL or m2 > ROOT_TOL:
        raise NotAConnection(f"xi={xi} violates the sign conditions of the first integrals")
    s = _sgn(xi - K1)
    sr = s * math.sqrt(max(-2.0 * m2 / m.d2, 0.0))
    sl = s * math.sqrt(max(2.0 * e1 / m.d1, 0.0))
    ul, dul = _monotone_branch(m.f1, m.d1, xi, K1, h, n)
    if s < 0:
        ur, dur = _monotone_branch(m.f2, m.d2, xi, 0.0, h, n)
    else:
        ts = theta_star(m.f2)
        ur, dur = _turning_branch(m.f2, m.d2, xi, sr, h, n, 0.5 * ts, 10 * max(K1, K2))
    dur[0] = sr
    dul[0] = -sl
    p = _assemble(ProfileKind.CONN_K_TO_ZERO, xi, sl, sr, K1, 0.0, h, ul, dul, ur, dur)
    _tail_check(p)
    return p


def construct_V(m: PatchModel, xi: float, L_tail: Optional[float] = None,
                h: Optional[float] = None) -> StationaryProfile:
    """Sample the steady state with V(0)=xi, V(-inf)=K1, V(+inf)=K2."""
    K1, K2 = m.f1.K, m.f2.K
    lo, hi = min(K1, K2), max(K1, K2)
    if not lo <= xi <= hi:
        raise ConfigError(f"interface value {xi} outside [{lo}, {hi}]")
    h = h or default_step(m)
    if L_tail is None:
        L_tail = default_tail([decay_rate(m.f1, m.d1, K1), decay_rate(m.f2, m.d2, K2)])
    n = int(math.ceil(L_tail / h))
    e1 = m.f1.energy(K1)(xi)
    e2 = m.f2.energy(K2)(xi)
    if e1 < -ROOT_TOL or e2 < -ROOT_TOL:
        raise NotAConnection(f"xi={xi} violates the sign conditions of the first integrals")
    s = _sgn(xi - K1)
    sl = s * math.sqrt(max(2.0 * e1 / m.d1, 0.0))
    sr = s * math.sqrt(max(2.0 * e2 / m.d2, 0.0))
    ul, dul = _monotone_branch(m.f1, m.d1, xi, K1, h, n)
    ur, dur = _monotone_branch(m.f2, m.d2, xi, K2, h, n)
    dul[0] = -sl
    dur[0] = sr
    p = _assemble(ProfileKind.CONN_K_TO_K, xi, sl, sr, K1, K2, h, ul, dul, ur, dur)
    _tail_check(p)
    return p


def half_bump_radius(f2: Reaction, d2: float, psi0: float) -> float:
    """R = int_0^psi0 du / sqrt((2/d2) int_u^psi0 f2), via u = psi0 - v^2."""
    I = f2.energy(psi0)
    fp = float(f2(psi0))

    def integrand(v):
        if v == 0.0:
            return 2.0 / math.sqrt(2.0 * fp / d2)
        val = I(psi0 - v * v)
        if val <= 0:
            raise NotAConnection("first integral turns non-positive below psi0")
        return 2.0 * v / math.sqrt(2.0 * val / d2)

    R, err = integrate.quad(integrand, 0.0, math.sqrt(psi0), epsabs=1e-13, epsrel=1e-13,
                            limit=200)
    return float(R)


def construct_half_bump(f2: Reaction, d2: float, psi0: float,
                        h: Optional[float] = None) -> StationaryProfile:
    """Even compactly supported steady state with max psi0 on [-R, R]."""
    c = f2.classify()
    if c.verdict is not Verdict.BISTABLE or c.mass_sign is not MassSign.POSITIVE:
        raise ConfigError("half bump needs a bistable reaction with positive mass")
    ts = c.theta_star
    if not ts < psi0 < f2.K:
        raise ConfigError(f"psi0={psi0} outside ({ts}, {f2.K}): R diverges or the first "
                          "integral turns negative")
    R = half_bump_radius(f2, d2, psi0)
    if not math.isfinite(R):
        raise NumericalError("half-bump radius diverged")
    if h is None:
        h = 1e-3 * min(1.0, 1.0 / math.sqrt(f2.max_abs_deriv(0.0, f2.K)))
    n = int(math.ceil(R / h))
    h_eff = R / n
    u = np.empty(n + 1)
    p = np.empty(n + 1)
    compiled, fn, args = f2.kernel_eval()
    kern = _k.second_order_branch if compiled else _k.second_order_branch_py
    j = kern(fn, args, float(psi0), 0.0, float(d2), h_eff, n, -np.inf, 10 * f2.K, u, p)
    if j != n:
        raise NotAConnection("half-bump integration failed")
    if abs(u[-1]) >= 1e-8:
        raise NumericalError(f"half-bump endpoint value {u[-1]:.3e} not below 1e-8")
    u[-1] = max(u[-1], 0.0)
    xs = h_eff * np.arange(n + 1)
    xs[-1] = R
    return StationaryProfile(
        kind=ProfileKind.HALF_BUMP, xi=float(psi0), slope_left=0.0, slope_right=0.0,
        left_limit=0.0, right_limit=0.0, h=h_eff,
        x_left=-xs, u_left=u.copy(), du_left=-p.copy(),
        x_right=xs, u_right=u, du_right=p, radius=R)


__all__ = [
    "PatchModel", "StationaryProfile", "ExistenceVerdict", "ProfileKind", "Rule",
    "NotAConnection", "solve_interface_value_U", "solve_interface_value_V", "construct_U",
    "construct_V", "construct_half_bump", "half_bump_radius", "ode_residual",
    "first_integral_defect", "interface_residual_U", "interface_residual_V",
]
