"""Observables extracted from trajectories and the density scaling map."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .cauchy import Field, Trajectory
from .errors import ConfigError, NumericalError, PatchfrontError
from .reaction import Reaction
from .stationary import PatchModel, StationaryProfile, construct_V, solve_interface_value_V
from .waves import FrontProfile, front_eval


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class Regime(enum.Enum):
    EXTINCTION = "Extinction"
    BLOCKED = "Blocked"
    VIRTUAL_BLOCKING = "VirtualBlocking"
    PROPAGATING = "Propagating"


class IndeterminateRegime(PatchfrontError):
    def __init__(self, message: str, evidence: dict):
        super().__init__(message)
        self.evidence = evidence


@dataclass(frozen=True)
class RegimeOptions:
    ext_tol: float = 1e-4
    lambda_block: float = 1e-3
    speed_floor: float = 0.05
    burn_in: Optional[float] = None
    window: Optional[float] = None
    block_margin: float = 10.0
    residual_fraction: float = 0.05
    v_window: Tuple[float, float] = (-10.0, 10.0)
    level_right: Optional[float] = None
    level_left: Optional[float] = None


@dataclass(frozen=True)
class RegimeReport:
    verdict: Regime
    speed_right: Optional[float]
    speed_left: Optional[float]
    shift_xi: Optional[float]
    final_supnorm: float
    evidence: Dict = field(default_factory=dict)


# --- level sets and speeds ------------------------------------------------------

def level_position(f: Field, level: float, side: Side = Side.RIGHT) -> Optional[float]:
    """Outermost crossing of ``level`` on one side, linearly interpolated."""
    u = np.asarray(f.values)
    x = f.x
    above = np.nonzero(u >= level)[0]
    if len(above) == 0:
        return None
    side = Side(side)
    if side is Side.RIGHT:
        j = above[-1]
        if j == len(u) - 1:
            return None
        return float(x[j] + (u[j] - level) / (u[j] - u[j + 1]) * (x[j + 1] - x[j]))
    j = above[0]
    if j == 0:
        return None
    return float(x[j] - (u[j] - level) / (u[j] - u[j - 1]) * (x[j] - x[j - 1]))


def positions(traj: Trajectory, level: float, side: Side, window: Tuple[float, float]):
    ts, xs = [], []
    for s in traj.snapshots:
        if window[0] - 1e-9 <= s.t <= window[1] + 1e-9:
            ts.append(s.t)
            xs.append(level_position(s, level, side))
    return np.array(ts), xs


def estimate_speed(traj: Trajectory, level: float, side: Side,
                   window: Tuple[float, float]) -> Tuple[float, float]:
    """Least-squares speed of a level set over a time window, plus RMS residual.

    Speeds are positive in the outward direction of ``side``.
    """
    side = Side(side)
    ts, xs = positions(traj, level, side, window)
    if len(ts) < 2:
        raise NumericalError(f"fewer than two snapshots in window {window}")
    if any(x is None for x in xs):
        raise NumericalError(f"level {level} has no {side.value} crossing in window {window}")
    xs = np.array(xs, dtype=float)
    slope, icpt = np.polyfit(ts, xs, 1)
    rms = float(np.sqrt(np.mean((xs - (slope * ts + icpt)) ** 2)))
    return (float(slope) if side is Side.RIGHT else float(-slope)), rms


# --- comparison with steady states and fronts ----------------------------------

def compare_to_stationary(f: Field, p: StationaryProfile, interval: Tuple[float, float]) -> float:
    x = f.x
    sel = (x >= interval[0] - 1e-12) & (x <= interval[1] + 1e-12)
    if not np.any(sel):
        raise ConfigError(f"interval {interval} contains no grid nodes")
    return float(np.max(np.abs(f.values[sel] - p(x[sel]))))


def _golden(fn, a: float, b: float, tol: float = 1e-10, maxiter: int = 200):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(maxiter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def fit_front_shift(f: Field, front: FrontProfile, region: Tuple[float, float], c: float,
                    t: float, half_width: float = 2.0) -> Tuple[float, float]:
    """Shift xi minimising sup over region of |u(x) - phi(x - c t + xi)|."""
    x = f.x
    sel = (x >= region[0]) & (x <= region[1])
    xs, us = x[sel], f.values[sel]
    K = front.K
    if len(us) == 0 or us.max() < 0.9 * K or us.min() > 0.1 * K:
        raise ConfigError(f"region {region} does not bracket the front")
    pos = _crossing(xs, us, front.theta)
    if pos is None:
        raise ConfigError(f"region {region} does not bracket the front")
    xi0 = c * t - pos

    def err(xi):
        return float(np.max(np.abs(us - front_eval(front, xs - c * t + xi))))

    return _golden(err, xi0 - half_width, xi0 + half_width)


def _crossing(xs, us, level):
    above = np.nonzero(us >= level)[0]
    if len(above) == 0 or above[-1] == len(us) - 1:
        return None
    j = above[-1]
    return float(xs[j] + (us[j] - level) / (us[j] - us[j + 1]) * (xs[j + 1] - xs[j]))


# --- regime classification ------------------------------------------------------

def _to_builtin(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_to_builtin(w) for w in v]
    if isinstance(v, dict):
        return {k: _to_builtin(w) for k, w in v.items()}
    return v


def classify_regime(traj: Trajectory, m: PatchModel, opts: RegimeOptions = RegimeOptions()
                    ) -> RegimeReport:
    """Decide the large-time regime of a trajectory with finite-time thresholds."""
    ts = traj.times
    T = float(ts[-1])
    t0 = float(ts[0])
    burn = 0.25 * (T - t0) + t0 if opts.burn_in is None else opts.burn_in
    window = 0.5 * (T - t0) if opts.window is None else opts.window
    if T < burn + window - 1e-9 and opts.window is not None:
        raise ConfigError("trajectory shorter than burn-in plus fitting window")
    K1, K2 = m.f1.K, m.f2.K
    lvl_r = opts.level_right if opts.level_right is not None else 0.5 * K2
    lvl_l = opts.level_left if opts.level_left is not None else 0.5 * K1
    final = traj.final
    sup_final = final.sup()
    ev: Dict = dict(T=T, burn_in=burn, window=window, ext_tol=opts.ext_tol,
                    lambda_block=opts.lambda_block, speed_floor=opts.speed_floor,
                    level_right=lvl_r, level_left=lvl_l, final_supnorm=sup_final)
    speed_left = None
    try:
        speed_left, rms_l = estimate_speed(traj, lvl_l, Side.LEFT, (T - window, T))
        ev["speed_left_rms"] = rms_l
    except NumericalError:
        pass
    if sup_final < opts.ext_tol:
        return RegimeReport(Regime.EXTINCTION, None, speed_left, None, sup_final,
                            _to_builtin(ev))
    supp = traj.snapshots[0].support()
    edge = supp[1] if supp else 0.0
    x_block = edge + opts.block_margin
    ev["X_block"] = x_block
    far = []
    for s in traj.snapshots:
        if s.t >= burn - 1e-9:
            sel = s.x >= x_block
            far.append(float(s.values[sel].max()) if np.any(sel) else 0.0)
    ev["far_sup_max"] = max(far) if far else 0.0
    if far and max(far) < opts.lambda_block:
        return RegimeReport(Regime.BLOCKED, None, speed_left, None, sup_final, _to_builtin(ev))
    w = (T - window, T)
    t_w, xs = positions(traj, lvl_r, Side.RIGHT, w)
    ev["positions_right"] = xs
    ev["times_right"] = t_w
    speed_right = None
    if len(t_w) >= 2 and all(x is not None for x in xs):
        speed_right, rms = estimate_speed(traj, lvl_r, Side.RIGHT, w)
        disp = abs(xs[-1] - xs[0])
        ev.update(speed_right=speed_right, speed_right_rms=rms, displacement=disp)
        if speed_right > opts.speed_floor and rms < opts.residual_fraction * disp:
            return RegimeReport(Regime.PROPAGATING, speed_right, speed_left, None, sup_final,
                                _to_builtin(ev))
    t_all, xs_all = positions(traj, lvl_r, Side.RIGHT, (burn, T))
    increasing = (len(xs_all) >= 2 and all(x is not None for x in xs_all)
                  and all(b > a for a, b in zip(xs_all, xs_all[1:])))
    ev["level_increasing"] = increasing
    if increasing:
        errs = _errors_to_V(traj, m, opts.v_window, burn)
        ev["errors_to_V"] = errs
        if errs is not None and len(errs) >= 2 and all(
                b <= a for a, b in zip(errs, errs[1:])):
            return RegimeReport(Regime.VIRTUAL_BLOCKING, speed_right, speed_left, None,
                                sup_final, _to_builtin(ev))
    raise IndeterminateRegime("no regime rule applies", _to_builtin(ev))


def _errors_to_V(traj: Trajectory, m: PatchModel, window, burn):
    try:
        roots = solve_interface_value_V(m, strict=False)
    except PatchfrontError:
        return None
    if len(roots) != 1:
        return None
    try:
        V = construct_V(m, roots[0])
    except PatchfrontError:
        return None
    return [compare_to_stationary(s, V, window) for s in traj.snapshots if s.t >= burn - 1e-9]


def report_shift(traj: Trajectory, front: FrontProfile, c: float, times: Sequence[float],
                 region_left: float = 20.0):
    """Front shifts at several times, fitted over [region_left, domain end]."""
    out = []
    for t in times:
        s = traj.at_time(t)
        out.append(fit_front_shift(s, front, (region_left, float(s.x[-1])), c, t))
    return out


# --- scaling between the original and the continuous-density problem ----------

@dataclass(frozen=True)
class ScalingMap:
    pref_alpha: float
    k: float
    sigma: float
    f2: Reaction


def scaling_map(pref_alpha: float, d1: float, d2: float, f2_tilde: Reaction):
    """Return (sigma, k, f2) with sigma=(1-a)/a, k=(a/(1-a)) d2/d1, f2 = k f2~(./k)."""
    if not 0 < pref_alpha < 1:
        raise ConfigError("preference alpha must lie in (0, 1)")
    if not (d1 > 0 and d2 > 0):
        raise ConfigError("diffusivities must be positive")
    sigma = (1.0 - pref_alpha) / pref_alpha
    k = pref_alpha / (1.0 - pref_alpha) * d2 / d1
    return sigma, k, f2_tilde.rescale(k)


def inverse_scaling_map(sigma: float, d1: float, d2: float, f2: Reaction):
    """Return (pref_alpha, f2_tilde) from the continuous-density data."""
    if not sigma > 0:
        raise ConfigError("sigma must be positive")
    alpha = 1.0 / (1.0 + sigma)
    k = d2 / (d1 * sigma)
    return alpha, f2.rescale(1.0 / k)


__all__ = ["Side", "Regime", "RegimeOptions", "RegimeReport", "IndeterminateRegime",
           "level_position", "estimate_speed", "compare_to_stationary", "fit_front_shift",
           "classify_regime", "scaling_map", "inverse_scaling_map", "ScalingMap",
           "report_shift"]
