"""Explicit finite differences for the time-dependent two-patch problem.

The grid is uniform with one node exactly at the interface x = 0.  Bulk nodes
take an explicit Euler step; the interface node carries no evolution law and
is reassigned from the discrete slope condition after every step.  With the
first-order interface rule and dt (2 d / h^2 + Lip) <= 1 the whole update is
monotone, so ordered data stay ordered.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import _kernels as _k
from .errors import ConfigError, NumericalError
from .stationary import PatchModel, StationaryProfile

EXPAND_THRESHOLD = 1e-8
EXPAND_FRACTION = 0.25
EXPAND_MIN_NODES = 10
CLIP_FLOOR = -1e-12
LIP_SAFETY = 1.01
DT_FRACTION = 0.9


@dataclass(frozen=True)
class Grid:
    h: float
    n_left: int
    n_right: int

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError("grid spacing must be positive")
        if self.n_left < 2 or self.n_right < 2:
            raise ConfigError("each side needs at least two nodes besides the interface")

    @classmethod
    def covering(cls, h: float, left: float, right: float) -> "Grid":
        """Smallest grid with nodes reaching at least ``left`` < 0 < ``right``."""
        return cls(h, int(math.ceil(-left / h - 1e-9)), int(math.ceil(right / h - 1e-9)))

    @property
    def L_left(self) -> float:
        return self.n_left * self.h

    @property
    def L_right(self) -> float:
        return self.n_right * self.h

    @property
    def size(self) -> int:
        return self.n_left + self.n_right + 1

    @property
    def x(self) -> np.ndarray:
        return self.h * np.arange(-self.n_left, self.n_right + 1, dtype=float)

    def grown(self, add_left: int, add_right: int) -> "Grid":
        return Grid(self.h, self.n_left + add_left, self.n_right + add_right)


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    t: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ConfigError(f"field has {v.shape} values for a grid of {self.grid.size} nodes")
        if not np.all(np.isfinite(v)):
            raise NumericalError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def at(self, x) -> np.ndarray:
        return np.interp(x, self.x, self.values)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def support(self, tol: float = 0.0):
        nz = np.nonzero(self.values > tol)[0]
        if len(nz) == 0:
            return None
        x = self.x
        return float(x[nz[0]]), float(x[nz[-1]])


@dataclass(frozen=True, eq=False)
class Trajectory:
    snapshots: tuple
    model: PatchModel
    clipped: int = 0
    dt: float = 0.0
    steps: int = 0

    def __post_init__(self):
        ts = [s.t for s in self.snapshots]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise NumericalError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def at_time(self, t: float) -> Field:
        for s in self.snapshots:
            if abs(s.t - t) <= 1e-9 * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t={t}")

    @property
    def final(self) -> Field:
        return self.snapshots[-1]


# --- initial data ---------------------------------------------------------------

def _check_support(grid: Grid, lo: float, hi: float) -> None:
    x = grid.x
    if lo < x[0] - 1e-12 or hi > x[-1] + 1e-12:
        raise ConfigError(f"datum support [{lo}, {hi}] exceeds the grid [{x[0]}, {x[-1]}]")


def bump(x, center: float, width: float, height: float):
    """height * cos^2 on |x - center| < width, zero elsewhere."""
    z = (np.asarray(x) - center) / width
    return np.where(np.abs(z) < 1, height * np.cos(0.5 * np.pi * z) ** 2, 0.0)


def plateau(x, a: float, L: float, height: float):
    """height on [a+1, a+L-1] with affine unit ramps on both sides."""
    x = np.asarray(x, dtype=float)
    up = np.clip(x - a, 0.0, 1.0)
    down = np.clip(a + L - x, 0.0, 1.0)
    return height * np.minimum(up, down)


def initial_datum(kind: str, params: dict, grid: Grid) -> Field:
    """Sample a compactly supported initial datum on ``grid``.

    kinds: ``bump(center, width, height)``, ``plateau(a, L, height)``,
    ``indicator(a, b, height)``, ``half_bump(x0, profile)``.
    """
    x = grid.x
    p = dict(params)
    try:
        if kind == "bump":
            c, w, hgt = float(p["center"]), float(p["width"]), float(p["height"])
            if not w > 0:
                raise ConfigError("bump width must be positive")
            lo, hi = c - w, c + w
            v = bump(x, c, w, hgt)
        elif kind == "plateau":
            a, L, hgt = float(p["a"]), float(p["L"]), float(p["height"])
            if L < 2:
                raise ConfigError("plateau length must be at least 2 (two unit ramps)")
            lo, hi = a, a + L
            v = plateau(x, a, L, hgt)
        elif kind == "indicator":
            a, b, hgt = float(p["a"]), float(p["b"]), float(p.get("height", 1.0))
            if not a <= b:
                raise ConfigError("indicator needs a <= b")
            lo, hi = a, b
            v = np.where((x >= a - 1e-12) & (x <= b + 1e-12), hgt, 0.0)
        elif kind == "half_bump":
            x0 = float(p["x0"])
            prof: StationaryProfile = p["profile"]
            R = prof.radius
            lo, hi = x0 - R, x0 + R
            z = x - x0
            v = np.where(np.abs(z) <= R, np.maximum(prof(np.abs(z)), 0.0), 0.0)
        else:
            raise ConfigError(f"unknown datum kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"datum {kind} is missing parameter {exc}") from None
    _check_support(grid, lo, hi)
    if np.any(v < 0):
        raise ConfigError("initial data must be nonnegative")
    return Field(grid, 0.0, v)


def field_from_function(grid: Grid, fn, t: float = 0.0) -> Field:
    return Field(grid, t, fn(grid.x))


# --- interface and stepping -----------------------------------------------------

def interface_value(uL2: float, uL1: float, uR1: float, uR2: float, m: PatchModel,
                    order: int = 1, h: float = 1.0) -> float:
    """Node value at x = 0 enforcing u_x(0-) = sigma u_x(0+) discretely.

    Order 1 uses one-sided first differences and yields a convex
    combination; order 2 uses three-point one-sided differences.  The grid
    spacing cancels in both rules.
    """
    s = m.sigma
    if order == 1:
        return (uL1 + s * uR1) / (1.0 + s)
    if order == 2:
        return (4.0 * uL1 - uL2 + s * (4.0 * uR1 - uR2)) / (3.0 * (1.0 + s))
    raise ConfigError("interface order must be 1 or 2")


def lipschitz_bound(m: PatchModel, bound: float) -> float:
    """Sampled max |f_i'| on [0, bound], with a small safety factor."""
    return LIP_SAFETY * max(m.f1.max_abs_deriv(0.0, bound), m.f2.max_abs_deriv(0.0, bound))


def cfl(m: PatchModel, h: float, bound: float) -> float:
    """Largest dt with dt (2 max(d) / h^2 + Lip) <= 1."""
    return 1.0 / (2.0 * max(m.d1, m.d2) / h ** 2 + lipschitz_bound(m, bound))


def _bound_for(m: PatchModel, u: np.ndarray) -> float:
    return max(m.f1.K, m.f2.K, float(np.max(u)) if u.size else 0.0)


def step(m: PatchModel, f: Field, dt: float, order: int = 1, bound: Optional[float] = None
         ) -> Field:
    """One explicit Euler step followed by the interface reassignment."""
    g = f.grid
    bound = _bound_for(m, f.values) if bound is None else bound
    limit = cfl(m, g.h, bound)
    if dt > limit * (1 + 1e-12):
        raise NumericalError(f"dt={dt} violates the CFL bound {limit}")
    if order not in (1, 2):
        raise ConfigError("interface order must be 1 or 2")
    u = np.array(f.values)
    new = _k.cauchy_step_numpy(u, g.n_left, g.h, dt, m.d1, m.d2, m.sigma, m.f1, m.f2, order)
    new, _ = _sanitize(new)
    return Field(g, f.t + dt, new)


def _sanitize(u: np.ndarray):
    if not np.all(np.isfinite(u)):
        raise NumericalError("non-finite values in the solution")
    if np.any(u < CLIP_FLOOR):
        raise NumericalError(f"negative values below {CLIP_FLOOR}: min {u.min():.3e}")
    neg = u < 0
    n = int(np.count_nonzero(neg))
    u = np.where(neg | (u < 1e-200), 0.0, u)
    return u, n


def _needs_expansion(u: np.ndarray) -> bool:
    return max(u[:10].max(), u[-10:].max()) > EXPAND_THRESHOLD


def _expand(grid: Grid, u: np.ndarray):
    add_l = add_r = 0
    if u[:10].max() > EXPAND_THRESHOLD:
        add_l = max(int(math.ceil(EXPAND_FRACTION * grid.n_left)), EXPAND_MIN_NODES)
    if u[-10:].max() > EXPAND_THRESHOLD:
        add_r = max(int(math.ceil(EXPAND_FRACTION * grid.n_right)), EXPAND_MIN_NODES)
    new = np.concatenate([np.zeros(add_l), u, np.zeros(add_r)])
    return grid.grown(add_l, add_r), new


def solve(m: PatchModel, u0: Field, T: float, output_times: Optional[Iterable[float]] = None,
          expand: bool = True, order: int = 1, dt: Optional[float] = None) -> Trajectory:
    """Integrate to time T, storing snapshots at t=0 and at ``output_times``.

    The step is 0.9 of the CFL bound unless given; each interval between
    outputs is split into equal steps so that snapshots land exactly.
    """
    if np.any(u0.values < 0):
        raise ConfigError("initial data must be nonnegative")
    if order not in (1, 2):
        raise ConfigError("interface order must be 1 or 2")
    if not T > 0:
        raise ConfigError("final time must be positive")
    outs = sorted({float(t) for t in (output_times if output_times is not None else [T])
                   if 0 < t <= T})
    if not outs or outs[-1] < T:
        outs.append(float(T))
    grid = u0.grid
    u = np.array(u0.values, dtype=float)
    bound = _bound_for(m, u)
    limit = cfl(m, grid.h, bound)
    dt_max = DT_FRACTION * limit if dt is None else float(dt)
    if dt_max > limit * (1 + 1e-12):
        raise NumericalError(f"dt={dt_max} violates the CFL bound {limit}")
    comp1, _, c1 = m.f1.kernel_eval()
    comp2, _, c2 = m.f2.kernel_eval()
    compiled = comp1 and comp2
    snaps: List[Field] = [Field(grid, u0.t, u.copy())]
    t = u0.t
    clipped = np.zeros(1, dtype=np.int64)
    steps = 0
    work = np.empty_like(u)
    if expand and _needs_expansion(u):
        while _needs_expansion(u):
            grid, u = _expand(grid, u)
        work = np.empty_like(u)
    for t_out in outs:
        n = max(1, int(math.ceil((t_out - t) / dt_max - 1e-9)))
        h_t = (t_out - t) / n
        remaining = n
        while remaining > 0:
            if compiled:
                done, status = _k.cauchy_advance(u, work, grid.n_left, grid.h, h_t, m.d1, m.d2,
                                                 m.sigma, c1, c2, remaining, order, expand,
                                                 EXPAND_THRESHOLD, clipped)
            else:
                new = _k.cauchy_step_numpy(u, grid.n_left, grid.h, h_t, m.d1, m.d2, m.sigma,
                                           m.f1, m.f2, order)
                if not np.all(np.isfinite(new)):
                    status, done = 3, 1
                elif np.any(new < CLIP_FLOOR):
                    status, done = 2, 1
                else:
                    new, k = _sanitize(new)
                    clipped[0] += k
                    u[:] = new
                    done = 1
                    status = 1 if expand and _needs_expansion(u) else 0
            remaining -= done
            steps += done
            if status == 3:
                raise NumericalError("non-finite values in the solution")
            if status == 2:
                raise NumericalError(f"negative values below {CLIP_FLOOR}")
            if status == 1:
                grid, u = _expand(grid, u)
                work = np.empty_like(u)
        t = t_out
        snaps.append(Field(grid, t, u.copy()))
    return Trajectory(tuple(snaps), m, clipped=int(clipped[0]), dt=dt_max, steps=steps)


def gaussian_bound(m: PatchModel, u0: Field, t: float, x, L2: float):
    """M e^{Kt} e^{-(x-L2)^2/(4 d2 t)} with M = max(K1, K2, |u0|) and K >= sup f_i(s)/s."""
    M = max(m.f1.K, m.f2.K, u0.sup())
    K = max(m.f1.lipschitz_K, m.f2.lipschitz_K)
    x = np.asarray(x, dtype=float)
    return M * math.exp(K * t) * np.exp(-(x - L2) ** 2 / (4.0 * m.d2 * t))


__all__ = ["Grid", "Field", "Trajectory", "initial_datum", "interface_value", "step", "solve",
           "cfl", "lipschitz_bound", "gaussian_bound", "field_from_function"]
