"""Reaction nonlinearities f(u) and their structural metadata.

Three families are supported:

    logistic   f(u) = u (1 - u/K)
    cubic      f(u) = a u (K - u) (u - theta)
    custom     user-supplied callables with a declared Lipschitz-type bound

The cubic carries an amplitude ``a`` (default 1) so that the rescaling
s -> k f(s/k) stays inside the family: K -> kK, theta -> k theta, a -> a/k**2.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from . import _kernels as _k
from .errors import ConfigError, PatchfrontError

MASS_DEADBAND = 1e-12
GRID_POINTS = 10_000

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class Kind(enum.Enum):
    LOGISTIC = "logistic"
    CUBIC = "cubic"
    CUSTOM = "custom"


class Verdict(enum.Enum):
    KPP = "KPP"
    BISTABLE = "Bistable"
    NEITHER = "Neither"


class MassSign(enum.Enum):
    NEGATIVE = -1
    ZERO = 0
    POSITIVE = 1


class QuadratureError(PatchfrontError):
    pass


class NoBalancedThreshold(PatchfrontError):
    pass


@dataclass(frozen=True)
class ReactionClass:
    verdict: Verdict
    mass_sign: MassSign
    theta_star: Optional[float] = None


@dataclass(frozen=True, eq=False)
class Reaction:
    kind: Kind
    K: float
    theta: Optional[float] = None
    amplitude: float = 1.0
    lipschitz_K: float = field(default=float("nan"))
    eval_fn: Optional[Callable] = field(default=None, repr=False)
    deriv_fn: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.K > 0:
            raise ConfigError(f"K must be positive, got {self.K}")
        if self.kind is Kind.CUBIC:
            if self.theta is None or not 0 < self.theta < self.K:
                raise ConfigError("cubic reaction needs 0 < theta < K")
            if not self.amplitude > 0:
                raise ConfigError("cubic amplitude must be positive")
        if self.kind is Kind.CUSTOM:
            if self.eval_fn is None or self.deriv_fn is None:
                raise ConfigError("custom reaction needs eval_fn and deriv_fn")
            if not (self.lipschitz_K >= 0):
                raise ConfigError("custom reaction must declare lipschitz_K >= 0")
            s = np.linspace(0, 2 * self.K, GRID_POINTS + 1)[1:]
            ratio = np.max(self(s) / s)
            if ratio > self.lipschitz_K * (1 + 1e-12) + 1e-14:
                raise ConfigError(
                    f"declared lipschitz_K={self.lipschitz_K} is below sup f(s)/s={ratio}")
        else:
            object.__setattr__(self, "lipschitz_K", self._closed_form_lipschitz())
        for z in (0.0, self.K):
            if abs(float(self(z))) > 1e-12:
                raise ConfigError(f"f({z}) = {float(self(z))} is not zero")

    # constructors -------------------------------------------------------

    @classmethod
    def logistic(cls, K: float = 1.0) -> "Reaction":
        return cls(Kind.LOGISTIC, float(K))

    @classmethod
    def cubic(cls, K: float, theta: float, amplitude: float = 1.0) -> "Reaction":
        return cls(Kind.CUBIC, float(K), float(theta), float(amplitude))

    @classmethod
    def custom(cls, f: Callable, df: Callable, K: float, lipschitz_K: float,
               theta: Optional[float] = None) -> "Reaction":
        return cls(Kind.CUSTOM, float(K), theta, 1.0, float(lipschitz_K), f, df)

    # evaluation ----------------------------------------------------------

    def __call__(self, u):
        if self.kind is Kind.LOGISTIC:
            return u * (1.0 - u / self.K)
        if self.kind is Kind.CUBIC:
            return self.amplitude * u * (self.K - u) * (u - self.theta)
        return self.eval_fn(u)

    eval = __call__

    def deriv(self, u):
        if self.kind is Kind.LOGISTIC:
            return 1.0 - 2.0 * u / self.K
        if self.kind is Kind.CUBIC:
            K, th, a = self.K, self.theta, self.amplitude
            return a * (-3.0 * u * u + 2.0 * (K + th) * u - K * th)
        return self.deriv_fn(u)

    @cached_property
    def poly(self) -> Optional[Polynomial]:
        """Polynomial form for the closed-form kinds, None for custom."""
        if self.kind is Kind.LOGISTIC:
            return Polynomial([0.0, 1.0, -1.0 / self.K])
        if self.kind is Kind.CUBIC:
            K, th, a = self.K, self.theta, self.amplitude
            return Polynomial([0.0, -a * K * th, a * (K + th), -a])
        return None

    @cached_property
    def _antiderivative(self) -> Optional[Polynomial]:
        return None if self.poly is None else self.poly.integ()

    @cached_property
    def _classification(self) -> "ReactionClass":
        sign = self.mass_sign()
        if self.is_kpp():
            return ReactionClass(Verdict.KPP, sign)
        if self.is_bistable():
            ts = theta_star(self) if sign is MassSign.POSITIVE else None
            return ReactionClass(Verdict.BISTABLE, sign, ts)
        return ReactionClass(Verdict.NEITHER, sign)

    def _closed_form_lipschitz(self) -> float:
        if self.kind is Kind.LOGISTIC:
            return 1.0
        # f(s)/s = a (K - s)(s - theta) peaks at s = (K + theta)/2
        return self.amplitude * (self.K - self.theta) ** 2 / 4.0

    # integrals -------------------------------------------------------------

    def mass(self, a: float, b: float) -> float:
        """Return the integral of f over [a, b]."""
        if a == b:
            return 0.0
        if self.kind is Kind.CUBIC and a == 0.0 and b == self.K:
            # factored form keeps the balanced case exactly zero at any scale
            return self.amplitude * self.K ** 3 / 12.0 * (self.K - 2.0 * self.theta)
        if self.kind is Kind.LOGISTIC and a == 0.0 and b == self.K:
            return self.K * self.K / 6.0
        P = self._antiderivative
        if P is not None:
            return float(P(b) - P(a))
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(self.eval_fn, a, b, epsabs=1e-12, epsrel=1e-12,
                                        limit=200)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(f"quadrature of f on [{a}, {b}] failed: {exc}") from exc
        return float(val)

    def energy(self, limit: float) -> Callable[[float], float]:
        """Return u -> integral of f from u to ``limit``.

        Accurate in the relative sense as u approaches ``limit``, which the
        tail integration of stationary profiles depends on.
        """
        if self.poly is not None:
            _, fn, args = self.kernel_energy(limit)
            return lambda u: fn(args, float(u))

        f = self.eval_fn

        def I(u: float) -> float:
            half = 0.5 * (limit - u)
            mid = 0.5 * (limit + u)
            return half * float(np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES)))

        return I

    def kernel_eval(self):
        """Return (compiled, fn, args) with fn(args, u) == f(u) for the kernels."""
        p = self.poly
        if p is not None:
            return True, _k.horner, np.ascontiguousarray(p.coef[::-1], dtype=float)
        f = self.eval_fn
        return False, (lambda _a, u: float(f(u))), None

    def kernel_energy(self, limit: float):
        """Like :meth:`kernel_eval` for u -> integral of f over [u, limit]."""
        p = self.poly
        if p is not None:
            shifted = p(Polynomial([limit, 1.0])).integ()
            packed = np.concatenate([[float(limit)], shifted.coef[::-1]]).astype(float)
            return True, _k.neg_horner_shifted, packed
        I = self.energy(limit)
        return False, (lambda _a, u: I(u)), None

    # structure -------------------------------------------------------------

    def max_abs_deriv(self, lo: float, hi: float) -> float:
        s = np.linspace(lo, hi, GRID_POINTS + 1)
        return float(np.max(np.abs(self.deriv(s))))

    def mass_sign(self) -> MassSign:
        m = self.mass(0.0, self.K)
        if abs(m) <= MASS_DEADBAND:
            return MassSign.ZERO
        return MassSign.POSITIVE if m > 0 else MassSign.NEGATIVE

    def unstable_zero(self) -> Optional[float]:
        if self.theta is not None:
            return self.theta
        s = np.linspace(0, self.K, GRID_POINTS + 1)[1:-1]
        v = self(s)
        idx = np.nonzero(np.diff(np.sign(v)) > 0)[0]
        if len(idx) != 1:
            return None
        from scipy.optimize import brentq
        return brentq(self.eval, s[idx[0]], s[idx[0] + 1], xtol=1e-14)

    def is_kpp(self) -> bool:
        K = self.K
        s = np.linspace(0, K, GRID_POINTS + 1)[1:-1]
        fs = self(s)
        d0 = float(self.deriv(0.0))
        if not (d0 > 0 and float(self.deriv(K)) < 0):
            return False
        if not np.all(fs > 0):
            return False
        if not np.all(fs <= d0 * s * (1 + 1e-12) + 1e-15):
            return False
        beyond = np.linspace(K, 2 * K, GRID_POINTS + 1)[1:]
        return bool(np.all(self(beyond) < 0))

    def is_bistable(self) -> bool:
        K = self.K
        th = self.unstable_zero()
        if th is None or not 0 < th < K:
            return False
        if not (self.deriv(0.0) < 0 and self.deriv(th) > 0 and self.deriv(K) < 0):
            return False
        lo = np.linspace(0, th, GRID_POINTS + 1)[1:-1]
        hi = np.linspace(th, K, GRID_POINTS + 1)[1:-1]
        beyond = np.linspace(K, 2 * K, GRID_POINTS + 1)[1:]
        return bool(np.all(self(lo) < 0) and np.all(self(hi) > 0)
                    and np.all(self(beyond) < 0))

    def classify(self) -> ReactionClass:
        return self._classification

    def rescale(self, k: float) -> "Reaction":
        """Return s -> k f(s/k)."""
        if not k > 0:
            raise ConfigError("scale factor must be positive")
        if k == 1:
            return self
        if self.kind is Kind.LOGISTIC:
            return Reaction.logistic(k * self.K)
        if self.kind is Kind.CUBIC:
            return Reaction.cubic(k * self.K, k * self.theta, self.amplitude / (k * k))
        f, df = self.eval_fn, self.deriv_fn
        return Reaction.custom(
            lambda s: k * f(s / k), lambda s: df(s / k), k * self.K, self.lipschitz_K,
            None if self.theta is None else k * self.theta)

    # serialization ---------------------------------------------------------

    def to_config(self) -> str:
        if self.kind is Kind.LOGISTIC:
            return f"logistic(K={self.K!r})"
        if self.kind is Kind.CUBIC:
            s = f"cubic(K={self.K!r}, theta={self.theta!r}"
            if self.amplitude != 1.0:
                s += f", amplitude={self.amplitude!r}"
            return s + ")"
        raise ConfigError("custom reactions have no config form")

    def same_as(self, other: "Reaction", tol: float = 0.0) -> bool:
        if self.kind is not other.kind or self.kind is Kind.CUSTOM:
            return self is other
        pairs = [(self.K, other.K), (self.amplitude, other.amplitude)]
        if self.theta is not None:
            pairs.append((self.theta, other.theta))
        return all(abs(x - y) <= tol * max(1.0, abs(x)) for x, y in pairs)


def eval(r: Reaction, u):  # noqa: A001 - mirrors the operation name
    return r(u)


def mass(r: Reaction, a: float, b: float) -> float:
    if a > b:
        raise ConfigError("mass requires a <= b")
    return r.mass(a, b)


def classify(r: Reaction) -> ReactionClass:
    return r.classify()


def rescale(r: Reaction, k: float) -> Reaction:
    return r.rescale(k)


def theta_star(r: Reaction) -> float:
    """Balanced threshold: the root in (theta, K) of the mass from 0."""
    th = r.unstable_zero()
    if th is None or r.mass(0.0, r.K) <= MASS_DEADBAND:
        raise NoBalancedThreshold("no balanced threshold: reaction needs positive mass")
    lo, hi = th, r.K
    # mass(0, .) is negative at theta and positive at K, increasing between
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        m = r.mass(0.0, mid)
        if abs(m) < 1e-12 and hi - lo < 1e-13 * r.K:
            break
        if m < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * r.K:
            break
    mid = 0.5 * (lo + hi)
    if abs(r.mass(0.0, mid)) >= 1e-12:
        raise NoBalancedThreshold(f"bisection did not reach |mass| < 1e-12 (got {r.mass(0, mid)})")
    return mid


def parse_reaction(text: str) -> Reaction:
    """Parse ``logistic(K=1)`` or ``cubic(K=4, theta=1)``."""
    text = text.strip()
    name, _, rest = text.partition("(")
    if not rest.endswith(")"):
        raise ConfigError(f"malformed reaction {text!r}")
    kwargs = {}
    body = rest[:-1].strip()
    if body:
        for item in body.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ConfigError(f"malformed reaction argument {item!r}")
            try:
                kwargs[key.strip()] = float(val)
            except ValueError:
                raise ConfigError(f"non-numeric reaction argument {item!r}") from None
    name = name.strip().lower()
    try:
        if name == "logistic":
            return Reaction.logistic(**kwargs)
        if name == "cubic":
            return Reaction.cubic(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad arguments for {name}: {exc}") from exc
    raise ConfigError(f"unknown reaction family {name!r}")


def sqrt_pos(x: float) -> float:
    return math.sqrt(x) if x > 0 else 0.0


__all__ = [
    "Kind", "Verdict", "MassSign", "Reaction", "ReactionClass", "QuadratureError",
    "NoBalancedThreshold", "eval", "mass", "classify", "rescale", "theta_star",
    "parse_reaction", "MASS_DEADBAND", "replace",
]
