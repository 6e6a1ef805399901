"""Classical paths for the one-dimensional quadratic wall.

The potential is ``v(x) = omega**2 x**2 / 4`` for ``x > 0`` and zero
otherwise, with Lagrangian ``L = xdot**2/4 - v`` (mass 1/2, hbar = 1).
A source at ``y < 0`` reaches an observation point either directly, by
entering the wall and returning after half a period, or (for ``x > 0``) by
crossing into the wall at time ``t1``.

Dimensionless variables: ``rho = -y/x``, ``T = omega t`` and the time spent
inside the wall ``Omt = omega (t - t1)``.  Crossing times are the roots of
``f(Omt) = rho sin(Omt) + Omt - T`` on ``(0, pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .specfun import DomainError

__all__ = [
    "QuadWall",
    "PathKind",
    "Count",
    "PathSolution",
    "Taxonomy",
    "ConsistencyError",
    "direct_path",
    "half_period_path",
    "ho_kernel_params",
    "crossing_times",
    "crossing_paths",
    "t_star",
    "classify",
    "classify_grid",
    "mixed_action",
    "mixed_amp_sq",
    "trajectory",
    "TANGENT_TOL",
]

TANGENT_TOL = 1e-9
_CAUSTIC_TOL = 1e-9
_ROOT_TOL = 1e-12
_CONSISTENCY_TOL = 1e-8


class ConsistencyError(ValueError):
    """``t1`` is not a crossing time for the given endpoints."""


class PathKind(str, Enum):
    DIRECT = "Direct"
    HALF_PERIOD = "HalfPeriodReturn"
    CROSSING = "CrossingIntoWall"


class Count(str, Enum):
    ZERO = "Zero"
    ONE = "One"
    TWO = "Two"
    TANGENT = "Tangent"


@dataclass(frozen=True)
class QuadWall:
    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, 0.25 * self.omega**2 * x * x, 0.0)


@dataclass(frozen=True)
class PathSolution:
    """One classical path.  ``amp_sq`` is a magnitude; the sign/phase of the
    semiclassical amplitude is carried by ``maslov`` (factor ``(-i)**maslov``).
    """

    kind: PathKind
    t1: float
    t2: float | None
    action: float
    amp_sq: float
    maslov: int
    caustic_on_exit: bool = False


@dataclass(frozen=True)
class Taxonomy:
    rho: float
    T: float
    count: Count
    t_star: float | None


def direct_path(y: float, x: float, t: float) -> PathSolution:
    """Free motion from ``y`` to ``x`` in time ``t``."""
    if not t > 0:
        raise ValueError("t must be positive")
    return PathSolution(PathKind.DIRECT, 0.0, None, (x - y) ** 2 / (4 * t), 1 / (2 * t), 0)


def half_period_path(wall: QuadWall, y: float, x: float, t: float) -> PathSolution | None:
    """Path that enters the wall at ``x = 0``, turns, and re-emerges half a
    period later.  Exists only for ``omega t > pi``.

    Every trajectory entering at the origin refocuses there after ``pi/omega``,
    so the exit is a focal point; this is what makes the action blow up as
    ``omega t -> pi+``.
    """
    if not (y < 0 and x < 0):
        raise ValueError("half_period_path needs y < 0 and x < 0")
    half = math.pi / wall.omega
    tau = t - half
    if not tau > 0:
        return None
    t1 = y / (x + y) * tau
    return PathSolution(
        PathKind.HALF_PERIOD, t1, t1 + half, (x + y) ** 2 / (4 * tau), 1 / (2 * tau), 1, True
    )


def ho_kernel_params(wall: QuadWall, x: float, y: float, t: float) -> tuple[float, float, int]:
    """Mehler (full oscillator) action, ``|A^2|`` and Maslov count."""
    if not t > 0:
        raise ValueError("t must be positive")
    w = wall.omega
    wt = w * t
    k = round(wt / math.pi)
    if k >= 1 and abs(wt - k * math.pi) < 1e-9:
        raise DomainError(f"omega t = {wt} is a caustic instant (multiple of pi)")
    s, c = math.sin(wt), math.cos(wt)
    action = w / (4 * s) * ((x * x + y * y) * c - 2 * x * y)
    return action, abs(w / (2 * s)), int(math.floor(wt / math.pi))


def t_star(rho: float) -> float:
    """Largest ``T`` with crossing solutions for ``rho >= 1``."""
    if not rho >= 1:
        raise DomainError("t_star requires rho >= 1")
    if rho == 1:
        return math.pi
    return math.sqrt(rho * rho - 1) + math.acos(-1 / rho)


def classify(rho: float, T: float, tol: float = TANGENT_TOL) -> Taxonomy:
    """Number of crossing paths in the ``(rho, T)`` plane."""
    if not (rho > 0 and T > 0):
        raise ValueError("rho and T must be positive")
    ts = t_star(rho) if rho >= 1 else None
    if ts is not None and abs(T - ts) < tol:
        count = Count.TANGENT
    elif T < math.pi:
        count = Count.ONE
    elif rho <= 1 or T >= ts:
        count = Count.ZERO
    else:
        count = Count.TWO
    return Taxonomy(rho, T, count, ts)


def classify_grid(rhos, Ts, tol: float = TANGENT_TOL) -> list[Taxonomy]:
    """Row-major region map over ``rhos x Ts``."""
    return [classify(float(r), float(T), tol) for r in rhos for T in Ts]


def _f(rho, T):
    return lambda om: rho * math.sin(om) + om - T


def _polish(f, df, lo, hi):
    om = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    for _ in range(3):
        d = df(om)
        if d == 0 or abs(f(om)) < _ROOT_TOL:
            break
        step = om - f(om) / d
        if lo <= step <= hi:
            om = step
    return om


def _crossing_angles(rho: float, T: float) -> list[float]:
    f = _f(rho, T)

    def df(om):
        return rho * math.cos(om) + 1

    tax = classify(rho, T)
    if tax.count == Count.TANGENT:
        return [math.acos(-1 / rho)]
    hi = min(math.pi, T)
    if tax.count == Count.ONE:
        if rho <= 1:
            return [_polish(f, df, 0.0, hi)]
        peak = math.acos(-1 / rho)
        return [_polish(f, df, 0.0, min(peak, hi))]
    if tax.count == Count.TWO:
        peak = math.acos(-1 / rho)
        roots = [_polish(f, df, 0.0, peak)]
        if f(math.pi) < 0:
            roots.append(_polish(f, df, peak, math.pi))
        return roots
    return []


def crossing_times(wall: QuadWall, y: float, x: float, t: float) -> list[float]:
    """Entry times ``t1`` of paths from ``y < 0`` to ``x > 0``, ascending.

    Only roots with ``omega (t - t1)`` strictly inside ``(0, pi)`` are returned.
    """
    if not (y < 0 < x and t > 0):
        raise ValueError("crossing_times needs y < 0 < x and t > 0")
    w = wall.omega
    T = w * t
    oms = [om for om in _crossing_angles(-y / x, T) if 0 < om < math.pi]
    return sorted((T - om) / w for om in oms)


def _check_crossing(wall, y, t1, x, t):
    if not (y < 0 < x and t1 > 0 and t >= t1):
        raise ValueError("need y < 0 < x and 0 < t1 <= t")
    w = wall.omega
    res = w * x * t1 + y * math.sin(w * (t - t1))
    scale = abs(w * x * t1) + abs(y)
    if abs(res) > _CONSISTENCY_TOL * scale:
        raise ConsistencyError(f"t1={t1} violates the crossing equation (residual {res:.3g})")


def mixed_action(wall: QuadWall, y: float, t1: float, x: float, t: float) -> float:
    """Action of the path crossing into the wall at ``t1``."""
    _check_crossing(wall, y, t1, x, t)
    w = wall.omega
    return y * y / (4 * t1) + y * y * math.sin(2 * w * (t - t1)) / (8 * w * t1 * t1)


def mixed_amp_sq(wall: QuadWall, y: float, t1: float, x: float, t: float,
                 tol: float = _CAUSTIC_TOL) -> tuple[float, bool]:
    """Signed ``d^2 S / dx dy`` along the crossing path and a caustic flag.

    The value is negative before the caustic and positive after it.  At the
    caustic itself ``inf`` is returned with the flag set.
    """
    _check_crossing(wall, y, t1, x, t)
    denom = x - y * math.cos(wall.omega * (t - t1))
    caustic = abs(denom) <= tol * (abs(x) + abs(y))
    if denom == 0:
        return math.inf, True
    return (y / (2 * t1)) / denom, caustic


def crossing_paths(wall: QuadWall, y: float, x: float, t: float) -> list[PathSolution]:
    """All crossing paths with magnitude ``|A^2|`` and Maslov index."""
    out = []
    for t1 in crossing_times(wall, y, x, t):
        amp, caustic = mixed_amp_sq(wall, y, t1, x, t)
        out.append(
            PathSolution(
                PathKind.CROSSING, t1, None, mixed_action(wall, y, t1, x, t),
                abs(amp), 1 if amp > 0 else 0, caustic,
            )
        )
    return out


def trajectory(wall: QuadWall, y: float, t1: float, t: float) -> tuple[Callable, Callable]:
    """Position and velocity of the path that leaves ``y`` at time 0 and
    crosses ``x = 0`` at ``t1``.  Valid up to the next exit from the wall.
    """
    w = wall.omega
    v0 = -y / t1
    amp = v0 / w

    def q(tau):
        tau = np.asarray(tau, dtype=float)
        return np.where(tau <= t1, y + v0 * tau, amp * np.sin(w * (tau - t1)))

    def qdot(tau):
        tau = np.asarray(tau, dtype=float)
        return np.where(tau <= t1, v0, v0 * np.cos(w * (tau - t1)))

    return q, qdot
