"""Special functions needed by the soft-wall closed forms.

Every routine returns :class:`FnEval` pairs (value, conservative absolute
error).  Scalars and numpy arrays are both accepted; the result has the
shape of the broadcast input.

Most evaluations are delegated to :mod:`scipy.special`.  The parabolic
cylinder function is the exception: scipy's ``pbdv`` loses all accuracy
for large order at negative argument, so there we start from the exact
values at ``x = 0`` and integrate Weber's equation outward.  Orders within
1e-3 of an integer make that integration ill-conditioned and are handed
to mpmath (exact integers use the Hermite-backed ``pbdv``).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import mpmath
import numpy as np
from scipy import special as sp
from scipy.integrate import solve_ivp

__all__ = [
    "FnEval",
    "DomainError",
    "RangeError",
    "gamma",
    "beta",
    "airy_ai",
    "bessel_k",
    "parabolic_cylinder_d",
    "pcf_at_origin",
    "bessel_j1",
    "struve_h1",
]

_EPS = np.finfo(float).eps

# relative error budgets per routine (deliberately pessimistic)
_GAMMA_REL = 64 * _EPS
_AIRY_ABS = 1e-13
_K_REL = 1e-12
_PCF_REL = 1e-10
_J1_ABS = 1e-14
_H1_ABS = 1e-12

AIRY_RANGE = (-400.0, 100.0)
PCF_NU_RANGE = (-0.5, 200.0)
PCF_X_RANGE = (-10.0, 40.0)
# below this distance from an integer order, negative x goes through mpmath
_NEAR_INTEGER = 1e-3


class DomainError(ValueError):
    """Argument outside the documented domain of a special function."""


class RangeError(ArithmeticError):
    """Result not representable in double precision."""


class FnEval(NamedTuple):
    value: float | np.ndarray
    abs_error_estimate: float | np.ndarray


def _out(value, err):
    value = np.asarray(value, dtype=float)
    err = np.asarray(err, dtype=float)
    if value.ndim == 0:
        return FnEval(float(value), float(err))
    return FnEval(value, err)


def gamma(x) -> FnEval:
    """Gamma function for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("gamma requires x > 0")
    g = sp.gamma(x)
    if np.any(~np.isfinite(g)):
        raise RangeError("gamma overflow")
    return _out(g, _GAMMA_REL * np.abs(g))


def beta(a, b) -> FnEval:
    """Euler beta function ``B(a, b)`` for positive arguments.

    Arguments are sorted before evaluation, so ``beta(a, b) == beta(b, a)``
    bit for bit.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise DomainError("beta requires a, b > 0")
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    val = sp.beta(lo, hi)
    return _out(val, _GAMMA_REL * 3 * np.abs(val))


def airy_ai(x) -> tuple[FnEval, FnEval]:
    """Airy ``Ai(x)`` and ``Ai'(x)`` on ``[-400, 100]``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < AIRY_RANGE[0]) or np.any(x > AIRY_RANGE[1]) or np.any(np.isnan(x)):
        raise DomainError(f"airy_ai supports x in {AIRY_RANGE}")
    ai, aip, _, _ = sp.airy(x)
    # the oscillatory branch grows like |x|^(1/4) in the derivative
    scale = 1.0 + np.abs(x) ** 0.25
    return _out(ai, _AIRY_ABS * scale), _out(aip, _AIRY_ABS * scale * (1 + np.abs(x)) ** 0.5)


def bessel_k(nu, x) -> FnEval:
    """Modified Bessel ``K_nu(x)`` for ``nu`` in (0, 1/2] and ``x > 0``."""
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("bessel_k requires x > 0")
    if np.any(~((nu > 0) & (nu <= 0.5))):
        raise DomainError("bessel_k supports 0 < nu <= 1/2")
    k = sp.kv(nu, x)
    return _out(k, _K_REL * np.abs(k))


def _pcf_at_zero(nu):
    # D_nu(0) = 2^(nu/2) sqrt(pi) / G((1-nu)/2),  D'_nu(0) = -2^((nu+1)/2) sqrt(pi) / G(-nu/2)
    root_pi = math.sqrt(math.pi)
    d0 = 2.0 ** (nu / 2) * root_pi * sp.rgamma((1 - nu) / 2)
    d1 = -(2.0 ** ((nu + 1) / 2)) * root_pi * sp.rgamma(-nu / 2)
    return d0, d1


def pcf_at_origin(nu) -> tuple[FnEval, FnEval]:
    """``D_nu(0)`` and ``D_nu'(0)`` from the Gamma-function closed forms (vectorized in nu)."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < PCF_NU_RANGE[0]) or np.any(nu > PCF_NU_RANGE[1]):
        raise DomainError(f"parabolic_cylinder_d supports nu in {PCF_NU_RANGE}")
    d0, d1 = _pcf_at_zero(nu)
    return _out(d0, _GAMMA_REL * 4 * np.abs(d0)), _out(d1, _GAMMA_REL * 4 * np.abs(d1))


def _weber_rhs(x, y, nu):
    return [y[1], (x * x / 4 - nu - 0.5) * y[0]]


def _pcf_negative(nu: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d0, d1 = (float(v) for v in _pcf_at_zero(nu))
    order = np.argsort(-x)  # from 0 toward the most negative point
    xs = x[order]
    # an absolute floor tied to the starting scale keeps step selection sane when D or D' is 0 at x = 0
    atol = 1e-16 * max(abs(d0), abs(d1))
    sol = solve_ivp(
        _weber_rhs, (0.0, float(xs[-1])), [d0, d1], args=(nu,),
        method="DOP853", rtol=1e-13, atol=atol, t_eval=xs, dense_output=False,
    )
    if not sol.success:
        raise RangeError(f"Weber integration failed: {sol.message}")
    val = np.empty_like(x)
    der = np.empty_like(x)
    val[order] = sol.y[0]
    der[order] = sol.y[1]
    return val, der


def _pcf_mpmath(nu: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # near-integer order: the growing component is tiny, so integrating from 0 is ill-conditioned
    with mpmath.workdps(30):
        val = [float(mpmath.pcfd(nu, t)) for t in x]
        # D'_nu(x) = x/2 D_nu(x) - D_{nu+1}(x)
        der = [float(t / 2 * mpmath.pcfd(nu, t) - mpmath.pcfd(nu + 1, t)) for t in x]
    return np.array(val), np.array(der)


def parabolic_cylinder_d(nu: float, x) -> tuple[FnEval, FnEval]:
    """Weber function ``D_nu(x)`` and its derivative, the solution of
    ``y'' + (nu + 1/2 - x^2/4) y = 0`` that decays as ``x -> +inf``.

    Supported for ``nu`` in [-1/2, 200] and ``x`` in [-10, 40].
    """
    nu = float(nu)
    if not PCF_NU_RANGE[0] <= nu <= PCF_NU_RANGE[1]:
        raise DomainError(f"parabolic_cylinder_d supports nu in {PCF_NU_RANGE}")
    x = np.asarray(x, dtype=float)
    if np.any(x < PCF_X_RANGE[0]) or np.any(x > PCF_X_RANGE[1]) or np.any(np.isnan(x)):
        raise DomainError(f"parabolic_cylinder_d supports x in {PCF_X_RANGE}")
    flat = np.atleast_1d(x).ravel()
    val = np.empty_like(flat)
    der = np.empty_like(flat)
    neg = flat < 0
    zero = flat == 0
    pos = flat > 0
    if np.any(pos):
        val[pos], der[pos] = sp.pbdv(nu, flat[pos])
    if np.any(zero):
        val[zero], der[zero] = _pcf_at_zero(nu)
    if np.any(neg):
        near = abs(nu - round(nu))
        if near == 0:
            # Hermite case: pbdv is exact and the ODE would chase a recessive solution
            val[neg], der[neg] = sp.pbdv(nu, flat[neg])
        elif near < _NEAR_INTEGER:
            val[neg], der[neg] = _pcf_mpmath(nu, flat[neg])
        else:
            val[neg], der[neg] = _pcf_negative(nu, flat[neg])
    if not (np.all(np.isfinite(val)) and np.all(np.isfinite(der))):
        raise RangeError("parabolic cylinder function overflow")
    val = val.reshape(x.shape)
    der = der.reshape(x.shape)
    return _out(val, _PCF_REL * np.abs(val)), _out(der, _PCF_REL * np.abs(der))


def bessel_j1(x) -> FnEval:
    """Bessel ``J_1(x)`` for ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise DomainError("bessel_j1 requires x >= 0")
    return _out(sp.j1(x), np.full(x.shape, _J1_ABS))


def struve_h1(x) -> FnEval:
    """Struve ``H_1(x)`` for ``x >= 0``; tends to ``2/pi`` at infinity."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0)):
        raise DomainError("struve_h1 requires x >= 0")
    return _out(sp.struve(1, x), np.full(x.shape, _H1_ABS))
