"""Scattering modes of the power-law wall ``v(z) = lambda0 (z/z0)^alpha`` (z > 0).

For ``z < 0`` every mode is ``sqrt(2/pi) sin(p z - delta(p))``; inside the
wall it is ``C(p) P(z/zhat, (zhat p)^2)`` with ``P`` the solution of
``-P'' + (z^alpha - E) P = 0`` that decays at infinity.  Matching at
``z = 0`` gives ``tan delta = -p P(0)/P'(0)`` and the normalization
``C^2 = (2/pi) / (P^2 + P'^2/p^2)``.

``alpha = 1`` and ``alpha = 2`` use Airy and Weber functions; any other
exponent integrates the ODE inward from a WKB-seeded point in the
classically forbidden region, carrying the Pruefer angle along so the
phase shift comes out already unwrapped.  All energies share one solve.

The kink of the potential at ``z = 0`` reflects a little of every wave,
``S -> A q^-(alpha+2)`` once the turning-point factor has decayed off the
real axis, which puts a ripple at twice the phase on ``delta``.  Off the
real axis the ODE route models ``S`` as that echo plus the smooth tail
``c q^b + c0 + c1 q^-b``, fitted just below ``p_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, least_squares

from . import specfun
from .phase import PhaseShiftFn

__all__ = [
    "WallModel",
    "ModeSolution",
    "NumericalFailure",
    "PhaseModelError",
    "AIRY",
    "CYLINDER",
    "ODE",
    "p_alpha",
    "phase_shift",
    "phase_shift_grid",
    "small_p_slope",
    "delta_small_p",
    "delta_large_p",
    "wkb_mode",
    "make_phase_model",
]

AIRY = "ClosedFormAiry"
CYLINDER = "ClosedFormCylinder"
ODE = "OdeGeneral"

E_MAX = 400.0
# decay action between the seed point and the nearest requested point
_SEED_ACTION = 35.0


class NumericalFailure(RuntimeError):
    """An ODE integration or root solve did not converge."""


class PhaseModelError(ValueError):
    """The exact phase shift and its large-p asymptote do not join smoothly."""


@dataclass(frozen=True)
class WallModel:
    alpha: float
    lambda0: float = 1.0
    z0: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 1:
            raise ValueError("alpha must be >= 1")
        if not (self.lambda0 > 0 and self.z0 > 0):
            raise ValueError("lambda0 and z0 must be positive")

    @property
    def zhat(self) -> float:
        return (self.z0**self.alpha / self.lambda0) ** (1.0 / (self.alpha + 2))

    def potential(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z > 0, self.lambda0 * (np.maximum(z, 0) / self.z0) ** self.alpha, 0.0)

    def turning_point(self, p: float) -> float:
        return self.z0 * (p * p / self.lambda0) ** (1.0 / self.alpha)


@dataclass(frozen=True)
class ModeSolution:
    p: float
    delta: float
    c_norm_sq: float
    method: str


def _route(alpha: float, method: str | None) -> str:
    if method is not None:
        if method not in (AIRY, CYLINDER, ODE):
            raise ValueError(f"unknown method {method!r}")
        if (method == AIRY and alpha != 1) or (method == CYLINDER and alpha != 2):
            raise ValueError(f"{method} requires a matching alpha")
        return method
    if alpha == 1:
        return AIRY
    if alpha == 2:
        return CYLINDER
    return ODE


# -- general-alpha integrator -------------------------------------------------

def _forbidden_action(alpha, E, z1, z2):
    val, _ = quad(lambda t: math.sqrt(max(t**alpha - E, 0.0)), z1, z2, limit=200)
    return val


def _seed_point(alpha: float, E: float, z_start: float) -> float:
    a = E ** (1.0 / alpha) if E > 0 else 0.0
    lo = max(a, z_start)
    hi = max(2 * lo, lo + 1.0)
    while _forbidden_action(alpha, E, lo, hi) < _SEED_ACTION:
        hi = lo + 2 * (hi - lo)
    return brentq(lambda z: _forbidden_action(alpha, E, lo, z) - _SEED_ACTION, lo, hi, xtol=1e-10)


def _ode_phase_batch(alpha: float, q):
    """Unwrapped ``delta`` for many dimensionless ``q`` from one inward solve.

    Only the Pruefer angle is carried, ``theta' = q cos^2 - (w/q) sin^2``,
    so nothing overflows; every component starts at the seed point of the
    largest energy, which is deeper than its own and only shrinks the
    seed error.
    """
    q = np.asarray(q, dtype=float)
    E = q * q
    zf = _seed_point(alpha, float(E.max()), 0.0)
    kappa = np.sqrt(zf**alpha - E)
    dlog = -kappa - alpha * zf ** (alpha - 1) / (4 * kappa**2)

    def rhs(z, th):
        c, s = np.cos(th), np.sin(th)
        return q * c * c - ((z**alpha - E) / q) * s * s

    sol = solve_ivp(rhs, (zf, 0.0), np.arctan2(1.0, dlog / q), method="DOP853", rtol=1e-11, atol=1e-12)
    if sol.status != 0:
        raise NumericalFailure(f"inward integration failed: {sol.message}")
    return np.pi - sol.y[:, -1]


def _ode_solve(alpha: float, E: float, z_eval):
    """Decaying solution, derivative and Pruefer angle at ``z_eval``.

    The angle is ``atan2(P, P'/q)`` with ``q = sqrt(E)``, continued
    continuously from the seed point inward.
    """
    z_eval = np.atleast_1d(np.asarray(z_eval, dtype=float))
    zf = _seed_point(alpha, E, float(z_eval.max()))
    kappa = math.sqrt(zf**alpha - E)
    dlog = -kappa - alpha * zf ** (alpha - 1) / (4 * kappa**2)
    q = math.sqrt(E) if E > 0 else 1.0

    def rhs(z, y):
        pv, dp, _ = y
        w = abs(z) ** alpha - E
        rr = pv * pv + dp * dp / (q * q)
        return [dp, w * pv, (dp * dp - pv * pv * w) / (q * rr)]

    order = np.argsort(-z_eval)
    zs = z_eval[order]
    y0 = [1.0, dlog, math.atan2(1.0, dlog / q)]
    t_eval = zs if zs[0] < zf else zs[zs < zf]
    sol = solve_ivp(rhs, (zf, float(zs[-1])), y0, method="DOP853", rtol=1e-11, atol=1e-13, t_eval=t_eval)
    if sol.status != 0:
        raise NumericalFailure(f"inward integration failed: {sol.message}")
    out = np.empty((3, z_eval.size))
    out[:, order] = sol.y
    return out[0], out[1], out[2]


# -- decaying solution ---------------------------------------------------------

def p_alpha(model: WallModel, z, E: float, method: str | None = None, e_max: float = E_MAX):
    """Decaying solution ``P_alpha(z, E)`` and ``dP/dz`` (dimensionless variables).

    Positive as ``z -> inf``; the overall scale depends on the route and
    only ratios are meaningful.
    """
    route = _route(model.alpha, method)
    if not 0 <= E <= e_max:
        raise ValueError(f"E must lie in [0, {e_max}]")
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("p_alpha requires z >= 0")
    if route == AIRY:
        ai, aip = specfun.airy_ai(z - E)
        val, der = ai.value, aip.value
    elif route == CYLINDER:
        d, dd = specfun.parabolic_cylinder_d((E - 1) / 2, math.sqrt(2) * z)
        val, der = d.value, math.sqrt(2) * np.asarray(dd.value)
    else:
        v, d, _ = _ode_solve(model.alpha, E, z)
        val, der = (v[0], d[0]) if z.ndim == 0 else (v.reshape(z.shape), d.reshape(z.shape))
    return val, der


def _origin_values(alpha, q, route):
    """``P(0, q^2)`` and ``P'(0, q^2)`` for an array of dimensionless q."""
    E = q * q
    if route == AIRY:
        ai, aip = specfun.airy_ai(-E)
        return np.asarray(ai.value), np.asarray(aip.value)
    if route == CYLINDER:
        d0, d1 = specfun.pcf_at_origin((E - 1) / 2)
        return np.asarray(d0.value), math.sqrt(2) * np.asarray(d1.value)
    raise AssertionError(route)


def _raw_angle(P, dP, q):
    return np.arctan2(-P, dP / q)


def _slope_bound(model: WallModel, q):
    # generous bound on d(delta)/dq used to size unwrapping steps
    beta_exp = 1 + 2 / model.alpha
    coef = _large_coef(model.alpha)
    return 1.5 * np.maximum(_small_coef(model.alpha), beta_exp * coef * q ** (beta_exp - 1)) + 0.5


def _unwrapped_closed_form(model: WallModel, q_targets, route):
    """Unwrap the closed-form phase on a refined grid anchored near q = 0."""
    q_targets = np.asarray(q_targets, dtype=float)
    qmax = float(q_targets.max())
    q0 = min(1e-3, float(q_targets.min()))
    nodes = [q0]
    q = q0
    while q < qmax:
        q = q + (math.pi / 8) / float(_slope_bound(model, q))
        nodes.append(q)
    grid = np.union1d(np.asarray(nodes[:-1]), q_targets)
    for _ in range(40):
        P, dP = _origin_values(model.alpha, grid, route)
        raw = _raw_angle(P, dP, grid)
        jumps = np.mod(np.diff(raw) + np.pi / 2, np.pi) - np.pi / 2
        bad = np.abs(jumps) > np.pi / 4
        if not np.any(bad):
            break
        grid = np.union1d(grid, 0.5 * (grid[:-1][bad] + grid[1:][bad]))
    else:
        raise NumericalFailure("phase unwrapping did not settle")
    delta = np.unwrap(raw, period=np.pi)
    delta += np.pi * np.round(-delta[0] / np.pi)  # anchor delta(0+) = 0
    c2 = (2 / np.pi) / (P * P + dP * dP / (grid * grid))
    return grid, delta, c2


def phase_shift_grid(model: WallModel, p, method: str | None = None):
    """Unwrapped ``delta(p)`` and ``C(p)^2`` for an array of ``p > 0``.

    Returns ``(delta, c_norm_sq)`` with the shape of ``p``.
    """
    route = _route(model.alpha, method)
    p = np.asarray(p, dtype=float)
    if np.any(~(p > 0)):
        raise ValueError("phase_shift requires p > 0")
    q = model.zhat * p.ravel()
    if q.size and float(q.max()) ** 2 > E_MAX:
        raise ValueError(f"(zhat p)^2 exceeds E_max = {E_MAX}")
    if route == ODE:
        delta = np.empty(q.size)
        c2 = np.empty(q.size)
        for i, qi in enumerate(q):
            P, dP, psi = _ode_solve(model.alpha, qi * qi, 0.0)
            delta[i] = np.pi - psi[0]
            c2[i] = (2 / np.pi) / (P[0] ** 2 + dP[0] ** 2 / qi**2)
    else:
        grid, dg, cg = _unwrapped_closed_form(model, q, route)
        idx = np.searchsorted(grid, q)
        delta, c2 = dg[idx], cg[idx]
    return delta.reshape(p.shape), c2.reshape(p.shape)


def phase_shift(model: WallModel, p: float, method: str | None = None) -> ModeSolution:
    """Exact phase shift on the continuous branch with ``delta(0+) = 0``."""
    route = _route(model.alpha, method)
    d, c2 = phase_shift_grid(model, np.array([p]), route)
    return ModeSolution(float(p), float(d[0]), float(c2[0]), route)


# -- asymptotics ----------------------------------------------------------------

def _small_coef(alpha: float) -> float:
    k = alpha + 2
    g_num = specfun.gamma((alpha + 3) / k).value
    g_den = specfun.gamma((alpha + 1) / k).value
    return k ** (2 / k) * g_num / g_den


def _large_coef(alpha: float) -> float:
    return specfun.beta(1.5, 1 / alpha).value / alpha


def small_p_slope(model: WallModel) -> float:
    """Effective hard-wall position: the coefficient of ``p`` in ``delta`` at small p."""
    return model.zhat * _small_coef(model.alpha)


def delta_small_p(model: WallModel, p):
    """Linear small-p asymptote of the phase shift (the cubic term is not included)."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("p must be >= 0")
    r = small_p_slope(model) * p
    return r if r.ndim else float(r)


def delta_large_p(model: WallModel, p):
    """Two-term WKB asymptote ``(1/alpha) q^(1+2/alpha) B(3/2, 1/alpha) + pi/4``, ``q = zhat p``."""
    p = np.asarray(p, dtype=float)
    if np.any(~(p > 0)):
        raise ValueError("p must be > 0")
    q = model.zhat * p
    r = _large_coef(model.alpha) * q ** (1 + 2 / model.alpha) + np.pi / 4
    return r if r.ndim else float(r)


def wkb_mode(model: WallModel, p: float, z, guard: float = 0.1):
    """WKB mode ``(p^2 - v)^(-1/4) cos(int_z^a sqrt(p^2 - v) - pi/4)``.

    Valid below the turning point ``a``; points within ``guard * a`` of it
    are rejected because the amplitude diverges there.
    """
    if not p > 0:
        raise ValueError("p must be > 0")
    z = np.asarray(z, dtype=float)
    a = model.turning_point(p)
    if np.any(z >= a * (1 - guard)):
        raise ValueError("z inside the turning-point guard band")
    alpha = model.alpha
    x = (np.clip(z, 0, None) / a) ** alpha
    full = p * a / alpha * specfun.beta(1 / alpha, 1.5).value
    phase = full * (1 - sp.betainc(1 / alpha, 1.5, x)) + p * np.clip(-z, 0, None)
    amp = (p * p - model.potential(z)) ** -0.25
    r = amp * np.cos(phase - np.pi / 4)
    return r if r.ndim else float(r)


# -- packaged phase model ----------------------------------------------------------

_DEFAULT_PMAX = {1: 10.0, 2: 12.0}


def _real_plus_zero(w):
    # scipy's complex Airy picks the wrong branch on the cut for imag == -0.0
    return w.real + 1j * (w.imag + 0.0)


def _log_s_airy(q):
    q = np.asarray(q, dtype=complex)
    ai, aip, _, _ = sp.airye(_real_plus_zero(-q * q))
    r = aip / ai
    return np.log(r + 1j * q) - np.log(r - 1j * q)


def _log_s_cylinder(q):
    shape = np.shape(q)
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    nu = (q * q - 1) / 2
    with np.errstate(all="ignore"):
        # P'(0)/P(0) for D_nu(sqrt(2) z)
        r = -2 * np.exp(sp.loggamma((1 - nu) / 2) - sp.loggamma(-nu / 2))
        bad = ~np.isfinite(r)
        r[bad] = -2 * sp.rgamma(-nu[bad] / 2) / sp.rgamma((1 - nu[bad]) / 2)
        out = np.log(r + 1j * q) - np.log(r - 1j * q)
    out[np.isinf(r)] = 0.0
    return out.reshape(shape)


def _edge_reflection(alpha: float) -> complex:
    """Coefficient ``A`` of the non-oscillating part ``A q^-(alpha+2)`` of ``exp(-2i delta)``.

    It is the Born reflection off the non-smooth point ``z = 0``; the
    turning-point asymptote alone misses it, and on the rotated contour it
    outlives the turning-point factor.
    """
    return -specfun.gamma(alpha + 1).value * np.exp(-0.5j * np.pi * alpha) / 2 ** (alpha + 2)


def _fit_smooth_tail(alpha, qg, dg, q_max, coef, amp, window=0.6):
    """Least-squares ``(c0, c1)`` in ``coef q^b + c0 + c1 q^-b`` plus the edge echo, over ``[window q_max, q_max]``."""
    b = 1 + 2 / alpha
    sel = qg >= window * q_max
    q, d = qg[sel], dg[sel]

    def resid(c):
        smooth = coef * q**b + c[0] + c[1] * q**-b
        echo = amp * q ** -(alpha + 2) * np.exp(2j * smooth)
        return smooth - 0.5 * np.angle(1 + echo) - d

    start = [float(np.mean(d - coef * q**b)), 0.0]
    return least_squares(resid, start, xtol=1e-15, ftol=1e-15, gtol=1e-15).x


def make_phase_model(
    model: WallModel,
    p_max: float | None = None,
    method: str | None = None,
    max_offset: float = 0.1,
    n_ode: int = 240,
) -> PhaseShiftFn:
    """Exact ``delta`` on ``(0, p_max]`` joined to the large-p asymptote beyond.

    The asymptote is shifted by a constant so the join is continuous;
    a shift larger than ``max_offset`` means ``p_max`` is too small and
    raises :class:`PhaseModelError`.
    """
    route = _route(model.alpha, method)
    if p_max is None:
        p_max = _DEFAULT_PMAX.get(model.alpha, max(12.0, 4.0 * model.alpha))
    zhat = model.zhat
    q_max = zhat * p_max
    if route == ODE:
        # delta carries a small ripple at twice its own phase (reflection off the
        # non-smooth origin), so nodes are spaced by phase, not by p
        q, nodes = 0.0, []
        while q < q_max:
            q = q + (math.pi / 16) / float(_slope_bound(model, q))
            nodes.append(min(q, q_max))
        qg = np.union1d(q_max * np.linspace(0, 1, n_ode + 1)[1:], nodes)
        dg = _ode_phase_batch(model.alpha, qg)
        coarse = CubicSpline(np.r_[0.0, qg[1::2]], np.r_[0.0, dg[1::2]])
        interp_err = float(np.max(np.abs(coarse(qg[::2]) - dg[::2])))
        spline = CubicSpline(np.r_[0.0, qg], np.r_[0.0, dg])

        def core(p):
            return spline(zhat * np.asarray(p, dtype=float))

        d_end = float(dg[-1])
    else:
        interp_err = 0.0
        grid, dg, _ = _unwrapped_closed_form(model, np.array([q_max]), route)
        spline = CubicSpline(np.r_[0.0, grid], np.r_[0.0, dg])

        def core(p):
            q = zhat * np.asarray(p, dtype=float)
            out = np.zeros(q.shape)
            pos = q > 0
            P, dP = _origin_values(model.alpha, q[pos], route)
            raw = _raw_angle(P, dP, q[pos])
            out[pos] = raw + np.pi * np.round((spline(q[pos]) - raw) / np.pi)
            return out

        d_end = float(dg[-1])
    offset = d_end - delta_large_p(model, p_max)
    if abs(offset) > max_offset:
        raise PhaseModelError(
            f"exact and asymptotic phase differ by {offset:.3g} rad at p_max={p_max}; increase p_max"
        )
    beta_exp = 1 + 2 / model.alpha
    tail_coef = _large_coef(model.alpha) * zhat**beta_exp
    tail_const = np.pi / 4 + offset
    if route != ODE:
        exact = _log_s_airy if route == AIRY else _log_s_cylinder

        def log_s(p):
            return exact(zhat * np.asarray(p))
    else:
        amp = _edge_reflection(model.alpha)
        c0, c1 = _fit_smooth_tail(model.alpha, qg, dg, q_max, _large_coef(model.alpha), amp)

        def log_s(p):
            p = np.asarray(p, dtype=complex)
            q = zhat * p
            turn = -2j * (tail_coef * p**beta_exp + c0 + c1 * q ** (-beta_exp))
            edge = np.log(amp) - (model.alpha + 2) * np.log(zhat * p)
            top = np.maximum(turn.real, edge.real)
            return top + np.log(np.exp(turn - top) + np.exp(edge - top))

    return PhaseShiftFn(
        kind="soft_wall",
        small_p_slope=small_p_slope(model),
        large_p_exponent=beta_exp,
        tail_coef=tail_coef,
        tail_const=tail_const,
        p_switch=p_max,
        core=core,
        params={"alpha": model.alpha, "lambda0": model.lambda0, "z0": model.z0,
                "route": route, "offset": offset, "interp_err": interp_err},
        log_s=log_s,
    )
