"""Renormalized cylinder kernel in the potential-free region ``z < 0``.

Everything here reduces to one-dimensional damped oscillatory integrals

    I_k(s; Z) = int_0^inf p^k exp(-s p) cos(Z p - 2 delta(p)) dp,

evaluated in two pieces.  On ``[0, P]`` (``P`` = where the phase model
switches to its analytic tail) we use Gauss-Legendre panels whose width
tracks the local phase, so each panel sees at most ``panel_phase``
radians of oscillation.  Beyond ``P`` the tail ``c p^b + d`` is analytic
and the phase ``Z p - 2 delta`` falls monotonically.  So the contour is
rotated onto the ray ``P + t exp(-i theta)``, ``theta = pi/(2b)``, where the
integrand decays exponentially.  When the phase model carries the exact
continuation of ``exp(-2i delta)`` that factor is used on the ray instead
of the tail.  It tends to a small non-oscillating remainder, so the ray is
then extended until ``exp(iZp)`` alone has decayed.  The rotation also defines the ``s -> 0``
Abel limit, which is how the undamped (distributional) integrals are
assigned values.

The regularized polar form with ``s > 0`` reduces to the Cartesian one
because ``int_0^inf sin(s w) w/(w^2+p^2) dw = (pi/2) exp(-s p)``, so the
diagonal profile is obtained from ``I_0(s; 2z) / (2 pi^2 s)`` on an
s-ladder, polynomially extrapolated to ``s = 0``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import least_squares

from . import specfun
from .phase import PhaseShiftFn

__all__ = [
    "PhaseShiftFn",
    "QuadratureConfig",
    "KernelQuery",
    "ProfileResult",
    "ProbeReport",
    "CountertermTerms",
    "ConvergenceError",
    "damped_integral",
    "tbar_hardwall_diag",
    "tbar_hardwall_offdiag",
    "tbar_ren_cartesian",
    "tbar_ren_polar_diag",
    "tbar_ren_diag_abel",
    "distributional_residual",
    "polar_u_integral",
    "polar_diag_linear_truncated",
    "compute_profile",
    "pathology_probe",
    "effective_wall_position",
    "counterterm_density",
    "CONVERGENT",
    "DIVERGENT",
    "PATHOLOGY_ABS_FLOOR",
]

TWO_PI2 = 2 * math.pi**2
EIGHT_PI2 = 8 * math.pi**2

CONVERGENT = "Convergent"
DIVERGENT = "DivergentAs1OverS"
# |lim s*T_s| above this (and above 10x its error) counts as a 1/s divergence
PATHOLOGY_ABS_FLOOR = 1e-14


class ConvergenceError(ArithmeticError):
    """Requested tolerance not reached; carries the best partial result."""

    def __init__(self, message, value=float("nan"), err=float("inf")):
        super().__init__(message)
        self.value = value
        self.err = err


@dataclass(frozen=True)
class QuadratureConfig:
    rho_max: float = 0.0
    s_ladder: tuple[float, ...] = (0.4, 0.2, 0.1, 0.05)
    extrapolation_order: int = 3
    abs_tol: float = 1e-9
    rel_tol: float = 1e-3
    nodes_per_panel: int = 16
    panel_phase: float = math.pi

    def __post_init__(self):
        ladder = tuple(float(s) for s in self.s_ladder)
        object.__setattr__(self, "s_ladder", ladder)
        if any(s <= 0 for s in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("s_ladder must be positive and strictly decreasing")
        if self.extrapolation_order < 1:
            raise ValueError("extrapolation_order must be >= 1")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")

    def refined(self) -> QuadratureConfig:
        """Same configuration at double quadrature resolution."""
        return QuadratureConfig(self.rho_max, self.s_ladder, self.extrapolation_order,
                                self.abs_tol, self.rel_tol, 2 * self.nodes_per_panel,
                                self.panel_phase / 2)


@dataclass(frozen=True)
class KernelQuery:
    z: float
    z_prime: float
    s: float
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        if not self.z + self.z_prime < 0:
            raise ValueError("kernel queries need z + z' < 0")
        if not self.s >= 0:
            raise ValueError("s must be >= 0")

    @property
    def z_sum(self) -> float:
        return self.z + self.z_prime


@dataclass
class ProfileResult:
    z_grid: list[float]
    tbar: list[float]
    err: list[float]
    hardwall_ref: list[float]
    failures: list[int] = field(default_factory=list)


# -- quadrature engine -----------------------------------------------------------

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _panel_edges(path, a, b, max_phase, max_width, max_decay=None):
    """Split [a, b] so that ``path`` (a complex exponent) varies by at most
    ``max_phase`` in its imaginary part (and ``max_decay`` in its real part)."""
    n = 4001
    for _ in range(8):
        x = np.linspace(a, b, n)
        ex = path(x)
        step = np.abs(np.diff(ex.imag))
        if step.max(initial=0.0) <= 0.25 * max_phase:
            break
        n = 4 * n
    cum = np.concatenate([[0.0], np.cumsum(step)]) / max_phase
    if max_decay is not None:
        dec = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(ex.real)))]) / max_decay
        cum = np.maximum(cum, dec)
    idx = np.searchsorted(cum, np.arange(1, math.ceil(cum[-1]) + 1), side="left")
    idx = idx[(idx > 0) & (idx < n - 1)]
    edges = np.unique(np.concatenate([[a], x[idx], [b]]))
    # cap the width so smooth envelopes (p^k, e^{-sp}) stay resolved
    widths = np.diff(edges)
    splits = np.maximum(1, np.ceil(widths / max_width)).astype(int)
    if np.any(splits > 1):
        edges = np.concatenate(
            [np.linspace(lo, hi, k + 1)[:-1] for lo, hi, k in zip(edges[:-1], edges[1:], splits)] + [[b]]
        )
    return edges


def _composite(fvals_fn, edges, n):
    """Composite Gauss-Legendre of a vectorized function returning (m, npts) rows."""
    x, w = _gauss(n)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x[None, :] + 1)).ravel()
    weights = (half * w[None, :]).ravel()
    f = fvals_fn(nodes)
    return f @ weights, np.abs(f) @ np.abs(weights)


def _finite_part(delta, Z, s_values, k, P, cfg):
    def path(p):
        return 1j * (Z * p - 2 * np.asarray(delta(p)))

    edges = _panel_edges(path, 0.0, P, cfg.panel_phase, 1.0)

    def fvals(p):
        osc = np.cos(Z * p - 2 * np.asarray(delta(p)))
        return (p**k * osc)[None, :] * np.exp(-np.outer(s_values, p))

    n = cfg.nodes_per_panel
    lo_val, _ = _composite(fvals, edges, n)
    hi_val, absum = _composite(fvals, edges, 2 * n)
    err = np.abs(hi_val - lo_val) + 8 * np.finfo(float).eps * absum
    return hi_val, err


def _ray_angle(delta: PhaseShiftFn) -> float:
    b = delta.large_p_exponent
    if delta.tail_coef == 0.0 or b <= 1.0:
        return math.pi / 2
    return math.pi / (2 * b)


def _decay_end(log_mag, ref, start=1.0 / 64):
    # double t until log|integrand| has dropped by 48 below ref
    t = start
    for _ in range(80):
        if log_mag(t) - ref < -48:
            return t
        t *= 2
    raise ConvergenceError("contour tail does not decay; phase model unsuitable for Z")


def _tail_part(delta, Z, s_values, k, P, cfg):
    theta = _ray_angle(delta)
    rot = np.exp(-1j * theta)
    exact = delta.log_s is not None

    def model_exp(t, s=0.0):
        p = P + t * rot
        return 1j * (Z * p - 2 * delta.tail(p)) - s * p

    def free_exp(t, s=0.0):
        p = P + t * rot
        return 1j * Z * p - s * p

    def true_exp(t, s=0.0):
        p = P + t * rot
        return 1j * Z * p + delta.log_scattering(p) - s * p

    vals = np.empty(len(s_values))
    errs = np.empty(len(s_values))
    for i, s in enumerate(s_values):
        ref = model_exp(np.array([0.0]), s)[0].real + k * math.log(max(P, 1.0))

        def log_mag(t, fn, s=s):
            return fn(np.array([t]), s)[0].real + k * math.log(abs(P + t * rot))

        # the power-law tail sets the oscillation scale until it has died away
        t_wave = _decay_end(lambda t: log_mag(t, model_exp), ref)
        edges = _panel_edges(lambda t, s=s: model_exp(t, s), 0.0, t_wave, cfg.panel_phase,
                             max(t_wave / 64, 1e-300), max_decay=4.0)
        if exact:
            # the exact factor keeps a slowly varying remainder carried by e^{iZp}
            t_end = max(t_wave, _decay_end(lambda t: log_mag(t, true_exp), ref, t_wave))
            if t_end > t_wave:
                more = _panel_edges(lambda t, s=s: free_exp(t, s), t_wave, t_end, cfg.panel_phase,
                                    max((t_end - t_wave) / 64, 1e-300), max_decay=4.0)
                edges = np.concatenate([edges, more[1:]])
        integrand_exp = true_exp if exact else model_exp

        def fvals(t, s=s):
            p = P + t * rot
            h = p**k * np.exp(integrand_exp(t, s)) * rot
            return h.real[None, :]

        n = cfg.nodes_per_panel
        lo_val, _ = _composite(fvals, edges, n)
        hi_val, absum = _composite(fvals, edges, 2 * n)
        vals[i] = hi_val[0]
        errs[i] = abs(hi_val[0] - lo_val[0]) + 8 * np.finfo(float).eps * absum[0]
    return vals, errs


def damped_integral(delta: PhaseShiftFn, Z: float, s_values, k: int = 0, cfg: QuadratureConfig | None = None):
    """``int_0^inf p^k e^{-s p} cos(Z p - 2 delta(p)) dp`` for each ``s`` (Abel limit at ``s = 0``).

    Returns ``(values, errors)`` arrays.
    """
    cfg = cfg or QuadratureConfig()
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    if np.any(s_values < 0):
        raise ValueError("s must be >= 0")
    P = max(delta.p_switch, cfg.rho_max)
    vals = np.zeros(s_values.size)
    errs = np.zeros(s_values.size)
    if P > 0:
        v, e = _finite_part(delta, Z, s_values, k, P, cfg)
        vals += v
        errs += e
    v, e = _tail_part(delta, Z, s_values, k, P, cfg)
    vals += v
    errs += e
    return vals, errs


# -- closed-form hard wall ---------------------------------------------------------

def tbar_hardwall_diag(z, z0: float = 1.0):
    """Hard-wall diagonal value ``1 / (8 pi^2 (z - z0)^2)``."""
    z = np.asarray(z, dtype=float)
    if np.any(z == z0):
        raise ValueError("hard-wall kernel is singular at z = z0")
    r = 1.0 / (EIGHT_PI2 * (z - z0) ** 2)
    return r if r.ndim else float(r)


def tbar_hardwall_offdiag(q: KernelQuery, z0: float = 1.0) -> float:
    """Image solution ``1 / (2 pi^2 (s^2 + (z + z' - 2 z0)^2))``."""
    d = q.z_sum - 2 * z0
    if q.s == 0 and d == 0:
        raise ValueError("image singularity")
    return 1.0 / (TWO_PI2 * (q.s**2 + d * d))


# -- kernel representations ----------------------------------------------------------

def _check(value, err, cfg, what):
    if not np.isfinite(value) or err > max(cfg.abs_tol, cfg.rel_tol * abs(value)):
        raise ConvergenceError(f"{what}: tolerance not met (value={value:.6g}, err={err:.3g})", value, err)


def tbar_ren_cartesian(delta: PhaseShiftFn, q: KernelQuery) -> tuple[float, float]:
    """Damped Cartesian integral ``(1/2 pi^2) int e^{-sp}/s cos(pZ - 2 delta) dp``; needs ``s > 0``."""
    if not q.s > 0:
        raise ValueError("the Cartesian representation needs s > 0; use tbar_ren_polar_diag on diagonal")
    v, e = damped_integral(delta, q.z_sum, [q.s], 0, q.quad)
    value = float(v[0]) / (TWO_PI2 * q.s)
    err = float(e[0]) / (TWO_PI2 * q.s)
    _check(value, err, q.quad, "tbar_ren_cartesian")
    return value, err


def _neville_at_zero(xs, ys):
    xs = list(xs)
    p = list(ys)
    n = len(xs)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i])
    return p[0]


def _lagrange_weights_at_zero(xs):
    xs = np.asarray(xs, dtype=float)
    w = np.ones(xs.size)
    for i in range(xs.size):
        for j in range(xs.size):
            if i != j:
                w[i] *= xs[j] / (xs[j] - xs[i])
    return w


def _extrapolate(s, vals, errs, order):
    """Polynomial extrapolation to s = 0 using the ``order + 1`` smallest s."""
    npts = min(order + 1, len(s))
    xs, ys, es = s[-npts:], vals[-npts:], errs[-npts:]
    best = _neville_at_zero(xs, ys)
    quad_err = float(np.abs(_lagrange_weights_at_zero(xs)) @ es)
    if npts >= 2:
        lower = _neville_at_zero(xs[1:], ys[1:])
        ext_err = abs(best - lower)
    else:
        ext_err = float("inf")
    return best, ext_err, quad_err


def tbar_ren_polar_diag(delta: PhaseShiftFn, z: float, cfg: QuadratureConfig | None = None) -> tuple[float, float]:
    """Diagonal ``Tbar_ren(z) = <phi^2>(z)`` via the regularized polar form on an s-ladder.

    Raises :class:`ConvergenceError` when the extrapolated values are not
    Cauchy within the configured tolerance (for example, a phase shift
    with a constant offset, whose kernel diverges like ``1/s``).
    """
    cfg = cfg or QuadratureConfig()
    if not z < 0:
        raise ValueError("diagonal evaluation requires z < 0")
    s = np.asarray(cfg.s_ladder)
    v, e = damped_integral(delta, 2 * z, np.r_[s, 0.0], 0, cfg)
    # v[-1] is the coefficient of a 1/s term; zero for an exact phase, so any
    # leftover measures the phase model's error and is charged to err
    (v, resid), (e, resid_err) = (v[:-1], v[-1]), (e[:-1], e[-1])
    ts = v / (TWO_PI2 * s)
    es = e / (TWO_PI2 * s)
    value, ext_err, quad_err = _extrapolate(s, ts, es, cfg.extrapolation_order)
    npts = min(cfg.extrapolation_order + 1, len(s))
    leak = (abs(resid) + resid_err) / TWO_PI2 * float(np.abs(_lagrange_weights_at_zero(s[-npts:])) @ (1 / s[-npts:]))
    err = ext_err + quad_err + leak
    _check(value, err, cfg, "tbar_ren_polar_diag")
    return float(value), float(err)


def tbar_ren_diag_abel(delta: PhaseShiftFn, z: float, cfg: QuadratureConfig | None = None) -> tuple[float, float]:
    """Diagonal value as the Abel limit ``-(1/2 pi^2) int_0^inf p cos(2zp - 2 delta) dp``.

    Equivalent to the s-ladder route when the undamped integral of the
    cosine vanishes (see :func:`distributional_residual`).
    """
    cfg = cfg or QuadratureConfig()
    if not z < 0:
        raise ValueError("diagonal evaluation requires z < 0")
    v, e = damped_integral(delta, 2 * z, [0.0], 1, cfg)
    return float(-v[0] / TWO_PI2), float(e[0] / TWO_PI2)


def distributional_residual(delta: PhaseShiftFn, z_sum: float, cfg: QuadratureConfig | None = None):
    """Abel value of ``int_0^inf cos(Z p - 2 delta(p)) dp``; the coefficient of
    the ``1/s`` divergence is this divided by ``2 pi^2``."""
    v, e = damped_integral(delta, z_sum, [0.0], 0, cfg)
    return float(v[0]), float(e[0])


def polar_u_integral(b, phase_offset: float = 0.0):
    """``int_0^1 sqrt(1-u^2) cos(b u - phase_offset) du`` via ``J_1`` and ``H_1``."""
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ValueError("b must be >= 0")
    c, s = math.cos(phase_offset), math.sin(phase_offset)
    safe = np.where(b > 0, b, 1.0)
    j1 = specfun.bessel_j1(safe).value
    h1 = specfun.struve_h1(safe).value
    r = np.where(b > 0, (math.pi / (2 * safe)) * (c * j1 + s * h1), math.pi / 4 * c)
    return r if r.ndim else float(r)


def polar_diag_linear_truncated(a: float, b: float, z: float, rho_max: float) -> float:
    """Diagonal polar integral at ``s = 0`` for ``delta = a p + b``, cut at ``rho_max``.

    The ``u`` integral is done in closed form; the ``rho`` integral of the
    ``J_1`` part is ``1 - J_0``, and the ``H_1`` part is integrated
    numerically.  With ``b = 0`` this tends to the hard-wall value; any
    ``b != 0`` makes it grow linearly in ``rho_max``.
    """
    from scipy import special as sp
    from scipy.integrate import quad

    k = 2 * abs(z - a)  # u-frequency per unit rho
    off = 2 * b if z - a < 0 else -2 * b
    # cos(2(z-a) rho u - 2b) = cos(k rho u - off) for z < a
    j_part = math.cos(off) * (1 - sp.j0(k * rho_max)) / k
    h_part = 0.0
    if math.sin(off) != 0.0:
        n = max(1, int(rho_max * k / 4))
        edges = np.linspace(0.0, rho_max, n + 1)
        h_part = sum(quad(lambda r: sp.struve(1, k * r), lo, hi)[0] for lo, hi in zip(edges[:-1], edges[1:]))
        h_part *= math.sin(off)
    return (math.pi / (2 * k)) * (j_part + h_part) / math.pi**3


# -- profile, pathology, wall position ----------------------------------------------

def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SOFTWALL_THREADS", "1")))
    except ValueError:
        return 1


def compute_profile(delta: PhaseShiftFn, z_grid, cfg: QuadratureConfig | None = None,
                    hardwall_c: float | None = None, threads: int | None = None) -> ProfileResult:
    """Evaluate the diagonal kernel on ``z_grid``.

    Points that fail to converge keep their partial value and get
    ``err = -1`` as a sentinel; their indices are listed in ``failures``.
    """
    cfg = cfg or QuadratureConfig()
    z_grid = [float(z) for z in z_grid]
    c = delta.small_p_slope if hardwall_c is None else hardwall_c

    def one(z):
        try:
            return tbar_ren_polar_diag(delta, z, cfg) + (True,)
        except ConvergenceError as exc:
            return exc.value, -1.0, False

    n_threads = threads or _threads()
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            out = list(pool.map(one, z_grid))
    else:
        out = [one(z) for z in z_grid]
    return ProfileResult(
        z_grid=z_grid,
        tbar=[o[0] for o in out],
        err=[o[1] for o in out],
        hardwall_ref=[tbar_hardwall_diag(z, c) for z in z_grid],
        failures=[i for i, o in enumerate(out) if not o[2]],
    )


@dataclass
class ProbeReport:
    A: float
    B: float
    z_sum: float
    s_ladder: list[float]
    values: list[float]
    s_times_value: list[float]
    limit: float
    limit_err: float
    limit_extrapolated: float
    closed_form_limit: float
    classification: str


def pathology_probe(B: float, z_sum: float, s_ladder=(0.4, 0.2, 0.1, 0.05), A: float = 1.0,
                    cfg: QuadratureConfig | None = None) -> ProbeReport:
    """Classify ``delta = A p + B`` by the behaviour of ``s * Tbar_ren`` as ``s -> 0``.

    ``limit`` is the Abel value of the undamped cosine integral over
    ``2 pi^2`` (the coefficient of ``1/s``); ``limit_extrapolated`` is the
    same quantity read off the ladder.  The classification is
    :data:`DIVERGENT` when ``|limit| > max(PATHOLOGY_ABS_FLOOR, 10 * limit_err)``.
    """
    cfg = cfg or QuadratureConfig()
    delta = PhaseShiftFn.linear_offset(A, B)
    s = np.asarray([float(x) for x in s_ladder])
    if np.any(np.diff(s) >= 0):
        raise ValueError("s_ladder must be strictly decreasing")
    v, e = damped_integral(delta, z_sum, s, 0, cfg)
    values = v / (TWO_PI2 * s)
    lim, lim_err = distributional_residual(delta, z_sum, cfg)
    lim /= TWO_PI2
    lim_err /= TWO_PI2
    extrap, _, _ = _extrapolate(s, v / TWO_PI2, e / TWO_PI2, min(cfg.extrapolation_order, len(s) - 1))
    b = z_sum - 2 * A
    closed = math.sin(2 * B) / (TWO_PI2 * b) if b != 0 else float("nan")
    divergent = abs(lim) > max(PATHOLOGY_ABS_FLOOR, 10 * lim_err)
    return ProbeReport(A, B, z_sum, s.tolist(), values.tolist(), (v / TWO_PI2).tolist(),
                       lim, lim_err, float(extrap), closed, DIVERGENT if divergent else CONVERGENT)


def effective_wall_position(delta: PhaseShiftFn, profile: ProfileResult, z_max_fit: float = -3.0):
    """``(c_from_slope, c_from_fit)``: the small-p slope of ``delta`` and the
    hard-wall position best fitting the profile tail ``z <= z_max_fit``."""
    z = np.asarray(profile.z_grid)
    t = np.asarray(profile.tbar)
    err = np.asarray(profile.err)
    sel = (z <= z_max_fit) & (err >= 0) & np.isfinite(t)
    if sel.sum() < 2 or np.any(t[sel] <= 0) or np.any(err[sel] >= np.abs(t[sel])):
        raise ValueError("profile tail unusable for fitting (errors exceed signal)")
    zs, ts = z[sel], t[sel]
    c0 = float(np.median(zs + 1 / np.sqrt(EIGHT_PI2 * ts)))

    def resid(c):
        return (1.0 / (EIGHT_PI2 * (zs - c[0]) ** 2) - ts) / ts

    fit = least_squares(resid, [c0], xtol=1e-14, ftol=1e-14, gtol=1e-14)
    if not fit.success:
        raise ValueError(f"wall-position fit failed: {fit.message}")
    return float(delta.small_p_slope), float(fit.x[0])


class CountertermTerms(NamedTuple):
    t4_term: float
    t2_term: float
    log_term: float
    log_coefficient: float
    trusted: bool


def counterterm_density(v: float, v_laplacian: float, t: float, smooth: bool = True) -> CountertermTerms:
    """Small-``t`` divergent terms of the cutoff energy density where ``v != 0``.

    ``T00 ~ [3/2 t^-4 - v/8 t^-2 + (v^2 - lap v / 3)/32 ln t] / pi^2``;
    each returned term already includes the ``1/pi^2``.  Pass
    ``smooth=False`` for a kinked potential (``alpha = 1`` at the origin),
    where the log coefficient is reported but flagged untrusted.
    """
    if not t > 0:
        raise ValueError("t must be > 0")
    pi2 = math.pi**2
    t2 = t * t  # products keep t -> t/2 scaling bit-exact
    log_coef = (v * v - v_laplacian / 3) / (32 * pi2)
    return CountertermTerms(
        1.5 / (pi2 * (t2 * t2)),
        -v / (8 * pi2 * t2),
        log_coef * math.log(t),
        log_coef,
        bool(smooth),
    )
