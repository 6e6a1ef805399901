"""Invariant suites run by ``softwall check``.

Each check compares a measured deviation against a tolerance; every
tolerance is multiplied by ``tol_scale`` so a test harness can make the
suite fail on purpose.  Randomized checks draw from ``numpy`` generators
seeded with ``seed``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from . import cylkernel as ck
from . import semiclassical as sc
from . import specfun as sf
from . import wallmodes as wm
from .phase import PhaseShiftFn


@dataclass
class Check:
    suite: str
    name: str
    deviation: float
    tol: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "name": self.name,
            "deviation": float(f"{self.deviation:.9g}"),
            "tol": float(f"{self.tol:.9g}"),
            "passed": self.passed,
        }


class _Recorder:
    def __init__(self, suite, tol_scale):
        self.suite = suite
        self.scale = tol_scale
        self.items: list[Check] = []

    def le(self, name, deviation, tol):
        tol = tol * self.scale
        dev = float(deviation)
        self.items.append(Check(self.suite, name, dev, tol, bool(np.isfinite(dev) and dev <= tol)))

    def true(self, name, ok):
        self.le(name, 0.0 if ok else 1.0, 0.5)


def _rel(a, b):
    return abs(a - b) / abs(b)


def _d1(f, x, h):
    # fourth-order central difference
    return (8 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12 * h)


def _fd2(f, x, h):
    return (16 * (f(x + h) + f(x - h)) - (f(x + 2 * h) + f(x - 2 * h)) - 30 * f(x)) / (12 * h * h)


# -- special functions -----------------------------------------------------------

def check_specfun(rng, tol_scale=1.0) -> list[Check]:
    r = _Recorder("specfun", tol_scale)
    r.le("gamma(1/2) = sqrt(pi)", _rel(sf.gamma(0.5).value, math.sqrt(math.pi)), 1e-10)
    r.le("beta(3/2, 1) = 2/3", _rel(sf.beta(1.5, 1.0).value, 2 / 3), 1e-10)
    x = np.linspace(0.1, 20, 200)
    r.le("K_1/2 closed form", np.max(np.abs(sf.bessel_k(0.5, x).value / (np.sqrt(np.pi / (2 * x)) * np.exp(-x)) - 1)), 1e-10)
    x = np.linspace(-5, 10, 151)
    d0 = sf.parabolic_cylinder_d(0.0, x)[0].value
    d1 = sf.parabolic_cylinder_d(1.0, x)[0].value
    r.le("D_0 closed form", np.max(np.abs(d0 / np.exp(-x * x / 4) - 1)), 1e-10)
    nz = x != 0
    r.le("D_1 closed form", np.max(np.abs(d1[nz] / (x[nz] * np.exp(-x[nz] ** 2 / 4)) - 1)), 1e-10)
    r.le("J_1(0) = 0", abs(sf.bessel_j1(0.0).value), 1e-10)
    r.le("H_1(0) = 0", abs(sf.struve_h1(0.0).value), 1e-10)

    # ODE residuals at random points, relative to the largest term
    n = 100
    xs = rng.uniform(0.5, 49.0, n)
    g = sf.gamma(xs).value
    r.le("gamma recurrence", np.max(np.abs(sf.gamma(xs + 1).value - xs * g) / np.abs(xs * g)), 1e-10)

    h = 1e-3
    xs = rng.uniform(-30, 10, n)
    aip = lambda t: sf.airy_ai(t)[1].value  # noqa: E731
    ai = sf.airy_ai(xs)[0].value
    res = _d1(aip, xs, h) - xs * ai
    r.le("Airy ODE residual", np.max(np.abs(res) / np.maximum(np.abs(xs * ai), 1e-300)), 1e-6)

    nus = rng.uniform(0.01, 0.5, n)
    xs = rng.uniform(0.2, 30, n)
    res = []
    for nu, t in zip(nus, xs):
        hk = 1e-2 * min(t, 1.0)
        k = lambda u, nu=nu: sf.bessel_k(nu, u).value  # noqa: E731
        d1k = _d1(k, t, hk)
        terms = [t * t * _fd2(k, t, hk), t * d1k, (t * t + nu * nu) * k(t)]
        res.append(abs(terms[0] + terms[1] - terms[2]) / max(abs(v) for v in terms))
    r.le("K_nu ODE residual", max(res), 1e-6)

    nus = rng.uniform(-0.5, 20, n)
    xs = rng.uniform(-5, 10, n)
    res = []
    for nu, t in zip(nus, xs):
        dp = lambda u, nu=nu: sf.parabolic_cylinder_d(nu, u)[1].value  # noqa: E731
        y = sf.parabolic_cylinder_d(nu, t)[0].value
        y2 = _d1(dp, t, h)
        rhs = (t * t / 4 - nu - 0.5) * y
        res.append(abs(y2 - rhs) / max(abs(y2), abs(rhs), 1e-300))
    r.le("D_nu ODE residual", max(res), 1e-6)

    xs = rng.uniform(0.5, 200, n)
    hj = 1e-2
    j = lambda u: sf.bessel_j1(u).value  # noqa: E731
    hh = lambda u: sf.struve_h1(u).value  # noqa: E731
    for name, f, rhs in (("J_1", j, lambda t: 0.0 * t), ("H_1", hh, lambda t: 2 * t * t / math.pi)):
        d1 = _d1(f, xs, hj)
        t1, t2, t3 = xs * xs * _fd2(f, xs, hj), xs * d1, (xs * xs - 1) * f(xs)
        big = np.maximum.reduce([np.abs(t1), np.abs(t2), np.abs(t3), np.abs(rhs(xs))])
        r.le(f"{name} ODE residual", np.max(np.abs(t1 + t2 + t3 - rhs(xs)) / big), 1e-6)
    return r.items


# -- phase shifts ------------------------------------------------------------------

def check_wallmodes(rng, tol_scale=1.0) -> list[Check]:
    r = _Recorder("wallmodes", tol_scale)
    m1, m2 = wm.WallModel(1.0), wm.WallModel(2.0)
    r.le("alpha=1 small-p slope", abs(wm.small_p_slope(m1) - 1.37172), 1e-4)
    r.le("alpha=2 small-p slope", abs(wm.small_p_slope(m2) - 2 * math.gamma(1.25) / math.gamma(0.75)), 1e-10)

    for m, ps in ((m1, [2.0, 3.0, 4.0, 6.0]), (m2, [2.0, math.sqrt(10.0), 4.0, 6.0])):
        d, _ = wm.phase_shift_grid(m, np.array(ps))
        gap = np.abs(d - wm.delta_large_p(m, np.array(ps)))
        r.true(f"alpha={m.alpha:g} asymptote gap decreasing", bool(np.all(np.diff(gap) < 0)))

    for m in (m1, m2):
        c = wm.small_p_slope(m)
        errs = [abs(wm.phase_shift(m, p).delta / p - c) for p in (0.2, 0.1, 0.05)]
        ratio = min(errs[0] / errs[1], errs[1] / errs[2])
        r.le(f"alpha={m.alpha:g} O(p^2) small-p error", 1 / ratio, 1 / 3.5)

    ps = rng.uniform(0.3, 5.0, 5)
    exact = wm.phase_shift_grid(m1, ps)[0]
    ode = wm.phase_shift_grid(m1, ps, method=wm.ODE)[0]
    r.le("Airy vs ODE route", np.max(np.abs(exact - ode)), 1e-7)

    for m, ps in ((m1, np.linspace(0.1, 10, 40)), (m2, np.linspace(0.1, 12, 40))):
        d, _ = wm.phase_shift_grid(m, ps)
        P, dP = np.array([wm.p_alpha(m, 0.0, p * p) for p in ps], dtype=float).T
        mod = np.mod(d - np.arctan2(-ps * P, dP) + np.pi / 2, np.pi) - np.pi / 2
        r.le(f"alpha={m.alpha:g} branch consistency", np.max(np.abs(mod)), 1e-8)

    model = wm.make_phase_model(m1)
    grid = np.linspace(0.1, 10, 2000)
    r.true("alpha=1 phase model monotone", bool(np.all(np.diff(model(grid)) > 0)))
    r.le("alpha=1 blend offset at p_max=6", abs(wm.make_phase_model(m1, p_max=6).params["offset"]), 0.05)
    return r.items


# -- kernel --------------------------------------------------------------------------

def check_cylkernel(rng, tol_scale=1.0) -> list[Check]:
    r = _Recorder("cylkernel", tol_scale)
    dirichlet = PhaseShiftFn.dirichlet(1.0)
    for z in (-1.0, -2.0, -4.0):
        v, _ = ck.tbar_ren_polar_diag(dirichlet, z)
        r.le(f"Dirichlet polar z={z:g}", _rel(v, ck.tbar_hardwall_diag(z)), 1e-2)

    worst = 0.0
    for z, zp in rng.uniform(-3, -0.5, (10, 2)):
        q = ck.KernelQuery(float(z), float(zp), 0.5)
        v, _ = ck.tbar_ren_cartesian(dirichlet, q)
        worst = max(worst, _rel(v, ck.tbar_hardwall_offdiag(q)))
    r.le("Cartesian vs image solution", worst, 1e-5)

    probe = ck.pathology_probe(math.pi / 4, -2.0)
    r.true("offset pi/4 divergent", probe.classification == ck.DIVERGENT)
    r.le("offset pi/4 |s T| limit", _rel(abs(probe.limit_extrapolated), 1 / (8 * math.pi**2)), 1e-3)
    probe0 = ck.pathology_probe(0.0, -2.0)
    r.true("offset 0 convergent", probe0.classification == ck.CONVERGENT)

    for A in (0.5, 1.0, 2.0):
        res, _ = ck.distributional_residual(PhaseShiftFn.linear_offset(A, 0.0), -1.5)
        r.le(f"distributional vanishing A={A:g}", abs(res), 1e-12)

    soft = wm.make_phase_model(wm.WallModel(1.0))
    v, _ = ck.tbar_ren_polar_diag(soft, -4.0)
    r.le("alpha=1 z=-4 vs hard wall at c", _rel(v, ck.tbar_hardwall_diag(-4.0, soft.small_p_slope)), 0.05)

    b = 5.0
    num = quad(lambda u: math.sqrt(1 - u * u) * math.cos(b * u), 0, 1, epsabs=1e-14)[0]
    r.le("u-integral J_1 form", abs(ck.polar_u_integral(b, 0.0) - num), 1e-10)

    worst = 0.0
    for v0, lap, t in zip(rng.uniform(-2, 2, 10), rng.uniform(-2, 2, 10), rng.uniform(0.05, 2, 10)):
        terms = ck.counterterm_density(v0, lap, t)
        pi2 = math.pi**2
        ref = (1.5 / t**4 / pi2, -v0 / (8 * t * t) / pi2, (v0 * v0 - lap / 3) / 32 * math.log(t) / pi2)
        worst = max(worst, *(abs(a - b) / max(abs(b), 1e-300) for a, b in zip(terms[:3], ref)))
    r.le("counterterm substitution", worst, 1e-12)
    t = float(rng.uniform(0.1, 1))
    r.le("t^-4 homogeneity", _rel(ck.counterterm_density(0, 0, t / 2).t4_term, 16 * ck.counterterm_density(0, 0, t).t4_term), 1e-15)
    return r.items


# -- classical paths ----------------------------------------------------------------

def brute_force_count(rho: float, T: float, n: int = 100_000) -> int:
    """Sign changes of ``rho sin w + w - T`` on an ``n``-point grid over (0, pi).

    The endpoint values ``f(0) = -T`` and ``f(pi) = pi - T`` are included so
    roots closer to an end than the grid spacing (tiny ``T``) still count.
    """
    w = np.linspace(0, math.pi, n + 2)
    f = rho * np.sin(w) + w - T
    f[0], f[-1] = -T, math.pi - T
    return int(np.count_nonzero(np.signbit(f[1:]) != np.signbit(f[:-1])))


def lagrangian_action(wall: sc.QuadWall, y: float, t1: float, t: float) -> float:
    """Action of the reconstructed crossing path by direct quadrature of ``L``."""
    q, qdot = sc.trajectory(wall, y, t1, t)

    def lag(tau):
        return float(0.25 * qdot(tau) ** 2 - wall.potential(q(tau)))

    a = quad(lag, 0, t1, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    b = quad(lag, t1, t, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return a + b


_EXPECTED = {sc.Count.ZERO: 0, sc.Count.ONE: 1, sc.Count.TWO: 2}


def taxonomy_mismatches(rng, n: int, grid: int = 100_000) -> tuple[int, int]:
    """``(mismatches, compared)`` between classify and brute-force counting."""
    bad = done = 0
    for rho, T in zip(rng.uniform(0, 5, n), rng.uniform(0, 8, n)):
        if rho == 0 or T == 0:
            continue
        tax = sc.classify(float(rho), float(T))
        if tax.count == sc.Count.TANGENT or (tax.t_star is not None and abs(T - tax.t_star) < 1e-6):
            continue
        done += 1
        bad += brute_force_count(rho, T, grid) != _EXPECTED[tax.count]
    return bad, done


def random_crossing_configs(rng, n: int):
    """``n`` random ``(wall, y, x, t, t1)`` tuples with at least one crossing path."""
    out = []
    while len(out) < n:
        wall = sc.QuadWall(float(rng.uniform(0.5, 2.0)))
        y = float(rng.uniform(-2.0, -0.5))
        rho = float(rng.uniform(0.2, 4.0))
        T = float(rng.uniform(0.2, 6.0))
        x = -y / rho
        t = T / wall.omega
        roots = sc.crossing_times(wall, y, x, t)
        if roots:
            out.append((wall, y, x, t, roots[int(rng.integers(len(roots)))]))
    return out


def check_semiclassical(rng, tol_scale=1.0, n_taxonomy=2000) -> list[Check]:
    r = _Recorder("semiclassical", tol_scale)
    bad, _ = taxonomy_mismatches(rng, n_taxonomy)
    r.le("taxonomy vs brute force", bad, 0.5)
    r.le("T*(1) = pi", abs(sc.t_star(1.0) - math.pi), 1e-15)
    r.le("T*(2) closed form", abs(sc.t_star(2.0) - (math.sqrt(3) + 2 * math.pi / 3)), 1e-12)
    rhos = np.linspace(1, 10, 200)
    r.true("T* increasing", bool(np.all(np.diff([sc.t_star(x) for x in rhos]) > 0)))

    configs = random_crossing_configs(rng, 20)
    worst_res = worst_s = 0.0
    for wall, y, x, t, t1 in configs:
        w = wall.omega
        res = abs(w * x * t1 + y * math.sin(w * (t - t1))) / (abs(w * x * t1) + abs(y))
        worst_res = max(worst_res, res)
        s = sc.mixed_action(wall, y, t1, x, t)
        worst_s = max(worst_s, _rel(s, lagrangian_action(wall, y, t1, t)))
    r.le("crossing residual", worst_res, 1e-10)
    r.le("Hamilton-Jacobi action", worst_s, 1e-6)

    wall = sc.QuadWall(1.0)
    x, y, t = 0.7, -1.3, 1e-4
    s, a2, _ = sc.ho_kernel_params(wall, x, y, t)
    free = sc.direct_path(y, x, t)
    r.le("Mehler free limit", max(_rel(s, free.action), _rel(a2, free.amp_sq)), 1e-6)

    worst = 0.0
    for v0, w in zip(rng.uniform(0.1, 3, 5), rng.uniform(0.5, 2, 5)):
        qw = sc.QuadWall(float(w))
        # enters at x = 0 with speed v0; trajectory() takes (y, t1) with -y/t1 = v0
        q, qdot = sc.trajectory(qw, -v0, 1.0, 1.0 + math.pi / w)
        lag = lambda tau: float(0.25 * qdot(tau) ** 2 - qw.potential(q(tau)))  # noqa: E731
        worst = max(worst, abs(quad(lag, 1.0, 1.0 + math.pi / w, epsabs=1e-12, epsrel=0.0)[0]))
    r.le("interior half-period action", worst, 1e-10)
    return r.items


SUITES: dict[str, Callable] = {
    "specfun": check_specfun,
    "wallmodes": check_wallmodes,
    "cylkernel": check_cylkernel,
    "semiclassical": check_semiclassical,
}


def run_checks(seed: int = 0, tol_scale: float = 1.0, suites=None) -> dict:
    """Run the selected suites; returns ``{suite, passed, failed, details}``."""
    names = list(SUITES) if suites is None else list(suites)
    details = []
    for i, name in enumerate(names):
        rng = np.random.default_rng([seed, i])
        try:
            details.extend(c.as_dict() for c in SUITES[name](rng, tol_scale))
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            details.append({"suite": name, "name": "suite raised", "deviation": None,
                            "tol": None, "passed": False, "error": f"{type(exc).__name__}: {exc}"})
    passed = sum(1 for d in details if d["passed"])
    return {"suite": "+".join(names), "passed": passed, "failed": len(details) - passed, "details": details}
