"""Phase-shift models ``delta(p)`` consumed by the kernel integrals.

A :class:`PhaseShiftFn` is a real function on ``p > 0`` together with an
analytic tail ``coef * p**exponent + const`` that is exact for
``p >= p_switch``.  The tail must be valid for complex ``p`` because the
kernel quadrature deforms the integration contour past ``p_switch``.
When the exact scattering factor ``exp(-2i delta(p))`` has a known
continuation it can be supplied as ``log_s`` and replaces the tail
inside the integrand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["PhaseShiftFn"]


@dataclass(frozen=True)
class PhaseShiftFn:
    kind: str
    small_p_slope: float
    large_p_exponent: float
    tail_coef: float
    tail_const: float
    p_switch: float = 0.0
    core: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)
    params: dict = field(default_factory=dict, compare=False)
    log_s: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)

    @classmethod
    def dirichlet(cls, z0: float = 1.0) -> PhaseShiftFn:
        """Hard wall at ``z0``: ``delta(p) = z0 * p``."""
        return cls("dirichlet", z0, 1.0, z0, 0.0, params={"z0": z0})

    @classmethod
    def linear_offset(cls, a: float, b: float) -> PhaseShiftFn:
        """``delta(p) = a*p + b``; divergent kernel unless ``b == 0``."""
        return cls("linear_offset", a, 1.0, a, b, params={"A": a, "B": b})

    @classmethod
    def free(cls) -> PhaseShiftFn:
        return cls("linear_offset", 0.0, 1.0, 0.0, 0.0, params={"A": 0.0, "B": 0.0})

    @classmethod
    def custom(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        p_switch: float,
        tail_coef: float,
        tail_exponent: float,
        tail_const: float,
        small_p_slope: float = float("nan"),
    ) -> PhaseShiftFn:
        """Arbitrary ``func`` below ``p_switch`` joined to a power-law tail."""
        return cls("custom", small_p_slope, tail_exponent, tail_coef, tail_const, p_switch, func)

    def tail(self, p):
        """Analytic tail; accepts complex ``p`` with ``Re p > 0``."""
        p = np.asarray(p)
        if self.tail_coef == 0.0:
            return np.zeros_like(p) + self.tail_const
        return self.tail_coef * p**self.large_p_exponent + self.tail_const

    def tail_derivative(self, p):
        p = np.asarray(p)
        return self.tail_coef * self.large_p_exponent * p ** (self.large_p_exponent - 1)

    def log_scattering(self, p):
        """``-2i delta(p)`` continued to complex ``p`` (modulo ``2 pi i``)."""
        if self.log_s is not None:
            return self.log_s(p)
        return -2j * self.tail(p)

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        if self.core is None or self.p_switch <= 0:
            r = self.tail(p)
            return r if r.ndim else float(r)
        out = np.empty(p.shape)
        lo = p < self.p_switch
        if np.any(lo):
            out[lo] = self.core(p[lo])
        if np.any(~lo):
            out[~lo] = self.tail(p[~lo])
        return out if out.ndim else float(out)
