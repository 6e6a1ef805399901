"""Phase shifts, renormalized cylinder kernels and classical paths for
power-law soft walls ``v(z) = lambda0 (z/z0)^alpha``."""

from .cylkernel import (
    ConvergenceError,
    KernelQuery,
    ProfileResult,
    QuadratureConfig,
    compute_profile,
    counterterm_density,
    effective_wall_position,
    pathology_probe,
    polar_u_integral,
    tbar_hardwall_diag,
    tbar_hardwall_offdiag,
    tbar_ren_cartesian,
    tbar_ren_polar_diag,
)
from .phase import PhaseShiftFn
from .semiclassical import QuadWall, classify, crossing_times, t_star
from .wallmodes import WallModel, delta_large_p, delta_small_p, make_phase_model, phase_shift

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "KernelQuery",
    "PhaseShiftFn",
    "ProfileResult",
    "QuadWall",
    "QuadratureConfig",
    "WallModel",
    "classify",
    "compute_profile",
    "counterterm_density",
    "crossing_times",
    "delta_large_p",
    "delta_small_p",
    "effective_wall_position",
    "make_phase_model",
    "pathology_probe",
    "phase_shift",
    "polar_u_integral",
    "t_star",
    "tbar_hardwall_diag",
    "tbar_hardwall_offdiag",
    "tbar_ren_cartesian",
    "tbar_ren_polar_diag",
]
