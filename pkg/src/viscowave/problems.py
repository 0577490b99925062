"""Reference test problem: data, manufactured forcing and exact solution.

u_tt - u_xx + int_0^t k(t-s) u_xx(s) ds + u_t^3 = u^2 + F  on (0, 1),
u_x(0) = u(0),  u_x(1) + u(1) = 0,  k(t) = exp(-t) / 2,
u(x, 0) = -x^2 + x + 1,  u_t(x, 0) = -u(x, 0).

With the forcing below, U(x, t) = (-x^2 + x + 1) exp(-t) solves it exactly.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError
from .kernel import KernelSpec
from .operators import Grid


def _check_domain(x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
        raise ConfigError("x must lie in [0, 1]")
    if np.any(t < 0):
        raise ConfigError("t must be non-negative")
    return x, t


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def initial_profile(x):
    x = np.asarray(x, dtype=float)
    return -x * x + x + 1.0


def exact_solution(x, t):
    x, t = _check_domain(x, t)
    return _scalar(initial_profile(x) * np.exp(-t))


def manufactured_forcing(x, t):
    x, t = _check_domain(x, t)
    u = initial_profile(x) * np.exp(-t)
    return _scalar((2.0 - t) * np.exp(-t) + u * (1.0 - u - u * u))


def reference_initial_data(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    u0 = initial_profile(grid.x)
    return u0, -u0


def reference_kernel(zeta: float | None = 1.0) -> KernelSpec:
    return KernelSpec.exponential(0.5, 1.0, zeta=zeta)
