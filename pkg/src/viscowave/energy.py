"""Energy and Lyapunov functionals and the exponential decay-rate fit.

E(t) = ||u'||^2 + (1 - int_0^t k) ||u||_eta^2 + (2/p) ||u||_{L^p}^p
       + int_0^t k(t - s) ||u(s) - u(t)||_eta^2 ds

E1(t) = <u, u'>,   E2(t) = -int_0^t k(t - s) <u'(t), u(t) - u(s)> ds,
Gamma = E + eps1 E1 + eps2 E2.

L2 and L^p norms use trapezoid weights; history integrals use the same
rectangle rule as the memory term of the solver.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ConfigError, NonPositiveEnergy
from .kernel import KernelSpec, kernel_integral
from .memory import History, memory_cross_term, memory_energy_term
from .operators import Grid, bilinear_a_eta, inner_L2

CSV_COLUMNS = ("t", "E", "E1", "E2", "Gamma", "kinetic", "elastic", "potential", "memory")

DEFAULT_EPS1 = 0.01
DEFAULT_EPS2 = 0.01


@dataclass(frozen=True)
class EnergyReport:
    t: float
    E: float
    E1: float
    E2: float
    Gamma: float
    kinetic: float
    elastic: float
    potential: float
    memory: float

    def as_row(self) -> list[float]:
        d = asdict(self)
        return [d[c] for c in CSV_COLUMNS]


def energy_E1(u, v, grid: Grid) -> float:
    return float(inner_L2(u, v, grid))


def energy_E2(u, v, history: History, kernel: KernelSpec, grid: Grid, t: float,
              include_right_endpoint: bool = False) -> float:
    return -memory_cross_term(history, kernel, u, v, grid, t, include_right_endpoint)


def lyapunov_Gamma(E: float, E1: float, E2: float, eps1: float = DEFAULT_EPS1,
                   eps2: float = DEFAULT_EPS2) -> float:
    return E + eps1 * E1 + eps2 * E2


def equivalence_holds(reports, alpha1: float, alpha2: float) -> bool:
    """True if alpha1 E <= Gamma <= alpha2 E at every report."""
    return all(alpha1 * r.E <= r.Gamma <= alpha2 * r.E for r in reports)


def energy_E(t: float, u, v, history: History, kernel: KernelSpec, p: float, grid: Grid,
             eta: float = 1.0, eps1: float = DEFAULT_EPS1, eps2: float = DEFAULT_EPS2,
             include_right_endpoint: bool = False) -> EnergyReport:
    """Full energy report at time ``t`` for the state (u, v).

    ``history`` must hold the snapshots u(i dt) up to t.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = grid.trapezoid_weights()
    kinetic = float(np.sum(w * v * v))
    elastic = (1.0 - kernel_integral(kernel, t)) * float(bilinear_a_eta(u, u, grid, eta))
    potential = 2.0 / p * float(np.sum(w * np.abs(u) ** p))
    memory = memory_energy_term(history, kernel, u, grid, eta, t, include_right_endpoint)
    E = kinetic + elastic + potential + memory
    E1 = energy_E1(u, v, grid)
    E2 = energy_E2(u, v, history, kernel, grid, t, include_right_endpoint)
    return EnergyReport(t=t, E=E, E1=E1, E2=E2, Gamma=lyapunov_Gamma(E, E1, E2, eps1, eps2),
                        kinetic=kinetic, elastic=elastic, potential=potential, memory=memory)


@dataclass(frozen=True)
class DecayFit:
    gamma: float
    amplitude: float
    r_squared: float
    n_samples: int

    @property
    def energy_rate(self) -> float:
        """Rate of E itself, i.e. E ~ N^2 exp(-energy_rate t)."""
        return 2.0 * self.gamma


def fit_decay_rate(t, E, window: tuple[float, float] | None = None, min_samples: int = 10) -> DecayFit:
    """Least-squares line through (t, ln E) inside ``window``.

    Uses E ~ N^2 exp(-2 gamma t), so gamma = -slope / 2 and N = exp(intercept / 2);
    the same gamma then describes sqrt(E) ~ N exp(-gamma t).
    """
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    if t.shape != E.shape:
        raise ConfigError("time and energy series differ in length")
    if window is not None:
        lo, hi = window
        mask = (t >= lo - 1e-12) & (t <= hi + 1e-12)
        t, E = t[mask], E[mask]
    if len(t) < min_samples:
        raise ConfigError(f"decay fit needs at least {min_samples} samples, got {len(t)}")
    if np.any(E <= 0):
        raise NonPositiveEnergy("energy series has non-positive values inside the fit window")
    y = np.log(E)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    gamma = -slope / 2.0
    if abs(gamma) < 1e-15 * max(1.0, abs(intercept)):
        gamma = 0.0
    return DecayFit(gamma=float(gamma), amplitude=math.exp(intercept / 2.0), r_squared=r2, n_samples=len(t))
