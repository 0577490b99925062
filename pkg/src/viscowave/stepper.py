"""Time stepping of the semi-discrete viscoelastic wave system.

For every node j the method-of-lines system reads

    du_j/dt = v_j
    dv_j/dt = (L u)_j - M_j(t) - psi_q(v_j) + s * psi_p(u_j) + F(x_j, t)

with L the Robin Laplacian, M the discrete memory convolution and s the
source sign.  Each step of size dt runs a Picard loop: the nonlinear terms
are frozen at the previous iterate (iterate 0 is the state at the start of
the step), the remaining linear system is advanced with classical RK4, and
the loop stops once successive iterates agree in the sup norm.  Within a
step the frozen nonlinear term is interpolated linearly in time between its
value at the start of the step and its value at the previous iterate's end
point.  The memory term is held at its start-of-step value.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Union

import numpy as np

from .energy import DEFAULT_EPS1, DEFAULT_EPS2, EnergyReport, energy_E
from .exceptions import ConfigError, MaxPicardIters, NonFiniteState, SolverError
from .kernel import Exponential, KernelSpec
from .memory import ExponentialConvolution, History, convolution_term
from .operators import Grid, as_field, psi_q, robin_laplacian
from .problems import manufactured_forcing, reference_initial_data, reference_kernel

logger = logging.getLogger(__name__)

Forcing = Union[Callable, str, None]
InitialData = Union[np.ndarray, Callable, str, None]


@dataclass(frozen=True)
class ProblemSpec:
    """PDE data.

    ``forcing`` is a callable F(x, t) (vectorised in x), ``"manufactured"``
    for the reference forcing, or ``"zero"``/None.  ``u0``/``u1`` are nodal
    arrays, callables of x, or ``"reference"`` for the reference initial data.
    ``source_sign`` +1 puts |u|^(p-2) u on the right-hand side as a source;
    -1 gives the dissipative form needed for energy decay.
    """

    p: float = 3.0
    q: float = 4.0
    eta: float = 1.0
    source_sign: int = 1
    kernel: KernelSpec = field(default_factory=reference_kernel)
    forcing: Forcing = "manufactured"
    u0: InitialData = "reference"
    u1: InitialData = "reference"

    def __post_init__(self):
        if self.p < 2 or self.q < 2:
            raise ConfigError(f"need p, q >= 2, got p={self.p}, q={self.q}")
        if self.eta < 0:
            raise ConfigError(f"need eta >= 0, got {self.eta}")
        if self.source_sign not in (-1, 1):
            raise ConfigError(f"source_sign must be -1 or +1, got {self.source_sign}")
        if isinstance(self.forcing, str) and self.forcing not in ("manufactured", "zero"):
            raise ConfigError(f"unknown forcing {self.forcing!r}")

    def initial_state(self, grid: Grid) -> "State":
        pu0, pu1 = reference_initial_data(grid)
        u = _initial_field(self.u0, pu0, grid)
        v = _initial_field(self.u1, pu1, grid)
        return State(0.0, u, v)

    def forcing_at(self, grid: Grid, t: float) -> np.ndarray | None:
        if self.forcing is None or self.forcing == "zero":
            return None
        if self.forcing == "manufactured":
            return manufactured_forcing(grid.x, t)
        return np.broadcast_to(np.asarray(self.forcing(grid.x, t), dtype=float), (grid.size,))


def _initial_field(spec, reference_values: np.ndarray, grid: Grid) -> np.ndarray:
    if spec is None or (isinstance(spec, str) and spec == "zero"):
        return np.zeros(grid.size)
    if isinstance(spec, str):
        if spec != "reference":
            raise ConfigError(f"unknown initial data {spec!r}")
        return reference_values
    if callable(spec):
        return grid.sample(spec)
    return as_field(spec, grid).copy()


@dataclass(frozen=True)
class State:
    t: float
    u: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class SolverConfig:
    grid_n: int = 50
    dt: float = 1e-3
    t_final: float = 2.0
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    regularization_eps: float = 0.0
    snapshot_every: int = 1
    include_right_endpoint: bool = False
    allow_unstable: bool = False
    track_energy: bool = True
    eps1: float = DEFAULT_EPS1
    eps2: float = DEFAULT_EPS2

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.picard_tol > 0:
            raise ConfigError(f"picard_tol must be positive, got {self.picard_tol}")
        if self.picard_max_iters < 1:
            raise ConfigError("picard_max_iters must be at least 1")
        if self.t_final < 0:
            raise ConfigError("t_final must be non-negative")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be at least 1")
        if self.regularization_eps < 0:
            raise ConfigError("regularization_eps must be non-negative")

    @property
    def n_steps(self) -> int:
        ratio = self.t_final / self.dt
        n = int(round(ratio))
        if abs(ratio - n) > 1e-9 * max(1.0, ratio):
            raise ConfigError(f"t_final={self.t_final} is not a multiple of dt={self.dt}")
        return n


def nonlinear_terms(u, v, problem: ProblemSpec) -> np.ndarray:
    """-psi_q(v) + source_sign * |u|^(p-2) u."""
    return -psi_q(v, problem.q) + problem.source_sign * psi_q(u, problem.p)


def _elastic(u, grid: Grid, problem: ProblemSpec, eps: float) -> np.ndarray:
    lu = robin_laplacian(u, grid, problem.eta)
    if eps:
        lu = lu - eps * u
    return lu


def semi_discrete_rhs(state: State, conv, frozen: State, problem: ProblemSpec, grid: Grid,
                      regularization_eps: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side (du, dv) with the nonlinear terms evaluated at ``frozen``."""
    with np.errstate(over="ignore", invalid="ignore"):
        dv = _elastic(state.u, grid, problem, regularization_eps) - conv
        dv = dv + nonlinear_terms(frozen.u, frozen.v, problem)
    f = problem.forcing_at(grid, state.t)
    if f is not None:
        dv = dv + f
    du = np.array(state.v, dtype=float)
    if not (np.all(np.isfinite(du)) and np.all(np.isfinite(dv))):
        raise NonFiniteState("non-finite right-hand side", t=state.t)
    return du, dv


def _rk4_linear(u, v, dt, grid, problem, eps, drive0, drive_half, drive1):
    """One RK4 step of u' = v, v' = L u + drive(t) with drive given at t, t+dt/2, t+dt."""
    def accel(uu, drive):
        return _elastic(uu, grid, problem, eps) + drive

    k1u, k1v = v, accel(u, drive0)
    k2u = v + 0.5 * dt * k1v
    k2v = accel(u + 0.5 * dt * k1u, drive_half)
    k3u = v + 0.5 * dt * k2v
    k3v = accel(u + 0.5 * dt * k2u, drive_half)
    k4u = v + dt * k3v
    k4v = accel(u + dt * k3u, drive1)
    u_new = u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    v_new = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return u_new, v_new


@dataclass(frozen=True)
class StepResult:
    state: State
    iters: int
    residual: float


def picard_advance(state: State, history: History, problem: ProblemSpec, grid: Grid,
                   config: SolverConfig, conv=None) -> StepResult:
    """Advance ``state`` by one dt and append the new snapshot to ``history``.

    ``conv`` is the memory term at ``state.t``; computed from the history by
    direct summation when omitted.
    """
    dt = config.dt
    t0 = state.t
    eps = config.regularization_eps
    if conv is None:
        conv = convolution_term(history, problem.kernel, t0, config.include_right_endpoint)
    forcing = [problem.forcing_at(grid, t0 + frac * dt) for frac in (0.0, 0.5, 1.0)]
    base = [(-conv if f is None else f - conv) for f in forcing]
    n_start = nonlinear_terms(state.u, state.v, problem)

    prev_u, prev_v = state.u, state.v
    residual = math.inf
    for it in range(1, config.picard_max_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            n_end = n_start if it == 1 else nonlinear_terms(prev_u, prev_v, problem)
            u_new, v_new = _rk4_linear(
                state.u, state.v, dt, grid, problem, eps,
                base[0] + n_start, base[1] + 0.5 * (n_start + n_end), base[2] + n_end,
            )
            residual = float(max(np.max(np.abs(u_new - prev_u)), np.max(np.abs(v_new - prev_v))))
        if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))) or not math.isfinite(residual):
            raise MaxPicardIters(f"Picard iteration diverged at iterate {it}", t=t0)
        prev_u, prev_v = u_new, v_new
        if residual < config.picard_tol:
            new_state = State(t0 + dt, u_new, v_new)
            history.append(u_new, robin_laplacian(u_new, grid, problem.eta))
            return StepResult(new_state, it, residual)
    raise MaxPicardIters(
        f"Picard residual {residual:.3e} above tolerance {config.picard_tol:.1e} "
        f"after {config.picard_max_iters} iterates", t=t0)


@dataclass
class Trajectory:
    grid: Grid
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    energy: list[EnergyReport]
    picard_iters: np.ndarray
    residuals: np.ndarray

    @property
    def energy_times(self) -> np.ndarray:
        return np.array([r.t for r in self.energy])

    def energy_series(self, name: str = "E") -> np.ndarray:
        return np.array([getattr(r, name) for r in self.energy])


def check_stability(grid: Grid, config: SolverConfig) -> None:
    if config.dt > grid.h:
        msg = f"dt={config.dt} exceeds h={grid.h}; explicit stepping is likely unstable"
        if not config.allow_unstable:
            raise ConfigError(msg + " (set allow_unstable to run anyway)")
        logger.warning(msg)


def simulate(problem: ProblemSpec, config: SolverConfig) -> Trajectory:
    """Run from t = 0 to ``config.t_final``.

    Snapshots of (u, v) are kept every ``snapshot_every`` steps plus the final
    step; energies (when tracked) at every step.
    """
    grid = Grid(config.grid_n)
    check_stability(grid, config)
    n_steps = config.n_steps
    state = problem.initial_state(grid)
    history = History(config.dt, grid.size, capacity=n_steps + 1)
    history.append(state.u, robin_laplacian(state.u, grid, problem.eta))

    use_recurrence = isinstance(problem.kernel.form, Exponential)
    engine = ExponentialConvolution(problem.kernel, config.dt, config.include_right_endpoint) if use_recurrence else None

    def report(st: State) -> EnergyReport:
        return energy_E(st.t, st.u, st.v, history, problem.kernel, problem.p, grid, problem.eta,
                        config.eps1, config.eps2, config.include_right_endpoint)

    times, us, vs = [0.0], [state.u.copy()], [state.v.copy()]
    energies = [report(state)] if config.track_energy else []
    iters = np.zeros(n_steps, dtype=int)
    residuals = np.zeros(n_steps)
    for m in range(n_steps):
        t = m * config.dt
        state = replace(state, t=t)
        try:
            if engine is not None:
                conv = engine.term(history, t)
            else:
                conv = convolution_term(history, problem.kernel, t, config.include_right_endpoint)
            step = picard_advance(state, history, problem, grid, config, conv)
        except SolverError as exc:
            exc.t = t if exc.t is None else exc.t
            raise type(exc)(f"{exc} (t={t:.6g}, step {m})", t=t) from exc
        state = replace(step.state, t=(m + 1) * config.dt)
        iters[m] = step.iters
        residuals[m] = step.residual
        if config.track_energy:
            energies.append(report(state))
        if (m + 1) % config.snapshot_every == 0 or m + 1 == n_steps:
            times.append(state.t)
            us.append(state.u.copy())
            vs.append(state.v.copy())
    return Trajectory(grid, np.array(times), np.array(us), np.array(vs), energies, iters, residuals)
