"""Experiment drivers behind the CLI: verification, convergence, decay."""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .energy import CSV_COLUMNS, DecayFit, EnergyReport, equivalence_holds, fit_decay_rate
from .exceptions import ConfigError
from .kernel import KernelReport, validate_hypotheses
from .problems import exact_solution
from .stepper import Trajectory, simulate

logger = logging.getLogger(__name__)


def _num(x: float) -> str:
    return repr(float(x))


def write_solution_csv(path: Path, x: np.ndarray, times: np.ndarray, values: np.ndarray) -> None:
    """First row ``x,<t0>,<t1>,...``; then one row per node: x_j, u(x_j, t_i)..."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"] + [_num(t) for t in times])
        for j, xj in enumerate(x):
            w.writerow([_num(xj)] + [_num(val) for val in values[:, j]])


def read_solution_csv(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_solution_csv`: returns (x, times, values[t, x])."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    times = np.array([float(c) for c in rows[0][1:]])
    body = np.array([[float(c) for c in r] for r in rows[1:]])
    return body[:, 0], times, body[:, 1:].T


def write_energy_csv(path: Path, reports: list[EnergyReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            w.writerow([_num(v) for v in r.as_row()])


_PLOT_TEMPLATE = '''"""Plots for a viscowave run; reads the CSV files next to this script."""
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))


def read_surface(name):
    with open(os.path.join(HERE, name)) as fh:
        rows = list(csv.reader(fh))
    t = np.array([float(c) for c in rows[0][1:]])
    body = np.array([[float(c) for c in r] for r in rows[1:]])
    return body[:, 0], t, body[:, 1:]


for name in {surfaces!r}:
    x, t, u = read_surface(name)
    X, T = np.meshgrid(x, t, indexing="ij")
    fig = plt.figure()
    ax = fig.add_subplot(projection="3d")
    ax.plot_surface(X, T, u, cmap="viridis")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.set_zlabel("u")
    fig.savefig(os.path.join(HERE, name.replace(".csv", ".png")), dpi=120)

energy_path = os.path.join(HERE, "energy.csv")
if os.path.exists(energy_path):
    data = np.genfromtxt(energy_path, delimiter=",", names=True)
    fig, ax = plt.subplots()
    ax.semilogy(data["t"], data["E"], label="E")
    ax.semilogy(data["t"], np.abs(data["Gamma"]), "--", label="Gamma")
    ax.set_xlabel("t")
    ax.legend()
    fig.savefig(os.path.join(HERE, "energy.png"), dpi=120)
'''


def write_plot_script(out_dir: Path, surfaces: list[str]) -> Path:
    path = out_dir / "plot_results.py"
    path.write_text(_PLOT_TEMPLATE.format(surfaces=surfaces))
    return path


def _prepare_dir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def run_simulation(config: RunConfig, base_dir: Path | None = None, write: bool = True) -> Trajectory:
    traj = simulate(config.problem_spec(base_dir), config.solver_config())
    if write:
        out = _prepare_dir(config)
        write_solution_csv(out / "solution.csv", traj.grid.x, traj.times, traj.u)
        write_energy_csv(out / "energy.csv", traj.energy)
        _write_picard_csv(out / "picard.csv", traj, config.solver.dt)
        if config.emit_plots:
            write_plot_script(out, ["solution.csv"])
    return traj


def _write_picard_csv(path: Path, traj: Trajectory, dt: float) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "t", "iters", "residual"])
        for m, (it, res) in enumerate(zip(traj.picard_iters, traj.residuals)):
            w.writerow([m + 1, _num((m + 1) * dt), int(it), _num(res)])


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

@dataclass
class ErrorReport:
    max_abs: float
    l2: float
    relative_l2: float
    t0_error: float
    times: np.ndarray
    max_abs_series: np.ndarray
    l2_series: np.ndarray

    @property
    def summary(self) -> dict:
        return {"max_abs": self.max_abs, "l2": self.l2, "relative_l2": self.relative_l2,
                "t0_error": self.t0_error}


def _time_weights(times: np.ndarray) -> np.ndarray:
    if len(times) < 2:
        return np.ones_like(times)
    w = np.zeros_like(times)
    gaps = np.diff(times)
    w[:-1] += 0.5 * gaps
    w[1:] += 0.5 * gaps
    return w


def error_report(traj: Trajectory) -> ErrorReport:
    """Errors of ``traj`` against the exact solution on its snapshot grid."""
    x = traj.grid.x
    exact = exact_solution(x[None, :], traj.times[:, None])
    err = traj.u - exact
    wx = traj.grid.trapezoid_weights()
    wt = _time_weights(traj.times)
    per_time_sq = np.sum(err**2 * wx, axis=1)
    l2 = math.sqrt(float(np.sum(wt * per_time_sq)))
    ref = math.sqrt(float(np.sum(wt * np.sum(exact**2 * wx, axis=1))))
    return ErrorReport(
        max_abs=float(np.max(np.abs(err))),
        l2=l2,
        relative_l2=l2 / ref,
        t0_error=float(np.max(np.abs(err[0]))),
        times=traj.times.copy(),
        max_abs_series=np.max(np.abs(err), axis=1),
        l2_series=np.sqrt(per_time_sq),
    )


def _require_manufactured(config: RunConfig) -> None:
    if config.problem.forcing != "manufactured":
        raise ConfigError("verification needs problem.forcing = \"manufactured\"")


def verify_run(config: RunConfig, base_dir: Path | None = None, write: bool = True) -> ErrorReport:
    _require_manufactured(config)
    traj = simulate(config.problem_spec(base_dir), config.solver_config(track_energy=False))
    report = error_report(traj)
    if write:
        out = _prepare_dir(config)
        write_solution_csv(out / "solution.csv", traj.grid.x, traj.times, traj.u)
        exact = exact_solution(traj.grid.x[None, :], traj.times[:, None])
        write_solution_csv(out / "exact.csv", traj.grid.x, traj.times, exact)
        with open(out / "errors.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "max_abs", "l2"])
            for row in zip(report.times, report.max_abs_series, report.l2_series):
                w.writerow([_num(v) for v in row])
        if config.emit_plots:
            write_plot_script(out, ["solution.csv", "exact.csv"])
    return report


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    n: int
    h: float
    dt: float
    max_abs: float
    observed_order: float  # NaN on the first level


def _level_config(config: RunConfig, level: int) -> RunConfig:
    s = config.solver
    factor = 2**level
    solver = dataclasses.replace(s, grid_n=s.grid_n * factor, dt=s.dt / factor,
                                 snapshot_every=s.snapshot_every * factor)
    return dataclasses.replace(config, solver=solver)


def _level_error(args) -> float:
    config, base_dir = args
    traj = simulate(config.problem_spec(base_dir), config.solver_config(track_energy=False))
    return error_report(traj).max_abs


def worker_count(jobs: int) -> int:
    raw = os.environ.get("VISCOWAVE_THREADS", "")
    try:
        cap = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise ConfigError(f"VISCOWAVE_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(cap, jobs))


def convergence_study(config: RunConfig, levels: int | None = None, base_dir: Path | None = None,
                      write: bool = True) -> list[ConvergenceRow]:
    """Halve h and dt ``levels - 1`` times and tabulate the max-abs error."""
    _require_manufactured(config)
    levels = config.convergence.levels if levels is None else levels
    if levels < 2:
        raise ConfigError("convergence study needs at least 2 levels")
    jobs = [(_level_config(config, lv), base_dir) for lv in range(levels)]
    workers = worker_count(levels)
    if workers == 1:
        errors = [_level_error(job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(_level_error, jobs))
    rows = []
    for lv, (job, err) in enumerate(zip(jobs, errors)):
        order = math.log2(errors[lv - 1] / err) if lv > 0 else math.nan
        s = job[0].solver
        rows.append(ConvergenceRow(lv, s.grid_n, 1.0 / s.grid_n, s.dt, err, order))
    if write:
        out = _prepare_dir(config)
        with open(out / "convergence.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["level", "N", "h", "dt", "max_abs", "observed_order"])
            for r in rows:
                w.writerow([r.level, r.n, _num(r.h), _num(r.dt), _num(r.max_abs), _num(r.observed_order)])
    return rows


# ---------------------------------------------------------------------------
# decay
# ---------------------------------------------------------------------------

@dataclass
class DecayResult:
    trajectory: Trajectory
    fit: DecayFit
    fit_sqrt: DecayFit
    window: tuple[float, float]
    max_increase: float  # largest E(t_{m+1}) - E(t_m), relative to E(0)
    final_ratio: float  # E(T) / E(0)
    lyapunov_equivalent: bool
    kernel_report: KernelReport

    def summary(self) -> dict:
        return {
            "gamma": self.fit.gamma,
            "amplitude": self.fit.amplitude,
            "r_squared": self.fit.r_squared,
            "energy_rate": self.fit.energy_rate,
            "gamma_sqrtE": self.fit_sqrt.gamma,
            "r_squared_sqrtE": self.fit_sqrt.r_squared,
            "window": list(self.window),
            "max_relative_increase": self.max_increase,
            "final_ratio": self.final_ratio,
            "lyapunov_equivalence": bool(self.lyapunov_equivalent),
        }


def check_decay_premises(config: RunConfig, base_dir: Path | None = None) -> KernelReport:
    p = config.problem
    if p.forcing != "zero":
        raise ConfigError("decay mode needs problem.forcing = \"zero\"")
    if p.source_sign != -1:
        raise ConfigError("decay mode needs the dissipative source, problem.source_sign = -1")
    report = validate_hypotheses(config.kernel_spec(base_dir), config.kernel.zeta)
    if not report.ok:
        raise ConfigError(f"kernel fails the decay hypotheses: {', '.join(report.failed())}")
    return report


def decay_run(config: RunConfig, base_dir: Path | None = None, write: bool = True) -> DecayResult:
    kreport = check_decay_premises(config, base_dir)
    traj = simulate(config.problem_spec(base_dir), config.solver_config(track_energy=True))
    t = traj.energy_times
    E = traj.energy_series("E")
    window = config.decay_window()
    fit = fit_decay_rate(t, E, window)
    mask = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    sqrt_fit = _fit_sqrt(t[mask], np.sqrt(E[mask]))
    E0 = E[0]
    max_inc = float(np.max(np.diff(E))) / E0 if len(E) > 1 else 0.0
    result = DecayResult(
        trajectory=traj, fit=fit, fit_sqrt=sqrt_fit, window=window, max_increase=max_inc,
        final_ratio=float(E[-1] / E0),
        lyapunov_equivalent=equivalence_holds(traj.energy, config.energy.alpha1, config.energy.alpha2),
        kernel_report=kreport,
    )
    if write:
        out = _prepare_dir(config)
        write_solution_csv(out / "solution.csv", traj.grid.x, traj.times, traj.u)
        write_energy_csv(out / "energy.csv", traj.energy)
        if config.emit_plots:
            write_plot_script(out, ["solution.csv"])
    return result


def _fit_sqrt(t: np.ndarray, root_e: np.ndarray) -> DecayFit:
    """Fit sqrt(E) ~ N exp(-gamma t) directly."""
    y = np.log(root_e)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return DecayFit(gamma=float(-slope), amplitude=math.exp(intercept), r_squared=r2, n_samples=len(t))


def decay_acceptance(result: DecayResult, config: RunConfig) -> dict[str, bool]:
    d = config.decay
    return {
        "energy_non_increasing": bool(result.max_increase <= d.monotone_tol),
        "gamma_positive": bool(result.fit.gamma > 0),
        "r_squared": bool(result.fit.r_squared >= d.min_r_squared),
        "final_ratio": bool(result.final_ratio < d.max_final_ratio),
    }
