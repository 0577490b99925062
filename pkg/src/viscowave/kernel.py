"""Memory kernels k(t) for the viscoelastic term.

Two forms are supported: the closed-form exponential ``a * exp(-b t)`` and a
uniformly sampled table that is linearly interpolated.  Besides evaluation the
module checks the relaxation hypotheses under which the energy decays and
computes the kernel-dependent constant of the a-priori energy bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .exceptions import ConfigError, LengthMismatch, NonFinite, OutOfRange

# Relative slack used when deciding whether t sits on the last table sample.
_RANGE_SLACK = 1e-9
# Tail cut-off for tabulated kernels, relative to k(0).
TAIL_FRACTION = 1e-12


@dataclass(frozen=True)
class Exponential:
    """k(t) = a * exp(-b t) with a, b > 0."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise NonFinite(f"non-finite exponential kernel parameters a={self.a}, b={self.b}")
        if self.a <= 0 or self.b <= 0:
            raise ConfigError(f"exponential kernel needs a > 0 and b > 0, got a={self.a}, b={self.b}")


@dataclass(frozen=True)
class Tabulated:
    """Kernel sampled at t_i = i * dt, linearly interpolated in between."""

    dt: float
    samples: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(float(s) for s in self.samples))
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"tabulated kernel needs dt > 0, got {self.dt}")
        if len(self.samples) < 2:
            raise ConfigError("tabulated kernel needs at least 2 samples")
        if not all(math.isfinite(s) for s in self.samples):
            raise NonFinite("tabulated kernel contains non-finite samples")

    @property
    def t_max(self) -> float:
        return self.dt * (len(self.samples) - 1)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.samples, dtype=float)


KernelForm = Union[Exponential, Tabulated]


@dataclass(frozen=True)
class KernelSpec:
    form: KernelForm
    zeta: float | None = None

    @classmethod
    def exponential(cls, a: float, b: float, zeta: float | None = None) -> "KernelSpec":
        return cls(Exponential(float(a), float(b)), zeta)

    @classmethod
    def tabulated(cls, dt: float, samples, zeta: float | None = None) -> "KernelSpec":
        return cls(Tabulated(float(dt), tuple(samples)), zeta)

    @classmethod
    def zero(cls, t_max: float, dt: float = 0.5) -> "KernelSpec":
        """Identically zero kernel tabulated on [0, t_max]."""
        n = max(2, int(math.ceil(t_max / dt)) + 2)
        return cls.tabulated(dt, [0.0] * n)

    @classmethod
    def from_csv(cls, path: str | Path, zeta: float | None = None) -> "KernelSpec":
        """Read a two-column ``t,k`` CSV with a header row.

        The time column must start at 0 and be uniformly spaced.
        """
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise ConfigError(f"{path}: empty kernel file")
        body = [r for r in rows[1:] if r and any(c.strip() for c in r)]
        try:
            t = np.array([float(r[0]) for r in body])
            k = np.array([float(r[1]) for r in body])
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"{path}: malformed kernel row ({exc})") from exc
        if len(t) < 2:
            raise ConfigError(f"{path}: need at least 2 kernel samples")
        steps = np.diff(t)
        dt = float(steps[0])
        if abs(t[0]) > 1e-12 or not np.allclose(steps, dt, rtol=1e-6, atol=1e-12):
            raise ConfigError(f"{path}: kernel samples must start at t=0 with uniform spacing")
        return cls.tabulated(dt, k.tolist(), zeta)


@dataclass
class KernelReport:
    k0: float
    total_mass: float
    k_infinity: float
    zeta_max: float
    zeta: float
    passes: dict[str, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passes.values())

    def failed(self) -> list[str]:
        return [name for name, good in self.passes.items() if not good]


def kernel_eval(spec: KernelSpec, t):
    """Evaluate k at scalar or array ``t >= 0``."""
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise NonFinite("kernel evaluated at a non-finite time")
    if np.any(t_arr < 0):
        raise OutOfRange("kernel evaluated at negative time")
    form = spec.form
    if isinstance(form, Exponential):
        out = form.a * np.exp(-form.b * t_arr)
    else:
        if np.any(t_arr > form.t_max * (1 + _RANGE_SLACK) + _RANGE_SLACK * form.dt):
            raise OutOfRange(
                f"tabulated kernel covers [0, {form.t_max}], asked for t={float(np.max(t_arr))}"
            )
        grid = np.arange(len(form.samples)) * form.dt
        out = np.interp(t_arr, grid, form.values)
    if np.ndim(out) == 0:
        return float(out)
    return out


def kernel_integral(spec: KernelSpec, t: float) -> float:
    """Return the integral of k over [0, t].

    Tabulated kernels use the trapezoid rule; beyond the last sample the tail
    is taken as zero.
    """
    if t <= 0:
        return 0.0
    form = spec.form
    if isinstance(form, Exponential):
        return form.a / form.b * -math.expm1(-form.b * t)
    t_eff = min(t, form.t_max)
    return _trapezoid_upto(form, form.values, t_eff)


def _trapezoid_upto(form: Tabulated, values: np.ndarray, t_end: float) -> float:
    """Trapezoid integral of sampled ``values`` over [0, t_end]."""
    n_full = int(math.floor(t_end / form.dt + _RANGE_SLACK))
    n_full = min(n_full, len(values) - 1)
    total = float(np.trapezoid(values[: n_full + 1], dx=form.dt)) if n_full > 0 else 0.0
    rest = t_end - n_full * form.dt
    if rest > _RANGE_SLACK * form.dt and n_full + 1 < len(values):
        frac = rest / form.dt
        end_val = values[n_full] + frac * (values[n_full + 1] - values[n_full])
        total += 0.5 * rest * (values[n_full] + end_val)
    return total


def kernel_derivative_samples(form: Tabulated) -> np.ndarray:
    """Finite-difference k' at the samples: centered inside, one-sided at the ends."""
    return np.gradient(form.values, form.dt, edge_order=1)


def validate_hypotheses(spec: KernelSpec, zeta: float | None = None) -> KernelReport:
    """Check the relaxation-kernel hypotheses needed for exponential decay.

    Clauses evaluated:

    ``nonnegative``
        k >= 0 (analytic for the exponential, every sample for a table).
    ``k0_positive``
        k(0) > 0.
    ``k_infinity_in_unit_interval``
        0 < 1 - int_0^inf k < 1.
    ``decay_condition``
        k'(t) + zeta k(t) <= 0 for every t.
    ``tail_resolved``
        tabulated kernels only: the table reaches k < 1e-12 k(0), since the
        tail past the last sample is dropped from the mass.

    Failures are reported, never raised.  ``zeta`` defaults to ``spec.zeta``.
    """
    if zeta is None:
        zeta = spec.zeta
    if zeta is None or not zeta > 0:
        raise ConfigError(f"zeta must be positive, got {zeta}")
    form = spec.form
    passes: dict[str, bool] = {}
    if isinstance(form, Exponential):
        k0 = form.a
        mass = form.a / form.b
        zeta_max = form.b
        passes["nonnegative"] = True
        passes["decay_condition"] = zeta <= form.b
    else:
        values = form.values
        k0 = float(values[0])
        mass = float(np.trapezoid(values, dx=form.dt))
        dk = kernel_derivative_samples(form)
        positive = values > 0
        if np.any(positive):
            zeta_max = float(np.min(-dk[positive] / values[positive]))
        else:
            zeta_max = math.inf
        if np.any(dk[~positive] > 0):
            zeta_max = -math.inf
        passes["nonnegative"] = bool(np.all(values >= 0))
        passes["decay_condition"] = bool(np.all(dk + zeta * values <= 0))
        passes["tail_resolved"] = bool(abs(values[-1]) <= TAIL_FRACTION * abs(k0))
    k_inf = 1.0 - mass
    passes["k0_positive"] = k0 > 0
    passes["k_infinity_in_unit_interval"] = 0 < k_inf < 1
    order = ["nonnegative", "k0_positive", "k_infinity_in_unit_interval", "decay_condition", "tail_resolved"]
    passes = {name: passes[name] for name in order if name in passes}
    return KernelReport(k0=k0, total_mass=mass, k_infinity=k_inf, zeta_max=zeta_max, zeta=zeta, passes=passes)


def theory_constant_C2T(spec: KernelSpec, T: float) -> float:
    """Kernel constant 2 [3 + 2|k(0)| + 6 ||k||^2 + T ||k'||^2] with L2 norms over (0, T)."""
    if not T > 0:
        raise ConfigError(f"horizon T must be positive, got {T}")
    form = spec.form
    if isinstance(form, Exponential):
        k_sq = form.a**2 * -math.expm1(-2 * form.b * T) / (2 * form.b)
        dk_sq = form.b**2 * k_sq
        k0 = form.a
    else:
        if len(form.samples) < 3:
            raise ConfigError("tabulated kernel needs at least 3 samples for C2T")
        if T > form.t_max * (1 + _RANGE_SLACK):
            raise OutOfRange(f"tabulated kernel covers [0, {form.t_max}], horizon T={T}")
        values = form.values
        k_sq = _trapezoid_upto(form, values**2, T)
        dk_sq = _trapezoid_upto(form, kernel_derivative_samples(form) ** 2, T)
        k0 = float(values[0])
    return 2.0 * (3.0 + 2.0 * abs(k0) + 6.0 * k_sq + T * dk_sq)


def g1_transform(g, dt: float, spec: KernelSpec, horizon: float | None = None,
                 include_right_endpoint: bool = False) -> np.ndarray:
    """Return g1(t_n) = g(t_n) - int_0^{t_n} k(t_n - s) g(s) ds on the samples of ``g``.

    The integral uses the same rectangle rule as the memory term of the
    solver: dt * sum_{i=1}^{n-1} k((n-i) dt) g_i, so both endpoints are left
    out unless ``include_right_endpoint`` adds the i = n term.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != 1:
        raise LengthMismatch("g must be a one-dimensional series")
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if horizon is not None:
        expected = int(round(horizon / dt)) + 1
        if len(g) != expected:
            raise LengthMismatch(f"series has {len(g)} samples, horizon {horizon} needs {expected}")
    n = len(g)
    if n == 0:
        return g.copy()
    lags = kernel_eval(spec, np.arange(n) * dt)
    lags = np.atleast_1d(np.asarray(lags, dtype=float)).copy()
    k0 = lags[0]
    lags[0] = 0.0
    body = g.copy()
    body[0] = 0.0
    conv = dt * np.convolve(lags, body)[:n]
    if include_right_endpoint:
        right = dt * k0 * g
        right[0] = 0.0
        conv = conv + right
    return g - conv
