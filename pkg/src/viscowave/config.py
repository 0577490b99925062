"""Run configuration: flat ``key = value`` text with dotted section names.

Example::

    mode = "verify"
    output_dir = "runs/verify"
    problem.forcing = "manufactured"
    kernel.form = "exponential"
    kernel.a = 0.5
    solver.grid_n = 50
    solver.dt = 0.001

The syntax is the dotted-key subset of TOML, so files are parsed with
``tomli``; :func:`serialize` writes the same subset back.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import tomli

from .exceptions import ConfigError
from .kernel import KernelSpec
from .stepper import ProblemSpec, SolverConfig

MODES = ("simulate", "verify", "decay", "convergence", "validate-kernel")


@dataclass(frozen=True)
class ProblemSection:
    p: float = 3.0
    q: float = 4.0
    eta: float = 1.0
    source_sign: int = 1
    forcing: str = "manufactured"
    u0: str = "reference"
    u1: str = "reference"


@dataclass(frozen=True)
class KernelSection:
    form: str = "exponential"
    a: float = 0.5
    b: float = 1.0
    zeta: float = 1.0
    file: str = ""


@dataclass(frozen=True)
class SolverSection:
    grid_n: int = 50
    dt: float = 1e-3
    t_final: float = 2.0
    picard_tol: float = 1e-10
    picard_max_iters: int = 50
    regularization_eps: float = 0.0
    snapshot_every: int = 10
    allow_unstable: bool = False


@dataclass(frozen=True)
class MemorySection:
    include_right_endpoint: bool = False


@dataclass(frozen=True)
class EnergySection:
    eps1: float = 0.01
    eps2: float = 0.01
    alpha1: float = 0.9
    alpha2: float = 1.1


@dataclass(frozen=True)
class VerifySection:
    tolerance: float = 0.05


@dataclass(frozen=True)
class DecaySection:
    # Negative bounds mean "derive from t_final": [t_final / 2, t_final].
    window_lo: float = -1.0
    window_hi: float = -1.0
    min_r_squared: float = 0.95
    max_final_ratio: float = 0.2
    monotone_tol: float = 1e-6


@dataclass(frozen=True)
class ConvergenceSection:
    levels: int = 3
    min_order: float = 0.6


@dataclass(frozen=True)
class RunConfig:
    mode: str = "simulate"
    output_dir: str = "viscowave_out"
    emit_plots: bool = True
    problem: ProblemSection = field(default_factory=ProblemSection)
    kernel: KernelSection = field(default_factory=KernelSection)
    solver: SolverSection = field(default_factory=SolverSection)
    memory: MemorySection = field(default_factory=MemorySection)
    energy: EnergySection = field(default_factory=EnergySection)
    verify: VerifySection = field(default_factory=VerifySection)
    decay: DecaySection = field(default_factory=DecaySection)
    convergence: ConvergenceSection = field(default_factory=ConvergenceSection)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")

    def with_mode(self, mode: str) -> "RunConfig":
        return dataclasses.replace(self, mode=mode)

    def kernel_spec(self, base_dir: Path | None = None) -> KernelSpec:
        k = self.kernel
        if k.form == "exponential":
            return KernelSpec.exponential(k.a, k.b, zeta=k.zeta)
        if k.form == "tabulated":
            if not k.file:
                raise ConfigError("kernel.form = tabulated needs kernel.file")
            path = Path(k.file)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return KernelSpec.from_csv(path, zeta=k.zeta)
        raise ConfigError(f"unknown kernel.form {k.form!r}")

    def problem_spec(self, base_dir: Path | None = None) -> ProblemSpec:
        p = self.problem
        return ProblemSpec(p=p.p, q=p.q, eta=p.eta, source_sign=p.source_sign,
                           kernel=self.kernel_spec(base_dir), forcing=p.forcing, u0=p.u0, u1=p.u1)

    def solver_config(self, track_energy: bool = True) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            grid_n=s.grid_n, dt=s.dt, t_final=s.t_final, picard_tol=s.picard_tol,
            picard_max_iters=s.picard_max_iters, regularization_eps=s.regularization_eps,
            snapshot_every=s.snapshot_every, include_right_endpoint=self.memory.include_right_endpoint,
            allow_unstable=s.allow_unstable, track_energy=track_energy,
            eps1=self.energy.eps1, eps2=self.energy.eps2,
        )

    def decay_window(self) -> tuple[float, float]:
        T = self.solver.t_final
        lo = self.decay.window_lo if self.decay.window_lo >= 0 else 0.5 * T
        hi = self.decay.window_hi if self.decay.window_hi >= 0 else T
        return lo, hi


_TOP_LEVEL = ("mode", "output_dir", "emit_plots")


def _coerce(value, target_type: str, key: str):
    try:
        if target_type == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if target_type == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if target_type == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if not isinstance(value, str):
            raise TypeError
        return value
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {target_type}, got {value!r}") from None


def from_dict(data: dict) -> RunConfig:
    kwargs = {}
    sections = {f.name: f for f in fields(RunConfig) if f.name not in _TOP_LEVEL}
    for key, value in data.items():
        if key in _TOP_LEVEL:
            kwargs[key] = _coerce(value, "bool" if key == "emit_plots" else "str", key)
        elif key in sections:
            if not isinstance(value, dict):
                raise ConfigError(f"{key} must be a section of dotted keys")
            cls = sections[key].default_factory
            known = {f.name: f.type for f in fields(cls)}
            sub = {}
            for name, item in value.items():
                if name not in known:
                    raise ConfigError(f"unknown key {key}.{name}")
                sub[name] = _coerce(item, known[name], f"{key}.{name}")
            kwargs[key] = cls(**sub)
        else:
            raise ConfigError(f"unknown key {key}")
    return RunConfig(**kwargs)


def parse_config(text: str) -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    return from_dict(data)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def _quote(text: str) -> str:
    """TOML basic string; control characters and DEL become ``\\uXXXX`` escapes."""
    out = []
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigError(f"cannot serialize non-finite value {value}")
        return repr(value)
    return _quote(value)


def serialize(config: RunConfig) -> str:
    lines = [f"{key} = {_format(getattr(config, key))}" for key in _TOP_LEVEL]
    for f in fields(RunConfig):
        if f.name in _TOP_LEVEL:
            continue
        section = getattr(config, f.name)
        lines.append("")
        for sub in fields(section):
            lines.append(f"{f.name}.{sub.name} = {_format(getattr(section, sub.name))}")
    return "\n".join(lines) + "\n"
