"""Command line entry point ``viscowave``.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 acceptance check failed (verify and decay modes).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import harness
from .config import RunConfig, load_config
from .exceptions import ConfigError, NonPositiveEnergy, SolverError
from .kernel import validate_hypotheses

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CHECK = 4

log = logging.getLogger("viscowave")


def _dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def cmd_simulate(config: RunConfig, base: Path, args) -> int:
    traj = harness.run_simulation(config, base)
    e0, e1 = traj.energy[0].E, traj.energy[-1].E
    print(f"simulated to t={traj.times[-1]:g}: {len(traj.times)} snapshots, "
          f"max Picard iterates {int(traj.picard_iters.max(initial=0))}, E {e0:.6g} -> {e1:.6g}")
    print(f"output written to {config.output_dir}")
    return EXIT_OK


def cmd_verify(config: RunConfig, base: Path, args) -> int:
    report = harness.verify_run(config, base)
    tol = config.verify.tolerance
    checks = {"relative_l2": report.relative_l2 <= tol, "t0_exact": report.t0_error == 0.0}
    _dump(Path(config.output_dir) / "verify.json", {**report.summary, "tolerance": tol, "checks": checks})
    print(f"max_abs={report.max_abs:.6e} l2={report.l2:.6e} relative_l2={report.relative_l2:.6e}")
    for name, ok in checks.items():
        print(f"[{_status(ok)}] {name}")
    return EXIT_OK if all(checks.values()) else EXIT_CHECK


def cmd_decay(config: RunConfig, base: Path, args) -> int:
    try:
        result = harness.decay_run(config, base)
    except NonPositiveEnergy as exc:
        print(f"decay fit impossible: {exc}", file=sys.stderr)
        return EXIT_CHECK
    checks = harness.decay_acceptance(result, config)
    _dump(Path(config.output_dir) / "decay.json", {**result.summary(), "checks": checks})
    f = result.fit
    print(f"gamma={f.gamma:.6g} N={f.amplitude:.6g} r2={f.r_squared:.6f} "
          f"(window {result.window[0]:g}..{result.window[1]:g}); sqrt(E) fit gamma={result.fit_sqrt.gamma:.6g}")
    print(f"E(T)/E(0)={result.final_ratio:.6g} max relative step increase={result.max_increase:.3e}")
    for name, ok in checks.items():
        print(f"[{_status(ok)}] {name}")
    return EXIT_OK if all(checks.values()) else EXIT_CHECK


def cmd_convergence(config: RunConfig, base: Path, args) -> int:
    rows = harness.convergence_study(config, args.levels, base)
    print(f"{'N':>6} {'h':>10} {'dt':>10} {'max_abs':>12} {'order':>7}")
    for r in rows:
        order = "" if math.isnan(r.observed_order) else f"{r.observed_order:7.3f}"
        print(f"{r.n:6d} {r.h:10.4g} {r.dt:10.4g} {r.max_abs:12.5e} {order:>7}")
    return EXIT_OK


def cmd_validate_kernel(config: RunConfig, base: Path, args) -> int:
    spec = config.kernel_spec(base)
    report = validate_hypotheses(spec, config.kernel.zeta)
    print(f"k(0)={report.k0:.6g} mass={report.total_mass:.6g} k_inf={report.k_infinity:.6g} "
          f"zeta_max={report.zeta_max:.6g} (zeta={report.zeta:g})")
    for name, ok in report.passes.items():
        print(f"[{_status(ok)}] {name}")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "kernel_report.json", {
        "k0": report.k0, "total_mass": report.total_mass, "k_infinity": report.k_infinity,
        "zeta_max": report.zeta_max if math.isfinite(report.zeta_max) else str(report.zeta_max),
        "zeta": report.zeta, "passes": report.passes, "ok": report.ok,
    })
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "decay": cmd_decay,
    "convergence": cmd_convergence,
    "validate-kernel": cmd_validate_kernel,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="viscowave", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", type=Path, help="run configuration file")
        p.add_argument("-o", "--output-dir", help="override output_dir from the config")
        if name == "convergence":
            p.add_argument("--levels", type=int, default=None, help="refinement levels (>= 2)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config).with_mode(args.command)
        if args.output_dir:
            config = RunConfig(**{**config.__dict__, "output_dir": args.output_dir})
        return COMMANDS[args.command](config, args.config.resolve().parent, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
