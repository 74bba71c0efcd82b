"""
steklov-lab command line.

    python main.py solve       --config run.json
    python main.py sweep       --config run.json --workers 4 --format csv --out sweep.csv
    python main.py converge    --config shell.json
    python main.py deriv-check --config deriv.json --format json
    python main.py bounds      --R 2 --r 0.5

Exit codes: 0 PASS, 2 verdict FAIL, 1 error.
"""

import argparse
import contextlib
import sys
from pathlib import Path

from rich.panel import Panel

from analytic.shell import BadShell, ShellSpec, concentric_sigma, eccentric_bounds
from console import console, set_verbose
from eig.instance import audit_instance, solve_instance
from eig.solver import EigenError, ZeroBoundaryTrace
from fem.assembly import FemError
from fem.flux import flux_balance
from geometry.domain import GeometryError
from lab.config import ConfigError, LabConfig, load_config
from lab.convergence import run_convergence
from lab.deriv_check import run_deriv_check
from lab.export import (
    convergence_payload,
    convergence_table,
    deriv_payload,
    deriv_table,
    sweep_payload,
    sweep_table,
    write_convergence_csv,
    write_json,
    write_reports_csv,
    write_sweep_csv,
)
from lab.sweep import SweepResult, problem_from_config, run_sweep, solve_record
from shape.trace import ShapeError

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


@contextlib.contextmanager
def output_stream(path: str | None):
    if path is None:
        yield sys.stdout
        return
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        yield f


def _load(args) -> LabConfig:
    if not args.config:
        raise ConfigError(f"`{args.command}` needs --config <path>")
    config = load_config(args.config)
    if args.workers is not None:
        config = config.model_copy(update={"workers": max(1, args.workers)})
    return config


def cmd_solve(args) -> int:
    config = _load(args)
    problem = problem_from_config(config)
    inst = solve_instance(problem.at(config.t), config.h, tol=config.tol, second=True)
    checks = audit_instance(inst) | {"flux sign": inst.flux.sign_constant()}
    passed = all(checks.values())

    lines = [
        f"t = {config.t:g}   (t_max = {problem.t_max:.10g})",
        f"sigma   = {inst.sigma:.12g}",
        f"sigma_2 = {inst.sigma2:.12g}   (gap {inst.sigma2 / inst.sigma - 1.0:.4g})",
        f"residual = {inst.pair.residual:.2e} after {inst.pair.iterations} iterations",
        f"flux balance = {flux_balance(inst.system, inst.pair, inst.flux):.2e}",
        f"nodes = {inst.mesh.n_nodes}, triangles = {len(inst.mesh.triangles)}, min quality = {inst.mesh.min_quality:.3f}",
    ]
    lines += [f"{name}: {'[green]ok[/green]' if ok else '[red]violated[/red]'}" for name, ok in checks.items()]
    console.print(Panel("\n".join(lines), title="Steklov-Dirichlet eigenpair", border_style="green" if passed else "red"))

    record = solve_record(problem, config.t, config, instance=inst)
    result = SweepResult(records=[record], passed=passed and not record.failed, t_max=problem.t_max)
    with output_stream(args.out) as out:
        if args.format == "json":
            write_json(sweep_payload(result, config) | {"command": "solve", "checks": checks}, out)
        else:
            write_sweep_csv(result.records, out)
    return EXIT_PASS if result.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    config = _load(args)
    result = run_sweep(config)
    console.print(sweep_table(result))
    for reason in result.reasons:
        console.print(f"[yellow]- {reason}[/yellow]")
    with output_stream(args.out) as out:
        if args.format == "json":
            write_json(sweep_payload(result, config), out)
        else:
            write_sweep_csv(result.records, out)
    return EXIT_PASS if result.passed else EXIT_FAIL


def cmd_converge(args) -> int:
    config = _load(args)
    result = run_convergence(config)
    console.print(convergence_table(result))
    for reason in result.reasons:
        console.print(f"[yellow]- {reason}[/yellow]")
    with output_stream(args.out) as out:
        if args.format == "json":
            write_json(convergence_payload(result, config), out)
        else:
            write_convergence_csv(result, out)
    return EXIT_PASS if result.passed else EXIT_FAIL


def cmd_deriv_check(args) -> int:
    config = _load(args)
    result = run_deriv_check(config)
    console.print(deriv_table(result))
    for reason in result.reasons:
        console.print(f"[yellow]- {reason}[/yellow]")
    with output_stream(args.out) as out:
        if args.format == "json":
            write_json(deriv_payload(result, config), out)
        else:
            write_reports_csv(result, out)
    return EXIT_PASS if result.passed else EXIT_FAIL


def cmd_bounds(args) -> int:
    if args.config:
        config = _load(args)
        if config.outer.kind != "disk":
            raise ConfigError("bounds are only known for a disk outer domain")
        R, r = config.outer.R, config.r
    elif args.R is not None and args.r is not None:
        R, r = args.R, args.r
    else:
        raise ConfigError("`bounds` needs --config or both --R and --r")

    upper, lower = eccentric_bounds(R, r)
    payload = {
        "command": "bounds",
        "R": R,
        "r": r,
        "upper_bound": upper,
        "lower_bound": lower,
        "concentric_sigma": {str(n): concentric_sigma(ShellSpec(R=R, r=r, n=n)) for n in (2, 3)},
        "derived": ["concentric_sigma.3"],
    }
    console.print(
        Panel(
            f"r/(2R(R-r)) = {lower:.12g} <= sigma(t) <= 1/(R log(R/r)) = {upper:.12g}",
            title=f"Eccentric shell bounds R={R:g}, r={r:g}",
        )
    )
    with output_stream(args.out) as out:
        if args.format == "json":
            write_json(payload, out)
        else:
            out.write("R,r,lower_bound,upper_bound\n")
            out.write(f"{R:.17g},{r:.17g},{lower:.17g},{upper:.17g}\n")
    return EXIT_PASS if lower < upper else EXIT_FAIL


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "converge": cmd_converge,
    "deriv-check": cmd_deriv_check,
    "bounds": cmd_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Steklov-Dirichlet eigenvalue lab for a movable circular hole.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="write machine output here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--workers", type=int, default=None, help="concurrent solves (overrides STEKLOV_WORKERS)")
    common.add_argument("--seedless", action="store_true", help="no-op: every run is deterministic, no RNG is used")
    common.add_argument("--verbose", action="store_true", help="Enable verbose output")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve one offset and audit the eigenpair")
    sub.add_parser("sweep", parents=[common], help="sigma(t) over [0, margin * t_max] with a monotonicity verdict")
    sub.add_parser("converge", parents=[common], help="mesh refinement study of the concentric shell")
    sub.add_parser("deriv-check", parents=[common], help="shape-derivative formulas vs finite differences")
    bounds = sub.add_parser("bounds", parents=[common], help="closed-form bounds for a disk shell")
    bounds.add_argument("--R", type=float, help="outer radius")
    bounds.add_argument("--r", type=float, help="hole radius")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_verbose(True)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, GeometryError, FemError, EigenError, ShapeError, BadShell, ZeroBoundaryTrace) as exc:
        console.print(f"[bold red]Error:[/bold red] {type(exc).__name__}: {exc}")
        return EXIT_ERROR
    except KeyboardInterrupt:
        console.print("\n[bold red]Stopped by user.[/bold red]")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
