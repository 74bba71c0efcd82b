"""
Offset sweeps: sigma(t) on equally spaced offsets with a monotonicity verdict.

PASS requires
  - sigma strictly decreasing between consecutive samples, by more than 10 * tol * sigma
  - the largest sigma at t = 0
  - lower_bound <= sigma <= upper_bound * (1 + 2e-3) when the outer domain is a disk
  - sigma' <= 0 everywhere, vanishing only at t = 0 (up to C * h)
  - no failed offsets
  - every solved eigenpair positive, normalized and simple (audit_instance)
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn

from analytic.shell import eccentric_bounds
from console import console, vprint
from eig.instance import SolvedInstance, audit_instance, solve_instance
from eig.solver import EigenError, ZeroBoundaryTrace
from fem.assembly import FemError
from geometry.domain import AnnulusProblem, GeometryError, make_problem, offsets
from lab.config import LabConfig
from shape.derivatives import derivative_report
from shape.finite_difference import finite_difference_derivatives
from shape.trace import ShapeError

BOUND_SLACK = 2e-3
NOISE_FACTOR = 10.0
SOLVE_ERRORS = (GeometryError, FemError, EigenError, ShapeError, ZeroBoundaryTrace)


@dataclass
class SweepRecord:
    t: float
    sigma: float | None = None
    sigma_prime: float | None = None
    sigma_second: float | None = None
    fd_first: float | None = None
    fd_second: float | None = None
    lower_bound: float | None = None
    upper_bound: float | None = None
    h: float | None = None
    sigma2_gap: float | None = None
    sigma_second_bvp: float | None = None
    violations: list[str] = field(default_factory=list)
    failed: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SweepResult:
    records: list[SweepRecord]
    passed: bool
    reasons: list[str] = field(default_factory=list)
    t_max: float | None = None

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def problem_from_config(config: LabConfig) -> AnnulusProblem:
    return make_problem(config.outer.domain(), config.r, config.w)


def solve_record(
    problem: AnnulusProblem,
    t: float,
    config: LabConfig,
    instance: SolvedInstance | None = None,
) -> SweepRecord:
    """Solve one offset (or reuse `instance`); solver failures are recorded, not raised."""
    record = SweepRecord(t=float(t), h=config.h)
    if problem.outer.kind == "disk":
        record.upper_bound, record.lower_bound = eccentric_bounds(problem.outer.radius, problem.hole.r)
    try:
        if instance is None:
            instance = solve_instance(problem.at(t), config.h, tol=config.tol, second=config.sweep.second)
        record.sigma = instance.sigma
        if instance.sigma2 is not None:
            record.sigma2_gap = instance.sigma2 / instance.sigma - 1.0
        record.violations = [name for name, ok in audit_instance(instance).items() if not ok]
        if config.sweep.derivatives:
            report, _ = derivative_report(instance)
            record.sigma_prime = report.sigma_prime
            record.sigma_second = report.sigma_second
            record.sigma_second_bvp = report.sigma_second_bvp
        if config.sweep.finite_differences:
            fd = finite_difference_derivatives(
                problem.at(t),
                config.h,
                delta=config.deriv_check.delta_factor * problem.t_max,
                delta_second=config.deriv_check.delta_second_factor * problem.t_max,
                tol=config.tol,
            )
            record.fd_first, record.fd_second = fd.fd_first, fd.fd_second
    except SOLVE_ERRORS as exc:
        record.failed = True
        record.error = f"{type(exc).__name__}: {exc}"
        console.print(f"[red]offset t={t:.6g} failed:[/red] {record.error}")
    return record


def verdict(records: list[SweepRecord], tol: float, h: float, stationary_scale: float = 1.0) -> tuple[bool, list[str]]:
    reasons: list[str] = []
    failed = [r for r in records if r.failed]
    if failed:
        reasons.append(f"{len(failed)} offsets failed to solve")
        return False, reasons

    for rec in records:
        if rec.violations:
            reasons.append(f"eigenpair at t={rec.t:.6g} violates {', '.join(rec.violations)}")

    sigma = np.array([r.sigma for r in records])
    for prev, cur, rec in zip(sigma, sigma[1:], records[1:]):
        if not prev - cur > NOISE_FACTOR * tol * prev:
            reasons.append(f"sigma does not strictly decrease at t={rec.t:.6g} ({prev:.12g} -> {cur:.12g})")
    if np.any(sigma <= 0.0):
        reasons.append("non-positive sigma")
    if int(np.argmax(sigma)) != 0 or records[0].t != 0.0:
        reasons.append("largest sigma is not at t = 0")

    for rec in records:
        if rec.lower_bound is not None and not rec.lower_bound <= rec.sigma <= rec.upper_bound * (1 + BOUND_SLACK):
            reasons.append(
                f"bounds violated at t={rec.t:.6g}: {rec.lower_bound:.6g} <= {rec.sigma:.6g} <= {rec.upper_bound:.6g}"
            )
        if rec.sigma_prime is None:
            continue
        if rec.t == 0.0:
            if abs(rec.sigma_prime) > stationary_scale * h:
                reasons.append(f"sigma'(0) = {rec.sigma_prime:.3g} exceeds {stationary_scale:g} * h")
        elif not rec.sigma_prime < 0.0:
            reasons.append(f"sigma' = {rec.sigma_prime:.3g} is not negative at t={rec.t:.6g}")
    return not reasons, reasons


def run_sweep(config: LabConfig, show_progress: bool = True) -> SweepResult:
    problem = problem_from_config(config)
    ts = offsets(problem, config.sweep.samples, margin=config.sweep.margin)
    vprint(f"sweep: t_max={problem.t_max:.10g}, {len(ts)} offsets, h={config.h:g}, workers={config.workers}")

    records: list[SweepRecord] = []
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
        disable=not show_progress,
    ) as progress:
        task = progress.add_task("[cyan]Solving offsets...[/cyan]", total=len(ts))

        def job(t):
            record = solve_record(problem, t, config)
            progress.advance(task)
            return record

        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(job, ts))

    passed, reasons = verdict(records, config.tol, config.h, config.deriv_check.stationary_scale)
    return SweepResult(records=records, passed=passed, reasons=reasons, t_max=problem.t_max)
