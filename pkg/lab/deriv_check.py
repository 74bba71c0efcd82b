from dataclasses import dataclass, field

from console import console, vprint
from eig.instance import solve_instance
from lab.config import InstanceConfig, LabConfig
from lab.sweep import SOLVE_ERRORS, problem_from_config
from shape.derivatives import DerivativeReport, derivative_report
from shape.finite_difference import finite_difference_derivatives

ORTHOGONALITY_TOL = 1e-6


@dataclass
class DerivCheckResult:
    reports: list[DerivativeReport]
    passed: bool
    reasons: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def check_instance(config: LabConfig, spec: InstanceConfig) -> DerivativeReport:
    problem = problem_from_config(config).at(spec.t)
    h = spec.h or config.h
    check = config.deriv_check
    delta = spec.delta or check.delta_factor * problem.t_max
    delta_second = spec.delta_second or check.delta_second_factor * problem.t_max

    fd = finite_difference_derivatives(
        problem, h, delta, delta_second=delta_second, tol=config.tol, workers=config.workers
    )
    instance = solve_instance(problem, h, layout=fd.layout, tol=config.tol)
    report, _ = derivative_report(instance)
    return report.model_copy(
        update=dict(fd_first=fd.fd_first, fd_second=fd.fd_second, delta=delta, delta_second=delta_second)
    )


def judge(report: DerivativeReport, config: LabConfig) -> list[str]:
    check = config.deriv_check
    where = f"t={report.t:.6g}"
    reasons = []
    if report.t == 0.0:
        if abs(report.sigma_prime) > check.stationary_scale * report.h:
            reasons.append(f"{where}: |sigma'| = {abs(report.sigma_prime):.3g} above {check.stationary_scale:g} * h")
    else:
        first = report.first_agreement()
        if first is None or first > check.first_tol:
            reasons.append(f"{where}: sigma' {report.sigma_prime:.8g} vs fd {report.fd_first:.8g} ({first})")
    second = report.second_agreement()
    if second is None or second > check.second_tol:
        reasons.append(f"{where}: sigma'' {report.sigma_second_bvp:.8g} vs fd {report.fd_second:.8g} ({second})")
    if not report.signs_ok():
        reasons.append(
            f"{where}: sign structure violated (I={report.term_I:.3g}, II={report.term_II:.3g}, "
            f"III={report.term_III_extra:.3g}, sum={report.sigma_second:.3g})"
        )
    if report.orthogonality is not None and abs(report.orthogonality) > ORTHOGONALITY_TOL:
        reasons.append(f"{where}: int u' u = {report.orthogonality:.3g} on the outer boundary")
    return reasons


def run_deriv_check(config: LabConfig) -> DerivCheckResult:
    instances = config.deriv_check.instances or [InstanceConfig(t=config.t)]
    reports: list[DerivativeReport] = []
    reasons: list[str] = []

    # instances run in sequence; each stencil fans out over config.workers
    for spec in instances:
        try:
            report = check_instance(config, spec)
        except SOLVE_ERRORS as exc:
            error = f"t={spec.t:.6g}: {type(exc).__name__}: {exc}"
            console.print(f"[red]{error}[/red]")
            reasons.append(error)
            continue
        vprint(
            f"t={report.t:.6g}: sigma'={report.sigma_prime:.8g} fd={report.fd_first:.8g} "
            f"sigma''(bvp)={report.sigma_second_bvp:.8g} fd={report.fd_second:.8g}"
        )
        reports.append(report)
        reasons.extend(judge(report, config))
    return DerivCheckResult(reports=reports, passed=not reasons, reasons=reasons)
