import math
from dataclasses import asdict, dataclass

from analytic.shell import ShellSpec, concentric_sigma
from console import vprint
from eig.instance import solve_instance
from lab.config import ConfigError, LabConfig
from lab.sweep import problem_from_config

ORDER_RANGE = (1.8, 2.2)
COARSE_ERROR = 0.05


@dataclass
class ConvergenceRow:
    h: float
    sigma: float
    error: float  # relative to the closed form
    order: float | None = None
    triangles: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ConvergenceResult:
    rows: list[ConvergenceRow]
    exact: float
    passed: bool
    reasons: list[str]

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def run_convergence(config: LabConfig) -> ConvergenceResult:
    """Refinement study of the concentric disk shell against 1 / (R log(R/r))."""
    if config.outer.kind != "disk":
        raise ConfigError("convergence study needs a disk outer domain")
    if config.t != 0.0:
        raise ConfigError("convergence study runs on the concentric shell (t = 0)")
    problem = problem_from_config(config)
    exact = concentric_sigma(ShellSpec(R=problem.outer.radius, r=config.r))

    rows: list[ConvergenceRow] = []
    for h in config.convergence.h_levels:
        inst = solve_instance(problem, h, tol=config.tol)
        row = ConvergenceRow(
            h=h,
            sigma=inst.sigma,
            error=abs(inst.sigma - exact) / exact,
            triangles=len(inst.mesh.triangles),
        )
        if rows:
            row.order = math.log(rows[-1].error / row.error) / math.log(rows[-1].h / h)
        vprint(f"h={h:g} sigma={row.sigma:.10g} error={row.error:.3e} order={row.order}")
        rows.append(row)

    reasons = []
    if any(b.error >= a.error for a, b in zip(rows, rows[1:])):
        reasons.append("errors do not decrease monotonically")
    if rows[0].error >= COARSE_ERROR:
        reasons.append(f"coarsest error {rows[0].error:.3g} is not below {COARSE_ERROR:g}")
    final = rows[-1].order
    if final is None or not ORDER_RANGE[0] <= final <= ORDER_RANGE[1]:
        reasons.append(f"final observed order {final} outside {ORDER_RANGE}")
    return ConvergenceResult(rows=rows, exact=exact, passed=not reasons, reasons=reasons)
