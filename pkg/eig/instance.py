from dataclasses import dataclass

from console import vprint
from eig.solver import DEFAULT_TOL, EigenPair, ReducedPencil, solve_second, solve_smallest
from fem.assembly import SteklovSystem, assemble
from fem.flux import FluxTrace, recover_inner_flux
from geometry.domain import AnnulusProblem
from geometry.mesh import Mesh, MeshLayout, build_mesh

GAP_MIN = 1e-3
POSITIVITY = 1e-8
NORMALIZATION = 1e-12


@dataclass(frozen=True, eq=False)
class SolvedInstance:
    problem: AnnulusProblem
    mesh: Mesh
    system: SteklovSystem
    pencil: ReducedPencil
    pair: EigenPair
    flux: FluxTrace
    sigma2: float | None = None

    @property
    def sigma(self) -> float:
        return self.pair.sigma

    @property
    def t(self) -> float:
        return self.problem.hole.t

    @property
    def gap(self) -> float | None:
        return None if self.sigma2 is None else self.sigma2 / self.sigma


def solve_instance(
    problem: AnnulusProblem,
    h: float,
    layout: MeshLayout | None = None,
    tol: float = DEFAULT_TOL,
    second: bool = False,
) -> SolvedInstance:
    """Mesh, assemble and solve one offset; optionally also the second eigenvalue."""
    mesh = build_mesh(problem, h, layout=layout)
    system = assemble(mesh)
    pencil = ReducedPencil(system)
    pair = solve_smallest(system, tol=tol, pencil=pencil)
    sigma2 = solve_second(system, pair, tol=tol, pencil=pencil) if second else None
    flux = recover_inner_flux(mesh, system, pair, tol=tol)
    vprint(f"solved t={problem.hole.t:.6g}: sigma={pair.sigma:.10g}" + (f" sigma2={sigma2:.10g}" if second else ""))
    return SolvedInstance(
        problem=problem,
        mesh=mesh,
        system=system,
        pencil=pencil,
        pair=pair,
        flux=flux,
        sigma2=sigma2,
    )


def audit_instance(instance: SolvedInstance) -> dict[str, bool]:
    """
    Structural checks of a solved eigenpair:
    u >= -1e-8 * max u, u^T M_out u = 1 to 1e-12, and sigma_2 / sigma >= 1 + 1e-3.
    Simplicity is only audited when sigma_2 was solved for.
    """
    u = instance.pair.u
    norm = float(u @ (instance.system.M_out @ u))
    checks = {
        "positivity": bool(u.min() >= -POSITIVITY * u.max()),
        "normalization": bool(abs(norm - 1.0) <= NORMALIZATION),
    }
    if instance.sigma2 is not None:
        checks["simplicity"] = bool(instance.gap - 1.0 >= GAP_MIN)
    return checks
