"""
Finite-difference oracles in the hole offset t.

All meshes of one stencil share the ray/ring layout of the central offset, so
each node moves smoothly with t and discretization error cancels in differences.
At t = 0 the point reflection x -> -x maps the hole at -delta*w onto the one at
+delta*w, so sigma(-delta) = sigma(delta).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from eig.instance import SolvedInstance, solve_instance
from eig.solver import DEFAULT_TOL
from geometry.domain import AnnulusProblem
from geometry.mesh import Mesh, MeshLayout, layout_for
from shape.trace import StepTooLarge


@dataclass(frozen=True)
class FiniteDifferences:
    fd_first: float
    fd_second: float
    delta: float
    delta_second: float
    sigmas: dict[float, float]
    layout: MeshLayout


def _check_stencil(problem: AnnulusProblem, delta: float):
    t, t_max = problem.hole.t, problem.t_max
    if not delta > 0:
        raise StepTooLarge(f"step must be positive, got {delta}")
    if 0.0 < t < delta:
        raise StepTooLarge(f"stencil t - delta = {t - delta:.3g} leaves [0, t_max)")
    if t + delta >= t_max:
        raise StepTooLarge(f"stencil t + delta = {t + delta:.6g} reaches t_max = {t_max:.6g}")


def _solve_sigmas(problem, ts, h, layout, tol, workers) -> dict[float, float]:
    def one(t):
        return solve_instance(problem.at(t), h, layout=layout, tol=tol).sigma

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return dict(zip(ts, pool.map(one, ts)))


def finite_difference_derivatives(
    problem: AnnulusProblem,
    h: float,
    delta: float,
    delta_second: float | None = None,
    layout: MeshLayout | None = None,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> FiniteDifferences:
    """Central first difference with step `delta`, second difference with `delta_second` (defaults to delta)."""
    delta_second = delta if delta_second is None else delta_second
    for d in (delta, delta_second):
        _check_stencil(problem, d)
    layout = layout or layout_for(problem, h)
    t = problem.hole.t

    if t == 0.0:
        ts = sorted({0.0, delta, delta_second})
        s = _solve_sigmas(problem, ts, h, layout, tol, workers)
        fd_first = 0.0
        fd_second = 2.0 * (s[delta_second] - s[0.0]) / delta_second**2
    else:
        ts = sorted({t - delta, t + delta, t - delta_second, t, t + delta_second})
        s = _solve_sigmas(problem, ts, h, layout, tol, workers)
        fd_first = (s[t + delta] - s[t - delta]) / (2.0 * delta)
        fd_second = (s[t + delta_second] - 2.0 * s[t] + s[t - delta_second]) / delta_second**2
    return FiniteDifferences(
        fd_first=fd_first,
        fd_second=fd_second,
        delta=delta,
        delta_second=delta_second,
        sigmas=s,
        layout=layout,
    )


def nodal_gradient(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    """Area-weighted average of the element gradients around each node."""
    tri = mesh.triangles
    p = mesh.nodes[tri]
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    area = mesh.signed_areas()
    # grad(phi_i) = perp(e_i) / (2 area) with perp(x, y) = (-y, x)
    perp = np.stack([-e[:, :, 1], e[:, :, 0]], axis=2)
    grad = (u[tri][:, :, None] * perp).sum(axis=1) / (2.0 * area)[:, None]

    n = mesh.n_nodes
    weight = np.bincount(tri.ravel(), np.repeat(area, 3), n)
    out = np.empty((n, 2))
    for k in range(2):
        out[:, k] = np.bincount(tri.ravel(), np.repeat(grad[:, k] * area, 3), n) / weight
    return out


@dataclass(frozen=True, eq=False)
class EigenfunctionDerivative:
    u_prime: np.ndarray
    mesh: Mesh
    center: SolvedInstance

    def interior_rings(self) -> np.ndarray:
        """Node indices strictly between the hole circle and the outer boundary."""
        layout = self.mesh.layout
        return np.arange(layout.n_theta, layout.n_theta * layout.n_radial)


def finite_difference_eigenfunction(
    problem: AnnulusProblem,
    h: float,
    delta: float,
    layout: MeshLayout | None = None,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> EigenfunctionDerivative:
    """
    Eulerian derivative estimate on the central mesh:
        u' ~ (u(t+delta) - u(t-delta)) / (2 delta) - grad u(t) . xdot
    where xdot is the node velocity of the shared layout.
    """
    _check_stencil(problem, delta)
    t = problem.hole.t
    if t < delta:
        raise StepTooLarge(f"eigenfunction stencil needs t >= delta, got t={t}, delta={delta}")
    layout = layout or layout_for(problem, h)

    def one(s):
        return solve_instance(problem.at(s), h, layout=layout, tol=tol)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        minus, center, plus = pool.map(one, (t - delta, t, t + delta))

    material = (plus.pair.u - minus.pair.u) / (2.0 * delta)
    xdot = (plus.mesh.nodes - minus.mesh.nodes) / (2.0 * delta)
    grad = nodal_gradient(center.mesh, center.pair.u)
    u_prime = material - (grad * xdot).sum(axis=1)
    return EigenfunctionDerivative(u_prime=u_prime, mesh=center.mesh, center=center)
