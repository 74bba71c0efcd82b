from dataclasses import dataclass

import numpy as np

from eig.solver import DEFAULT_TOL, EigenPair, NotConverged
from fem.assembly import SteklovSystem
from geometry.mesh import Mesh


@dataclass(frozen=True, eq=False)
class FluxTrace:
    """
    Normal flux of u on the hole circle, one entry per inner node, ordered by angle.

    nu is the outer normal of Omega(t) on the hole, pointing toward the hole center.
    """

    nodes: np.ndarray
    theta: np.ndarray
    flux: np.ndarray  # du/dnu, negative for the first eigenfunction
    grad: np.ndarray  # |grad u| = |flux| since u = 0 on the circle
    weights: np.ndarray  # arc-length quadrature weights
    normals: np.ndarray
    reactions: np.ndarray
    center: np.ndarray
    radius: float

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    def w_dot_nu(self, w) -> np.ndarray:
        return self.normals @ np.asarray(w, dtype=float)

    def sign_constant(self) -> bool:
        return bool(np.all(self.flux < 0.0) or np.all(self.flux > 0.0))


def lumped_edge_mass(nodes: np.ndarray, edges: np.ndarray, n: int | None = None) -> np.ndarray:
    """Half the summed length of the edges incident to each node."""
    n = len(nodes) if n is None else n
    length = np.linalg.norm(nodes[edges[:, 1]] - nodes[edges[:, 0]], axis=1)
    return 0.5 * (np.bincount(edges[:, 0], length, n) + np.bincount(edges[:, 1], length, n))


def recover_inner_flux(
    mesh: Mesh,
    system: SteklovSystem,
    pair: EigenPair,
    tol: float = DEFAULT_TOL,
) -> FluxTrace:
    if pair.residual > tol:
        raise NotConverged(f"eigenpair residual {pair.residual:.3g} above tolerance {tol:.1g}")

    inner = np.unique(mesh.inner_edges)
    rel = mesh.nodes[inner] - mesh.center
    theta = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2.0 * np.pi)
    order = np.argsort(theta, kind="stable")
    inner, rel, theta = inner[order], rel[order], theta[order]

    reactions = (system.K @ pair.u)[inner]
    weights = lumped_edge_mass(mesh.nodes, mesh.inner_edges)[inner]
    flux = reactions / weights
    return FluxTrace(
        nodes=inner,
        theta=theta,
        flux=flux,
        grad=np.abs(flux),
        weights=weights,
        normals=-rel / mesh.radius,
        reactions=reactions,
        center=np.array(mesh.center, dtype=float),
        radius=float(mesh.radius),
    )


def flux_balance(system: SteklovSystem, pair: EigenPair, trace: FluxTrace) -> float:
    """Net flux: sum of hole reactions + sigma * int_{outer} u; zero for an exact eigenpair."""
    return float(trace.reactions.sum() + pair.sigma * (system.M_out @ pair.u).sum())
