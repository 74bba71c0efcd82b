"""
Eulerian derivative u' of the eigenfunction with respect to the hole offset.

    Laplace u' = 0                       in Omega(t)
    du'/dnu = sigma' u + sigma u'       on the outer boundary
    u' = |grad u| <nu, w>               on the hole

K - sigma M_out is singular on the free nodes with null vector u, so the system
is bordered with the constraint int_{outer} u' u = 0.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from console import vprint
from eig.solver import EigenPair
from fem.assembly import SteklovSystem
from fem.flux import FluxTrace, recover_inner_flux
from geometry.mesh import Mesh
from shape.trace import IncompatibleData

COMPATIBILITY_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class DerivativeField:
    u_prime: np.ndarray  # all nodes
    compatibility: float  # |u_F . rhs|, zero when sigma' is consistent
    boundary_energy: float  # int_{hole} u' du'/dnu
    orthogonality: float  # int_{outer} u' u
    multiplier: float


def solve_derivative_bvp(
    mesh: Mesh,
    system: SteklovSystem,
    pair: EigenPair,
    sigma_prime: float,
    w,
    flux: FluxTrace | None = None,
    compatibility_tol: float = COMPATIBILITY_TOL,
) -> DerivativeField:
    flux = flux or recover_inner_flux(mesh, system, pair)
    free, fixed = system.free_nodes, flux.nodes
    sigma = pair.sigma

    g = flux.grad * flux.w_dot_nu(w)
    A = (system.K - sigma * system.M_out).tocsr()
    mu = system.M_out @ pair.u
    c = mu[free]
    rhs = sigma_prime * c - A[free][:, fixed] @ g

    compatibility = abs(float(pair.u[free] @ rhs))
    if compatibility > compatibility_tol:
        raise IncompatibleData(
            f"derivative problem is not solvable: compatibility residual {compatibility:.3g} "
            f"exceeds {compatibility_tol:.1g} (sigma'={sigma_prime:.6g})"
        )

    col = sp.csc_matrix(c.reshape(-1, 1))
    bordered = sp.bmat([[A[free][:, free], col], [col.T, None]], format="csc")
    sol = splu(bordered).solve(np.append(rhs, 0.0))
    x, multiplier = sol[:-1], float(sol[-1])
    x = x - float(c @ x) * pair.u[free]

    u_prime = np.zeros(system.n)
    u_prime[free] = x
    u_prime[fixed] = g
    reactions = (system.K @ u_prime)[fixed]
    boundary_energy = float(g @ reactions)
    orthogonality = float(u_prime @ mu)
    vprint(
        f"[dim]derivative bvp: compatibility={compatibility:.2e} multiplier={multiplier:.2e} "
        f"orthogonality={orthogonality:.2e}[/dim]"
    )
    return DerivativeField(
        u_prime=u_prime,
        compatibility=compatibility,
        boundary_energy=boundary_energy,
        orthogonality=orthogonality,
        multiplier=multiplier,
    )
