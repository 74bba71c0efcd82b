"""
Dirichlet energy of the harmonic extension of circle data into the disk.

For g(theta) = a_0/2 + sum_n a_n cos(n theta) + b_n sin(n theta) the extension is
sum_n (rho/r)^n (a_n cos + b_n sin), and its energy is pi * sum_n n (a_n^2 + b_n^2),
independent of r.
"""

import numpy as np
from scipy.sparse.linalg import splu

from fem.assembly import stiffness_matrix
from geometry.mesh import build_disk_mesh
from shape.trace import CircleTrace


def quadrature_weights(theta: np.ndarray) -> np.ndarray:
    """Periodic trapezoid weights (theta[j+1] - theta[j-1]) / 2."""
    nxt = np.roll(theta, -1)
    nxt[-1] += 2.0 * np.pi
    prv = np.roll(theta, 1)
    prv[0] -= 2.0 * np.pi
    return 0.5 * (nxt - prv)


def fourier_coefficients(trace: CircleTrace, n_max: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid coefficients (a_n, b_n) for n = 0..n_max, n_max <= samples/2 - 1."""
    cutoff = len(trace) // 2 - 1
    n_max = cutoff if n_max is None else min(n_max, cutoff)
    w = quadrature_weights(trace.theta)
    n = np.arange(n_max + 1)[:, None]
    phase = n * trace.theta[None, :]
    a = (np.cos(phase) * (trace.values * w)).sum(axis=1) / np.pi
    b = (np.sin(phase) * (trace.values * w)).sum(axis=1) / np.pi
    b[0] = 0.0
    return a, b


def reconstruct(a: np.ndarray, b: np.ndarray, theta: np.ndarray) -> np.ndarray:
    n = np.arange(len(a))[:, None]
    phase = n * np.asarray(theta)[None, :]
    return 0.5 * a[0] + (a[1:, None] * np.cos(phase[1:])).sum(axis=0) + (b[1:, None] * np.sin(phase[1:])).sum(axis=0)


def harmonic_extension_energy(trace: CircleTrace) -> float:
    a, b = fourier_coefficients(trace)
    n = np.arange(len(a))
    return float(np.pi * np.sum(n * (a * a + b * b)))


def harmonic_extension_energy_fem(g, radius: float = 1.0, h: float = 0.01) -> float:
    """Energy of the discrete harmonic function on a disk mesh with nodal data g(theta) on the rim."""
    mesh = build_disk_mesh(radius, h)
    K = stiffness_matrix(mesh.nodes, mesh.triangles).tocsr()
    rim = np.unique(mesh.outer_edges)
    inside = np.setdiff1d(np.arange(mesh.n_nodes), rim)
    theta = np.arctan2(mesh.nodes[rim, 1], mesh.nodes[rim, 0])

    u = np.zeros(mesh.n_nodes)
    u[rim] = np.asarray(g(theta), dtype=float) * np.ones(len(rim))
    lu = splu(K[inside][:, inside].tocsc())
    u[inside] = lu.solve(-(K[inside][:, rim] @ u[rim]))
    return float(u @ (K @ u))
