"""
P1 assembly of the Steklov-Dirichlet pencil.

K      stiffness over all nodes, K_ij = int grad(phi_i) . grad(phi_j)
M_out  mass of the outer boundary trace, assembled edge by edge
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from geometry.mesh import Mesh


class FemError(ValueError):
    pass


class EmptyBoundary(FemError):
    pass


def local_stiffness(points: np.ndarray) -> np.ndarray:
    """
    Element stiffness for a batch of triangles, points shaped (T, 3, 2).

    With e_i the edge opposite vertex i, K_ij = (e_i . e_j) / (4 * area).
    """
    e = np.stack(
        [
            points[:, 2] - points[:, 1],
            points[:, 0] - points[:, 2],
            points[:, 1] - points[:, 0],
        ],
        axis=1,
    )
    area = 0.5 * (e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0]))
    return np.einsum("tik,tjk->tij", e, e) / (4.0 * area)[:, None, None]


def stiffness_matrix(nodes: np.ndarray, triangles: np.ndarray) -> sp.csr_matrix:
    n = len(nodes)
    ke = local_stiffness(nodes[triangles])
    rows = np.repeat(triangles, 3, axis=1).ravel()
    cols = np.tile(triangles, (1, 3)).ravel()
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K = ((K + K.T) * 0.5).tocsr()
    K.sum_duplicates()
    K.sort_indices()
    return K


def boundary_mass(nodes: np.ndarray, edges: np.ndarray) -> sp.csr_matrix:
    """Exact 1D mass of linear hats over the given boundary edges: L/6 * [[2, 1], [1, 2]]."""
    n = len(nodes)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    length = np.linalg.norm(nodes[edges[:, 1]] - nodes[edges[:, 0]], axis=1)
    local = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    vals = length[:, None, None] * local[None, :, :]
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    M = sp.coo_matrix((vals.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    M.sort_indices()
    return M


@dataclass(frozen=True, eq=False)
class SteklovSystem:
    K: sp.csr_matrix
    M_out: sp.csr_matrix
    dirichlet_nodes: np.ndarray
    free_nodes: np.ndarray

    @property
    def n(self) -> int:
        return self.K.shape[0]

    def reduced(self) -> tuple[sp.csc_matrix, sp.csc_matrix]:
        f = self.free_nodes
        return self.K[f][:, f].tocsc(), self.M_out[f][:, f].tocsc()

    def extend(self, values_free: np.ndarray) -> np.ndarray:
        """Nodal vector over all nodes, zero on the Dirichlet nodes."""
        u = np.zeros(self.n)
        u[self.free_nodes] = values_free
        return u


def assemble(mesh: Mesh) -> SteklovSystem:
    if len(mesh.inner_edges) == 0:
        raise EmptyBoundary("mesh has no INNER edges; the Dirichlet hole is missing")
    if len(mesh.outer_edges) == 0:
        raise EmptyBoundary("mesh has no OUTER edges; the Steklov boundary is missing")

    K = stiffness_matrix(mesh.nodes, mesh.triangles)
    M = boundary_mass(mesh.nodes, mesh.outer_edges)
    dirichlet = np.unique(mesh.inner_edges)
    free = np.setdiff1d(np.arange(mesh.n_nodes), dirichlet)
    return SteklovSystem(K=K, M_out=M, dirichlet_nodes=dirichlet, free_nodes=free)


def format_matrix(A: sp.spmatrix) -> str:
    """Coordinate text, symmetric entries stored once (i <= j)."""
    upper = sp.triu(A, format="coo")
    order = np.lexsort((upper.col, upper.row))
    lines = [f"symmetric {A.shape[0]}"]
    lines += [f"{upper.row[k]} {upper.col[k]} {upper.data[k]:.17g}" for k in order]
    return "\n".join(lines) + "\n"


def export_matrix(A: sp.spmatrix, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_matrix(A))
    return path
