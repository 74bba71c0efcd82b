"""
Boundary-fitted triangulations of the annulus Omega(t).

Nodes sit on rays anchored at the hole center c = t*w. Ray j has angle
theta_j = 2*pi*j / n_theta, leaves the hole at c + r*e_j and exits the outer
domain at c + lambda_j*e_j. Ring k places its node at the radial fraction
k / n_radial between those two points, so ring 0 is the hole circle and ring
n_radial is the outer boundary. Every quad cell is split into two triangles.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from console import vprint
from geometry.domain import DENSE_SAMPLES, AnnulusProblem, BadParameter, DegenerateGeometry

MIN_QUALITY = 0.01
MIN_ANGULAR = 16
MAX_REFINE = 8
INNER = "INNER"
OUTER = "OUTER"


@dataclass(frozen=True)
class MeshLayout:
    n_theta: int
    n_radial: int

    def __post_init__(self):
        if self.n_theta < MIN_ANGULAR or self.n_theta % 2:
            raise BadParameter(f"n_theta must be even and >= {MIN_ANGULAR}, got {self.n_theta}")
        if self.n_radial < 1:
            raise BadParameter(f"n_radial must be >= 1, got {self.n_radial}")

    @property
    def n_nodes(self) -> int:
        return self.n_theta * (self.n_radial + 1)

    @property
    def n_triangles(self) -> int:
        return 2 * self.n_theta * self.n_radial


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (T, 3), counter-clockwise
    inner_edges: np.ndarray  # (I, 2), on the hole circle
    outer_edges: np.ndarray  # (O, 2), on the outer boundary
    resolution: float
    center: np.ndarray
    radius: float
    layout: MeshLayout | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def edge_lengths(self) -> np.ndarray:
        """(T, 3) side lengths of every triangle, split diagonals included."""
        return triangle_edge_lengths(self.nodes, self.triangles)

    def max_edge_length(self) -> float:
        return float(self.edge_lengths().max())

    def quality(self) -> np.ndarray:
        return triangle_quality(self.nodes, self.triangles)

    @property
    def min_quality(self) -> float:
        return float(self.quality().min())

    def inner_nodes(self) -> np.ndarray:
        return np.unique(self.inner_edges)

    def outer_nodes(self) -> np.ndarray:
        return np.unique(self.outer_edges)

    def inner_residual(self) -> float:
        """Largest relative deviation of INNER nodes from the hole circle."""
        if len(self.inner_edges) == 0:
            return 0.0
        d = np.linalg.norm(self.nodes[self.inner_nodes()] - self.center, axis=1)
        return float(np.abs(d / self.radius - 1.0).max())

    def outer_residual(self, outer) -> float:
        """Largest relative deviation of OUTER nodes from the outer curve."""
        return float(np.abs(outer.boundary_residual(self.nodes[self.outer_nodes()])).max())


def triangle_edge_lengths(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = nodes[triangles]
    return np.linalg.norm(p[:, [1, 2, 0]] - p, axis=2)


def triangle_quality(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """2 * inradius / circumradius per triangle; 1 for equilateral, 0 for degenerate."""
    p = nodes[triangles]
    a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    b = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return 16.0 * area**2 / ((a + b + c) * a * b * c)


def _angles(n_theta: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_theta) / n_theta


def _even_ceil(x: float) -> int:
    return 2 * math.ceil(x / 2.0 - 1e-9)


def _grid_nodes(problem: AnnulusProblem, layout: MeshLayout) -> np.ndarray:
    r = problem.hole.r
    center = problem.center
    theta = _angles(layout.n_theta)
    rays = np.column_stack([np.cos(theta), np.sin(theta)])
    lam = problem.outer.ray_exit(center, theta)
    if np.any(lam <= r):
        raise DegenerateGeometry(f"hole at t={problem.hole.t} touches the outer boundary")

    s = np.arange(layout.n_radial + 1) / layout.n_radial
    dist = r + s[:, None] * (lam - r)[None, :]  # (rings, rays)
    nodes = (center + dist[:, :, None] * rays[None, :, :]).reshape(-1, 2)
    # exact placement on both boundary curves
    nodes[: layout.n_theta] = center + r * rays
    nodes[-layout.n_theta :] = center + lam[:, None] * rays
    return nodes


def layout_for(problem: AnnulusProblem, h: float) -> MeshLayout:
    """
    Smallest ray/ring counts keeping every triangle edge no longer than h.

    Both quad sides start at h / sqrt(2), which bounds the split diagonal on
    near-rectangular cells. Skewed cells off center can still overshoot, so
    the grid is measured and refined by the overshoot ratio until it fits.
    """
    if not h > 0:
        raise BadParameter(f"mesh size h must be positive, got {h}")
    side = h / math.sqrt(2.0)
    r = problem.hole.r
    center = problem.center
    theta = _angles(DENSE_SAMPLES)
    lam = problem.outer.ray_exit(center, theta)
    n_radial = max(1, math.ceil(float((lam - r).max()) / side - 1e-9))

    # chord speed of the outer curve as seen from the hole center
    pts = center + lam[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    chords = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    speed = max(float(chords.max()) / (2.0 * np.pi / DENSE_SAMPLES), r)
    n_theta = max(MIN_ANGULAR, _even_ceil(2.0 * np.pi * speed / side))
    layout = MeshLayout(n_theta=n_theta, n_radial=n_radial)

    for _ in range(MAX_REFINE):
        triangles, _, _ = _grid_connectivity(layout.n_theta, layout.n_radial)
        longest = float(triangle_edge_lengths(_grid_nodes(problem, layout), triangles).max())
        if longest <= h * (1.0 + 1e-12):
            return layout
        ratio = longest / h
        layout = MeshLayout(
            n_theta=_even_ceil(layout.n_theta * ratio) + 2,
            n_radial=math.ceil(layout.n_radial * ratio),
        )
    raise DegenerateGeometry(f"no ray/ring layout brings the longest edge under h={h} at t={problem.hole.t}")


def _grid_connectivity(n_theta: int, n_radial: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k, j = np.meshgrid(np.arange(n_radial), np.arange(n_theta), indexing="ij")
    k, j = k.ravel(), j.ravel()
    jn = (j + 1) % n_theta
    a = k * n_theta + j
    b = k * n_theta + jn
    c = (k + 1) * n_theta + jn
    d = (k + 1) * n_theta + j
    triangles = np.concatenate([np.column_stack([a, d, c]), np.column_stack([a, c, b])])

    ring = np.arange(n_theta)
    inner_edges = np.column_stack([ring, (ring + 1) % n_theta])
    outer_edges = inner_edges + n_radial * n_theta
    return triangles, inner_edges, outer_edges


def build_mesh(
    problem: AnnulusProblem,
    h: float,
    layout: MeshLayout | None = None,
    min_quality: float = MIN_QUALITY,
) -> Mesh:
    """
    Triangulate Omega(t). Without a layout every edge is at most h; a shared
    layout (finite-difference stencils) keeps the counts sized at a nearby
    offset, so h is nominal there.
    """
    if not h > 0:
        raise BadParameter(f"mesh size h must be positive, got {h}")
    layout = layout or layout_for(problem, h)
    nodes = _grid_nodes(problem, layout)

    triangles, inner_edges, outer_edges = _grid_connectivity(layout.n_theta, layout.n_radial)
    mesh = Mesh(
        nodes=nodes,
        triangles=triangles,
        inner_edges=inner_edges,
        outer_edges=outer_edges,
        resolution=float(h),
        center=np.array(problem.center, dtype=float),
        radius=float(problem.hole.r),
        layout=layout,
    )

    areas = mesh.signed_areas()
    if areas.min() <= 0.0:
        raise DegenerateGeometry(
            f"mapping folds at t={problem.hole.t}: {int((areas <= 0).sum())} non-positive triangles"
        )
    q = mesh.min_quality
    if q < min_quality:
        raise DegenerateGeometry(
            f"gap at t={problem.hole.t} unresolved by h={h}: min triangle quality {q:.3g} < {min_quality}"
        )
    vprint(
        f"[dim]mesh t={problem.hole.t:.6g} h={h:g} rays={layout.n_theta} rings={layout.n_radial} "
        f"triangles={len(triangles)} min_quality={q:.3f} longest_edge={mesh.max_edge_length():.4g}[/dim]"
    )
    return mesh


def build_disk_mesh(radius: float, h: float) -> Mesh:
    """Polar fan mesh of the disk of given radius; all boundary edges are OUTER."""
    if not radius > 0 or not h > 0:
        raise BadParameter(f"disk mesh needs radius > 0 and h > 0, got {radius}, {h}")
    side = h / math.sqrt(2.0)
    n_radial = max(1, math.ceil(radius / side - 1e-9))
    n_theta = max(MIN_ANGULAR, _even_ceil(2.0 * np.pi * radius / side))
    theta = _angles(n_theta)
    rays = np.column_stack([np.cos(theta), np.sin(theta)])
    rings = radius * np.arange(1, n_radial + 1) / n_radial
    nodes = np.vstack([np.zeros((1, 2)), (rings[:, None, None] * rays[None, :, :]).reshape(-1, 2)])

    j = np.arange(n_theta)
    jn = (j + 1) % n_theta
    fan = np.column_stack([np.zeros(n_theta, dtype=int), 1 + j, 1 + jn])
    # ring k of the annular grid maps to node offset 1 + k * n_theta
    cells, _, outer_edges = _grid_connectivity(n_theta, n_radial - 1)
    triangles = np.concatenate([fan, cells + 1]) if n_radial > 1 else fan
    if n_radial == 1:
        outer_edges = np.column_stack([j, jn])
    outer_edges = outer_edges + 1
    nodes[-n_theta:] = radius * rays
    return Mesh(
        nodes=nodes,
        triangles=triangles,
        inner_edges=np.empty((0, 2), dtype=int),
        outer_edges=outer_edges,
        resolution=float(h),
        center=np.zeros(2),
        radius=float(radius),
    )


def _sorted_edges(edges: np.ndarray) -> np.ndarray:
    return np.sort(np.asarray(edges, dtype=np.int64).reshape(-1, 2), axis=1)


def conformity_audit(mesh: Mesh) -> dict:
    """
    Edge-to-triangle incidence check. Interior edges must be shared by exactly
    two triangles, boundary edges by one, and the boundary edges must be
    exactly the tagged INNER and OUTER edges.
    """
    t = mesh.triangles
    edges = _sorted_edges(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]))
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    if counts.max() > 2:
        raise DegenerateGeometry(f"{int((counts > 2).sum())} edges shared by more than two triangles")
    boundary = uniq[counts == 1]
    tagged = np.unique(_sorted_edges(np.concatenate([mesh.inner_edges, mesh.outer_edges])), axis=0)
    if boundary.shape != tagged.shape or not np.array_equal(boundary, tagged):
        raise DegenerateGeometry("boundary edges do not match the tagged INNER/OUTER edges")
    used = np.zeros(mesh.n_nodes, dtype=bool)
    used[t.ravel()] = True
    if not used.all():
        raise DegenerateGeometry(f"{int((~used).sum())} nodes belong to no triangle")
    return {
        "interior_edges": int((counts == 2).sum()),
        "boundary_edges": int(len(boundary)),
        "inner_edges": int(len(mesh.inner_edges)),
        "outer_edges": int(len(mesh.outer_edges)),
    }


def mirror_indices(mesh: Mesh, rtol: float = 1e-10) -> np.ndarray:
    """Index map m with nodes[m[i]] == -nodes[i]; raises if the node set is not centrally symmetric."""
    tree = cKDTree(mesh.nodes)
    dist, idx = tree.query(-mesh.nodes)
    scale = float(np.abs(mesh.nodes).max())
    if dist.max() > rtol * scale:
        raise DegenerateGeometry(f"node set is not symmetric under x -> -x (gap {dist.max():.3g})")
    return idx


def format_mesh(mesh: Mesh) -> str:
    lines = [
        f"nodes {mesh.n_nodes} triangles {len(mesh.triangles)} "
        f"inner_edges {len(mesh.inner_edges)} outer_edges {len(mesh.outer_edges)}"
    ]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.nodes]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    lines += [f"{i} {j} {INNER}" for i, j in mesh.inner_edges]
    lines += [f"{i} {j} {OUTER}" for i, j in mesh.outer_edges]
    return "\n".join(lines) + "\n"


def export_mesh(mesh: Mesh, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_mesh(mesh))
    return path


def read_mesh(path: str | Path) -> Mesh:
    """Inverse of export_mesh, for round-tripping stored meshes."""
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    n, t, i, o = (int(head[k]) for k in (1, 3, 5, 7))
    nodes = np.array([[float(v) for v in ln.split()] for ln in lines[1 : 1 + n]])
    tris = np.array([[int(v) for v in ln.split()] for ln in lines[1 + n : 1 + n + t]], dtype=int)
    edges = [ln.split() for ln in lines[1 + n + t : 1 + n + t + i + o]]
    inner = np.array([[int(a), int(b)] for a, b, tag in edges if tag == INNER], dtype=int).reshape(-1, 2)
    outer = np.array([[int(a), int(b)] for a, b, tag in edges if tag == OUTER], dtype=int).reshape(-1, 2)
    lengths = triangle_edge_lengths(nodes, tris)
    if len(inner):
        ring = nodes[np.unique(inner)]
        center = ring.mean(axis=0)
        radius = float(np.linalg.norm(ring - center, axis=1).mean())
    else:
        center, radius = np.zeros(2), float(np.linalg.norm(nodes, axis=1).max())
    return Mesh(
        nodes=nodes,
        triangles=tris,
        inner_edges=inner,
        outer_edges=outer,
        resolution=float(lengths.max()),
        center=center,
        radius=radius,
    )
