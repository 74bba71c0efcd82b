import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from eig.solver import NotConverged, solve_smallest
from fem.assembly import EmptyBoundary, assemble, boundary_mass, export_matrix, stiffness_matrix
from fem.flux import flux_balance, lumped_edge_mass, recover_inner_flux
from geometry.domain import make_outer_domain, make_problem
from geometry.mesh import build_disk_mesh, build_mesh


@pytest.fixture(scope="module")
def concentric_mesh():
    problem = make_problem(make_outer_domain({"kind": "disk", "R": 2.0}), 1.0, (1.0, 0.0))
    return build_mesh(problem, 0.1)


@pytest.fixture(scope="module")
def concentric_solved(concentric_mesh):
    system = assemble(concentric_mesh)
    pair = solve_smallest(system)
    return concentric_mesh, system, pair


class TestElementMatrices:
    def test_unit_right_triangle(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        K = stiffness_matrix(nodes, np.array([[0, 1, 2]])).toarray()
        expected = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
        assert_allclose(K, expected, atol=1e-15)

    def test_edge_mass(self):
        nodes = np.array([[0.0, 0.0], [3.0, 4.0]])
        M = boundary_mass(nodes, np.array([[0, 1]])).toarray()
        L = 5.0
        assert_allclose(M, [[L / 3, L / 6], [L / 6, L / 3]], rtol=1e-15)


class TestAssemble:
    def test_symmetry_and_kernel(self, concentric_mesh):
        system = assemble(concentric_mesh)
        assert (system.K - system.K.T).count_nonzero() == 0
        assert (system.M_out - system.M_out.T).count_nonzero() == 0
        assert np.abs(system.K @ np.ones(system.n)).max() < 1e-10

    def test_mass_support_is_outer(self, concentric_mesh):
        system = assemble(concentric_mesh)
        rows, cols = system.M_out.nonzero()
        outer = set(np.unique(concentric_mesh.outer_edges).tolist())
        assert set(rows.tolist()) <= outer
        assert set(cols.tolist()) <= outer
        # total mass is the polygon perimeter
        assert_allclose(system.M_out.sum(), 4 * 178 * math.sin(math.pi / 178), rtol=1e-12)

    def test_dirichlet_partition(self, concentric_mesh):
        system = assemble(concentric_mesh)
        assert_allclose(np.sort(system.dirichlet_nodes), np.arange(178))
        assert len(system.free_nodes) + len(system.dirichlet_nodes) == system.n

    def test_empty_boundary(self):
        with pytest.raises(EmptyBoundary):
            assemble(build_disk_mesh(1.0, 0.25))

    def test_matrix_export(self, tmp_path):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        K = stiffness_matrix(nodes, np.array([[0, 1, 2]]))
        lines = export_matrix(K, tmp_path / "K.txt").read_text().splitlines()
        assert lines[0] == "symmetric 3"
        entries = {(int(i), int(j)): float(v) for i, j, v in (ln.split() for ln in lines[1:])}
        assert all(i <= j for i, j in entries)
        assert entries[(0, 0)] == 1.0
        assert entries[(0, 1)] == -0.5


class TestFlux:
    def test_concentric_flux_is_constant(self, concentric_solved):
        mesh, system, pair = concentric_solved
        trace = recover_inner_flux(mesh, system, pair)
        assert trace.sign_constant()
        assert np.all(trace.flux < 0)
        assert_allclose(trace.grad, np.abs(trace.flux))
        spread = (trace.grad.max() - trace.grad.min()) / trace.grad.mean()
        assert spread < 1e-8
        # |grad u| = c / r with c^2 = 1 / (2 pi R log(R/r)^2)
        c = math.sqrt(1.0 / (2 * math.pi * 2.0 * math.log(2.0) ** 2))
        assert_allclose(trace.grad.mean(), c, rtol=0.02)

    def test_total_balance(self, concentric_solved):
        mesh, system, pair = concentric_solved
        trace = recover_inner_flux(mesh, system, pair)
        assert abs(flux_balance(system, pair, trace)) < 1e-8 * pair.sigma

    def test_ordered_by_angle(self, concentric_solved):
        mesh, system, pair = concentric_solved
        trace = recover_inner_flux(mesh, system, pair)
        assert np.all(np.diff(trace.theta) > 0)
        assert_allclose(trace.weights.sum(), 2 * 178 * math.sin(math.pi / 178), rtol=1e-12)
        assert_allclose(np.linalg.norm(trace.normals, axis=1), 1.0)

    def test_eccentric_sign_constant(self):
        problem = make_problem(make_outer_domain({"kind": "disk", "R": 2.0}), 0.5, (1.0, 0.0), t=0.5)
        mesh = build_mesh(problem, 0.1)
        system = assemble(mesh)
        trace = recover_inner_flux(mesh, system, solve_smallest(system))
        assert trace.sign_constant()

    def test_rejects_unconverged_pair(self, concentric_solved):
        mesh, system, pair = concentric_solved
        loose = type(pair)(sigma=pair.sigma, u=pair.u, residual=1e-3, iterations=pair.iterations)
        with pytest.raises(NotConverged):
            recover_inner_flux(mesh, system, loose)

    def test_manufactured_log_flux(self):
        """Reactions of the interpolated log(|x - c| / r) approach its exact normal derivative -1/r."""
        problem = make_problem(make_outer_domain({"kind": "disk", "R": 2.0}), 0.5, (1.0, 0.0))
        errors = []
        for h in (0.1, 0.05):
            mesh = build_mesh(problem, h)
            system = assemble(mesh)
            v = np.log(np.linalg.norm(mesh.nodes - mesh.center, axis=1) / 0.5)
            inner = np.unique(mesh.inner_edges)
            flux = (system.K @ v)[inner] / lumped_edge_mass(mesh.nodes, mesh.inner_edges)[inner]
            errors.append(np.abs(flux + 1.0 / 0.5).max() / 2.0)
        assert errors[1] < errors[0]
        assert errors[1] < 0.05
