import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from geometry.domain import (
    AsymmetricProfile,
    BadParameter,
    DegenerateGeometry,
    HoleTooLarge,
    NonPositiveRadius,
    admissible_range,
    boundary_distance,
    make_outer_domain,
    make_problem,
    sampled_boundary_distance,
)
from geometry.mesh import (
    MeshLayout,
    build_disk_mesh,
    build_mesh,
    conformity_audit,
    export_mesh,
    layout_for,
    mirror_indices,
    read_mesh,
)

DISK = {"kind": "disk", "R": 2.0}
ELLIPSE = {"kind": "ellipse", "a": 2.0, "b": 1.0}
PROFILE = {"kind": "radial-profile", "base": 1.0, "cos": {"2": 0.2}}


class TestOuterDomain:
    def test_disk_is_constant(self):
        outer = make_outer_domain(DISK)
        theta = np.linspace(0, 2 * np.pi, 37)
        assert_allclose(outer.rho(theta), 2.0)

    def test_ellipse_polar_form(self):
        outer = make_outer_domain(ELLIPSE)
        assert_allclose(outer.rho(0.0), 2.0, rtol=1e-15)
        assert_allclose(outer.rho(np.pi / 2), 1.0, rtol=1e-15)

    def test_profile_even_harmonic(self):
        outer = make_outer_domain(PROFILE)
        assert_allclose(outer.rho(0.0), 1.2, rtol=1e-15)
        assert_allclose(outer.rho(np.pi / 2), 0.8, rtol=1e-14)

    def test_odd_harmonic_rejected(self):
        with pytest.raises(AsymmetricProfile):
            make_outer_domain({"kind": "radial-profile", "base": 1.0, "cos": {"3": 0.1}})
        with pytest.raises(AsymmetricProfile):
            make_outer_domain({"kind": "radial-profile", "base": 1.0, "sin": {"1": 0.1}})

    def test_non_positive_profile(self):
        with pytest.raises(NonPositiveRadius):
            make_outer_domain({"kind": "radial-profile", "base": 0.3, "cos": {"2": 0.5}})

    @pytest.mark.parametrize(
        "spec",
        [
            {"kind": "disk", "R": 0.0},
            {"kind": "disk", "R": -1.0},
            {"kind": "ellipse", "a": 1.0, "b": 2.0},
            {"kind": "ellipse", "a": 1.0, "b": 0.0},
            {"kind": "square", "side": 1.0},
        ],
    )
    def test_bad_parameters(self, spec):
        with pytest.raises(BadParameter):
            make_outer_domain(spec)

    @pytest.mark.parametrize("spec", [DISK, ELLIPSE, PROFILE])
    def test_central_symmetry(self, spec):
        outer = make_outer_domain(spec)
        theta = np.linspace(0, 2 * np.pi, 101)
        assert_allclose(outer.rho(theta + np.pi), outer.rho(theta), rtol=1e-13)

    @pytest.mark.parametrize("spec", [DISK, ELLIPSE, PROFILE])
    def test_ray_exit_lands_on_boundary(self, spec):
        outer = make_outer_domain(spec)
        center = np.array([0.1, -0.05])
        theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        lam = outer.ray_exit(center, theta)
        pts = center + lam[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
        assert np.abs(outer.boundary_residual(pts)).max() < 1e-12


class TestAdmissibleRange:
    @pytest.mark.parametrize("w", [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-0.3, 0.7)])
    def test_disk_clearance(self, w):
        outer = make_outer_domain(DISK)
        assert_allclose(admissible_range(outer, 0.5, w), 1.5, atol=1e-10)

    @pytest.mark.parametrize(
        "r, w, expected",
        [(0.25, (1.0, 0.0), 1.75), (0.3, (1.0, 0.0), 1.7), (0.3, (0.0, 1.0), 0.7)],
    )
    def test_ellipse_axes(self, r, w, expected):
        outer = make_outer_domain(ELLIPSE)
        assert_allclose(admissible_range(outer, r, w), expected, atol=1e-9)

    def test_matches_dense_sampling(self):
        outer = make_outer_domain(ELLIPSE)
        bisected = admissible_range(outer, 0.25, (1.0, 0.0))
        brute = admissible_range(outer, 0.25, (1.0, 0.0), distance=sampled_boundary_distance)
        assert_allclose(bisected, brute, atol=1e-8)

    def test_distance_refinement_beats_sampling(self):
        outer = make_outer_domain(ELLIPSE)
        point = (0.4, 0.3)
        assert boundary_distance(outer, point) <= sampled_boundary_distance(outer, point) + 1e-12

    def test_hole_too_large(self):
        outer = make_outer_domain(ELLIPSE)
        with pytest.raises(HoleTooLarge):
            admissible_range(outer, 1.01, (1.0, 0.0))

    def test_monotone_in_radius(self):
        outer = make_outer_domain(ELLIPSE)
        w = (1.0, 1.0)
        t_max = [admissible_range(outer, r, w) for r in (0.1, 0.2, 0.3, 0.5, 0.8)]
        assert all(b < a for a, b in zip(t_max, t_max[1:]))

    def test_offset_outside_range(self):
        problem = make_problem(make_outer_domain(DISK), 0.5, (1.0, 0.0))
        with pytest.raises(BadParameter):
            problem.at(1.5)
        with pytest.raises(BadParameter):
            problem.at(-0.1)

    def test_direction_normalized(self):
        problem = make_problem(make_outer_domain(DISK), 0.5, (3.0, 4.0), t=1.0)
        assert_allclose(problem.hole.w, (0.6, 0.8))
        assert_allclose(problem.center, (0.6, 0.8))


@pytest.fixture(scope="module")
def concentric():
    return make_problem(make_outer_domain(DISK), 1.0, (1.0, 0.0))


class TestBuildMesh:
    def test_concentric_invariants(self, concentric):
        mesh = build_mesh(concentric, 0.1)
        audit = conformity_audit(mesh)
        assert audit["boundary_edges"] == len(mesh.inner_edges) + len(mesh.outer_edges)
        assert mesh.signed_areas().min() > 0
        assert mesh.inner_residual() < 1e-12
        assert mesh.outer_residual(concentric.outer) < 1e-12
        mirror = mirror_indices(mesh)
        assert_allclose(mesh.nodes[mirror], -mesh.nodes, atol=1e-12)

    def test_layout_counts(self, concentric):
        assert layout_for(concentric, 0.1) == MeshLayout(n_theta=178, n_radial=15)
        assert layout_for(concentric, 0.05) == MeshLayout(n_theta=356, n_radial=29)
        mesh = build_mesh(concentric, 0.1)
        assert mesh.n_nodes == mesh.layout.n_nodes == 178 * 16
        assert len(mesh.triangles) == mesh.layout.n_triangles

    def test_quad_sides_within_h(self, concentric):
        h = 0.1
        mesh = build_mesh(concentric, h)
        n = mesh.layout.n_theta
        for edges in (mesh.inner_edges, mesh.outer_edges):
            lengths = np.linalg.norm(mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]], axis=1)
            assert lengths.max() <= h
        radial = np.linalg.norm(mesh.nodes[n:] - mesh.nodes[:-n], axis=1)
        assert radial.max() <= h + 1e-12

    @pytest.mark.parametrize(
        "spec, r, w, t",
        [
            (DISK, 1.0, (1.0, 0.0), 0.0),
            (DISK, 1.0, (1.0, 0.0), 0.9),
            (DISK, 0.5, (1.0, 1.0), 1.2),
            (ELLIPSE, 0.3, (1.0, 0.0), 1.2),
            (ELLIPSE, 0.3, (0.0, 1.0), 0.5),
            (PROFILE, 0.3, (1.0, 0.0), 0.2),
        ],
    )
    @pytest.mark.parametrize("h", [0.1, 0.05])
    def test_every_edge_within_h(self, spec, r, w, t, h):
        mesh = build_mesh(make_problem(make_outer_domain(spec), r, w, t=t), h)
        lengths = mesh.edge_lengths()
        assert lengths.shape == (len(mesh.triangles), 3)
        assert lengths.max() <= h * (1.0 + 1e-12)
        assert mesh.max_edge_length() == lengths.max()

    def test_split_diagonal_within_h(self, concentric):
        h = 0.1
        mesh = build_mesh(concentric, h)
        n = mesh.layout.n_theta
        ring = np.arange(n * mesh.layout.n_radial)
        diagonal = (ring // n + 1) * n + (ring + 1) % n
        lengths = np.linalg.norm(mesh.nodes[diagonal] - mesh.nodes[ring], axis=1)
        assert lengths.max() <= h
        assert lengths.max() > h / 2

    def test_refinement_quadruples(self, concentric):
        coarse = build_mesh(concentric, 0.1)
        fine = build_mesh(concentric, 0.05)
        assert len(fine.triangles) >= 4 * len(coarse.triangles)
        assert fine.inner_residual() < 1e-12
        assert fine.outer_residual(concentric.outer) < 1e-12

    def test_eccentric_quality(self, concentric):
        assert_allclose(concentric.t_max, 1.0)
        mesh = build_mesh(concentric.at(0.9), 0.1)
        conformity_audit(mesh)
        assert mesh.signed_areas().min() > 0
        assert mesh.min_quality > 0.2

    def test_thin_gap_is_degenerate(self, concentric):
        with pytest.raises(DegenerateGeometry):
            build_mesh(concentric.at(0.999 * concentric.t_max), 0.5)

    def test_non_positive_h(self, concentric):
        with pytest.raises(BadParameter):
            build_mesh(concentric, 0.0)

    @pytest.mark.parametrize("spec, r", [(ELLIPSE, 0.3), (PROFILE, 0.3)])
    def test_curved_outer_boundary(self, spec, r):
        problem = make_problem(make_outer_domain(spec), r, (1.0, 0.0))
        mesh = build_mesh(problem, 0.1)
        conformity_audit(mesh)
        assert mesh.outer_residual(problem.outer) < 1e-12
        assert mesh.inner_residual() < 1e-12
        mirror_indices(mesh)

    def test_layout_shared_across_offsets(self, concentric):
        layout = layout_for(concentric.at(0.5), 0.1)
        a = build_mesh(concentric.at(0.49), 0.1, layout=layout)
        b = build_mesh(concentric.at(0.51), 0.1, layout=layout)
        assert a.nodes.shape == b.nodes.shape
        assert np.array_equal(a.triangles, b.triangles)

    def test_bad_layout(self):
        with pytest.raises(BadParameter):
            MeshLayout(n_theta=17, n_radial=3)


class TestDiskMesh:
    def test_conforming(self):
        mesh = build_disk_mesh(1.0, 0.1)
        conformity_audit(mesh)
        assert mesh.signed_areas().min() > 0
        rim = mesh.nodes[np.unique(mesh.outer_edges)]
        assert_allclose(np.hypot(rim[:, 0], rim[:, 1]), 1.0, rtol=1e-14)
        area = mesh.signed_areas().sum()
        assert area < math.pi
        assert area > 0.99 * math.pi
        assert mesh.max_edge_length() <= 0.1 * (1.0 + 1e-12)


class TestExport:
    def test_text_format(self, concentric, tmp_path):
        mesh = build_mesh(concentric, 0.2)
        path = export_mesh(mesh, tmp_path / "mesh.txt")
        lines = path.read_text().splitlines()
        assert lines[0] == (
            f"nodes {mesh.n_nodes} triangles {len(mesh.triangles)} "
            f"inner_edges {len(mesh.inner_edges)} outer_edges {len(mesh.outer_edges)}"
        )
        assert lines[-1].endswith("OUTER")
        back = read_mesh(path)
        assert np.array_equal(back.nodes, mesh.nodes)
        assert np.array_equal(back.triangles, mesh.triangles)
        assert np.array_equal(back.inner_edges, mesh.inner_edges)
        assert back.resolution == mesh.max_edge_length()
