import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from analytic.shell import (
    concentric_derivative_energy,
    concentric_reported_terms,
    concentric_second_derivative,
)
from eig.instance import solve_instance
from geometry.domain import make_outer_domain, make_problem
from geometry.mesh import mirror_indices
from shape.bvp import solve_derivative_bvp
from shape.derivatives import derivative_report, first_shape_derivative, second_shape_derivative
from shape.finite_difference import finite_difference_derivatives, finite_difference_eigenfunction
from shape.harmonic import (
    fourier_coefficients,
    harmonic_extension_energy,
    harmonic_extension_energy_fem,
    reconstruct,
)
from shape.trace import CircleTrace, IncompatibleData, StepTooLarge, TooFewSamples

R, r = 2.0, 0.5
E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])
ELLIPSE = {"kind": "ellipse", "a": 2.0, "b": 1.0}


def shell(t=0.0):
    return make_problem(make_outer_domain({"kind": "disk", "R": R}), r, E1, t=t)


def ellipse(t=0.0, w=E1):
    return make_problem(make_outer_domain(ELLIPSE), 0.3, w, t=t)


@pytest.fixture(scope="module")
def concentric():
    inst = solve_instance(shell(), 0.05)
    report, field = derivative_report(inst)
    return inst, report, field


@pytest.fixture(scope="module")
def eccentric():
    inst = solve_instance(shell(0.75), 0.05)
    report, field = derivative_report(inst)
    return inst, report, field


@pytest.fixture(scope="module")
def eccentric_fd(eccentric):
    inst, _, _ = eccentric
    return finite_difference_derivatives(
        inst.problem, 0.05, delta=1.5e-3, delta_second=7.5e-3, layout=inst.mesh.layout, workers=2
    )


@pytest.fixture(scope="module")
def ellipse_concentric():
    inst = solve_instance(ellipse(), 0.1)
    report, field = derivative_report(inst)
    return inst, report, field


class TestHarmonicExtension:
    @pytest.mark.parametrize(
        "g, expected",
        [
            (lambda th: 3.0 + 0.0 * th, 0.0),
            (np.cos, math.pi),
            (lambda th: 2.0 * np.sin(3 * th), 12.0 * math.pi),
            (lambda th: 1.0 + np.cos(th) - 0.5 * np.sin(2 * th), math.pi * (1.0 + 2 * 0.25)),
        ],
    )
    def test_closed_form(self, g, expected):
        trace = CircleTrace.sample(g, 64)
        assert_allclose(harmonic_extension_energy(trace), expected, atol=1e-8)

    def test_independent_of_radius(self):
        a = harmonic_extension_energy(CircleTrace.sample(np.cos, 64, radius=1.0))
        b = harmonic_extension_energy(CircleTrace.sample(np.cos, 64, radius=0.3))
        assert_allclose(a, b, rtol=1e-14)

    def test_fem_oracle(self):
        assert_allclose(harmonic_extension_energy_fem(np.cos, h=0.02), math.pi, rtol=3e-3)

    def test_reconstruct(self):
        def g(th):
            return 0.3 + np.cos(th) - 0.2 * np.sin(2 * th) + 0.05 * np.cos(5 * th)

        trace = CircleTrace.sample(g, 48)
        a, b = fourier_coefficients(trace)
        assert_allclose(a[[0, 1, 5]], [0.6, 1.0, 0.05], atol=1e-13)
        assert_allclose(b[2], -0.2, atol=1e-13)
        theta = np.linspace(0, 2 * np.pi, 17)
        assert_allclose(reconstruct(a, b, theta), g(theta), atol=1e-12)

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            CircleTrace.sample(np.cos, 8)


class TestFirstDerivative:
    def test_stationary_at_concentric(self, concentric):
        inst, report, _ = concentric
        assert abs(report.sigma_prime) < 1e-8
        assert report.sigma_prime == first_shape_derivative(inst.flux, E1)

    def test_negative_off_center(self, eccentric):
        _, report, _ = eccentric
        assert report.sigma_prime < 0.0

    def test_direction_reversal(self, eccentric):
        inst, report, _ = eccentric
        assert_allclose(first_shape_derivative(inst.flux, -E1), -report.sigma_prime, rtol=1e-14)

    @pytest.mark.parametrize("w", [E1, E2], ids=["major-axis", "minor-axis"])
    def test_stationary_on_ellipse(self, w):
        problem = ellipse(w=w)
        mid = problem.at(0.5 * problem.t_max)
        at_zero = []
        for h in (0.1, 0.05):
            slope = first_shape_derivative(solve_instance(mid, h).flux, w)
            assert slope < 0.0
            at_zero.append(abs(first_shape_derivative(solve_instance(problem, h).flux, w)))
            assert at_zero[-1] <= 0.02 * abs(slope)
        assert at_zero[1] <= max(at_zero[0], 1e-10 * abs(slope))


class TestSecondDerivative:
    def test_reported_terms_match_closed_form(self, concentric):
        _, report, _ = concentric
        terms = concentric_reported_terms(R, r)
        for name, value in terms.items():
            assert_allclose(getattr(report, name), value, rtol=0.02)
        assert report.signs_ok()

    def test_derivative_problem_matches_closed_form(self, concentric):
        _, report, _ = concentric
        assert_allclose(report.term_I_bvp, concentric_derivative_energy(R, r), rtol=0.05)
        assert_allclose(report.sigma_second_bvp, concentric_second_derivative(R, r), rtol=0.05)
        assert report.term_III_bvp == 0.0

    def test_three_term_form_alone(self, eccentric):
        inst, report, _ = eccentric
        alone = second_shape_derivative(inst.flux, E1, r)
        assert alone.sigma_second_bvp is None
        assert alone.second_agreement() is None
        assert alone.sigma_second == report.sigma_second

    def test_eccentric_signs(self, eccentric):
        _, report, _ = eccentric
        assert report.term_I <= 0.0
        assert report.term_II < 0.0
        assert report.term_III_extra <= 0.0
        assert report.sigma_second < 0.0
        assert report.signs_ok()

    def test_derivative_problem_sign_follows_differences(self, eccentric, eccentric_fd):
        _, report, _ = eccentric
        assert report.sigma_second_bvp > 0.0
        assert np.sign(report.sigma_second_bvp) == np.sign(eccentric_fd.fd_second)
        assert report.signs_ok()

    def test_json(self, eccentric):
        _, report, _ = eccentric
        data = json.loads(report.to_json())
        assert data["sigma_second_bvp"] == report.sigma_second_bvp
        assert data["n"] == 2


class TestDerivativeProblem:
    def test_compatible_and_orthogonal(self, eccentric):
        _, report, field = eccentric
        assert report.compatibility < 1e-10
        assert abs(field.orthogonality) <= 1e-6

    def test_hole_datum(self, eccentric):
        inst, _, field = eccentric
        expected = inst.flux.grad * inst.flux.w_dot_nu(E1)
        assert_allclose(field.u_prime[inst.flux.nodes], expected, rtol=1e-14)

    def test_odd_at_concentric(self, concentric):
        inst, _, field = concentric
        u = field.u_prime
        mirror = mirror_indices(inst.mesh)
        assert np.abs(u[mirror] + u).max() <= 1e-6 * np.abs(u).max()

    def test_odd_on_centered_ellipse(self, ellipse_concentric):
        inst, report, field = ellipse_concentric
        mirror = mirror_indices(inst.mesh)
        u = inst.pair.u
        assert np.abs(u[mirror] - u).max() <= 1e-8 * u.max()
        assert np.abs(field.u_prime[mirror] + field.u_prime).max() <= 1e-6 * np.abs(field.u_prime).max()
        assert abs(report.sigma_prime) <= 1e-8

    def test_incompatible_sigma_prime(self, eccentric):
        inst, report, _ = eccentric
        with pytest.raises(IncompatibleData):
            solve_derivative_bvp(inst.mesh, inst.system, inst.pair, report.sigma_prime + 1.0, E1, flux=inst.flux)


class TestFiniteDifferences:
    def test_stencil_limits(self):
        problem = shell(1.49)
        with pytest.raises(StepTooLarge):
            finite_difference_derivatives(problem, 0.1, delta=0.02)
        with pytest.raises(StepTooLarge):
            finite_difference_derivatives(shell(0.01), 0.1, delta=0.02)
        with pytest.raises(StepTooLarge):
            finite_difference_derivatives(shell(0.5), 0.1, delta=0.0)

    def test_symmetric_stencil_at_concentric(self):
        fd = finite_difference_derivatives(shell(), 0.1, delta=1.5e-3, delta_second=7.5e-3)
        assert fd.fd_first == 0.0
        assert fd.fd_second < 0.0
        assert set(fd.sigmas) == {0.0, 1.5e-3, 7.5e-3}

    def test_formulas_agree_on_coarse_mesh(self, eccentric, eccentric_fd):
        _, report, _ = eccentric
        assert eccentric_fd.fd_first < 0.0
        assert abs(report.sigma_prime - eccentric_fd.fd_first) / abs(eccentric_fd.fd_first) < 0.05
        assert abs(report.sigma_second_bvp - eccentric_fd.fd_second) / abs(eccentric_fd.fd_second) < 0.15

    @pytest.mark.slow
    @pytest.mark.parametrize("t", [0.0, 0.375, 0.75, 1.125])
    def test_formulas_agree_on_fine_mesh(self, t):
        problem = shell(t)
        fd = finite_difference_derivatives(problem, 0.02, delta=1.5e-3, delta_second=7.5e-3, workers=2)
        inst = solve_instance(problem, 0.02, layout=fd.layout)
        report, _ = derivative_report(inst)
        if t > 0.0:
            assert abs(report.sigma_prime - fd.fd_first) / abs(fd.fd_first) <= 0.02
        assert abs(report.sigma_second_bvp - fd.fd_second) / abs(fd.fd_second) <= 0.05

    def test_eigenfunction_derivative(self, eccentric):
        inst, _, field = eccentric
        estimate = finite_difference_eigenfunction(inst.problem, 0.05, delta=1.5e-3, layout=inst.mesh.layout)
        hole = inst.mesh.inner_nodes()
        datum = inst.flux.grad * inst.flux.w_dot_nu(E1)
        assert_allclose(field.u_prime[inst.flux.nodes], datum, rtol=1e-14)
        on_hole = np.linalg.norm(estimate.u_prime[hole] - field.u_prime[hole])
        assert on_hole <= 0.05 * np.linalg.norm(field.u_prime[hole])
        rings = estimate.interior_rings()
        diff = np.linalg.norm(estimate.u_prime[rings] - field.u_prime[rings])
        assert diff <= 0.1 * np.linalg.norm(field.u_prime[rings])

    def test_eigenfunction_stencil_needs_offset(self):
        with pytest.raises(StepTooLarge):
            finite_difference_eigenfunction(shell(), 0.1, delta=1e-3)
