"""
First and second derivatives of sigma(t) with respect to the hole offset.

    sigma'  = -int_{hole} |grad u|^2 <w, nu>

The second derivative is reported twice. The reported three-term form is

    term_I         = -2 * energy of the harmonic extension of |grad u| <w, nu>
    term_II        = -(1/r) int |grad u|^2
    term_III_extra = -((3n - 4)/r) int |grad u|^2 <w, nu>^2

and the form evaluated through the derivative problem for u' is

    term_I_bvp     = 2 int_{hole} u' du'/dnu
    term_III_bvp   = -((n - 2)/r) int |grad u|^2 <w, nu>^2
    sigma_second_bvp = term_I_bvp + term_II + term_III_bvp

The finite-difference checks are made against sigma_second_bvp.
"""

import json

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from eig.instance import SolvedInstance
from fem.flux import FluxTrace
from shape.bvp import DerivativeField, solve_derivative_bvp
from shape.harmonic import harmonic_extension_energy
from shape.trace import CircleTrace, EmptyTrace

DIMENSION = 2


class DerivativeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float | None = None
    h: float | None = None
    delta: float | None = Field(default=None, description="step of the first-derivative stencil")
    delta_second: float | None = Field(default=None, description="step of the second-derivative stencil")
    sigma: float | None = None
    sigma_prime: float
    term_I: float = Field(description="-2 x harmonic-extension energy")
    term_II: float = Field(description="-(1/r) int |grad u|^2")
    term_III_extra: float = Field(description="-((3n-4)/r) int |grad u|^2 <w,nu>^2")
    sigma_second: float
    term_I_bvp: float | None = Field(default=None, description="2 int u' du'/dnu on the hole")
    term_III_bvp: float | None = None
    sigma_second_bvp: float | None = None
    fd_first: float | None = None
    fd_second: float | None = None
    compatibility: float | None = None
    orthogonality: float | None = None
    n: int = DIMENSION

    def signs_ok(self) -> bool:
        # the derivative-problem total changes sign along a sweep and is not gated
        return self.term_I <= 0.0 and self.term_II < 0.0 and self.term_III_extra <= 0.0 and self.sigma_second < 0.0

    def first_agreement(self) -> float | None:
        if self.fd_first is None or self.fd_first == 0.0:
            return None
        return abs(self.sigma_prime - self.fd_first) / abs(self.fd_first)

    def second_agreement(self) -> float | None:
        if self.fd_second is None or self.sigma_second_bvp is None or self.fd_second == 0.0:
            return None
        return abs(self.sigma_second_bvp - self.fd_second) / abs(self.fd_second)

    def to_json(self) -> str:
        return json.dumps(self.model_dump())


def _require(flux: FluxTrace):
    if len(flux) == 0:
        raise EmptyTrace("flux trace has no inner nodes")


def first_shape_derivative(flux: FluxTrace, w) -> float:
    _require(flux)
    return -flux.integrate(flux.grad**2 * flux.w_dot_nu(w))


def second_shape_derivative(
    flux: FluxTrace,
    w,
    r: float,
    boundary_energy: float | None = None,
) -> DerivativeReport:
    """
    Assemble the second-derivative terms. `boundary_energy` is int u' du'/dnu
    from the derivative problem; without it only the three-term form is filled.
    """
    _require(flux)
    n = DIMENSION
    wn = flux.w_dot_nu(w)
    grad2 = flux.grad**2

    g = CircleTrace.from_flux(flux, flux.grad * wn)
    term_I = -2.0 * harmonic_extension_energy(g)
    term_II = -(1.0 / r) * flux.integrate(grad2)
    weighted = flux.integrate(grad2 * wn * wn)
    term_III_extra = -((3 * n - 4) / r) * weighted
    fields = dict(
        sigma_prime=-flux.integrate(grad2 * wn),
        term_I=term_I,
        term_II=term_II,
        term_III_extra=term_III_extra,
        sigma_second=term_I + term_II + term_III_extra,
    )
    if boundary_energy is not None:
        term_I_bvp = 2.0 * boundary_energy
        term_III_bvp = -((n - 2) / r) * weighted
        fields.update(
            term_I_bvp=term_I_bvp,
            term_III_bvp=term_III_bvp,
            sigma_second_bvp=term_I_bvp + term_II + term_III_bvp,
        )
    return DerivativeReport(**fields)


def derivative_report(instance: SolvedInstance) -> tuple[DerivativeReport, DerivativeField]:
    """Formula side of the derivative check for one solved offset."""
    problem = instance.problem
    w = np.asarray(problem.hole.w)
    sigma_prime = first_shape_derivative(instance.flux, w)
    field = solve_derivative_bvp(
        instance.mesh, instance.system, instance.pair, sigma_prime, w, flux=instance.flux
    )
    report = second_shape_derivative(instance.flux, w, problem.hole.r, boundary_energy=field.boundary_energy)
    report = report.model_copy(
        update=dict(
            t=problem.hole.t,
            h=instance.mesh.resolution,
            sigma=instance.sigma,
            compatibility=field.compatibility,
            orthogonality=field.orthogonality,
        )
    )
    return report, field
