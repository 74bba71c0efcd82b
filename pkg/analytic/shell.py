"""
Closed forms for the spherical shell B_R \\ B_r.

concentric_sigma and eccentric_bounds are the reference values every sweep is
checked against. The mode and second-derivative formulas are derived from
separation of variables in 2D and serve as test oracles.
"""

import math
from dataclasses import dataclass


class BadShell(ValueError):
    pass


@dataclass(frozen=True)
class ShellSpec:
    R: float
    r: float
    n: int = 2

    def __post_init__(self):
        if not self.r > 0:
            raise BadShell(f"inner radius must be positive, got r={self.r}")
        if not self.R > self.r:
            raise BadShell(f"outer radius must exceed inner radius, got R={self.R}, r={self.r}")
        if int(self.n) != self.n or self.n < 2:
            raise BadShell(f"dimension must be an integer >= 2, got n={self.n}")


def concentric_sigma(spec: ShellSpec) -> float:
    R, r, n = spec.R, spec.r, spec.n
    if n == 2:
        return 1.0 / (R * math.log(R / r))
    # u = r^(2-n) - rho^(2-n), sigma = u'(R) / u(R)
    return (n - 2) * R ** (1 - n) / (r ** (2 - n) - R ** (2 - n))


def eccentric_bounds(R: float, r: float) -> tuple[float, float]:
    """(upper, lower): concentric value and the limit bound as the hole touches."""
    spec = ShellSpec(R=R, r=r)
    return concentric_sigma(spec), r / (2.0 * R * (R - r))


def concentric_mode_sigma(R: float, r: float, m: int) -> float:
    """Eigenvalue of the separated mode (rho^m - r^2m rho^-m) cos(m theta) on the 2D shell."""
    spec = ShellSpec(R=R, r=r)
    if m < 0:
        raise BadShell(f"mode index must be non-negative, got m={m}")
    if m == 0:
        return concentric_sigma(spec)
    num = m * (R ** (m - 1) + r ** (2 * m) * R ** (-m - 1))
    den = R**m - r ** (2 * m) * R ** (-m)
    return num / den


def _normalized_flux(R: float, r: float) -> tuple[float, float]:
    """(L, c) with u = c log(rho / r) normalized to unit L2 norm on the outer circle."""
    L = math.log(R / r)
    return L, math.sqrt(1.0 / (2.0 * math.pi * R * L * L))


def concentric_second_derivative(R: float, r: float) -> float:
    """
    Exact d^2 sigma / dt^2 at t = 0 for the 2D shell, from a second-order
    expansion of the eigenproblem in the hole offset.
    """
    ShellSpec(R=R, r=r)
    L = math.log(R / r)
    q = (L - 1.0) / (L + 1.0)
    return -2.0 / (R * L * L * (r * r + R * R * q))


def concentric_derivative_energy(R: float, r: float) -> float:
    """
    2 * int_{|x|=r} u' du'/dnu for the concentric shell, where u' solves the
    derivative problem with hole datum |grad u| <nu, w> and w = e1.
    """
    ShellSpec(R=R, r=r)
    L, c = _normalized_flux(R, r)
    q = (L - 1.0) / (L + 1.0)
    A = -c / (r * r + R * R * q)
    B = A * R * R * q
    return 2.0 * math.pi * c * (A - B / (r * r))


def concentric_reported_terms(R: float, r: float) -> dict[str, float]:
    """
    The three boundary terms of the reported second-derivative sum at t = 0.
    With |grad u| = c / r constant on the hole each one equals -2 pi c^2 / r^2.
    """
    ShellSpec(R=R, r=r)
    _, c = _normalized_flux(R, r)
    g = c / r
    energy = math.pi * g * g  # single n = 1 mode of amplitude g
    return {
        "term_I": -2.0 * energy,
        "term_II": -(1.0 / r) * g * g * 2.0 * math.pi * r,
        "term_III_extra": -(2.0 / r) * g * g * math.pi * r,
    }
