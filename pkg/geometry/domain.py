"""
Outer domains, the moving hole and the admissible offset range.

Outer domains are star-shaped radial graphs about the origin:
    disk             rho(theta) = R
    ellipse          rho(theta) = ab / sqrt(b^2 cos^2 + a^2 sin^2)
    radial-profile   rho(theta) = base + sum_k a_k cos(k theta) + b_k sin(k theta), k even
Central symmetry rho(theta + pi) = rho(theta) holds for all three by construction.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np
from scipy.optimize import bisect, brentq, minimize_scalar

DENSE_SAMPLES = 4096
SAFETY_MARGIN = 0.98
DOMAIN_KINDS = ("disk", "ellipse", "radial-profile")


class GeometryError(ValueError):
    pass


class NonPositiveRadius(GeometryError):
    pass


class AsymmetricProfile(GeometryError):
    pass


class BadParameter(GeometryError):
    pass


class HoleTooLarge(GeometryError):
    pass


class DegenerateGeometry(GeometryError):
    pass


@dataclass(frozen=True)
class OuterDomain:
    kind: str
    radius: float | None = None
    a: float | None = None
    b: float | None = None
    base: float = 1.0
    # (k, cos coefficient, sin coefficient), k even and > 0
    harmonics: tuple[tuple[int, float, float], ...] = ()

    def rho(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.kind == "disk":
            return np.full_like(theta, self.radius)
        if self.kind == "ellipse":
            c, s = np.cos(theta), np.sin(theta)
            return self.a * self.b / np.sqrt((self.b * c) ** 2 + (self.a * s) ** 2)
        out = np.full_like(theta, self.base)
        for k, ak, bk in self.harmonics:
            out = out + ak * np.cos(k * theta) + bk * np.sin(k * theta)
        return out

    def boundary_points(self, n: int = DENSE_SAMPLES) -> np.ndarray:
        theta = 2.0 * np.pi * np.arange(n) / n
        rho = self.rho(theta)
        return np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])

    def boundary_residual(self, points) -> np.ndarray:
        """Relative mismatch |x| / rho(theta(x)) - 1 for points meant to lie on the boundary."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        theta = np.arctan2(points[:, 1], points[:, 0])
        return np.hypot(points[:, 0], points[:, 1]) / self.rho(theta) - 1.0

    def ray_exit(self, center, theta) -> np.ndarray:
        """Distance lambda along each ray center + lambda*(cos, sin) to the outer boundary."""
        cx, cy = float(center[0]), float(center[1])
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        ex, ey = np.cos(theta), np.sin(theta)

        if self.kind == "disk":
            ce = cx * ex + cy * ey
            return -ce + np.sqrt(ce * ce - (cx * cx + cy * cy) + self.radius**2)

        if self.kind == "ellipse":
            a2, b2 = self.a**2, self.b**2
            qa = ex * ex / a2 + ey * ey / b2
            qb = 2.0 * (cx * ex / a2 + cy * ey / b2)
            qc = cx * cx / a2 + cy * cy / b2 - 1.0
            sq = np.sqrt(qb * qb - 4.0 * qa * qc)
            # stable positive root of qa*l^2 + qb*l + qc = 0 with qc < 0
            q = -0.5 * (qb + np.where(qb >= 0.0, sq, -sq))
            return np.where(qb >= 0.0, qc / q, q / qa)

        hi = 2.0 * float(self.rho(np.linspace(0, 2 * np.pi, DENSE_SAMPLES)).max()) + math.hypot(cx, cy)
        out = np.empty_like(theta)
        for i, (ux, uy) in enumerate(zip(ex, ey)):

            def gap(lam):
                px, py = cx + lam * ux, cy + lam * uy
                return math.hypot(px, py) - float(self.rho(math.atan2(py, px)))

            out[i] = brentq(gap, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        return out

    def to_dict(self) -> dict:
        if self.kind == "disk":
            return {"kind": "disk", "R": self.radius}
        if self.kind == "ellipse":
            return {"kind": "ellipse", "a": self.a, "b": self.b}
        return {
            "kind": "radial-profile",
            "base": self.base,
            "cos": {str(k): ak for k, ak, _ in self.harmonics if ak},
            "sin": {str(k): bk for k, _, bk in self.harmonics if bk},
        }


def _parse_harmonics(spec: Mapping[str, Any]) -> tuple[float, tuple[tuple[int, float, float], ...]]:
    base = float(spec.get("base", 1.0))
    coeffs: dict[int, list[float]] = {}
    for column, key in ((0, "cos"), (1, "sin")):
        for raw_k, value in (spec.get(key) or {}).items():
            try:
                k = int(raw_k)
            except (TypeError, ValueError) as exc:
                raise BadParameter(f"harmonic index must be an integer, got {raw_k!r}") from exc
            if k < 0:
                raise BadParameter(f"harmonic index must be non-negative, got {k}")
            value = float(value)
            if k == 0:
                if column == 0:
                    base += value
                continue
            if k % 2 == 1 and value != 0.0:
                raise AsymmetricProfile(
                    f"odd harmonic {key}({k}θ) breaks central symmetry rho(θ+π) = rho(θ)"
                )
            coeffs.setdefault(k, [0.0, 0.0])[column] += value
    harmonics = tuple((k, ab[0], ab[1]) for k, ab in sorted(coeffs.items()) if ab[0] or ab[1])
    return base, harmonics


def make_outer_domain(spec: Mapping[str, Any]) -> OuterDomain:
    """
    Build and validate an outer domain from a plain mapping.

    Accepted forms:
        {"kind": "disk", "R": 2.0}
        {"kind": "ellipse", "a": 2.0, "b": 1.0}
        {"kind": "radial-profile", "base": 1.0, "cos": {"2": 0.2}, "sin": {}}
    """
    kind = str(spec.get("kind", "")).lower()
    if kind not in DOMAIN_KINDS:
        raise BadParameter(f"unknown outer domain kind {kind!r}; use one of {DOMAIN_KINDS}")

    if kind == "disk":
        radius = float(spec.get("R", spec.get("radius", 0.0)))
        if not radius > 0:
            raise BadParameter(f"disk radius must be positive, got {radius}")
        domain = OuterDomain(kind="disk", radius=radius)
    elif kind == "ellipse":
        a, b = float(spec.get("a", 0.0)), float(spec.get("b", 0.0))
        if not b > 0:
            raise BadParameter(f"ellipse semi-axes must be positive, got a={a}, b={b}")
        if a < b:
            raise BadParameter(f"ellipse needs a >= b, got a={a}, b={b}")
        domain = OuterDomain(kind="ellipse", a=a, b=b)
    else:
        base, harmonics = _parse_harmonics(spec)
        domain = OuterDomain(kind="radial-profile", base=base, harmonics=harmonics)

    theta = 2.0 * np.pi * np.arange(DENSE_SAMPLES) / DENSE_SAMPLES
    rho = domain.rho(theta)
    if rho.min() <= 0.0:
        i = int(rho.argmin())
        raise NonPositiveRadius(f"rho({theta[i]:.4f}) = {rho[i]:.4g} <= 0")
    if np.abs(domain.rho(theta + np.pi) - rho).max() > 1e-12 * rho.max():
        raise AsymmetricProfile("profile is not invariant under θ -> θ + π")
    return domain


def boundary_distance(outer: OuterDomain, point) -> float:
    """Euclidean distance from an interior point to the outer boundary."""
    px, py = float(point[0]), float(point[1])
    if outer.kind == "disk":
        return outer.radius - math.hypot(px, py)

    n = DENSE_SAMPLES
    theta = 2.0 * np.pi * np.arange(n) / n
    pts = outer.boundary_points(n)
    d2 = (pts[:, 0] - px) ** 2 + (pts[:, 1] - py) ** 2
    k = int(d2.argmin())
    step = 2.0 * np.pi / n

    def dist2(th):
        rho = float(outer.rho(th))
        return (rho * math.cos(th) - px) ** 2 + (rho * math.sin(th) - py) ** 2

    res = minimize_scalar(
        dist2,
        bounds=(theta[k] - 1.5 * step, theta[k] + 1.5 * step),
        method="bounded",
        options={"xatol": 1e-13},
    )
    return math.sqrt(min(float(res.fun), float(d2[k])))


def sampled_boundary_distance(outer: OuterDomain, point, samples: int = 100_000) -> float:
    """Brute-force distance by dense sampling; used as an oracle."""
    pts = outer.boundary_points(samples)
    return float(np.sqrt(((pts - np.asarray(point, dtype=float)) ** 2).sum(axis=1)).min())


def unit_vector(w) -> tuple[float, float]:
    wx, wy = float(w[0]), float(w[1])
    norm = math.hypot(wx, wy)
    if norm == 0.0:
        raise BadParameter("direction w must be non-zero")
    return (wx / norm, wy / norm)


def admissible_range(outer: OuterDomain, r: float, w, distance=boundary_distance) -> float:
    """
    t_max = sup{t >= 0 : dist(t*w, boundary) > r}, taken as the first crossing of
    g(t) = dist(t*w, boundary) - r along the ray.
    """
    if not r > 0:
        raise BadParameter(f"hole radius must be positive, got {r}")
    w = unit_vector(w)
    if distance(outer, (0.0, 0.0)) <= r:
        raise HoleTooLarge(f"B_r(0) with r={r} is not contained in the outer domain")

    if outer.kind == "disk" and distance is boundary_distance:
        return outer.radius - r

    def g(t):
        return distance(outer, (t * w[0], t * w[1])) - r

    hi = float(outer.rho(math.atan2(w[1], w[0])))
    grid = np.linspace(0.0, hi, 257)
    lo_t = 0.0
    for t in grid[1:]:
        if g(t) <= 0.0:
            return bisect(g, lo_t, t, xtol=1e-14, maxiter=200)
        lo_t = t
    return hi - r


@dataclass(frozen=True)
class HoleSpec:
    r: float
    w: tuple[float, float]
    t: float = 0.0

    @property
    def center(self) -> np.ndarray:
        return np.array([self.t * self.w[0], self.t * self.w[1]])


@dataclass(frozen=True)
class AnnulusProblem:
    outer: OuterDomain
    hole: HoleSpec
    t_max: float = field(default=math.inf, compare=False)

    def at(self, t: float) -> "AnnulusProblem":
        if not 0.0 <= t < self.t_max:
            raise BadParameter(f"offset t={t} outside admissible range [0, {self.t_max})")
        return replace(self, hole=replace(self.hole, t=float(t)))

    @property
    def center(self) -> np.ndarray:
        return self.hole.center

    def to_dict(self) -> dict:
        return {
            "outer": self.outer.to_dict(),
            "r": self.hole.r,
            "w": list(self.hole.w),
            "t": self.hole.t,
            "t_max": self.t_max,
        }


def make_problem(outer: OuterDomain, r: float, w, t: float = 0.0) -> AnnulusProblem:
    w = unit_vector(w)
    t_max = admissible_range(outer, r, w)
    if not 0.0 <= t < t_max:
        raise BadParameter(f"offset t={t} outside admissible range [0, {t_max})")
    return AnnulusProblem(outer=outer, hole=HoleSpec(r=float(r), w=w, t=float(t)), t_max=t_max)


def offsets(problem: AnnulusProblem, count: int, margin: float = SAFETY_MARGIN) -> np.ndarray:
    """`count` equally spaced offsets on [0, margin * t_max]."""
    if count <= 1:
        return np.zeros(1)
    return np.linspace(0.0, margin * problem.t_max, count)
