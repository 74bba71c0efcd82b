"""
Smallest eigenpairs of the Steklov-Dirichlet pencil K u = sigma M_out u.

Both matrices are restricted to the free (non-Dirichlet) nodes. The reduced
stiffness is factored once; power iteration on v -> K^-1 M_out v then converges
to the mode with the largest 1/sigma. Iterates stay in the range of K^-1 M_out,
so the null space of the rank-deficient boundary mass never enters.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from console import vprint
from fem.assembly import SteklovSystem

DEFAULT_TOL = float(os.getenv("STEKLOV_TOL", "1e-10"))
MAX_ITER = int(os.getenv("STEKLOV_MAX_ITER", "10000"))
PIVOT_RATIO = 1e-12


class EigenError(RuntimeError):
    pass


class NotConverged(EigenError):
    pass


class SingularSystem(EigenError):
    pass


class ZeroBoundaryTrace(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EigenPair:
    sigma: float
    u: np.ndarray  # all nodes, zero on the Dirichlet nodes
    residual: float
    iterations: int
    history: tuple[float, ...] = field(default=(), repr=False)


class ReducedPencil:
    """Factored reduced stiffness plus reduced boundary mass for one mesh."""

    def __init__(self, system: SteklovSystem):
        self.system = system
        self.K, self.M = system.reduced()
        self.lu = factor_spd(self.K)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.lu.solve(rhs)

    def restrict(self, u: np.ndarray) -> np.ndarray:
        return u[self.system.free_nodes]


def factor_spd(A: sp.spmatrix):
    """
    Symmetric-mode LU of an SPD matrix with diagonal pivoting. A non-positive or
    vanishing pivot means the matrix is not positive definite.
    """
    try:
        lu = splu(
            sp.csc_matrix(A),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options=dict(SymmetricMode=True),
        )
    except RuntimeError as exc:
        raise SingularSystem(f"factorization failed: {exc}") from exc

    pivots = lu.U.diagonal()
    if pivots.min() <= 0.0 or pivots.min() < PIVOT_RATIO * pivots.max():
        raise SingularSystem(
            f"reduced stiffness is not positive definite (pivots in [{pivots.min():.3g}, {pivots.max():.3g}]); "
            "are Dirichlet constraints missing?"
        )
    return lu


def _check_tol(tol: float):
    if not 0.0 < tol <= 1e-4:
        raise ValueError(f"tolerance must lie in (0, 1e-4], got {tol}")


def _start_vector(n: int, deflated: bool) -> np.ndarray:
    if not deflated:
        return np.ones(n)
    i = np.arange(n, dtype=float)
    return 1.0 + np.sin(1.234567 * i) + 0.5 * np.cos(0.3 * i)


def solve_deflated(
    system: SteklovSystem,
    against: list[EigenPair] | tuple[EigenPair, ...] = (),
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    pencil: ReducedPencil | None = None,
) -> EigenPair:
    """Power iteration on K^-1 M_out, kept M_out-orthogonal to the pairs in `against`."""
    _check_tol(tol)
    pencil = pencil or ReducedPencil(system)
    K, M = pencil.K, pencil.M
    basis = [pencil.restrict(p.u) for p in against]
    m_basis = [M @ b for b in basis]

    def deflate(y):
        for b, mb in zip(basis, m_basis):
            y = y - (mb @ y) * b
        return y

    v = deflate(_start_vector(K.shape[0], bool(basis)))
    sigma = np.inf
    history: list[float] = []
    residual = np.inf
    for it in range(1, max_iter + 1):
        mv = M @ v
        y = deflate(pencil.solve(mv))
        ymy = float(y @ (M @ y))
        if not ymy > 0.0:
            raise ZeroBoundaryTrace("iterate has no trace on the outer boundary")
        sigma_new = float(y @ mv) / ymy
        v = y / np.sqrt(ymy)

        kv = K @ v
        residual = float(np.linalg.norm(kv - sigma_new * (M @ v)) / np.linalg.norm(kv))
        change = abs(sigma_new - sigma) / sigma_new
        sigma = sigma_new
        history.append(sigma)
        if change < tol and residual < tol:
            break
    else:
        raise NotConverged(
            f"power iteration stopped after {max_iter} steps (sigma={sigma:.12g}, residual={residual:.3g})"
        )

    if v.sum() < 0.0:
        v = -v
    u = system.extend(v)
    vprint(
        f"[dim]eig deflated={len(basis)} sigma={sigma:.12g} iterations={it} residual={residual:.2e}[/dim]"
    )
    return EigenPair(sigma=sigma, u=u, residual=residual, iterations=it, history=tuple(history))


def solve_smallest(
    system: SteklovSystem,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    pencil: ReducedPencil | None = None,
) -> EigenPair:
    return solve_deflated(system, (), tol=tol, max_iter=max_iter, pencil=pencil)


def solve_second(
    system: SteklovSystem,
    first: EigenPair,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    pencil: ReducedPencil | None = None,
) -> float:
    return solve_deflated(system, (first,), tol=tol, max_iter=max_iter, pencil=pencil).sigma


def rayleigh(system: SteklovSystem, u: np.ndarray) -> float:
    den = float(u @ (system.M_out @ u))
    if not den > 0.0:
        raise ZeroBoundaryTrace("u vanishes on the outer boundary")
    return float(u @ (system.K @ u)) / den


def format_eigenpair(pair: EigenPair) -> str:
    lines = [f"sigma {pair.sigma:.17g}", f"residual {pair.residual:.17g}"]
    lines += [f"{x:.17g}" for x in pair.u]
    return "\n".join(lines) + "\n"


def export_eigenpair(pair: EigenPair, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_eigenpair(pair))
    return path
