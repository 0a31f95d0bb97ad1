"""Implicit time stepping for the rescaled equation at frozen amplitude.

One step advances Z by backward Euler on the diffusion part with Picard
iteration on the nonlocal source:

    (1/ds) Y - Lap_h Y = Z/ds - lam / (Y_prev^2 K(Y_prev)^2)

with constant Dirichlet data g.  The linear operator (I/ds - Lap_h) is
factorized once per (grid, ds) and reused across Picard sweeps and across
steps; the boundary coupling enters the right-hand side.  Values are clipped
(default 1e-12) only inside reciprocal evaluations, K is recomputed from the
full current iterate each sweep, and the iteration seeds from Z.  For lam = 0
the source does not depend on the iterate, so the first solve is already the
fixed point and the step reports a single iteration.

A minimizing-movement oracle doubles the step on verification-size grids
(<= 16 interior nodes): it minimizes E(Y) + (A^2/2ds)*||Y - Z||_{2,h}^2 by
plain gradient descent from Z with backtracking step sizes, run until the
first-order residual

    R = (Y - Z)/ds - Lap_h Y + lam/(Y^2 K^2)

drops below 1e-10 in max norm.  The oracle shares no linear algebra with the
Picard path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .grid import Field, Grid, laplacian_5pt
from .energy import discrete_energy, reciprocal_K


@dataclass(frozen=True)
class StepperConfig:
    ds: float
    lam: float
    picard_tol: float = 1e-10
    picard_max: int = 50
    clip: float = 1e-12

    def __post_init__(self) -> None:
        if self.ds <= 0.0:
            raise ValueError("ds must be positive")
        if self.lam < 0.0:
            raise ValueError("lam must be nonnegative")
        if self.picard_tol <= 0.0 or self.picard_max <= 0 or self.clip <= 0.0:
            raise ValueError("tolerances and iteration caps must be positive")


@dataclass(frozen=True)
class StepReport:
    next: Field
    picard_iters: int
    converged: bool
    dissipation_lhs: float  # E(next) + (A^2/2ds)*||next - prev||^2_{2,h}
    dissipation_rhs: float  # E(prev)


class OracleStagnation(RuntimeError):
    """Raised when the descent oracle cannot reach its residual target."""


class DirichletSolver:
    """Direct factorization of (I/ds - Lap_h) on the interior of a grid.

    The factorization is computed once and reused for every Picard sweep and
    every step on the same grid with the same ds.
    """

    def __init__(self, grid: Grid, ds: float):
        if ds <= 0.0:
            raise ValueError("ds must be positive")
        self.grid = grid
        self.ds = ds
        n = grid.N - 1
        h2 = grid.h ** 2
        main = np.full(n, 2.0 / h2)
        off = np.full(n - 1, -1.0 / h2)
        L1 = sp.diags([off, main, off], [-1, 0, 1], format="csr")
        I1 = sp.identity(n, format="csr")
        L = sp.kron(I1, L1) + sp.kron(L1, I1)
        self._n = n
        self._lu = splu((sp.identity(n * n) / ds + L).tocsc())

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._lu.solve(rhs.ravel()).reshape(self._n, self._n)


def boundary_coupling(grid: Grid, g: float) -> np.ndarray:
    """Right-hand-side contribution of the constant Dirichlet value g.

    Equals the five-point Laplacian of the zero-interior field with boundary
    g: g/h^2 at nodes adjacent to the boundary, zero elsewhere.
    """
    zero = Field(grid=grid, interior=np.zeros((grid.N - 1, grid.N - 1)), g=g)
    return laplacian_5pt(zero)


def dt_star(Z: Field, A: float, eta: float, lam: float, E: float) -> float:
    """Admissible step bound min{A^2 h^2 eta^2 / (8E), eta^3 / (16 lam)}.

    Below this bound the implicit minimizer stays positive (min >= eta/2)
    and is locally unique.  Reported as a diagnostic; the reference runs use
    their fixed ds regardless.
    """
    if A <= 0.0 or eta <= 0.0 or lam <= 0.0 or E <= 0.0:
        raise ValueError("dt_star needs positive A, eta, lam, E")
    h = Z.grid.h
    return min(A * A * h * h * eta * eta / (8.0 * E), eta ** 3 / (16.0 * lam))


def picard_implicit_step(
    Z: Field,
    cfg: StepperConfig,
    A: float,
    solver: DirichletSolver | None = None,
    seed: Field | None = None,
) -> StepReport:
    """One backward-Euler step with Picard iteration on the nonlocal source.

    The optional solver must match (Z.grid, cfg.ds); passing one amortizes
    the factorization over a whole stage.  The optional seed overrides the
    default Picard start Y(0) = Z (used by the local-uniqueness checks).
    """
    if not Z.is_admissible():
        raise ValueError("Picard step requires a positive previous state")
    if solver is None:
        solver = DirichletSolver(Z.grid, cfg.ds)
    if solver.grid is not Z.grid and (
        solver.grid.N != Z.grid.N or solver.grid.h != Z.grid.h
    ):
        raise ValueError("solver grid does not match the state grid")
    if solver.ds != cfg.ds:
        raise ValueError("solver ds does not match the stepper config")

    h = Z.grid.h
    bnd = boundary_coupling(Z.grid, Z.g)
    base_rhs = Z.interior / cfg.ds + bnd

    Y = (seed.interior if seed is not None else Z.interior).copy()
    iters = 0
    converged = False
    if cfg.lam == 0.0:
        # source is iterate-independent: the first solve is the fixed point
        Y = solver.solve(base_rhs)
        iters, converged = 1, True
    else:
        for _ in range(cfg.picard_max):
            Yc = np.maximum(Y, cfg.clip)
            K = 1.0 + A * A * h * h * float(np.sum(1.0 / Yc))
            S = cfg.lam / (Yc * Yc * K * K)
            Ynew = solver.solve(base_rhs - S)
            iters += 1
            gap = float(np.max(np.abs(Ynew - Y)))
            Y = Ynew
            if gap < cfg.picard_tol * max(1.0, float(np.max(np.abs(Ynew)))):
                converged = True
                break

    nxt = Z.with_interior(Y)
    diff = Y - Z.interior
    penalty = (A * A / (2.0 * cfg.ds)) * h * h * float(np.sum(diff * diff))
    lhs = discrete_energy(nxt, A, cfg.lam).total + penalty
    rhs_e = discrete_energy(Z, A, cfg.lam).total
    return StepReport(
        next=nxt,
        picard_iters=iters,
        converged=converged,
        dissipation_lhs=lhs,
        dissipation_rhs=rhs_e,
    )


def euler_lagrange_residual(Y: Field, Z: Field, cfg: StepperConfig, A: float) -> np.ndarray:
    """Residual (Y - Z)/ds - Lap_h Y + lam/(Y^2 K^2) of the implicit step."""
    K = reciprocal_K(Y, A, 0.0)
    if math.isinf(K):
        raise ValueError("residual undefined on the vanishing branch")
    source = cfg.lam / (Y.interior ** 2 * K * K)
    return (Y.interior - Z.interior) / cfg.ds - laplacian_5pt(Y) + source


def mm_oracle_step(
    Z: Field,
    cfg: StepperConfig,
    A: float,
    residual_tol: float = 1e-10,
    max_iters: int = 2000,
) -> Field:
    """Minimizing-movement reference step on verification-size grids.

    Gradient descent from Z on J(Y) = E(Y) + (A^2/2ds)*||Y - Z||^2 with
    backtracking (halved) step sizes.  Near the minimum the objective
    decrease falls below float resolution, so the line search accepts steps
    within a few ulps of J as well; the descent map still contracts the
    residual there.  Stops once the first-order residual is below
    residual_tol in max norm; stagnation above the target raises.
    """
    if Z.grid.interior_count > 16:
        raise ValueError("oracle is restricted to grids with <= 16 interior nodes")
    if not Z.is_admissible():
        raise ValueError("oracle requires a positive previous state")

    h = Z.grid.h
    h2 = h * h
    scale = A * A * h2

    def objective(Yarr: np.ndarray) -> float:
        cand = Z.with_interior(Yarr)
        diff = Yarr - Z.interior
        penalty = (A * A / (2.0 * cfg.ds)) * h2 * float(np.sum(diff * diff))
        return discrete_energy(cand, A, cfg.lam).total + penalty

    Y = Z.interior.copy()
    alpha0 = cfg.ds / scale
    for _ in range(max_iters):
        cand = Z.with_interior(Y)
        R = euler_lagrange_residual(cand, Z, cfg, A)
        if float(np.max(np.abs(R))) < residual_tol:
            return cand
        G = scale * R  # plain gradient of J
        JY = objective(Y)
        gsq = h2 * float(np.sum(G * G))
        slack = 8.0 * np.finfo(float).eps * abs(JY)
        a = alpha0
        while True:
            Yn = Y - a * G
            if Yn.min() > 0.0 and objective(Yn) <= JY - 1e-4 * a * gsq + slack:
                break
            a *= 0.5
            if a < 1e-18:
                raise OracleStagnation(
                    "descent stagnated above the residual target"
                )
        Y = Yn
    raise OracleStagnation("descent did not reach the residual target")
