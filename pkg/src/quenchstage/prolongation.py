"""12-point coarse-to-fine stage transfer and its compatibility checks.

Each coarse cell (i, j) carries a polynomial in local coordinates
theta = (x - x_i)/h, zeta = (y - y_j)/h spanned by

    {1, theta, zeta, theta^2, theta*zeta, zeta^2,
     theta^3, theta^2*zeta, theta*zeta^2, zeta^3, theta^3*zeta, theta*zeta^3}

fitted on the 4x4 node block minus its four corners (12 nodes).  The fit is
unisolvent, reproduces every bivariate polynomial of total degree <= 3, and
restricts to the same univariate cubic on a shared cell edge from either
side, which makes the prolonged surface single-valued across interior
interfaces.

A stage transfer from amplitude A_from to A_to = k^(-2/3) A_from dilates the
domain by k at fixed mesh width and writes fine interior values

    Zhat(k*i + l, k*j + r) = k^(2/3) * P_ij(l/k, r/k),   l, r in {0..k-1},

with half-open cell ownership (the last fine grid line comes from the last
cells at l or r = k).  Stencil entries outside the coarse node set take the
fill value 1/A_from, and the new boundary value is 1/A_to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, build_rescaled_grid, flat_extend, laplacian_5pt

# stencil offsets: 4x4 block {-1,0,1,2}^2 minus the four corners
S12: tuple[tuple[int, int], ...] = (
    (-1, 0), (-1, 1),
    (0, -1), (0, 0), (0, 1), (0, 2),
    (1, -1), (1, 0), (1, 1), (1, 2),
    (2, 0), (2, 1),
)

# monomial exponents (p, q) for theta^p * zeta^q, same order as CellCoeffs.a
BASIS_EXPONENTS: tuple[tuple[int, int], ...] = (
    (0, 0), (1, 0), (0, 1),
    (2, 0), (1, 1), (0, 2),
    (3, 0), (2, 1), (1, 2), (0, 3),
    (3, 1), (1, 3),
)


def basis_row(theta: float, zeta: float) -> np.ndarray:
    return np.array(
        [theta ** p * zeta ** q for p, q in BASIS_EXPONENTS], dtype=float
    )


def _reference_matrix() -> np.ndarray:
    return np.array([basis_row(float(a), float(b)) for a, b in S12])


# the reference matrix has exact small-integer entries; its inverse is
# computed once at import and shared by every cell fit
REFERENCE_MATRIX: np.ndarray = _reference_matrix()
REFERENCE_INVERSE: np.ndarray = np.linalg.inv(REFERENCE_MATRIX)


@dataclass(frozen=True)
class CellCoeffs:
    a: np.ndarray  # 12 coefficients in BASIS_EXPONENTS order

    def __post_init__(self) -> None:
        arr = np.asarray(self.a, dtype=float)
        if arr.shape != (12,):
            raise ValueError("cell fit needs exactly 12 coefficients")
        object.__setattr__(self, "a", arr)


@dataclass(frozen=True)
class TransferSpec:
    """Stage-transfer parameters: factor k, amplitudes, and fill value."""

    k: int
    A_from: float
    A_to: float
    fill: float

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("stage factor k must be at least 2")
        if self.A_from <= 0.0 or self.A_to <= 0.0:
            raise ValueError("amplitudes must be positive")
        if abs(self.A_to / self.A_from - self.k ** (-2.0 / 3.0)) > 1e-12:
            raise ValueError("A_to must equal k^(-2/3) * A_from")
        if abs(self.fill - 1.0 / self.A_from) > 1e-12:
            raise ValueError("fill value must equal 1/A_from")

    @property
    def scale(self) -> float:
        return self.k ** (2.0 / 3.0)


def make_transfer(A_from: float, k: int) -> TransferSpec:
    return TransferSpec(
        k=k, A_from=A_from, A_to=k ** (-2.0 / 3.0) * A_from, fill=1.0 / A_from
    )


def fit_cell(data: np.ndarray) -> CellCoeffs:
    """Coefficients of the unique 12-point interpolant of stencil data."""
    data = np.asarray(data, dtype=float)
    if data.shape != (12,):
        raise ValueError("expected 12 stencil values in S12 order")
    return CellCoeffs(a=REFERENCE_INVERSE @ data)


def eval_cell(c: CellCoeffs, theta: float, zeta: float) -> float:
    return float(basis_row(theta, zeta) @ c.a)


def laplacian_cell(c: CellCoeffs, theta: float, zeta: float, h: float) -> float:
    """Laplacian of the cell polynomial in grid coordinates (units 1/h^2)."""
    a = c.a
    return (
        2.0 * (a[3] + a[5])
        + (6.0 * a[6] + 2.0 * a[8]) * theta
        + (2.0 * a[7] + 6.0 * a[9]) * zeta
        + 6.0 * (a[10] + a[11]) * theta * zeta
    ) / (h * h)


def _stencil_values(F: np.ndarray, N: int, i: int, j: int, fill: float) -> np.ndarray:
    out = np.empty(12)
    for idx, (a, b) in enumerate(S12):
        p, q = i + a, j + b
        if 0 <= p <= N and 0 <= q <= N:
            out[idx] = F[p, q]
        else:
            out[idx] = fill
    return out


def stencil_in_domain(N: int, i: int, j: int) -> bool:
    """True when cell (i, j) reads no fill values: 1 <= i, j <= N - 2."""
    return 1 <= i <= N - 2 and 1 <= j <= N - 2


def _owner(index: int, k: int, N: int) -> tuple[int, int]:
    # half-open ownership; the last grid line belongs to the last cell
    cell, offset = divmod(index, k)
    if cell == N:
        return N - 1, k
    return cell, offset


def prolong_stage(end: Field, spec: TransferSpec) -> Field:
    """Amplitude-scaled 12-point prolongation onto the k-times-finer stage.

    The output grid has k*N intervals at the same mesh width (the domain
    dilates by k as the amplitude drops to A_to); its boundary value is
    1/A_to, consistent with the scaling of the coarse boundary 1/A_from.
    """
    if not end.is_admissible():
        raise ValueError("transfer requires a positive end state")
    if abs(end.g * spec.A_from - 1.0) > 1e-9:
        raise ValueError("end state boundary value does not match 1/A_from")
    N = end.grid.N
    k = spec.k
    Nf = k * N
    F = flat_extend(end)
    out = np.empty((Nf - 1, Nf - 1))
    coeffs: dict[tuple[int, int], CellCoeffs] = {}
    for I in range(1, Nf):
        i, l = _owner(I, k, N)
        for J in range(1, Nf):
            j, r = _owner(J, k, N)
            key = (i, j)
            c = coeffs.get(key)
            if c is None:
                c = fit_cell(_stencil_values(F, N, i, j, spec.fill))
                coeffs[key] = c
            out[I - 1, J - 1] = spec.scale * eval_cell(c, l / k, r / k)
    fine_grid = build_rescaled_grid(spec.A_to, Nf)
    return Field(grid=fine_grid, interior=out, g=1.0 / spec.A_to)


def edge_consistency_check(end: Field, samples: int = 5) -> float:
    """Max mismatch of adjacent cell polynomials along shared interior edges.

    Only edges whose two adjacent cells both have fully in-domain stencils
    are compared; the polynomials are evaluated at `samples` points along
    the edge (enough to pin the shared univariate cubic for samples >= 4).
    """
    if samples < 2:
        raise ValueError("need at least 2 sample points per edge")
    N = end.grid.N
    F = flat_extend(end)
    fill = end.g

    def coeffs(i: int, j: int) -> CellCoeffs:
        return fit_cell(_stencil_values(F, N, i, j, fill))

    ts = np.linspace(0.0, 1.0, samples)
    worst = 0.0
    for i in range(N):
        for j in range(N):
            if not stencil_in_domain(N, i, j):
                continue
            left = coeffs(i, j)
            if stencil_in_domain(N, i + 1, j):
                right = coeffs(i + 1, j)
                for t in ts:
                    worst = max(
                        worst,
                        abs(eval_cell(left, 1.0, t) - eval_cell(right, 0.0, t)),
                    )
            if stencil_in_domain(N, i, j + 1):
                upper = coeffs(i, j + 1)
                for t in ts:
                    worst = max(
                        worst,
                        abs(eval_cell(left, t, 1.0) - eval_cell(upper, t, 0.0)),
                    )
    return worst


def laplace_compat_check(end: Field, spec: TransferSpec) -> float:
    """Max residual of the local Laplacian identity of the prolongation.

    At fine nodes whose centered stencil stays inside one coarse cell, the
    five-point Laplacian of the prolonged field equals k^(-4/3) times the
    cell-polynomial Laplacian at the preimage.  Interior fine offsets
    l, r in {1..k-1} require k >= 3; for k = 2 the identity is checked on a
    synthetic refinement of the same end state with k = 4.
    """
    k = spec.k if spec.k >= 3 else 4
    eff = make_transfer(spec.A_from, k)
    fine = prolong_stage(end, eff)
    lap_fine = laplacian_5pt(fine)
    N = end.grid.N
    F = flat_extend(end)
    h = end.grid.h
    # the fine field carries the amplitude scale k^(2/3); together with the
    # 1/k^2 of the fine difference quotient this gives the k^(-4/3) factor
    factor = k ** (-4.0 / 3.0)
    worst = 0.0
    for i in range(N):
        for j in range(N):
            # the node values bordering the cell must come from consistent
            # polynomials, so this cell and its +x/+y neighbors must all be
            # fill-free
            if not (
                stencil_in_domain(N, i, j)
                and stencil_in_domain(N, i + 1, j)
                and stencil_in_domain(N, i, j + 1)
            ):
                continue
            c = fit_cell(_stencil_values(F, N, i, j, eff.fill))
            for l in range(1, k):
                for r in range(1, k):
                    I, J = k * i + l, k * j + r
                    expected = factor * laplacian_cell(c, l / k, r / k, h)
                    got = lap_fine[I - 1, J - 1]
                    worst = max(worst, abs(got - expected))
    return worst
