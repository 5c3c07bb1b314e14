"""Doubling the interval to a circle so both wall conditions become interior.

A field pair (u, v) on [0, L] is carried to the 2n-cell circle of
circumference 2L by U = u + v on the original copy and U = -u + v on the
mirrored copy. With evenly reflected coefficients this intertwines exactly
with the stencils: odd extensions of Dirichlet modes and even extensions of
Neumann modes are eigenvectors of the periodic operator with the same
eigenvalues, so the circle's spectrum is the disjoint union of the two wall
problems' spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Coefficients, ControlRegion, Grid1D, _frozen
from .operators import BoundaryCondition, EigenBasis, Operator, assemble_laplacian
from .spectral import l2_norm


@dataclass(frozen=True)
class DoubleDomain:
    base: Grid1D
    base_coeffs: Coefficients
    doubled: Grid1D
    doubled_coeffs: Coefficients
    embed_plus: np.ndarray
    embed_minus: np.ndarray
    operator: Operator


def build_double(grid: Grid1D, coeffs: Coefficients) -> DoubleDomain:
    """Reflect (grid, coeffs) across x = length and glue into a periodic grid."""
    n = grid.n
    if coeffs.kappa.shape[0] != n:
        raise ValueError(f"coefficients sized for n={coeffs.kappa.shape[0]}, grid has n={n}")
    kappa2 = np.concatenate([coeffs.kappa, coeffs.kappa[::-1]])
    a2 = np.concatenate([coeffs.a, coeffs.a[-2::-1]])  # faces mirror about the far wall
    centers2 = (np.arange(2 * n) + 0.5) * grid.h
    doubled = Grid1D(
        n=2 * n,
        length=2.0 * grid.length,
        h=grid.h,
        centers=_frozen(centers2),
        weights=_frozen(grid.h * kappa2),
    )
    dcoeffs = Coefficients(kappa=_frozen(kappa2), a=_frozen(a2))
    op = assemble_laplacian(doubled, dcoeffs, BoundaryCondition.PERIODIC)
    return DoubleDomain(
        base=grid,
        base_coeffs=coeffs,
        doubled=doubled,
        doubled_coeffs=dcoeffs,
        embed_plus=np.arange(n),
        embed_minus=np.arange(2 * n - 1, n - 1, -1),
        operator=op,
    )


def extend_pair(dd: DoubleDomain, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """U with u + v on the plus copy and -u + v on the mirror copy."""
    n = dd.base.n
    if u.shape != (n,) or v.shape != (n,):
        raise ValueError(f"fields must have shape ({n},)")
    out = np.empty(2 * n)
    out[dd.embed_plus] = u + v
    out[dd.embed_minus] = -u + v
    return out


def split(dd: DoubleDomain, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Odd/even parts of a circle field, pulled back to the interval.

    Inverse of extend_pair: u = (U o i+ - U o i-)/2, v = (U o i+ + U o i-)/2.
    """
    if U.shape != (dd.doubled.n,):
        raise ValueError(f"field must have shape ({dd.doubled.n},)")
    up = U[dd.embed_plus]
    um = U[dd.embed_minus]
    return 0.5 * (up - um), 0.5 * (up + um)


def extend_eigenfunction(dd: DoubleDomain, e: np.ndarray, bc: BoundaryCondition) -> np.ndarray:
    """Odd (Dirichlet) or even (Neumann) extension, unit-norm on the circle."""
    if bc is BoundaryCondition.DIRICHLET:
        ext = extend_pair(dd, e, np.zeros_like(e))
    elif bc is BoundaryCondition.NEUMANN:
        ext = extend_pair(dd, np.zeros_like(e), e)
    else:
        raise ValueError("only wall problems extend; got periodic")
    return ext / l2_norm(dd.doubled, ext)


def lift_region(dd: DoubleDomain, region: ControlRegion) -> ControlRegion:
    """Carry a control region to the plus copy only; the mirror stays silent."""
    mask = np.zeros(dd.doubled.n, dtype=bool)
    mask[dd.embed_plus[region.mask]] = True
    return ControlRegion(mask=mask, measure=dd.doubled.h * int(mask.sum()))


def extended_eigenbasis(dd: DoubleDomain, basis_d: EigenBasis, basis_n: EigenBasis) -> EigenBasis:
    """Merge the extended wall eigenbases into one circle basis, ascending.

    The 2n extensions are mutually weighted-orthonormal (odd against even
    cancels across the two copies), so this is a complete eigenbasis of the
    periodic operator without touching its multiplicity-2 eigenspaces.
    """
    if basis_d.bc is not BoundaryCondition.DIRICHLET or basis_n.bc is not BoundaryCondition.NEUMANN:
        raise ValueError("pass the Dirichlet basis first and the Neumann basis second")
    n = dd.base.n
    cols = np.empty((2 * n, 2 * n))
    for k in range(n):
        cols[:, k] = extend_eigenfunction(dd, basis_d.vectors[:, k], BoundaryCondition.DIRICHLET)
        cols[:, n + k] = extend_eigenfunction(dd, basis_n.vectors[:, k], BoundaryCondition.NEUMANN)
    vals = np.concatenate([basis_d.eigenvalues, basis_n.eigenvalues])
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    return EigenBasis(
        bc=BoundaryCondition.PERIODIC,
        eigenvalues=vals,
        frequencies=np.sqrt(np.maximum(vals, 0.0)),
        vectors=cols[:, order],
        grid=dd.doubled,
    )
