"""Shared construction helpers for the test suite."""

import numpy as np

from simulheat.doubling import build_double, extended_eigenbasis, lift_region
from simulheat.grid import make_coefficients, make_uniform_grid
from simulheat.operators import BoundaryCondition, assemble_laplacian, eigendecompose

D = BoundaryCondition.DIRICHLET
N = BoundaryCondition.NEUMANN
P = BoundaryCondition.PERIODIC


def problem(n, length=1.0, kappa=1.0, a=1.0):
    """Grid plus matching coefficients; keeps the shared-kappa contract honest."""
    grid = make_uniform_grid(n, length, kappa)
    return grid, make_coefficients(grid, kappa, a)


def wall_basis(n, bc, length=1.0, kappa=1.0, a=1.0):
    grid, coeffs = problem(n, length, kappa, a)
    return eigendecompose(assemble_laplacian(grid, coeffs, bc))


def double_setup(n, length=1.0, kappa=1.0, a=1.0):
    """(grid, coeffs, dd, basis_d, basis_n, extended circle basis)."""
    grid, coeffs = problem(n, length, kappa, a)
    dd = build_double(grid, coeffs)
    basis_d = eigendecompose(assemble_laplacian(grid, coeffs, D))
    basis_n = eigendecompose(assemble_laplacian(grid, coeffs, N))
    ext = extended_eigenbasis(dd, basis_d, basis_n)
    return grid, coeffs, dd, basis_d, basis_n, ext


def unit_pair(grid, seed):
    """Two weighted-unit random fields on grid."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(grid.n)
    v = rng.standard_normal(grid.n)
    wu = float(np.sqrt(np.sum(grid.weights * u * u)))
    wv = float(np.sqrt(np.sum(grid.weights * v * v)))
    return u / wu, v / wv
