"""Cutoffs, projections, and the three norms."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from common import D, N, wall_basis
from simulheat.grid import make_uniform_grid, region_from_intervals
from simulheat.operators import analytic_eigenbasis
from simulheat.spectral import (
    SpectralCutoff,
    coefficients,
    l1_norm_on,
    l2_norm,
    make_cutoff,
    project,
    sup_norm,
)


def test_cutoff_counts_include_equality():
    basis = wall_basis(8, D)
    assert make_cutoff(basis, 0.0).count == 0
    assert make_cutoff(basis, float(basis.frequencies[2])).count == 3
    assert make_cutoff(basis, float(basis.frequencies[2]) - 1e-9).count == 2
    assert make_cutoff(basis, 1e9).count == 8
    neumann = wall_basis(8, N)
    assert make_cutoff(neumann, 0.0).count == 1  # kernel mode sits at frequency 0


def test_cutoff_validation():
    with pytest.raises(ValueError):
        SpectralCutoff(lam=-1.0, count=0)
    with pytest.raises(ValueError):
        SpectralCutoff(lam=1.0, count=-2)


def test_projection_is_identity_above_top_frequency():
    basis = wall_basis(16, D, kappa=lambda x: 1.0 + x)
    rng = np.random.default_rng(2)
    u = rng.standard_normal(16)
    cut = make_cutoff(basis, float(basis.frequencies[-1]))
    assert_allclose(project(basis, cut, u), u, rtol=0, atol=1e-12)


def test_projection_at_zero_cutoff():
    rng = np.random.default_rng(5)
    u = rng.standard_normal(16)
    bd = wall_basis(16, D)
    assert_allclose(project(bd, make_cutoff(bd, 0.0), u), 0.0, atol=0)
    bn = wall_basis(16, N)
    mean = np.sum(bn.grid.weights * u) / np.sum(bn.grid.weights)
    assert_allclose(project(bn, make_cutoff(bn, 0.0), u), mean, rtol=0, atol=1e-13)


def test_projection_idempotent_and_self_adjoint():
    basis = wall_basis(24, N, kappa=lambda x: 2.0 - x)
    cut = make_cutoff(basis, float(basis.frequencies[9]))
    rng = np.random.default_rng(0)
    u = rng.standard_normal(24)
    v = rng.standard_normal(24)
    pu = project(basis, cut, u)
    assert_allclose(project(basis, cut, pu), pu, rtol=0, atol=1e-12)
    w = basis.grid.weights
    assert abs(np.sum(w * pu * v) - np.sum(w * u * project(basis, cut, v))) <= 1e-12


def test_projection_pythagoras():
    basis = wall_basis(32, D)
    cut = make_cutoff(basis, float(basis.frequencies[10]))
    u = np.random.default_rng(1).standard_normal(32)
    pu = project(basis, cut, u)
    total = l2_norm(basis.grid, u) ** 2
    parts = l2_norm(basis.grid, pu) ** 2 + l2_norm(basis.grid, u - pu) ** 2
    assert abs(total - parts) <= 1e-10 * total


def test_projection_ranges_are_nested():
    basis = wall_basis(32, D)
    lo = make_cutoff(basis, float(basis.frequencies[4]))
    hi = make_cutoff(basis, float(basis.frequencies[11]))
    u = np.random.default_rng(8).standard_normal(32)
    plo = project(basis, lo, u)
    assert_allclose(project(basis, hi, plo), plo, rtol=0, atol=1e-12)


def test_mode_coefficients_roundtrip():
    basis = wall_basis(20, D, kappa=lambda x: 1.0 + 0.5 * x)
    rng = np.random.default_rng(3)
    c = rng.standard_normal(20)
    u = basis.vectors @ c
    assert_allclose(coefficients(basis, u), c, rtol=0, atol=1e-12)


def test_norms_on_single_cell_indicator():
    g = make_uniform_grid(4)
    u = np.zeros(4)
    u[2] = 1.0
    region = region_from_intervals(g, [(0.5, 0.75)])
    assert sup_norm(u) == 1.0
    assert l1_norm_on(g, u, region) == 0.25
    assert l2_norm(g, u) == 0.5


def test_zero_field_norms():
    g = make_uniform_grid(6)
    z = np.zeros(6)
    region = region_from_intervals(g, [(0.0, 1.0)])
    assert sup_norm(z) == 0.0
    assert l1_norm_on(g, z, region) == 0.0
    assert l2_norm(g, z) == 0.0


def test_norms_match_direct_formulas():
    g = make_uniform_grid(33, kappa=lambda x: 1.0 + x)
    u = np.random.default_rng(9).standard_normal(33)
    region = region_from_intervals(g, [(0.2, 0.6)])
    assert sup_norm(u) == np.max(np.abs(u))
    m = region.mask
    assert_allclose(l1_norm_on(g, u, region), np.sum(g.weights[m] * np.abs(u[m])), rtol=1e-14)
    assert_allclose(l2_norm(g, u), np.sqrt(np.sum(g.weights * u**2)), rtol=1e-14)


def test_first_mode_sup_to_mass_ratio_approaches_half_pi():
    # continuum sin(pi x): sup 1, integral of |.| is 2/pi, ratio pi/2
    g = make_uniform_grid(4096)
    basis = analytic_eigenbasis(g, D)
    whole = region_from_intervals(g, [(0.0, 1.0)])
    e1 = basis.vectors[:, 0]
    ratio = sup_norm(e1) / l1_norm_on(g, e1, whole)
    assert abs(ratio - np.pi / 2.0) <= 1e-3


def test_project_shape_guard():
    basis = wall_basis(8, D)
    with pytest.raises(ValueError):
        project(basis, make_cutoff(basis, 10.0), np.zeros(9))
