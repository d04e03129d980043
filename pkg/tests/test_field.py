import math

import numpy as np
import pytest

from landau.errors import GridMismatchError
from landau.field import (ScalarField, WeightedNormSpec, a_norm, a_norm_sq,
                          divergence, from_function, gradient, inner_product,
                          l2_norm, project_parallel, random_field,
                          weighted_norm, zeros)
from landau.grid import VelocityGrid
from tests.conftest import gaussian_field


def test_grid_basics():
    g = VelocityGrid(R=8.0, N=32)
    assert g.h == pytest.approx(0.5)
    assert g.axis[0] == pytest.approx(-7.75)
    assert g.axis[-1] == pytest.approx(7.75)
    # cell centering leaves no node at the origin
    assert g.radius.min() > 0.4 * g.h
    with pytest.raises(ValueError):
        VelocityGrid(R=8.0, N=14)
    with pytest.raises(ValueError):
        VelocityGrid(R=8.0, N=17)


def test_grid_index_order():
    g = VelocityGrid(R=8.0, N=16)
    vx = np.asarray(g.component(0))
    # flat order (iz*N + iy)*N + ix with ix fastest
    flat = vx.reshape(-1)
    assert flat[1] - flat[0] == pytest.approx(g.h)


def test_weighted_norm_gaussian_value():
    # || e^{-|v|^2/2} ||_{L^2} = pi^{3/4} on a fine wide grid
    g = VelocityGrid(R=8.0, N=64)
    f = gaussian_field(g, width=1.0)
    assert weighted_norm(f, 2, 0.0) == pytest.approx(math.pi ** 0.75, abs=1e-4)


def test_weighted_norm_basics(small_grid):
    f = zeros(small_grid)
    assert weighted_norm(f, 2, 0.5) == 0.0
    g = gaussian_field(small_grid)
    # monotonicity in the weight exponent
    assert weighted_norm(g, 2, 0.25) <= weighted_norm(g, 2, 1.0)
    # homogeneity
    assert weighted_norm(3.0 * g, 2, -0.5) == pytest.approx(
        3.0 * weighted_norm(g, 2, -0.5), rel=1e-13)
    # p = inf is the weighted max
    spec = WeightedNormSpec(p=math.inf, ell=0.0)
    assert weighted_norm(g, spec) == pytest.approx(float(np.max(g.values)), rel=1e-14)
    with pytest.raises(ValueError):
        WeightedNormSpec(p=4)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_norm_triangle_inequality(small_grid, seed):
    f = random_field(small_grid, seed, bandlimit=5)
    g = random_field(small_grid, seed + 100, bandlimit=5)
    for ell in (-0.5, 0.0, 1.0):
        lhs = weighted_norm(f + g, 2, ell)
        rhs = weighted_norm(f, 2, ell) + weighted_norm(g, 2, ell)
        assert lhs <= rhs * (1.0 + 1e-12)


def test_gradient_gaussian_oracle():
    # grad e^{-|v|^2/2} = -v e^{-|v|^2/2}, second order in h
    errs = []
    for n in (24, 48):
        g = VelocityGrid(R=6.0, N=n)
        f = gaussian_field(g, width=1.0)
        grad = gradient(f)
        err = 0.0
        for j in range(3):
            exact = -np.asarray(g.component(j)) * f.values
            err = max(err, float(np.max(np.abs(grad.comps[j] - exact))))
        errs.append(err)
    assert 3.4 <= errs[0] / errs[1] <= 4.6


def test_gradient_constant_field(small_grid):
    c = ScalarField(small_grid, np.full(small_grid.shape, 2.5))
    grad = gradient(c)
    assert np.all(grad.comps == 0.0)


def test_divergence_is_negative_adjoint(small_grid):
    f = random_field(small_grid, 5, bandlimit=5)
    V = gradient(random_field(small_grid, 6, bandlimit=5))
    lhs = inner_product(divergence(V), f)
    rhs = -sum(
        float(np.sum(V.comps[j] * gradient(f).comps[j]))
        for j in range(3)
    ) * small_grid.cell_volume
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_projection_split(small_grid):
    G = gradient(random_field(small_grid, 7, bandlimit=5))
    par, perp = project_parallel(G)
    # exact reconstruction
    assert np.allclose(par.comps + perp.comps, G.comps, atol=1e-15)
    # perp orthogonal to v at every node
    vx, vy, vz = small_grid.coords
    dot = perp.comps[0] * vx + perp.comps[1] * vy + perp.comps[2] * vz
    scale = np.sqrt(np.sum(G.comps ** 2, axis=0)) * small_grid.radius + 1e-300
    assert float(np.max(np.abs(dot) / scale)) <= 1e-12
    # idempotence
    par2, _ = project_parallel(par)
    assert np.allclose(par2.comps, par.comps, atol=1e-13)


def test_projection_examples(small_grid):
    # radial field projects to itself
    vx, vy, vz = (np.asarray(c) for c in small_grid.coords)
    from landau.field import VectorField
    V = VectorField(small_grid, np.stack([vx, vy, vz]))
    par, perp = project_parallel(V)
    assert np.allclose(par.comps, V.comps, rtol=1e-12)
    assert np.max(np.abs(perp.comps)) <= 1e-12 * small_grid.R


def test_inner_product_and_symmetry(small_grid):
    f = random_field(small_grid, 8, bandlimit=5)
    assert inner_product(f, f) == pytest.approx(weighted_norm(f, 2, 0.0) ** 2,
                                                rel=1e-12)
    # odd x even parity kills the integral
    vx = np.asarray(small_grid.component(0))
    odd = ScalarField(small_grid, vx * np.exp(-small_grid.radius_sq))
    even = ScalarField(small_grid, np.exp(-small_grid.radius_sq / 2.0))
    assert abs(inner_product(odd, even)) <= 1e-14


@pytest.mark.parametrize("seed", [10, 11, 12])
def test_cauchy_schwarz(small_grid, seed):
    f = random_field(small_grid, seed, bandlimit=5)
    g = random_field(small_grid, seed + 50, bandlimit=5)
    assert abs(inner_product(f, g)) <= l2_norm(f) * l2_norm(g) * (1 + 1e-12)


def test_grid_mismatch_raises(small_grid):
    other = VelocityGrid(R=5.0, N=16)
    f = zeros(small_grid)
    g = zeros(other)
    with pytest.raises(GridMismatchError):
        inner_product(f, g)


def test_random_field_determinism(small_grid):
    f1 = random_field(small_grid, 42, bandlimit=5)
    f2 = random_field(small_grid, 42, bandlimit=5)
    assert np.array_equal(f1.values, f2.values)
    f3 = random_field(small_grid, 43, bandlimit=5)
    assert not np.array_equal(f1.values, f3.values)
    # unit L2 normalization
    assert l2_norm(f1) == pytest.approx(1.0, abs=1e-12)


def test_random_field_envelope_concentration():
    # shrinking the envelope concentrates mass near the origin, where
    # <v> ~ 1, so the weighted and plain norms coincide in the limit;
    # needs cells fine enough to resolve the shrinking support
    grid = VelocityGrid(R=4.0, N=32)
    gamma = -1.0
    ratios = []
    for w in (2.0, 0.5, 0.2):
        f = random_field(grid, 1, bandlimit=5, envelope_width=w)
        ratios.append(weighted_norm(f, 2, 1.0 + gamma / 2.0))
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[-1] == pytest.approx(1.0, abs=0.05)


def test_a_norm_properties(small_grid, small_coeffs):
    z = zeros(small_grid)
    assert a_norm(z, small_coeffs) == 0.0
    f = random_field(small_grid, 21, bandlimit=5)
    assert a_norm(2.5 * f, small_coeffs) == pytest.approx(
        2.5 * a_norm(f, small_coeffs), rel=1e-12)


@pytest.mark.parametrize("seed", [30, 31])
def test_a_norm_assembly_consistency(small_grid, small_coeffs, seed):
    # component-array assembly vs per-node matrices agree to round-off
    f = random_field(small_grid, seed, bandlimit=5)
    G = gradient(f)
    direct = a_norm_sq(f, small_coeffs)
    mats = small_coeffs.abar.as_matrices()
    gvecs = G.comps.reshape(3, -1).T
    quad = np.einsum("nij,ni,nj->n", mats, gvecs, gvecs, optimize=False)
    alt = (float(np.sum(quad))
           + float(np.sum(small_coeffs.c1 * f.values ** 2))) * small_grid.cell_volume
    assert direct == pytest.approx(alt, rel=1e-12)


def test_a_norm_controls_weighted_norms(small_grid, small_coeffs):
    # ||f||_A >= C (||grad f||_{2,g/2} + ||f||_{2,1+g/2}) with positive C
    gamma = small_coeffs.params.gamma
    worst = math.inf
    for seed in range(8):
        f = random_field(small_grid, seed, bandlimit=5)
        G = gradient(f)
        gn = math.sqrt(sum(
            float(np.sum(small_grid.bracket_weight(gamma) * G.comps[j] ** 2))
            for j in range(3)) * small_grid.cell_volume)
        denom = gn + weighted_norm(f, 2, 1.0 + gamma / 2.0)
        worst = min(worst, a_norm(f, small_coeffs) / denom)
    assert worst > 0.0


def test_from_function(small_grid):
    f = from_function(small_grid, lambda x, y, z: x + 2 * y + 3 * z)
    vx, vy, vz = small_grid.coords
    assert np.allclose(f.values, vx + 2 * vy + 3 * vz)
