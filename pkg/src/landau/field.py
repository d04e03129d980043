"""Sampled fields on the velocity grid and the discrete norms built on them.

All reductions go through numpy's pairwise summation (np.sum on contiguous
arrays), which is deterministic run to run for a fixed shape, so reports and
CSV outputs are reproducible bit for bit under a fixed seed.

Differences wrap periodically; admissible fields carry a decaying envelope
that keeps the wrap error below quadrature tolerance.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRatioError, GridMismatchError
from .grid import AXIS_OF_COMPONENT, VelocityGrid


@dataclass
class ScalarField:
    grid: VelocityGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise GridMismatchError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def copy(self):
        return ScalarField(self.grid, self.values.copy())

    def __add__(self, other):
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return ScalarField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def is_finite(self):
        return bool(np.isfinite(self.values).all())


@dataclass
class VectorField:
    grid: VelocityGrid
    comps: np.ndarray  # shape (3, N, N, N)

    def __post_init__(self):
        if self.comps.shape != (3,) + self.grid.shape:
            raise GridMismatchError(
                f"comps shape {self.comps.shape} does not match grid {self.grid.shape}"
            )

    def __add__(self, other):
        _check_same_grid(self, other)
        return VectorField(self.grid, self.comps + other.comps)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return VectorField(self.grid, self.comps - other.comps)


@dataclass(frozen=True)
class WeightedNormSpec:
    """Weighted Lebesgue norm ||<v>^ell f||_{L^p}; p in {2, 3, inf}."""

    p: float
    ell: float = 0.0

    def __post_init__(self):
        if self.p not in (2, 3, math.inf):
            raise ValueError(f"p must be 2, 3 or inf, got {self.p}")


def zeros(grid):
    return ScalarField(grid, np.zeros(grid.shape))


def from_function(grid, fn):
    """Sample fn(vx, vy, vz) at the cell centers."""
    vx, vy, vz = grid.coords
    return ScalarField(grid, np.asarray(fn(vx, vy, vz), dtype=float))


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grids differ: {a.grid} vs {b.grid}")


def inner_product(f, g):
    """L^2 inner product (f, g) = sum f_i g_i h^3."""
    _check_same_grid(f, g)
    return float(np.sum(f.values * g.values)) * f.grid.cell_volume


def l2_norm(f):
    return math.sqrt(max(inner_product(f, f), 0.0))


def weighted_norm(f, spec_or_p, ell=None):
    """Discrete ||<v>^ell f||_{L^p} over the grid.

    Accepts either a WeightedNormSpec or (p, ell) directly.  Finite p uses
    the cell quadrature (sum <v>^{p ell} |f|^p h^3)^{1/p}; p = inf is the
    weighted max over nodes.
    """
    if isinstance(spec_or_p, WeightedNormSpec):
        p, ell = spec_or_p.p, spec_or_p.ell
    else:
        p = spec_or_p
        if ell is None:
            ell = 0.0
    grid = f.grid
    w = grid.bracket_weight(ell)
    if p == math.inf:
        return float(np.max(w * np.abs(f.values)))
    if p not in (2, 3):
        raise ValueError(f"p must be 2, 3 or inf, got {p}")
    integrand = (w * np.abs(f.values)) ** p
    return float(np.sum(integrand) * grid.cell_volume) ** (1.0 / p)


def gradient(f):
    """Second-order centered gradient with periodic wrap."""
    g = f.grid
    out = np.empty((3,) + g.shape)
    inv2h = 1.0 / (2.0 * g.h)
    for j in range(3):
        ax = AXIS_OF_COMPONENT[j]
        out[j] = (np.roll(f.values, -1, axis=ax) - np.roll(f.values, 1, axis=ax)) * inv2h
    return VectorField(g, out)


def divergence(V):
    """Centered periodic divergence, the negative adjoint of `gradient`."""
    g = V.grid
    inv2h = 1.0 / (2.0 * g.h)
    out = np.zeros(g.shape)
    for j in range(3):
        ax = AXIS_OF_COMPONENT[j]
        out += (np.roll(V.comps[j], -1, axis=ax) - np.roll(V.comps[j], 1, axis=ax)) * inv2h
    return ScalarField(g, out)


def project_parallel(G):
    """Split G into components parallel and perpendicular to v at each node.

    (P_v G)_j = (G . v) v_j / |v|^2.  The split is exact: parallel + perp
    reconstructs G, and perp . v vanishes to round-off.
    """
    grid = G.grid
    ex, ey, ez = grid.unit_vectors
    dot = G.comps[0] * ex + G.comps[1] * ey + G.comps[2] * ez
    par = np.empty_like(G.comps)
    par[0] = dot * ex
    par[1] = dot * ey
    par[2] = dot * ez
    return VectorField(grid, par), VectorField(grid, G.comps - par)


def a_norm_sq(f, coeffs):
    """Square of the anisotropic energy norm.

    ||f||_A^2 = sum_{jk} int ( abar_jk d_j f d_k f + (1/4) abar_jk v_j v_k f^2 ) dv,
    with the centered gradient and the precomputed zeroth-order weight
    c1 = (1/4) abar_jk v_j v_k.
    """
    if coeffs.grid != f.grid:
        raise GridMismatchError("coefficients live on a different grid")
    G = gradient(f)
    quad = coeffs.abar.quadratic_form(G)
    total = np.sum(quad) + np.sum(coeffs.c1 * f.values * f.values)
    return float(total) * f.grid.cell_volume


def a_norm(f, coeffs):
    return math.sqrt(max(a_norm_sq(f, coeffs), 0.0))


def envelope_boundary_ratio(f):
    """max |f| on the outermost cell shell relative to max |f| overall."""
    vals = np.abs(f.values)
    peak = float(vals.max())
    if peak == 0.0:
        return 0.0
    shell = np.zeros(f.grid.shape, dtype=bool)
    shell[0, :, :] = shell[-1, :, :] = True
    shell[:, 0, :] = shell[:, -1, :] = True
    shell[:, :, 0] = shell[:, :, -1] = True
    return float(vals[shell].max()) / peak


def random_field(grid, seed, bandlimit=8, envelope_width=1.25, spectral_decay=0.0):
    """Deterministic rough test field: band-limited noise under a Gaussian envelope.

    Draws a full low-frequency trigonometric mix from a seeded generator
    (the draw count is independent of the band mask, so fields with the
    same seed but different bandlimits stay comparable), optionally reddens
    the spectrum by (1 + |m|^2)^{-decay/2}, applies the envelope
    exp(-|v|^2 / (2 w^2)) and normalizes to unit L^2 norm.
    """
    if not 0 < bandlimit < grid.N // 2:
        raise ValueError(f"bandlimit must be in (0, N/2), got {bandlimit}")
    rng = np.random.default_rng(seed)
    n = grid.N
    spec = rng.standard_normal((n, n, n // 2 + 1)) + 1j * rng.standard_normal((n, n, n // 2 + 1))
    k1 = np.abs(np.fft.fftfreq(n) * n)
    kr = np.arange(n // 2 + 1)
    mask = (
        (k1[:, None, None] <= bandlimit)
        & (k1[None, :, None] <= bandlimit)
        & (kr[None, None, :] <= bandlimit)
    )
    if spectral_decay != 0.0:
        m2 = (k1[:, None, None] ** 2 + k1[None, :, None] ** 2
              + kr[None, None, :] ** 2)
        spec = spec * (1.0 + m2) ** (-0.5 * spectral_decay)
    spec = np.where(mask, spec, 0.0)
    vals = np.fft.irfftn(spec, s=grid.shape, axes=(0, 1, 2))
    if envelope_width > 0:
        vals = vals * np.exp(-grid.radius_sq / (2.0 * envelope_width ** 2))
    nrm = math.sqrt(float(np.sum(vals * vals)) * grid.cell_volume)
    if nrm < 1e-14:
        raise DegenerateRatioError("random field collapsed to zero")
    return ScalarField(grid, vals / nrm)
