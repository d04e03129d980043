"""Collision kernel, Maxwellian background, and precomputed coefficient fields.

The interaction kernel is

    a_jk(v) = (delta_jk |v|^2 - v_j v_k) |v|^gamma,   -3 < gamma < 0,

a positive semidefinite projection off the v direction scaled by |v|^{gamma+2}.
The smoothed diffusion matrix abar = a * mu (Gaussian-weighted convolution) is
evaluated by a singularity-centered spherical product quadrature, reduced per
node to the two rotation-invariant radial profiles (eigenvalue along v and
transverse to it), which is exactly the product rule with the polar axis
aligned to v and the azimuthal sum carried out in closed form.
"""

import math
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property

import numpy as np

from .errors import CrossCheckError, DomainError, QuadratureError
from .field import ScalarField, VectorField
from .grid import AXIS_OF_COMPONENT, VelocityGrid

SYM_COMPONENTS = ("xx", "yy", "zz", "xy", "xz", "yz")
_SYM_INDEX = {(0, 0): 0, (1, 1): 1, (2, 2): 2,
              (0, 1): 3, (1, 0): 3, (0, 2): 4, (2, 0): 4, (1, 2): 5, (2, 1): 5}


@dataclass(frozen=True)
class KernelParams:
    """Soft-potential exponent and Maxwellian normalization choice."""

    gamma: float
    mu_normalized: bool = True

    def __post_init__(self):
        if not -3.0 < self.gamma < 0.0:
            raise ValueError(
                f"gamma={self.gamma} outside the soft potential range (-3, 0)"
            )

    @property
    def mu_prefactor(self):
        p = (2.0 * math.pi) ** 1.5
        return 1.0 / p if self.mu_normalized else p


@dataclass(frozen=True)
class QuadratureSpec:
    """Orders for the abar quadrature: Gauss-Legendre points per radial panel,
    Gauss-Legendre points in cos(theta), and the doubling-check tolerance."""

    radial_order: int = 32
    angular_order: int = 64
    rtol: float = 1e-6

    def __post_init__(self):
        if self.radial_order < 32:
            raise ValueError(f"radial_order must be >= 32, got {self.radial_order}")
        if self.angular_order < 26:
            raise ValueError(f"angular_order must be >= 26, got {self.angular_order}")
        if not self.rtol > 0:
            raise ValueError("rtol must be positive")


# ---------------------------------------------------------------------------
# pointwise kernel evaluation
# ---------------------------------------------------------------------------

def eval_kernel_matrix(v, params):
    """Kernel matrix a(v) = |v|^{gamma+2} (I - vhat vhat^T) at a single point."""
    v = np.asarray(v, dtype=float)
    n2 = float(v @ v)
    if n2 == 0.0:
        raise DomainError("kernel matrix is singular at v = 0")
    ng = n2 ** (0.5 * params.gamma)
    return ng * (n2 * np.eye(3) - np.outer(v, v))


def eval_kernel_divergence(v, params):
    """Row divergence b_j(v) = sum_k d_k a_jk(v), assembled term by term."""
    v = np.asarray(v, dtype=float)
    n2 = float(v @ v)
    if n2 == 0.0:
        raise DomainError("kernel divergence is singular at v = 0")
    g = params.gamma
    ng = n2 ** (0.5 * g)
    # d_k[delta_jk |v|^{g+2}] - d_k[v_j v_k |v|^g] summed over k
    return (g + 2.0) * ng * v - (1.0 + 3.0 + g) * ng * v


def kernel_matrix_batch(points, gamma):
    """a_jk at an array of points, shape (..., 3) -> (..., 3, 3)."""
    pts = np.asarray(points, dtype=float)
    n2 = np.sum(pts * pts, axis=-1)
    ng = n2 ** (0.5 * gamma)
    out = -ng[..., None, None] * (pts[..., :, None] * pts[..., None, :])
    idx = np.arange(3)
    out[..., idx, idx] += (ng * n2)[..., None]
    return out


def kernel_first_derivatives(points, gamma):
    """d_l a_jk at points (..., 3) -> (..., 3, 3, 3) indexed [l, j, k]."""
    pts = np.asarray(points, dtype=float)
    n2 = np.sum(pts * pts, axis=-1)
    ng = n2 ** (0.5 * gamma)
    ngm2 = n2 ** (0.5 * gamma - 1.0)
    eye = np.eye(3)
    vl = pts[..., :, None, None]
    vj = pts[..., None, :, None]
    vk = pts[..., None, None, :]
    t1 = (gamma + 2.0) * ng[..., None, None, None] * eye[None, :, :] * vl
    t2 = -ng[..., None, None, None] * (
        eye[:, :, None][None] * vk + eye[:, None, :][None] * vj
    )
    t3 = -gamma * ngm2[..., None, None, None] * vj * vk * vl
    return t1 + t2 + t3


def kernel_second_derivatives(points, gamma):
    """d_m d_l a_jk at points (..., 3) -> (..., 3, 3, 3, 3) indexed [m, l, j, k]."""
    pts = np.asarray(points, dtype=float)
    n2 = np.sum(pts * pts, axis=-1)
    ng = n2 ** (0.5 * gamma)
    ngm2 = n2 ** (0.5 * gamma - 1.0)
    ngm4 = n2 ** (0.5 * gamma - 2.0)
    eye = np.eye(3)
    v = pts
    sh = pts.shape[:-1]
    out = np.zeros(sh + (3, 3, 3, 3))
    for m in range(3):
        for l in range(3):
            for j in range(3):
                for k in range(3):
                    t = (gamma + 2.0) * eye[j, k] * (
                        gamma * ngm2 * v[..., m] * v[..., l] + ng * eye[l, m]
                    )
                    t -= (eye[j, l] * eye[k, m] + eye[k, l] * eye[j, m]) * ng
                    t -= gamma * ngm2 * (eye[j, l] * v[..., k] + eye[k, l] * v[..., j]) * v[..., m]
                    t -= gamma * (
                        (eye[j, m] * v[..., k] + eye[k, m] * v[..., j]) * v[..., l] * ngm2
                        + v[..., j] * v[..., k]
                        * ((gamma - 2.0) * ngm4 * v[..., m] * v[..., l] + ngm2 * eye[l, m])
                    )
                    out[..., m, l, j, k] = t
    return out


def eval_maxwellian(v, params):
    """Gaussian background mu(v); unit mass under the default normalization."""
    v = np.asarray(v, dtype=float)
    return params.mu_prefactor * math.exp(-0.5 * float(v @ v))


def maxwellian_field(grid, params):
    return ScalarField(grid, params.mu_prefactor * np.exp(-0.5 * grid.radius_sq))


def sqrt_maxwellian_field(grid, params):
    return ScalarField(
        grid, math.sqrt(params.mu_prefactor) * np.exp(-0.25 * grid.radius_sq)
    )


def collision_invariant_basis(grid, params):
    """Orthonormal discrete span of the collision invariants
    mu^{1/2} (1, v, |v|^2): the null directions of the linearized operator.

    Components along these directions neither decay nor grow under the
    free flow, so reference experiments usually remove them from data and
    forcing."""
    from .field import inner_product, l2_norm

    mh = sqrt_maxwellian_field(grid, params).values
    candidates = [mh]
    candidates += [np.asarray(grid.component(j)) * mh for j in range(3)]
    candidates.append(grid.radius_sq * mh)
    basis = []
    for c in candidates:
        f = ScalarField(grid, c.copy())
        for b in basis:
            f = f - inner_product(f, b) * b
        basis.append((1.0 / l2_norm(f)) * f)
    return basis


def project_off_invariants(f, params):
    """Remove the collision-invariant components; preserves roughness."""
    from .field import inner_product

    for b in collision_invariant_basis(f.grid, params):
        f = f - inner_product(f, b) * b
    return f


# ---------------------------------------------------------------------------
# symmetric matrix field
# ---------------------------------------------------------------------------

@dataclass
class SymMatrixField:
    """Symmetric 3x3 matrix sampled on the grid; six component arrays
    (xx, yy, zz, xy, xz, yz), units of |v|^{gamma+2}."""

    grid: VelocityGrid
    comps: np.ndarray  # shape (6, N, N, N)

    def component(self, j, k):
        return self.comps[_SYM_INDEX[(j, k)]]

    def apply(self, V):
        """Matrix-vector product (A V)_j = sum_k A_jk V_k at every node."""
        out = np.empty_like(V.comps)
        for j in range(3):
            acc = self.component(j, 0) * V.comps[0]
            acc += self.component(j, 1) * V.comps[1]
            acc += self.component(j, 2) * V.comps[2]
            out[j] = acc
        return VectorField(self.grid, out)

    def quadratic_form(self, V):
        """sum_jk A_jk V_j V_k at every node."""
        xx, yy, zz, xy, xz, yz = self.comps
        gx, gy, gz = V.comps
        return (
            xx * gx * gx + yy * gy * gy + zz * gz * gz
            + 2.0 * (xy * gx * gy + xz * gx * gz + yz * gy * gz)
        )

    def quadratic_form_pair(self, V, W):
        """sum_jk A_jk V_j W_k at every node (symmetric in V, W)."""
        xx, yy, zz, xy, xz, yz = self.comps
        vx, vy, vz = V.comps
        wx, wy, wz = W.comps
        return (
            xx * vx * wx + yy * vy * wy + zz * vz * wz
            + xy * (vx * wy + vy * wx)
            + xz * (vx * wz + vz * wx)
            + yz * (vy * wz + vz * wy)
        )

    def as_matrices(self):
        """Dense (N^3, 3, 3) view for eigenvalue work."""
        n3 = self.grid.N ** 3
        m = np.empty((n3, 3, 3))
        flat = self.comps.reshape(6, n3)
        m[:, 0, 0], m[:, 1, 1], m[:, 2, 2] = flat[0], flat[1], flat[2]
        m[:, 0, 1] = m[:, 1, 0] = flat[3]
        m[:, 0, 2] = m[:, 2, 0] = flat[4]
        m[:, 1, 2] = m[:, 2, 1] = flat[5]
        return m

    def eigenvalues(self):
        """Node-wise eigenvalues, ascending, shape (N^3, 3)."""
        return np.linalg.eigvalsh(self.as_matrices())

    def min_eigenvalue_ratio(self):
        """min eigenvalue over the grid, normalized by the local trace."""
        eig = self.eigenvalues()
        trace = self.comps[0] + self.comps[1] + self.comps[2]
        scale = np.maximum(trace.reshape(-1), 1e-300)
        return float(np.min(eig[:, 0] / scale))


# ---------------------------------------------------------------------------
# abar quadrature
# ---------------------------------------------------------------------------

def _radial_rule(r_max, n_per_panel):
    """Composite Gauss-Legendre rule on [0, r_max].

    First panel [0, b] is warped r = b u^2 to absorb the integrable
    r^{gamma+4} endpoint behavior; the rest is split into panels of width
    <= 4 so the Gaussian radial factor is resolved everywhere.
    """
    x, w = np.polynomial.legendre.leggauss(n_per_panel)
    nodes = []
    weights = []
    b = min(2.0, r_max)
    u = 0.5 * (x + 1.0)
    nodes.append(b * u * u)
    weights.append(0.5 * w * 2.0 * b * u)
    lo = b
    while lo < r_max - 1e-12:
        hi = min(lo + 4.0, r_max)
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        nodes.append(mid + half * x)
        weights.append(half * w)
        lo = hi
    return np.concatenate(nodes), np.concatenate(weights)


def _abar_profiles(s_values, params, radial_order, angular_order, r_max):
    """Parallel/transverse eigenvalue profiles of abar at radii s_values.

    With the polar axis along v the integrand factorizes; the azimuthal sum
    of the product rule is exact for the degree-2 dependence and leaves

        l_par(s)  = 2 pi C_mu int r^{g+4} e^{-(s^2+r^2)/2} int (1-t^2)   e^{s r t} dt dr
        l_perp(s) = 2 pi C_mu int r^{g+4} e^{-(s^2+r^2)/2} int (1+t^2)/2 e^{s r t} dt dr
    """
    r, wr = _radial_rule(r_max, radial_order)
    t, wt = np.polynomial.legendre.leggauss(angular_order)
    radial_factor = wr * r ** (params.gamma + 4.0)
    wpar = wt * (1.0 - t * t)
    wperp = wt * 0.5 * (1.0 + t * t)
    pref = 2.0 * math.pi * params.mu_prefactor

    l_par = np.empty_like(s_values)
    l_perp = np.empty_like(s_values)
    chunk = max(1, int(4e6 // (r.size * t.size)))
    for lo in range(0, s_values.size, chunk):
        s = s_values[lo:lo + chunk][:, None, None]
        expo = np.exp(-0.5 * (s * s + r[None, :, None] ** 2) + s * r[None, :, None] * t[None, None, :])
        tpar = expo @ wpar
        tperp = expo @ wperp
        l_par[lo:lo + chunk] = pref * (tpar @ radial_factor)
        l_perp[lo:lo + chunk] = pref * (tperp @ radial_factor)
    return l_par, l_perp


def abar_profiles_at(s_values, params, quad):
    """Public profile evaluation with the order-doubling convergence check."""
    s = np.asarray(s_values, dtype=float)
    r_max = float(s.max()) + 8.0
    base = _abar_profiles(s, params, quad.radial_order, quad.angular_order, r_max)
    fine = _abar_profiles(s, params, 2 * quad.radial_order, quad.angular_order, r_max)
    scale = max(float(np.max(np.abs(fine[0]))), float(np.max(np.abs(fine[1]))))
    err = max(
        float(np.max(np.abs(fine[0] - base[0]))),
        float(np.max(np.abs(fine[1] - base[1]))),
    ) / scale
    if err > quad.rtol:
        raise QuadratureError(
            f"radial order doubling changed abar by {err:.3e} > rtol {quad.rtol:.1e}"
        )
    return fine


def compute_abar_field(grid, params, quad=QuadratureSpec()):
    """Smoothed diffusion matrix abar(v) = (a * mu)(v) on the grid.

    Isotropy of both factors reduces the grid evaluation to the radial
    profiles at the distinct node radii; the field is reassembled as
    l_par P_v + l_perp (I - P_v), symmetric positive semidefinite by
    construction.
    """
    r_flat = grid.radius.reshape(-1)
    uniq, inverse = np.unique(r_flat, return_inverse=True)
    l_par_u, l_perp_u = abar_profiles_at(uniq, params, quad)
    l_par = l_par_u[inverse].reshape(grid.shape)
    l_perp = l_perp_u[inverse].reshape(grid.shape)

    ex, ey, ez = grid.unit_vectors
    diff = l_par - l_perp
    comps = np.empty((6,) + grid.shape)
    comps[0] = l_perp + diff * ex * ex
    comps[1] = l_perp + diff * ey * ey
    comps[2] = l_perp + diff * ez * ez
    comps[3] = diff * ex * ey
    comps[4] = diff * ex * ez
    comps[5] = diff * ey * ez
    return SymMatrixField(grid, comps)


# ---------------------------------------------------------------------------
# scalar weights c1, c2
# ---------------------------------------------------------------------------

def compute_scalar_weights(abar, grid):
    """Zeroth-order weights of the diffusion operator.

    c1 = (1/4) sum_jk abar_jk v_j v_k  (nonnegative quadratic form)
    c2 = (1/2) sum_j d_j (sum_k abar_jk v_k)  by centered differences
         (second-order one-sided stencils on the box faces; the field
         abar.v does not decay, so periodic wrap would be wrong here).
    """
    vx, vy, vz = grid.coords
    V = VectorField(grid, np.stack([np.asarray(vx), np.asarray(vy), np.asarray(vz)]))
    c1 = 0.25 * abar.quadratic_form(V)
    W = abar.apply(V)
    c2 = np.zeros(grid.shape)
    for j in range(3):
        c2 += np.gradient(W.comps[j], grid.h, axis=AXIS_OF_COMPONENT[j], edge_order=2)
    return c1, 0.5 * c2


def crosscheck_c2(c2, grid, params, tables_padded):
    """Relative L^2 agreement of c2 with the convolution route
    (1/2) sum_k (sum_j d_j a_jk) * (v_k mu), evaluated without wrap
    on padded kernel tables."""
    from .operator import ConvolutionEngine  # local import avoids a cycle

    engine = ConvolutionEngine(tables_padded)
    mu = maxwellian_field(grid, params).values
    acc = np.zeros(grid.shape)
    for k in range(3):
        acc += engine.convolve_array("b" + "xyz"[k], np.asarray(grid.component(k)) * mu)
    c2_conv = 0.5 * acc
    num = math.sqrt(float(np.sum((c2_conv - c2) ** 2)))
    den = math.sqrt(float(np.sum(c2 ** 2)))
    return num / max(den, 1e-300)


# ---------------------------------------------------------------------------
# kernel tables for FFT convolution
# ---------------------------------------------------------------------------

def cell_average_radial_power(exponent, h, subcells=64):
    """Mean of |u|^p over the cube of side h centered at the origin.

    Midpoint rule on a subcells^3 refinement; the integrand is integrable
    for p > -3 and the cell is symmetric, so the midpoint estimate is
    stable and avoids the undefined point sample at u = 0.
    """
    q = (np.arange(subcells) + 0.5) / subcells - 0.5  # offsets in units of h
    qx = q[None, None, :]
    qy = q[None, :, None]
    qz = q[:, None, None]
    r2 = (qx * qx + qy * qy) + qz * qz
    return float(np.mean(r2 ** (0.5 * exponent))) * h ** exponent


def _shift_coords(grid, pad):
    m = pad * grid.N
    offs = np.fft.fftfreq(m) * m * grid.h  # 0, h, ..., -h ordering
    ux = offs[None, None, :]
    uy = offs[None, :, None]
    uz = offs[:, None, None]
    return m, ux, uy, uz


@dataclass
class KernelTables:
    """Sampled convolution kernels on the shift lattice in FFT layout
    (index 0 is the zero shift).  The singular zero-shift cell of a_jk is
    replaced by its analytic cell average; the divergence kernel is odd,
    so its zero-shift entry is 0."""

    grid: VelocityGrid
    params: KernelParams
    pad: int
    a_comps: np.ndarray          # (6, M, M, M)
    b_comps: np.ndarray          # (3, M, M, M)
    extras: dict = dataclass_field(default_factory=dict)

    @property
    def M(self):
        return self.pad * self.grid.N


def tabulate_fft_kernels(grid, params, pad=1, origin_subcells=64):
    """Tabulate a_jk(u) and b_j(u) = sum_k d_k a_jk(u) on the shift lattice."""
    if pad not in (1, 2):
        raise ValueError(f"pad must be 1 or 2, got {pad}")
    m, ux, uy, uz = _shift_coords(grid, pad)
    n2 = (ux * ux + uy * uy) + uz * uz
    n2_safe = n2.copy()
    n2_safe[0, 0, 0] = 1.0  # origin entry is rewritten below
    ng = n2_safe ** (0.5 * params.gamma)
    ngp2 = ng * n2_safe

    comps = np.empty((6, m, m, m))
    comps[0] = ngp2 - ng * ux * ux
    comps[1] = ngp2 - ng * uy * uy
    comps[2] = ngp2 - ng * uz * uz
    comps[3] = -ng * ux * uy
    comps[4] = -ng * ux * uz
    comps[5] = -ng * uy * uz
    # zero-shift regularization: cell average of the radial factor; the
    # direction average of (I - uhat uhat^T) over the symmetric cell is (2/3) I
    avg = cell_average_radial_power(params.gamma + 2.0, grid.h, origin_subcells)
    comps[:3, 0, 0, 0] = (2.0 / 3.0) * avg
    comps[3:, 0, 0, 0] = 0.0

    bcomps = np.empty((3, m, m, m))
    for j, uj in enumerate((ux, uy, uz)):
        bcomps[j] = -2.0 * ng * uj
    bcomps[:, 0, 0, 0] = 0.0  # odd kernel, symmetric cell

    return KernelTables(grid, params, pad, comps, bcomps)


def tabulate_radial_kernel(grid, exponent, pad=1, origin_subcells=64):
    """Scalar radial kernel |u|^exponent on the shift lattice (FFT layout)."""
    m, ux, uy, uz = _shift_coords(grid, pad)
    n2 = (ux * ux + uy * uy) + uz * uz
    n2[0, 0, 0] = 1.0
    table = n2 ** (0.5 * exponent)
    table[0, 0, 0] = cell_average_radial_power(exponent, grid.h, origin_subcells)
    return table


# ---------------------------------------------------------------------------
# assembled coefficient set
# ---------------------------------------------------------------------------

@dataclass
class LandauCoefficients:
    """Everything the operators need: abar, the scalar weights and the
    convolution kernel tables, all on one grid."""

    grid: VelocityGrid
    params: KernelParams
    quad: QuadratureSpec
    abar: SymMatrixField
    c1: np.ndarray
    c2: np.ndarray
    tables: KernelTables
    c2_crosscheck: float = math.nan

    @cached_property
    def mu(self):
        return maxwellian_field(self.grid, self.params)

    @cached_property
    def mu_half(self):
        return sqrt_maxwellian_field(self.grid, self.params)

    @cached_property
    def max_diffusion_eigenvalue(self):
        return float(self.abar.eigenvalues()[:, 2].max())


def c2_tolerance(grid, quad):
    """Combined tolerance for the two c2 routes: quadrature rtol or the
    O(h^2) stencil scale, whichever dominates."""
    return min(0.5, max(quad.rtol, grid.h ** 2))


def build_coefficients(grid, params, quad=QuadratureSpec(), cache_dir=None, log=None):
    """Compute (or load) the full coefficient set, cross-checking c2.

    When cache_dir is given, results are cached on disk keyed by
    (R, N, gamma, normalization, quadrature orders).
    """
    from . import persist

    if cache_dir is not None:
        cached = persist.load_coefficient_cache(cache_dir, grid, params, quad)
        if cached is not None:
            if log:
                log(f"coefficients: cache hit ({persist.coefficient_cache_path(cache_dir, grid, params, quad)})")
            return cached

    abar = compute_abar_field(grid, params, quad)
    c1, c2 = compute_scalar_weights(abar, grid)
    tables = tabulate_fft_kernels(grid, params, pad=1)
    tables_padded = tabulate_fft_kernels(grid, params, pad=2)
    rel = crosscheck_c2(c2, grid, params, tables_padded)
    tol = c2_tolerance(grid, quad)
    if rel > tol:
        raise CrossCheckError(
            f"c2 routes disagree: relative L2 difference {rel:.3e} > {tol:.3e}"
        )
    coeffs = LandauCoefficients(grid, params, quad, abar, c1, c2, tables, rel)
    if cache_dir is not None:
        persist.save_coefficient_cache(cache_dir, coeffs)
        if log:
            log("coefficients: computed and cached")
    return coeffs
