import math

import numpy as np
import pytest

from landau.errors import LadderOverflowError, UnsupportedOrderError
from landau.evolution import (EvolutionState, SourceModel,
                              TimePolicy, derivative_ladder, evolve,
                              measure_source_bound, source_eval, step)
from landau.field import l2_norm, random_field, zeros
from tests.conftest import gaussian_field


def unit_gaussian(grid, width=1.5):
    f = gaussian_field(grid, width)
    return (1.0 / l2_norm(f)) * f


def test_source_eval_exp(small_grid):
    phi = unit_gaussian(small_grid)
    model = SourceModel(phi, tau_kind="exp", rate=1.0)
    # third derivative of e^{-t} at t=0 flips the sign
    out = source_eval(model, 3, 0.0)
    assert np.allclose(out.values, -phi.values, rtol=1e-14)


def test_source_eval_poly_kills_high_orders(small_grid):
    phi = unit_gaussian(small_grid)
    model = SourceModel(phi, tau_kind="poly", coeffs=(1.0, 2.0, -0.5))
    out = source_eval(model, 3, 0.7)
    assert np.all(out.values == 0.0)
    # second derivative of 1 + 2t - t^2/2 is -1
    out2 = source_eval(model, 2, 0.3)
    assert np.allclose(out2.values, -phi.values, rtol=1e-14)


def test_source_eval_cos(small_grid):
    phi = unit_gaussian(small_grid)
    model = SourceModel(phi, tau_kind="cos", omega=2.0)
    t = 0.4
    expected = 2.0 ** 2 * math.cos(2.0 * t + math.pi) * phi.values
    assert np.allclose(source_eval(model, 2, t).values, expected, rtol=1e-13)


def test_source_order_cap(small_grid):
    model = SourceModel(unit_gaussian(small_grid), max_order=4)
    with pytest.raises(UnsupportedOrderError):
        source_eval(model, 5, 0.0)


def test_source_bound_finite(small_grid):
    model = SourceModel(unit_gaussian(small_grid), tau_kind="exp", rate=1.0)
    a_g = measure_source_bound(model, T=2.0, kmax=8)
    assert 0.0 < a_g < 10.0


def test_step_zero_stays_zero(small_grid, small_ctx):
    model = SourceModel.zero(small_grid)
    state = EvolutionState(zeros(small_grid))
    out = step(state, 0.01, small_ctx, model, small_ctx.coeffs)
    assert np.all(out.f.values == 0.0)
    assert out.t == pytest.approx(0.01)
    assert len(out.energy_log) == 1


def test_step_without_operator_matches_quadrature(small_grid):
    # with L = 0 and g = phi e^{-t}, a single RK4 step reproduces the
    # exact integral of tau to O(dt^5)
    phi = unit_gaussian(small_grid)
    model = SourceModel(phi, tau_kind="exp", rate=1.0)
    errs = []
    for dt in (0.2, 0.1):
        state = EvolutionState(zeros(small_grid))
        out = step(state, dt, None, model)
        exact = (1.0 - math.exp(-dt)) * phi.values
        errs.append(float(np.max(np.abs(out.f.values - exact))))
    assert 24.0 <= errs[0] / errs[1] <= 40.0  # fifth-order local error


def test_evolve_zero_data_zero_source(small_grid, small_ctx):
    model = SourceModel.zero(small_grid)
    res = evolve(zeros(small_grid), model, 0.5, small_ctx)
    assert l2_norm(res.state.f) == 0.0
    assert res.energy_log[-1, 0] == pytest.approx(0.5)


def test_evolve_snapshots_and_log(small_grid, small_ctx):
    f0 = random_field(small_grid, 42, bandlimit=5, envelope_width=1.0)
    model = SourceModel(unit_gaussian(small_grid), tau_kind="exp", amplitude=0.5)
    res = evolve(f0, model, 0.2, small_ctx, TimePolicy(), snapshot_times=(0.1, 0.2))
    assert set(res.snapshots) == {0.1, 0.2}
    t = res.energy_log[:, 0]
    assert np.all(np.diff(t) > 0)
    assert np.isfinite(res.energy_log).all()
    # log rows are (t, l2sq, asq, gf, lff); the first row is the datum
    assert res.energy_log[0, 1] == pytest.approx(l2_norm(f0) ** 2, rel=1e-12)


def test_rk4_self_convergence(small_grid, small_ctx):
    # fixed problem, halving dt: fourth-order trajectory error
    f0 = random_field(small_grid, 7, bandlimit=5, envelope_width=1.0)
    model = SourceModel(unit_gaussian(small_grid), tau_kind="exp", amplitude=1.0)
    T = 0.08
    sols = {}
    for n in (4, 8, 16):
        res = evolve(f0, model, T, small_ctx, TimePolicy(dt_override=T / n))
        sols[n] = res.state.f.values
    e1 = float(np.max(np.abs(sols[4] - sols[16])))
    e2 = float(np.max(np.abs(sols[8] - sols[16])))
    # Richardson: e1/e2 ~ (16 + ...) for a 4th-order method against a
    # finer reference; accept a broad band around 16
    assert 10.0 <= e1 / e2 <= 24.0


def test_ladder_base_case(small_grid, small_ctx):
    # with g = 0, the first rung is -L f
    f = random_field(small_grid, 9, bandlimit=5, envelope_width=1.0)
    model = SourceModel.zero(small_grid)
    lad = derivative_ladder(f, 1.0, 1, model, small_ctx)
    lf = small_ctx.apply(f)
    assert np.allclose(lad.entries[1].values, -lf.values, rtol=1e-13)
    assert lad.norms_l2[1] == pytest.approx(l2_norm(lf), rel=1e-12)


def test_ladder_closed_form_without_operator(small_grid):
    # with L = 0 the rungs are the source's time derivatives
    phi = unit_gaussian(small_grid)
    model = SourceModel(phi, tau_kind="exp", rate=1.0)
    f_t = 0.5 * phi
    t = 0.8
    lad = derivative_ladder(f_t, t, 5, model, None)
    for m in range(1, 6):
        expected = model.tau_derivative(m - 1, t) * phi.values
        assert np.allclose(lad.entries[m].values, expected, rtol=1e-13)
    # a_k matches the scalar closed form
    for k in range(1, 6):
        expected = t ** k * math.exp(-t) / math.factorial(k)
        assert lad.a_k[k] == pytest.approx(expected, rel=1e-12)


def test_ladder_linearity(small_grid, small_ctx):
    model = SourceModel.zero(small_grid)
    f1 = random_field(small_grid, 20, bandlimit=5, envelope_width=1.0)
    f2 = random_field(small_grid, 21, bandlimit=5, envelope_width=1.0)
    mix = 2.0 * f1 + (-3.0) * f2
    lad_mix = derivative_ladder(mix, 1.0, 3, model, small_ctx)
    lad1 = derivative_ladder(f1, 1.0, 3, model, small_ctx)
    lad2 = derivative_ladder(f2, 1.0, 3, model, small_ctx)
    for m in range(4):
        combo = 2.0 * lad1.entries[m].values - 3.0 * lad2.entries[m].values
        scale = np.max(np.abs(combo)) + 1e-300
        assert np.max(np.abs(lad_mix.entries[m].values - combo)) <= 1e-11 * scale


def test_ladder_requires_positive_time(small_grid, small_ctx):
    model = SourceModel.zero(small_grid)
    f = random_field(small_grid, 22, bandlimit=5)
    with pytest.raises(ValueError):
        derivative_ladder(f, 0.0, 2, model, small_ctx)
    with pytest.raises(ValueError):
        derivative_ladder(f, 1.0, 11, model, small_ctx)


def test_ladder_overflow_guard(small_grid):
    # an artificial exploding operator trips the overflow error with depth
    class Exploding:
        coeffs = None

        def apply(self, f):
            return 1e60 * f

    model = SourceModel.zero(small_grid)
    f = random_field(small_grid, 23, bandlimit=5)
    with pytest.raises(LadderOverflowError) as err:
        derivative_ladder(f, 1.0, 4, model, Exploding())
    assert err.value.depth == 2


def test_ladder_matches_time_differencing(small_grid, small_ctx):
    # (f(t+d) - f(t-d)) / 2d approaches the first rung as d shrinks
    f0 = random_field(small_grid, 30, bandlimit=4, envelope_width=1.0)
    model = SourceModel(unit_gaussian(small_grid), tau_kind="exp", amplitude=0.5)
    t0 = 0.3
    deltas = (0.1, 0.05)
    policy = TimePolicy()
    errs = []
    for d in deltas:
        marks = (t0 - d, t0, t0 + d)
        res = evolve(f0, model, t0 + d, small_ctx, policy, snapshot_times=marks)
        lad = derivative_ladder(res.snapshots[t0], t0, 1, model, small_ctx)
        fd = (res.snapshots[t0 + d].values - res.snapshots[t0 - d].values) / (2 * d)
        errs.append(float(np.max(np.abs(fd - lad.entries[1].values))))
    ratio = errs[0] / errs[1]
    assert 2.5 <= ratio <= 6.0  # second order in the offset


def test_instability_guard(small_grid):
    # forward instability triggers the growth error rather than NaNs
    class Unstable:
        coeffs = None

        def apply(self, f):
            return -400.0 * f  # f' = 400 f under rhs = -L f

    from landau.errors import InstabilityError

    f0 = random_field(small_grid, 31, bandlimit=5)
    model = SourceModel.zero(small_grid)
    state = EvolutionState(f0)
    with pytest.raises(InstabilityError):
        s = state
        for _ in range(10):
            s = step(s, 0.05, Unstable(), model)
