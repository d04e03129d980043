"""Acceptance suite: every exit criterion at the reference configuration
(R=8, N=32, gamma=-1, T=2, kmax=6, seed=42), with refinement companions at
N=24 (stability) and N=16 (discrete equilibrium residual order).

Each criterion prints one PASS/FAIL line; run with `pytest -s` to see them
as they complete.
"""

import dataclasses
import math
import os

import numpy as np
import pytest

from landau import cli, persist
from landau.config import load_config
from landau.evolution import derivative_ladder, evolve, TimePolicy
from landau.field import l2_norm
from landau.kernel import maxwellian_field
from landau.operator import apply_Q
from landau.suites import RunResources, collect_constants, run_suite
from landau.verify import (check_kernel_identities, energy_identity_convergence,
                           smoothing_fit)

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _report(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


@pytest.fixture(scope="module")
def ref_cfg(tmp_path_factory):
    cfg = load_config(os.path.join(REPO, "configs", "reference.cfg"))
    work = tmp_path_factory.mktemp("acceptance")
    return dataclasses.replace(cfg,
                               io_cache_dir=str(work / "cache"),
                               io_out_dir=str(work / "out"))


@pytest.fixture(scope="module")
def res32(ref_cfg):
    return RunResources(ref_cfg, log=lambda *_: None)


@pytest.fixture(scope="module")
def res24(ref_cfg):
    cfg = dataclasses.replace(ref_cfg, grid_N=24)
    return RunResources(cfg, log=lambda *_: None)


def test_criterion_1_kernel_identities(res32):
    rep = check_kernel_identities(res32.params, sample_count=1000,
                                  seed=res32.cfg.verify_seed)
    worst = max(c.value for c in rep.checks)
    ok = rep.passed and worst <= 1e-12
    assert _report(1, ok, f"kernel identities, worst relative error {worst:.2e}")


def test_criterion_2_equilibrium_residual_order(ref_cfg, res32):
    norms = {}
    for n in (16, 32):
        if n == 32:
            r = res32
        else:
            r = RunResources(dataclasses.replace(ref_cfg, grid_N=16,
                                                 f0_bandlimit=5),
                             log=lambda *_: None)
        mu = maxwellian_field(r.grid, r.params)
        norms[n] = l2_norm(apply_Q(mu, mu, r.ctx.engine))
    rate = math.log2(norms[16] / norms[32])
    ok = rate >= 1.8
    assert _report(2, ok, f"Q(mu,mu) residual order {rate:.2f} "
                          f"({norms[16]:.3e} -> {norms[32]:.3e})")


@pytest.fixture(scope="module")
def inequality_constants(res32, res24):
    out = {}
    for tag, res in (("N32", res32), ("N24", res24)):
        reports = run_suite("inequalities", res)
        reports.append(run_suite("coefficients", res)[0])
        reports.append(run_suite("convolution", res)[0])
        out[tag] = {
            "constants": collect_constants(reports),
            "reports": reports,
        }
    return out


def test_criterion_3_coercivity(inequality_constants):
    c32 = inequality_constants["N32"]["constants"]["C1"]
    c24 = inequality_constants["N24"]["constants"]["C1"]
    drift = abs(c24 - c32) / c32
    ok = c32 > 0 and c24 > 0 and drift <= 0.20
    assert _report(3, ok, f"coercivity C1 = {c32:.4f} (N=32), "
                          f"refinement change {100 * drift:.1f}%")


def test_criterion_4_bounded_constants(inequality_constants):
    names = ("C2", "C3", "C4", "K_L3", "K_conv", "K_coef")
    c32 = inequality_constants["N32"]["constants"]
    c24 = inequality_constants["N24"]["constants"]
    drifts = {}
    ok = True
    for name in names:
        v32, v24 = c32[name], c24[name]
        ok = ok and math.isfinite(v32) and math.isfinite(v24) and v32 > 0
        drifts[name] = abs(v24 - v32) / v32
        ok = ok and drifts[name] <= 0.25
    recheck = [r for r in inequality_constants["N32"]["reports"]
               if r.suite == "bilinear_recheck"]
    ok = ok and recheck and recheck[0].passed
    detail = ", ".join(f"{n} {100 * d:.0f}%" for n, d in drifts.items())
    assert _report(4, ok, f"constants finite, refinement drift: {detail}; "
                          f"fresh-ensemble recheck "
                          f"{'pass' if recheck and recheck[0].passed else 'fail'}")


def test_criterion_5_energy_identity(res32):
    cfg = res32.cfg
    from landau.operator import stable_dt
    dt = stable_dt(res32.coeffs, res32.grid, cfg.time_safety)
    n0 = int(math.ceil(cfg.time_T / (4.0 * dt)))
    n0 += n0 % 2
    _, slope = energy_identity_convergence(
        res32.initial_datum(), res32.source_model(), cfg.time_T, res32.ctx,
        steps=(n0, 2 * n0, 4 * n0))
    from landau.verify import check_energy
    rep = check_energy(res32.trajectory, res32.ladders, slope=slope)
    consts = {c.name: c.value for c in rep.constants}
    ok = abs(slope - 4.0) <= 0.5 and all(
        math.isfinite(consts[k]) for k in ("C5", "C6"))
    assert _report(5, ok, f"energy-identity dt-slope {slope:.2f}, "
                          f"C5 = {consts['C5']:.3f}, C6 = {consts['C6']:.3f}")


def test_criterion_6_time_analyticity(res32, res24):
    fit32 = smoothing_fit(res32.ladders)
    fit24 = smoothing_fit(res24.ladders)
    drift = abs(fit24.C - fit32.C) / fit32.C
    ok_i = fit32.max_positive_residual <= 0.5
    ok_ii = fit32.root_variation <= 0.25
    ok_iii = drift <= 0.25
    ok = ok_i and ok_ii and ok_iii
    assert _report(6, ok,
                   f"factorial fit C = {fit32.C:.4f}, max positive residual "
                   f"{fit32.max_positive_residual:.3f} (<= 0.5), root variation "
                   f"{100 * fit32.root_variation:.1f}% (<= 25%), refinement "
                   f"drift {100 * drift:.1f}% (<= 25%)")


def test_criterion_7_scalar_oracle(res32):
    # operator disabled, tau = e^{-t}: the fitted C matches the
    # closed-form scalar computation through an independent oracle
    grid = res32.grid
    cfg = res32.cfg
    model = res32.source_model()
    f0 = res32.initial_datum()
    times = cfg.ladder_eval_times
    res = evolve(f0, model, cfg.time_T, None,
                 TimePolicy(dt_override=cfg.time_T / 512.0),
                 snapshot_times=times)
    ladders = [derivative_ladder(res.snapshots[t], t, cfg.ladder_kmax,
                                 model, None) for t in times]
    fit = smoothing_fit(ladders)

    # scalar oracle: f(t) = f0 + amp (1 - e^{-t}) phi exactly, and
    # ||d_t^k f|| = amp e^{-t} ||phi|| for k >= 1
    phi = model.phi
    amp = model.amplitude
    f0_phi = float(np.sum(f0.values * phi.values)) * grid.cell_volume
    phi_sq = float(np.sum(phi.values ** 2)) * grid.cell_volume
    xs, ys = [], []
    for t in times:
        c = amp * (1.0 - math.exp(-t))
        norm0 = math.sqrt(l2_norm(f0) ** 2 + 2.0 * c * f0_phi + c * c * phi_sq)
        for k in range(cfg.ladder_kmax + 1):
            ak = (t ** k) * (norm0 if k == 0 else
                             amp * math.exp(-t) * math.sqrt(phi_sq)) / math.factorial(k)
            xs.append(k + 1.0)
            ys.append(math.log(ak))
    oracle = math.exp(float(np.sum(np.array(xs) * np.array(ys))
                            / np.sum(np.array(xs) ** 2)))
    rel = abs(fit.C - oracle) / oracle
    ok = rel <= 1e-6
    assert _report(7, ok, f"operator-disabled fit C = {fit.C:.8f} vs scalar "
                          f"oracle {oracle:.8f} (rel {rel:.2e})")


DET_CFG = """
grid.R = 8.0
grid.N = 16
gamma = -1.0
f0.bandlimit = 5
f0.envelope_width = 1.0
source.amplitude = 0.5
time.T = 0.5
time.snapshot_times = 0.25, 0.5
ladder.kmax = 3
ladder.eval_times = 0.25, 0.5
verify.ensemble_size = 64
verify.seed = 42
verify.suites = kernel, coefficients, convolution, inequalities, energy, smoothing
io.cache_dir = {cache}
io.out_dir = {out}
"""


def test_criterion_8_determinism(tmp_path):
    cfg_path = tmp_path / "det.cfg"
    cfg_path.write_text(DET_CFG.format(cache=tmp_path / "cache",
                                       out=tmp_path / "out"))
    outs = [str(tmp_path / "out_a"), str(tmp_path / "out_b")]
    for out in outs:
        # determinism is about the bytes, not the verdicts: the coarse
        # companion grid may fail individual checks (exit 4) as long as it
        # fails identically
        rc = cli.main(["verify", "--config", str(cfg_path), "--out", out])
        assert rc in (0, 4)
    identical = True
    compared = 0
    for name in sorted(os.listdir(outs[0])):
        if not name.endswith(".json"):
            continue
        compared += 1
        a = persist.strip_meta(os.path.join(outs[0], name))
        b = persist.strip_meta(os.path.join(outs[1], name))
        identical = identical and (a == b)
    ok = identical and compared >= 6
    assert _report(8, ok, f"{compared} reports byte-identical across reruns")
