import math
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from hlcp.errors import SimulationError, ValidationError
from hlcp.rng import spawn_seeds
from hlcp.stress import (
    BLOCK_DT,
    DEFAULT_SIGMA_ANNUAL,
    SvjParams,
    run_default,
    run_ensemble,
    run_stress,
    simulate_path,
    summarize_stress,
)

STEP_HOURS = 12 / 3600


def hours_for(n_steps):
    return n_steps * STEP_HOURS


def fake_path(prices):
    prices = np.asarray(prices, float)
    return SimpleNamespace(prices=prices, variances=np.ones_like(prices), times=np.arange(len(prices)) * STEP_HOURS)


def test_block_step():
    assert BLOCK_DT == pytest.approx(12 / 31_536_000, rel=1e-15)
    p = SvjParams()
    assert p.n_steps == 7200
    assert p.step_index(8.0) == 2400


def test_default_calibration_values():
    p = SvjParams.from_annual_vol(DEFAULT_SIGMA_ANNUAL)
    assert p.theta_base == pytest.approx(0.55591936, rel=1e-12)
    assert p.theta_shock == pytest.approx(20 * p.theta_base, rel=1e-15)
    # 4.5993e-4; the quoted 4.598e-4 is truncated
    assert p.sigma_step == pytest.approx(4.598e-4, abs=2e-7)
    assert p.sigma_step == pytest.approx(0.7456 * math.sqrt(BLOCK_DT), rel=1e-14)
    assert p.xi**2 <= 2 * p.kappa * p.theta_base


def test_feller_violation_rejected():
    p = SvjParams()
    with pytest.raises(ValidationError, match="Feller"):
        SvjParams(xi=1.01 * math.sqrt(2 * p.kappa * p.theta_base))
    # the bound itself is admissible
    SvjParams(xi=math.sqrt(2 * p.kappa * p.theta_base))


@pytest.mark.parametrize("kw", [{"rho": 1.5}, {"lambda_j": -1.0}, {"horizon": 0.0}, {"t_shock_start": 30.0}])
def test_invalid_params_rejected(kw):
    with pytest.raises(ValidationError):
        SvjParams(**kw)


@pytest.mark.slow
@pytest.mark.parametrize("seed,kw", [(3, {}), (11, {"kappa": 50.0}), (2024, {"lambda_j": 200.0})])
def test_variance_positive_over_a_million_steps(seed, kw):
    p = SvjParams(seed=seed, horizon=hours_for(10**6), **kw)
    path = simulate_path(p)
    assert path.n_steps == 10**6
    assert np.all(path.variances > 0)
    assert np.all(path.prices > 0)


def test_seed_determinism():
    a, b = simulate_path(SvjParams(seed=99)), simulate_path(SvjParams(seed=99))
    for name in ("times", "prices", "variances", "jump_flags", "jump_sizes"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    ra, rb = run_stress(a), run_stress(b)
    assert np.array_equal(ra.loss_hlcp, rb.loss_hlcp) and ra.summary == rb.summary
    c = simulate_path(SvjParams(seed=100))
    assert not np.array_equal(a.prices, c.prices)


def test_forced_jump_flag():
    path = simulate_path(SvjParams())
    k = path.forced_step
    assert k == 2400
    assert path.jump_flags[k] and path.jump_sizes[k] < 1.0
    off = simulate_path(SvjParams(forced_jump=False, lambda_j=0.0))
    assert off.forced_step is None and not off.jump_flags.any()


def test_brownian_correlation():
    p = SvjParams(seed=5, horizon=hours_for(10**5), lambda_j=0.0, forced_jump=False)
    path = simulate_path(p)
    assert len(path.z_s) == 10**5
    assert np.corrcoef(path.z_s, path.z_v)[0, 1] == pytest.approx(-0.5, abs=0.01)


def test_correlated_component_variance():
    p = SvjParams(seed=8, horizon=hours_for(10**5), lambda_j=0.0, forced_jump=False)
    path = simulate_path(p)
    dt = p.dt
    shared = p.rho * path.z_v * math.sqrt(dt)
    assert shared.var() == pytest.approx(0.25 * dt, rel=0.02)
    ortho = path.z_s * math.sqrt(dt) - shared
    assert ortho.var() == pytest.approx(0.75 * dt, rel=0.02)


def test_noiseless_cir_decay():
    theta = 0.3
    p = SvjParams(kappa=200.0, theta_base=theta, theta_shock=theta, xi=0.0, lambda_j=0.0,
                  mu=0.0, forced_jump=False, v0=4 * theta, horizon=24.0)
    path = simulate_path(p)
    t_years = path.times / (24 * 365)
    closed = theta + (p.v0 - theta) * np.exp(-p.kappa * t_years)
    assert np.max(np.abs(path.variances / closed - 1)) < 0.01


def test_noiseless_cir_at_target_stays_put():
    p = SvjParams(xi=0.0, lambda_j=0.0, forced_jump=False, theta_shock=SvjParams().theta_base)
    path = simulate_path(p)
    assert np.allclose(path.variances, p.theta_base, rtol=1e-12)


def test_simulation_error_carries_step():
    p = SvjParams(theta_base=1e9, v0=1e9, xi=0.0, forced_jump=False, lambda_j=0.0, seed=1)
    with pytest.raises(SimulationError) as info:
        simulate_path(p)
    assert info.value.step >= 0


def test_dormant_path_has_no_loss():
    res = run_stress(fake_path(np.full(50, 2.0)))
    assert not res.loss_std.any() and not res.loss_hlcp.any()
    assert np.all(res.undeployed_share == 1.0)


def test_dormant_when_tau_above_max_move():
    path = simulate_path(SvjParams(seed=4))
    res = run_stress(path, tau=float(path.one_step_moves().max()) + 1e-9)
    assert res.summary["loss_std_final"] == 0.0 and res.summary["loss_hlcp_final"] == 0.0


def test_single_shock_share():
    res = run_stress(fake_path([1.0, 1.0 - 0.388]))
    assert res.phi[1] == pytest.approx(0.385, rel=1e-12)
    assert res.undeployed_share[1] == pytest.approx(1 / (1 + 19.25), rel=1e-12)
    assert res.undeployed_share[1] == pytest.approx(0.0494, abs=5e-4)
    assert res.summary["peak_deployment"] == pytest.approx(0.9506, abs=5e-4)


def test_single_step_full_exposure_control():
    res = run_stress(fake_path([1.0, 0.8]), n_ratio=1.0, k_act=1.0, c0=1.0)
    assert res.delta_c[1] > 0
    assert res.loss_hlcp[1] < res.loss_std[1]
    phi = 0.2 - 0.003
    dc = 100 * phi / (1 + 100 * phi)
    assert res.loss_hlcp[1] == pytest.approx(phi**2 / 8 / (1 + dc), rel=1e-12)


def test_mismatched_series_rejected():
    bad = SimpleNamespace(prices=np.ones(5), variances=np.ones(4), times=np.arange(5.0))
    with pytest.raises(ValidationError):
        run_stress(bad)


@pytest.mark.parametrize("seed", range(10))
def test_loss_series_invariants(seed):
    res = run_stress(simulate_path(SvjParams(seed=seed)))
    assert np.all(np.diff(res.loss_std) >= 0) and np.all(np.diff(res.loss_hlcp) >= 0)
    assert np.all(res.loss_hlcp <= res.loss_std)
    assert np.all((res.undeployed_share > 0) & (res.undeployed_share <= 1))
    # each step leaves a positive buffer behind
    assert res.summary["min_post_step_buffer"] > 0
    assert np.all(res.buffer[1:] <= res.buffer[:-1])


def test_reduction_bounded_over_many_seeds():
    base = SvjParams()
    for seed in spawn_seeds(1, 100):
        s = summarize_stress(run_stress(simulate_path(replace(base, seed=seed))))
        assert s.loss_std_24h > 0
        assert 0.0 <= s.reduction_24h <= 1.0


def test_default_scenario_bands():
    path, res = run_default()
    s = summarize_stress(res)
    assert path.one_step_moves()[path.forced_step] == pytest.approx(0.388, abs=5e-4)
    assert 0.60 <= s.reduction_24h <= 0.85
    assert 0.93 <= s.peak_deployment <= 0.97
    assert np.all(res.loss_hlcp[1:][res.loss_std[1:] > 0] < res.loss_std[1:][res.loss_std[1:] > 0])


def test_zero_shock_summary():
    path = fake_path(np.ones(7201))
    s = summarize_stress(run_stress(path))
    assert s.loss_std_24h == s.loss_hlcp_24h == s.reduction_24h == 0.0


def test_summary_needs_full_day():
    with pytest.raises(ValidationError):
        summarize_stress(run_stress(simulate_path(SvjParams(horizon=12.0))))


def test_mark_to_market_option():
    path = simulate_path(SvjParams())
    flat, mtm = run_stress(path), run_stress(path, mark_to_market=True)
    # price falls after the forced drop, so marked exposure shrinks
    assert mtm.summary["loss_std_final"] < flat.summary["loss_std_final"]
    assert np.all(mtm.loss_hlcp <= mtm.loss_std)


def test_ensemble_parallel_matches_serial():
    p = SvjParams(seed=42)
    serial = run_ensemble(p, 4)
    parallel = run_ensemble(p, 4, workers=2)
    assert serial == parallel
    assert [s for s, _ in serial] == spawn_seeds(42, 4)
