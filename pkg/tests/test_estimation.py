"""Multi-start cMLE, standard errors, identifiability and conditional VaR."""
import json
import warnings
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from acaf import (
    TABLE9_THETA,
    FitConfig,
    FitError,
    LatentState,
    MaximaSeries,
    ModelSpec,
    ParamTransform,
    ParamVector,
    conditional_var,
    enforce_identifiability,
    fit,
    fit_variant,
    loglik,
    nll,
    score_matrix,
    simulate,
    standard_errors,
)
from acaf.estimation import initial_guess, shock_variances

CFG = FitConfig(n_starts=2, seed=0)


@pytest.fixture(scope="module")
def fit5000(sim5000):
    return fit(sim5000.series, CFG)


def z_gradient(result, series, h=1e-6):
    tr = ParamTransform.for_series(series, result.spec)
    z0 = tr.to_z(result.theta_hat)
    g = np.empty(z0.size)
    for k in range(z0.size):
        up, dn = z0.copy(), z0.copy()
        up[k] += h
        dn[k] -= h
        g[k] = (nll(up, series, tr) - nll(dn, series, tr)) / (2 * h)
    return g


def test_config_validation():
    with pytest.raises(ValueError):
        FitConfig(n_starts=0)
    with pytest.raises(ValueError):
        FitConfig(f_tol=0)
    assert FitConfig(model="acf").model is ModelSpec.ACF
    assert FitConfig().to_dict()["model"] == "acaf_full"


def test_fit_result_invariants(fit5000):
    r = fit5000
    vg, vd = r.shock_variances
    assert vg >= vd
    m = r.info_matrix
    assert np.array_equal(m, m.T)
    assert np.all(np.diag(m) >= 0)
    assert np.all(np.isfinite(r.std_errors)) and np.all(r.std_errors > 0)
    assert any(s.converged for s in r.starts)
    assert len(r.latent_path) == r.n_obs == 5000
    assert r.loglik == -r.nll_opt


def test_optimum_beats_truth_within_lr_band(fit5000, sim5000, truth):
    gap = -loglik(truth, sim5000.series) - fit5000.nll_opt
    assert gap >= 0
    assert 2 * gap <= stats.chi2.ppf(0.99, 13)


def test_recovers_truth_within_three_se(fit5000, truth):
    dev = np.abs(fit5000.theta_hat.to_array() - truth.to_array())
    assert np.all(dev <= 3 * fit5000.std_errors)


def test_first_order_condition_z_space(fit5000, sim5000):
    g = z_gradient(fit5000, sim5000.series)
    assert np.linalg.norm(g / fit5000.n_obs) < 1e-3


def test_score_column_sums_at_optimum(fit5000, sim5000):
    s = score_matrix(fit5000.theta_hat, sim5000.series)
    h = 1e-5 * np.maximum(1, np.abs(fit5000.theta_hat.to_array()))
    assert np.all(np.abs(s.sum(axis=0)) < 1e-3 * fit5000.n_obs * h)


def test_json_document(tmp_path, fit5000):
    path = tmp_path / "fit.json"
    fit5000.to_json(path)
    doc = json.loads(path.read_text())
    assert doc["model"] == "acaf_full"
    assert set(doc["estimates"]) == set(fit5000.theta_hat.to_dict())
    assert doc["swapped"] == fit5000.swapped
    assert len(doc["starts"]) == 2
    assert doc["estimates"]["beta1"] == pytest.approx(fit5000.theta_hat.beta1, rel=1e-14)
    assert "std.err" in fit5000.summary()


def test_se_order_of_magnitude(truth):
    series = simulate(truth, n=3934, seed=31).series
    se, m, diag = standard_errors(truth, series)
    assert 0.027 / 3 <= se[1] <= 0.027 * 3
    assert not diag["singular"]


def test_se_scaling_with_n(truth):
    # Replication-averaged SEs; a single pair of series is too noisy for a 25% band.
    se_short = np.mean([standard_errors(truth, simulate(truth, n=2000, seed=100 + r).series)[0] for r in range(20)], axis=0)
    se_long = np.mean([standard_errors(truth, simulate(truth, n=4000, seed=200 + r).series)[0] for r in range(20)], axis=0)
    ratio = se_long / se_short
    target = 1 / np.sqrt(2)
    assert np.all(np.abs(ratio / target - 1) <= 0.25), ratio


def test_identifiability_no_swap_example():
    q = simulate(TABLE9_THETA, n=2000, seed=3).series.values
    g3, d3 = 6.663, 4.732
    g2 = np.sqrt(0.00583 / np.var(np.exp(-g3 * q), ddof=1))
    d2 = np.sqrt(0.00466 / np.var(np.exp(-d3 * q), ddof=1))
    th = replace(TABLE9_THETA, gamma2=g2, gamma3=g3, delta2=d2, delta3=d3)
    ident = enforce_identifiability(th, q)
    assert not ident.swapped and not ident.tie
    assert ident.shock_variances == pytest.approx((0.00583, 0.00466), rel=1e-12)


def test_identifiability_pre_swapped(sim1000, truth):
    q = sim1000.series
    vg, vd = shock_variances(truth, q)
    good = truth if vg > vd else truth.swap_blocks()
    ident = enforce_identifiability(good.swap_blocks(), q)
    assert ident.swapped and ident.theta == good
    tr = ParamTransform.for_series(q)
    assert nll(tr.to_z(good.swap_blocks()), q, tr) == nll(tr.to_z(good), q, tr)


def test_identifiability_tie():
    th = replace(TABLE9_THETA, delta2=TABLE9_THETA.gamma2, delta3=TABLE9_THETA.gamma3)
    ident = enforce_identifiability(th, np.linspace(0, 0.3, 50))
    assert ident.tie and not ident.swapped


def test_identifiability_boundary_cases():
    q = np.linspace(0, 0.3, 50)
    one_off = replace(TABLE9_THETA, delta2=0.0, delta3=0.0)
    ident = enforce_identifiability(one_off, q)
    assert ident.swapped and ident.theta.gamma2 == 0
    both_off = replace(TABLE9_THETA, gamma2=0.0, delta2=0.0, gamma0=1.0, delta0=0.1)
    ident = enforce_identifiability(both_off, q)
    assert ident.swapped
    assert ident.theta.gamma0 / (1 - ident.theta.gamma1) <= ident.theta.delta0 / (1 - ident.theta.delta1)


def test_constant_series_fails_cleanly():
    with pytest.raises(FitError):
        fit(np.full(200, 0.02), FitConfig(n_starts=1))


def test_short_series_warns():
    q = simulate(TABLE9_THETA, n=60, seed=2).series
    with pytest.warns(UserWarning):
        try:
            fit(q, FitConfig(n_starts=1, max_iters=200))
        except FitError:
            pass


def test_fit_error_carries_starts(sim1000):
    with pytest.raises(FitError) as info:
        fit(sim1000.series, FitConfig(n_starts=2, max_iters=20, max_restarts=0))
    assert len(info.value.starts) == 2
    assert not any(s.converged for s in info.value.starts)


def test_more_starts_never_worse(sim1000):
    best = [fit(sim1000.series, FitConfig(n_starts=k, seed=5)).nll_opt for k in (1, 2, 3)]
    assert best[1] <= best[0] and best[2] <= best[1]


def test_variant_nesting(sim1000, truth):
    th = truth.restrict("acaf_static_alpha1")
    q = sim1000.series
    tr = ParamTransform.for_series(q, "acaf_static_alpha1")
    assert nll(tr.to_z(th), q, tr) == pytest.approx(-loglik(th, q, "acaf_full"), rel=1e-12)
    assert loglik(th, q, "acaf_static_alpha1") == loglik(th, q, "acaf_full")


def test_static_variant_recovers_constant_index():
    gen = replace(TABLE9_THETA, gamma0=float(np.log(6.0)), gamma1=0.0, gamma2=0.0, gamma3=0.0)
    series = simulate(gen, "acaf_static_alpha1", n=3000, seed=9).series
    r = fit_variant(series, "acaf_static_alpha1", CFG)
    assert r.theta_hat.gamma1 == r.theta_hat.gamma2 == r.theta_hat.gamma3 == 0
    assert np.isnan(r.std_errors[5]) and np.isfinite(r.std_errors[4])
    assert abs(r.theta_hat.gamma0 - gen.gamma0) < 2 * r.std_errors[4]


def test_initial_guess_is_feasible(sim1000):
    for spec in ModelSpec:
        th = initial_guess(sim1000.series, spec)
        th.check_spec(spec)
        assert th.mu < sim1000.series.q_min


def test_initialization_sensitivity(sim5000):
    a = fit(sim5000.series, CFG)
    b = fit(sim5000.series, CFG, init=LatentState(1.0, 1.0, 1.0))
    assert np.all(np.abs(a.theta_hat.to_array() - b.theta_hat.to_array()) < 1e-3)


def test_var_diverges_at_upper_tail(sim1000, truth):
    levels = [0.9, 0.99, 0.999, 0.99999, 1 - 1e-9]
    v = np.array([conditional_var(truth, sim1000.series, lv)[:50] for lv in levels])
    assert np.all(np.diff(v, axis=0) > 0)
    assert np.all(v[-1] > 10 * v[0])
    with pytest.raises(ValueError):
        conditional_var(truth, sim1000.series, 1.0)


def test_var_exceedance_backtest(sim5000, truth):
    var = conditional_var(truth, sim5000.series, 0.99)
    rate = np.mean(sim5000.series.values > var)
    assert 0.005 <= rate <= 0.02


def test_var_coincident_index_closed_form(sim1000, truth):
    th = replace(truth, delta0=truth.gamma0, delta1=truth.gamma1, delta2=truth.gamma2, delta3=truth.gamma3)
    from acaf import filter_path

    path = filter_path(th, sim1000.series)
    assert np.array_equal(path.alpha1, path.alpha2)
    p = 0.975
    ref = th.mu + path.sigma * (-np.log(p) / 2) ** (-1 / path.alpha1)
    np.testing.assert_allclose(conditional_var(th, sim1000.series, p), ref, rtol=1e-10)


def test_var_rejects_infeasible(sim1000, truth):
    bad = replace(truth, mu=sim1000.series.q_min + 0.01)
    with pytest.raises(ValueError):
        conditional_var(bad, sim1000.series, 0.99)


def test_acf_var_single_branch(sim1000, truth):
    th = truth.restrict("acf")
    from acaf import filter_path

    path = filter_path(th, sim1000.series)
    v = conditional_var(th, sim1000.series, 0.95, spec="acf")
    lcdf = -((path.sigma / (v - th.mu)) ** path.alpha1)
    np.testing.assert_allclose(lcdf, np.log(0.95), rtol=1e-12)
