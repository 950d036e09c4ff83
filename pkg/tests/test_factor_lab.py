"""Factor-model Monte Carlo of the maxima-of-maxima limit."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acaf import FactorLabConfig, LimitCase, NoiseLaw, convergence_experiment, limit_cdf, norming_constant
from acaf.factor_lab import PAPER_PAIRINGS, Case, ks_distance, normalized_maxima, simulate_factor_maxima, write_table


def test_norming_constant_examples():
    assert norming_constant([1, 1], 1.0) == pytest.approx(2.0, rel=1e-15)
    assert norming_constant([1, 1], 2.0) == pytest.approx(np.sqrt(2), rel=1e-15)
    assert norming_constant([0.5, 2, 1], 1e6) == pytest.approx(2.0, abs=1e-5)
    with pytest.raises(ValueError):
        norming_constant([], 2.0)
    with pytest.raises(ValueError):
        norming_constant([1.0, 0.0], 2.0)


def test_limit_cdf_examples():
    assert limit_cdf(LimitCase.from_indices(3, 3), 1.0) == pytest.approx(np.exp(-2), rel=1e-15)
    assert limit_cdf(LimitCase.from_indices(3, 5), 1.0) == pytest.approx(0.367879441, rel=1e-9)
    assert limit_cdf(LimitCase.from_indices(3, 2), -1.0) == 0.0
    assert limit_cdf(LimitCase.from_indices(3, 2), 0.0) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.2, 20), st.floats(0.2, 20), st.lists(st.floats(-5, 1e4), min_size=2, max_size=40))
def test_limit_cdf_is_a_cdf(a1, a2, xs):
    case = LimitCase.from_indices(a1, a2)
    x = np.sort(xs)
    F = limit_cdf(case, x)
    assert np.all((F >= 0) & (F <= 1)) and np.all(np.diff(F) >= 0)
    assert limit_cdf(case, 10.0 ** (12 / case.alpha)) == pytest.approx(1.0, abs=1e-9)
    assert limit_cdf(case, 10.0 ** (-2 / case.alpha)) < 1e-40


def test_case_selection_and_alpha():
    cfgs = {k: FactorLabConfig(noise1=a, noise2=b) for k, (a, b) in PAPER_PAIRINGS.items()}
    assert cfgs["alpha1_less"].limit.case is Case.ALPHA1_LESS and cfgs["alpha1_less"].limit.alpha == 3
    assert cfgs["equal"].limit.case is Case.EQUAL and cfgs["equal"].limit.alpha == 3
    assert cfgs["alpha1_greater"].limit.case is Case.ALPHA1_GREATER and cfgs["alpha1_greater"].limit.alpha == 2


def test_single_element_panel():
    cfg = FactorLabConfig()
    e1, e2 = np.array([1.7]), np.array([2.4])
    q = simulate_factor_maxima(cfg, 1, 0, loadings=[0.0], vols=[1.0], factor=0.8, noise=(e1, e2))
    assert q == 2.4


def test_normalization_uses_dominant_index():
    vols = np.array([0.02, 0.05, 0.07])
    e = (np.array([1.0, 2.0, 3.0]), np.array([0.5, 0.5, 0.5]))
    for key, alpha in (("alpha1_less", 3.0), ("alpha1_greater", 2.0)):
        cfg = FactorLabConfig(*PAPER_PAIRINGS[key])
        q = simulate_factor_maxima(cfg, 3, 0, loadings=np.zeros(3), vols=vols, factor=0.0, noise=e)
        assert q == pytest.approx(0.21 / np.sum(vols**alpha) ** (1 / alpha), rel=1e-14)


def test_noise_laws():
    rng = np.random.default_rng(0)
    x = NoiseLaw("pareto", 3.0, 1.0).sample(rng, 200000)
    assert x.min() >= 1.0
    # P(X > 2) = 2**-3.
    assert np.mean(x > 2) == pytest.approx(0.125, abs=3 * np.sqrt(0.125 * 0.875 / 200000))
    assert NoiseLaw.parse("t:3") == NoiseLaw("t", 3.0)
    assert NoiseLaw.parse("pareto:1:3") == NoiseLaw("pareto", 3.0, 1.0)
    with pytest.raises(ValueError):
        NoiseLaw.parse("normal:1")
    with pytest.raises(ValueError):
        NoiseLaw("t", 0.0)


def test_ks_on_exact_quantile_grid():
    case = LimitCase.from_indices(3, 3)
    reps = 1000
    levels = (np.arange(1, reps + 1) - 0.5) / reps
    # exp(-2 x^-3) = u  ->  x = (-log(u) / 2)^(-1/3)
    sample = (-np.log(levels) / 2) ** (-1 / 3)
    assert ks_distance(sample, lambda x: limit_cdf(case, x)) <= 0.5 / reps + 1e-12


def test_seed_determinism(tmp_path):
    cfg = FactorLabConfig(p_grid=(50, 200), reps=40, seed=3)
    a = convergence_experiment(cfg, dump=tmp_path / "a.csv")
    b = convergence_experiment(cfg, dump=tmp_path / "b.csv")
    assert a == b
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    write_table(a, tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "p,case,reps,ks,pass,frac_nonpositive"


def test_config_validation():
    with pytest.raises(ValueError):
        FactorLabConfig(p_grid=(0,))
    with pytest.raises(ValueError):
        FactorLabConfig(reps=0)


@pytest.mark.parametrize("key", list(PAPER_PAIRINGS))
def test_nonpositive_mass_vanishes(key):
    cfg = FactorLabConfig(*PAPER_PAIRINGS[key], p_grid=(10000,), reps=1000, seed=0)
    assert np.mean(normalized_maxima(cfg, 10000) <= 0) < 0.05
