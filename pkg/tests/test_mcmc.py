import numpy as np
import pytest

from sparsefolio.errors import EmptyDraws, InvalidConfig, NumericalOverflow
from sparsefolio.mcmc import (ChainConfig, PosteriorDraws, bayesian_lasso_gibbs, batch_means_se, horseshoe_gibbs,
                              summarize_draws)

from conftest import centred

SAMPLERS = {"lasso": bayesian_lasso_gibbs, "horseshoe": horseshoe_gibbs}
NULL_SEEDS = (100, 101, 102, 103)


def small_problem(seed=0, T=40, k=4):
    r = np.random.default_rng(seed)
    X = r.standard_normal((T, k))
    return X, X @ r.normal(0, 1, k) + r.standard_normal(T)


@pytest.mark.parametrize("name", SAMPLERS)
def test_same_seed_bit_identical(name):
    X, y = small_problem()
    cfg = ChainConfig(n_iter=600, burn_in=100, thin=2, seed=42)
    a, b = SAMPLERS[name](X, y, cfg), SAMPLERS[name](X, y, cfg)
    assert a.samples.tobytes() == b.samples.tobytes()
    assert a.sigma2_draws.tobytes() == b.sigma2_draws.tobytes()
    c = SAMPLERS[name](X, y, ChainConfig(n_iter=600, burn_in=100, thin=2, seed=43))
    assert c.samples.tobytes() != a.samples.tobytes()


@pytest.mark.parametrize("name", SAMPLERS)
def test_metadata_and_shapes(name):
    X, y = small_problem()
    d = SAMPLERS[name](X, y, ChainConfig(n_iter=500, burn_in=100, thin=3, seed=1))
    assert d.samples.shape == (134, 4) and d.sigma2_draws.shape == (134,)
    assert (d.seed, d.burn_in, d.thin) == (1, 100, 3)
    assert np.all(d.sigma2_draws > 0)
    rows = list(d.rows())
    assert rows[0][:2] == (100, 0) and rows[4][:2] == (103, 0) and len(rows) == 134 * 4
    assert d.hyper_draws


def conjugate_oracle(X, y):
    """Posterior of the frozen-scale model on centred data.

    w | sigma2 ~ N(A^-1 X'y, sigma2 A^-1) with A = X'X + I, and sigma2 marginally
    IG((n-1)/2, S/2), so Cov(w) = S/(n-3) A^-1.
    """
    n = len(y)
    A = X.T @ X + np.eye(X.shape[1])
    mean = np.linalg.solve(A, X.T @ y)
    S = float(y @ y - (X.T @ y) @ mean)
    return mean, S / (n - 3) * np.linalg.inv(A)


@pytest.mark.parametrize("name", SAMPLERS)
def test_frozen_scales_reproduce_conjugate_mean(name):
    X, y = centred(*small_problem(3, T=50))
    mean, _ = conjugate_oracle(X, y)
    cfg = ChainConfig(n_iter=10_500, burn_in=500, seed=9)
    kw = {"freeze_scales": True, "standardize": False}
    d = SAMPLERS[name](X, y, cfg, **kw)
    z = (d.samples.mean(axis=0) - mean) / batch_means_se(d.samples)
    assert np.max(np.abs(z)) < 3


def test_frozen_samplers_agree():
    X, y = centred(*small_problem(4))
    cfg = ChainConfig(n_iter=300, burn_in=0, seed=2)
    a = bayesian_lasso_gibbs(X, y, cfg, freeze_scales=True, standardize=False)
    b = horseshoe_gibbs(X, y, cfg, freeze_scales=True, standardize=False)
    np.testing.assert_array_equal(a.samples, b.samples)


@pytest.fixture(scope="module")
def null_fits():
    out = []
    for seed in NULL_SEEDS:
        r = np.random.default_rng(seed)
        X = r.standard_normal((100, 10))
        y = r.standard_normal(100)
        Xc, yc = centred(X, y)
        ols = np.linalg.lstsq(Xc, yc, rcond=None)[0]
        cfg = ChainConfig(seed=seed)
        out.append((ols, {n: f(X, y, cfg).samples.mean(axis=0) for n, f in SAMPLERS.items()}))
    return out


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="the stated Laplace hierarchy shrinks null coefficients by roughly 10%, "
                                       "not 80%; see the decisions ledger")
def test_lasso_pure_noise_below_fifth_of_ols(null_fits):
    for ols, pm in null_fits:
        assert np.all(np.abs(pm["lasso"]) < 0.2 * np.abs(ols))


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="per-coordinate ratios are unstable where OLS is near zero; "
                                       "see the decisions ledger")
def test_horseshoe_null_below_fifth_of_ols(null_fits):
    for ols, pm in null_fits:
        assert np.all(np.abs(pm["horseshoe"]) < 0.2 * np.abs(ols))


@pytest.mark.slow
@pytest.mark.parametrize("name", SAMPLERS)
def test_null_data_shrinks_toward_zero(null_fits, name):
    for ols, pm in null_fits:
        assert np.linalg.norm(pm[name]) < np.linalg.norm(ols)
        assert np.median(np.abs(pm[name]) / np.abs(ols)) < 1


def test_horseshoe_beats_lasso_on_null(null_fits):
    for ols, pm in null_fits:
        assert np.linalg.norm(pm["horseshoe"]) < np.linalg.norm(pm["lasso"])


@pytest.fixture(scope="module")
def strong_signal():
    r = np.random.default_rng(7)
    X = r.standard_normal((200, 10))
    beta = np.zeros(10)
    beta[3] = 10.0
    y = X @ beta + r.standard_normal(200)
    return horseshoe_gibbs(X, y, ChainConfig(seed=7)), beta


@pytest.mark.slow
def test_horseshoe_single_strong_signal(strong_signal):
    d, beta = strong_signal
    pm = d.samples.mean(axis=0)
    assert abs(pm[3] - 10) < 1.0
    assert np.all(np.abs(np.delete(pm, 3)) < 1.0)


@pytest.mark.slow
def test_horseshoe_ranks_signal_first(strong_signal):
    d, beta = strong_signal
    mag = np.abs(d.samples.mean(axis=0))
    signal, null = mag[beta != 0], mag[beta == 0]
    auc = np.mean([s > n for s in signal for n in null])
    assert auc == 1.0


@pytest.mark.slow
@pytest.mark.parametrize("name", SAMPLERS)
def test_chain_halves_agree(name):
    X, y = small_problem(11, T=80, k=6)
    d = SAMPLERS[name](X, y, ChainConfig(seed=3))
    half = d.n_draws // 2
    a, b = d.samples[:half], d.samples[half:2 * half]
    se = np.sqrt(batch_means_se(a) ** 2 + batch_means_se(b) ** 2)
    assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0)) < 5 * se)


@pytest.mark.parametrize("name", SAMPLERS)
def test_overflow_is_reported(name):
    r = np.random.default_rng(0)
    with pytest.raises(NumericalOverflow) as exc, np.errstate(all="ignore"):
        SAMPLERS[name](r.standard_normal((30, 3)), 1e200 * r.standard_normal(30), ChainConfig(100, 10))
    assert exc.value.state


# --- summaries -------------------------------------------------------------

def draws_of(samples):
    s = np.asarray(samples, dtype=float)
    return PosteriorDraws(s, np.ones(len(s)), 0, 0, 1)


def test_constant_draws():
    coeffs, support = summarize_draws(draws_of(np.tile([0.5, -2.0, 1e-3], (20, 1))))
    np.testing.assert_allclose(coeffs, [0.5, -2.0, 1e-3], rtol=1e-14)
    assert support == (0, 1, 2)


def test_symmetric_draws_excluded():
    s = np.column_stack([np.linspace(-1, 1, 41), np.linspace(1, 2, 41)])
    coeffs, support = summarize_draws(draws_of(s))
    assert support == (1,) and coeffs[0] == 0


def test_interval_rule_matches_order_statistics(rng):
    s = rng.normal([0.0, 0.3, -0.2, 1.0], 0.5, size=(401, 4))
    _, support = summarize_draws(draws_of(s))
    srt = np.sort(s, axis=0)
    lo, hi = srt[100], srt[300]  # exact order statistics when (n-1)/4 is an integer
    expected = tuple(j for j in range(4) if lo[j] > 0 or hi[j] < 0)
    assert support == expected


def test_threshold_rule():
    s = np.tile([0.05, -0.2, 0.5], (10, 1))
    coeffs, support = summarize_draws(draws_of(s), "threshold", 0.1)
    assert support == (1, 2)
    np.testing.assert_allclose(coeffs, [0.0, -0.2, 0.5], rtol=1e-14)
    assert coeffs[0] == 0


def test_unknown_rule():
    with pytest.raises(ValueError):
        summarize_draws(draws_of(np.ones((3, 2))), "mode")


def test_empty_draws():
    with pytest.raises(EmptyDraws):
        draws_of(np.empty((0, 3)))


@pytest.mark.parametrize("kwargs", [{"n_iter": 10, "burn_in": 10}, {"thin": 0}, {"seed": -1}])
def test_chain_config_validation(kwargs):
    with pytest.raises(InvalidConfig):
        ChainConfig(**kwargs)


def test_batch_means_se_iid(rng):
    x = rng.standard_normal((100_000, 2))
    np.testing.assert_allclose(batch_means_se(x), 1 / np.sqrt(100_000), rtol=0.3)
