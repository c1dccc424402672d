import math

import numpy as np
import pytest

from sparsefolio.errors import InvalidConfig, MalformedRow
from sparsefolio.lars import lars_path
from sparsefolio.mcmc import ChainConfig
from sparsefolio.pipeline import (SOLVERS, coerce_params, default_rho, fit_portfolio, in_sample_rss,
                                  load_weights, matched_lars_cardinality, select_tilt, tilt_grid,
                                  weights_csv)
from sparsefolio.transform import PortfolioWeights, reduce_problem

from conftest import make_panel, random_returns

FAST_CHAIN = ChainConfig(n_iter=600, burn_in=100, seed=1)


@pytest.fixture(scope="module")
def train():
    rng = np.random.default_rng(7)
    return make_panel(random_returns(rng, 120, 6))


@pytest.mark.parametrize("solver", SOLVERS)
def test_budget_every_solver(train, solver):
    fit = fit_portfolio(train, solver, default_rho(train), chain=FAST_CHAIN)
    w = fit.weights
    assert w.assets == train.assets
    assert abs(math.fsum(w.weights) - 1.0) <= 1e-10
    assert w.solver_tag == solver


@pytest.mark.parametrize("numeraire", [0, 3, 5])
def test_budget_any_numeraire_and_tilt(train, numeraire):
    fit = fit_portfolio(train, "cd", default_rho(train), lam=0.3, numeraire=numeraire)
    assert abs(math.fsum(fit.weights.weights) - 1.0) <= 1e-10


def test_lars_cardinality_param(train):
    fit = fit_portfolio(train, "lars", default_rho(train), params={"cardinality": "2"})
    assert np.count_nonzero(fit.coeffs) == 2


def test_lars_penalty_zero_is_least_squares(train):
    fit = fit_portfolio(train, "lars", default_rho(train), params={"penalty": 0})
    prob = fit.problem
    Z = np.column_stack([np.ones(len(train)), prob.design])
    ols = np.linalg.lstsq(Z, prob.target, rcond=None)[0][1:]
    np.testing.assert_allclose(fit.coeffs, ols, atol=1e-9)


def test_coerce_params():
    assert coerce_params("qp", {"long_only": "no"}) == {"long_only": False}
    assert coerce_params("cd", {"lambda": "0.5"}) == {"lambda": 0.5}
    with pytest.raises(InvalidConfig):
        coerce_params("cd", {"lambda1": 1})
    with pytest.raises(InvalidConfig):
        coerce_params("cd", {"lambda": "abc"})
    with pytest.raises(InvalidConfig):
        coerce_params("qp", {"long_only": "maybe"})
    with pytest.raises(InvalidConfig):
        coerce_params("ridge", {})


def test_unknown_solver(train):
    with pytest.raises(InvalidConfig):
        fit_portfolio(train, "ridge", 0.0)


def test_weights_round_trip(tmp_path):
    w = PortfolioWeights([0.1, 0.2, 0.7], ["X", "Y", "Z"], "sbr")
    path = tmp_path / "w.csv"
    path.write_text(weights_csv(w, ["seed=0"]))
    back = load_weights(path)
    assert back.assets == w.assets and back.solver_tag == "sbr"
    np.testing.assert_array_equal(back.weights, w.weights)
    assert load_weights(path, "mine").solver_tag == "mine"


def test_load_weights_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("asset,weight\nX,one\n")
    with pytest.raises(MalformedRow):
        load_weights(bad)
    bad.write_text("asset,weight\n")
    with pytest.raises(MalformedRow):
        load_weights(bad)
    bad.write_text("asset,weight\nX,1,2\n")
    with pytest.raises(MalformedRow):
        load_weights(bad)


def test_matched_lars_cardinality(train):
    prob = reduce_problem(train, default_rho(train))
    path = lars_path(prob.design, prob.target)
    kn = path.knots[3]
    rss = in_sample_rss(prob, kn.coeffs)
    assert matched_lars_cardinality(path, prob, rss) <= np.count_nonzero(kn.coeffs)
    assert matched_lars_cardinality(path, prob, math.inf) == 0
    with pytest.raises(ValueError):
        matched_lars_cardinality(path, prob, -1.0)


def test_select_tilt(train):
    grid = tilt_grid(train, default_rho(train))
    assert grid[0] == 0 and np.all(np.diff(grid) > 0)
    best, g, scores = select_tilt(train, "cd", default_rho(train), folds=4)
    assert best in g and scores.shape == g.shape
    assert scores[list(g).index(best)] == scores.min()
