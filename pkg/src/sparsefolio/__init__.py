"""Sparse Bayesian portfolio selection.

Mean-variance allocation is recast as a regression: the budget constraint is
eliminated with a numeraire asset, the expected-return prior tilts the
target, and the resulting problem is solved under Laplace, elastic-net,
horseshoe or spike-and-slab priors.
"""
from .backtest import (BacktestReport, ComparisonTable, annualize, comparison_table, equal_weight,
                       evaluate_portfolio, portfolio_returns, rolling_backtest, write_reports)
from .coordinate import ElasticNetConfig, coord_descent, elastic_net_solve, lambda_max
from .errors import NoConvergence, SparsefolioError
from .lars import SelectionPath, kkt_gap, lars_path
from .market_data import (PricePanel, ReturnPanel, load_prices, load_returns, split_panel, to_returns,
                          write_panel)
from .markowitz import markowitz_qp
from .mcmc import ChainConfig, PosteriorDraws, bayesian_lasso_gibbs, horseshoe_gibbs, summarize_draws
from .pipeline import SOLVERS, FitResult, default_rho, fit_portfolio
from .sbr import SpikeSlabConfig, sbr_objective, sbr_select
from .transform import (Moments, PortfolioWeights, ReducedProblem, conjugate_tilt, recover_weights,
                        reduce_problem, sample_moments)
from .views import Equilibrium, ViewSet, bl_update, implied_returns, load_views, views_to_penalty

__version__ = "0.1.0"
