"""Command-line front end.

Settings come from three places, highest precedence first: command-line
flags, a ``--config`` file (flat ``key=value`` lines, ``#`` comments), and
built-in defaults.  ``SPARSEFOLIO_SEED`` in the environment replaces the
built-in seed default and nothing else.  Solver hyperparameters are given as
``--param key=value`` or ``param.key=value`` in the config file.

Exit codes: 0 success, 1 domain error (message names the error class),
2 usage error.
"""
from __future__ import annotations

import argparse
import datetime as dt
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .backtest import comparison_table, evaluate_portfolio, rolling_backtest, write_reports
from .errors import InvalidConfig, SparsefolioError
from .io import atomic_write_text, csv_text
from .lars import path_rows
from .market_data import POLICIES, load_prices, load_returns, split_panel, to_returns, write_panel
from .mcmc import ChainConfig, summarize_draws
from .pipeline import SOLVER_PARAMS, SOLVERS, default_rho, fit_portfolio, load_weights, select_tilt, weights_csv
from .transform import recover_weights, sample_moments
from .views import bl_update, implied_returns, load_views, views_to_penalty

PROG = "sparsefolio"
SAMPLERS = ("lasso-gibbs", "horseshoe")


class UsageError(Exception):
    pass


def _int(v):
    return int(str(v).strip())


def _float(v):
    x = float(str(v).strip())
    if not math.isfinite(x):
        raise ValueError(f"{v!r} is not finite")
    return x


def _date(v):
    return dt.date.fromisoformat(str(v).strip())


def _lam(v):
    s = str(v).strip().lower()
    return "cv" if s == "cv" else _float(s)


def _bool(v):
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{v!r} is not a boolean")


def _solver(v):
    s = str(v).strip()
    if s not in SOLVERS:
        raise ValueError(f"unknown solver {s!r}; choose from {', '.join(SOLVERS)}")
    return s


def _solver_list(v):
    if isinstance(v, (list, tuple)):
        return tuple(v)
    return tuple(_solver(s) for s in str(v).split(",") if s.strip())


def _choice(*options):
    def conv(v):
        s = str(v).strip()
        if s not in options:
            raise ValueError(f"{s!r} not in {options}")
        return s
    return conv


# every setting: name -> (converter, default)
SETTINGS = {
    "data": (str, None),
    "returns": (str, None),
    "split": (_date, None),
    "rho": (_float, None),
    "numeraire": (str, "0"),
    "lam": (_lam, 0.0),
    "policy": (_choice(*POLICIES), "drop"),
    "out": (str, "."),
    "seed": (_int, 0),
    "solver": (_solver, "lars"),
    "solvers": (_solver_list, ("lars", "cd", "enet", "sbr", "lasso-gibbs", "horseshoe", "qp", "naive")),
    "views": (str, None),
    "tau": (_float, 0.05),
    "market_sharpe": (_float, 1.0),
    "market_weights": (str, None),
    "n_iter": (_int, 12_000),
    "burn_in": (_int, 2_000),
    "thin": (_int, 1),
    "convention": (_choice("paper", "standard"), "paper"),
    "mode": (_choice("fixed", "drift"), "fixed"),
    "rolling_window": (_int, None),
    "rolling_stride": (_int, 21),
    "lasso": (_bool, True),
    "folds": (_int, 5),
}


@dataclass
class RunConfig:
    command: str
    values: dict
    params: dict = field(default_factory=dict)
    sources: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def header(self, *extra) -> list[str]:
        lines = [f"seed={self.seed}", f"command={self.command}"]
        return lines + [str(e) for e in extra]

    @property
    def chain(self) -> ChainConfig:
        return ChainConfig(self.n_iter, self.burn_in, self.thin, self.seed)


def read_config_file(path) -> tuple[dict, dict]:
    """Parse a flat ``key=value`` file into (settings, solver params)."""
    values, params = {}, {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidConfig(f"{path}:{n}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key.startswith("param."):
            params[key[len("param."):]] = value
            continue
        if key == "lambda":
            key = "lam"
        if key not in SETTINGS:
            raise InvalidConfig(f"{path}:{n}: unknown key {key!r}")
        try:
            values[key] = SETTINGS[key][0](value)
        except ValueError as exc:
            raise InvalidConfig(f"{path}:{n}: bad value for {key}: {exc}") from None
    return values, params


def resolve(command: str, ns: argparse.Namespace, env=None) -> RunConfig:
    """Merge defaults, environment seed, config file and flags (in rising precedence)."""
    env = os.environ if env is None else env
    values = {k: d for k, (_, d) in SETTINGS.items()}
    sources = {k: "default" for k in SETTINGS}
    if env.get("SPARSEFOLIO_SEED", "").strip():
        try:
            values["seed"] = _int(env["SPARSEFOLIO_SEED"])
        except ValueError:
            raise UsageError(f"SPARSEFOLIO_SEED={env['SPARSEFOLIO_SEED']!r} is not an integer") from None
        sources["seed"] = "env"
    params = {}
    flags = vars(ns)
    if flags.get("config"):
        cfg, params = read_config_file(flags["config"])
        values.update(cfg)
        sources.update({k: "config" for k in cfg})
    for key, raw in flags.items():
        if key in ("config", "command", "param", "weights", "no_lasso"):
            continue
        try:
            values[key] = SETTINGS[key][0](raw)
        except ValueError as exc:
            raise UsageError(f"--{key.replace('_', '-')}: {exc}") from None
        sources[key] = "flag"
    if flags.get("no_lasso"):
        values["lasso"] = False
        sources["lasso"] = "flag"
    for item in flags.get("param") or ():
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    values["weights"] = tuple(flags.get("weights") or ())
    return RunConfig(command, values, params, sources)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="flat key=value settings file")
    common.add_argument("--seed", help="RNG seed (default: $SPARSEFOLIO_SEED or 0)")
    common.add_argument("--out", help="output directory (default: .)")

    data = argparse.ArgumentParser(add_help=False, argument_default=S)
    data.add_argument("--data", help="price file (date,TICKER,...)")
    data.add_argument("--returns", help="return file, used instead of --data")
    data.add_argument("--policy", help="missing-cell policy: drop or strict")
    data.add_argument("--split", help="last training date (YYYY-MM-DD)")

    fit = argparse.ArgumentParser(add_help=False, argument_default=S)
    fit.add_argument("--rho", help="target per-period return (default: mean asset return)")
    fit.add_argument("--numeraire", help="numeraire asset: index or ticker (default 0)")
    fit.add_argument("--lambda", dest="lam", help="tilt weight >= 0, or 'cv'")
    fit.add_argument("--folds", help="cross-validation folds for --lambda cv")
    fit.add_argument("--param", action="append", help="solver hyperparameter key=value (repeatable)")

    chain = argparse.ArgumentParser(add_help=False, argument_default=S)
    chain.add_argument("--n-iter", dest="n_iter", help="Gibbs iterations")
    chain.add_argument("--burn-in", dest="burn_in", help="discarded prefix")
    chain.add_argument("--thin", help="keep every n-th draw")

    report = argparse.ArgumentParser(add_help=False, argument_default=S)
    report.add_argument("--convention", help="annualization: paper (x252) or standard (sqrt 252)")
    report.add_argument("--mode", help="fixed (daily re-balance) or drift (buy and hold)")

    p = argparse.ArgumentParser(prog=PROG, description="Sparse Bayesian portfolio selection.")
    sub = p.add_subparsers(dest="command", metavar="command", required=True)

    sub.add_parser("returns", parents=[common, data], argument_default=S,
                   help="convert a price file to returns.csv")
    s = sub.add_parser("select", parents=[common, data, fit, chain], argument_default=S,
                       help="fit one solver and write weights.csv")
    s.add_argument("--solver", help=f"one of {', '.join(SOLVERS)}")
    s.add_argument("--views", help="views file (enet quadratic penalty)")
    s.add_argument("--tau", help="view prior strength")
    s = sub.add_parser("path", parents=[common, data, fit], argument_default=S,
                       help="full LARS path to path.csv")
    s.add_argument("--no-lasso", action="store_true", help="plain LARS (no drop step)")
    s = sub.add_parser("sample", parents=[common, data, fit, chain], argument_default=S,
                       help="MCMC draws to draws.csv plus summary")
    s.add_argument("--solver", help="lasso-gibbs or horseshoe")
    s = sub.add_parser("bl", parents=[common, data], argument_default=S,
                       help="Black-Litterman posterior means and view penalty")
    s.add_argument("--views", help="views file: type,assets,value,confidence")
    s.add_argument("--tau", help="prior strength (default 0.05)")
    s.add_argument("--market-sharpe", dest="market_sharpe", help="market Sharpe ratio (default 1)")
    s.add_argument("--market-weights", dest="market_weights", help="asset,weight file (default equal)")
    s = sub.add_parser("backtest", parents=[common, data, report], argument_default=S,
                       help="evaluate weights files on the test window")
    s.add_argument("--weights", action="append", help="weights file (repeatable)")
    s = sub.add_parser("compare", parents=[common, data, fit, chain, report], argument_default=S,
                       help="fit several solvers and write a comparison report")
    s.add_argument("--solvers", help="comma-separated solver list (default: all)")
    s.add_argument("--weights", action="append", help="extra weights file to include (repeatable)")
    s.add_argument("--rolling-window", dest="rolling_window", help="re-fit on a trailing window of this length")
    s.add_argument("--rolling-stride", dest="rolling_stride", help="periods between re-fits (default 21)")
    return p


# --- helpers ---------------------------------------------------------------

def _load_panel(cfg: RunConfig):
    if cfg.returns is not None:
        path, loader = cfg.returns, load_returns
    elif cfg.data is not None:
        path, loader = cfg.data, lambda f, pol: to_returns(load_prices(f, pol))
    else:
        raise UsageError("one of --data or --returns is required")
    if not Path(path).is_file():
        raise UsageError(f"input file not found: {path}")
    return loader(path, cfg.policy)


def _train_test(cfg: RunConfig, need_test: bool):
    panel = _load_panel(cfg)
    if cfg.split is None:
        if need_test:
            raise UsageError("--split is required for this command")
        return panel, None
    return split_panel(panel, cfg.split)


def _numeraire(cfg: RunConfig, assets) -> int:
    s = str(cfg.numeraire).strip()
    if s in assets:
        return assets.index(s)
    try:
        return int(s)
    except ValueError:
        raise InvalidConfig(f"numeraire {s!r} is neither an index nor a ticker in the panel") from None


def _fit_args(cfg: RunConfig, train, solver: str):
    num = _numeraire(cfg, train.assets)
    rho = cfg.rho if cfg.rho is not None else default_rho(train)
    lam = cfg.lam
    notes = [f"rho={rho!r}", f"numeraire={num}"]
    if lam == "cv":
        lam, _, _ = select_tilt(train, solver, rho, num, cfg.params, cfg.folds)
        notes.append("lambda_cv=1")
    notes.append(f"lambda={lam!r}")
    return rho, lam, num, notes


def _fit(cfg: RunConfig, train, solver: str, params=None):
    rho, lam, num, notes = _fit_args(cfg, train, solver)
    views = None
    if solver == "enet" and cfg.views is not None:
        if not Path(cfg.views).is_file():
            raise UsageError(f"views file not found: {cfg.views}")
        views = load_views(cfg.views, train.assets, cfg.tau)
    res = fit_portfolio(train, solver, rho, lam, num, cfg.params if params is None else params,
                        cfg.chain, views)
    return res, notes


def _weights_header(cfg: RunConfig, notes, w) -> list[str]:
    hp = [f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in sorted(w.hyperparams.items())]
    return cfg.header(*(n for n in notes if n.startswith("lambda_cv")), *hp)


# --- subcommands -----------------------------------------------------------

def cmd_returns(cfg: RunConfig) -> list[Path]:
    if cfg.data is None:
        raise UsageError("returns needs --data (a price file)")
    panel = _load_panel(cfg)
    path = Path(cfg.out) / "returns.csv"
    write_panel(path, panel.dates, panel.assets, panel.returns, cfg.header(f"source={Path(cfg.data).name}"))
    return [path]


def cmd_select(cfg: RunConfig) -> list[Path]:
    train, _ = _train_test(cfg, False)
    res, notes = _fit(cfg, train, cfg.solver)
    path = Path(cfg.out) / "weights.csv"
    atomic_write_text(path, weights_csv(res.weights, _weights_header(cfg, notes, res.weights)))
    return [path]


def cmd_path(cfg: RunConfig) -> list[Path]:
    train, _ = _train_test(cfg, False)
    params = {**cfg.params, "lasso": cfg.lasso}
    res, notes = _fit(cfg, train, "lars", params)
    prob = res.problem
    rows = path_rows(res.path, lambda c: recover_weights(c, prob.numeraire, train.assets).weights, train.assets)
    path = Path(cfg.out) / "path.csv"
    atomic_write_text(path, csv_text(["step", "lambda", "asset", "weight"], rows,
                                     cfg.header(*notes, f"lasso={int(cfg.lasso)}")))
    return [path]


def cmd_sample(cfg: RunConfig) -> list[Path]:
    solver = cfg.solver if cfg.sources.get("solver") != "default" else "horseshoe"
    if solver not in SAMPLERS:
        raise UsageError(f"sample needs --solver lasso-gibbs or horseshoe, got {solver!r}")
    train, _ = _train_test(cfg, False)
    res, notes = _fit(cfg, train, solver)
    prob, draws = res.problem, res.draws
    names = prob.other_assets
    head = cfg.header(*notes, f"solver={solver}", f"n_iter={cfg.n_iter}", f"burn_in={cfg.burn_in}",
                      f"thin={cfg.thin}")
    out = Path(cfg.out)
    atomic_write_text(out / "draws.csv", csv_text(["iteration", "coordinate", "value"],
                                                  ((it, names[j], v) for it, j, v in draws.rows()), head))
    mean = draws.samples.mean(axis=0)
    lo, hi = np.quantile(draws.samples, [0.25, 0.75], axis=0)
    _, support = summarize_draws(draws, res.weights.hyperparams.get("rule", "interval"))
    keep = set(support)
    rows = [(names[j], float(mean[j]), float(lo[j]), float(hi[j]), int(j in keep)) for j in range(len(names))]
    atomic_write_text(out / "summary.csv", csv_text(["asset", "mean", "q25", "q75", "included"], rows, head))
    atomic_write_text(out / "weights.csv", weights_csv(res.weights, _weights_header(cfg, notes, res.weights)))
    return [out / "draws.csv", out / "summary.csv", out / "weights.csv"]


def cmd_bl(cfg: RunConfig) -> list[Path]:
    if cfg.views is None:
        raise UsageError("bl needs --views")
    if not Path(cfg.views).is_file():
        raise UsageError(f"views file not found: {cfg.views}")
    train, _ = _train_test(cfg, False)
    sigma = sample_moments(train).sigma
    p = len(train.assets)
    if cfg.market_weights is not None:
        mw = load_weights(cfg.market_weights).as_dict()
        missing = [a for a in train.assets if a not in mw]
        if missing:
            raise InvalidConfig(f"market weights missing assets {missing}")
        wm = np.array([mw[a] for a in train.assets])
    else:
        wm = np.full(p, 1.0 / p)
    views = load_views(cfg.views, train.assets, cfg.tau)
    eq = implied_returns(sigma, wm, cfg.market_sharpe)
    mean, cov = bl_update(eq, sigma, views)
    head = cfg.header(f"tau={cfg.tau!r}", f"market_sharpe={cfg.market_sharpe!r}", f"views={views.n_views}")
    out = Path(cfg.out)
    rows = [(a, float(eq.pi[i]), float(mean[i]), float(math.sqrt(cov[i, i]))) for i, a in enumerate(train.assets)]
    atomic_write_text(out / "bl.csv", csv_text(["asset", "pi", "posterior_mean", "posterior_sd"], rows, head))
    omega = views_to_penalty(views, 1.0).omega
    rows = [(a, *map(float, omega[i])) for i, a in enumerate(train.assets)]
    atomic_write_text(out / "omega.csv", csv_text(["asset", *train.assets], rows, head))
    return [out / "bl.csv", out / "omega.csv"]


def _reports_header(cfg: RunConfig, test) -> list[str]:
    return cfg.header(f"test_start={test.dates[0].isoformat()}", f"test_end={test.dates[-1].isoformat()}",
                      f"mode={cfg.mode}")


def cmd_backtest(cfg: RunConfig) -> list[Path]:
    if not cfg.weights:
        raise UsageError("backtest needs at least one --weights file")
    for w in cfg.weights:
        if not Path(w).is_file():
            raise UsageError(f"weights file not found: {w}")
    _, test = _train_test(cfg, True)
    reports = []
    for w in cfg.weights:
        pw = load_weights(w)
        label = pw.solver_tag if pw.solver_tag != "portfolio" else Path(w).stem
        reports.append(evaluate_portfolio(pw, test, cfg.convention, cfg.mode, label))
    written = write_reports(_unique(reports), cfg.out, _reports_header(cfg, test))
    print(comparison_table(_unique(reports)).to_text(), end="")
    return written


def _unique(reports):
    seen, out = {}, []
    for r in reports:
        n = seen.get(r.label, 0)
        seen[r.label] = n + 1
        out.append(r if n == 0 else replace(r, label=f"{r.label}_{n + 1}"))
    return out


def _params_for(solver: str, params: dict) -> dict:
    """Hyperparameters a solver understands; compare shares one ``--param`` set across solvers."""
    return {k: v for k, v in params.items() if k in SOLVER_PARAMS[solver]}


def cmd_compare(cfg: RunConfig) -> list[Path]:
    for w in cfg.weights:
        if not Path(w).is_file():
            raise UsageError(f"weights file not found: {w}")
    out = Path(cfg.out)
    written, reports = [], []
    if cfg.rolling_window is not None:
        panel = _load_panel(cfg)
        for solver in cfg.solvers:
            def refit(tr, solver=solver):
                return _fit(cfg, tr, solver, _params_for(solver, cfg.params))[0].weights
            reports.append(rolling_backtest(panel, refit, cfg.rolling_window, cfg.rolling_stride,
                                            cfg.convention, solver))
        head = cfg.header(f"rolling_window={cfg.rolling_window}", f"rolling_stride={cfg.rolling_stride}")
    else:
        train, test = _train_test(cfg, True)
        for solver in cfg.solvers:
            res, notes = _fit(cfg, train, solver, _params_for(solver, cfg.params))
            path = out / f"weights_{solver}.csv"
            atomic_write_text(path, weights_csv(res.weights, _weights_header(cfg, notes, res.weights)))
            written.append(path)
            reports.append(evaluate_portfolio(res.weights, test, cfg.convention, cfg.mode, solver))
        for w in cfg.weights:
            pw = load_weights(w)
            reports.append(evaluate_portfolio(pw, test, cfg.convention, cfg.mode, Path(w).stem))
        head = _reports_header(cfg, test)
    reports = _unique(reports)
    written += write_reports(reports, out, head)
    print(comparison_table(reports).to_text(), end="")
    return written


COMMANDS = {
    "returns": cmd_returns,
    "select": cmd_select,
    "path": cmd_path,
    "sample": cmd_sample,
    "bl": cmd_bl,
    "backtest": cmd_backtest,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        cfg = resolve(ns.command, ns)
        COMMANDS[ns.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except SparsefolioError as exc:
        print(f"{PROG}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"{PROG}: error: ValueError: {exc}", file=sys.stderr)
        return 1
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
