import filecmp
import subprocess
import sys

import numpy as np
import pytest

from sparsefolio.cli import main, read_config_file, resolve, build_parser, UsageError
from sparsefolio.errors import InvalidConfig
from sparsefolio.market_data import write_panel
from sparsefolio.pipeline import load_weights
from sparsefolio.synthetic import factor_market

FAST = ["--n-iter", "400", "--burn-in", "100"]


@pytest.fixture(scope="module")
def prices(tmp_path_factory):
    panel = factor_market(n_assets=8, n_factors=2, n_days=160, seed=3)
    path = tmp_path_factory.mktemp("data") / "prices.csv"
    write_panel(path, panel.dates, panel.assets, panel.prices)
    return path, panel


def split_date(panel):
    return panel.dates[100].isoformat()


def read_rows(path):
    lines = path.read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    return [ln for ln in lines if ln.startswith("#")], body[0].split(","), [r.split(",") for r in body[1:]]


def test_returns_command(prices, tmp_path):
    path, panel = prices
    assert main(["returns", "--data", str(path), "--out", str(tmp_path)]) == 0
    comments, header, rows = read_rows(tmp_path / "returns.csv")
    assert "# seed=0" in comments and header == ["date", *panel.assets]
    assert len(rows) == len(panel.dates) - 1


def test_select_writes_budget_weights(prices, tmp_path):
    path, panel = prices
    code = main(["select", "--data", str(path), "--split", split_date(panel), "--solver", "sbr",
                 "--out", str(tmp_path), "--seed", "9"])
    assert code == 0
    text = (tmp_path / "weights.csv").read_text()
    assert text.startswith("# seed=9\n# command=select\n")
    w = load_weights(tmp_path / "weights.csv")
    assert w.solver_tag == "sbr" and abs(w.weights.sum() - 1) < 1e-10


def test_path_csv_columns(prices, tmp_path):
    path, panel = prices
    assert main(["path", "--data", str(path), "--out", str(tmp_path), "--numeraire", panel.assets[2]]) == 0
    comments, header, rows = read_rows(tmp_path / "path.csv")
    assert header == ["step", "lambda", "asset", "weight"]
    assert "# numeraire=2" in comments
    steps = {}
    for step, lam, asset, w in rows:
        steps.setdefault(int(step), []).append(float(w))
    assert all(len(v) == len(panel.assets) for v in steps.values())
    assert all(abs(sum(v) - 1) < 1e-10 for v in steps.values())
    assert float(rows[-1][1]) == 0.0


def test_sample_outputs(prices, tmp_path):
    path, panel = prices
    assert main(["sample", "--data", str(path), "--solver", "lasso-gibbs", "--out", str(tmp_path), *FAST]) == 0
    _, header, rows = read_rows(tmp_path / "draws.csv")
    assert header == ["iteration", "coordinate", "value"]
    assert len(rows) == 300 * (len(panel.assets) - 1)
    assert {r[1] for r in rows} == set(panel.assets[1:])
    _, header, rows = read_rows(tmp_path / "summary.csv")
    assert header == ["asset", "mean", "q25", "q75", "included"]
    for _, mean, q25, q75, inc in rows:
        assert float(q25) <= float(q75) and inc in ("0", "1")
    assert (tmp_path / "weights.csv").exists()


def test_sample_rejects_deterministic_solver(prices, tmp_path):
    path, _ = prices
    assert main(["sample", "--data", str(path), "--solver", "lars", "--out", str(tmp_path)]) == 2


def test_bl_command(prices, tmp_path):
    path, panel = prices
    a, b = panel.assets[1], panel.assets[4]
    views = tmp_path / "views.csv"
    views.write_text(f"type,assets,value,confidence\nabsolute,{a},0.001,1e-6\nrelative,{a};{b},0.0005,1e-6\n")
    assert main(["bl", "--data", str(path), "--views", str(views), "--out", str(tmp_path)]) == 0
    _, header, rows = read_rows(tmp_path / "bl.csv")
    assert header == ["asset", "pi", "posterior_mean", "posterior_sd"]
    post = {r[0]: float(r[2]) for r in rows}
    pi = {r[0]: float(r[1]) for r in rows}
    assert abs(post[a] - 0.001) < abs(pi[a] - 0.001)
    _, header, rows = read_rows(tmp_path / "omega.csv")
    M = np.array([[float(v) for v in r[1:]] for r in rows])
    np.testing.assert_allclose(M, M.T)
    assert np.all(np.linalg.eigvalsh(M) >= -1e-12)


def test_backtest_command(prices, tmp_path, capsys):
    path, panel = prices
    split = split_date(panel)
    for solver in ("lars", "naive"):
        d = tmp_path / solver
        assert main(["select", "--data", str(path), "--split", split, "--solver", solver, "--out", str(d)]) == 0
    code = main(["backtest", "--data", str(path), "--split", split, "--out", str(tmp_path),
                 "--weights", str(tmp_path / "lars" / "weights.csv"),
                 "--weights", str(tmp_path / "naive" / "weights.csv")])
    assert code == 0
    _, header, rows = read_rows(tmp_path / "report.csv")
    assert header[1:] == ["lars", "naive"]
    assert [r[0] for r in rows] == ["mu", "sigma", "mu/sigma", "||w||_0"]
    assert rows[3][2] == str(len(panel.assets))
    assert "lars" in capsys.readouterr().out
    cum = (tmp_path / "cumulative_naive.csv").read_text().splitlines()
    assert cum[0] == "# seed=0" and "start,1.0" in cum


def test_compare_deterministic(prices, tmp_path, monkeypatch):
    path, panel = prices
    monkeypatch.delenv("SPARSEFOLIO_SEED", raising=False)
    args = ["compare", "--data", str(path), "--split", split_date(panel), *FAST, "--seed", "4"]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert cmp.left_list == cmp.right_list and len(cmp.left_list) == 2 * 8 + 1
    _, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", cmp.left_list, shallow=False)
    assert mismatch == [] and errors == []
    for f in (tmp_path / "a").iterdir():
        assert f.read_text().startswith("# seed=4\n")


def test_compare_rolling(prices, tmp_path):
    path, _ = prices
    code = main(["compare", "--data", str(path), "--solvers", "cd,naive", "--rolling-window", "60",
                 "--rolling-stride", "40", "--out", str(tmp_path)])
    assert code == 0
    _, header, _ = read_rows(tmp_path / "report.csv")
    assert header[1:] == ["cd", "naive"]


def test_lambda_cv(prices, tmp_path):
    path, _ = prices
    assert main(["select", "--data", str(path), "--solver", "cd", "--lambda", "cv", "--folds", "3",
                 "--out", str(tmp_path)]) == 0
    assert "# lambda_cv=1" in (tmp_path / "weights.csv").read_text()


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["select", "--solver", "ridge", "--data", "x.csv"],
    ["select", "--data", "/nonexistent/prices.csv"],
    ["select"],
    ["backtest", "--data", "DATA"],
    ["select", "--data", "DATA", "--seed", "abc"],
    ["select", "--data", "DATA", "--param", "novalue"],
])
def test_usage_errors_exit_2(argv, prices, tmp_path):
    argv = [str(prices[0]) if a == "DATA" else a for a in argv]
    assert main([*argv, "--out", str(tmp_path)] if argv and argv[0] != "frobnicate" else argv) == 2


def test_domain_errors_exit_1(prices, tmp_path, capsys):
    path, panel = prices
    bad = tmp_path / "bad.csv"
    bad.write_text("date,A,B\n2020-01-02,1.0,2.0\n2020-01-03,-1.0,2.0\n")
    assert main(["returns", "--data", str(bad), "--out", str(tmp_path)]) == 1
    assert "NonPositivePrice" in capsys.readouterr().err
    assert main(["backtest", "--data", str(path), "--split", "2099-01-01", "--weights", str(bad),
                 "--out", str(tmp_path)]) == 1
    cfg = tmp_path / "c.cfg"
    cfg.write_text("colour=blue\n")
    assert main(["select", "--data", str(path), "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "InvalidConfig" in capsys.readouterr().err
    assert main(["select", "--data", str(path), "--solver", "cd", "--param", "alpha=1",
                 "--out", str(tmp_path)]) == 1


def test_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\nseed = 11\nsolver = cd\nlambda = 0.5\nparam.lambda_frac = 0.2\n")
    parser = build_parser()
    env = {"SPARSEFOLIO_SEED": "99"}
    rc = resolve("select", parser.parse_args(["select", "--config", str(cfg)]), env)
    assert (rc.seed, rc.solver, rc.lam, rc.params) == (11, "cd", 0.5, {"lambda_frac": "0.2"})
    rc = resolve("select", parser.parse_args(["select", "--config", str(cfg), "--seed", "3",
                                              "--param", "lambda_frac=0.1"]), env)
    assert (rc.seed, rc.params["lambda_frac"]) == (3, "0.1")
    assert rc.sources["seed"] == "flag" and rc.sources["solver"] == "config"
    rc = resolve("select", parser.parse_args(["select"]), env)
    assert rc.seed == 99 and rc.sources["seed"] == "env" and rc.tau == 0.05
    rc = resolve("select", parser.parse_args(["select"]), {})
    assert rc.seed == 0 and rc.sources["seed"] == "default"
    with pytest.raises(UsageError):
        resolve("select", parser.parse_args(["select"]), {"SPARSEFOLIO_SEED": "x"})


def test_config_file_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("seed\n")
    with pytest.raises(InvalidConfig):
        read_config_file(cfg)
    cfg.write_text("tau=abc\n")
    with pytest.raises(InvalidConfig):
        read_config_file(cfg)
    with pytest.raises(UsageError):
        read_config_file(tmp_path / "missing.cfg")


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sparsefolio.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "compare" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "sparsefolio.cli", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2
