import numpy as np
import orjson
import polars as pl
import pytest

from cli.config import RunConfig
from cli.design import build_design
from cli.main import main
from dataset.dataset_io import NumericTable


def _series_csv(tmp_path, T=200, seed=0, name="data.csv"):
    """y_{t+1} = 2·x1_t + ruido; x2 y x3 no causan a y."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((T, 3))
    y = 0.5 * rng.standard_normal(T)
    y[1:] += 2.0 * x[:-1, 0]
    dates = np.datetime64("2000-01-01") + np.arange(T)
    frame = pl.DataFrame({
        "date": [str(d) for d in dates],
        "y": y,
        "x1": x[:, 0],
        "x2": x[:, 1],
        "x3": x[:, 2],
    })
    path = tmp_path / name
    frame.write_csv(path)
    return str(path)


def _read(path):
    return orjson.loads(path.read_bytes())


def test_fit_with_user_lambda(tmp_path):
    data = _series_csv(tmp_path)
    out = tmp_path / "fit.json"
    assert main(["fit", "--data", data, "--response", "y", "--lambda", "0.05", "--out", str(out), "--quiet"]) == 0
    report = _read(out)
    assert report["lambda_source"] == "user"
    assert report["selected_lambda"] == 0.05
    assert report["converged"]
    assert report["kkt_violation"] < 1e-6
    assert "x1_lag0" in report["beta"]
    assert report["config"]["response"] == "y"
    assert report["design"]["columns"] == ["x1_lag0", "x2_lag0", "x3_lag0"]


def test_fit_is_deterministic(tmp_path):
    data = _series_csv(tmp_path)
    out = tmp_path / "fit.json"
    args = ["fit", "--data", data, "--response", "y", "--folds", "5", "--out", str(out), "--quiet"]
    assert main(args) == 0
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first
    assert _read(out)["lambda_source"] == "cv"


def test_granger_report_and_pvalue_table(tmp_path):
    data = _series_csv(tmp_path)
    out = tmp_path / "granger.json"
    code = main([
        "granger", "--data", data, "--response", "y", "--test-group", "x1", "--test-group", "x2",
        "--mt", "10", "--mt", "20", "--kernel", "parzen", "--folds", "5", "--out", str(out), "--quiet",
    ])
    assert code == 0
    report = _read(out)
    assert len(report["tests"]) == 4
    for entry in report["tests"]:
        if entry["group_name"] == "x1":
            assert entry["p_value"] < 0.01
        assert entry["dof"] == 1
    table = pl.read_csv(tmp_path / "granger_pvalues.csv")
    assert table.columns == ["group", "kernel", "M_T", "wald", "dof", "p_value", "sig_1pct", "sig_5pct"]
    assert table.height == 4
    assert table.filter(pl.col("group") == "x1")["sig_1pct"].to_list() == [True, True]


def test_flags_override_config_file(tmp_path):
    data = _series_csv(tmp_path)
    config = tmp_path / "run.json"
    config.write_bytes(orjson.dumps({"alpha": 0.2, "lambda": 0.05, "solver": {"tol": 1e-7}}))
    out = tmp_path / "fit.json"
    assert main(["fit", "--config", str(config), "--data", data, "--response", "y", "--alpha", "0.7",
                 "--out", str(out), "--quiet"]) == 0
    resolved = _read(out)["config"]
    assert resolved["alpha"] == 0.7
    assert resolved["lam"] == 0.05
    assert resolved["solver"]["tol"] == 1e-7


def test_unknown_config_key(tmp_path):
    data = _series_csv(tmp_path)
    config = tmp_path / "run.json"
    config.write_bytes(orjson.dumps({"learning_rate": 0.1}))
    out = tmp_path / "fit.json"
    assert main(["fit", "--config", str(config), "--data", data, "--response", "y", "--out", str(out)]) == 2
    assert not out.exists()


@pytest.mark.parametrize("extra", [
    ["--test-group", "nope"],
    ["--test-group", "x1", "--columns", "x1"],
    ["--test-group", "x1", "--mt", "500"],
])
def test_granger_config_errors_leave_no_output(tmp_path, extra):
    data = _series_csv(tmp_path)
    out = tmp_path / "granger.json"
    assert main(["granger", "--data", data, "--response", "y", "--out", str(out), "--quiet", *extra]) == 2
    assert not out.exists()
    assert not (tmp_path / "granger_pvalues.csv").exists()


def test_malformed_csv_is_a_data_error(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("y,x1\n1,2\n3,abc\n4,5\n")
    out = tmp_path / "fit.json"
    assert main(["fit", "--data", str(path), "--response", "y", "--out", str(out)]) == 3
    err = capsys.readouterr().err
    assert "line 3" in err
    assert "x1" in err
    assert not out.exists()


def test_missing_required_flag_and_help(capsys):
    assert main(["fit", "--response", "y"]) == 2
    assert main(["--help"]) == 0
    assert "sg-granger" in capsys.readouterr().out


def test_groups_sidecar(tmp_path):
    data = _series_csv(tmp_path)
    groups = tmp_path / "groups.json"
    groups.write_bytes(orjson.dumps({"macro": ["x1", "x2"]}))
    out = tmp_path / "granger.json"
    code = main([
        "granger", "--data", data, "--response", "y", "--groups", str(groups), "--test-group", "macro",
        "--mt", "10", "--kernel", "qs", "--lambda", "0.05", "--out", str(out), "--quiet",
    ])
    assert code == 0
    report = _read(out)
    assert report["design"]["groups"] == {"macro": ["x1_lag0", "x2_lag0"], "x3": ["x3_lag0"]}
    (entry,) = report["tests"]
    assert entry["kernel"] == "quadratic_spectral"
    assert entry["dof"] == 2
    assert entry["p_value"] < 0.01


def test_groups_sidecar_with_unknown_series(tmp_path):
    data = _series_csv(tmp_path)
    groups = tmp_path / "groups.json"
    groups.write_bytes(orjson.dumps({"macro": ["x9"]}))
    out = tmp_path / "fit.json"
    assert main(["fit", "--data", data, "--response", "y", "--groups", str(groups), "--out", str(out)]) == 2


def test_nodewise_rows(tmp_path):
    data = _series_csv(tmp_path)
    out = tmp_path / "theta.json"
    assert main(["nodewise", "--data", data, "--response", "y", "--rows", "x1_lag0", "x3_lag0",
                 "--lambda", "0.05", "--out", str(out), "--quiet"]) == 0
    report = _read(out)
    assert [row["column"] for row in report["rows"]] == ["x1_lag0", "x3_lag0"]
    assert report["rows"][0]["theta_row"]["x1_lag0"] > 0
    assert report["identity_defect"] <= 0.1


def test_high_frequency_design(tmp_path):
    rng = np.random.default_rng(5)
    months = np.arange(np.datetime64("2015-01"), np.datetime64("2020-01"))
    month_ends = (months + 1).astype("datetime64[D]") - 1
    days = np.arange(np.datetime64("2014-12-01"), np.datetime64("2020-01-01"))
    lf = pl.DataFrame({
        "date": [str(d) for d in month_ends],
        "y": rng.standard_normal(month_ends.size),
        "x1": rng.standard_normal(month_ends.size),
    })
    hf = pl.DataFrame({"date": [str(d) for d in days], "z": rng.standard_normal(days.size)})
    lf.write_csv(tmp_path / "monthly.csv")
    hf.write_csv(tmp_path / "daily.csv")
    out = tmp_path / "fit.json"
    code = main([
        "fit", "--data", str(tmp_path / "monthly.csv"), "--response", "y", "--hf-data", str(tmp_path / "daily.csv"),
        "--hf-column", "z", "--lambda", "0.05", "--out", str(out), "--quiet",
    ])
    assert code == 0
    design = _read(out)["design"]
    assert design["columns"] == ["x1_lag0", "z_leg0", "z_leg1", "z_leg2", "z_leg3"]
    assert design["groups"]["z"] == ["z_leg0", "z_leg1", "z_leg2", "z_leg3"]
    assert design["T"] == month_ends.size - 1


def test_simulate(tmp_path):
    out = tmp_path / "table.csv"
    args = ["simulate", "--T", "60", "--p", "3", "--N", "1", "--n-active", "2", "--mt", "5", "--mt", "10",
            "--workers", "1", "--out", str(out), "--quiet"]
    assert main(args) == 0
    first = out.read_bytes()
    table = pl.read_csv(out)
    assert table.columns == ["M_T", "p", "T", "avcov_active", "avcov_inactive", "length_active", "length_inactive"]
    assert table["M_T"].to_list() == [5, 10]
    meta = _read(tmp_path / "table.meta.json")
    assert meta["config"]["experiment"]["N"] == 1
    assert main(args) == 0
    assert out.read_bytes() == first


def test_simulate_rejects_bandwidth_above_sample(tmp_path):
    out = tmp_path / "table.csv"
    assert main(["simulate", "--T", "60", "--p", "3", "--N", "1", "--mt", "60", "--out", str(out)]) == 2
    assert not out.exists()


def test_profile(tmp_path):
    data = _series_csv(tmp_path)
    out = tmp_path / "profile.json"
    assert main(["profile", "--data", data, "--out", str(out), "--quiet"]) == 0
    assert _read(out)["ready"]
    bad = tmp_path / "bad.csv"
    bad.write_text("y,x\n1,\n2,3\n")
    assert main(["profile", "--data", str(bad), "--quiet"]) == 3


@pytest.mark.parametrize("horizon", [0, 1, 3])
def test_autoregressive_lags_precede_the_target(horizon):
    T = 40
    # y_t = t: each design entry reveals the period it comes from
    table = NumericTable("series.csv", ("y", "x1"), {"y": np.arange(T, dtype=float), "x1": np.cos(np.arange(T))})
    config = RunConfig(command="fit", data="series.csv", response="y", out="fit.json",
                       horizon=horizon, ar_lags=2, standardize=False)
    design = build_design(config, table)
    X, target = design.dataset.X, design.dataset.y
    names = design.dataset.column_names
    first = 1 if horizon == 0 else 0
    assert names == ("x1_lag0", f"y_lag{first}", f"y_lag{first + 1}")
    assert target.shape[0] == T - max(horizon, 1) - 1
    for j in range(X.shape[1]):
        assert not np.array_equal(X[:, j], target)
    for col, lag in ((1, first), (2, first + 1)):
        np.testing.assert_array_equal(target - X[:, col], np.full(target.shape[0], horizon + lag))
        assert horizon + lag >= 1


def test_nowcast_with_autoregressive_lags(tmp_path):
    data = _series_csv(tmp_path)
    out = tmp_path / "fit.json"
    assert main(["fit", "--data", data, "--response", "y", "--horizon", "0", "--ar-lags", "1",
                 "--lambda", "0.05", "--out", str(out), "--quiet"]) == 0
    report = _read(out)
    assert report["design"]["columns"] == ["x1_lag0", "x2_lag0", "x3_lag0", "y_lag1"]
    # y_t = 2·x1_{t-1} + ruido no es explicado por x_t ni por y_{t-1}
    assert report["sigma2_hat"] > 1.0
    assert abs(report["beta"].get("y_lag1", 0.0)) < 0.5


def test_seed_is_recorded_only(tmp_path, capsys):
    data = _series_csv(tmp_path)
    reports = []
    for seed in ("1", "2"):
        out = tmp_path / f"fit_{seed}.json"
        assert main(["fit", "--data", data, "--response", "y", "--folds", "5", "--seed", seed,
                     "--out", str(out), "--quiet"]) == 0
        reports.append(_read(out))
    assert [r["config"]["seed"] for r in reports] == [1, 2]
    assert reports[0]["beta"] == reports[1]["beta"]
    assert reports[0]["selected_lambda"] == reports[1]["selected_lambda"]
    assert main(["fit", "--help"]) == 0
    assert "recorded in the report only" in " ".join(capsys.readouterr().out.split())
