import csv
import io
import json

import pytest

from hlcp import cli
from hlcp.backtest import synthetic_series, write_series_csv


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    status = cli.main(list(argv), stdout=out, stderr=err)
    return status, out.getvalue(), err.getvalue()


def data_lines(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_geometry_csv():
    status, out, _ = invoke("geometry", "--set", "trades=[100.0]")
    assert status == 0
    assert "# seed: 0" in out
    rows = list(csv.DictReader(data_lines(out)))
    assert float(rows[0]["slippage"]) == 0.5
    assert float(rows[0]["price_deviation"]) == 0.75


def test_trigger_json_snapshot():
    status, out, _ = invoke("trigger", "--format", "json", "--alpha", "50")
    assert status == 0
    doc = json.loads(out)
    assert doc["metadata"]["config"]["params"]["alpha"] == 50.0
    assert set(doc["final_state"]) == {"x_a", "y_a", "collateral", "n_ratio", "alpha", "tau", "fee"}
    assert doc["columns"][0] == "step"


def test_game_sweep(tmp_path):
    out = tmp_path / "game.csv"
    status, _, _ = invoke("game", "--sweep", "X=1e3..1e12", "--out", str(out))
    assert status == 0
    rows = list(csv.DictReader(data_lines(out.read_text())))
    assert len(rows) == 10
    assert list(rows[0])[:7] == ["W", "X", "N", "sigma", "r_c", "F_max", "T"]
    assert rows[-1]["nash_profile"] == "hlcp/hlcp"
    assert rows[0]["nash_profile"] == "std/std"
    side = json.loads((tmp_path / "game.summary.json").read_text())
    assert side["base"]["nash_profile"] == "hlcp/hlcp"


@pytest.mark.parametrize("spec", ["X=1e3", "Q=1..2", "X=0..10", "X=5..1"])
def test_bad_sweep_spec(spec):
    status, _, err = invoke("game", "--sweep", spec)
    assert status == 2
    assert json.loads(err)["error"] == "usage"


def test_stress_default_outputs(tmp_path):
    out = tmp_path / "stress.csv"
    status, _, _ = invoke("stress", "--out", str(out))
    assert status == 0
    text = out.read_text()
    assert "# seed: 752" in text
    header = data_lines(text)[0]
    assert header == "t_hours,price,variance,phi,loss_std,loss_hlcp,undeployed_share"
    assert len(data_lines(text)) == 7202
    side = json.loads((tmp_path / "stress.summary.json").read_text())
    chk = side["summary"]["checkpoints"]
    assert 0.60 <= chk["reduction_24h"] <= 0.85
    assert 0.93 <= chk["peak_deployment"] <= 0.97
    assert side["summary"]["forced_step"] == 2400


def test_stress_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert invoke("stress", "--seed", "5", "--out", str(a))[0] == 0
    assert invoke("stress", "--seed", "5", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.summary.json").read_bytes() == (tmp_path / "b.summary.json").read_bytes()
    c = tmp_path / "c.csv"
    invoke("stress", "--seed", "6", "--out", str(c))
    assert data_lines(c.read_text()) != data_lines(a.read_text())


def test_stress_ensemble():
    status, out, _ = invoke("stress", "--ensemble", "3", "--format", "json")
    assert status == 0
    doc = json.loads(out)
    assert len(doc["rows"]) == 3
    assert doc["columns"][:2] == ["member", "seed"]


def test_config_files(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('command = "stress"\nseed = 9\n[params]\nhorizon = 10.0\n[output]\nformat = "json"\n')
    status, out, _ = invoke("stress", "--config", str(cfg))
    assert status == 0
    doc = json.loads(out)
    assert doc["metadata"]["seed"] == 9
    assert len(doc["rows"]) == 3001
    jcfg = tmp_path / "run.json"
    jcfg.write_text(json.dumps({"seed": 9, "params": {"horizon": 10.0}, "output": {"format": "json"}}))
    status, out2, _ = invoke("stress", "--config", str(jcfg))
    assert status == 0 and json.loads(out2)["rows"] == doc["rows"]


def test_cli_flag_overrides_file(tmp_path):
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"params": {"sigma": 0.1}}))
    _, out, _ = invoke("game", "--config", str(cfg), "--sigma", "0.2", "--format", "json")
    assert json.loads(out)["metadata"]["config"]["params"]["sigma"] == 0.2


@pytest.mark.parametrize(
    "payload",
    [{"bogus": 1}, {"params": {"nope": 1}}, {"output": {"colour": "red"}}, {"command": "game"}, {"seed": -1}],
)
def test_unknown_keys_rejected(tmp_path, payload):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(payload))
    status, out, err = invoke("stress", "--config", str(cfg))
    assert status == 2 and out == ""
    assert json.loads(err)["error"] == "usage"


def test_invalid_parameter_exit_code():
    status, _, err = invoke("stress", "--set", "xi=100.0")
    assert status == 2
    assert "Feller" in json.loads(err)["message"]


def test_numeric_failure_exit_code():
    status, _, err = invoke(
        "stress", "--set", "theta_base=1e9", "--set", "v0=1e9", "--set", "xi=0.0",
        "--set", "forced_jump=false", "--set", "lambda_j=0.0",
    )
    assert status == 3
    rec = json.loads(err)
    assert rec["error"] == "numeric" and isinstance(rec["step"], int)


def test_backtest_command(tmp_path):
    prices = tmp_path / "px.csv"
    write_series_csv(synthetic_series(exact_vol=True, seed=7), prices)
    agg = tmp_path / "agg.json"
    agg.write_text(json.dumps({"tvl": 31.21e6, "daily_volume": 3.15e6, "fee_rate": 0.003}))
    out = tmp_path / "bt.csv"
    status, _, err = invoke(
        "backtest", "--prices", str(prices), "--aggregates", str(agg), "--constant-vol",
        "--apr", "0.1104", "--out", str(out),
    )
    assert status == 0, err
    rows = list(csv.DictReader(data_lines(out.read_text())))
    assert len(rows) == 366
    assert float(rows[-1]["net_yield_std"]) == pytest.approx(0.04091008, abs=1e-12)
    side = json.loads((tmp_path / "bt.summary.json").read_text())
    assert side["summary"]["final_net_yield_hlcp"] == pytest.approx(0.07565504, abs=1e-12)


def test_backtest_requires_inputs():
    assert invoke("backtest")[0] == 2


def test_config_digest_stable():
    a = cli.build_config("game", overrides={"sigma": 0.5})
    b = cli.build_config("game", overrides={"sigma": 0.5})
    assert a.digest() == b.digest()
    assert a.digest() != cli.build_config("game").digest()
