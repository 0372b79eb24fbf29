"""Command-line driver.

    hlcp geometry|trigger|game|stress|backtest [--config FILE] [--seed N]
         [--out PATH] [--format csv|json] [--set key=value ...]

Parameters resolve in order: command defaults, then the config file's
``params`` table, then command-line flags.  Every output embeds the resolved
config, its SHA-256 and the package version, so a run can be repeated from
its own output.  Exit status: 0 success, 2 invalid config or inputs,
3 numerical failure, 1 anything else.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from . import backtest as bt
from . import core_amm, engine, game, stress
from ._toml import loads as toml_loads
from .errors import SimulationError, ValidationError

COMMANDS = ("geometry", "trigger", "game", "stress", "backtest")
FORMATS = ("csv", "json")

_SVJ_FIELDS = [f for f in stress.SvjParams.field_names() if f != "seed"]

DEFAULTS = {
    "geometry": {"x": 100.0, "y": 100.0, "trades": [0.1, 1.0, 10.0, 100.0], "epsilon": 1e-4},
    "trigger": {
        "l_total": 1_000_000.0, "price": 1.0, "n_ratio": 0.5, "alpha": 100.0,
        "tau": engine.DEFAULT_FEE, "fee": engine.DEFAULT_FEE,
        "trades": [100.0, 1000.0, 5000.0, 20000.0, 50000.0],
    },
    "game": {
        "w": 1e6, "x_bg": 1e12, "n_ratio": 0.5, "sigma": 0.7456, "r_c": 0.0,
        "f_max": 1e8, "t": 1.0, "sweep": None, "points_per_decade": 1,
    },
    "stress": {
        # derived fields stay None so they follow theta_base / kappa overrides
        **{f.name: f.default for f in fields(stress.SvjParams) if f.name != "seed"},
        "n_ratio": 0.5, "alpha": 100.0, "tau": 0.003, "k_std": 1.0, "k_act": None,
        "c0": None, "mark_to_market": False, "ensemble": 0,
    },
    "backtest": {
        "prices": None, "aggregates": None, "tvl": None, "daily_volume": None,
        "fee_rate": None, "date_column": "date", "close_column": "close",
        "n_ratio": 0.5, "rc": 0.0, "vol_window": 30, "constant_vol": False,
        "compound_fees": False, "exposure": "initial", "sigma": None, "apr": None,
        "hlcp_fee_haircut": 0.0,
    },
}
DEFAULT_SEEDS = {"stress": stress.SvjParams().seed}

SWEEP_NAMES = {"X": "x_bg", "W": "w", "N": "n_ratio", "sigma": "sigma",
               "r_c": "r_c", "F_max": "f_max", "T": "t"}


class ConfigError(ValidationError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    params: dict
    seed: int
    output: dict

    def resolved(self) -> dict:
        """The part of the config that determines the result payload."""
        return {"command": self.command, "seed": self.seed, "params": self.params}

    def digest(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def read_config_file(path) -> dict:
    path = Path(path)
    text = path.read_text()
    try:
        data = toml_loads(text) if path.suffix == ".toml" else json.loads(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    return data


def build_config(command: str, file_data: dict | None = None, overrides: dict | None = None,
                 seed: int | None = None, out: str | None = None,
                 fmt: str | None = None) -> ExperimentConfig:
    """Merge defaults, file contents and overrides; reject unknown keys."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    data = dict(file_data or {})
    unknown = set(data) - {"command", "seed", "params", "output"}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if data.get("command", command) != command:
        raise ConfigError(f"config is for {data['command']!r}, not {command!r}")
    params = copy.deepcopy(DEFAULTS[command])
    for source in (data.get("params") or {}, overrides or {}):
        bad = set(source) - set(params)
        if bad:
            raise ConfigError(f"unknown {command} parameters {sorted(bad)}")
        params.update(source)
    output = {"path": None, "format": "csv"}
    file_out = data.get("output") or {}
    bad = set(file_out) - set(output)
    if bad:
        raise ConfigError(f"unknown output keys {sorted(bad)}")
    output.update(file_out)
    if out is not None:
        output["path"] = out
    if fmt is not None:
        output["format"] = fmt
    if output["format"] not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    if seed is None:
        seed = data.get("seed", DEFAULT_SEEDS.get(command, 0))
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")
    return ExperimentConfig(command, params, seed, output)


# -- commands ---------------------------------------------------------------

def _geometry(cfg):
    p = cfg.params
    pool = core_amm.PoolState(float(p["x"]), float(p["y"]))
    cols = ("delta_x", "delta_y", "p_marginal", "p_effective", "p_new", "slippage",
            "price_deviation", "trade_constant", "saturation_depth")
    rows = []
    for dx in p["trades"]:
        q = core_amm.quote_swap(pool, float(dx))
        k = q.trade_constant
        rows.append((q.delta_x, q.delta_y, q.p_marginal, q.p_effective, q.p_new, q.slippage,
                     q.price_deviation, k, core_amm.saturation_depth(k, float(p["epsilon"]))))
    return cols, rows, {"depth": pool.L}


def _trigger(cfg):
    p = cfg.params
    params = engine.TriggerParams(float(p["alpha"]), float(p["tau"]), float(p["fee"]))
    state = engine.HlcpState.initialize(float(p["l_total"]), float(p["price"]), float(p["n_ratio"]))
    cols = ("step", "delta_x", "price_deviation", "phi", "delta_c", "collateral",
            "l_active", "l_eff", "x_a", "y_a", "price")
    rows = []
    for i, dx in enumerate(p["trades"]):
        state, q, inj = engine.step(state, float(dx), params)
        rows.append((i, q.delta_x, q.price_deviation, engine.activation(q.price_deviation, params),
                     inj.delta_c, state.collateral, state.l_active, inj.l_eff,
                     state.active.x, state.active.y, state.price))
    return cols, rows, {"final_state": engine.to_snapshot(state, params)}


def _sweep_values(spec: str, points_per_decade: int):
    try:
        name, rng = spec.split("=", 1)
        parts = rng.split(":")
        lo_s, hi_s = parts[0].split("..")
        lo, hi = float(lo_s), float(hi_s)
        count = int(parts[1]) if len(parts) > 1 else None
        mode = parts[2] if len(parts) > 2 else "log"
    except ValueError:
        raise ConfigError(f"bad sweep spec {spec!r}; expected NAME=LO..HI[:COUNT[:log|lin]]") from None
    if name not in SWEEP_NAMES:
        raise ConfigError(f"cannot sweep {name!r}; choose from {sorted(SWEEP_NAMES)}")
    if mode not in ("log", "lin") or hi < lo or (mode == "log" and lo <= 0):
        raise ConfigError(f"bad sweep range {spec!r}")
    import numpy as np

    if mode == "log":
        if count is None:
            count = max(2, int(round(math.log10(hi / lo) * points_per_decade)) + 1)
        values = np.geomspace(lo, hi, count)
    else:
        values = np.linspace(lo, hi, count or 11)
    return SWEEP_NAMES[name], values


def _game(cfg):
    p = cfg.params
    inputs = game.PayoffInputs(*(float(p[k]) for k in ("w", "x_bg", "n_ratio", "sigma", "r_c", "f_max", "t")))
    if p["sweep"]:
        field_name, values = _sweep_values(p["sweep"], int(p["points_per_decade"]))
        rows = game.sweep(inputs, field_name, values)
    else:
        rows = game.sweep(inputs, "x_bg", [inputs.x_bg])
    cols = tuple(rows[0])
    rep = game.nash_check(inputs)
    lhs, fee_rate = game.limit_condition(inputs)
    extra = {"base": {"margin_step1": rep.margin_step1, "margin_step2": rep.margin_step2,
                      "defensive_rate": lhs, "fee_loss_rate": fee_rate,
                      "nash_profile": rep.label()}}
    return cols, [tuple(r.values()) for r in rows], extra


def _stress_kwargs(p):
    return {k: p[k] for k in ("n_ratio", "alpha", "tau", "k_std", "k_act", "c0", "mark_to_market")}


def _stress(cfg):
    p = cfg.params
    svj = stress.SvjParams(seed=cfg.seed, **{k: p[k] for k in _SVJ_FIELDS})
    if int(p["ensemble"]) > 0:
        members = stress.run_ensemble(svj, int(p["ensemble"]), **_stress_kwargs(p))
        cols = ("member", "seed") + tuple(stress.StressSummary.__dataclass_fields__)
        rows = [(i, s, *summ.as_dict().values()) for i, (s, summ) in enumerate(members)]
        return cols, rows, {}
    path = stress.simulate_path(svj)
    result = stress.run_stress(path, **_stress_kwargs(p))
    cols, rows = result.rows()
    summary = dict(result.summary)
    if path.times[-1] >= 24.0 - 1e-9:
        summary["checkpoints"] = stress.summarize_stress(result).as_dict()
    summary["forced_step"] = path.forced_step
    summary["n_jumps"] = int(path.jump_flags.sum())
    return cols, list(rows), {"summary": summary}


def _backtest(cfg):
    p = cfg.params
    if not p["prices"]:
        raise ConfigError("backtest needs a prices CSV (params.prices or --prices)")
    inline = {k: p[k] for k in ("tvl", "daily_volume", "fee_rate")}
    if p["aggregates"] is not None:
        if any(v is not None for v in inline.values()):
            raise ConfigError("give either an aggregates file or inline tvl/daily_volume/fee_rate")
        agg = p["aggregates"]
    else:
        if any(v is None for v in inline.values()):
            raise ConfigError("backtest needs tvl, daily_volume and fee_rate")
        agg = inline
    series = bt.load_series(p["prices"], agg,
                            schema={"date": p["date_column"], "close": p["close_column"]})
    res = bt.run_backtest(
        series, n_ratio=float(p["n_ratio"]), y_c_rate=float(p["rc"]),
        vol_window=int(p["vol_window"]), constant_vol=bool(p["constant_vol"]),
        compound_fees=bool(p["compound_fees"]), exposure=p["exposure"],
        sigma=None if p["sigma"] is None else float(p["sigma"]),
        apr=None if p["apr"] is None else float(p["apr"]),
        hlcp_fee_haircut=float(p["hlcp_fee_haircut"]),
    )
    summary = {
        "fee_apr": res.fee_apr, "fee_apy": bt.apr_to_apy(res.fee_apr),
        "realized_vol": res.realized_vol,
        "final_net_yield_std": float(res.net_yield_std[-1]),
        "final_net_yield_hlcp": float(res.net_yield_hlcp[-1]),
        "final_gap": res.final_gap, "warnings": list(series.warnings),
    }
    return res.columns, list(res.rows()), {"summary": summary}


RUNNERS = {"geometry": _geometry, "trigger": _trigger, "game": _game,
           "stress": _stress, "backtest": _backtest}


# -- output -----------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if hasattr(v, "item"):
        return v.item()
    return v


def metadata(cfg: ExperimentConfig) -> dict:
    return {"package": "hlcp", "version": __version__, "command": cfg.command,
            "seed": cfg.seed, "config_sha256": cfg.digest(), "config": cfg.resolved()}


def render(cfg: ExperimentConfig, cols, rows, extra) -> tuple[str, str | None]:
    """Return the main payload text and, for CSV, an optional JSON sidecar."""
    meta = metadata(cfg)
    rows = [[_jsonable(v) for v in r] for r in rows]
    if cfg.output["format"] == "json":
        doc = {"metadata": meta, "columns": list(cols), "rows": rows, **extra}
        return json.dumps(doc, indent=1, default=_jsonable) + "\n", None
    buf = io.StringIO()
    for key in ("package", "version", "command", "seed", "config_sha256"):
        buf.write(f"# {key}: {meta[key]}\n")
    buf.write("# config: " + json.dumps(meta["config"], sort_keys=True, default=_jsonable) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    w.writerows(rows)
    side = None
    if extra:
        side = json.dumps({"metadata": meta, **extra}, indent=1, default=_jsonable) + "\n"
    return buf.getvalue(), side


def sidecar_path(out: Path) -> Path:
    return out.with_name(out.stem + ".summary.json")


def run(cfg: ExperimentConfig, stdout=None) -> int:
    """Execute ``cfg`` and write its artifacts; returns the exit status."""
    cols, rows, extra = RUNNERS[cfg.command](cfg)
    text, side = render(cfg, cols, rows, extra)
    out = cfg.output["path"]
    if out:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        if side is not None:
            sidecar_path(out).write_text(side)
    else:
        stream = stdout or sys.stdout
        stream.write(text)
        if side is not None:
            stream.write(side)
    return 0


# -- argument parsing -------------------------------------------------------

def _parse_set(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except ValueError:
            out[k] = v
    return out


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--config", default=S, help="JSON or TOML config file")
    common.add_argument("--seed", type=int, default=S, help="master RNG seed")
    common.add_argument("--out", default=S, help="output file (stdout if omitted)")
    common.add_argument("--format", choices=FORMATS, default=S)
    common.add_argument("--set", action="append", default=S, metavar="KEY=VALUE",
                        help="override one parameter (value parsed as JSON)")

    parser = argparse.ArgumentParser(prog="hlcp", parents=[common],
                                     description="Hybrid liquidity-collateral pool experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("geometry", parents=[common], help="slippage / deviation geometry")
    p = sub.add_parser("trigger", parents=[common], help="trade sequence through the trigger")
    p.add_argument("--n-ratio", type=float, dest="n_ratio", default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--tau", type=float, default=S)

    p = sub.add_parser("game", parents=[common], help="payoff matrix and Nash check")
    p.add_argument("--sweep", default=S, help="e.g. X=1e3..1e12")
    p.add_argument("--points-per-decade", type=int, dest="points_per_decade", default=S)
    p.add_argument("--n-ratio", type=float, dest="n_ratio", default=S)
    p.add_argument("--sigma", type=float, default=S)
    p.add_argument("--rc", type=float, dest="r_c", default=S)

    p = sub.add_parser("stress", parents=[common], help="SVJ stress path and loss proxy")
    p.add_argument("--n-ratio", type=float, dest="n_ratio", default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--tau", type=float, default=S)
    p.add_argument("--horizon", type=float, default=S)
    p.add_argument("--ensemble", type=int, default=S, help="number of spawned members")

    p = sub.add_parser("backtest", parents=[common], help="historical net-yield backtest")
    p.add_argument("--prices", default=S, help="CSV with date,close")
    p.add_argument("--aggregates", default=S, help="JSON/TOML with tvl, daily_volume, fee_rate")
    p.add_argument("--n-ratio", type=float, dest="n_ratio", default=S)
    p.add_argument("--rc", type=float, default=S)
    p.add_argument("--vol-window", type=int, dest="vol_window", default=S)
    p.add_argument("--constant-vol", action="store_true", dest="constant_vol", default=S)
    p.add_argument("--compound-fees", action="store_true", dest="compound_fees", default=S)
    p.add_argument("--exposure", choices=("initial", "marked"), default=S)
    p.add_argument("--sigma", type=float, default=S)
    p.add_argument("--apr", type=float, default=S)
    return parser


_GLOBAL = {"config", "seed", "out", "format", "set", "command"}


def _error(kind: str, exc: Exception, status: int, stderr) -> int:
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SimulationError):
        record["step"] = exc.step
    stderr.write(json.dumps(record) + "\n")
    return status


def main(argv=None, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    args = vars(make_parser().parse_args(argv))
    try:
        command = args["command"]
        file_data = read_config_file(args["config"]) if "config" in args else None
        overrides = {k: v for k, v in args.items() if k not in _GLOBAL}
        overrides.update(_parse_set(args.get("set")))
        cfg = build_config(command, file_data, overrides, seed=args.get("seed"),
                           out=args.get("out"), fmt=args.get("format"))
        return run(cfg, stdout=stdout)
    except (ValueError, OSError) as exc:
        return _error("usage", exc, 2, stderr)
    except ArithmeticError as exc:
        return _error("numeric", exc, 3, stderr)


if __name__ == "__main__":
    sys.exit(main())
