"""Command-line front end.

    quadhedge {validate,price,lrm,mvh,simulate,hedge-error} --config run.json [--out DIR]
              [--seed N] [--threads N]

Every run writes ``manifest.json`` next to its outputs.  A manifest is itself a
valid ``--config``: rerunning from it reproduces the other output files byte
for byte.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .errors import (ConfigError, DensityError, GridError, InsufficientDataError, MeasurePositivityError,
                     MomentDivergenceError, QuadHedgeError, StripError)
from .fourier_engine import ClaimSpec, FourierGrid, call_value
from .levy_model import model_from_dict, model_to_dict, validate
from .mmm_transform import MMMTransform
from .simulation import (LRMHedge, MVHHedge, ZeroHedge, ensemble_stats, hedging_error, simulate_paths)
from .strategies import ObservedPath, mvh_strategies

SCHEMA_VERSION = 1
DAYS_PER_YEAR = 250
DEFAULT_SEED = 20160520
SUBCOMMANDS = ("validate", "price", "lrm", "mvh", "simulate", "hedge-error")

EXIT_CODES = {
    ConfigError: 2,
    MeasurePositivityError: 3,
    MomentDivergenceError: 3,
    StripError: 3,
    GridError: 4,
    InsufficientDataError: 5,
    DensityError: 6,
}


# --------------------------------------------------------------------------- #
# Input
# --------------------------------------------------------------------------- #

def _parse_time(text):
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return date.fromisoformat(text)
    except ValueError:
        return None


def ingest_csv(path_file) -> ObservedPath:
    """Read ``date,price`` or ``t,price`` rows into an :class:`ObservedPath`.

    Numeric times are taken verbatim (years).  Calendar dates must be business
    days in increasing order; the k-th row maps to ``k / 250``.  The last row is
    the posting date, and its price is not used by the strategies.
    """
    path_file = Path(path_file)
    if not path_file.is_file():
        raise ConfigError(f"{path_file}: price file not found")
    with path_file.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path_file}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    if header not in (["date", "price"], ["t", "price"]):
        raise ConfigError(f"{path_file}:1: header must be 'date,price' or 't,price', got {','.join(rows[0])!r}")
    times, prices, dates = [], [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ConfigError(f"{path_file}:{line}: expected 2 fields, got {len(row)}")
        stamp = _parse_time(row[0].strip())
        if stamp is None:
            raise ConfigError(f"{path_file}:{line}: cannot parse time {row[0]!r}")
        try:
            price = float(row[1])
        except ValueError:
            raise ConfigError(f"{path_file}:{line}: cannot parse price {row[1]!r}") from None
        if not (price > 0 and math.isfinite(price)):
            raise ConfigError(f"{path_file}:{line}: price must be positive, got {row[1].strip()}")
        if isinstance(stamp, date):
            if header[0] == "t":
                raise ConfigError(f"{path_file}:{line}: column 't' must be numeric")
            if dates and stamp <= dates[-1]:
                raise ConfigError(f"{path_file}:{line}: date {stamp} does not follow {dates[-1]}")
            dates.append(stamp)
            stamp = len(dates) - 1
            stamp = stamp / DAYS_PER_YEAR
        elif dates:
            raise ConfigError(f"{path_file}:{line}: mixed numeric and calendar times")
        elif times and not stamp > times[-1]:
            raise ConfigError(f"{path_file}:{line}: time {stamp} does not increase (previous {times[-1]})")
        times.append(stamp)
        prices.append(price)
    if len(times) < 2:
        raise ConfigError(f"{path_file}: need at least two rows")
    if times[0] != 0.0:
        raise ConfigError(f"{path_file}:2: first time must be 0, got {times[0]}")
    return ObservedPath(np.array(times), np.array(prices))


def synthetic_path(model, n_obs, seed):
    """Daily P-path with observations at ``k/250``, ``k < n_obs``, posted at ``n_obs/250``."""
    times = np.arange(n_obs + 1) / DAYS_PER_YEAR
    ens = simulate_paths(model, 1, n_obs, seed, "P", times=times)
    return ObservedPath(times, ens.prices()[0])


# --------------------------------------------------------------------------- #
# Config
# --------------------------------------------------------------------------- #

@dataclass
class RunConfig:
    model: dict
    grid: dict = field(default_factory=dict)
    claims: list = field(default_factory=list)
    path: dict | None = None
    mc: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    out: str = "out"
    schema_version: int = SCHEMA_VERSION
    base_dir: str = field(default=".", repr=False)

    def to_dict(self):
        return {"schema_version": self.schema_version, "model": self.model, "grid": self.grid,
                "claims": self.claims, "path": self.path, "mc": self.mc, "seed": self.seed}

    # resolved objects

    def levy_model(self):
        return model_from_dict(self.model)

    def fourier_grid(self):
        allowed = {"alpha", "N", "eta", "interpolation", "tol"}
        bad = set(self.grid) - allowed
        if bad:
            raise ConfigError(f"grid.{sorted(bad)[0]}: unexpected key")
        try:
            return FourierGrid(**self.grid)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid: {exc}") from None

    def claim_groups(self):
        """``[(kind, maturity, strikes)]``."""
        if not self.claims:
            raise ConfigError("claims: at least one claim is required")
        T = self.levy_model().T
        out = []
        for i, c in enumerate(self.claims):
            kind = c.get("kind", "call")
            if kind not in ("call", "linear"):
                raise ConfigError(f"claims[{i}].kind: unsupported {kind!r}")
            maturity = float(c.get("maturity", T))
            if kind == "linear":
                strikes = [0.0]
            else:
                strikes = _strike_list(c.get("strikes"), f"claims[{i}].strikes")
            out.append((kind, maturity, strikes))
        return out

    def observed_path(self, model):
        if self.path is None:
            raise ConfigError("path: this subcommand needs a 'path' entry ({'file': ...} or {'synthetic': ...})")
        if "file" in self.path:
            p = Path(self.path["file"])
            if not p.is_absolute():
                p = Path(self.base_dir) / p
            return ingest_csv(p)
        if "synthetic" in self.path:
            s = self.path["synthetic"] or {}
            n_obs = int(s.get("n_obs", 121))
            if n_obs < 2:
                raise ConfigError("path.synthetic.n_obs: need at least 2 observations")
            return synthetic_path(model, n_obs, int(s.get("seed", self.seed)))
        raise ConfigError("path: expected key 'file' or 'synthetic'")

    def mc_settings(self):
        paths = int(self.mc.get("paths", 10_000))
        steps = int(self.mc.get("steps", DAYS_PER_YEAR))
        if not 2 <= paths <= 10 ** 8:
            raise ConfigError(f"mc.paths: must lie in [2, 1e8], got {paths}")
        if not 1 <= steps <= 10 ** 5:
            raise ConfigError(f"mc.steps: must lie in [1, 1e5], got {steps}")
        return paths, steps


def _strike_list(spec, where):
    if spec is None:
        raise ConfigError(f"{where}: required for call claims")
    if isinstance(spec, dict):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except KeyError as exc:
            raise ConfigError(f"{where}.{exc.args[0]}: required in a strike range") from None
        if not step > 0:
            raise ConfigError(f"{where}.step: must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        strikes = [start + i * step for i in range(n)]
    else:
        strikes = [float(k) for k in spec]
    if not strikes:
        raise ConfigError(f"{where}: strike list is empty")
    if any(not k > 0 for k in strikes):
        raise ConfigError(f"{where}: strikes must be positive")
    return strikes


def _read_mapping(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: config file not found")
    text = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        try:
            return tomllib.loads(text.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None


def load_config(path) -> RunConfig:
    """Parse a JSON/TOML config (or a previous run's manifest)."""
    raw = _read_mapping(path)
    if "manifest_version" in raw:
        raw = raw["config"]
    return config_from_dict(raw, base_dir=str(Path(path).resolve().parent))


def config_from_dict(raw: dict, base_dir=".") -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a mapping")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported {version!r} (this build reads {SCHEMA_VERSION})")
    known = {"schema_version", "model", "grid", "claims", "path", "mc", "seed", "out"}
    bad = set(raw) - known
    if bad:
        raise ConfigError(f"{sorted(bad)[0]}: unexpected top-level key")
    if "model" not in raw:
        raise ConfigError("model: missing")
    path = raw.get("path")
    if path is not None and "file" in path:
        p = Path(path["file"])
        # keep manifests portable across working directories
        path = {"file": str(p if p.is_absolute() else (Path(base_dir) / p).resolve())}
    cfg = RunConfig(model=dict(raw["model"]), grid=dict(raw.get("grid", {})),
                    claims=list(raw.get("claims", [])), path=path, mc=dict(raw.get("mc", {})),
                    seed=int(raw.get("seed", DEFAULT_SEED)), out=str(raw.get("out", "out")),
                    schema_version=version, base_dir=base_dir)
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {cfg.seed}")
    cfg.levy_model()
    cfg.fourier_grid()
    return cfg


# --------------------------------------------------------------------------- #
# Output
# --------------------------------------------------------------------------- #

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _tag(kind, strike):
    return "linear" if kind == "linear" else f"K{strike:g}"


# --------------------------------------------------------------------------- #
# Subcommands
# --------------------------------------------------------------------------- #

def _cmd_validate(cfg, out, threads):
    model = cfg.levy_model()
    rep = validate(model)
    d = rep.to_dict()
    _write_json(out / "validation.json", d)
    print(json.dumps(d, indent=2))
    return 0 if rep.ok else 1


def _cmd_price(cfg, out, threads):
    model = cfg.levy_model()
    tr = MMMTransform.from_model(model)
    grid = cfg.fourier_grid()
    grid.check(tr)
    rows = []
    for kind, T, strikes in cfg.claim_groups():
        for k in strikes:
            c = model.S0 if kind == "linear" else call_value(tr, grid, model.S0, T, k)
            rows.append((kind, T, k, c))
    _write_csv(out / "price.csv", ("kind", "maturity", "strike", "c_tilde"), rows)
    for r in rows:
        print(",".join(_fmt(v) for v in r))
    return 0


def _mvh_reports(cfg, threads):
    model = cfg.levy_model()
    tr = MMMTransform.from_model(model)
    grid = cfg.fourier_grid()
    path = cfg.observed_path(model)
    groups = []
    for kind, T, strikes in cfg.claim_groups():
        groups.append((kind, mvh_strategies(tr, grid, path, strikes, T, kind, threads=threads)))
    return path, groups


def _cmd_lrm(cfg, out, threads):
    path, groups = _mvh_reports(cfg, threads)
    for kind, reports in groups:
        recs = reports[0].records[1:]
        header = ["k", "t"] + [_tag(kind, r.strike) for r in reports]
        rows = [[rec["k"], rec["t"]] + [r.records[i + 1]["xi"] for r in reports] for i, rec in enumerate(recs)]
        _write_csv(out / f"lrm_{kind}.csv", header, rows)
    return 0


def _cmd_mvh(cfg, out, threads):
    path, groups = _mvh_reports(cfg, threads)
    table, diff = [], []
    for kind, reports in groups:
        for r in reports:
            tag = _tag(kind, r.strike)
            d = r.to_dict()
            d["kind"] = kind
            _write_json(out / f"mvh_{tag}.json", d)
            _write_csv(out / f"mvh_{tag}.csv", r.CSV_FIELDS, r.csv_rows())
            table.append((kind, r.strike, r.c_tilde, r.theta_tilde, r.xi_tilde))
            diff.append((kind, r.strike, r.theta_tilde - r.xi_tilde))
    _write_csv(out / "strategy_vs_strike.csv", ("kind", "strike", "c_tilde", "theta_tilde", "xi_tilde"), table)
    _write_csv(out / "mvh_minus_lrm.csv", ("kind", "strike", "theta_minus_xi"), diff)
    _write_csv(out / "observed_path.csv", ("t", "price"), zip(path.times, path.prices))
    return 0


def _cmd_simulate(cfg, out, threads):
    model = cfg.levy_model()
    n_paths, n_steps = cfg.mc_settings()
    stats = ensemble_stats(model, n_paths, n_steps, cfg.seed, threads=threads)
    stats["model"] = model_to_dict(model)
    _write_json(out / "ensemble_stats.json", stats)
    if cfg.path is not None and "synthetic" in cfg.path:
        p = cfg.observed_path(model)
        _write_csv(out / "synthetic_path.csv", ("t", "price"), zip(p.times, p.prices))
    return 0


def _cmd_hedge_error(cfg, out, threads):
    model = cfg.levy_model()
    tr = MMMTransform.from_model(model)
    grid = cfg.fourier_grid()
    grid.check(tr)
    n_paths, n_steps = cfg.mc_settings()
    rows = []
    for kind, T, strikes in cfg.claim_groups():
        for k in strikes:
            claim = ClaimSpec(k, T, kind)
            c = model.S0 if kind == "linear" else call_value(tr, grid, model.S0, T, k)
            res = {}
            for name, strat in (("zero", ZeroHedge()), ("lrm", LRMHedge(tr, grid, claim)),
                                ("mvh", MVHHedge(tr, grid, claim))):
                # common random numbers across strategies
                res[name] = hedging_error(model, strat, claim, c, n_paths, n_steps, cfg.seed, threads=threads)
            d_lrm = res["mvh"].paired_diff(res["lrm"])
            d_zero = res["lrm"].paired_diff(res["zero"])
            rows.append((kind, k, c, res["zero"].mse, res["zero"].se, res["lrm"].mse, res["lrm"].se,
                         res["mvh"].mse, res["mvh"].se, d_lrm[0], d_lrm[1], d_zero[0], d_zero[1]))
    _write_csv(out / "hedge_error.csv",
               ("kind", "strike", "c_tilde", "mse_zero", "se_zero", "mse_lrm", "se_lrm", "mse_mvh", "se_mvh",
                "mvh_minus_lrm", "se_mvh_minus_lrm", "lrm_minus_zero", "se_lrm_minus_zero"), rows)
    return 0


COMMANDS = {
    "validate": _cmd_validate,
    "price": _cmd_price,
    "lrm": _cmd_lrm,
    "mvh": _cmd_mvh,
    "simulate": _cmd_simulate,
    "hedge-error": _cmd_hedge_error,
}


def _versions():
    import scipy

    from . import __version__

    return {"quadhedge": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def run(subcommand, config: RunConfig, out=None, threads=1):
    """Run one subcommand; returns the exit status.  Writes ``manifest.json`` last."""
    if subcommand not in COMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    out = Path(out if out is not None else config.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    status = COMMANDS[subcommand](config, out, max(1, int(threads)))
    wall = time.perf_counter() - t0
    files = {}
    for p in sorted(out.iterdir()):
        if p.is_file() and p.name != "manifest.json":
            files[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    _write_json(out / "manifest.json", {
        "manifest_version": 1,
        "subcommand": subcommand,
        "config": config.to_dict(),
        "seed": config.seed,
        "threads": threads,
        "versions": _versions(),
        "wall_clock_seconds": wall,
        "outputs": files,
        "exit_status": status,
    })
    return status


def _error_exit(exc):
    code = 1
    for cls, c in EXIT_CODES.items():
        if isinstance(exc, cls):
            code = c
            break
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_status": code}), file=sys.stderr)
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="quadhedge", description="Quadratic hedging for exponential Levy models.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="JSON or TOML run config (or a manifest.json)")
    p.add_argument("--out", default=None, help="output directory (default: config 'out')")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError(f"--seed: must be an unsigned 64-bit integer, got {args.seed}")
            cfg.seed = args.seed
        return run(args.subcommand, cfg, args.out, args.threads)
    except (QuadHedgeError, ValueError) as exc:
        return _error_exit(exc)


if __name__ == "__main__":
    sys.exit(main())
