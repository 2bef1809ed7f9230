"""Batch entry point: ``ricciquant {verify,star,asym}``.

A JSON file given with ``--config`` supplies defaults; flags override it.
Exit codes: 0 success, 1 failed checks, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import suites
from .algebra import SpaceParams
from .errors import BoundaryMassError, CostLimit
from .grid import GridSpec, write_binary, write_csv
from .kernel import kernel_constant
from .multipliers import multiplier_from_spec
from .products import ROUTES, Gaussian, ProductConfig, asymptotic_compare, default_refine, star
from .report import Report


class ConfigError(ValueError):
    pass


@dataclass
class GridConfig:
    points: int = 128
    lo: float = -6.0
    hi: float = 6.0


@dataclass
class RunConfig:
    n: int = 0
    theta: float = 0.5
    theta_sweep: list = field(default_factory=lambda: [0.1, 0.05, 0.025])
    grid: GridConfig = field(default_factory=GridConfig)
    functions: list = field(default_factory=list)
    multiplier: str = "one"
    route: str = "pipeline"
    suite: list = field(default_factory=lambda: ["all"])
    out: str | None = None
    seed: int = 0
    orders: int = 1

    def validate(self):
        if not isinstance(self.n, int) or self.n < 0:
            raise ConfigError("n must be a non-negative integer")
        if self.theta == 0:
            raise ConfigError("theta must be nonzero")
        if self.route not in ROUTES:
            raise ConfigError(f"route must be one of {ROUTES}")
        if self.grid.points < 8:
            raise ConfigError("grid.points must be at least 8")
        unknown = set(self.suite) - set(suites.SUITES) - {"all"}
        if unknown:
            raise ConfigError(f"unknown suites {sorted(unknown)}; choose from {suites.SUITES}")
        for f in self.functions:
            if len(f.center) != 2 * self.n + 2:
                raise ConfigError(f"function center {f.center} needs {2 * self.n + 2} coordinates")

    @property
    def suite_names(self) -> list[str]:
        return list(suites.SUITES) if "all" in self.suite else list(self.suite)

    def grid_spec(self) -> GridSpec:
        return GridSpec.box(self.n, self.grid.lo, self.grid.hi, self.grid.points)


def _check_keys(data: dict, cls, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _gaussian(d: dict) -> Gaussian:
    if not isinstance(d, dict):
        raise ConfigError("each function must be an object")
    _check_keys(d, Gaussian, "function")
    if "center" not in d:
        raise ConfigError("function needs a center")
    amp = d.get("amplitude", 1.0)
    if isinstance(amp, list):
        amp = complex(amp[0], amp[1])
    width = d.get("width", 1.0)
    return Gaussian(tuple(float(c) for c in d["center"]),
                    tuple(width) if isinstance(width, list) else float(width), amp)


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(data, RunConfig, "config")
    for key, val in data.items():
        if key == "grid":
            if isinstance(val, int):
                val = GridConfig(points=val)
            elif isinstance(val, dict):
                _check_keys(val, GridConfig, "grid")
                val = GridConfig(**val)
            else:
                raise ConfigError("grid must be an integer or an object")
        elif key == "functions":
            val = [_gaussian(f) for f in val]
        elif key == "suite" and isinstance(val, str):
            val = [val]
        setattr(cfg, key, val)
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--n", type=int)
    common.add_argument("--theta", type=float)
    common.add_argument("--grid", type=int, help="points per axis")
    common.add_argument("--seed", type=int)
    common.add_argument("--route", choices=ROUTES)
    common.add_argument("--multiplier", help="one | tracial | tracial:<psi> | borel:<file>")
    common.add_argument("--out", help="output path")
    p = argparse.ArgumentParser(prog="ricciquant", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("--suite", action="append", help="suite name or 'all' (repeatable)")
    sub.add_parser("star", parents=[common], help="compute u * v for two Gaussians")
    a = sub.add_parser("asym", parents=[common], help="theta sweep against the formal expansion")
    a.add_argument("--theta-sweep", type=float, nargs="+")
    return p


def resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    for key in ("n", "theta", "seed", "route", "multiplier", "out"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if args.grid is not None:
        cfg.grid = dataclasses.replace(cfg.grid, points=args.grid)
    if getattr(args, "suite", None):
        cfg.suite = args.suite
    if getattr(args, "theta_sweep", None):
        cfg.theta_sweep = args.theta_sweep
    cfg.validate()
    return cfg


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DQ_THREADS", "1")))
    except ValueError:
        raise ConfigError("DQ_THREADS must be an integer")


def _emit(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2, default=str)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def cmd_verify(cfg: RunConfig) -> int:
    params = suites.SuiteParams(n=cfg.n, theta=cfg.theta, grid=cfg.grid.points, seed=cfg.seed)
    names = cfg.suite_names
    timings: dict = {}
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        reports = list(pool.map(lambda s: suites.run([s], params, timings), names))
    merged = Report("verify")
    for rep in reports:
        merged.extend(rep)
    _emit(merged.to_dict(), cfg.out)
    for name in names:
        print(f"{name}: {timings[name]:.2f} s", file=sys.stderr)
    return 0 if merged.passed else 1


def _product_config(cfg: RunConfig) -> ProductConfig:
    try:
        tau = multiplier_from_spec(cfg.multiplier, cfg.n)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
    return ProductConfig(SpaceParams(cfg.n), cfg.theta, tau, cfg.route, cfg.grid_spec())


def cmd_star(cfg: RunConfig) -> int:
    if len(cfg.functions) != 2:
        raise ConfigError("star needs exactly two functions in the config")
    if not cfg.out:
        raise ConfigError("star needs --out (.csv or .bin)")
    pc = _product_config(cfg)
    u, v = (g.sample(pc.grid) for g in cfg.functions)
    w = star(u, v, pc)
    out = Path(cfg.out)
    (write_csv if out.suffix == ".csv" else write_binary)(w, out)
    side = {
        "route": pc.route,
        "theta": pc.theta,
        "n": pc.n,
        "multiplier": cfg.multiplier,
        "grid": dataclasses.asdict(cfg.grid),
        "kernel_constant": kernel_constant(pc.n) if pc.route != "pipeline" and pc.n <= 1 else None,
        "kernel_refine": default_refine(pc.grid) if pc.route != "pipeline" else None,
        "twist_parameter": pc.theta / 2,
    }
    Path(str(out) + ".json").write_text(json.dumps(side, indent=2) + "\n")
    print(json.dumps(side))
    return 0


def cmd_asym(cfg: RunConfig) -> int:
    if len(cfg.theta_sweep) < 3:
        raise ConfigError("theta_sweep needs at least three values")
    pc = _product_config(cfg)
    if not pc.tau.is_one:
        raise ConfigError("asym compares against the formal expansion for the unit multiplier only")
    pair = cfg.functions if len(cfg.functions) == 2 else None
    rep = asymptotic_compare(pc, cfg.orders, cfg.theta_sweep, pair=pair)
    rows = [(th, K, rep.info["residuals"][K][j], rep.info[f"slope_{K}"])
            for K in range(cfg.orders + 1) for j, th in enumerate(rep.info["thetas"])]
    stream = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    try:
        w = csv.writer(stream)
        w.writerow(["theta", "order", "residual", "fitted_slope"])
        w.writerows(rows)
    finally:
        if cfg.out:
            stream.close()
    return 0 if rep.passed else 1


COMMANDS = {"verify": cmd_verify, "star": cmd_star, "asym": cmd_asym}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BoundaryMassError, CostLimit) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
