"""Command-line front end driven by a single JSON run configuration.

Usage::

    grushin <solve|mpa|pohozaev|eigen|embed|sweep|check> --config run.json \\
        [--out DIR] [--format csv|json] [--seed N]

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import ProbeError, critical_exponents, embedding_constant, pohozaev_evaluate
from .discretization import (DegenerateGridError, assemble_grushin, build_grid, read_field,
                             write_field)
from .domain import Domain, DomainError
from .functional import energy_state
from .linalg import LinearSolverCfg, SolverFailure, smallest_eigenvalue
from .nonlinearity import PurePower, check_A1_A5, preset
from .solvers import (InvalidEndpointError, MpaCfg, NehariProjectionError,
                      mountain_pass_endpoint, mpa_solve, nehari_minimize, seed_field)

__all__ = ["ConfigError", "RunConfig", "load_config", "main", "REPORT_COLUMNS"]

COMMANDS = ("solve", "mpa", "pohozaev", "eigen", "embed", "sweep", "check")
REPORT_COLUMNS = ("k", "p", "grid", "level", "grad_norm", "pohozaev_lhs", "pohozaev_rhs",
                  "rel_residual", "verdict")
SWEEP_COLUMNS = REPORT_COLUMNS + ("supercritical",)
EIGEN_COLUMNS = ("k", "grid", "lambda_min", "poincare_factor", "iterations")
EMBED_COLUMNS = ("k", "q", "grid", "C_q", "iterations")
CHECK_COLUMNS = ("hypothesis", "passed", "witness", "detail", "seed")

_TOP_KEYS = {"domain", "k", "nonlinearity", "grid", "solver", "linear", "seed", "out_dir",
             "format", "field", "q", "sweep", "samples"}
_SWEEP_KEYS = {"p", "k", "grids"}
U64 = 2**64


class ConfigError(ValueError):
    """Invalid run configuration; ``module`` names the part that rejected it."""

    def __init__(self, module, message):
        super().__init__(f"[{module}] {message}")
        self.module = module


@dataclasses.dataclass
class RunConfig:
    domain: Domain
    k: float
    nonlinearity: dict
    nx: int
    ny: int
    solver: MpaCfg
    linear: LinearSolverCfg
    seed: int
    out_dir: Path | None
    format: str
    field: Path | None = None
    q: float | None = None
    sweep: dict | None = None
    samples: int = 2000

    @property
    def p(self):
        return self.nonlinearity.get("p")

    def make_nonlinearity(self, k=None, p=None):
        k = self.k if k is None else k
        kind = self.nonlinearity["kind"]
        if kind == "power":
            return PurePower(self.p if p is None else p, k)
        return preset(kind.split(":", 1)[1], k)


def _number(value, name, module, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(module, f"{name} must be a number, got {value!r}")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(module, f"{name} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _strict(obj, allowed, module):
    if not isinstance(obj, dict):
        raise ConfigError(module, f"expected a JSON object, got {type(obj).__name__}")
    extra = set(obj) - set(allowed)
    if extra:
        raise ConfigError(module, f"unknown keys: {sorted(extra)}")


def _parse_nonlinearity(raw, k):
    if isinstance(raw, str):
        raw = {"kind": raw}
    _strict(raw, {"kind", "p"}, "nonlinearity")
    kind = raw.get("kind")
    if kind == "power":
        if "p" not in raw:
            raise ConfigError("nonlinearity", "power nonlinearity needs 'p'")
        p = _number(raw["p"], "p", "nonlinearity")
        if not p > 1:
            raise ConfigError("nonlinearity",
                              f"power exponent must satisfy p >= 1, and p > 1 for a "
                              f"nontrivial variational solve; got p={p:g}")
        return {"kind": "power", "p": p}
    if isinstance(kind, str) and kind.startswith("preset:"):
        if "p" in raw:
            raise ConfigError("nonlinearity", "presets take no 'p'")
        try:
            preset(kind.split(":", 1)[1], k)
        except ValueError as exc:
            raise ConfigError("nonlinearity", str(exc)) from None
        return {"kind": kind}
    raise ConfigError("nonlinearity", f"kind must be 'power' or 'preset:<name>', got {kind!r}")


def _parse_seed(value):
    seed = _number(value, "seed", "cli", int)
    if not 0 <= seed < U64:
        raise ConfigError("cli", f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def load_config(path, out=None, fmt=None, seed=None):
    """Parse and validate a run configuration; command-line overrides win."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("cli", f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("cli", f"config is not valid JSON: {exc}") from None
    _strict(raw, _TOP_KEYS, "cli")
    for key in ("domain", "k", "nonlinearity", "grid"):
        if key not in raw:
            raise ConfigError("cli", f"missing required key {key!r}")

    try:
        domain = Domain.from_dict(raw["domain"])
        domain.require_degenerate_line()
    except DomainError as exc:
        raise ConfigError("domain", str(exc)) from None
    k = _number(raw["k"], "k", "discretization")
    if not k > 0:
        raise ConfigError("discretization", f"k must be positive, got {k:g}")
    nonlinearity = _parse_nonlinearity(raw["nonlinearity"], k)

    _strict(raw["grid"], {"nx", "ny"}, "discretization")
    try:
        nx = _number(raw["grid"]["nx"], "nx", "discretization", int)
        ny = _number(raw["grid"]["ny"], "ny", "discretization", int)
    except KeyError as exc:
        raise ConfigError("discretization", f"grid needs {exc}") from None
    if nx < 8 or ny < 8:
        raise ConfigError("discretization", f"grid needs nx, ny >= 8, got {nx}x{ny}")

    solver_raw = raw.get("solver", {})
    _strict(solver_raw, {f.name for f in dataclasses.fields(MpaCfg)}, "solvers")
    linear_raw = raw.get("linear", {})
    _strict(linear_raw, {"tol", "max_iter"}, "solvers")
    try:
        solver = MpaCfg(**solver_raw)
        linear = LinearSolverCfg(**linear_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError("solvers", str(exc)) from None

    fmt = fmt if fmt is not None else raw.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("cli", f"format must be 'csv' or 'json', got {fmt!r}")
    seed = _parse_seed(seed if seed is not None else raw.get("seed", 0))
    out_dir = out if out is not None else raw.get("out_dir")

    cfg = RunConfig(domain, k, nonlinearity, nx, ny, solver, linear, seed,
                    Path(out_dir) if out_dir is not None else None, fmt)
    if "field" in raw:
        if not isinstance(raw["field"], str):
            raise ConfigError("cli", "field must be a path string")
        cfg.field = (Path(path).parent / raw["field"]) if not os.path.isabs(raw["field"]) \
            else Path(raw["field"])
    if "q" in raw:
        cfg.q = _number(raw["q"], "q", "analysis")
    if "samples" in raw:
        cfg.samples = _number(raw["samples"], "samples", "nonlinearity", int)
        if cfg.samples < 1000:
            raise ConfigError("nonlinearity", "samples must be >= 1000")
    if "sweep" in raw:
        _strict(raw["sweep"], _SWEEP_KEYS, "cli")
        sweep = {}
        for key in _SWEEP_KEYS & set(raw["sweep"]):
            vals = raw["sweep"][key]
            if not isinstance(vals, list) or not vals:
                raise ConfigError("cli", f"sweep.{key} must be a non-empty list")
            kind = int if key == "grids" else float
            sweep[key] = [_number(v, f"sweep.{key}", "cli", kind) for v in vals]
        for p in sweep.get("p", []):
            if not p > 1:
                raise ConfigError("nonlinearity", f"sweep exponents must satisfy p >= 1 "
                                  f"and p > 1 for a solve; got p={p:g}")
        for kk in sweep.get("k", []):
            if not kk > 0:
                raise ConfigError("discretization", f"sweep k must be positive, got {kk:g}")
        for n in sweep.get("grids", []):
            if n < 8:
                raise ConfigError("discretization", f"sweep grids need n >= 8, got {n}")
        cfg.sweep = sweep
    return cfg


def _plain(value):
    return value.item() if isinstance(value, np.generic) else value


def _fmt(value):
    value = _plain(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _write_table(path, columns, rows, fmt):
    path = Path(path)
    if fmt == "json":
        payload = [{c: _plain(row.get(c)) for c in columns} for row in rows]
        path.with_suffix(".json").write_text(json.dumps(payload, indent=2) + "\n")
        return path.with_suffix(".json")
    buf = io.StringIO()
    buf.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    target = path.with_suffix(".csv")
    target.write_text(buf.getvalue())
    return target


def _grid_label(nx, ny):
    return f"{nx}x{ny}"


def _pohozaev_columns(grid, u, k, nl):
    if not nl.is_pure_power:
        return {}
    rep = pohozaev_evaluate(grid, u, k, nl.p)
    return {"pohozaev_lhs": rep.lhs, "pohozaev_rhs": rep.rhs, "rel_residual": rep.rel_residual}


def _solve_point(domain, k, nl, nx, ny, cfg, method):
    grid = build_grid(domain, nx, ny)
    op = assemble_grushin(grid, k)
    if method == "nehari" and nl.is_pure_power:
        rep = nehari_minimize(op, nl, cfg.seed, cfg.solver, cfg.linear)
    else:
        _, u1 = mountain_pass_endpoint(op, nl, seed_field(grid, cfg.seed))
        rep = mpa_solve(op, nl, u1, cfg.solver, cfg.linear)
    row = {"k": float(k), "p": nl.p, "grid": _grid_label(nx, ny), "level": rep.level,
           "grad_norm": rep.grad_norm,
           "verdict": "no-continuum-limit" if rep.supercritical else "converged",
           "supercritical": rep.supercritical}
    row.update(_pohozaev_columns(grid, rep.u_star, k, nl))
    return grid, rep, row


def _cmd_solve(cfg, method):
    nl = cfg.make_nonlinearity()
    grid, rep, row = _solve_point(cfg.domain, cfg.k, nl, cfg.nx, cfg.ny, cfg, method)
    write_field(cfg.out_dir / "solution.field", grid, rep.u_star, cfg.k)
    _write_table(cfg.out_dir / "report", REPORT_COLUMNS, [row], cfg.format)
    return 0


def _cmd_pohozaev(cfg):
    if cfg.field is None:
        raise ConfigError("cli", "pohozaev needs a 'field' path")
    try:
        grid, u, k = read_field(cfg.field)
    except (OSError, ValueError) as exc:
        raise ConfigError("discretization", f"cannot load field: {exc}") from None
    nl = cfg.make_nonlinearity(k=k)
    if not nl.is_pure_power:
        raise ConfigError("nonlinearity", "the Pohozaev audit needs a power nonlinearity")
    op = assemble_grushin(grid, k)
    state = energy_state(u, op, nl, cfg.linear)
    row = {"k": k, "p": nl.p, "grid": _grid_label(grid.nx, grid.ny), "level": state.phi,
           "grad_norm": state.grad_norm, "verdict": "audited"}
    row.update(_pohozaev_columns(grid, u, k, nl))
    _write_table(cfg.out_dir / "report", REPORT_COLUMNS, [row], cfg.format)
    return 0


def _cmd_eigen(cfg):
    grid = build_grid(cfg.domain, cfg.nx, cfg.ny)
    op = assemble_grushin(grid, cfg.k)
    res = smallest_eigenvalue(op, grid.weights, cfg.linear)
    row = {"k": cfg.k, "grid": _grid_label(cfg.nx, cfg.ny), "lambda_min": res.lambda_min,
           "poincare_factor": float(np.sqrt(1.0 + 1.0 / res.lambda_min)),
           "iterations": res.iterations}
    _write_table(cfg.out_dir / "report", EIGEN_COLUMNS, [row], cfg.format)
    return 0


def _cmd_embed(cfg):
    if cfg.q is None:
        raise ConfigError("analysis", "embed needs 'q'")
    two_k = critical_exponents(cfg.k).two_k
    if not 1 <= cfg.q <= two_k:
        raise ConfigError("analysis", f"q must lie in [1, 2_k={two_k:g}], got {cfg.q:g}")
    grid = build_grid(cfg.domain, cfg.nx, cfg.ny)
    op = assemble_grushin(grid, cfg.k)
    rep = embedding_constant(op, cfg.q, cfg.seed, lin=cfg.linear)
    row = {"k": cfg.k, "q": cfg.q, "grid": _grid_label(cfg.nx, cfg.ny),
           "C_q": rep.C_q_estimate, "iterations": rep.iterations}
    _write_table(cfg.out_dir / "report", EMBED_COLUMNS, [row], cfg.format)
    return 0


def _cmd_check(cfg):
    nl = cfg.make_nonlinearity()
    rep = check_A1_A5(nl, cfg.domain, cfg.samples, cfg.seed)
    rows = [dict(r, seed=cfg.seed) for r in rep.rows()]
    _write_table(cfg.out_dir / "report", CHECK_COLUMNS, rows, cfg.format)
    return 0 if rep.all_passed else 2


def _threads():
    raw = os.environ.get("GRUSHIN_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("cli", f"GRUSHIN_THREADS must be a positive integer, got {raw!r}") \
            from None
    if n < 1:
        raise ConfigError("cli", f"GRUSHIN_THREADS must be a positive integer, got {raw!r}")
    return n


_GNUPLOT = """\
# gnuplot script for sweep.csv
set datafile separator ","
set key autotitle columnhead
set xlabel "p"
set ylabel "level"
set logscale y
plot "sweep.csv" using 2:4 with linespoints title "level"
"""


def _cmd_sweep(cfg):
    if cfg.sweep is None:
        raise ConfigError("cli", "sweep needs a 'sweep' object with 'p' and/or 'k' lists")
    if cfg.nonlinearity["kind"] != "power":
        raise ConfigError("nonlinearity", "sweeps run over power nonlinearities")
    ks = cfg.sweep.get("k", [cfg.k])
    ps = cfg.sweep.get("p", [cfg.p])
    grids = [(n, n) for n in cfg.sweep["grids"]] if "grids" in cfg.sweep else [(cfg.nx, cfg.ny)]
    points = sorted({(k, p, g) for k in ks for p in ps for g in grids})
    threads = min(_threads(), len(points))

    def run(point):
        k, p, (nx, ny) = point
        try:
            _, _, row = _solve_point(cfg.domain, k, PurePower(p, k), nx, ny, cfg, "nehari")
        except (SolverFailure, NehariProjectionError, InvalidEndpointError,
                FloatingPointError) as exc:
            row = {"k": k, "p": p, "grid": _grid_label(nx, ny),
                   "verdict": f"failed: {exc}".replace(",", ";"),
                   "supercritical": p > critical_exponents(k).p_crit}
        return point, row

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(run, points))
    else:
        results = dict(map(run, points))
    rows = [results[pt] for pt in points]
    _write_table(cfg.out_dir / "sweep", SWEEP_COLUMNS, rows, "csv")
    if cfg.format == "json":
        _write_table(cfg.out_dir / "sweep", SWEEP_COLUMNS, rows, "json")
    (cfg.out_dir / "sweep.gp").write_text(_GNUPLOT)
    failed = any(str(r["verdict"]).startswith("failed") for r in rows)
    return 2 if failed else 0


def _dispatch(command, cfg):
    if command == "solve":
        return _cmd_solve(cfg, "nehari")
    if command == "mpa":
        return _cmd_solve(cfg, "mpa")
    return {"pohozaev": _cmd_pohozaev, "eigen": _cmd_eigen, "embed": _cmd_embed,
            "sweep": _cmd_sweep, "check": _cmd_check}[command](cfg)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="grushin", description="Variational solver for the Grushin-type Dirichlet problem.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides out_dir)")
    parser.add_argument("--format", choices=("csv", "json"), help="report format")
    parser.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides seed)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.out, args.format, args.seed)
        if cfg.out_dir is None:
            raise ConfigError("cli", "no output directory: set out_dir or pass --out")
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        return _dispatch(args.command, cfg)
    except ConfigError as exc:
        print(f"config error {exc}", file=sys.stderr)
        return 1
    except (DomainError, DegenerateGridError) as exc:
        print(f"config error [discretization] {exc}", file=sys.stderr)
        return 1
    except (SolverFailure, NehariProjectionError, InvalidEndpointError, ProbeError) as exc:
        module = "analysis" if isinstance(exc, ProbeError) else "solvers"
        print(f"numerical error [{module}] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
