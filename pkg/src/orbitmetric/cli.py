"""Command line front end.

Every command resolves its settings as built-in defaults, then ``--config``,
then explicit flags, embeds the resolved settings in its JSON report and
writes outputs atomically. Exit codes: 0 all checks pass, 1 some check
failed (the report is still written), 2 usage or configuration error,
3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import assembly, oracle
from .curvature import (
    GRID_CSV_HEADER,
    TubeParams,
    flipped_sign_gap,
    quotient_quantities,
    tube_grid_table,
    verify_tube,
)
from .errors import ConfigError, DesignFailure, InfeasibleParams, InvalidParam, OutOfDomain, Singular
from .profiles import GridSpec, Profile, sine_profile

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
ORACLE_TOL = 1e-4

TUBE_DEFAULTS = {"q": 1, "m": 1, "eps": None, "eps0": None, "nu": None, "lambda": None, "Lambda": None,
                 "iota": 0.01, "smoothing_window": None, "grid_points": 2048}
DEFAULTS = {
    "design-tube": dict(TUBE_DEFAULTS),
    "verify-tube": dict(TUBE_DEFAULTS, tube=None, f=None, h=None, strict_tol=0.0),
    "double": {"points": 12, "planes": 12, "seed": 0},
    "exceptional": {"n": None, "lambda": None, "Lambda": None, "nu": None, "grid_points": 2048},
    "oracle-validate": {"chart": "round-s4", "grid": 20, "step": None, "seed": 0, "c": 0.5, "tol": ORACLE_TOL},
    "experiment": {"d": 2, "rhoF": 1.0, "cuts": [0.1, 0.3, 0.5, 0.8, 1.2], "psi": None, "scale": 1.0,
                   "grid_points": 2048},
}
ASSEMBLE_FLAGS = ("eps", "eps0", "nu", "nu0", "collar_length", "iota", "smoothing_window", "grid_points",
                  "strict_tol")
CHARTS = ("round-s2", "round-s3", "round-s4", "berger", "doubly-warped")


# --------------------------------------------------------------------------
# output


def to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [to_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns: dict, header=None) -> str:
    header = list(header or columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    n = len(np.atleast_1d(columns[header[0]]))
    cols = [np.atleast_1d(columns[k]) for k in header]
    for i in range(n):
        w.writerow([_cell(c[i]) for c in cols])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit(text: str, path: str | None):
    if path:
        atomic_write(path, text)
    else:
        sys.stdout.write(text)


def dump_grids(grids: dict, csv_dir: str | None):
    if not csv_dir:
        return
    for name, cols in sorted(grids.items()):
        header = GRID_CSV_HEADER if name.startswith("tube") else None
        atomic_write(os.path.join(csv_dir, f"{name}.csv"), csv_text(cols, header))


# --------------------------------------------------------------------------
# settings


def load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def resolve(command: str, args: argparse.Namespace, explicit: set | None = None) -> dict:
    """defaults < --config file < explicit flags; ``explicit`` collects keys not taken from defaults."""
    explicit = set() if explicit is None else explicit
    out = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        cfg = load_json(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("--config must hold a JSON object")
        extra = sorted(set(cfg) - set(out))
        if extra:
            raise ConfigError(f"unknown key(s) in {args.config}: {', '.join(extra)}")
        out.update(cfg)
        explicit.update(cfg)
    for k in DEFAULTS[command]:
        if hasattr(args, k):
            out[k] = getattr(args, k)
            explicit.add(k)
    return out


def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ConfigError(f"missing required setting(s): {', '.join(missing)}")


def tube_params(cfg) -> TubeParams:
    _require(cfg, "eps", "nu", "lambda", "Lambda")
    return TubeParams.from_dict(cfg)


# --------------------------------------------------------------------------
# commands


def sign_check(params):
    """How far the horizontal formula with flipped signs misses the round sphere value."""
    return {"round_sphere_gap_with_flipped_signs": flipped_sign_gap(params.q, params.m), "used": "corrected"}


def cmd_design_tube(cfg, args):
    params = tube_params(cfg)
    out = {"command": "design-tube", "config": cfg, "params": params.to_dict()}
    try:
        d = assembly.design_tube_report(params, cfg["smoothing_window"], int(cfg["grid_points"]))
    except InfeasibleParams as exc:
        out.update({"pass": False, "error": str(exc), "violated": exc.constraint})
        emit(dumps(out), args.output)
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out.update({"pass": d.report.passed, "params": d.params.to_dict(), "f": d.f.to_dict(), "h": d.h.to_dict(),
                "smoothing_window": d.smoothing_window, "report": d.report.to_dict(),
                "horizontal_sign_check": sign_check(d.params)})
    emit(dumps(out), args.output)
    dump_grids({"tube": tube_grid_table(d.f, d.h, d.params, GridSpec(int(cfg["grid_points"]), 1e-3,
                                                                     d.h.domain[1]))}, args.csv_dir)
    return EXIT_PASS if d.report.passed else EXIT_FAIL


def cmd_verify_tube(cfg, args, explicit=()):
    if cfg.get("tube"):
        doc = load_json(cfg["tube"])
        try:
            f, h = Profile.from_dict(doc["f"]), Profile.from_dict(doc["h"])
        except KeyError as exc:
            raise ConfigError(f"{cfg['tube']} lacks profile {exc}") from None
        merged = dict(doc.get("params", {}))
        merged.update({k: cfg[k] for k in explicit if k in TUBE_DEFAULTS})
        params = TubeParams.from_dict(merged)
    else:
        _require(cfg, "f", "h")
        f, h = Profile.from_dict(load_json(cfg["f"])), Profile.from_dict(load_json(cfg["h"]))
        params = tube_params(cfg)
    grid = GridSpec(int(cfg["grid_points"]), max(1e-3, h.domain[0]), h.domain[1])
    rep = verify_tube(f, h, params, grid, float(cfg["strict_tol"]))
    R = h.domain[1]
    sample = quotient_quantities(f.eval(R), h.eval(R), params)
    out = {"command": "verify-tube", "config": cfg, "params": params.to_dict(), "pass": rep.passed,
           "report": rep.to_dict(), "quotient_at_boundary": sample.to_dict(),
           "horizontal_sign_check": sign_check(params)}
    emit(dumps(out), args.output)
    dump_grids({"tube": tube_grid_table(f, h, params, grid)}, args.csv_dir)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_assemble(cfg_path, args):
    if not cfg_path:
        raise ConfigError("assemble needs --config")
    doc = load_json(cfg_path)
    if not isinstance(doc, dict):
        raise ConfigError("--config must hold a JSON object")
    for k in ASSEMBLE_FLAGS:
        if hasattr(args, k):
            doc[k] = getattr(args, k)
    cfg = assembly.AssemblyConfig.from_dict(doc)
    rep = assembly.assemble(cfg)
    out = dict(rep.to_dict(), command="assemble")
    emit(dumps(out), args.output)
    dump_grids(rep.grids, args.csv_dir)
    return EXIT_PASS if rep.overall else EXIT_FAIL


def cmd_double(cfg, args):
    rep = assembly.assemble_double(points=int(cfg["points"]), planes=int(cfg["planes"]), seed=int(cfg["seed"]))
    out = dict(rep.to_dict(), command="double", config=cfg)
    emit(dumps(out), args.output)
    return EXIT_PASS if rep.overall else EXIT_FAIL


def cmd_exceptional(cfg, args):
    _require(cfg, "n", "lambda", "Lambda", "nu")
    h, rep = assembly.build_exceptional_tube(int(cfg["n"]), float(cfg["lambda"]), float(cfg["Lambda"]),
                                             float(cfg["nu"]), grid_points=int(cfg["grid_points"]))
    out = {"command": "exceptional", "config": cfg, "h": h.to_dict(), "pass": rep.passed, "report": rep.to_dict(),
           "cited_results": [assembly.PRODUCT_FIBER]}
    emit(dumps(out), args.output)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def oracle_rows(chart: str, points: int, seed: int = 0, step=None, c: float = 0.5) -> list:
    """Comparison table between closed forms and the finite-difference oracle."""
    rng = np.random.default_rng(seed)
    if chart in ("round-s2", "round-s3"):
        d = int(chart[-1])
        ch = oracle.round_sphere_chart(d)
        st = oracle.DEFAULT_STEP if step is None else step
        rows = []
        for _ in range(points):
            x = oracle.random_point(ch, rng, 4 * st)
            s = oracle.ricci(ch, x, st)
            for k, ev in enumerate(s.ricci_eigen):
                rows.append(oracle._row(ch.name, x, f"eigen{k}", d - 1, ev))
        return rows
    if chart == "round-s4":
        sp = sine_profile()
        rs = 0.05 + (np.pi / 2 - 0.06) * rng.random(points)
        return oracle.compare_doubly_warped(sp, sp, rs, rng, step=step, name="round-s4")
    if chart == "berger":
        return oracle.compare_berger(c, points, rng, step)
    if chart == "doubly-warped":
        params = TubeParams(1, 1, 1.0, 0.2, 1.0, 0.3, 0.01)
        f, h = assembly.design_tube(params)
        R = h.domain[1]
        rs = 0.05 + (R - 0.06) * rng.random(points)
        knots = np.array(sorted(set(f.knots) | set(h.knots)))
        rs = np.array([r if np.min(np.abs(knots - r)) > 1e-3 else r + 2e-3 for r in rs])
        return oracle.compare_doubly_warped(f, h, rs, rng, step=step)
    raise ConfigError(f"unknown chart {chart!r}; choose from {', '.join(CHARTS)}")


def cmd_oracle_validate(cfg, args):
    rows = oracle_rows(cfg["chart"], int(cfg["grid"]), int(cfg["seed"]), cfg["step"], float(cfg["c"]))
    worst = max(r["rel_err"] for r in rows)
    ok = worst <= float(cfg["tol"])
    out = {"command": "oracle-validate", "config": cfg, "rows": rows, "max_rel_err": worst, "pass": ok}
    emit(dumps(out), args.output)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_experiment(cfg, args):
    if cfg.get("psi"):
        family = {os.path.basename(cfg["psi"]): Profile.from_dict(load_json(cfg["psi"]))}
    else:
        family = assembly.sine_shell_family([float(t) for t in cfg["cuts"]])
    rows = assembly.experiment_shell_scan(int(cfg["d"]), float(cfg["rhoF"]), family, float(cfg["scale"]),
                                          int(cfg["grid_points"]))
    cols = {k: [r[k] for r in rows] for k in assembly.SCAN_HEADER}
    emit(csv_text(cols, assembly.SCAN_HEADER), args.output)
    return EXIT_PASS


# --------------------------------------------------------------------------
# argument parsing


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orbitmetric", allow_abbrev=False,
                                description="Build and check Ricci positive cohomogeneity metrics.")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, help_text):
        sp = sub.add_parser(name, help=help_text, allow_abbrev=False, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="JSON settings; flags override")
        sp.add_argument("-o", "--output", default=None, help="output path (default: stdout)")
        return sp

    def tube_flags(sp):
        sp.add_argument("--q", type=int)
        sp.add_argument("--m", type=int)
        sp.add_argument("--eps", type=float)
        sp.add_argument("--eps0", type=float)
        sp.add_argument("--nu", type=float)
        sp.add_argument("--lambda", dest="lambda", type=float)
        sp.add_argument("--Lambda", dest="Lambda", type=float)
        sp.add_argument("--iota", type=float)
        sp.add_argument("--smoothing-window", dest="smoothing_window", type=float)
        sp.add_argument("--grid-points", dest="grid_points", type=int)
        sp.add_argument("--csv-dir", dest="csv_dir", default=None)

    sp = command("design-tube", "design and verify the radial profiles of a singular tube")
    tube_flags(sp)
    sp = command("verify-tube", "verify given profiles of a singular tube")
    tube_flags(sp)
    sp.add_argument("--tube", help="output of design-tube")
    sp.add_argument("--f", help="profile JSON for f")
    sp.add_argument("--h", help="profile JSON for h")
    sp.add_argument("--strict-tol", dest="strict_tol", type=float)

    sp = command("assemble", "run a full gluing configuration")
    for k in ASSEMBLE_FLAGS:
        typ = int if k == "grid_points" else float
        if k == "nu":
            typ = _nu
        sp.add_argument("--" + k.replace("_", "-"), dest=k, type=typ)
    sp.add_argument("--csv-dir", dest="csv_dir", default=None)

    sp = command("double", "check the double of the round sine tube")
    sp.add_argument("--points", type=int)
    sp.add_argument("--planes", type=int)
    sp.add_argument("--seed", type=int)

    sp = command("exceptional", "build the tube around an exceptional orbit")
    sp.add_argument("--n", type=int)
    sp.add_argument("--lambda", dest="lambda", type=float)
    sp.add_argument("--Lambda", dest="Lambda", type=float)
    sp.add_argument("--nu", type=float)
    sp.add_argument("--grid-points", dest="grid_points", type=int)

    sp = command("oracle-validate", "compare closed-form Ricci curvature with finite differences")
    sp.add_argument("--chart", choices=CHARTS)
    sp.add_argument("--grid", type=int, help="number of sample points")
    sp.add_argument("--step", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--c", type=float, help="fibre length of the Berger sphere")
    sp.add_argument("--tol", type=float)

    sp = command("experiment", "scan two-boundary warped-interval bases")
    sp.add_argument("--d", type=int)
    sp.add_argument("--rhoF", type=float)
    sp.add_argument("--cuts", type=_floats)
    sp.add_argument("--psi", help="profile JSON to scan instead of the sine family")
    sp.add_argument("--scale", type=float)
    sp.add_argument("--grid-points", dest="grid_points", type=int)
    return p


def _nu(text):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"nu must be a number or 'auto', got {text!r}") from None


HANDLERS = {
    "design-tube": cmd_design_tube, "verify-tube": cmd_verify_tube, "double": cmd_double,
    "exceptional": cmd_exceptional, "oracle-validate": cmd_oracle_validate, "experiment": cmd_experiment,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    for k in ("output", "csv_dir"):
        if not hasattr(args, k):
            setattr(args, k, None)
    try:
        if args.command == "assemble":
            return cmd_assemble(getattr(args, "config", None), args)
        if args.command == "verify-tube":
            explicit = set()
            cfg = resolve(args.command, args, explicit)
            return cmd_verify_tube(cfg, args, explicit)
        return HANDLERS[args.command](resolve(args.command, args), args)
    except (ConfigError, InvalidParam, OutOfDomain) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (Singular, DesignFailure) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
