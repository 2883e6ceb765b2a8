"""Command-line entry point: ``vcprobe estimate|bound|sweep|constants|simulate|fit``.

Exit codes: 0 success, 2 configuration error, 3 runtime error, 4 adapter error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .bounds import classical_risk_bound, compute_constants, estimated_risk_bound, invert_rho
from .errors import ConfigError, DegeneracyError, VCProbeError
from .estimator import FitConfig, fit_h
from .report import (curve_csv, dumps, plan_from_config, resolve_config, run_estimate,
                     run_sweep, validate_report)
from .simulation import DesignGrid, XiSamples, resolve_workers, simulate_xi

log = logging.getLogger("vcprobe")


def _grid_arg(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be comma-separated integers: {text!r}")


def _load_json(path, what="config"):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed {what} {path}: {exc}") from None


def _config(args):
    raw = _load_json(args.config) if args.config else {}
    overrides = {"m": args.m, "grid": args.grid, "M": args.M, "master_seed": args.seed,
                 "delta_factor": args.delta_factor}
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    return resolve_config(raw)


def _write(out_dir, files):
    """Write all outputs at once, after every computation has finished."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")


def cmd_estimate(args):
    cfg = _config(args)
    workers = resolve_workers(args.workers)
    t0 = time.perf_counter()
    report, xi = run_estimate(cfg, workers)
    validate_report(report)
    elapsed = time.perf_counter() - t0
    text = dumps(report)
    if args.out:
        _write(args.out, {"report.json": text, "samples.csv": xi.to_csv(),
                          "curve.csv": curve_csv(report),
                          "timing.json": dumps({"wall_clock_seconds": elapsed, "workers": workers})})
    for w in report["fit"]["warnings"]:
        log.warning(w)
    sys.stdout.write(curve_csv(report) if args.format == "csv" else text)
    return 0


def cmd_simulate(args):
    cfg = _config(args)
    xi = simulate_xi(plan_from_config(cfg), resolve_workers(args.workers))
    csv_text = xi.to_csv()
    if args.out:
        _write(args.out, {"samples.csv": csv_text, "config.json": dumps(cfg)})
    if args.format == "csv" or not args.out:
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(dumps({"points": list(xi.points), "means": xi.means.tolist(), "m": xi.m}))
    return 0


def cmd_fit(args):
    try:
        text = Path(args.samples).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read samples {args.samples}: {exc}") from None
    try:
        xi = XiSamples.from_csv(text)
    except VCProbeError as exc:
        raise ConfigError(f"malformed samples file {args.samples}: {exc}") from None
    fit = fit_h(xi, None, FitConfig(args.M, args.coarse_step, args.tol))
    if args.format == "csv":
        sys.stdout.write("n,xi,phi\n")
        for n, x, f in zip(xi.points, xi.means, fit.fitted_curve):
            sys.stdout.write(f"{n},{float(x)!r},{f!r}\n")
    else:
        sys.stdout.write(dumps(fit.to_dict()))
    return 0


def cmd_constants(args):
    if args.config:
        cfg = _config(args)
        grid, M, h_lo = cfg["grid"], cfg["M"], cfg["h_lo"]
    else:
        if args.grid is None:
            raise ConfigError("constants needs --grid or --config")
        grid, M, h_lo = args.grid, args.M if args.M is not None else 50.0, args.h_lo
    try:
        DesignGrid(tuple(grid))
    except VCProbeError as exc:
        raise ConfigError(str(exc)) from None
    try:
        bundle = compute_constants(grid, M, h_lo)
    except DegeneracyError as exc:
        raise DegeneracyError(f"degenerate slope floor at n={exc.n}: {exc}", n=exc.n) from None
    sys.stdout.write(dumps(bundle.to_dict()))
    return 0


def cmd_bound(args):
    h_hat, delta, phi = args.h_hat, args.delta, args.varphi
    if args.report:
        rep = _load_json(args.report, "report")
        try:
            h_hat = rep["fit"]["h_hat"] if h_hat is None else h_hat
            delta = rep["deviation"]["delta"] if delta is None else delta
            phi = rep["varphi"] if phi is None else phi
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed report {args.report}: missing {exc}") from None
    missing = [name for name, v in (("--h-hat", h_hat), ("--delta", delta), ("--varphi", phi),
                                    ("--n", args.n)) if v is None]
    if missing:
        raise ConfigError(f"bound needs {', '.join(missing)} (directly or via --report)")
    out = {}
    rho = args.rho
    if args.target is not None:
        rho = invert_rho(h_hat + delta, args.n, args.target, phi)
        out["target"] = args.target
    if rho is None:
        raise ConfigError("bound needs --rho or --target")
    est = estimated_risk_bound(h_hat, delta, args.n, rho, phi)
    out["estimated"] = est.to_dict()
    if est.vacuous:
        out["vacuous"] = True
    if args.true_h is not None:
        out["classical"] = {"h": args.true_h, "n": args.n, "rho": rho,
                            "bound": classical_risk_bound(args.true_h, args.n, rho)}
    sys.stdout.write(dumps(out))
    return 0


def cmd_sweep(args):
    cfg = _config(args)
    workers = resolve_workers(args.workers)
    result = run_sweep(cfg, args.repeats, workers)
    text = dumps(result)
    if args.out:
        _write(args.out, {"sweep.json": text})
    sys.stdout.write(text)
    return 0


def _run_options(p, with_config=True):
    if with_config:
        p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--m", type=int, help="repetitions per design point")
    p.add_argument("--grid", type=_grid_arg, help="design points, e.g. 10,20,40")
    p.add_argument("--M", type=float, help="upper limit of the dimension search")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, help="worker processes (env VCPROBE_WORKERS)")
    p.add_argument("--delta-factor", type=float, help="delta as a multiple of its threshold")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    parser = argparse.ArgumentParser(prog="vcprobe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"vcprobe {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="simulate, fit h and bound its deviation")
    _run_options(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="only produce the deviation samples")
    _run_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="repeat estimate and check concentration")
    _run_options(p)
    p.add_argument("--repeats", "-R", type=int, default=30)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit h to a samples CSV")
    p.add_argument("--samples", required=True)
    p.add_argument("--M", type=float, default=50.0)
    p.add_argument("--coarse-step", type=float, default=0.25)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("constants", help="print the slope constants and derived bounds constants")
    _run_options(p)
    p.add_argument("--h-lo", type=float, default=0.1)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("bound", help="risk bound with an estimated dimension")
    p.add_argument("--report", help="take h_hat, delta and varphi from an estimate report")
    p.add_argument("--h-hat", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--varphi", type=float)
    p.add_argument("--n", type=float, help="training sample size")
    p.add_argument("--rho", type=float)
    p.add_argument("--target", type=float, help="solve for rho at this bound level")
    p.add_argument("--true-h", type=float, help="also print the bound for a known dimension")
    p.set_defaults(func=cmd_bound)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except VCProbeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
