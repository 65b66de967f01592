"""Command-line entry point: ``nonlocal-arz {run,thresholds,classify,presets}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .errors import NonlocalARZError
from .experiments import NAMED, ExperimentConfig, named_config, run_experiment
from .flux import make_pipes_flux
from .kernels import truncated_exponential_kernel, uniform_kernel, zero_kernel
from .presets import read_initial_csv
from .state import compute_F0_G0
from .thresholds import classify_initial_data, eta_constant_from_data, solve_threshold_ode


def _kernel(name: str, eps: float):
    if name == "uniform":
        return uniform_kernel()
    if name == "zero":
        return zero_kernel()
    return truncated_exponential_kernel(eps)


def _emit(obj, out=None):
    if out:
        io.write_json(out, obj)
    print(json.dumps(obj, indent=1, default=str))


def cmd_run(args) -> int:
    src = args.config
    if Path(src).exists():
        cfg = ExperimentConfig.load(src)
    elif src in NAMED:
        cfg = named_config(src)
    else:
        print(f"error: {src!r} is neither a config file nor a named preset "
              f"({', '.join(sorted(NAMED))})", file=sys.stderr)
        return 2
    if args.resolution_scale is not None:
        cfg.resolution_scale = args.resolution_scale
    if args.seed is not None:
        cfg.seed = args.seed
    out = args.out or cfg.output_dir or f"runs/{cfg.name}"
    res = run_experiment(cfg, out)
    for name, c in res.checks.items():
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {name}  value={c['value']}  limit={c['limit']}")
    if res.status == 2:
        err = res.summary["error"]
        print(f"error: {err['type']}: {err['message']}", file=sys.stderr)
    print(f"{res.summary['status']}: summary at {Path(out) / 'summary.json'}")
    return res.status


def cmd_thresholds(args) -> int:
    model = make_pipes_flux(args.J)
    curve = solve_threshold_ode(args.kind, model, args.C_eta)
    out = args.out or f"{args.kind}_J{args.J:g}_C{args.C_eta:g}.csv"
    io.write_curve(out, curve)
    meta = curve.metadata()
    meta.update(path=str(out), start_sensitivity=curve.start_sensitivity)
    print(json.dumps(meta, indent=1))
    return 0


def cmd_classify(args) -> int:
    model = make_pipes_flux(args.J)
    kernel = _kernel(args.kernel, args.eps)
    state = read_initial_csv(args.initial, model, kernel)
    report = compute_F0_G0(state, rho_M=model.rho_M)
    if args.curve:
        curve = io.read_curve(args.curve)
    else:
        curve = solve_threshold_ode("eta", model, eta_constant_from_data(report, kernel))
    cls = classify_initial_data(state, curve)
    _emit({
        "subcritical": cls.subcritical,
        "n_supercritical": cls.n_supercritical,
        "margin": cls.margin,
        "C_eta": curve.C_eta,
        "rho_star": curve.rho_star,
        "assumptions": report.flags(),
        "supercritical_x": cls.locations(state.grid),
    }, args.out)
    return 0


def cmd_presets(args) -> int:
    for name in sorted(NAMED):
        print(f"{name:24s} kind={NAMED[name]['kind']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonlocal-arz",
                                description="Nonlocal ARZ traffic model: runs, thresholds, classification")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a TOML/JSON config or a named preset")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default runs/<name>)")
    r.add_argument("--resolution-scale", type=float, help="multiply the number of cells")
    r.add_argument("--seed", type=int, help="seed for randomised checks")
    r.set_defaults(fn=cmd_run)

    t = sub.add_parser("thresholds", help="tabulate a sigma or eta curve to CSV")
    t.add_argument("--J", type=float, default=1.0, help="Pipes exponent")
    t.add_argument("--C-eta", dest="C_eta", type=float, default=0.0)
    t.add_argument("--kind", choices=("sigma", "eta"), default="eta")
    t.add_argument("--out", help="curve CSV path")
    t.add_argument("--resolution-scale", type=float, help=argparse.SUPPRESS)
    t.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    t.set_defaults(fn=cmd_thresholds)

    c = sub.add_parser("classify", help="test initial data (x, rho0, u0 CSV) against a threshold")
    c.add_argument("initial")
    c.add_argument("--curve", help="curve CSV; default: eta built from the data's C_eta")
    c.add_argument("--J", type=float, default=1.0)
    c.add_argument("--kernel", choices=("uniform", "zero", "exponential"), default="uniform")
    c.add_argument("--eps", type=float, default=1.0, help="length scale of the exponential kernel")
    c.add_argument("--out", help="write the verdict JSON here as well")
    c.add_argument("--resolution-scale", type=float, help=argparse.SUPPRESS)
    c.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    c.set_defaults(fn=cmd_classify)

    ls = sub.add_parser("presets", help="list named experiment presets")
    ls.set_defaults(fn=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except NonlocalARZError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
