"""Batch command-line front end.

Subcommands:

* ``flow``      -- run a curvature flow, emit diagnostics CSV, final-body
                   JSON and SVG figures;
* ``measure``   -- evaluate the surface-area density and functionals of one
                   body;
* ``solve-p0``  -- solve the logarithmic problem for a discrete even measure.

Exit codes: 0 success/converged, 2 invalid input, 3 convexity loss,
4 step budget exhausted, 5 rejected input (hypothesis violation).
All floats in CSV/JSON outputs carry 17 significant digits; identical
invocations produce bit-identical delimited outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import report
from .body import (
    ball_support,
    body_to_json_dict,
    derive_geometry,
    ellipse_support,
    perturbed_ball_support,
)
from .errors import (
    ConvexityLossError,
    DegenerateBodyError,
    FieldMismatchError,
    InvalidBodyError,
    InvalidGridError,
    RejectedInputError,
    SolverFailureError,
)
from .flow import FlowConfig, run
from .logmink import DEFAULT_SEED, DiscreteMeasure, solve_log_minkowski
from .measure import functionals, lp_surface_density
from .sphere import (
    ScalarField,
    constant_field,
    field_from_csv,
    field_to_csv,
    make_circle_grid,
    make_latlon_grid,
)

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_CONVEXITY_LOSS = 3
EXIT_MAX_STEPS = 4
EXIT_REJECTED = 5


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def dumps17(obj, indent: int = 0) -> str:
    """JSON text with every float at 17 significant digits."""
    pad = "  " * indent
    if isinstance(obj, dict):
        items = ",\n".join(
            f'{pad}  "{k}": {dumps17(v, indent + 1).lstrip()}' for k, v in obj.items()
        )
        return f"{pad}{{\n{items}\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        items = ",\n".join(f"{pad}  {dumps17(v, indent + 1).lstrip()}" for v in obj)
        return f"{pad}[\n{items}\n{pad}]"
    if isinstance(obj, bool):
        return f"{pad}{'true' if obj else 'false'}"
    if isinstance(obj, (int, np.integer)):
        return f"{pad}{int(obj)}"
    if isinstance(obj, (float, np.floating)):
        return f"{pad}{_fmt(obj)}"
    if obj is None:
        return f"{pad}null"
    return pad + json.dumps(obj)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps17(obj) + "\n")


# ---------------------------------------------------------------------------
# spec parsing
# ---------------------------------------------------------------------------

def build_grid(args):
    if args.n == 1:
        return make_circle_grid(args.N)
    return make_latlon_grid(args.nlat, args.nlon)


def parse_f_spec(spec: str, grid) -> ScalarField:
    """``const:V`` | ``harmonic:base:amp:k`` | ``file:PATH``."""
    kind, _, rest = spec.partition(":")
    if kind == "const":
        return constant_field(grid, float(rest))
    if kind == "harmonic":
        base, amp, k = rest.split(":")
        if grid.dim != 1:
            raise InvalidBodyError("harmonic density specs are planar only")
        vals = float(base) * (1.0 + float(amp) * np.cos(int(k) * grid.thetas))
        return ScalarField(grid, vals)
    if kind == "file":
        return field_from_csv(rest, grid)
    raise ValueError(f"unknown density spec {spec!r}")


def parse_init_spec(spec: str, grid) -> ScalarField:
    """``ball:R`` | ``ellipse:a:b[:c]`` | ``perturbed-ball:R:amp:k`` | ``file:PATH``."""
    kind, _, rest = spec.partition(":")
    if kind == "ball":
        return ball_support(grid, float(rest))
    if kind == "ellipse":
        parts = [float(x) for x in rest.split(":")]
        return ellipse_support(grid, *parts)
    if kind == "perturbed-ball":
        R, amp, k = rest.split(":")
        return perturbed_ball_support(grid, float(R), float(amp), int(k))
    if kind == "file":
        return field_from_csv(rest, grid)
    raise ValueError(f"unknown initial-body spec {spec!r}")


def _record_csv_lines(t, rec, min_eig) -> list:
    cols = ("t", "gamma", "psi", "phi", "theta", "residual_stationary",
            "residual_normalized", "min_eig_b")
    row = (t, rec.gamma, rec.psi, rec.phi, rec.theta,
           rec.residual_stationary, rec.residual_normalized, min_eig)
    return [",".join(cols), ",".join(_fmt(x) for x in row)]


def _print_record(rec) -> None:
    for name in ("gamma", "psi", "phi", "theta", "residual_stationary",
                 "residual_normalized", "c_estimate"):
        print(f"{name} = {_fmt(getattr(rec, name))}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_flow(args) -> int:
    grid = build_grid(args)
    f = parse_f_spec(args.f, grid)
    h0 = parse_init_spec(args.init, grid)
    cfg = FlowConfig(
        p=args.p, f=f, mode=args.mode, dt_cfl=args.dt_cfl, dt_max=args.dt_max,
        eps_convex=args.eps_convex, tol_stop=args.tol_stop,
        max_steps=args.max_steps, scheme=args.scheme,
        record_every=args.record_every,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    geom0 = derive_geometry(h0)
    final, diag = run(h0, cfg)
    diag.to_csv(out / "diagnostics.csv")
    write_json(out / "final_body.json", body_to_json_dict(final.geom))
    if grid.dim == 1:
        report.save_body_figure(
            out / "bodies.svg", [("initial", geom0), ("final", final.geom)]
        )
    else:
        field_to_csv(final.h, out / "final_body.csv")
    report.save_diagnostics_figure(out / "diagnostics.svg", diag)
    _print_record(diag.records[-1].record)
    print(f"status = {diag.status}")
    return EXIT_OK if diag.status == "converged" else EXIT_MAX_STEPS


def cmd_measure(args) -> int:
    grid = build_grid(args)
    f = parse_f_spec(args.f, grid)
    h = parse_init_spec(args.init, grid)
    geom = derive_geometry(h)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mf = lp_surface_density(geom, args.p)
    field_to_csv(mf.density, out / "measure.csv")
    rec = functionals(geom, f, args.p)
    lines = _record_csv_lines(0.0, rec, float(np.min(geom.min_eig_b)))
    (out / "functionals.csv").write_text("\n".join(lines) + "\n")
    report.save_density_figure(out / "measure.svg", mf.density,
                               label=f"p = {args.p:g} surface density")
    _print_record(rec)
    return EXIT_OK


def cmd_solve_p0(args) -> int:
    with open(args.measure) as fh:
        obj = json.load(fh)
    mu = DiscreteMeasure.from_json_obj(obj)
    result = solve_log_minkowski(
        mu, tol=args.tol, enforce_strict_check=not args.allow_strict_fail,
        seed=args.seed, mc_se=args.mc_se,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "solution.json", result.to_json_obj())
    if mu.dim == 1:
        report.save_polygon_figure(out / "solution.svg", result.body.polytope)
    print(f"c = {_fmt(result.c)}")
    print(f"kkt_residual = {_fmt(result.kkt_residual)}")
    print(f"gamma = {_fmt(result.gamma)}")
    print(f"iterations = {result.iterations}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

def _add_grid_args(sp):
    sp.add_argument("--n", type=int, choices=(1, 2), help="sphere dimension")
    sp.add_argument("--N", type=int, help="circle node count")
    sp.add_argument("--nlat", type=int, help="latitude bands (n = 2)")
    sp.add_argument("--nlon", type=int, help="longitudes (n = 2)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gaussmink", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", help="JSON file with default option values")
    sub = ap.add_subparsers(dest="command", required=True)

    fl = sub.add_parser("flow", help="run a curvature flow")
    _add_grid_args(fl)
    fl.add_argument("--p", type=float)
    fl.add_argument("--f", help="density spec: const:V | harmonic:b:a:k | file:PATH")
    fl.add_argument("--init", help="body spec: ball:R | ellipse:a:b | "
                                   "perturbed-ball:R:amp:k | file:PATH")
    fl.add_argument("--mode", choices=("normalized", "unnormalized"))
    fl.add_argument("--dt-cfl", dest="dt_cfl", type=float)
    fl.add_argument("--dt-max", dest="dt_max", type=float)
    fl.add_argument("--eps-convex", dest="eps_convex", type=float)
    fl.add_argument("--tol-stop", dest="tol_stop", type=float)
    fl.add_argument("--max-steps", dest="max_steps", type=int)
    fl.add_argument("--scheme", choices=("euler", "heun"))
    fl.add_argument("--record-every", dest="record_every", type=int)
    fl.add_argument("--out")
    fl.add_argument("--seed", type=int)
    fl.set_defaults(func=cmd_flow)

    me = sub.add_parser("measure", help="surface density and functionals of one body")
    _add_grid_args(me)
    me.add_argument("--p", type=float)
    me.add_argument("--f")
    me.add_argument("--init")
    me.add_argument("--out")
    me.set_defaults(func=cmd_measure)

    so = sub.add_parser("solve-p0", help="logarithmic problem for a discrete measure")
    so.add_argument("--measure", help="JSON file: [{direction: [...], mass: m}, ...]")
    so.add_argument("--tol", type=float)
    so.add_argument("--allow-strict-fail", action="store_true", default=None)
    so.add_argument("--seed", type=int)
    so.add_argument("--mc-se", dest="mc_se", type=float)
    so.add_argument("--out")
    so.set_defaults(func=cmd_solve_p0)
    return ap


_DEFAULTS = {
    "flow": {"n": 1, "N": 512, "nlat": 32, "nlon": 64, "p": 2.0,
             "f": "const:0.07957747154594767", "init": "ball:1.0",
             "mode": "unnormalized", "dt_cfl": 0.2, "dt_max": 1e-2,
             "eps_convex": 1e-8, "tol_stop": 1e-6, "max_steps": 400_000,
             "scheme": "euler", "record_every": 50, "out": "out",
             "seed": DEFAULT_SEED},
    "measure": {"n": 1, "N": 512, "nlat": 32, "nlon": 64, "p": 1.0,
                "f": "const:0.07957747154594767", "init": "ball:1.0",
                "out": "out"},
    "solve-p0": {"measure": None, "tol": 1e-7, "allow_strict_fail": False,
                 "seed": DEFAULT_SEED, "mc_se": 1e-4, "out": "out"},
}


def _merge_config(args) -> None:
    """Fill unset options from defaults, then the config file; flags win."""
    merged = dict(_DEFAULTS[args.command])
    if args.config:
        with open(args.config) as fh:
            merged.update(json.load(fh))
    for key, val in merged.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _merge_config(args)
        if args.command == "solve-p0" and not args.measure:
            raise ValueError("solve-p0 needs --measure FILE")
        return args.func(args)
    except ConvexityLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVEXITY_LOSS
    except (RejectedInputError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except (InvalidGridError, InvalidBodyError, DegenerateBodyError,
            FieldMismatchError, SolverFailureError, ValueError, KeyError,
            OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
