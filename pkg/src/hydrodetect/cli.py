"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import cmath
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import io as hio
from .counterx import CounterexampleError, build_family, verify_family
from .flow import classify_stealth, eval_potential, zeta_coeffs
from .inverse import (
    DetectionError,
    detect_c147,
    detect_ellipse,
    detect_quarter_full,
    detect_quarter_symmetric,
    recover_velocity,
)
from .rigid import Configuration, Position, RigidVelocity, angle_distance
from .shape import (
    InversionError,
    ShapeSpec,
    eval_map_derivative,
    eval_map_inverse,
    inside_solid,
    make_c147,
    make_ellipse,
)
from .spectral import (
    ClosedFormProvider,
    StealthPotentialError,
    TableProvider,
    geometry_coeffs,
    geometry_coeffs_bruteforce,
    moments_closed_form,
    moments_contour,
)
from .track import TrackingError, synthesize_timeseries, track

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

# options taking comma-separated numbers, which may start with a minus sign
_COMPLEX_OPTS = ("--w0", "--nu", "--grid", "--box", "--nu-grid")


class InputError(ValueError):
    """Bad command-line value or inconsistent inputs."""


def worker_count() -> int:
    """Worker pool size, capped by ``HYDRODETECT_THREADS``."""
    n = os.cpu_count() or 1
    raw = os.environ.get("HYDRODETECT_THREADS")
    if raw is None or raw == "":
        return n
    try:
        cap = int(raw)
    except ValueError:
        raise InputError(f"HYDRODETECT_THREADS must be a positive integer, got {raw!r}") from None
    if cap < 1:
        raise InputError(f"HYDRODETECT_THREADS must be a positive integer, got {raw!r}")
    return min(n, cap)


def parse_complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")


def parse_floats(count: int):
    def conv(text: str):
        try:
            vals = [float(v) for v in text.split(",")]
        except ValueError:
            vals = []
        if len(vals) != count or not all(math.isfinite(v) for v in vals):
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers, got {text!r}")
        return vals

    return conv


def _cpair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


# -- grid evaluation ------------------------------------------------------------

def _xi_and_u(shape, rot, r, zeta, z):
    w = eval_map_inverse(shape, (z - r) * rot)
    fp = eval_map_derivative(shape, w)
    return zeta(w), -np.conj(zeta.derivative(w) * rot / fp)


def potential_grid(shape: ShapeSpec, cfg: Configuration, xs: np.ndarray, ys: np.ndarray):
    """Rows ``(x, y, Re xi, Im xi, Re u, Im u)``; points in the solid give NaN."""
    zeta = zeta_coeffs(shape, cfg.velocity)
    rot = cmath.exp(-1j * cfg.alpha)
    nan = complex(math.nan, math.nan)

    def row(y):
        z = xs + 1j * y
        xi = np.full(z.shape, nan)
        u = np.full(z.shape, nan)
        out = ~inside_solid(shape, (z - cfg.r) * rot)
        if out.any():
            try:
                xi[out], u[out] = _xi_and_u(shape, rot, cfg.r, zeta, z[out])
            except InversionError:
                for i in np.flatnonzero(out):
                    try:
                        xi[i], u[i] = _xi_and_u(shape, rot, cfg.r, zeta, z[i])
                    except InversionError:
                        pass
        return [
            (float(x), float(y), a.real, a.imag, b.real, b.imag)
            for x, a, b in zip(xs, xi.tolist(), u.tolist())
        ]

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        chunks = list(pool.map(row, ys))
    return [r for chunk in chunks for r in chunk]


GRID_HEADER = ("x", "y", "re_xi", "im_xi", "re_u", "im_u")


def _grid_sizes(spec):
    xmin, xmax, ymin, ymax, nx, ny = spec
    if nx < 1 or ny < 1 or nx != int(nx) or ny != int(ny):
        raise InputError("grid sizes must be positive integers")
    if xmin > xmax or ymin > ymax:
        raise InputError("grid bounds must satisfy min <= max")
    return xmin, xmax, ymin, ymax, int(nx), int(ny)


# -- subcommands ------------------------------------------------------------

def cmd_forward(args) -> int:
    shape = hio.load_shape(args.shape)
    cfg = hio.load_config(args.config)
    if args.N < 1:
        raise InputError("--N must be >= 1")
    nus = list(args.nu or [])
    if args.nu_grid:
        xmin, xmax, ymin, ymax, nx, ny = _grid_sizes(args.nu_grid)
        nus += [complex(x, y) for y in np.linspace(ymin, ymax, ny) for x in np.linspace(xmin, xmax, nx)]
    if not nus:
        nus = [0j]
    zeta = zeta_coeffs(shape, cfg.velocity)
    radius = args.radius or 1.5 * shape.l1_norm()
    tables = []
    for nu in nus:
        if args.method == "closed":
            tables.append(moments_closed_form(shape, cfg, nu, args.N))
        else:
            tables.append(moments_contour(
                lambda z: eval_potential(shape, cfg, z, zeta), nu, args.N, radius, args.Q, center=cfg.r
            ))
    if len(tables) == 1:
        payload = tables[0].to_json()
    else:
        payload = {"tables": [t.to_json() for t in tables]}
    outputs = [hio.write_json(args.out, payload)]
    params = {"nu": [_cpair(nu) for nu in nus], "N": args.N, "method": args.method}
    if args.grid:
        if not args.grid_out:
            raise InputError("--grid needs --grid-out")
        xmin, xmax, ymin, ymax, nx, ny = _grid_sizes(args.grid)
        xs = np.linspace(xmin, xmax, nx)
        ys = np.linspace(ymin, ymax, ny)
        rows = potential_grid(shape, cfg, xs, ys)
        outputs.append(hio.write_csv(args.grid_out, GRID_HEADER, rows))
        params["grid"] = args.grid
    hio.write_manifest(outputs, "forward", [args.shape, args.config], params)
    return EXIT_OK


def cmd_coeffs(args) -> int:
    shape = hio.load_shape(args.shape)
    if args.N < 1:
        raise InputError("--N must be >= 1")
    if args.bruteforce:
        geom = geometry_coeffs_bruteforce(shape, args.N, args.c_constraint)
    else:
        geom = geometry_coeffs(shape, args.N)
    rows = [
        (k + 1, a.real, a.imag, b.real, b.imag, c.real, c.imag)
        for k, (a, b, c) in enumerate(zip(geom.A.tolist(), geom.B.tolist(), geom.C.tolist()))
    ]
    out = hio.write_csv(args.out, ("k", "re_A", "im_A", "re_B", "im_B", "re_C", "im_C"), rows)
    hio.write_manifest([out], "coeffs", [args.shape], {"N": args.N, "bruteforce": args.bruteforce})
    return EXIT_OK


def _ellipse_axes(shape: ShapeSpec) -> tuple[float, float]:
    if shape.M != 1 or shape.c1.imag != 0 or shape.tail[0].imag != 0:
        raise InputError("--method ellipse needs an axis-aligned ellipse shape (c1, c_-1 real)")
    a = shape.c1.real + shape.tail[0].real
    b = shape.c1.real - shape.tail[0].real
    if not a > b > 0:
        raise InputError("shape is not an ellipse with a > b > 0")
    return a, b


def cmd_detect(args) -> int:
    shape = hio.load_shape(args.shape)
    tables = hio.load_tables(args.measurements)
    provider = TableProvider(tables)
    nu = tables[0].nu if args.nu is None else args.nu
    inputs = [args.shape, args.measurements]
    if args.method == "ellipse":
        a, b = _ellipse_axes(shape)
        res = detect_ellipse(a, b, None, provider, search_box=args.box, grid=args.grid)
        payload = res.to_json()
    elif args.method == "symmetric":
        payload = detect_quarter_symmetric(shape, provider, nu).to_json()
    elif args.method == "symmetric-full":
        payload = detect_quarter_full(shape, provider, nu).to_json()
    elif args.method == "c147":
        payload = detect_c147(shape, provider, nu).to_json()
    else:
        if not args.pose:
            raise InputError("--method velocity needs --pose")
        pos = hio.load_position(args.pose)
        inputs.append(args.pose)
        table = provider(nu)
        geom = geometry_coeffs(shape, table.N)
        vel, residual = recover_velocity(geom, pos, table, shape, return_residual=True)
        payload = {
            "method": "velocity",
            "configurations": [Configuration(pos, vel).to_json()],
            "residual": residual,
        }
    if not payload["residual"] <= args.max_residual:
        # keep the result for inspection, but report the failure
        hio.write_json(args.out, payload)
        raise DetectionError(
            f"moment residual {payload['residual']:.3g} exceeds {args.max_residual:g}; "
            "supply tables closer to the solid or more moments"
        )
    out = hio.write_json(args.out, payload)
    hio.write_manifest([out], "detect", inputs, {"method": args.method, "nu": _cpair(nu)})
    return EXIT_OK


def _trajectory_csv(path, traj):
    header = ("t", "re_r", "im_r", "alpha", "re_w_world", "im_w_world", "omega")
    return hio.write_csv(path, header, traj.rows())


def cmd_track(args) -> int:
    shape = hio.load_shape(args.shape)
    initial = hio.load_position(args.initial)
    data = hio.load_timeseries(args.data)
    traj = track(shape, initial, data, step=args.step, N=args.N)
    out = _trajectory_csv(args.out, traj)
    hio.write_manifest(
        [out], "track", [args.shape, args.initial, args.data], {"step": args.step, "N": args.N}
    )
    return EXIT_OK


def _write_family(outdir: Path, family, subcommand: str, params: dict) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for mem in family:
        rows = [(p.real, p.imag) for p in mem.boundary.tolist()]
        outputs.append(hio.write_csv(outdir / f"member_{mem.index + 1}.csv", ("x", "y"), rows))
    report = verify_family(family).to_json()
    report["members"] = [
        {"s": _cpair(m.s), "configuration": m.configuration().to_json(), "residual": m.residual()}
        for m in family
    ]
    outputs.append(hio.write_json(outdir / "report.json", report))
    hio.write_manifest(outputs, subcommand, [], params)
    return outputs


def cmd_counterexample(args) -> int:
    try:
        family = build_family(args.n, args.omega, args.rho, args.level, args.resolution)
    except CounterexampleError:
        raise
    except ValueError as exc:
        raise InputError(str(exc)) from None
    params = {"n": args.n, "omega": args.omega, "rho": args.rho, "level": args.level,
              "resolution": args.resolution}
    _write_family(Path(args.outdir), family, "counterexample", params)
    return EXIT_OK


def cmd_stealth(args) -> int:
    shape = hio.load_shape(args.shape)
    vel = RigidVelocity(args.omega, args.w0)
    verdict = classify_stealth(shape, vel)
    print(verdict.value)
    if args.out:
        out = hio.write_json(args.out, {"verdict": verdict.value})
        hio.write_manifest([out], "stealth", [args.shape], {"omega": args.omega, "w0": _cpair(args.w0)})
    return EXIT_OK


# -- reproduction targets ----------------------------------------------------------

def _repro_fig1(outdir: Path):
    params = {"n": 2, "omega": 1.0, "rho": 0.5, "level": 2.0, "resolution": 512}
    fam = build_family(**params)
    return _write_family(outdir / "fig1", fam, "repro fig1", params)


def _repro_fig2(outdir: Path):
    # same psi = cos(2 theta)/r^2, different rotation centres and level
    params = {"n": 2, "omega": 1.0, "rho": 1.0, "level": 1.5, "resolution": 512}
    fam = build_family(**params)
    return _write_family(outdir / "fig2", fam, "repro fig2", params)


def _repro_fig3(outdir: Path):
    params = {"n": 6, "omega": 0.7, "rho": 0.9, "level": -2.5, "resolution": 512}
    fam = build_family(**params)
    return _write_family(outdir / "fig3", fam, "repro fig3", params)


def _repro_fig4(outdir: Path):
    a, b = 2.0, 1.0
    shape = make_ellipse(a, b)
    cfg = Configuration.make(0.0, 0j, -2.0, cmath.exp(1j * math.pi / 3))
    xs = np.linspace(-4.0, 4.0, 161)
    ys = np.linspace(-3.0, 3.0, 121)
    d = outdir / "fig4"
    rows = potential_grid(shape, cfg, xs, ys)
    out = hio.write_csv(d / "xi0_grid.csv", GRID_HEADER, rows)
    c = math.sqrt(a * a - b * b)
    meta = hio.write_json(d / "branch_points.json", {"branch_points": [[c, 0.0], [-c, 0.0]], "distance": c})
    params = {"a": a, "b": b, "configuration": cfg.to_json(), "grid": [-4.0, 4.0, -3.0, 3.0, 161, 121]}
    hio.write_manifest([out, meta], "repro fig4", [], params)
    return [out, meta]


def _truth_vs(res, cfg):
    return {"truth": cfg.to_json(), "result": res.to_json()}


def _repro_prop64(outdir: Path):
    shape = ShapeSpec(1.0, (0, 0, 0.15 + 0.05j, 0, 0, 0, 0.03))
    cases = {
        "general": Configuration.make(0.7, 0.4 - 0.3j, 0.8, 0.5 + 0.2j),
        "pure_rotation": Configuration.make(1.1, -0.2 + 0.5j, -1.3, 0j),
    }
    payload = {"shape": shape.to_json()}
    for name, cfg in cases.items():
        prov = ClosedFormProvider(shape, cfg, 16)
        payload[name] = {
            "partial": _truth_vs(detect_quarter_symmetric(shape, prov), cfg),
            "full": _truth_vs(detect_quarter_full(shape, prov), cfg),
        }
    out = hio.write_json(outdir / "prop64" / "detections.json", payload)
    hio.write_manifest([out], "repro prop64-demo", [], {"N": 16})
    return [out]


def _repro_sec63(outdir: Path):
    shape = make_c147(1.0, 0.2 + 0.1j, 0.08 - 0.05j)
    cases = {
        "general": Configuration.make(0.9, 0.3 + 0.6j, 0.7, 0.4 - 0.8j),
        "translation": Configuration.make(2.2, -0.5 + 0.1j, 0.0, 1.0 + 0.3j),
        "rotation": Configuration.make(4.0, 0.2 - 0.4j, -1.1, 0j),
    }
    payload = {"shape": shape.to_json()}
    for name, cfg in cases.items():
        res = detect_c147(shape, ClosedFormProvider(shape, cfg, 12))
        payload[name] = _truth_vs(res, cfg)
    out = hio.write_json(outdir / "sec63" / "detections.json", payload)
    hio.write_manifest([out], "repro sec63-demo", [], {"N": 12})
    return [out]


def circular_path(t: float):
    """Ground-truth pose path ``r = 0.5 e^{it}``, ``alpha = 0.3 t`` and its derivative."""
    e = cmath.exp(1j * t)
    return 0.5 * e, 0.3 * t, 0.5j * e, 0.3


def _repro_thm14(outdir: Path):
    shape = make_c147(1.0, 0.2, 0.1)
    times = np.linspace(0.0, 1.0, 200)
    data = synthesize_timeseries(shape, circular_path, 0j, 12, times)
    traj = track(shape, Position(0.0, 0.5), data, step=1e-3)
    errs = [
        max(abs(p.r - circular_path(t)[0]), angle_distance(p.alpha, circular_path(t)[1]))
        for t, p in zip(traj.times, traj.poses)
    ]
    d = outdir / "thm14"
    out = _trajectory_csv(d / "trajectory.csv", traj)
    summary = hio.write_json(d / "summary.json", {"max_pose_error": max(errs), "samples": 200, "step": 1e-3})
    hio.write_manifest([out, summary], "repro thm14-demo", [], {"shape": shape.to_json(), "nu": [0.0, 0.0]})
    return [out, summary]


REPRO_TARGETS = {
    "fig1": _repro_fig1,
    "fig2": _repro_fig2,
    "fig3": _repro_fig3,
    "fig4": _repro_fig4,
    "prop64-demo": _repro_prop64,
    "sec63-demo": _repro_sec63,
    "thm14-demo": _repro_thm14,
}


def cmd_repro(args) -> int:
    outputs = REPRO_TARGETS[args.target](Path(args.outdir))
    for p in outputs:
        print(p)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hydrodetect",
        description="Potential flow around a moving rigid solid: forward model and detection.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="moments (and optionally a potential grid) of a configuration")
    f.add_argument("--shape", required=True)
    f.add_argument("--config", required=True)
    f.add_argument("--nu", type=parse_complex, action="append", default=None,
                   help="expansion point re,im (repeatable)")
    f.add_argument("--nu-grid", type=parse_floats(6), default=None,
                   help="xmin,xmax,ymin,ymax,nx,ny grid of expansion points")
    f.add_argument("--N", type=int, default=12)
    f.add_argument("--method", choices=("closed", "contour"), default="closed")
    f.add_argument("--radius", type=float, default=None, help="contour radius about r")
    f.add_argument("--Q", type=int, default=None, help="quadrature nodes")
    f.add_argument("--grid", type=parse_floats(6), default=None, help="xmin,xmax,ymin,ymax,nx,ny")
    f.add_argument("--grid-out", default=None)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_forward)

    c = sub.add_parser("coeffs", help="geometry coefficients A_k, B_k, C_k")
    c.add_argument("--shape", required=True)
    c.add_argument("--N", type=int, default=12)
    c.add_argument("--bruteforce", action="store_true")
    c.add_argument("--c-constraint", choices=("le-1", "le0"), default="le-1")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_coeffs)

    d = sub.add_parser("detect", help="recover a configuration from moment measurements")
    d.add_argument("--method", required=True,
                   choices=("ellipse", "symmetric", "symmetric-full", "c147", "velocity"))
    d.add_argument("--shape", required=True)
    d.add_argument("--measurements", required=True)
    d.add_argument("--nu", type=parse_complex, default=None)
    d.add_argument("--pose", default=None, help="known position (velocity method)")
    d.add_argument("--box", type=parse_floats(4), default=None, help="xmin,xmax,ymin,ymax")
    d.add_argument("--grid", type=int, default=41)
    d.add_argument("--max-residual", type=float, default=1e-6,
                   help="relative moment misfit above which detection fails (exit 3)")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_detect)

    t = sub.add_parser("track", help="integrate the pose from time-resolved moments")
    t.add_argument("--shape", required=True)
    t.add_argument("--initial", required=True)
    t.add_argument("--data", required=True, help="JSON lines with t, nu, lambdas")
    t.add_argument("--step", type=float, default=1e-3)
    t.add_argument("--N", type=int, default=None)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_track)

    x = sub.add_parser("counterexample", help="family of solids sharing the potential i/z^n")
    x.add_argument("--n", type=int, required=True)
    x.add_argument("--omega", type=float, required=True)
    x.add_argument("--rho", type=float, required=True)
    x.add_argument("--level", type=float, required=True)
    x.add_argument("--resolution", type=int, default=512)
    x.add_argument("--outdir", required=True)
    x.set_defaults(func=cmd_counterexample)

    s = sub.add_parser("stealth", help="classify a motion as stealth or not")
    s.add_argument("--shape", required=True)
    s.add_argument("--omega", type=float, required=True)
    s.add_argument("--w0", type=parse_complex, required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_stealth)

    r = sub.add_parser("repro", help="regenerate a named reproduction target")
    r.add_argument("target", choices=sorted(REPRO_TARGETS))
    r.add_argument("--outdir", default="repro_out")
    r.set_defaults(func=cmd_repro)
    return p


def _join_complex_values(argv: list[str]) -> list[str]:
    # "--w0 -1.5,0" would be read as an option; rewrite to "--w0=-1.5,0"
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _COMPLEX_OPTS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_complex_values(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except (jsonschema.ValidationError, InputError, FileNotFoundError, IsADirectoryError) as exc:
        msg = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"hydrodetect: invalid input: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, np.linalg.LinAlgError, StealthPotentialError, CounterexampleError,
            TrackingError) as exc:
        print(f"hydrodetect: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # domain constructors reject inconsistent input (e.g. negative area)
        print(f"hydrodetect: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
