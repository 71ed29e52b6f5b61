"""Command-line front end: JSON results on stdout, CSV plot data on request.

Exit codes: 0 success, 2 domain or configuration error, 3 numerical failure.
Every failure still prints a JSON object with an "error" field.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import cfrac, circle, herman2d, linearize, renorm
from .annulus import AnnulusLift, StripFunction

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (ArithmeticError, RuntimeError, linearize.NoCrossing,
                  linearize.PlateauError, np.linalg.LinAlgError)


class ConfigError(ValueError):
    pass


def _clean(x):
    """Make x strict-JSON: non-finite floats become strings, arrays become lists."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, complex):
        return [_clean(x.real), _clean(x.imag)]
    return x


def emit(obj, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(_clean(obj), sort_keys=True) + "\n")


def _alpha(token):
    return cfrac.parse_alpha(token)[0]


def _positive(name, value):
    if value is not None and not value > 0:
        raise ConfigError(f"--{name} must be positive")
    return value


def _check_output(path):
    if path:
        d = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(d):
            raise ConfigError(f"output directory {d} does not exist")
    return path


def _load_map(args) -> AnnulusLift:
    if args.map:
        if not os.path.isfile(args.map):
            raise ConfigError(f"map file {args.map} not found")
        with open(args.map) as fh:
            try:
                return AnnulusLift.loads(fh.read())
            except (KeyError, json.JSONDecodeError) as exc:
                raise ConfigError(f"bad map file: {exc}") from None
    if args.family == "arnold":
        return circle.arnold(args.t if args.t is not None else 0.0, args.a, args.modes, args.eps)
    if args.family == "rotation":
        return AnnulusLift.rotation(args.t if args.t is not None else 0.0, args.modes, args.eps)
    raise ConfigError("give --map FILE or --family")


def _map_args(p, t_default=None):
    p.add_argument("--map", help="annulus lift JSON file")
    p.add_argument("--family", choices=["arnold", "rotation"], default="arnold")
    p.add_argument("--t", type=float, default=t_default, help="rotation parameter")
    p.add_argument("--a", type=float, default=0.05, help="Arnold nonlinearity")
    p.add_argument("--modes", type=int, default=64)
    p.add_argument("--eps", type=float, default=0.2)


def cmd_cf(args):
    if args.alpha:
        x = _alpha(args.alpha)
    elif args.value is not None:
        x = args.value
    else:
        raise ConfigError("give --value or --alpha")
    e = cfrac.expand(x, args.depth)
    out = {"value": x, "terms": list(e.terms), "exact": e.exact,
           "convergents": [list(pq) for pq in cfrac.convergents(e)]}
    if args.K is not None:
        out["bounded_type"] = bool(cfrac.is_bounded_type(e, args.K))
    return out


def cmd_rho(args):
    _positive("accuracy", args.accuracy)
    f = _load_map(args)
    r = circle.rotation_number(f, args.accuracy, args.max_iterates)
    if args.plot_data:
        circle.write_orbit_csv(args.plot_data, circle.orbit(f, 0.0, args.orbit_length))
    out = r.to_json()
    v = r.value
    out["prefix"] = (list(cfrac.expand(v, cfrac.depth_for_error(v, max(r.error_bound, 1e-15))).terms)
                     if 0.0 < v < 1.0 else [])
    return out


def cmd_renorm(args):
    f = _load_map(args)
    alpha = _alpha(args.alpha)
    rows = renorm.pair_sequence(f, alpha, range(1, args.levels + 1))
    lam, C, r2 = renorm.fit_rate([r[2] for r in rows])
    if args.plot_data:
        renorm.write_defects_csv(args.plot_data, rows)
    return {"levels": [{"k": k, "scale": s, "affinity_defect": d, "nonlinearity": n}
                       for k, s, d, n in rows],
            "rate": lam, "constant": C, "r_squared": r2}


def cmd_spectrum(args):
    _positive("fd-step", args.fd_step)
    m = renorm.galerkin_differential(_alpha(args.alpha), args.modes, args.fd_step, args.steps, args.eps)
    sp = renorm.spectrum(m)
    if args.plot_data:
        renorm.write_spectrum_csv(args.plot_data, sp)
    out = sp.to_json()
    out.update({"modes": args.modes, "steps": args.steps, "fd_step": args.fd_step})
    return out


def _shoot_map(args):
    f = _load_map(args)
    if args.map is None and args.t is None:
        f = circle.rotated(f, -f.mean)
    return f


def cmd_linearize(args):
    alpha = _alpha(args.alpha)
    f = _load_map(args)
    out = {}
    if args.map is None and args.t is None:
        sh = linearize.shoot(circle.rotated(f, -f.mean), alpha, tuple(args.bracket))
        f = sh.f_star
        out["shoot"] = sh.to_json()
    ch = linearize.kam_linearize(f, alpha, tol=args.tolerance)
    height = args.height if args.height is not None else 0.5 * f.eps
    out.update(ch.to_json())
    out["residual_at_height"] = linearize.chart_residual(ch.phi, f, alpha, height)
    out["check_height"] = height
    out["convergence_exponent"] = linearize.convergence_exponent(ch.errors)
    if args.plot_data:
        th = np.arange(256) / 256
        phi = ch.phi(th)
        with open(args.plot_data, "w") as fh:
            fh.write("theta,re_phi,im_phi\n")
            for a, z in zip(th, phi):
                fh.write(f"{float(a)!r},{float(z.real)!r},{float(z.imag)!r}\n")
    return out


def _chart_row(job):
    k, amp, alpha, M, eps = job
    g = StripFunction.from_modes({k: 0.5, -k: 0.5}, M, eps)
    return linearize.stable_manifold_chart([g], amp, alpha)[0][1:]


def cmd_shoot(args):
    alpha = _alpha(args.alpha)
    f = _shoot_map(args)
    res = linearize.shoot(f, alpha, tuple(args.bracket), args.tolerance)
    out = res.to_json()
    if args.plot_data:
        jobs = [(k, s * args.amp, alpha, args.modes, args.eps)
                for k in range(1, args.chart_modes + 1) for s in (-1, 1)]
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as ex:
                rows = list(ex.map(_chart_row, jobs))
        else:
            rows = [_chart_row(j) for j in jobs]
        linearize.write_chart_csv(args.plot_data,
                                  [(j[0], a, t) for j, (a, t) in zip(jobs, rows)])
    return out


def cmd_herman(args):
    if args.config:
        if not os.path.isfile(args.config):
            raise ConfigError(f"config {args.config} not found")
        family, bracket, token = herman2d.load_family_config(args.config)
    else:
        cfg = {"params": {k: getattr(args, k) for k in "acde"},
               "slice": {"param": "t", "bracket": args.bracket}}
        family, bracket, token = herman2d.family_from_config(cfg)
    alpha = _alpha(args.alpha or token)
    sh = herman2d.shoot2d(family, alpha, bracket, args.tolerance)
    cert = herman2d.certify_herman(sh.F, alpha, args.orbit_length, args.fit_modes, rho=sh.rho)
    if args.plot_data:
        herman2d.write_attractor_csv(args.plot_data, herman2d.attractor_orbit(sh.F, N=args.orbit_length))
    return {"shoot": sh.to_json(), "certificate": cert.to_json(), "map": sh.F.to_json()}


def build_parser():
    ap = argparse.ArgumentParser(prog="renormlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cf", help="continued fraction expansion")
    p.add_argument("--value", type=float)
    p.add_argument("--alpha")
    p.add_argument("--depth", type=int, default=cfrac.MAX_DEPTH)
    p.add_argument("--K", type=int)
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("rho", help="rotation number of a circle lift")
    _map_args(p, t_default=None)
    p.add_argument("--accuracy", type=float, default=1e-12)
    p.add_argument("--max-iterates", type=int, default=2**21)
    p.add_argument("--orbit-length", type=int, default=1000)
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("renorm", help="defects of rescaled commuting pairs")
    _map_args(p)
    p.add_argument("--alpha", default="golden")
    p.add_argument("--levels", type=int, default=6)
    p.set_defaults(func=cmd_renorm)

    p = sub.add_parser("spectrum", help="Galerkin spectrum of the renormalization differential")
    p.add_argument("--alpha", default="golden")
    p.add_argument("--modes", type=int, default=16)
    p.add_argument("--steps", type=int, default=2)
    p.add_argument("--fd-step", type=float, default=1e-5)
    p.add_argument("--eps", type=float, default=0.2)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("linearize", help="KAM linearizing chart (shoots first without --t)")
    _map_args(p)
    p.add_argument("--alpha", default="golden")
    p.add_argument("--bracket", type=float, nargs=2, default=[0.55, 0.70])
    p.add_argument("--tolerance", type=float, default=1e-14)
    p.add_argument("--height", type=float)
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("shoot", help="shoot the rotation parameter onto W_alpha")
    _map_args(p)
    p.add_argument("--alpha", default="golden")
    p.add_argument("--bracket", type=float, nargs=2, default=[0.55, 0.70])
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.add_argument("--amp", type=float, default=0.02, help="amplitude for the W_alpha graph CSV")
    p.add_argument("--chart-modes", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_shoot)

    p = sub.add_parser("herman", help="shoot a dissipative 2D family and certify the invariant circle")
    p.add_argument("--config", help="family config JSON")
    p.add_argument("--alpha")
    for k, v in herman2d.DEFAULTS.items():
        p.add_argument(f"--{k}", type=float, default=v)
    p.add_argument("--bracket", type=float, nargs=2, default=[0.55, 0.70])
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--orbit-length", type=int, default=4096)
    p.add_argument("--fit-modes", type=int, default=24)
    p.set_defaults(func=cmd_herman)

    for p in sub.choices.values():
        p.add_argument("--plot-data", metavar="PATH", help="write CSV plot data")
    return ap


def main(argv=None, stream=None):
    stream = stream or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        for name in ("tolerance", "eps", "orbit_length", "modes"):
            if name in args and not getattr(args, name) > 0:
                raise ConfigError(f"--{name.replace('_', '-')} must be positive")
        _check_output(args.plot_data)
        emit(args.func(args), stream)
        return EXIT_OK
    except NUMERIC_ERRORS as exc:
        emit({"error": type(exc).__name__, "message": str(exc), "kind": "numerical"}, stream)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        emit({"error": type(exc).__name__, "message": str(exc), "kind": "domain"}, stream)
        return EXIT_CONFIG


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
