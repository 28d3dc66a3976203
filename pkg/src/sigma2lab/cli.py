"""Command line front-end.

Each subcommand runs one verification, writes CSV/JSON artefacts that echo
the full configuration and the library version, and exits with

* 0 when every asserted invariant holds,
* 1 when an invariant fails or the problem has no solution (a JSON failure
  report goes to stdout),
* 2 on usage errors: bad flags, unreadable files, malformed config.

Parameters may come from an INI file (``--config run.ini``) whose section
named after the subcommand holds ``key = value`` lines; flags win.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from ._validation import parse_levels
from .analytic import ExpProductField, GaussianField, RadialField, random_quartic
from .asymptotics import blowdown_convergence
from .field import ScalarField4, divergence_residual, newton_divergence_residual
from .functions import FSpec, KSpec
from .io import (
    _clean,
    load_profile,
    save_blowdown,
    save_mass_scan,
    save_pohozaev,
    save_profile,
    write_json,
)
from .levelset import sweep_field
from .mass import mass_scan_grid, mass_scan_radial
from .pohozaev import pohozaev_grid, pohozaev_radial
from .radial import (
    DomainError,
    GaugeError,
    NonexistenceError,
    concavity_check,
    first_integral_residual,
    solve_radial,
    solve_radial_general,
)
from .symm import cone_status, sym4

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ------------------------------------------------------------------ parsing


def _common(p):
    p.add_argument("--config", help="INI file; the section named after the subcommand is read")


def _source(p, field_ok=True):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--profile", help="profile CSV written by the radial subcommand")
    if field_ok:
        g.add_argument("--field", help="field blob (ScalarField4 binary layout)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sigma2lab", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("radial", help="solve the radial ODE and export the profile")
    _common(p)
    p.add_argument("--rho", type=float)
    p.add_argument("--epsilon", type=float, default=1.0, help="gauge: u_s(0) = -epsilon")
    p.add_argument("--s-min", type=float, default=-12.0)
    p.add_argument("--s-max", type=float, default=12.0)
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--samples", type=int, default=4801)
    p.add_argument("--p", default="1.5", help="ascending coefficients of p in f = exp(4u) p(u)")
    p.add_argument("--K", default="1", help='"1" or "gauss:a,b" for K = 1 + a exp(-b|x|^2)')
    p.add_argument("--out", help="profile CSV (a .json sidecar is written next to it)")

    p = sub.add_parser("mass-scan", help="mass along level sets")
    _common(p)
    _source(p)
    p.add_argument("--rho", type=float, help="required for fields")
    p.add_argument("--t-grid", help='levels, "a:b:n" or a comma list')
    p.add_argument("--p", default="1.5")
    p.add_argument("--f-scale", type=float, default=1.0,
                   help="declare f-tilde = f-scale * f (below 1: super-solution scan)")
    p.add_argument("--smoothing", type=float, default=1.0, help="kernel width in cells (fields)")
    p.add_argument("--tol", type=float, help="override the check tolerance")
    p.add_argument("--out")

    p = sub.add_parser("pohozaev", help="volume vs boundary side of the Pohozaev identity")
    _common(p)
    _source(p)
    p.add_argument("--rho", type=float)
    p.add_argument("--R", type=float, help="ball radius (profiles)")
    p.add_argument("--t", type=float, help="level (fields)")
    p.add_argument("--p", default="1.5")
    p.add_argument("--K", default="1")
    p.add_argument("--tol", type=float)
    p.add_argument("--out")

    p = sub.add_parser("field-check", help="cone membership and divergence identities")
    _common(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--field")
    g.add_argument("--profile", help="sample this profile on a centred grid")
    g.add_argument("--analytic", choices=("gaussian", "expprod", "quartic"))
    p.add_argument("--rho", type=float)
    p.add_argument("--n", type=int, default=24, help="grid points per axis (with --profile)")
    p.add_argument("--half-width", type=float, default=2.0)
    p.add_argument("--save-field", help="write the sampled field blob")
    p.add_argument("--points", type=int, default=100, help="random points (with --analytic)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-cone-fraction", type=float, default=0.999)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out")

    p = sub.add_parser("blowdown", help="blow-down errors along decreasing levels")
    _common(p)
    _source(p)
    p.add_argument("--t-grid")
    p.add_argument("--R", type=float, default=4.0, help="annulus 1/R <= |y| <= R")
    p.add_argument("--alpha", type=float)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out")

    p = sub.add_parser("cone-check", help="classify a symmetric 4x4 matrix")
    _common(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--entries", help="10 upper-triangle entries, row by row")
    g.add_argument("--diag", help="4 diagonal entries")
    p.add_argument("--expect", choices=("plus", "minus", "none"))
    p.add_argument("--out")
    return ap


def _apply_config(ap, sub_ap, command, path, argv):
    cfg = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cfg.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from exc
    if not cfg.has_section(command):
        return
    known = {a.dest: a for a in sub_ap._actions}
    defaults = {}
    for key, raw in cfg.items(command):
        dest = key.replace("-", "_")
        if dest not in known or dest in ("help", "config"):
            raise UsageError(f"config {path}: unknown key {key!r} in [{command}]")
        action = known[dest]
        try:
            defaults[dest] = action.type(raw) if action.type else raw
        except (TypeError, ValueError) as exc:
            raise UsageError(f"config {path}: bad value for {key}: {raw!r}") from exc
    sub_ap.set_defaults(**defaults)


def parse(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required: " + ", ".join(_COMMANDS))
    if getattr(args, "config", None):
        sub_ap = ap._subparsers._group_actions[0].choices[args.command]
        _apply_config(ap, sub_ap, args.command, args.config, argv)
        args = ap.parse_args(argv)
    return args


# ------------------------------------------------------------------- helpers


class CheckFailure(Exception):
    def __init__(self, reason, checks=None):
        super().__init__(reason)
        self.reason = reason
        self.checks = checks or {}


def _config_echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items())}


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"{args.command}: --{n.replace('_', '-')} is required")


def _parse_spec(kind, text):
    try:
        return FSpec.parse(text) if kind == "f" else KSpec.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _levels(text):
    try:
        return parse_levels(text)
    except ValueError as exc:
        raise UsageError(f"bad --t-grid {text!r}: {exc}") from exc


def _load_source(args):
    try:
        if getattr(args, "profile", None):
            return load_profile(args.profile)
        if getattr(args, "field", None):
            return ScalarField4.load(args.field)
    except OSError as exc:
        raise UsageError(f"cannot read input: {exc}") from exc
    except ValueError as exc:
        raise UsageError(f"malformed input: {exc}") from exc
    raise UsageError(f"{args.command}: --profile or --field is required")


def _finish(checks: dict, payload: dict, args, out_json=None):
    ok = all(c["pass"] for c in checks.values())
    payload = {**payload, "checks": checks, "status": "pass" if ok else "fail"}
    if out_json:
        write_json(out_json, payload, _config_echo(args))
    if not ok:
        failed = [k for k, c in checks.items() if not c["pass"]]
        raise CheckFailure("invariant failed: " + ", ".join(failed), checks)
    summary = {"status": "pass", "command": args.command, "result": payload}
    print(json.dumps(_clean(summary), sort_keys=True))
    return EXIT_OK


def _check(value, limit, kind="le") -> dict:
    value = float(value)
    ok = value <= limit if kind == "le" else value >= limit
    return {"value": value, "limit": float(limit), "pass": bool(ok and math.isfinite(value))}


# -------------------------------------------------------------- subcommands


def cmd_radial(args):
    _require(args, "rho")
    f = _parse_spec("f", args.p)
    k = _parse_spec("k", args.K)
    s_range = (args.s_min, args.s_max)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if f.coeffs == (1.5,) and k.is_constant:
            prof = solve_radial(args.rho, args.epsilon, s_range, args.tolerance, args.samples)
            fi = first_integral_residual(prof)
        else:
            prof = solve_radial_general(args.rho, args.epsilon, f.coeffs, s_range, args.tolerance,
                                        k_spec=k, n_samples=args.samples)
            fi = None
    checks = {"concavity": _check(concavity_check(prof), 1e-8)}
    if fi is not None:
        checks["first_integral"] = _check(fi, 10 * args.tolerance)
    if prof.rho > 0:
        checks["slope_bound"] = _check(float(np.max(-prof.u_s)) * prof.rho / 2, 1.0)
    extra = {"first_integral_residual": fi, "consistency": prof.consistency,
             "warnings": [str(w.message) for w in caught], "checks": checks}
    if args.out:
        save_profile(prof, args.out, extra, _config_echo(args))
    return _finish(checks, {"profile": prof.describe()}, args)


def _mass_tol(args, scan):
    if args.tol is not None:
        return np.full(len(scan), args.tol)
    if scan.source == "radial":
        return 1e-6 * np.maximum(1.0, scan.Q**4)
    return np.maximum(5e-3, 3 * scan.M_error)


def cmd_mass_scan(args):
    _require(args, "t_grid")
    data = _load_source(args)
    t = _levels(args.t_grid)
    if isinstance(data, ScalarField4):
        _require(args, "rho")
        f = _parse_spec("f", args.p).scaled(args.f_scale)
        scan = mass_scan_grid(data, args.rho, f, t, smoothing=args.smoothing)
    else:
        scan = mass_scan_radial(data, t, data.f_spec.scaled(args.f_scale))
    tol = _mass_tol(args, scan)
    checks = {"Q_negative": _check(float(np.max(scan.Q)), 0.0)}
    if args.f_scale == 1.0:
        checks["rigidity"] = _check(float(np.max(np.abs(scan.M) - tol)), 0.0)
        checks["two_forms"] = _check(float(np.max(np.abs(scan.M - scan.M_alt) - tol)), 0.0)
    else:
        inc = np.argsort(scan.t_grid)
        drops = -np.diff(scan.M[inc]) - tol[inc][1:]
        checks["monotone"] = _check(float(np.max(drops)) if drops.size else 0.0, 0.0)
    if args.out:
        save_mass_scan(scan, args.out, _config_echo(args))
    return _finish(checks, {"levels": len(scan)}, args)


def cmd_pohozaev(args):
    data = _load_source(args)
    k = _parse_spec("k", args.K)
    if isinstance(data, ScalarField4):
        _require(args, "rho", "t")
        rep = pohozaev_grid(data, args.rho, _parse_spec("f", args.p), args.t, k)
        tol = 0.05 if args.tol is None else args.tol
    else:
        _require(args, "R")
        if not k.is_constant and k != data.k_spec:
            raise CheckFailure("profile was not solved with the requested K")
        rep = pohozaev_radial(data, args.R, k)
        tol = 1e-6 if args.tol is None else args.tol
    if args.out:
        save_pohozaev(rep, args.out, _config_echo(args))
    return _finish({"rel_residual": _check(rep.rel_residual, tol)}, rep.to_dict(), args)


def cmd_field_check(args):
    rng = np.random.default_rng(args.seed)
    if args.analytic:
        rhos = (0.0, 1.0, -1.0) if args.rho is None else (args.rho,)
        div = newt = 0.0
        for i in range(args.points):
            if args.analytic == "gaussian":
                u = GaussianField(float(rng.uniform(0.5, 2.0)))
            elif args.analytic == "expprod":
                u = ExpProductField()
            else:
                u = random_quartic(rng)
            x = rng.uniform(-1.0, 1.0, 4)
            div = max(div, divergence_residual(u, rhos[i % len(rhos)], x))
            newt = max(newt, newton_divergence_residual(u, x))
        checks = {"divergence": _check(div, args.tol), "newton": _check(newt, args.tol)}
        return _finish(checks, {"points": args.points}, args,
                       args.out)
    if args.profile:
        prof = _load_source(args)
        fld = ScalarField4.centered(RadialField(prof), args.n, args.half_width)
        rho = prof.rho if args.rho is None else args.rho
        if args.save_field:
            fld.save(args.save_field)
    else:
        fld = _load_source(args)
        _require(args, "rho")
        rho = args.rho
    sw = sweep_field(fld, rho)
    frac = float(np.mean(sw.in_cone))
    checks = {"cone_fraction": _check(frac, args.min_cone_fraction, "ge")}
    payload = {"cells": sw.n_cells, "excluded_cells": sw.excluded,
               "sigma2_min": float(sw.sigma2.min()), "sigma2_max": float(sw.sigma2.max())}
    return _finish(checks, payload, args, args.out)


def cmd_blowdown(args):
    _require(args, "t_grid")
    data = _load_source(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = blowdown_convergence(data, _levels(args.t_grid), args.R, args.alpha)
    g = rep.gradient_alignment_error
    rise = float(np.max(np.diff(g))) if g.size > 1 else 0.0
    checks = {
        "annulus": _check(len(rep.violations), 0),
        "alignment_non_increasing": _check(rise, args.tol),
    }
    if args.out:
        save_blowdown(rep, args.out, _config_echo(args))
    return _finish(checks, rep.summary(), args)


def cmd_cone_check(args):
    try:
        if args.diag:
            vals = [float(v) for v in args.diag.split(",")]
            if len(vals) != 4:
                raise ValueError("--diag needs 4 values")
            m = np.diag(vals)
        elif args.entries:
            m = sym4([float(v) for v in args.entries.split(",")])
        else:
            raise UsageError("cone-check: --entries or --diag is required")
    except ValueError as exc:
        raise UsageError(f"cone-check: {exc}") from exc
    st = cone_status(m)
    cone = "plus" if st.in_gamma2_plus else "minus" if st.in_gamma2_minus else "none"
    checks = {}
    if args.expect:
        checks["expected_cone"] = {"value": cone, "limit": args.expect, "pass": cone == args.expect}
    payload = {"sigma1": st.sigma1, "sigma2": st.sigma2, "in_gamma2_plus": st.in_gamma2_plus,
               "in_gamma2_minus": st.in_gamma2_minus, "on_boundary": st.on_boundary, "cone": cone}
    return _finish(checks, payload, args, args.out)


_COMMANDS = {
    "radial": cmd_radial,
    "mass-scan": cmd_mass_scan,
    "pohozaev": cmd_pohozaev,
    "field-check": cmd_field_check,
    "blowdown": cmd_blowdown,
    "cone-check": cmd_cone_check,
}


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except CheckFailure as exc:
        report = {"status": "fail", "command": argv[0] if argv else None, "reason": exc.reason,
                  "checks": exc.checks}
    except NonexistenceError as exc:
        report = {"status": "fail", "command": argv[0], "reason": "nonexistence",
                  "detail": str(exc)}
    except (GaugeError, DomainError, ValueError) as exc:
        report = {"status": "fail", "command": argv[0], "reason": type(exc).__name__,
                  "detail": str(exc)}
    print(json.dumps(_clean(report), sort_keys=True, default=str))
    return EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
