"""Command line front end.

Exit codes: 0 when every identity holds, 2 when one fails, 3 on bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

from . import conformal, decomp, oracle
from .currents import Ball, EdgeCurrent, canonicalize, mass_on
from .errors import CurflowError
from .generators import Comb, make_generator
from .geometry import point_from_json, point_to_json, space_from_json

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 2, 3


class InputError(Exception):
    pass


# ---------------------------------------------------------------- file formats


def current_to_json(T: EdgeCurrent):
    return {
        "space": T.space.to_json(),
        "edges": [[point_to_json(a), point_to_json(b), decomp.weight_to_json(w)] for (a, b), w in T.edges.items()],
    }


def current_from_json(obj, exact=False) -> EdgeCurrent:
    space = space_from_json(obj["space"])
    edges = []
    for a, b, w in obj["edges"]:
        w = decomp.weight_from_json(w)
        if exact and not isinstance(w, Fraction):
            w = Fraction(w)
        edges.append((point_from_json(a), point_from_json(b), w))
    return canonicalize(space, edges)


def _json_default(x):
    if isinstance(x, Fraction):
        return decomp.weight_to_json(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _dump(obj, path):
    text = json.dumps(obj, indent=2, default=_json_default) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _writer(path):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def _parse_value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text in ("none", "None"):
        return None
    return text


# ---------------------------------------------------------------- commands


def cmd_gen(args):
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise InputError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k] = _parse_value(v)
    if args.teeth is not None:
        params["teeth"] = args.teeth
    if args.mode is not None:
        params["mode"] = args.mode
    spec = {"family": args.family, "params": params, "seed": args.seed}
    gen = make_generator(spec)
    out = {"generator": gen.spec()}
    if args.rmax is not None:
        out["rmax"] = args.rmax
        out["current"] = current_to_json(gen.current(args.rmax))
    _dump(out, args.output)
    return EXIT_OK


def _exact(args):
    return bool(getattr(args, "exact", False)) or os.environ.get("CURFLOW_EXACT", "0") == "1"


def _input_current(obj, rmax, exact):
    """(generator or None, current, radius) described by an input file."""
    if "generator" in obj:
        gen = make_generator(obj["generator"])
        R = rmax if rmax is not None else obj.get("rmax", 8.0)
        return gen, gen.current(R), R
    if "edges" in obj:
        return None, current_from_json(obj, exact), None
    if "current" in obj:
        return None, current_from_json(obj["current"], exact), None
    raise InputError("input is neither a generator spec nor a current")


def _failed(report):
    return [k for k, v in report.items() if isinstance(v, dict) and not v.get("pass", True)]


def cmd_decompose(args):
    obj = _load(args.input)
    exact = _exact(args)
    gen, T, R = _input_current(obj, args.rmax, exact)
    extra = {}
    if gen is None:
        D = decomp.decompose_finite(T, args.strategy)
    else:
        conformal.require_single_infinity(gen)
        profile = conformal.build_profile(gen, R)
        D = decomp.decompose_local(gen, R, margin=args.margin, strategy=args.strategy, profile=profile, exact=exact)
        extra["profile_data"] = profile.to_json()
        if exact:
            T = EdgeCurrent(T.space, {k: Fraction(w) for k, w in T.edges.items()})
    report = oracle.verify_decomposition(T, D, tol=0 if exact else 1e-9)
    if D.checks:
        lhs, rhs = D.checks["mass_delta"]
        ok = abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))
        report["mass_delta"] = {"pass": ok, "lhs": lhs, "rhs": rhs}
        interior = sum(abs(v) for p, v in T.boundary().items() if T.space.norm(p) < R - 1e-9)
        bmd = D.checks["boundary_mass_delta"]
        report["boundary_bound"] = {"pass": bmd <= 2 * interior + 1e-9, "lhs": bmd, "rhs": 2 * interior}
    report["pass"] = not _failed(report)
    out = D.to_json()
    out.update(extra)
    out["report"] = report
    _dump(out, args.output)
    failed = _failed(report)
    if failed:
        print(f"identity failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args):
    dobj = _load(args.decomposition)
    space = space_from_json(dobj["space"])
    D = decomp.Decomposition.from_json(dobj, space)
    exact = _exact(args) or any(isinstance(e.weight, Fraction) for e in D.entries)
    gen, T, _ = _input_current(_load(args.current), D.radius, exact)
    report = oracle.verify_decomposition(T, D, tol=0 if exact else 1e-9)
    _dump(report, args.output)
    failed = _failed(report)
    if failed:
        print(f"identity failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _parse_range(text):
    try:
        if ":" in text:
            lo, hi = text.split(":")
            return list(range(int(lo), int(hi) + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"bad teeth range {text!r}") from None


def comb_value(teeth, mode, rmax):
    """Boundary mass of the completed comb current truncated at ``rmax``."""
    gen = Comb(teeth=teeth, mode=mode, extent=rmax + 2.0)
    if mode == "intrinsic":
        return conformal.ends_boundary_mass(gen.current(rmax), rmax)
    profile = conformal.build_profile(gen, rmax)
    return conformal.compactify(profile, gen, rmax).boundary_mass_delta()


def cmd_comb_study(args):
    modes = ["intrinsic", "embed"] if args.mode == "both" else [args.mode]
    fh, w = _writer(args.output)
    w.writerow(["teeth", "mode", "r_max", "boundary_mass_delta"])
    for mode in modes:
        for k in _parse_range(args.teeth_range):
            w.writerow([k, mode, args.rmax, repr(float(comb_value(k, mode, args.rmax)))])
    if fh is not sys.stdout:
        fh.close()
    return EXIT_OK


def cmd_plot_data(args):
    dobj = _load(args.decomposition)
    space = space_from_json(dobj["space"])
    D = decomp.Decomposition.from_json(dobj, space)
    fh, w = _writer(args.output)
    if args.what == "mass-profile":
        S = D.current()
        top = D.radius if D.radius is not None else max((space.norm(p) for p in S.vertices()), default=0.0)
        w.writerow(["r", "mass"])
        steps = int(2 * top)
        for i in range(steps + 1):
            r = i / 2
            w.writerow([r, repr(float(mass_on(S, Ball(r))))])
    elif args.what == "g-profile":
        if "profile_data" not in dobj:
            raise InputError("decomposition has no conformal profile (finite input)")
        prof = conformal.ConformalProfile.from_json(dobj["profile_data"])
        w.writerow(["r", "phi_tilde", "g", "G"])
        steps = int(4 * (D.radius or prof.knots_x[-1]))
        for i in range(steps + 1):
            r = i / 4
            w.writerow([r, repr(prof.phi_tilde(r)), repr(prof.g(r)), repr(prof.tail_integral(r))])
    else:
        e0, e1, to_inf, from_inf = decomp.transport_endpoints(D)
        w.writerow(["point", "starts", "ends"])
        pts = sorted(set(e0) | set(e1), key=lambda p: json.dumps(point_to_json(p)))
        for p in pts:
            w.writerow([json.dumps(point_to_json(p)), repr(float(e0[p])), repr(float(e1[p]))])
        w.writerow(["x_inf", repr(float(from_inf)), repr(float(to_inf))])
    if fh is not sys.stdout:
        fh.close()
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser():
    p = argparse.ArgumentParser(prog="curflow", description="Decompose polyhedral metric currents into curves.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a generator spec (and optionally its truncation)")
    g.add_argument("family")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--param", action="append", metavar="KEY=VALUE")
    g.add_argument("--teeth", type=int)
    g.add_argument("--mode", choices=["embed", "intrinsic"])
    g.add_argument("--rmax", type=float)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("decompose", help="decompose a current or generator and verify")
    d.add_argument("input")
    d.add_argument("--rmax", type=float)
    d.add_argument("--margin", type=float, default=1.0)
    d.add_argument("--strategy", choices=["dfs", "greedy-xi"], default="dfs")
    d.add_argument("--exact", action="store_true")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_decompose)

    v = sub.add_parser("verify", help="check a decomposition against its current")
    v.add_argument("current")
    v.add_argument("decomposition")
    v.add_argument("--exact", action="store_true")
    v.add_argument("-o", "--output")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("comb-study", help="boundary mass of the completed comb current")
    c.add_argument("--teeth-range", default="1:10")
    c.add_argument("--mode", choices=["both", "intrinsic", "embed"], default="both")
    c.add_argument("--rmax", type=float, default=12.0)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_comb_study)

    q = sub.add_parser("plot-data", help="CSV series for plotting")
    q.add_argument("decomposition")
    q.add_argument("--what", choices=["mass-profile", "g-profile", "boundary-ledger"], required=True)
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_plot_data)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CurflowError, InputError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
