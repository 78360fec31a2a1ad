"""Command-line front end: ``pwstab <subcommand> [flags]``.

Exit codes: 0 ok, 2 no orbit, 3 quadrature failure, 4 pf/fd disagreement,
5 hypothesis violated, 64 bad usage.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import floquet
from .errors import InvalidOrbit, MethodDisagreement, NoOrbit, PwstabError
from .index import index_total
from .integrals import compute_moments, reconstruct_profile
from .picard_fuchs import orbit_jacobians
from .potential import Nonlinearity, WaveParameters, classify_swallowtail, enumerate_orbits
from .sweep import (SweepConfig, cnoidal_critical, default_jobs, grid, parse_range, read_config,
                    rows_to_csv, run_sweep)

EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _box(text):
    re_, im_ = (float(v) for v in text.split(":"))
    return re_, im_


def build_parser():
    p = _Parser(prog="pwstab", description="Stability index and Floquet spectra of periodic gKdV waves.")
    common = _Parser(add_help=False)
    common.add_argument("--model", "--nonlinearity", dest="nonlinearity", default=None,
                        help="kdv, mkdv-focusing, mkdv-defocusing, kdv4, or coefficients of f like 0,0,1")
    common.add_argument("--a", type=float, default=0.0)
    common.add_argument("--E", type=float, default=-0.1)
    common.add_argument("--c", type=float, default=None)
    common.add_argument("--k", type=int, default=None)
    common.add_argument("--orbit", type=int, default=None, help="orbit index; default all")
    common.add_argument("--method", choices=("pf", "fd", "both"), default=None)
    common.add_argument("--tol-quad", type=float, default=None)
    common.add_argument("--tol-sign", type=float, default=None)
    common.add_argument("--format", choices=("json", "csv", "table"), default="json")
    common.add_argument("--out", default=None)
    common.add_argument("--config", default=None, help="flat key = value file; flags override it")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("integrals", parents=[common], help="moments of every orbit")
    s.add_argument("--K", type=int, default=None, help="highest moment")
    s = sub.add_parser("index", parents=[common], help="stability index from the Jacobian signs")
    s = sub.add_parser("sweep", parents=[common], help="index over an (a, E) grid, CSV")
    s.add_argument("--a-range", type=parse_range, default=None)
    s.add_argument("--E-range", type=parse_range, default=None)
    s.add_argument("--jobs", type=int, default=None)
    s = sub.add_parser("spectrum", parents=[common], help="Floquet eigenvalues on L^2(T_k)")
    s.add_argument("--box", type=_box, default=None, help="half-widths re:im of the search box")
    s.add_argument("--no-krein", action="store_true")
    s = sub.add_parser("evans-grid", parents=[common], help="D(mu, e^{i kappa}) on a grid, CSV")
    s.add_argument("--box", type=_box, default=None)
    s.add_argument("--n", type=int, default=21, help="grid points per axis")
    s.add_argument("--kappa", type=float, default=0.0)
    s = sub.add_parser("region", parents=[common], help="swallowtail family count and region letter")
    s.add_argument("--a-range", type=parse_range, default=None)
    s.add_argument("--E-range", type=parse_range, default=None)
    s = sub.add_parser("cnoidal-critical", parents=[common], help="critical modulus of the a = 0 cn-waves")
    s.add_argument("--E-range", type=parse_range, default=None, help="scan lo:hi:n (n ignored)")
    s = sub.add_parser("selftest", help="run the acceptance suite")
    s.add_argument("--only", type=int, nargs="*", default=None)
    return p


# ---------------------------------------------------------------- helpers

def _settings(args):
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    val = lambda name, default: getattr(args, name) if getattr(args, name, None) is not None else cfg.get(name, default)
    return cfg, val


def _params(args):
    _, val = _settings(args)
    nl = Nonlinearity.parse(val("nonlinearity", "kdv"))
    return WaveParameters(nl, args.a, args.E, val("c", 1.0))


def _orbits(params, args):
    orbits = enumerate_orbits(params)
    if not orbits:
        raise NoOrbit(f"no periodic orbit at a={params.a}, E={params.E}, c={params.c}")
    if args.orbit is not None:
        if not 0 <= args.orbit < len(orbits):
            raise InvalidOrbit(f"orbit {args.orbit} requested, {len(orbits)} available")
        orbits = [orbits[args.orbit]]
    return orbits


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _emit(args, payload, rows=None):
    """Write a JSON document, or CSV/table of `rows` (list of flat dicts)."""
    fmt = getattr(args, "format", "json")
    if fmt == "json" or rows is None:
        text = json.dumps(_clean(payload), indent=2, sort_keys=False) + "\n"
    else:
        keys = list(rows[0].keys()) if rows else []
        buf = io.StringIO()
        if fmt == "csv":
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(keys)
            for r in rows:
                w.writerow([_cell(r[k]) for k in keys])
        else:
            cells = [[_cell(r[k]) for k in keys] for r in rows]
            widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
            buf.write("  ".join(k.ljust(w) for k, w in zip(keys, widths)) + "\n")
            for c in cells:
                buf.write("  ".join(v.ljust(w) for v, w in zip(c, widths)) + "\n")
        text = buf.getvalue()
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


# ---------------------------------------------------------------- subcommands

def cmd_integrals(args):
    _, val = _settings(args)
    params = _params(args)
    K = args.K if args.K is not None else max(params.degree, 2)
    rows = []
    for orb in _orbits(params, args):
        m = compute_moments(params, orb, K, tol=val("tol_quad", 1e-13))
        row = {"orbit_index": orb.orbit_index, "u_minus": orb.u_minus, "u_plus": orb.u_plus,
               "T": m.T, "M": m.M, "P": m.P}
        for i, (mu, err) in enumerate(zip(m.moments, m.est_error)):
            row[f"mu{i}"] = mu
            row[f"err{i}"] = err
        rows.append(row)
    _emit(args, {"params": params.to_dict(), "orbits": rows}, rows)
    return 0


def cmd_index(args):
    _, val = _settings(args)
    params = _params(args)
    k = val("k", 1)
    method = val("method", "pf")
    tol = val("tol_sign", 1e-8)
    out, rows, code = [], [], 0
    for orb in _orbits(params, args):
        entry = {"orbit_index": orb.orbit_index}
        methods = ("pf", "fd") if method == "both" else (method,)
        jacs = {m: orbit_jacobians(params, orb, m) for m in methods}
        reps = {m: index_total(j, k, tol) for m, j in jacs.items()}
        for m in methods:
            entry[m] = {"jacobians": jacs[m].to_dict(), "index": reps[m].to_dict()}
        if method == "both":
            dev = max(abs(getattr(jacs["pf"], q) - getattr(jacs["fd"], q))
                      / max(abs(getattr(jacs["pf"], q)), 1e-300) for q in ("T_E", "J2", "J3"))
            entry["max_rel_deviation"] = dev
            if reps["pf"].signs != reps["fd"].signs:
                code = MethodDisagreement.exit_code
        out.append(entry)
        r = reps[methods[0]]
        rows.append({"orbit_index": orb.orbit_index, "signs": "".join(r.signs), "n_L": r.n_L,
                     "n_LH1": r.n_LH1, "n_D": r.n_D, "total": r.total, "kR_parity": r.kR_parity,
                     "mi_class": r.mi_class, "orbital_stability_sufficient": r.orbital_stability_sufficient})
    _emit(args, {"params": params.to_dict(), "k": k, "method": method, "orbits": out}, rows)
    return code


def cmd_sweep(args):
    cfg_file, val = _settings(args)
    cfg = SweepConfig(
        nonlinearity=val("nonlinearity", "kdv"), c=val("c", 1.0),
        a_range=val("a_range", (args.a, args.a, 1)), E_range=val("E_range", (args.E, args.E, 1)),
        k=val("k", 1), method=val("method", "pf"), tol_quad=val("tol_quad", 1e-13),
        tol_fd=cfg_file.get("tol_fd", 1e-5), tol_sign=val("tol_sign", 1e-8),
        tol_evans=cfg_file.get("tol_evans", 1e-6), out=val("out", None),
        jobs=val("jobs", default_jobs()))
    rows = run_sweep(cfg)
    text = rows_to_csv(rows, cfg)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    ok = any(r.status == "ok" for r in rows)
    return 0 if ok else 2


def cmd_spectrum(args):
    _, val = _settings(args)
    params = _params(args)
    k = val("k", 1)
    reports = []
    for orb in _orbits(params, args):
        prof = reconstruct_profile(params, orb)
        rep = floquet.eigs_on_Tk(params, prof, k, box=args.box, krein=not args.no_krein)
        d = rep.to_dict()
        d["orbit_index"] = orb.orbit_index
        d["period"] = prof.T
        reports.append(d)
    rows = [dict(orbit_index=r["orbit_index"], **e) for r in reports for e in r["eigenvalues"]]
    _emit(args, {"params": params.to_dict(), "k": k, "reports": reports}, rows)
    return 0


def cmd_evans_grid(args):
    params = _params(args)
    orb = _orbits(params, args)[0]
    prof = reconstruct_profile(params, orb)
    if args.box is None:
        B = floquet.default_box(prof.T)
        bre, bim = B, B
    else:
        bre, bim = args.box
    re_ = np.linspace(-bre, bre, args.n)
    im_ = np.linspace(-bim, bim, args.n)
    mus, D = floquet.evans_grid(params, prof, re_, im_, args.kappa)
    rows = [{"mu_re": m.real, "mu_im": m.imag, "D_re": d.real, "D_im": d.imag} for m, d in zip(mus, D)]
    if args.format == "json":
        _emit(args, {"params": params.to_dict(), "kappa": args.kappa, "samples": rows})
    else:
        _emit(args, None, rows)
    return 0


def cmd_region(args):
    _, val = _settings(args)
    model = val("nonlinearity", "mkdv-focusing")
    a_rng = args.a_range or (args.a, args.a, 1)
    E_rng = args.E_range or (args.E, args.E, 1)
    rows = []
    for a in grid(a_rng):
        for E in grid(E_rng):
            lab = classify_swallowtail(model, float(a), float(E))
            rows.append({"a": float(a), "E": float(E), **lab.to_dict()})
    if len(rows) == 1:
        _emit(args, {"model": model, **rows[0]}, rows)
    else:
        for r in rows:
            r["signs"] = " ".join(r["signs"])
        _emit(args, {"model": model, "points": rows}, rows)
    return 0


def cmd_cnoidal_critical(args):
    _, val = _settings(args)
    lo, hi = (args.E_range[0], args.E_range[1]) if args.E_range else (0.05, 1.5)
    res = cnoidal_critical(val("nonlinearity", "mkdv-focusing"), lo, hi)
    _emit(args, res.to_dict(), [res.to_dict()])
    return 0


def cmd_selftest(args):
    from .acceptance import run_all
    results = run_all(args.only)
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "integrals": cmd_integrals, "index": cmd_index, "sweep": cmd_sweep, "spectrum": cmd_spectrum,
    "evans-grid": cmd_evans_grid, "region": cmd_region, "cnoidal-critical": cmd_cnoidal_critical,
    "selftest": cmd_selftest,
}


_VALUE_FLAGS = ("--a-range", "--E-range", "--box", "--a", "--E", "--c")


def _glue_negative_values(argv):
    # argparse would read "-0.4:0.5:9" as an option
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    warnings.simplefilter("ignore")
    try:
        return COMMANDS[args.command](args)
    except PwstabError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        sys.stdout.write(json.dumps(err) + "\n")
        return exc.exit_code
    except ValueError as exc:
        sys.stderr.write(f"pwstab: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
