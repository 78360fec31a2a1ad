"""Parameter-plane sweeps, their CSV schema, and the cnoidal critical-modulus search."""
from __future__ import annotations

import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.optimize import brentq

from .errors import (HypothesisViolated, InternalInconsistency, NoOrbit, NotBracketed,
                     QuadratureNotConverged)
from .index import SIGN_TOL, index_total
from .integrals import QUAD_TOL, compute_moments
from .picard_fuchs import orbit_jacobians
from .potential import REGION_TABLES, Nonlinearity, WaveParameters, discriminant, enumerate_orbits


def parse_range(text):
    """'lo:hi:n' -> (lo, hi, n); a bare number is a one-point grid."""
    parts = str(text).split(":")
    if len(parts) == 1:
        v = float(parts[0])
        return (v, v, 1)
    if len(parts) != 3:
        raise ValueError(f"range must be lo:hi:n, got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("grid counts must be >= 1")
    return (lo, hi, n)


def grid(rng):
    lo, hi, n = rng
    return np.linspace(lo, hi, n) if n > 1 else np.array([lo])


@dataclass(frozen=True)
class SweepConfig:
    nonlinearity: str = "kdv"
    c: float = 1.0
    a_range: tuple = (0.0, 0.0, 1)
    E_range: tuple = (-0.1, -0.1, 1)
    k: int = 1
    method: str = "pf"
    tol_quad: float = QUAD_TOL
    tol_fd: float = 1e-5
    tol_sign: float = SIGN_TOL
    tol_evans: float = 1e-6
    out: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.method not in ("pf", "fd", "both"):
            raise ValueError(f"method must be pf, fd or both, got {self.method!r}")
        for name in ("tol_quad", "tol_fd", "tol_sign", "tol_evans"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.a_range[2] < 1 or self.E_range[2] < 1:
            raise ValueError("grid counts must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        Nonlinearity.parse(self.nonlinearity)

    def header_lines(self):
        keys = [f.name for f in fields(self) if f.name not in ("out", "jobs")]
        return [f"# {k} = {_fmt_cfg(getattr(self, k))}" for k in keys]


def _fmt_cfg(v):
    if isinstance(v, tuple):
        return ":".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return _fmt(v)
    return str(v)


_CFG_KEYS = {
    "model": "nonlinearity", "nonlinearity": "nonlinearity", "c": "c", "a_range": "a_range",
    "E_range": "E_range", "k": "k", "method": "method", "tol_quad": "tol_quad", "tol_fd": "tol_fd",
    "tol_sign": "tol_sign", "tol_evans": "tol_evans", "out": "out", "jobs": "jobs",
}


def coerce_config_value(key, value):
    if key in ("a_range", "E_range"):
        return parse_range(value)
    if key in ("k", "jobs"):
        return int(value)
    if key in ("c", "tol_quad", "tol_fd", "tol_sign", "tol_evans"):
        return float(value)
    return value


def read_config(path):
    """Flat 'key = value' file; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CFG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            out[_CFG_KEYS[key]] = coerce_config_value(key, value)
    return out


SWEEP_FIELDS = ("a", "E", "c", "disc", "n_orbits", "orbit_index", "T", "M", "P", "T_E", "J2", "J3",
                "delta_mi", "n_L", "n_LH1", "n_D", "index_total", "kR_parity", "mi_class", "status")
_STABILITY_FIELDS = ("n_L", "n_LH1", "n_D", "index_total", "kR_parity", "mi_class")


@dataclass
class SweepRow:
    a: float
    E: float
    c: float
    disc: float
    n_orbits: int
    orbit_index: int | None = None
    T: float | None = None
    M: float | None = None
    P: float | None = None
    T_E: float | None = None
    J2: float | None = None
    J3: float | None = None
    delta_mi: float | None = None
    n_L: int | None = None
    n_LH1: int | None = None
    n_D: int | None = None
    index_total: int | None = None
    kR_parity: str | None = None
    mi_class: str | None = None
    status: str = "ok"

    def signs(self):
        return "".join("+" if v > 0 else "-" for v in (self.T_E, self.J2, self.J3))

    def check(self):
        if self.status == "ok":
            if self.index_total != self.n_LH1 - self.n_D:
                raise InternalInconsistency(f"row ({self.a}, {self.E}): total != n(L|H1) - n(D)")
        elif any(getattr(self, f) is not None for f in _STABILITY_FIELDS):
            raise InternalInconsistency("non-ok row carries stability fields")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def evaluate_point(cfg: SweepConfig, a, E):
    """All rows for one grid point, one per periodic orbit."""
    nl = Nonlinearity.parse(cfg.nonlinearity)
    params = WaveParameters(nl, float(a), float(E), cfg.c)
    disc = float(discriminant(params))
    orbits = enumerate_orbits(params, warn=False)
    if not orbits:
        return [SweepRow(params.a, params.E, params.c, disc, 0, status="no-orbit")]
    rows = []
    for orb in orbits:
        row = SweepRow(params.a, params.E, params.c, disc, len(orbits), orb.orbit_index)
        try:
            mom = compute_moments(params, orb, max(params.degree, 2), tol=cfg.tol_quad)
            row.T, row.M, row.P = mom.T, mom.M, mom.P
            methods = ["pf", "fd"] if cfg.method == "both" else [cfg.method]
            jacs = [orbit_jacobians(params, orb, m, mom) for m in methods]
            jac = jacs[0]
            row.T_E, row.J2, row.J3, row.delta_mi = jac.T_E, jac.J2, jac.J3, jac.delta_mi
            reps = [index_total(j, cfg.k, cfg.tol_sign) for j in jacs]
            if len({r.signs for r in reps}) > 1:
                row.status = "method-disagreement"
            else:
                rep = reps[0]
                row.n_L, row.n_LH1, row.n_D = rep.n_L, rep.n_LH1, rep.n_D
                row.index_total, row.kR_parity, row.mi_class = rep.total, rep.kR_parity, rep.mi_class
        except HypothesisViolated:
            row.status = "hypothesis-violated"
        except QuadratureNotConverged:
            row.status = "quadrature-failed"
        except NoOrbit:
            row.status = "no-orbit"
        row.check()
        rows.append(row)
    return rows


def _task(args):
    cfg, a, E = args
    return evaluate_point(cfg, a, E)


def run_sweep(cfg: SweepConfig):
    """Rows in row-major grid order (a outer, E inner), then by orbit index."""
    tasks = [(cfg, a, E) for a in grid(cfg.a_range) for E in grid(cfg.E_range)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.jobs))))
    else:
        chunks = [_task(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def rows_to_csv(rows, cfg: SweepConfig | None = None):
    buf = io.StringIO()
    if cfg is not None:
        for line in cfg.header_lines():
            buf.write(line + "\n")
    buf.write(",".join(SWEEP_FIELDS) + "\n")
    for row in rows:
        row.check()
        buf.write(",".join(_fmt(getattr(row, f)) for f in SWEEP_FIELDS) + "\n")
    return buf.getvalue()


def region_of_row(model, row: SweepRow):
    """Region letter for an ok row from its sign triple and family count."""
    if row.status != "ok":
        return None
    table = REGION_TABLES[model]
    return table.get((row.n_orbits, row.signs()))


def default_jobs():
    try:
        return max(1, int(os.environ.get("PWSTAB_JOBS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------- cnoidal critical modulus

@dataclass
class CnoidalCritical:
    kappa_star: float
    E_star: float
    roots: dict
    totals: tuple
    scan: tuple = (0.05, 1.5)
    convention: str = "kappa^2 = u_+^2 / (u_+^2 - u_inner^2) with u_inner^2 < 0 the other root of R in u^2"

    def to_dict(self):
        return {"kappa_star": self.kappa_star, "E_star": self.E_star, "sign_change_roots": self.roots,
                "totals_at_scan_ends": list(self.totals), "scan": list(self.scan),
                "convention": self.convention}


def _cnoidal_jac(E):
    params = WaveParameters(Nonlinearity.from_model("mkdv-focusing"), 0.0, E, 1.0)
    orbits = enumerate_orbits(params, warn=False)
    if len(orbits) != 1:
        raise NoOrbit(f"expected one cnoidal orbit at E={E}, found {len(orbits)}")
    return orbit_jacobians(params, orbits[0])


def _cnoidal_total(E):
    try:
        return index_total(_cnoidal_jac(E)).total
    except HypothesisViolated:
        return None


def cnoidal_modulus(E):
    """Elliptic modulus of the a = 0 focusing mKdV cn-wave with energy E > 0."""
    s = math.sqrt(1.0 + 4.0 * E)
    up2, inner2 = 1.0 + s, 1.0 - s
    return math.sqrt(up2 / (up2 - inner2))


def cnoidal_critical(model="mkdv-focusing", lo=0.05, hi=1.5, tol=1e-13):
    """Energy and elliptic modulus where the index total changes along a = 0, E > 0.

    The bracket is bisected on the total while its signs are resolvable, then each
    Jacobian that flips inside it is solved for its zero; J2 fixes the reported point.
    """
    if model != "mkdv-focusing":
        from .errors import UnsupportedModel
        raise UnsupportedModel("the cnoidal critical modulus is defined for mkdv-focusing")
    t_lo, t_hi = _cnoidal_total(lo), _cnoidal_total(hi)
    if t_lo is None or t_hi is None or t_lo == t_hi:
        raise NotBracketed(f"index totals {t_lo}, {t_hi} at E = {lo}, {hi}")
    a, b = lo, hi
    while b - a > 1e-3:
        mid = 0.5 * (a + b)
        t = _cnoidal_total(mid)
        if t is None:
            break
        a, b = (mid, b) if t == t_lo else (a, mid)
    j_a, j_b = _cnoidal_jac(a), _cnoidal_jac(b)
    roots = {}
    for q in ("T_E", "J2", "J3"):
        if (getattr(j_a, q) > 0) != (getattr(j_b, q) > 0):
            roots[q] = brentq(lambda E: getattr(_cnoidal_jac(E), q), a, b, xtol=tol, rtol=4 * np.finfo(float).eps)
    E_star = roots.get("J2", next(iter(roots.values())))
    return CnoidalCritical(cnoidal_modulus(E_star), E_star, roots, (t_lo, t_hi), (lo, hi))


def with_overrides(cfg: SweepConfig, **kw):
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
