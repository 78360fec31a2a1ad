"""Acceptance suite: eleven end-to-end checks, each reported as one PASS/FAIL line."""
from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import floquet
from .index import index_formula, index_total, mkdv_mi_by_roots, n_of_D, n_of_L, n_of_L_H1
from .integrals import compute_moments, gradients_fd, reconstruct_profile
from .picard_fuchs import closed_forms, gradients_pf, jacobians, solve_picard_fuchs
from .potential import Nonlinearity, WaveParameters, classify_swallowtail, discriminant, enumerate_orbits
from .sweep import cnoidal_critical

# 7 x 7 grids lying inside disc > 0 for each model (c = 1)
GRIDS = {
    "kdv": ((-0.1, 0.1), (-0.065, -0.005)),
    "mkdv-focusing": ((-0.05, 0.05), (-0.2, -0.03)),
    "kdv4": ((0.4, 0.7), (-0.25, -0.05)),
}

MKDV_REGIONS = {
    "a": [(0.0, -0.1), (0.1, -0.05)],
    "b": [(0.0, 0.2), (-0.2, 0.15)],
    "c": [(-0.4, 0.1), (0.2, 0.3)],
    "d": [(0.0, 0.5), (0.6, 0.25)],
    "e": [(0.6, -0.15), (-0.6, 0.1)],
}
MKDV_EXPECTED = {"a": 0, "b": 1, "c": 1, "d": 0, "e": 0}  # total at k = 1; each k adds 2

KDV4_REGIONS = {
    "a": [(0.0, -0.2), (0.16, -0.05)],
    "a'": [(0.4, -0.1), (-0.64, -0.25)],
    "b": [(-0.64, 0.2), (0.56, 0.15)],
    "c": [(-0.72, 0.3), (0.64, 0.25)],
    "d": [(0.0, 0.25), (0.4, 0.25)],
}
KDV4_EXPECTED = {"a": 0, "a'": 0, "b": 1, "c": 1, "d": 1}

SWALLOWTAIL_PAIRS = [(0.0, -0.1), (0.05, -0.1), (-0.1, -0.05), (0.1, -0.15), (0.0, -0.2)]

KDV_SAMPLE = (0.0, -0.1)
MKDV_B_SAMPLE = (0.0, 0.2)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} [{self.number:2d}] {self.title}: {self.detail} ({self.seconds:.1f} s)"


def _params(model, a, E, c=1.0):
    return WaveParameters(Nonlinearity.from_model(model), a, E, c)


def grid_points(model):
    (a0, a1), (e0, e1) = GRIDS[model]
    return [(float(a), float(E)) for a in np.linspace(a0, a1, 7) for E in np.linspace(e0, e1, 7)]


def _orbit_data(model, a, E, c=1.0):
    p = _params(model, a, E, c)
    return p, enumerate_orbits(p, warn=False)


# ---------------------------------------------------------------- criteria

def c1_dual_path():
    worst, n = 0.0, 0
    for model in GRIDS:
        for a, E in grid_points(model):
            p, orbits = _orbit_data(model, a, E)
            for orb in orbits:
                mom = compute_moments(p, orb, max(p.degree, 2))
                g_pf = gradients_pf(p, solve_picard_fuchs(p, mom))
                g_fd = gradients_fd(p, orb, base=mom)
                allowed = np.maximum(1e-6 * np.abs(g_pf.grad), 3 * (g_pf.est_error + g_fd.est_error))
                worst = max(worst, float(np.max(np.abs(g_pf.grad - g_fd.grad) / allowed)))
                n += 1
    return worst <= 1.0, f"{n} orbits, worst |pf - fd| / allowed = {worst:.3f}"


def c2_kdv_closed_forms():
    rel = {"T_E": 0.0, "J2": 0.0, "J3": 0.0}
    ratio = []
    for a, E in grid_points("kdv"):
        p, (orb,) = _orbit_data("kdv", a, E)
        mom = compute_moments(p, orb, 3)
        jac = jacobians(gradients_pf(p, solve_picard_fuchs(p, mom)))
        cf = closed_forms("kdv", mom.T, mom.M, mom.P, a, E, 1.0)
        for q in rel:
            rel[q] = max(rel[q], abs(getattr(jac, q) - getattr(cf, q)) / abs(getattr(cf, q)))
        ratio.append(jac.J3 / cf.J3)
    ok = all(v < 1e-6 for v in rel.values())
    detail = ", ".join(f"{q} rel dev {v:.1e}" for q, v in rel.items())
    return ok, detail + f"; computed/printed J3 in [{min(ratio):.6f}, {max(ratio):.6f}]"


def c3_kdv_positivity():
    bad = []
    for a, E in grid_points("kdv"):
        p, (orb,) = _orbit_data("kdv", a, E)
        jac = jacobians(gradients_pf(p, solve_picard_fuchs(p, compute_moments(p, orb, 3))))
        if not (jac.T_E > 0 and jac.J2 > 0 and jac.J3 > 0 and jac.delta_mi >= 0):
            bad.append((a, E, "signs"))
        for k in (1, 2, 3):
            if index_total(jac, k).total != 2 * (k - 1):
                bad.append((a, E, k))
    return not bad, f"49 points x k=1,2,3, {len(bad)} violations" + (f" e.g. {bad[0]}" if bad else "")


def _mi_root_agreement(model, c, a_box, E_box, n, rng):
    """Agreement over orbits at n sampled points with periodic waves."""
    agree = tot = points = 0
    while points < n:
        a, E = rng.uniform(*a_box), rng.uniform(*E_box)
        p = _params(model, a, E, c)
        if abs(discriminant(p)) < 1e-6:
            continue
        orbits = enumerate_orbits(p, warn=False)
        if not orbits:
            continue
        roots = mkdv_mi_by_roots(p)
        for orb in orbits:
            jac = jacobians(gradients_pf(p, solve_picard_fuchs(p, compute_moments(p, orb, 4))))
            agree += (jac.delta_mi > 0) == (roots == "stable")
            tot += 1
        points += 1
    return agree, tot


def c4_mkdv_theorem():
    rng = np.random.default_rng(20240611)
    out = []
    ok = True
    for model, c, abox, ebox in (("mkdv-focusing", 1.0, (-1, 1), (-0.3, 0.6)),
                                 ("mkdv-defocusing", -1.0, (-0.4, 0.4), (0.0, 0.3))):
        agree, n = _mi_root_agreement(model, c, abox, ebox, 100, rng)
        out.append(f"{model} (c={c:g}) {agree}/{n}")
        ok &= agree >= 0.99 * n
    return ok, "; ".join(out)


def c5_mkdv_residues():
    worst = {"T": 0.0, "P": 0.0, "M": 0.0, "J": 0.0}
    ok = True
    for a, E in SWALLOWTAIL_PAIRS:
        p, orbits = _orbit_data("mkdv-focusing", a, E)
        if len(orbits) != 2:
            return False, f"({a}, {E}) has {len(orbits)} orbits"
        m = [compute_moments(p, o, 4) for o in orbits]
        j = [jacobians(gradients_pf(p, solve_picard_fuchs(p, x))) for x in m]
        dT = abs(m[0].T - m[1].T)
        dP = abs(m[0].P - m[1].P)
        dM = abs(abs(m[0].M - m[1].M) - 2 * math.sqrt(2) * math.pi) / (2 * math.sqrt(2) * math.pi)
        ok &= dT < 1e-8 * m[0].T and dP < 1e-8 * abs(m[0].P) + 1e-10 and dM < 1e-8
        worst["T"] = max(worst["T"], dT / m[0].T)
        worst["P"] = max(worst["P"], dP / abs(m[0].P))
        worst["M"] = max(worst["M"], dM)
        for q in ("J2", "J3", "delta_mi"):
            r = abs(getattr(j[0], q) - getattr(j[1], q)) / abs(getattr(j[0], q))
            worst["J"] = max(worst["J"], r)
            ok &= r < 1e-8
    return ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


def _region_totals(model, regions, expected):
    """Check labels and totals at the region samples; returns (per-orbit jacobians, mismatches)."""
    jacs, bad = [], []
    for letter, pts in regions.items():
        for a, E in pts:
            lab = classify_swallowtail(model, a, E)
            if lab.label != letter:
                bad.append((letter, a, E, f"labelled {lab.label}"))
                continue
            p, orbits = _orbit_data(model, a, E)
            for orb in orbits:
                jac = jacobians(gradients_pf(p, solve_picard_fuchs(p, compute_moments(p, orb, p.degree))))
                jacs.append((letter, jac))
                for k in (1, 2):
                    t = index_total(jac, k).total
                    if t != expected[letter] + 2 * (k - 1):
                        bad.append((letter, a, E, k, t))
    return jacs, bad


def c6_mkdv_regions():
    _, bad = _region_totals("mkdv-focusing", MKDV_REGIONS, MKDV_EXPECTED)
    return not bad, f"{sum(map(len, MKDV_REGIONS.values()))} points, k=1,2, {len(bad)} mismatches" + (
        f" e.g. {bad[0]}" if bad else "")


def c7_floquet():
    parts, ok = [], True
    det_err = 0.0

    p, (orb,) = _orbit_data("kdv", *KDV_SAMPLE)
    prof = reconstruct_profile(p, orb)
    rep = floquet.eigs_on_Tk(p, prof, 1, krein=False)
    det_err = max(det_err, rep.max_det_error)
    off = [e for e in rep.eigenvalues if abs(e.mu.real) > 1e-6]
    ok &= not off
    parts.append(f"(ii) kdv off-axis {len(off)}")

    pb, (ob,) = _orbit_data("mkdv-focusing", *MKDV_B_SAMPLE)
    profb = reconstruct_profile(pb, ob)
    repb = floquet.eigs_on_Tk(pb, profb, 1, krein=False)
    det_err = max(det_err, repb.max_det_error)
    parity = index_total(jacobians(gradients_pf(pb, solve_picard_fuchs(pb, compute_moments(pb, ob, 4)))), 1).kR_parity
    found = repb.k_R >= 1 and repb.k_R % 2 == 1 and parity == "odd"
    ok &= found
    parts.append(f"(iii) mkdv(b) k_R={repb.k_R} index parity {parity}")

    windings = [rep.origin_winding, repb.origin_winding]
    for model, (a, E) in (("mkdv-focusing", (0.0, -0.1)), ("kdv4", (0.4, -0.1))):
        pg, orbits = _orbit_data(model, a, E)
        pr = reconstruct_profile(pg, orbits[0])
        oracle = floquet.EvansOracle(pg, pr)
        windings.append(floquet.origin_winding(oracle, 0.01 * floquet.default_box(pr.T)))
        det_err = max(det_err, oracle.max_det_error)
    ok &= all(w == 3 for w in windings)
    parts.append(f"(iv) origin windings {windings}")

    signs_by_y = []
    oracle = floquet.EvansOracle(p, prof)
    for y in (0.01, 0.03, 0.1):
        M = oracle.matrices([1j * y])[0]
        ev, V = np.linalg.eig(M)
        triple = bool(np.all(np.abs(np.abs(ev) - 1) < 1e-8))
        signs = sorted(floquet.krein_signature(p, prof, 1j * y, V[:, i]) for i in range(3))
        signs_by_y.append(("".join(signs), triple))
    det_err = max(det_err, oracle.max_det_error)
    krein_ok = all(t and s == "++-" for s, t in signs_by_y)
    ok &= krein_ok
    parts.append(f"(v) triple-band signatures {[s for s, _ in signs_by_y]} (target ++-)")

    ok &= det_err <= 1e-8
    parts.insert(0, f"(i) max |det M - 1| {det_err:.1e}")
    return ok, "; ".join(parts)


def c8_hill_count():
    samples = [("kdv", 0.0, -0.1), ("mkdv-focusing", 0.0, -0.1), ("kdv4", 0.5, -0.1),
               ("mkdv-focusing", 0.0, 0.2), ("mkdv-focusing", 0.0, 1.0), ("kdv4", 0.2, 0.3)]
    bad, seen = [], set()
    for model, a, E in samples:
        p, orbits = _orbit_data(model, a, E)
        orb = orbits[0]
        prof = reconstruct_profile(p, orb, N=512)
        jac = jacobians(gradients_pf(p, solve_picard_fuchs(p, compute_moments(p, orb, p.degree))))
        seen.add("+" if jac.T_E > 0 else "-")
        for k in (1, 2):
            direct = floquet.count_negative_L(p, prof, k)
            if direct != n_of_L(1 if jac.T_E > 0 else -1, k):
                bad.append((model, a, E, k, direct))
    ok = not bad and seen == {"+", "-"}
    return ok, f"{len(samples)} samples x k=1,2, {len(bad)} mismatches, T_E signs seen {''.join(sorted(seen))}"


def c9_cnoidal():
    res = cnoidal_critical()
    return 0.904 <= res.kappa_star <= 0.914, f"kappa* = {res.kappa_star:.6f} at E* = {res.E_star:.10f}"


def c10_kdv4_regions():
    jacs, bad = _region_totals("kdv4", KDV4_REGIONS, KDV4_EXPECTED)
    flagged = [letter for letter, jac in jacs if letter in ("a", "a'") and jac.delta_mi >= 0]
    detail = f"{sum(map(len, KDV4_REGIONS.values()))} points, k=1,2, {len(bad)} mismatches"
    if bad:
        detail += f" e.g. {bad[0]}"
    detail += f"; Delta_MI >= 0 flagged in (a)/(a') at {len(flagged)} orbits"
    return not bad, detail


def c11_index_arithmetic():
    n = 0
    for signs in itertools.product((1, -1), repeat=3):
        for k in (1, 2, 3):
            total = index_formula(*signs, k)
            if total != n_of_L_H1(signs[0], signs[1], k) - n_of_D(signs[1], signs[2]):
                return False, f"signs {signs}, k={k}"
            if (total % 2 == 1) != (signs[2] < 0):
                return False, f"parity at signs {signs}, k={k}"
            n += 1
    return True, f"{n} sign/k combinations"


CRITERIA = {
    1: ("pf vs fd gradients on three 7x7 grids", c1_dual_path),
    2: ("KdV closed forms for T_E, {T,M}, {T,M,P}", c2_kdv_closed_forms),
    3: ("KdV positivity and total 2(k-1)", c3_kdv_positivity),
    4: ("mKdV modulational sign vs real-root count", c4_mkdv_theorem),
    5: ("mKdV two-orbit residue identities", c5_mkdv_residues),
    6: ("mKdV region totals (a)-(e)", c6_mkdv_regions),
    7: ("Floquet oracle consistency", c7_floquet),
    8: ("Hill-operator count n(L)", c8_hill_count),
    9: ("cnoidal critical modulus", c9_cnoidal),
    10: ("kdv4 region totals and Delta_MI", c10_kdv4_regions),
    11: ("exhaustive index arithmetic", c11_index_arithmetic),
}


def check(number):
    title, fn = CRITERIA[number]
    t = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            ok, detail = fn()
        except Exception as exc:
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    return CriterionResult(number, title, bool(ok), detail, time.perf_counter() - t)


def run_all(only=None, echo=print):
    results = []
    for n in sorted(only or CRITERIA):
        r = check(n)
        if echo is not None:
            echo(r.line())
        results.append(r)
    return results
