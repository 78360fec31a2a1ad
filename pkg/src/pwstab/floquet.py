"""Floquet spectrum of the linearization about a periodic wave.

The third-order problem (-w'' + (c - f'(u)) w)' = mu w is written as a first-order
system in (w, w', w'') and integrated over one period alongside the profile itself,
so u and u_x are exact to integrator accuracy at every step. Eigenvalues on L^2(T_k)
are zeros of D(mu, z) = det(M(mu) - z I) with z a k-th root of unity.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (ContourThroughRoot, DiscretizationNotConverged, FormNotReal,
                     IntegratorToleranceFailure, NotOnAxis, WindingInconsistent)

P = np.polynomial.polynomial

DET_TOL = 1e-8
DET_FAIL = 1e-6
RTOL = 1e-11
BATCH = 32
MERGE_TOL = 1e-7


@dataclass
class MonodromyResult:
    mu: complex
    M: np.ndarray
    integrator_error: float


def _system(params):
    f1 = P.polyder([float(q) for q in params.nonlinearity.coeffs])
    f2 = P.polyder(f1)
    dR = P.polyder(params.r_coeffs())
    return f1, f2, dR, float(params.c)


def _integrate_batch(params, profile, mus, rtol):
    f1, f2, dR, c = _system(params)
    n = len(mus)

    def rhs(x, y):
        u = y[0].real
        ux = y[1].real
        Y = y[2:].reshape(n, 3, 3)
        a0 = -P.polyval(u, f2) * ux - mus
        a1 = c - P.polyval(u, f1)
        dY = np.empty_like(Y)
        dY[:, 0] = Y[:, 1]
        dY[:, 1] = Y[:, 2]
        dY[:, 2] = a0[:, None] * Y[:, 0] + a1 * Y[:, 1]
        return np.concatenate(([y[1], P.polyval(u, dR)], dY.ravel()))

    y0 = np.concatenate(([profile.u[0], profile.ux[0]], np.tile(np.eye(3).ravel(), n))).astype(complex)
    sol = solve_ivp(rhs, (0.0, profile.T), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-2)
    if not sol.success:
        raise IntegratorToleranceFailure(f"monodromy integration failed: {sol.message}")
    return sol.y[2:, -1].reshape(n, 3, 3)


def monodromy_batch(params, profile, mus, rtol=RTOL, det_tol=DET_TOL):
    """Monodromy matrices at many spectral parameters, integrated in chunks.

    Points whose determinant drifts beyond det_tol are redone alone at rtol/100;
    the achieved drift is reported, and only drift beyond DET_FAIL is an error.
    """
    mus = np.atleast_1d(np.asarray(mus, dtype=complex))
    out = np.empty((len(mus), 3, 3), dtype=complex)
    for s in range(0, len(mus), BATCH):
        out[s:s + BATCH] = _integrate_batch(params, profile, mus[s:s + BATCH], rtol)
    err = np.abs(np.linalg.det(out) - 1.0)
    for i in np.flatnonzero(err > det_tol):
        out[i] = _integrate_batch(params, profile, mus[i:i + 1], rtol * 1e-2)[0]
        err[i] = abs(np.linalg.det(out[i]) - 1.0)
        if err[i] > DET_FAIL:
            raise IntegratorToleranceFailure(f"det M(mu={mus[i]}) - 1 = {err[i]:.2e}")
    return [MonodromyResult(complex(m), M, float(e)) for m, M, e in zip(mus, out, err)]


def monodromy(params, profile, mu, tol=RTOL):
    return monodromy_batch(params, profile, [mu], tol)[0]


def _evans_array(M, zeta):
    """det(M - zeta I) through the characteristic polynomial coefficients."""
    M = np.asarray(M)
    tr = np.trace(M, axis1=-2, axis2=-1)
    m2 = (M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
          + M[..., 0, 0] * M[..., 2, 2] - M[..., 0, 2] * M[..., 2, 0]
          + M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
    det = np.linalg.det(M)
    return -zeta**3 + tr * zeta**2 - m2 * zeta + det


def evans(M: MonodromyResult, kappa):
    return complex(_evans_array(M.M, np.exp(1j * kappa)))


def axis_phase(kappa):
    """Unit factor making D(i y, e^{i kappa}) real for real y."""
    return np.exp(-0.5j * (math.pi + 3.0 * kappa))


def default_box(T):
    return 5.0 * (2.0 * math.pi / T) ** 3


class EvansOracle:
    """Caches monodromy matrices so that every Floquet exponent reuses them."""

    def __init__(self, params, profile, rtol=RTOL):
        self.params = params
        self.profile = profile
        self.rtol = rtol
        self._M = {}
        self.max_det_error = 0.0

    def matrices(self, mus):
        mus = [complex(m) for m in np.atleast_1d(mus)]
        todo = [m for m in dict.fromkeys(mus) if m not in self._M]
        if todo:
            for r in monodromy_batch(self.params, self.profile, todo, self.rtol):
                self._M[r.mu] = r.M
                self.max_det_error = max(self.max_det_error, r.integrator_error)
        return np.array([self._M[m] for m in mus])

    def D(self, mus, kappa):
        return _evans_array(self.matrices(mus), np.exp(1j * kappa))

    def h(self, ys, kappa):
        """Real restriction of D to the imaginary axis."""
        v = self.D(1j * np.asarray(ys, dtype=float), kappa) * axis_phase(kappa)
        return v.real


# ---------------------------------------------------------------- argument principle

def _edge_points(p, q, n):
    # canonical orientation so shared edges of neighbouring cells hit identical nodes
    swap = (p.real, p.imag) > (q.real, q.imag)
    a, b = (q, p) if swap else (p, q)
    t = np.linspace(0.0, 1.0, n + 1)
    return a + (b - a) * t, swap


def winding(oracle, corners, kappa, n0=24, max_rounds=14, floor=1e-11):
    """Winding number of D(., e^{i kappa}) around a closed polygon."""
    total = 0.0
    for p, q in zip(corners, corners[1:] + corners[:1]):
        pts, swap = _edge_points(complex(p), complex(q), n0)
        vals = oracle.D(pts, kappa)
        for _ in range(max_rounds):
            dphi = np.angle(vals[1:] / vals[:-1])
            bad = np.flatnonzero(np.abs(dphi) > math.pi / 4)
            if bad.size == 0:
                break
            mids = 0.5 * (pts[bad] + pts[bad + 1])
            mv = oracle.D(mids, kappa)
            pts = np.insert(pts, bad + 1, mids)
            vals = np.insert(vals, bad + 1, mv)
        else:
            raise ContourThroughRoot(f"edge {p}->{q} unresolved after {max_rounds} refinements")
        scale = np.max(np.abs(vals))
        if np.min(np.abs(vals)) < floor * max(scale, 1.0):
            raise ContourThroughRoot(f"|D| at noise level on edge {p}->{q}")
        w = np.sum(np.angle(vals[1:] / vals[:-1]))
        total += -w if swap else w
    n = total / (2 * math.pi)
    if abs(n - round(n)) > 0.1:
        raise WindingInconsistent(f"non-integer winding {n:.3f}")
    return int(round(n))


def _rect(x0, x1, y0, y1):
    return [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]


def newton_root(oracle, mu0, kappa, tol=1e-10, maxit=30):
    mu = complex(mu0)
    for _ in range(maxit):
        h = 1e-6 * max(1.0, abs(mu))
        d0, dp, dm, dpi, dmi = oracle.D([mu, mu + h, mu - h, mu + 1j * h, mu - 1j * h], kappa)
        deriv = 0.5 * ((dp - dm) / (2 * h) - 1j * (dpi - dmi) / (2 * h))
        if deriv == 0:
            break
        step = d0 / deriv
        mu -= step
        if abs(step) < tol * max(1.0, abs(mu)):
            return mu
    return mu


def axis_roots(oracle, kappa, ymax, exclude=0.0, n=400):
    """Zeros of D(i y, e^{i kappa}) for |y| <= ymax by sign changes and bracketing."""
    ys = np.linspace(-ymax, ymax, n + 1)
    ys = ys[np.abs(ys) >= exclude]
    if exclude > 0:
        ys = np.unique(np.concatenate((ys, [-exclude, exclude])))
    hv = oracle.h(ys, kappa)
    roots = []
    for i in range(len(ys) - 1):
        if exclude > 0 and ys[i] < 0 < ys[i + 1]:
            continue
        if hv[i] == 0:
            roots.append(ys[i])
        elif hv[i] * hv[i + 1] < 0:
            y = brentq(lambda t: oracle.h([t], kappa)[0], ys[i], ys[i + 1], xtol=1e-13, rtol=1e-13)
            roots.append(y)
    return roots


def origin_winding(oracle, r0, kappa=0.0):
    return winding(oracle, _rect(-r0, r0, -r0, r0), kappa)


# ---------------------------------------------------------------- spectrum

@dataclass
class Eigenvalue:
    mu: complex
    floquet_index: int
    multiplicity: int
    cls: str
    krein: str = "n/a"

    def to_dict(self):
        return {"mu_re": self.mu.real, "mu_im": self.mu.imag, "floquet_index": self.floquet_index,
                "multiplicity": self.multiplicity, "class": self.cls, "krein": self.krein}


@dataclass
class SpectrumReport:
    k: int
    eigenvalues: list
    k_R: int
    k_C: int
    k_I_minus_found: int
    search_box: tuple
    origin_winding: int | None = None
    origin_radius: float = 0.0
    symmetric: bool = True
    max_det_error: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def unstable(self):
        return [e for e in self.eigenvalues if e.cls in ("real", "complex") and e.mu.real > 0]

    def to_dict(self):
        d = asdict(self)
        d["eigenvalues"] = [e.to_dict() for e in self.eigenvalues]
        d["unstable"] = len(self.unstable)
        return d


def _classify(mu, tol):
    if abs(mu.real) <= tol:
        return "imaginary"
    if abs(mu.imag) <= tol:
        return "real"
    return "complex"


def _off_axis_roots(oracle, kappa, box, axis, origin_count, stop, tol, notes):
    """Quadtree search for zeros of D(., e^{i kappa}) off the imaginary axis."""
    bre, bim = box
    newton_size = 0.05 * min(bre, bim)
    found = []
    rng = np.random.default_rng(12345)

    def known(x0, x1, y0, y1):
        n = 0
        if x0 < 0 < x1:
            n += sum(1 for y in axis if y0 < y < y1)
            if y0 < 0 < y1:
                n += origin_count
        return n

    def visit(cell, count, depth):
        x0, x1, y0, y1 = cell
        resid = count - known(*cell)
        if resid < 0:
            raise WindingInconsistent(f"cell {cell}: winding {count} below known axis roots")
        if resid == 0:
            return
        has_axis = x0 < 0 < x1
        width = x1 - x0
        if not has_axis and resid == 1 and max(width, y1 - y0) < newton_size:
            mu = newton_root(oracle, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)), kappa)
            inside = x0 - tol <= mu.real <= x1 + tol and y0 - tol <= mu.imag <= y1 + tol
            if inside or max(width, y1 - y0) < stop:
                if not inside:
                    notes.append(f"newton left cell {cell}; kept {mu}")
                found.append(mu)
                return
        if depth > 40 or (width < stop and (has_axis or (y1 - y0) < stop)):
            if has_axis:
                notes.append(f"{resid} unresolved near-axis root(s) in {cell}")
                return
            for _ in range(resid):
                found.append(newton_root(oracle, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)), kappa))
            return
        jit = 0.5 + 0.02 * (rng.random() - 0.5)
        ym = y0 + jit * (y1 - y0)
        if has_axis:
            w = min(-x0, x1) / 4
            xs = [x0, -w, w, x1]
        else:
            xs = [x0, x0 + jit * width, x1]
        kids = [(xs[i], xs[i + 1], ya, yb) for i in range(len(xs) - 1) for ya, yb in ((y0, ym), (ym, y1))]
        counts = [winding(oracle, _rect(*kd), kappa) for kd in kids]
        if sum(counts) != count:
            raise WindingInconsistent(f"children of {cell} sum to {sum(counts)}, parent {count}")
        for kd, cnt in zip(kids, counts):
            visit(kd, cnt, depth + 1)

    root = (-bre, bre, -bim, bim)
    visit(root, winding(oracle, _rect(*root), kappa), 0)
    return found


def eigs_on_Tk(params, profile, k=1, box=None, tol=1e-6, r0=None, krein=True, rtol=RTOL):
    """Eigenvalues of the linearization on L^2(T_k) inside a box symmetric about both axes.

    For each Floquet exponent kappa_j = 2 pi j / k the imaginary-axis zeros are located
    from the real function h, the rest by winding counts on a quadtree with Newton
    polish. At kappa = 0 the triple zero at the origin is excised by a square of
    half-width r0 whose winding must be 3.
    """
    if box is None:
        B = default_box(profile.T)
        box = (B, B)
    bre, bim = float(box[0]), float(box[1])
    if r0 is None:
        r0 = 0.01 * min(bre, bim)
    oracle = EvansOracle(params, profile, rtol)
    notes = []
    eigs = []
    ow = None
    stop = 1e-3 * min(bre, bim)
    for j in range(k):
        kappa = 2 * math.pi * j / k
        origin_count = 0
        excl = 0.0
        if j == 0:
            r = r0
            while True:
                ow = origin_winding(oracle, r)
                if ow == 3 or r < 1e-3 * r0:
                    break
                r *= 0.5
            if ow != 3:
                notes.append(f"Jordan anomaly: origin winding {ow} at radius {r:.3e}")
            r0 = r
            origin_count = ow
            excl = r0
        axis = axis_roots(oracle, kappa, bim, exclude=excl)
        for y in axis:
            eigs.append(Eigenvalue(complex(0.0, y), j, 1, "imaginary"))
        for mu in _off_axis_roots(oracle, kappa, (bre, bim), axis, origin_count, stop, tol, notes):
            eigs.append(Eigenvalue(mu, j, 1, _classify(mu, tol)))
    eigs = _merge(eigs)
    if krein:
        for e in eigs:
            if e.cls == "imaginary":
                try:
                    e.krein = krein_signature(params, profile, e.mu, kappa=2 * math.pi * e.floquet_index / k,
                                              oracle=oracle)
                except (FormNotReal, NotOnAxis) as exc:
                    notes.append(f"krein at {e.mu}: {exc}")
    kR = sum(1 for e in eigs if e.cls == "real" and e.mu.real > 0)
    kC = sum(1 for e in eigs if e.cls == "complex" and e.mu.real > 0)
    kI = sum(1 for e in eigs if e.cls == "imaginary" and e.krein == "-")
    return SpectrumReport(k, eigs, kR, kC, kI, (bre, bim), ow, r0, _symmetric(eigs, tol),
                          oracle.max_det_error, notes)


def _merge(eigs):
    out = []
    for e in sorted(eigs, key=lambda e: (e.floquet_index, e.mu.real, e.mu.imag)):
        for o in out:
            if abs(o.mu - e.mu) < MERGE_TOL * max(1.0, abs(e.mu)):
                o.multiplicity += 1
                break
        else:
            out.append(e)
    return out


def _symmetric(eigs, tol):
    mus = np.array([e.mu for e in eigs])
    scale = max(tol, 1e-6)
    for m in mus:
        for image in (-m, np.conj(m)):
            if mus.size == 0 or np.min(np.abs(mus - image)) > scale * max(1.0, abs(m)):
                return False
    return True


# ---------------------------------------------------------------- Krein signature

def krein_value(params, profile, mu, w0, rtol=1e-12):
    """Hermitian form <w, L w> over one period, normalized by <w, w>."""
    f1, f2, dR, c = _system(params)
    mu = complex(mu)

    def rhs(x, y):
        u = y[0].real
        ux = y[1].real
        w = y[2:5]
        q = c - P.polyval(u, f1)
        w3 = (-P.polyval(u, f2) * ux - mu) * w[0] + q * w[1]
        return np.array([y[1], P.polyval(u, dR), w[1], w[2], w3,
                         np.conj(w[0]) * (-w[2] + q * w[0]), abs(w[0]) ** 2])

    y0 = np.concatenate(([profile.u[0], profile.ux[0]], w0, [0.0, 0.0])).astype(complex)
    sol = solve_ivp(rhs, (0.0, profile.T), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-2)
    if not sol.success:
        raise IntegratorToleranceFailure(f"eigenfunction integration failed: {sol.message}")
    return sol.y[5, -1] / sol.y[6, -1].real


def krein_signature(params, profile, mu, eigenvector=None, kappa=None, tol=1e-6, oracle=None):
    """Sign of <w, L w> for the eigenfunction at an imaginary eigenvalue mu.

    Without an explicit eigenvector, the eigenvector of M(mu) whose multiplier is
    e^{i kappa} (or the unimodular one closest to it) is used.
    """
    mu = complex(mu)
    if abs(mu.real) > tol * max(1.0, abs(mu)):
        raise NotOnAxis(f"Re mu = {mu.real:.3e}")
    if eigenvector is None:
        M = oracle.matrices([mu])[0] if oracle is not None else monodromy(params, profile, mu).M
        ev, V = np.linalg.eig(M)
        if kappa is None:
            i = int(np.argmin(np.abs(np.abs(ev) - 1.0)))
        else:
            i = int(np.argmin(np.abs(ev - np.exp(1j * kappa))))
        eigenvector = V[:, i]
    q = krein_value(params, profile, mu, np.asarray(eigenvector, dtype=complex))
    if abs(q.imag) > 1e-6 * abs(q.real) + 1e-10:
        raise FormNotReal(f"<w, L w> = {q}")
    return "+" if q.real > 0 else "-"


# ---------------------------------------------------------------- Hill operator

def _hill_count(q_hat, T, k, n_modes, tol):
    N = len(q_hat)
    n = np.arange(-n_modes, n_modes + 1)
    Q = q_hat[(n[:, None] - n[None, :]) % N]
    counts, lows = 0, []
    for j in range(k):
        kk = (2 * math.pi * n + 2 * math.pi * j / k) / T
        ev = np.linalg.eigvalsh(np.diag(kk**2) + Q)
        counts += int(np.sum(ev < -tol))
        lows.append(ev[:4])
    return counts, np.concatenate(lows)


def count_negative_L(params, profile, k=1, n_modes=48, tol=1e-7):
    """Negative eigenvalues of L = -d^2/dx^2 + c - f'(u) on L^2(T_k) by Hill's method.

    L on T_k splits into k Bloch operators on one period; each is truncated to
    2 n_modes + 1 Fourier modes and the count is repeated at twice the modes.
    """
    u = profile.u[:-1]
    N = len(u)
    if N < 4 * n_modes + 2:
        raise DiscretizationNotConverged(f"profile has {N} samples, need {4 * n_modes + 2}")
    q = float(params.c) - params.nonlinearity.df(u)
    q_hat = np.fft.fft(q) / N
    scale = tol * (1.0 + np.max(np.abs(q)))
    c1, lo1 = _hill_count(q_hat, profile.T, k, n_modes // 2, scale)
    c2, lo2 = _hill_count(q_hat, profile.T, k, n_modes, scale)
    if c1 != c2 or np.max(np.abs(lo1 - lo2)) > 1e-6 * (1.0 + np.max(np.abs(lo2))):
        raise DiscretizationNotConverged(f"counts {c1} vs {c2} under mode doubling")
    return c2


# ---------------------------------------------------------------- local structure

def origin_order(params, profile, radii=None, direction=1.0 + 0.37j, kappa=0.0, oracle=None):
    """Least-squares slope of log|D| against log|mu| along a ray into the origin."""
    if oracle is None:
        oracle = EvansOracle(params, profile)
    if radii is None:
        s = (2 * math.pi / profile.T) ** 3
        radii = s * np.geomspace(2e-3, 2e-2, 8)
    d = direction / abs(direction)
    vals = np.abs(oracle.D(np.asarray(radii) * d, kappa))
    slope = np.polyfit(np.log(radii), np.log(vals), 1)[0]
    return float(slope)


def mi_probe(params, profile, kappas=(0.05, 0.1, -0.05, -0.1), oracle=None, tol=1e-9):
    """Off-axis zeros bifurcating from the origin at small Floquet exponents.

    Squares around 0 are grown until they hold the three zeros that leave the
    origin; zeros not matched by sign changes on the imaginary axis are off it.
    Returns the largest off-axis count seen per kappa.
    """
    if oracle is None:
        oracle = EvansOracle(params, profile)
    out = {}
    for kappa in kappas:
        r = 0.1 * abs(kappa) / profile.T
        best = 0
        for _ in range(40):
            n = winding(oracle, _rect(-r, r, -r, r), kappa)
            if n:
                best = max(best, n - len(axis_roots(oracle, kappa, r, n=200)))
            if n >= 3:
                break
            r *= 1.5
        else:
            raise WindingInconsistent(f"kappa={kappa}: fewer than three zeros near the origin")
        out[kappa] = best
    return out


def evans_grid(params, profile, re, im, kappa=0.0):
    """D(mu, e^{i kappa}) on the tensor grid re x im, returned row-major in im."""
    oracle = EvansOracle(params, profile)
    mus = (np.asarray(im)[:, None] * 1j + np.asarray(re)[None, :]).ravel()
    return mus, oracle.D(mus, kappa)
