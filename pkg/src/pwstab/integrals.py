"""Cycle integrals over a periodic well, their parameter gradients, the wave profile and the action.

Moments use the normalization

    mu_k = oint u**k / sqrt(2 R(u)) du = 2 * int_{u-}^{u+} u**k / sqrt(2 R(u)) du,

so mu_0 = T (period), mu_1 = M (mass), mu_2 = P (momentum).  The substitution
u = m + w sin(theta) turns each integrand into a smooth function of theta, and
Gauss-Legendre rules are doubled until the moments settle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    IntegratorToleranceFailure,
    InvalidOrbit,
    OrbitLostUnderPerturbation,
    QuadratureNotConverged,
    StepUnderflow,
)
from .potential import PeriodicOrbit

PARAM_NAMES = ("a", "E", "c")
QUAD_TOL = 1e-13
N_START = 32
N_CAP = 4096


@lru_cache(maxsize=16)
def _gauss_theta(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * math.pi * x, 0.5 * math.pi * w


def deflate(coeffs, u_minus, u_plus):
    """Coefficients of S with R(u) = (u - u_minus)(u_plus - u) S(u); remainders are dropped."""
    hi = list(np.asarray(coeffs, float)[::-1])
    for root in (u_minus, u_plus):
        q = [hi[0]]
        for cf in hi[1:-1]:
            q.append(cf + root * q[-1])
        hi = q
    return -np.array(hi[::-1])


@dataclass
class CycleIntegrals:
    moments: np.ndarray
    est_error: np.ndarray
    nodes: int = 0

    @property
    def K(self):
        return len(self.moments) - 1

    @property
    def T(self):
        return float(self.moments[0])

    @property
    def M(self):
        return float(self.moments[1])

    @property
    def P(self):
        return float(self.moments[2])


def _moment_rule(params, orbit, K, n):
    S = deflate(params.r_coeffs(), orbit.u_minus, orbit.u_plus)
    th, wt = _gauss_theta(n)
    u = orbit.center + orbit.half_width * np.sin(th)
    s = np.polynomial.polynomial.polyval(u, S)
    if np.any(s <= 0.0):
        raise InvalidOrbit(f"deflated factor S <= 0 on the well [{orbit.u_minus}, {orbit.u_plus}]")
    g = 2.0 * wt / np.sqrt(2.0 * s)
    powers = u[None, :] ** np.arange(K + 1)[:, None]
    return powers @ g


def compute_moments(params, orbit, K=None, tol=QUAD_TOL, nodes=None, n_start=N_START, n_cap=N_CAP):
    """Moments mu_0..mu_K on ``orbit`` with node-doubling error control.

    With ``nodes`` given, a single fixed rule is used (est_error is then the
    difference against the half-size rule).
    """
    if K is None:
        K = max(params.degree, 2)
    scale = np.abs(orbit.center) + orbit.half_width
    if nodes is not None:
        coarse = _moment_rule(params, orbit, K, max(nodes // 2, 4))
        fine = _moment_rule(params, orbit, K, nodes)
        return CycleIntegrals(fine, np.abs(fine - coarse), nodes)
    n = n_start
    prev = _moment_rule(params, orbit, K, n)
    errs = []
    while n < n_cap:
        n *= 2
        cur = _moment_rule(params, orbit, K, n)
        err = np.abs(cur - prev)
        bound = tol * abs(cur[0]) * np.maximum(1.0, scale) ** np.arange(K + 1)
        errs.append(float(np.max(err / bound)))
        if np.all(err <= bound):
            return CycleIntegrals(cur, err, n)
        prev = cur
    raise QuadratureNotConverged(
        f"moments not converged with {n_cap} nodes (error/bound {errs[-1]:.2e})", achieved=errs[-1])


def classical_action(params, orbit, tol=QUAD_TOL, n_start=N_START, n_cap=N_CAP):
    """K = sqrt(2) oint sqrt(R) du = 2 sqrt(2) w**2 int cos(theta)**2 sqrt(S) dtheta."""
    S = deflate(params.r_coeffs(), orbit.u_minus, orbit.u_plus)
    w = orbit.half_width

    def rule(n):
        th, wt = _gauss_theta(n)
        s = np.polynomial.polynomial.polyval(orbit.center + w * np.sin(th), S)
        if np.any(s <= 0.0):
            raise InvalidOrbit("deflated factor S <= 0 on the well")
        return 2.0 * math.sqrt(2.0) * w * w * float(np.sum(wt * np.cos(th) ** 2 * np.sqrt(s)))

    n = n_start
    prev = rule(n)
    while n < n_cap:
        n *= 2
        cur = rule(n)
        if abs(cur - prev) <= tol * abs(cur):
            return cur
        prev = cur
    raise QuadratureNotConverged("action quadrature not converged", achieved=abs(cur - prev))


def track_orbit(params, orbit, iters=30):
    """Re-find the turning points of ``orbit`` for nearby ``params`` by Newton continuation."""
    new = []
    for x in (orbit.u_minus, orbit.u_plus):
        for _ in range(iters):
            d = params.dR(x)
            if d == 0.0:
                raise OrbitLostUnderPerturbation("turning point became critical")
            dx = params.R(x) / d
            x -= dx
            if abs(dx) <= 4e-16 * max(1.0, abs(x)):
                break
        new.append(float(x))
    lo, hi = new
    drift = max(abs(lo - orbit.u_minus), abs(hi - orbit.u_plus))
    limit = 0.25 * min(orbit.min_gap, hi - lo) if math.isfinite(orbit.min_gap) else 0.25 * (hi - lo)
    if not (lo < hi) or drift > limit or params.R(0.5 * (lo + hi)) <= 0.0:
        raise OrbitLostUnderPerturbation(f"turning points drifted by {drift:.2e} (limit {limit:.2e})")
    return PeriodicOrbit(lo, hi, orbit.orbit_index, orbit.min_gap - drift)


@dataclass
class GradientSet:
    """Partials of (T, M, P) in (a, E, c); ``grad[i, j]`` = d mu_i / d param_j."""

    grad: np.ndarray
    method: str
    est_error: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def _g(self, i, j):
        return float(self.grad[i, j])

    T_a = property(lambda s: s._g(0, 0))
    T_E = property(lambda s: s._g(0, 1))
    T_c = property(lambda s: s._g(0, 2))
    M_a = property(lambda s: s._g(1, 0))
    M_E = property(lambda s: s._g(1, 1))
    M_c = property(lambda s: s._g(1, 2))
    P_a = property(lambda s: s._g(2, 0))
    P_E = property(lambda s: s._g(2, 1))
    P_c = property(lambda s: s._g(2, 2))

    def to_dict(self):
        out = {"method": self.method}
        for i, q in enumerate("TMP"):
            for j, p in enumerate(PARAM_NAMES):
                out[f"{q}_{p}"] = float(self.grad[i, j])
        return out


def gradients_fd(params, orbit, K=2, h0=1e-5, h_min=1e-10, base=None):
    """Central differences of mu_0..mu_2 in (a, E, c) with one Richardson step.

    The step starts at h0 * max(1, |param|) and is halved until the orbit can
    be continued across the whole stencil.
    """
    if base is None:
        base = compute_moments(params, orbit, max(K, 2))
    nodes = 2 * base.nodes
    qerr = np.max(base.est_error[:3]) + 1e-15 * abs(base.T)
    grad = np.zeros((3, 3))
    err = np.zeros((3, 3))
    for j, name in enumerate(PARAM_NAMES):
        p0 = getattr(params, name)
        h = h0 * max(1.0, abs(p0))
        while True:
            if h < h_min:
                raise StepUnderflow(f"finite-difference step in {name} fell below {h_min:.1e}")
            try:
                vals = {}
                for t in (-1.0, -0.5, 0.5, 1.0):
                    pp = params.with_(**{name: p0 + t * h})
                    vals[t] = compute_moments(pp, track_orbit(pp, orbit), 2, nodes=nodes).moments[:3]
                break
            except (OrbitLostUnderPerturbation, InvalidOrbit):
                h *= 0.5
        d1 = (vals[1.0] - vals[-1.0]) / (2 * h)
        d2 = (vals[0.5] - vals[-0.5]) / h
        rich = (4 * d2 - d1) / 3
        grad[:, j] = rich
        err[:, j] = np.abs(rich - d2) / 3 + 3 * qerr / h
    return GradientSet(grad, "finite-difference", err)


@dataclass
class WaveProfile:
    x: np.ndarray
    u: np.ndarray
    ux: np.ndarray
    T: float
    closure_error: float = 0.0
    energy_residual: float = 0.0


def _profile_rhs(params):
    dcoef = np.polynomial.polynomial.polyder(params.r_coeffs())

    def rhs(x, y):
        return [y[1], np.polynomial.polynomial.polyval(y[0], dcoef)]

    return rhs


def reconstruct_profile(params, orbit, N=256, T=None, rtol=1e-12, profile_tol=1e-8):
    """Integrate u'' = R'(u) from (u_minus, 0) over one period, sampled at N+1 points."""
    if T is None:
        T = compute_moments(params, orbit, 2).T
    x = np.linspace(0.0, T, N + 1)
    sol = solve_ivp(_profile_rhs(params), (0.0, T), [orbit.u_minus, 0.0], method="DOP853",
                    t_eval=x, rtol=rtol, atol=rtol * 1e-2 * max(1.0, abs(orbit.u_minus)))
    if not sol.success:
        raise IntegratorToleranceFailure(f"profile integration failed: {sol.message}")
    u, ux = sol.y
    closure = abs(u[-1] - u[0]) + abs(ux[-1] - ux[0])
    resid = float(np.max(np.abs(0.5 * ux**2 - params.R(u))))
    if closure > profile_tol or resid > profile_tol:
        raise IntegratorToleranceFailure(
            f"profile closure {closure:.2e}, energy residual {resid:.2e} exceed {profile_tol:.1e}")
    return WaveProfile(x, u, ux, T, closure, resid)
