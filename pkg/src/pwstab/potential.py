"""Traveling-wave oscillator: the polynomial R(u), its turning points and periodic wells.

The sign convention is fixed throughout the package:

    u_x**2 / 2 = R(u) = E + a*u + (c/2)*u**2 - F(u),    F' = f.

A periodic orbit is a bounded interval between two consecutive simple real
roots of R on which R > 0.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .errors import DegenerateLeadingCoefficient, NearDegenerateOrbit, UnsupportedModel

MODEL_COEFFS = {
    "kdv": (0, 0, 1),
    "mkdv-focusing": (0, 0, 0, 1),
    "mkdv-defocusing": (0, 0, 0, -1),
    "kdv4": (0, 0, 0, 0, 0, 1),
}

DEFAULT_ROOT_TOL = 1e-8


@dataclass(frozen=True)
class Nonlinearity:
    """f(u) = sum_j coeffs[j] * u**j, coefficients low-to-high."""

    coeffs: tuple
    model: str = "generic"

    def __post_init__(self):
        coeffs = tuple(Fraction(c) for c in self.coeffs)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        if len(coeffs) < 2 or coeffs[-1] == 0:
            raise ValueError("nonlinearity must have degree >= 1")
        object.__setattr__(self, "coeffs", coeffs)
        if self.model != "generic":
            if self.model not in MODEL_COEFFS:
                raise UnsupportedModel(f"unknown model tag {self.model!r}")
            if coeffs != tuple(Fraction(c) for c in MODEL_COEFFS[self.model]):
                raise ValueError(f"coefficients {self.coeffs} do not match model {self.model!r}")

    @classmethod
    def from_model(cls, model):
        return cls(MODEL_COEFFS[model], model)

    @classmethod
    def parse(cls, text):
        """Accept a model tag or comma-separated coefficients low-to-high ("0,0,1" is u**2)."""
        text = text.strip()
        if text in MODEL_COEFFS:
            return cls.from_model(text)
        coeffs = tuple(Fraction(tok.strip()) for tok in text.split(","))
        ncf = cls(coeffs)
        # a coefficient list equal to a tagged model keeps the generic tag; see as_tagged
        return ncf

    def as_tagged(self):
        """Return the tagged model with identical coefficients, if there is one."""
        for name, cf in MODEL_COEFFS.items():
            if self.coeffs == tuple(Fraction(c) for c in cf):
                return Nonlinearity(self.coeffs, name)
        return self

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def antiderivative(self):
        """Exact coefficients of F, low-to-high, with F(0) = 0."""
        return (Fraction(0),) + tuple(c / (j + 1) for j, c in enumerate(self.coeffs))

    def f(self, u):
        return np.polynomial.polynomial.polyval(u, [float(c) for c in self.coeffs])

    def df(self, u):
        d = np.polynomial.polynomial.polyder([float(c) for c in self.coeffs])
        return np.polynomial.polynomial.polyval(u, d)

    def d2f(self, u):
        d = np.polynomial.polynomial.polyder([float(c) for c in self.coeffs], 2)
        return np.polynomial.polynomial.polyval(u, d) if len(d) else np.zeros_like(np.asarray(u, float))

    def __str__(self):
        if self.model != "generic":
            return self.model
        return ",".join(str(c) for c in self.coeffs)


@dataclass(frozen=True)
class WaveParameters:
    nonlinearity: Nonlinearity
    a: float
    E: float
    c: float = 1.0

    @property
    def model(self):
        return self.nonlinearity.model

    def r_coeffs(self):
        """Coefficients of R low-to-high, as floats."""
        F = self.nonlinearity.antiderivative
        n = max(len(F) - 1, 2)
        r = [0.0] * (n + 1)
        r[0] += self.E
        r[1] += self.a
        r[2] += 0.5 * self.c
        for j, cf in enumerate(F):
            r[j] -= float(cf)
        while len(r) > 1 and r[-1] == 0.0:
            r.pop()
        return np.array(r, dtype=float)

    @property
    def degree(self):
        return len(self.r_coeffs()) - 1

    def R(self, u):
        return np.polynomial.polynomial.polyval(u, self.r_coeffs())

    def dR(self, u):
        return np.polynomial.polynomial.polyval(u, np.polynomial.polynomial.polyder(self.r_coeffs()))

    def d2R(self, u):
        return np.polynomial.polynomial.polyval(u, np.polynomial.polynomial.polyder(self.r_coeffs(), 2))

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return {"nonlinearity": str(self.nonlinearity), "a": self.a, "E": self.E, "c": self.c}


@dataclass(frozen=True)
class PeriodicOrbit:
    u_minus: float
    u_plus: float
    orbit_index: int = 0
    min_gap: float = math.inf

    @property
    def center(self):
        return 0.5 * (self.u_plus + self.u_minus)

    @property
    def half_width(self):
        return 0.5 * (self.u_plus - self.u_minus)


def _newton_polish(coeffs, x, iters=3):
    P = np.polynomial.polynomial
    d = P.polyder(coeffs)
    best, best_val = x, abs(P.polyval(x, coeffs))
    for _ in range(iters):
        dv = P.polyval(x, d)
        if dv == 0.0:
            break
        x = x - P.polyval(x, coeffs) / dv
        v = abs(P.polyval(x, coeffs))
        if v < best_val:
            best, best_val = x, v
        else:
            break
    return best


def all_roots(coeffs):
    """Complex roots of a polynomial given low-to-high, via companion-matrix eigenvalues."""
    return np.polynomial.polynomial.polyroots(np.asarray(coeffs, float))


def real_roots(params, tol=DEFAULT_ROOT_TOL):
    """Ascending real roots of R as (root, multiplicity) pairs.

    Roots closer than ``tol`` are clustered into one root of higher multiplicity.
    """
    coeffs = params.r_coeffs()
    if len(coeffs) < 3:
        raise DegenerateLeadingCoefficient("deg R must be at least 2")
    if abs(coeffs[-1]) < tol:
        raise DegenerateLeadingCoefficient(f"leading coefficient {coeffs[-1]:.3e} below {tol:.1e}")
    z = all_roots(coeffs)
    scale = max(1.0, float(np.max(np.abs(z))))
    # near-double roots come back as complex pairs with |Im| ~ sqrt(eps)
    cand = np.sort(z.real[np.abs(z.imag) <= max(tol, 1e-7) * scale])
    clusters = []
    for x in cand:
        if clusters and x - clusters[-1][-1] < tol * max(1.0, abs(x)):
            clusters[-1].append(x)
        else:
            clusters.append([x])
    out = []
    for cl in clusters:
        x = float(np.mean(cl))
        if len(cl) == 1:
            x = float(_newton_polish(coeffs, x))
        out.append((x, len(cl)))
    return out


def _sylvester(p, q):
    """Sylvester matrix of p, q given high-to-low."""
    m, n = len(p) - 1, len(q) - 1
    S = np.zeros((m + n, m + n))
    for i in range(n):
        S[i, i:i + m + 1] = p
    for i in range(m):
        S[n + i, i:i + n + 1] = q
    return S


def generic_discriminant(coeffs):
    """(-1)^{n(n-1)/2} Res(R, R') / lc(R), the resultant taken as a Sylvester determinant."""
    coeffs = np.asarray(coeffs, float)
    n = len(coeffs) - 1
    hi = coeffs[::-1]
    dhi = np.polynomial.polynomial.polyder(coeffs)[::-1]
    res = np.linalg.det(_sylvester(hi, dhi))
    return (-1) ** (n * (n - 1) // 2) * res / coeffs[-1]


def discriminant(params):
    """Discriminant of R; sign is positive iff R has an even number of complex-conjugate root pairs."""
    a, E, c = params.a, params.E, params.c
    model = params.nonlinearity.model
    if model == "kdv":
        return (16 * a**3 + 3 * a**2 * c**2 - 36 * E * a * c - 6 * E * c**3 - 36 * E**2) / 12.0
    if model == "mkdv-focusing" and c == 1.0:
        return 2 * a**2 - 27 * a**4 - 4 * E + 72 * a**2 * E - 32 * E**2 - 64 * E**3
    if model == "kdv4" and c == 1.0:
        return (-48 * a**2 + 3125 * a**6 + 96 * E - 11250 * a**4 * E + 10800 * a**2 * E**2
                - 1728 * E**3 + 7776 * E**5)
    return float(generic_discriminant(params.r_coeffs()))


def swallowtail_point(model, s):
    """(a, E) on the parametric swallowtail curve (double root of R at u = -s, c = 1)."""
    if model == "mkdv-focusing":
        return s - s**3, s**2 / 2 - 3 * s**4 / 4
    if model == "kdv4":
        return s - s**5, s**2 / 2 - 5 * s**6 / 6
    raise UnsupportedModel(f"no swallowtail parametrization for {model!r}")


def enumerate_orbits(params, tol=DEFAULT_ROOT_TOL, warn=True):
    """All periodic wells of R, left to right."""
    roots = real_roots(params, tol)
    z = all_roots(params.r_coeffs())
    orbits = []
    for (x0, m0), (x1, m1) in zip(roots[:-1], roots[1:]):
        if m0 != 1 or m1 != 1:
            continue
        if params.R(0.5 * (x0 + x1)) <= 0.0:
            continue
        others = [w for w in z if min(abs(w - x0), abs(w - x1)) > 1e-12 * max(1.0, abs(w))]
        # the two endpoint roots themselves are excluded above; guard against their duplicates
        gaps = [min(abs(w - x0), abs(w - x1)) for w in others]
        gap = float(min(gaps)) if gaps else math.inf
        orb = PeriodicOrbit(float(x0), float(x1), len(orbits), gap)
        if warn and gap < tol:
            warnings.warn(NearDegenerateOrbit(f"orbit {orb.orbit_index}: min_gap {gap:.2e} < {tol:.1e}"))
        orbits.append(orb)
    return orbits


@dataclass
class RegionLabel:
    n_families: int
    label: str
    signs: list = field(default_factory=list)
    disc: float = math.nan

    def to_dict(self):
        return {"n_families": self.n_families, "region": self.label,
                "signs": ["".join(s) for s in self.signs], "disc": self.disc}


# sign triples (T_E, {T,M}_{a,E}, {T,M,P}_{a,E,c}) of the labelled regions, keyed by family count
REGION_TABLES = {
    "mkdv-focusing": {
        (2, "+++"): "a",
        (1, "---"): "b",
        (1, "-+-"): "c",
        (1, "-++"): "d",
        (1, "+++"): "e",
    },
    "kdv4": {
        (2, "+++"): "a",
        (1, "+++"): "a'",
        (1, "++-"): "b",
        (1, "-+-"): "c",
        (1, "---"): "d",
    },
}


def classify_swallowtail(model, a, E, tol=1e-9, jac_tol=1e-7):
    """Number of periodic families at (a, E), c = 1, and the region letter of the sign map.

    BOUNDARY is returned on the discriminant zero set and wherever a Jacobian sign
    cannot be resolved; UNLISTED flags a sign pattern absent from the region table.
    Two families with different sign triples get one letter each, joined by '|'.
    """
    if model not in REGION_TABLES:
        raise UnsupportedModel(f"swallowtail classification needs mkdv-focusing or kdv4, got {model!r}")
    from .index import sign_triple
    from .errors import HypothesisViolated, PwstabError

    params = WaveParameters(Nonlinearity.from_model(model), a, E, 1.0)
    disc = discriminant(params)
    if abs(disc) < tol:
        return RegionLabel(-1, "BOUNDARY", [], disc)
    orbits = enumerate_orbits(params, warn=False)
    if not orbits:
        return RegionLabel(0, "none", [], disc)
    from .picard_fuchs import orbit_jacobians

    signs = []
    for orb in orbits:
        try:
            jac = orbit_jacobians(params, orb)
            signs.append(sign_triple(jac, jac_tol))
        except HypothesisViolated:
            return RegionLabel(len(orbits), "BOUNDARY", signs, disc)
        except PwstabError:
            return RegionLabel(len(orbits), "BOUNDARY", signs, disc)
    table = REGION_TABLES[model]
    keys = ["".join(s) for s in signs]
    if len(set(keys)) == 1:
        return RegionLabel(len(orbits), table.get((len(orbits), keys[0]), "UNLISTED"), signs, disc)
    letters = [table.get((len(orbits), k), table.get((1, k), "UNLISTED")) for k in keys]
    return RegionLabel(len(orbits), "|".join(letters), signs, disc)
