"""Eigenvalue counting for periodic waves on L^2(T_k) from the signs of three Jacobians.

The count k_I^- + k_R + k_C is evaluated two ways, directly from the sign
formula and as n(L|H_1) - n(D), and the two must agree.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import DegenerateRoots, HypothesisViolated, InternalInconsistency, NoOrbit, UnsupportedModel
from .potential import discriminant, real_roots

K_MAX = 64
SIGN_TOL = 1e-8


def _sign(x):
    return "+" if x > 0 else "-"


def _check(name, value, tol):
    if value == 0:
        raise HypothesisViolated(name, value, tol)
    return 1 if value > 0 else -1


def n_of_L(sign_TE, k):
    """Negative directions of the Hill operator L on L^2(T_k)."""
    s = _check("T_E", sign_TE, 0.0)
    return 2 * k - 1 if s > 0 else 2 * k


def n_of_L_H1(sign_TE, sign_J2, k):
    s = _check("T_E", sign_TE, 0.0) * _check("{T,M}_{a,E}", sign_J2, 0.0)
    return n_of_L(sign_TE, k) - (1 if s < 0 else 0)


def n_of_D(sign_J2, sign_J3):
    s = _check("{T,M}_{a,E}", sign_J2, 0.0) * _check("{T,M,P}_{a,E,c}", sign_J3, 0.0)
    return 1 if s > 0 else 0


def index_formula(sign_TE, sign_J2, sign_J3, k):
    """The sign formula for k_I^- + k_R + k_C, term by term."""
    sTE = _check("T_E", sign_TE, 0.0)
    s2 = _check("{T,M}_{a,E}", sign_J2, 0.0)
    s3 = _check("{T,M,P}_{a,E,c}", sign_J3, 0.0)
    return (2 * k - 1 + (0 if sTE > 0 else 1)
            - (0 if s2 * sTE > 0 else 1)
            - (1 if s3 * s2 > 0 else 0))


def resolved_sign(name, value, scale, err, tol):
    """+1/-1, or HypothesisViolated when |value| falls inside the dead-band."""
    band = tol * (1.0 + abs(scale)) + 3.0 * err
    if not abs(value) > band:
        raise HypothesisViolated(name, value, band)
    return 1 if value > 0 else -1


def sign_values(jac, tol=SIGN_TOL):
    out = []
    for key, name in (("T_E", "T_E"), ("J2", "{T,M}_{a,E}"), ("J3", "{T,M,P}_{a,E,c}")):
        out.append(resolved_sign(name, getattr(jac, key), jac.scale.get(key, 0.0),
                                 jac.est_error.get(key, 0.0), tol))
    return tuple(out)


def sign_triple(jac, tol=SIGN_TOL):
    return tuple(_sign(s) for s in sign_values(jac, tol))


def mi_classify(delta_mi, tol=SIGN_TOL, scale=0.0):
    if abs(delta_mi) <= tol * (1.0 + abs(scale)):
        return "indeterminate"
    return "stable-triple-covered" if delta_mi > 0 else "unstable-local-branches"


@dataclass
class IndexReport:
    k: int
    signs: tuple
    n_L: int
    n_LH1: int
    n_D: int
    total: int
    kR_parity: str
    mi_class: str
    hypothesis_ok: bool = True
    orbital_stability_sufficient: bool = False

    def to_dict(self):
        d = asdict(self)
        d["signs"] = "".join(self.signs)
        return d


def index_from_signs(sTE, s2, s3, k, mi_class="indeterminate"):
    if not 1 <= k <= K_MAX:
        raise ValueError(f"k must lie in 1..{K_MAX}")
    total = index_formula(sTE, s2, s3, k)
    nL = n_of_L(sTE, k)
    nLH1 = n_of_L_H1(sTE, s2, k)
    nD = n_of_D(s2, s3)
    if total != nLH1 - nD:
        raise InternalInconsistency(f"sign formula gives {total}, n(L|H1) - n(D) gives {nLH1 - nD}")
    if total < 0:
        raise InternalInconsistency(f"negative eigenvalue count {total}")
    parity = "even" if s3 > 0 else "odd"
    if total % 2 != (0 if parity == "even" else 1):
        raise InternalInconsistency("count parity disagrees with the sign of {T,M,P}")
    return IndexReport(k, tuple(_sign(s) for s in (sTE, s2, s3)), nL, nLH1, nD, total, parity,
                       mi_class, True, total == 0)


def index_total(jac, k=1, tol=SIGN_TOL):
    sTE, s2, s3 = sign_values(jac, tol)
    mi = mi_classify(jac.delta_mi, tol, jac.scale.get("delta_mi", 0.0) + 3e8 * jac.est_error.get("delta_mi", 0.0))
    return index_from_signs(sTE, s2, s3, k, mi)


def mkdv_mi_by_roots(params, tol=1e-9):
    """Modulational stability of mKdV waves from the real-root count of R.

    Four real roots of E + a u + c u^2/2 - F(u) means stable, two means unstable.
    """
    if params.model not in ("mkdv-focusing", "mkdv-defocusing"):
        raise UnsupportedModel(f"root criterion applies to mKdV only, got {params.model!r}")
    disc = discriminant(params)
    if abs(disc) < tol:
        raise DegenerateRoots("disc", disc, tol)
    count = sum(m for _, m in real_roots(params))
    if count == 4:
        return "stable"
    if count == 2:
        return "unstable"
    raise NoOrbit(f"R has {count} real roots; no periodic wave")
