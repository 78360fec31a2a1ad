import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pwstab.errors import HypothesisViolated, NoOrbit, UnsupportedModel
from pwstab.index import (K_MAX, index_formula, index_from_signs, index_total, mi_classify, mkdv_mi_by_roots,
                          n_of_D, n_of_L, n_of_L_H1, resolved_sign)
from pwstab.picard_fuchs import orbit_jacobians
from pwstab.potential import Nonlinearity, WaveParameters, enumerate_orbits

SIGNS = list(itertools.product((1, -1), repeat=3))


def wp(model, a, E, c=1.0):
    return WaveParameters(Nonlinearity.from_model(model), a, E, c)


def reference_count(sTE, s2, s3, k):
    # n(L) from T_E, minus one if the mean-zero constraint removes a direction, minus n(D)
    nL = 2 * k - 1 if sTE > 0 else 2 * k
    nLH1 = nL - (1 if sTE * s2 < 0 else 0)
    # D = -{T,M}{T,M,P}: one negative direction when their product is positive
    nD = 1 if s2 * s3 > 0 else 0
    return nLH1 - nD


@pytest.mark.parametrize("signs", SIGNS)
@pytest.mark.parametrize("k", [1, 2, 3])
def test_formula_equals_constrained_count(signs, k):
    assert index_formula(*signs, k) == reference_count(*signs, k)
    assert index_formula(*signs, k) == n_of_L_H1(signs[0], signs[1], k) - n_of_D(signs[1], signs[2])


@pytest.mark.parametrize("signs", SIGNS)
def test_parity_tracks_J3(signs):
    for k in (1, 2, 3):
        assert (index_formula(*signs, k) % 2 == 0) == (signs[2] > 0)


@given(signs=st.sampled_from(SIGNS), k=st.integers(1, K_MAX))
def test_k_enters_as_2k(signs, k):
    assert index_formula(*signs, k) - index_formula(*signs, 1) == 2 * (k - 1)


def test_n_of_L_values():
    assert n_of_L(1, 1) == 1 and n_of_L(-1, 1) == 2 and n_of_L(1, 2) == 3


def test_impossible_triple_is_loud():
    # (+, -, -) at k = 1 would be a negative count
    with pytest.raises(Exception):
        index_from_signs(1, -1, -1, 1)


def test_k_cap():
    with pytest.raises(ValueError):
        index_from_signs(1, 1, 1, K_MAX + 1)


def test_dead_band():
    with pytest.raises(HypothesisViolated):
        resolved_sign("x", 1e-10, 1.0, 0.0, 1e-8)
    assert resolved_sign("x", -1e-6, 1.0, 0.0, 1e-8) == -1


def test_mi_classify():
    assert mi_classify(2.0) == "stable-triple-covered"
    assert mi_classify(-2.0) == "unstable-local-branches"
    assert mi_classify(1e-12) == "indeterminate"


def test_kdv_sample_total_zero():
    p = wp("kdv", 0.0, -0.1)
    rep = index_total(orbit_jacobians(p, enumerate_orbits(p)[0]), 1)
    assert rep.total == 0 and rep.orbital_stability_sufficient and rep.kR_parity == "even"


def test_mkdv_region_b_total_one():
    p = wp("mkdv-focusing", 0.0, 0.2)
    rep = index_total(orbit_jacobians(p, enumerate_orbits(p)[0]), 1)
    assert rep.total == 1 and rep.kR_parity == "odd" and rep.signs == ("-", "-", "-")


def test_near_swallowtail_violates_hypothesis():
    # J2 and J3 both vanish on the a = 0 cn-family near E = 0.33767753645626
    p = wp("mkdv-focusing", 0.0, 0.337677536456)
    with pytest.raises(HypothesisViolated):
        index_total(orbit_jacobians(p, enumerate_orbits(p)[0]), 1)


def test_mkdv_roots_examples():
    assert mkdv_mi_by_roots(wp("mkdv-focusing", 0.0, -0.1)) == "stable"
    assert mkdv_mi_by_roots(wp("mkdv-focusing", 1.0, 1.0)) == "unstable"
    with pytest.raises(UnsupportedModel):
        mkdv_mi_by_roots(wp("kdv", 0.0, -0.1))
    with pytest.raises(NoOrbit):
        mkdv_mi_by_roots(wp("mkdv-defocusing", 0.0, 0.1))
