import math

import numpy as np
import pytest

from pwstab import floquet
from pwstab.errors import NotOnAxis
from pwstab.index import index_total
from pwstab.integrals import reconstruct_profile
from pwstab.picard_fuchs import orbit_jacobians
from pwstab.potential import Nonlinearity, WaveParameters, enumerate_orbits


def setup(model, a, E, orbit=0, N=256):
    p = WaveParameters(Nonlinearity.from_model(model), a, E, 1.0)
    orb = enumerate_orbits(p, warn=False)[orbit]
    return p, orb, reconstruct_profile(p, orb, N)


@pytest.fixture(scope="module")
def kdv():
    return setup("kdv", 0.0, -0.1)


@pytest.fixture(scope="module")
def mkdv_b():
    return setup("mkdv-focusing", 0.0, 0.2)


def hill_bloch(p, prof, kappa, modes=40):
    """Fourier truncation of d/dx L on e^{i kappa x / T} periodic functions; returns (mu, krein form)."""
    u = prof.u[:-1]
    N = len(u)
    q_hat = np.fft.fft(float(p.c) - p.nonlinearity.df(u)) / N
    n = np.arange(-modes, modes + 1)
    kk = (2 * np.pi * n + kappa) / prof.T
    L = np.diag(kk**2) + q_hat[(n[:, None] - n[None, :]) % N]
    mu, V = np.linalg.eig(np.diag(1j * kk) @ L)
    form = np.real(np.einsum("ij,ik,kj->j", V.conj(), L, V)) / np.real(np.einsum("ij,ij->j", V.conj(), V))
    return mu, form


def test_det_is_one_at_random_mu(kdv):
    p, _, prof = kdv
    B = floquet.default_box(prof.T)
    rng = np.random.default_rng(7)
    mus = rng.uniform(-B, B, 20) + 1j * rng.uniform(-B, B, 20)
    for r in floquet.monodromy_batch(p, prof, mus):
        assert abs(np.linalg.det(r.M) - 1) < 1e-8


def test_conjugation_symmetry(kdv):
    p, _, prof = kdv
    m1, m2 = floquet.monodromy_batch(p, prof, [0.3 + 0.7j, 0.3 - 0.7j])
    np.testing.assert_allclose(m2.M, m1.M.conj(), rtol=1e-9, atol=1e-9)


def test_origin_multiplier_is_triple(kdv):
    p, _, prof = kdv
    M = floquet.monodromy(p, prof, 0.0).M
    # generic Jordan structure: one eigenvector short of a full eigenspace
    assert np.allclose(np.linalg.eigvals(M), 1.0, atol=1e-3)
    assert np.linalg.matrix_rank(M - np.eye(3), tol=1e-6) >= 1


def test_evans_vanishes_at_zero(kdv):
    p, _, prof = kdv
    assert abs(floquet.evans(floquet.monodromy(p, prof, 0.0), 0.0)) < 1e-8


def test_evans_closed_form_matches_determinant(kdv):
    p, _, prof = kdv
    r = floquet.monodromy(p, prof, 0.4 - 1.1j)
    z = np.exp(0.9j)
    assert floquet.evans(r, 0.9) == pytest.approx(np.linalg.det(r.M - z * np.eye(3)), rel=1e-10)


@pytest.mark.parametrize("model,a,E", [("kdv", 0.0, -0.1), ("mkdv-focusing", 0.0, 0.2), ("kdv4", 0.4, -0.1)])
def test_evans_is_real_on_axis_after_phase(model, a, E):
    p, _, prof = setup(model, a, E)
    oracle = floquet.EvansOracle(p, prof)
    ys = np.linspace(0.1, 3.0, 7)
    for kappa in (0.0, 0.7, math.pi):
        v = oracle.D(1j * ys, kappa) * floquet.axis_phase(kappa)
        assert np.all(np.abs(v.imag) <= 1e-9 * np.maximum(1.0, np.abs(v)))


@pytest.mark.parametrize("model,a,E", [("kdv", 0.0, -0.1), ("mkdv-focusing", 0.0, -0.1), ("kdv4", 0.4, -0.1)])
def test_origin_order_three(model, a, E):
    p, _, prof = setup(model, a, E)
    assert abs(floquet.origin_order(p, prof) - 3) < 0.1


def test_origin_winding_three(kdv):
    p, _, prof = kdv
    oracle = floquet.EvansOracle(p, prof)
    assert floquet.origin_winding(oracle, 0.01 * floquet.default_box(prof.T)) == 3


def test_winding_is_additive(mkdv_b):
    p, _, prof = mkdv_b
    oracle = floquet.EvansOracle(p, prof)
    parent = floquet.winding(oracle, floquet._rect(0.2, 1.0, -0.3, 0.33), 0.0)
    kids = [floquet.winding(oracle, floquet._rect(x0, x1, -0.3, 0.33), 0.0) for x0, x1 in ((0.2, 0.61), (0.61, 1.0))]
    assert parent == sum(kids) == 1


def test_kdv_k1_spectrum_on_axis(kdv):
    p, _, prof = kdv
    rep = floquet.eigs_on_Tk(p, prof, 1)
    assert not rep.unstable
    assert all(abs(e.mu.real) <= 1e-6 for e in rep.eigenvalues)
    assert rep.origin_winding == 3 and rep.symmetric


def test_kdv_k2_matches_hill_and_index(kdv):
    p, orb, prof = kdv
    rep = floquet.eigs_on_Tk(p, prof, 2)
    mu_h, form_h = hill_bloch(p, prof, math.pi)
    B = rep.search_box[1]
    ref = sorted((m.imag, "+" if f > 0 else "-") for m, f in zip(mu_h, form_h) if abs(m.imag) < B)
    got = sorted((e.mu.imag, e.krein) for e in rep.eigenvalues if e.floquet_index == 1)
    assert [s for _, s in got] == [s for _, s in ref]
    np.testing.assert_allclose([y for y, _ in got], [y for y, _ in ref], atol=1e-8)
    total = index_total(orbit_jacobians(p, orb), 2).total
    assert rep.k_R + rep.k_C + rep.k_I_minus_found == total == 2


def test_mkdv_b_real_pair(mkdv_b):
    p, orb, prof = mkdv_b
    rep = floquet.eigs_on_Tk(p, prof, 1)
    real = sorted(e.mu.real for e in rep.eigenvalues if e.cls == "real")
    assert len(real) == 2 and real[0] == pytest.approx(-real[1], rel=1e-8) and real[1] > 0
    assert rep.k_R % 2 == 1
    jr = index_total(orbit_jacobians(p, orb), 1)
    assert jr.kR_parity == "odd"
    assert rep.k_R + rep.k_C + rep.k_I_minus_found == jr.total
    # the located eigenvalue is a periodic eigenvalue of the Fourier truncation too
    mu_h, _ = hill_bloch(p, prof, 0.0)
    assert np.min(np.abs(mu_h - real[1])) < 1e-6


def test_simple_band_positive_signature(kdv):
    p, _, prof = kdv
    for y in (0.5, 2.0):
        M = floquet.monodromy(p, prof, 1j * y).M
        ev, V = np.linalg.eig(M)
        i = int(np.argmin(np.abs(np.abs(ev) - 1)))
        assert floquet.krein_signature(p, prof, 1j * y, V[:, i]) == "+"


def test_conjugate_pair_equal_signature(kdv):
    p, _, prof = kdv
    s1 = floquet.krein_signature(p, prof, 0.03j, kappa=None)
    s2 = floquet.krein_signature(p, prof, -0.03j, kappa=None)
    assert s1 == s2


def test_triple_band_signatures_match_fourier_oracle(kdv):
    # at fixed kappa the three small imaginary eigenvalues carry two negative forms
    p, _, prof = kdv
    for kappa in (0.02, 0.05):
        mu_h, form_h = hill_bloch(p, prof, kappa)
        small = np.argsort(np.abs(mu_h))[:3]
        ref = sorted("+" if form_h[i] > 0 else "-" for i in small)
        got = sorted(floquet.krein_signature(p, prof, 1j * mu_h[i].imag, kappa=kappa) for i in small)
        assert got == ref == ["+", "-", "-"]


def test_krein_rejects_off_axis(kdv):
    p, _, prof = kdv
    with pytest.raises(NotOnAxis):
        floquet.krein_signature(p, prof, 0.1 + 0.5j)


@pytest.mark.parametrize("model,a,E,k,expect", [
    ("kdv", 0.0, -0.1, 1, 1), ("kdv", 0.0, -0.1, 2, 3),
    ("mkdv-focusing", 0.0, 0.2, 1, 2), ("mkdv-focusing", 0.0, 0.2, 2, 4),
])
def test_hill_negative_count(model, a, E, k, expect):
    p, _, prof = setup(model, a, E, N=512)
    assert floquet.count_negative_L(p, prof, k) == expect


@pytest.mark.parametrize("model,a,E", [("kdv", 0.0, -0.1), ("mkdv-focusing", 0.0, -0.1),
                                       ("kdv4", 0.0, -0.2), ("mkdv-focusing", 0.0, 0.5)])
def test_mi_probe_agrees_with_delta(model, a, E):
    p, orb, prof = setup(model, a, E)
    delta = orbit_jacobians(p, orb).delta_mi
    off = floquet.mi_probe(p, prof)
    assert all((n > 0) == (delta < 0) for n in off.values())
