import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monitored_transport import filter_level_junction
from monitored_transport.errors import SingularGreensError
from monitored_transport.greens import (
    FrequencyKernel,
    dressed_greens,
    reservoir_self_energy,
    spectral_function,
    transmission,
)
from monitored_transport.model import FlatBand, Junction, LorentzianFilter, Reservoir, single_level_junction

from conftest import random_junction


def wide(g0, **kw):
    return Reservoir(FlatBand(g0, wide_band=True), **kw)


def test_lorentzian_self_energy_at_resonance():
    res = Reservoir(LorentzianFilter(0.8, 0.4, 1.2), coupling=((1, 1.0),))
    sig, gam, kel = reservoir_self_energy(res, 1.2, 2)
    assert sig[1, 1] == pytest.approx(-1j * 0.64 / 0.4, abs=1e-15)
    assert sig[1, 1].real == 0.0
    assert sig[0, 0] == 0 and gam[0, 0] == 0


def test_keldysh_vanishes_at_mu():
    res = Reservoir(LorentzianFilter(1.0, 0.5), mu=0.3, T=0.4)
    _, _, kel = reservoir_self_energy(res, 0.3, 1)
    assert np.all(kel == 0)


def test_keldysh_formula_and_zero_temperature_sign(rng):
    w = rng.uniform(-3, 3, 20)
    res = Reservoir(LorentzianFilter(1.0, 0.5, 0.2), mu=0.1, T=0.3)
    _, gam, kel = reservoir_self_energy(res, w, 1)
    np.testing.assert_allclose(kel[:, 0, 0], -2j * gam[:, 0, 0] * np.tanh((w - 0.1) / 0.6), atol=1e-14)
    cold = Reservoir(LorentzianFilter(1.0, 0.5, 0.2), mu=0.1, T=0.0)
    _, gam, kel = reservoir_self_energy(cold, w, 1)
    np.testing.assert_allclose(kel[:, 0, 0], -2j * gam[:, 0, 0] * np.sign(w - 0.1), atol=1e-14)


def test_gamma_is_minus_imag_sigma(rng):
    w = rng.uniform(-6, 6, 50)
    for hyb in [LorentzianFilter(1.1, 0.3, -0.4), FlatBand(0.7, half_width=2.0)]:
        res = Reservoir(hyb, coupling=((0, 0.8 + 0.2j), (2, -0.5)))
        sig, gam, _ = reservoir_self_energy(res, w, 3)
        np.testing.assert_allclose(gam, -(sig - np.conj(np.swapaxes(sig, -1, -2))) / 2j, atol=1e-14)
        np.testing.assert_allclose(gam, hyb.value(w)[:, None, None] * res.projector(3), atol=1e-14)
        for k in range(w.size):
            assert np.min(np.linalg.eigvalsh(gam[k])) >= -1e-14


def test_wide_band_single_level():
    g0, gamma, eps = 0.3, 0.7, 0.2
    j = single_level_junction(eps, wide(g0), wide(g0), gamma)
    w = np.linspace(-3, 3, 11)
    g = dressed_greens(j, w).ret[:, 0, 0]
    np.testing.assert_allclose(g, 1 / (w - eps + 1j * (2 * g0 + gamma)), rtol=1e-14)


def test_strong_monitoring_scales_inverse(rng):
    j = random_junction(rng, n=3)
    O = np.asarray(j.O)
    # make O^2 invertible so every entry carries the 1/gamma scaling
    j = j.replace(O=O + 2.0 * np.eye(3))
    g3 = dressed_greens(j.replace(gamma=1e3), 0.4).ret
    g4 = dressed_greens(j.replace(gamma=1e4), 0.4).ret
    ratio = np.abs(g3) / np.abs(g4)
    assert np.all(np.abs(ratio - 10) < 0.1)


def test_filter_level_resolvent_matches_scalar_form():
    j = filter_level_junction(1.0)
    w = 0.0
    sl = j.left.hybridization.retarded(w)
    sr = j.right.hybridization.retarded(w)
    expected = 1 / (w - 0.0 - sl - sr + 1j * 1.0)
    assert dressed_greens(j, w).ret[0, 0] == pytest.approx(expected, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-5, 5))
def test_greens_invariants(seed, w):
    rng = np.random.default_rng(seed)
    j = random_junction(rng)
    gf = dressed_greens(j, w)
    np.testing.assert_allclose(gf.adv, gf.ret.conj().T, atol=1e-12)
    n = j.n_sites
    sig = sum(reservoir_self_energy(r, w, n)[0] for r in j.reservoirs)
    O = np.asarray(j.O)
    lhs = (w * np.eye(n) - j.h - sig + 1j * j.gamma * O @ O) @ gf.ret
    assert np.max(np.abs(lhs - np.eye(n))) < 1e-10
    A = spectral_function(j, w)
    np.testing.assert_allclose(A, A.conj().T, atol=1e-13)
    assert np.min(np.linalg.eigvalsh(A)) >= -1e-12
    assert transmission(j, w) >= -1e-14


def _elastic_pair(j, w):
    n = j.n_sites
    g = dressed_greens(j, w).ret
    gl = reservoir_self_energy(j.left, w, n)[1]
    gr = reservoir_self_energy(j.right, w, n)[1]
    return np.trace(gl @ g @ gr @ g.conj().T), np.trace(gr @ g @ gl @ g.conj().T)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-5, 5))
def test_elastic_kernel_reciprocity_without_monitoring(seed, w):
    # unitarity: G^-1 - G^-dagger = 2i (Gamma_L + Gamma_R) when gamma = 0
    j = random_junction(np.random.default_rng(seed), gamma=0.0)
    a, b = _elastic_pair(j, w)
    assert abs(a.imag) <= 1e-12 and abs(b.imag) <= 1e-12
    assert a.real == pytest.approx(b.real, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-5, 5))
def test_elastic_kernel_reciprocity_real_symmetric(seed, w):
    # with monitoring the lifetime breaks unitarity; G = G^T still gives equality
    rng = np.random.default_rng(seed)
    j = random_junction(rng)
    real = lambda res: dataclasses.replace(res, coupling=tuple((i, abs(c)) for i, c in res.coupling))
    j = j.replace(h=np.real(j.h), O=np.real(j.O), left=real(j.left), right=real(j.right))
    a, b = _elastic_pair(j, w)
    assert a.real == pytest.approx(b.real, abs=1e-12)


def test_elastic_kernel_not_reciprocal_in_general():
    # complex hoppings plus monitoring: the two orderings genuinely differ
    j = random_junction(np.random.default_rng(0), n=3, gamma=1.0)
    a, b = _elastic_pair(j, 0.0)
    assert abs(a.real - b.real) > 1e-4


def test_single_orbital_spectral_closed_form(rng):
    j = filter_level_junction(0.6, eps_d=0.25)
    w = rng.uniform(-4, 4, 25)
    sl = j.left.hybridization.retarded(w)
    sr = j.right.hybridization.retarded(w)
    tot = j.left.hybridization.value(w) + j.right.hybridization.value(w) + 0.6
    expected = tot / np.abs(w - 0.25 - sl - sr + 0.6j) ** 2 / np.pi
    np.testing.assert_allclose(spectral_function(j, w)[:, 0, 0].real, expected, rtol=1e-12)


def test_spectral_peak_flat_band():
    g0 = 0.4
    j = single_level_junction(0.3, wide(g0), wide(g0), 0.0)
    assert spectral_function(j, 0.3)[0, 0].real == pytest.approx(1 / (2 * np.pi * g0), rel=1e-14)


def test_trace_sum_rule_multi_site(rng):
    from monitored_transport.numerics import integrate_scalar

    j = random_junction(rng, n=3, gamma=0.4)
    res = integrate_scalar(
        lambda w: np.trace(spectral_function(j, w), axis1=1, axis2=2).real,
        breakpoints=j.breakpoints(),
        scale=j.energy_scale(),
    )
    assert res.value == pytest.approx(3.0, abs=1e-8)


def test_three_spectral_maxima_at_weak_monitoring():
    j = filter_level_junction(0.1)
    w = np.linspace(-4, 4, 8001)
    A = spectral_function(j, w)[:, 0, 0].real
    d = np.diff(A)
    peaks = w[1:-1][(d[:-1] > 0) & (d[1:] <= 0)]
    assert peaks.size == 3
    np.testing.assert_allclose(np.sort(peaks), [-1.9, 0.0, 1.9], atol=0.2)


def test_resonance_suppressed_by_monitoring():
    vals = [spectral_function(filter_level_junction(g), 0.0)[0, 0].real for g in [0.0, 0.1, 0.5, 1, 5, 50]]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_transmission_flat_band():
    g0 = 0.25
    j = single_level_junction(-0.4, wide(g0), wide(g0), 0.0)
    assert transmission(j, -0.4) == pytest.approx(1.0, rel=1e-14)
    for gamma in [0.1, 1.0, 3.0]:
        t = transmission(j.replace(gamma=gamma), -0.4)
        assert t == pytest.approx(4 * g0**2 / (2 * g0 + gamma) ** 2, rel=1e-13)
        assert t < 1


@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0, 5.0])
def test_filter_level_transmission_bounded(gamma):
    w = np.linspace(-10, 10, 1000)
    t = transmission(filter_level_junction(gamma), w)
    assert np.all(t <= 1 + 1e-12) and np.all(t >= 0)


def test_singular_closed_channel_names_frequency():
    # site 1 is isolated: at gamma = 0 the resolvent has a real pole at its level
    lf = LorentzianFilter(1.0, 0.5)
    j = Junction(
        h=np.diag([0.0, 0.75]), O=np.eye(2), left=Reservoir(lf), right=Reservoir(lf), gamma=0.0
    )
    with pytest.raises(SingularGreensError) as info:
        dressed_greens(j, 0.75)
    assert info.value.omega == 0.75
    assert "0.75" in str(info.value)
    # any monitoring of that site removes the pole
    assert np.all(np.isfinite(dressed_greens(j.replace(gamma=0.1), 0.75).ret))


def test_frequency_kernel_vectorized_matches_pointwise(rng):
    j = random_junction(rng, n=2)
    fk = FrequencyKernel(j)
    w = rng.uniform(-3, 3, 7)
    g, gl, gr = fk(w)
    for k in range(w.size):
        np.testing.assert_allclose(g[k], dressed_greens(j, w[k]).ret, rtol=1e-13)
