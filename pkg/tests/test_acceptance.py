"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the terminal summary
lists the twelve criteria with their outcome and wall time.
"""
import csv
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from monitored_transport import cross_monitored_pair, filter_level_junction
from monitored_transport.analytic import (
    SingleLevelModel,
    TwoSiteModel,
    single_level_current,
    single_level_occupation,
    two_site_delta_limit,
    two_site_heat_current,
    two_site_occupations,
    two_site_small_gamma,
)
from monitored_transport.currents import (
    cooling_map,
    cop_value,
    differential_conductance,
    landauer_current,
    particle_current,
    power_curve,
    stopping_voltage,
    transport,
)
from monitored_transport.model import FlatBand, LorentzianFilter, Reservoir, single_level_junction, two_site_junction
from monitored_transport.oracle import oracle_transport

from conftest import random_junction

CALIBRATION = Path(__file__).parent / "calibration" / "oracle_richardson.csv"


def report(num, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")


def close(a, b, rel=1e-6, abs_=1e-10):
    return abs(a - b) <= max(abs_, rel * abs(b))


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


# --- 1 ---------------------------------------------------------------------------


def _random_single_level(rng):
    res = [
        Reservoir(LorentzianFilter(rng.uniform(0.5, 1.5), rng.uniform(0.3, 1.0), rng.uniform(-2, 2)),
                  mu=rng.uniform(-1, 1), T=rng.uniform(0, 1))
        for _ in range(2)
    ]
    return single_level_junction(rng.uniform(-1.5, 1.5), res[0], res[1], rng.uniform(0.1, 5.0))


def _random_two_site(rng):
    eps = rng.uniform(-3, 6, 2)
    res = [
        Reservoir(LorentzianFilter(rng.uniform(0.5, 1.5), rng.uniform(0.3, 1.0), e + rng.uniform(-0.5, 0.5)),
                  mu=rng.uniform(-1, 1), T=rng.uniform(0.1, 1.5))
        for e in eps
    ]
    return two_site_junction(eps[0], eps[1], res[0], res[1], rng.uniform(0.1, 5.0))


@pytest.mark.criterion(1, "analytic equivalence on 20 + 20 random junctions")
def test_criterion_01_analytic_equivalence():
    rng = np.random.default_rng(1)
    worst = []
    with Timer() as t:
        for _ in range(20):
            j = _random_single_level(rng)
            m = SingleLevelModel.from_junction(j)
            res = transport(j)
            n = res.D[0, 0].real
            _, _, J0 = single_level_current(m)
            worst.append(("single n", n, single_level_occupation(m)))
            worst.append(("single J0", res.through_current, J0))
        for _ in range(20):
            j = _random_two_site(rng)
            m = TwoSiteModel.from_junction(j)
            res = transport(j)
            nL, nR = two_site_occupations(m)
            mo = m.moments()
            # particle analogue of the heat identity: J0_R = 2 gamma (I_R <n_L> - F_R)
            J0 = 2 * m.gamma * (mo["IR"] * nL - mo["FR"])
            worst.append(("pair nL", res.D[0, 0].real, nL))
            worst.append(("pair nR", res.D[1, 1].real, nR))
            worst.append(("pair J0", res.through_current, J0))
            worst.append(("pair J1_R", res.current("R", 1), two_site_heat_current(m)))
    bad = [w for w in worst if not close(w[1], w[2])]
    used = max(abs(a - b) / max(1e-10, 1e-6 * abs(b)) for _, a, b in worst)
    ok = not bad and t.elapsed <= 120
    report(1, ok, f"{len(worst)} comparisons, worst deviation {used:.1e} of the allowed tolerance, {t.elapsed:.1f}s")
    assert not bad, bad[:3]
    assert t.elapsed <= 120


# --- 2 ---------------------------------------------------------------------------


@pytest.mark.criterion(2, "Landauer limit on 10 random junctions")
def test_criterion_02_landauer_limit():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(10):
        j = random_junction(rng, gamma=0.0)
        res = transport(j)
        for r, name in enumerate("LR"):
            for z in (0, 1):
                worst = max(worst, abs(res.current(name, z) - landauer_current(j, r, z)))
    report(2, worst <= 1e-10, f"max |engine - Landauer| = {worst:.2e}")
    assert worst <= 1e-10


# --- 3 ---------------------------------------------------------------------------


@pytest.mark.criterion(3, "particle and energy conservation, physical D")
def test_criterion_03_conservation():
    rng = np.random.default_rng(3)
    cases = [random_junction(rng) for _ in range(30)]
    cases += [random_junction(rng, gamma=0.0) for _ in range(15)]
    cases += [filter_level_junction(g) for g in (0.01, 0.1, 1.0, 10.0, 100.0)]
    cases += [cross_monitored_pair(g) for g in (0.01, 0.1, 1.0, 10.0)]
    particle = energy = herm = spec_out = 0.0
    for j in cases:
        res = transport(j)
        particle = max(particle, abs(res.current("L", 0) + res.current("R", 0)))
        if j.gamma == 0:
            energy = max(energy, abs(res.energy_current(0) + res.energy_current(1)))
        herm = max(herm, np.max(np.abs(res.D - res.D.conj().T)))
        ev = np.linalg.eigvalsh(res.D)
        spec_out = max(spec_out, -ev[0], ev[-1] - 1)
    ok = particle <= 1e-9 and energy <= 1e-9 and herm <= 1e-9 and spec_out <= 1e-9
    report(3, ok, f"{len(cases)} junctions: particle {particle:.1e}, energy(gamma=0) {energy:.1e}, "
                  f"hermiticity {herm:.1e}, spectrum excursion {max(spec_out, 0):.1e}")
    assert ok


# --- 4 ---------------------------------------------------------------------------


@pytest.mark.criterion(4, "flat-band null current")
def test_criterion_04_flat_band_null():
    worst = 0.0
    for gamma in (0.1, 1.0, 10.0):
        for eps, gl, gr in [(0.0, 0.3, 0.3), (0.7, 0.3, 0.3), (-1.2, 0.2, 0.6), (2.5, 1.0, 0.1)]:
            j = single_level_junction(eps, Reservoir(FlatBand(gl, wide_band=True)),
                                      Reservoir(FlatBand(gr, wide_band=True)), gamma)
            worst = max(worst, abs(transport(j, heat=False).through_current))
    report(4, worst <= 1e-9, f"max |J0| = {worst:.1e}")
    assert worst <= 1e-9


# --- 5 ---------------------------------------------------------------------------


def _slope(gammas):
    J = [particle_current(filter_level_junction(g)) for g in gammas]
    return np.polyfit(np.log(gammas), np.log(np.abs(J)), 1)[0]


@pytest.mark.criterion(5, "unbiased current versus monitoring strength")
def test_criterion_05_current_peak_and_slopes():
    with Timer() as t:
        gammas = np.geomspace(1e-3, 1e3, 61)
        J = np.array([particle_current(filter_level_junction(g)) for g in gammas])
        k = int(np.argmax(np.abs(J)))
        unimodal = np.all(np.diff(np.abs(J[: k + 1])) > 0) and np.all(np.diff(np.abs(J[k:])) < 0)
        small = _slope(np.geomspace(1e-3, 1e-2, 6))
        large = _slope(np.geomspace(1e2, 1e3, 6))
        temps = [abs(particle_current(filter_level_junction(1.0, T=T))) for T in (0.0, 0.2, 0.5, 1.0)]
    checks = {
        "nonzero": np.all(np.abs(J) > 0),
        "single peak": unimodal,
        "argmax in [0.3, 3]": 0.3 <= gammas[k] <= 3.0,
        "small slope 1.00 +- 0.05": abs(small - 1) <= 0.05,
        "large slope -1.0 +- 0.1": abs(large + 1) <= 0.1,
        "decreasing with T": all(a > b for a, b in zip(temps, temps[1:])),
        "runtime <= 180 s": t.elapsed <= 180,
    }
    ok = all(checks.values())
    report(5, ok, f"argmax {gammas[k]:.3g}, slopes {small:.4f} / {large:.4f}, "
                  f"|J0|(T) {[f'{x:.4g}' for x in temps]}, {t.elapsed:.1f}s; failed: {[c for c, v in checks.items() if not v]}")
    assert ok


# --- 6 ---------------------------------------------------------------------------


def _peaks(x, y):
    d = np.diff(y)
    return x[1:-1][(d[:-1] > 0) & (d[1:] <= 0)]


@pytest.mark.criterion(6, "conductance scan: three peaks, off-resonance increase")
def test_criterion_06_conductance():
    mus = np.linspace(-3.0, 3.0, 121)
    Gw = np.array([differential_conductance(filter_level_junction(0.1), m) for m in mus])
    peaks = _peaks(mus, Gw)
    weak = {m: differential_conductance(filter_level_junction(0.1), m) for m in (-1.48, 0.0, 1.48)}
    strong = {m: differential_conductance(filter_level_junction(5.0), m) for m in (-1.48, 0.0, 1.48)}
    ok = (
        peaks.size == 3
        and strong[0.0] < weak[0.0]
        and strong[-1.48] > weak[-1.48]
        and strong[1.48] > weak[1.48]
    )
    report(6, ok, f"peaks at {np.round(peaks, 3).tolist()}; G(gamma=0.1) {[f'{v:.4g}' for v in weak.values()]}, "
                  f"G(gamma=5) {[f'{v:.4g}' for v in strong.values()]} at mu = -1.48, 0, 1.48")
    assert ok


# --- 7 ---------------------------------------------------------------------------


def _pmax(j, stop):
    f = lambda d: -d * particle_current(j.with_potentials(-d / 2, d / 2))
    r = minimize_scalar(f, bounds=(0.0, stop), method="bounded", options={"xatol": 1e-8})
    return -r.fun


@pytest.mark.criterion(7, "power curve zeros and linear-response comparison")
@pytest.mark.xfail(strict=True, reason="weak-monitoring Pmax equals J0^2/(4G), half the J0^2/(2G) target")
def test_criterion_07_power():
    out = {}
    for g in (0.1, 1.0):
        j = filter_level_junction(g)
        J0 = particle_current(j)
        G = differential_conductance(j, 0.0)
        stop = stopping_voltage(j)
        pts = power_curve(j, [0.0, stop], conductance=G)
        out[g] = dict(J0=J0, G=G, stop=stop, P0=pts[0].power, Pstop=pts[1].power, pmax=_pmax(j, stop))
    w, s = out[0.1], out[1.0]
    ratio_2G = w["pmax"] / (w["J0"] ** 2 / (2 * w["G"]))
    ratio_4G = w["pmax"] / (w["J0"] ** 2 / (4 * w["G"]))
    checks = {
        "P(0) = 0": all(o["P0"] == 0 for o in out.values()),
        "P(stop) = 0": all(abs(o["Pstop"]) <= 1e-10 for o in out.values()),
        "gamma=1 Pmax below parabola peak": s["pmax"] < s["J0"] ** 2 / (4 * s["G"]),
        "gamma=1 stop below J0/G": s["stop"] < s["J0"] / s["G"],
        "gamma=0.1 Pmax within 5% of J0^2/(2G)": abs(ratio_2G - 1) <= 0.05,
    }
    ok = all(checks.values())
    report(7, ok, f"gamma=0.1: Pmax / (J0^2/2G) = {ratio_2G:.4f}, Pmax / (J0^2/4G) = {ratio_4G:.4f}; "
                  f"gamma=1: Pmax {s['pmax']:.4g} vs {s['J0'] ** 2 / (4 * s['G']):.4g}, "
                  f"stop {s['stop']:.4g} vs {s['J0'] / s['G']:.4g}; failed: {[c for c, v in checks.items() if not v]}")
    # the exact maximum of dmu J0 - dmu^2 G is J0^2 / (4G); the 2G clause cannot hold
    assert ok


# --- 8 ---------------------------------------------------------------------------


@pytest.mark.criterion(8, "cooling region at the black dot shrinks with gamma")
def test_criterion_08_cooling_map():
    dot = transport(cross_monitored_pair(0.1)).current("R", 1)
    grid = np.linspace(-12.0, 12.0, 50)
    maps = cooling_map(cross_monitored_pair(0.1), grid, grid, [0.1, 1.0])
    cells = {g: int(np.sum(m < 0)) for g, m in maps.items()}
    ok = dot < 0 and cells[1.0] < cells[0.1]
    report(8, ok, f"J1_R(10, 3; gamma=0.1) = {dot:.4g}; cooling cells {cells[0.1]} (gamma=0.1) vs {cells[1.0]} (gamma=1)")
    assert ok


# --- 9 ---------------------------------------------------------------------------


@pytest.mark.criterion(9, "heat current peak and sign flip with temperature bias")
def test_criterion_09_heat_vs_gamma():
    gammas = np.geomspace(1e-3, 1e2, 51)
    J = np.array([transport(cross_monitored_pair(g)).current("R", 1) for g in gammas])
    # cooling branch: from weak monitoring up to the first sign change
    end = int(np.argmax(J > 0)) if np.any(J > 0) else J.size
    mag = np.abs(J[:end])
    k = int(np.argmax(mag))
    peaked = 0 < k < end - 1 and np.all(np.diff(mag[: k + 1]) > 0) and np.all(np.diff(mag[k:]) < 0)

    heat = lambda TL: transport(cross_monitored_pair(0.1, T_left=TL)).current("R", 1)
    temps = [1.0, 1.5, 2.0, 3.0, 4.0, 5.0]
    signs = [np.sign(heat(T)) for T in temps]
    flip = signs[0] < 0 and signs[-1] > 0
    T_star = brentq(heat, 1.0, 5.0, xtol=1e-6) if flip else float("nan")
    ok = peaked and flip
    report(9, ok, f"|J1_R| peak at gamma = {gammas[k]:.3g} on the cooling branch (first heating at "
                  f"{gammas[end] if end < J.size else float('nan'):.3g}); sign flips at T_L = {T_star:.4g}")
    assert ok


# --- 10 --------------------------------------------------------------------------


@pytest.mark.criterion(10, "weak-monitoring cooling law")
def test_criterion_10_small_gamma():
    m = TwoSiteModel.from_junction(cross_monitored_pair(0.01))
    exact = two_site_heat_current(m)
    approx = two_site_small_gamma(m)
    sharp = two_site_delta_limit(m)
    dev = abs(approx / exact - 1)
    ok = dev <= 0.05 and np.sign(exact) == np.sign(sharp)
    report(10, ok, f"exact {exact:.5g}, weak-monitoring {approx:.5g} ({dev:.2%}), sharp-level sign {np.sign(sharp):+.0f}")
    assert ok


# --- 11 --------------------------------------------------------------------------


def _calibrated_tolerance():
    # frozen from the committed calibration run: worst 400/200 extrapolation error, rounded up
    with CALIBRATION.open() as fh:
        rows = [r for r in csv.DictReader(fh) if int(r["modes"]) == 400]
    return max(abs(float(r["rel_error_richardson"])) for r in rows)


@pytest.mark.criterion(11, "finite-lead oracle converges to the continuum current")
def test_criterion_11_oracle():
    tol = 0.02
    assert _calibrated_tolerance() <= tol
    lines, ok = [], True
    with Timer() as t:
        for g in (0.3, 1.0, 3.0):
            j = filter_level_junction(g)
            ref = transport(j).through_current
            vals = {}
            for M in (100, 200, 400):
                oc, _ = oracle_transport(j, M)
                assert oc.mismatch <= 1e-8
                vals[M] = oc.current(1, 0)
            err = [abs(vals[M] / ref - 1) for M in (100, 200, 400)]
            rich = abs((2 * vals[400] - vals[200]) / ref - 1)
            ok &= err[0] > err[1] > err[2] and rich <= tol
            lines.append(f"gamma={g}: raw {err[0]:.2%} > {err[1]:.2%} > {err[2]:.2%}, extrapolated {rich:.3%}")
    ok &= t.elapsed <= 600
    report(11, ok, "; ".join(lines) + f"; {t.elapsed:.0f}s")
    assert ok


# --- 12 --------------------------------------------------------------------------


@pytest.mark.criterion(12, "COP maximum near the critical monitoring strength")
@pytest.mark.xfail(strict=True, reason="COP vanishes where J1_R changes sign and grows toward weak monitoring")
def test_criterion_12_cop_locator():
    tmpl = cross_monitored_pair(0.1)

    def heats(g):
        res = transport(tmpl.replace(gamma=g))
        return res.current("R", 1), res.current("L", 1)

    gammas = np.geomspace(1e-2, 1e2, 41)
    hr = np.array([heats(g) for g in gammas])
    cool = hr[:, 0] < 0
    cop = np.array([cop_value(r, l) for r, l in hr])
    # COP is only meaningful while the right reservoir is being cooled
    k = int(np.argmax(np.where(cool, cop, -np.inf)))
    i = int(np.argmax(~cool))
    g_cross = brentq(lambda g: heats(g)[0], gammas[i - 1], gammas[i], xtol=1e-10)
    factor = max(gammas[k] / g_cross, g_cross / gammas[k])
    ok = factor <= 3
    report(12, ok, f"argmax COP on the cooling branch at gamma = {gammas[k]:.3g} (COP {cop[k]:.3f}), "
                   f"J1_R crosses zero at gamma = {g_cross:.4g}; ratio {factor:.1f} (COP -> 0 at the crossing)")
    assert ok
