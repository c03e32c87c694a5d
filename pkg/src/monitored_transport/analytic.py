"""Closed forms for the two worked models.

Single monitored level (O = n):

    A(w)   = (1/pi) (Gamma_L + Gamma_R + gamma) / |w - eps_d - Sigma_L - Sigma_R + i gamma|^2
    P_r(w) = Gamma_r / (Gamma_L + Gamma_R + gamma)

Two uncoupled levels with cross-correlation monitor (O = sigma_x):

    A_r(w) = (1/pi) (Gamma_r + gamma) / |w - eps_r - Sigma_r + i gamma|^2
    P_r(w) = Gamma_r / (Gamma_r + gamma)

Every double frequency integral is a sum of products of single integrals,
so all needed moments are gathered in one vectorized quadrature per model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominatorError, InvalidParameterError
from .model import Junction, Reservoir, ensure_valid
from .numerics import QuadratureSpec, integrate_matrix

NORM_FLOOR = 1e-14


def _layout(eps, reservoirs, gamma):
    pts = list(eps)
    scales = [1e-3, gamma] + [abs(e) for e in eps]
    for res in reservoirs:
        feats, widths = res.hybridization.features()
        pts.extend(feats)
        pts.append(res.mu)
        scales.extend(abs(p) for p in feats)
        scales.extend(widths)
        scales.extend([abs(res.mu), res.T, res.hybridization.scale])
    return sorted(set(float(p) for p in pts)), float(max(scales))


@dataclass(frozen=True)
class SingleLevelModel:
    eps_d: float
    left: Reservoir
    right: Reservoir
    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise InvalidParameterError("negative monitoring strength")

    @classmethod
    def from_junction(cls, j: Junction) -> "SingleLevelModel":
        ensure_valid(j)
        if j.n_sites != 1:
            raise InvalidParameterError("single-level model needs a 1-site junction")
        o2 = float(abs(j.O[0, 0]) ** 2)
        wl = sum(w for _, w in j.left.coupling)
        wr = sum(w for _, w in j.right.coupling)
        if abs(abs(wl) - 1) > 1e-12 or abs(abs(wr) - 1) > 1e-12:
            raise InvalidParameterError("single-level model assumes unit coupling weights")
        return cls(float(j.h[0, 0].real), j.left, j.right, j.gamma * o2)

    def parts(self, w):
        """A, P_L, P_R, f_L, f_R on a frequency array."""
        sl = self.left.hybridization.retarded(w)
        sr = self.right.hybridization.retarded(w)
        gl = np.asarray(self.left.hybridization.value(w), dtype=float)
        gr = np.asarray(self.right.hybridization.value(w), dtype=float)
        tot = gl + gr + self.gamma
        A = tot / np.abs(w - self.eps_d - sl - sr + 1j * self.gamma) ** 2 / np.pi
        with np.errstate(invalid="ignore", divide="ignore"):
            pl = np.where(tot > 0, gl / tot, 0.0)
            pr = np.where(tot > 0, gr / tot, 0.0)
        return A, pl, pr, np.asarray(self.left.fermi(w)), np.asarray(self.right.fermi(w))

    def spectral_function(self, w):
        return self.parts(np.asarray(w, dtype=float))[0]

    def moments(self, spec: QuadratureSpec = QuadratureSpec()):
        """Dict of the single integrals entering the occupation and current."""

        def integrand(w):
            A, pl, pr, fl, fr = self.parts(w)
            return np.stack([
                A,
                A * pl,
                A * pr,
                A * pl * fl,
                A * pr * fr,
                2 * A * self._elastic_weight(w) * (fl - fr),
            ], axis=1)

        pts, scale = _layout([self.eps_d], (self.left, self.right), self.gamma)
        res = integrate_matrix(integrand, spec, breakpoints=pts, scale=scale)
        v = res.value
        return {
            "norm": v[0], "IL": v[1], "IR": v[2], "FL": v[3], "FR": v[4],
            "elastic": v[5], "error": res.error,
        }

    def _elastic_weight(self, w):
        gl = np.asarray(self.left.hybridization.value(w), dtype=float)
        gr = np.asarray(self.right.hybridization.value(w), dtype=float)
        tot = gl + gr + self.gamma
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(tot > 0, gl * gr / tot, 0.0)


def single_level_occupation(m: SingleLevelModel, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """<n> = int A (f_L P_L + f_R P_R) / int A (P_L + P_R)."""
    mo = m.moments(spec)
    den = mo["IL"] + mo["IR"]
    if den < NORM_FLOOR:
        raise DegenerateDenominatorError("level decoupled from both reservoirs")
    return float((mo["FL"] + mo["FR"]) / den)


def single_level_current(m: SingleLevelModel, spec: QuadratureSpec = QuadratureSpec()):
    """(elastic, inelastic, total) particle current into the right reservoir."""
    mo = m.moments(spec)
    den = mo["IL"] + mo["IR"]
    if den < NORM_FLOOR:
        raise DegenerateDenominatorError("level decoupled from both reservoirs")
    # int int A A' P_L P'_R (f_L - f'_R) = F_L I_R - I_L F_R
    inel = 2 * m.gamma * (mo["FL"] * mo["IR"] - mo["IL"] * mo["FR"]) / den
    el = float(mo["elastic"])
    return el, float(inel), float(el + inel)


@dataclass(frozen=True)
class TwoSiteModel:
    eps_left: float
    eps_right: float
    left: Reservoir
    right: Reservoir
    gamma: float

    def __post_init__(self):
        if self.gamma < 0:
            raise InvalidParameterError("negative monitoring strength")

    @classmethod
    def from_junction(cls, j: Junction) -> "TwoSiteModel":
        ensure_valid(j)
        if j.n_sites != 2:
            raise InvalidParameterError("two-site model needs a 2-site junction")
        h, O = np.asarray(j.h), np.asarray(j.O)
        if abs(h[0, 1]) > 0:
            raise InvalidParameterError("two-site model has no inter-site hopping")
        if abs(O[0, 0]) > 0 or abs(O[1, 1]) > 0 or abs(O[0, 1]) == 0:
            raise InvalidParameterError("two-site model needs a purely off-diagonal monitor")
        if [i for i, _ in j.left.coupling] != [0] or [i for i, _ in j.right.coupling] != [1]:
            raise InvalidParameterError("left reservoir must couple to site 0 and right to site 1 only")
        for res in j.reservoirs:
            if abs(abs(res.coupling[0][1]) - 1) > 1e-12:
                raise InvalidParameterError("two-site model assumes unit coupling weights")
        return cls(float(h[0, 0].real), float(h[1, 1].real), j.left, j.right, j.gamma * float(abs(O[0, 1]) ** 2))

    @property
    def reservoirs(self):
        return (self.left, self.right)

    @property
    def levels(self):
        return (self.eps_left, self.eps_right)

    def parts(self, w, r):
        """A_r, P_r, f_r on a frequency array."""
        res = self.reservoirs[r]
        sig = res.hybridization.retarded(w)
        g = np.asarray(res.hybridization.value(w), dtype=float)
        tot = g + self.gamma
        A = tot / np.abs(w - self.levels[r] - sig + 1j * self.gamma) ** 2 / np.pi
        with np.errstate(invalid="ignore", divide="ignore"):
            P = np.where(tot > 0, g / tot, 0.0)
        return A, P, np.asarray(res.fermi(w))

    def bare_spectral(self, w, r):
        """A_r at gamma = 0 (its gamma-broadened tails would spoil energy moments)."""
        res = self.reservoirs[r]
        sig = res.hybridization.retarded(w)
        g = np.asarray(res.hybridization.value(w), dtype=float)
        return g / np.abs(w - self.levels[r] - sig) ** 2 / np.pi

    def moments(self, spec: QuadratureSpec = QuadratureSpec()):
        muR = self.right.mu

        def integrand(w):
            AL, PL, fL = self.parts(w, 0)
            AR, PR, fR = self.parts(w, 1)
            x = w - muR
            AR0 = self.bare_spectral(w, 1)
            return np.stack([
                AL, AR,
                AL * PL, AR * PR,
                AL * PL * fL, AR * PR * fR,
                x * AR * PR, x * AR * PR * fR,
                x * AR0, x * AR0 * fR,
            ], axis=1)

        pts, scale = _layout(self.levels, self.reservoirs, self.gamma)
        res = integrate_matrix(integrand, spec, breakpoints=pts, scale=scale)
        keys = ["normL", "normR", "IL", "IR", "FL", "FR", "Q", "Qf", "Q0", "Q0f"]
        out = dict(zip(keys, map(float, res.value)))
        out["error"] = res.error
        return out


def _denominator(mo):
    N = mo["IL"] + mo["IR"] - mo["IL"] * mo["IR"]
    if abs(N) < NORM_FLOOR:
        raise DegenerateDenominatorError(f"two-site denominator N = {N:.3e} vanishes")
    return N


def _occupations(mo):
    N = _denominator(mo)
    nL = (mo["FL"] + (1 - mo["IL"]) * mo["FR"]) / N
    nR = (mo["FR"] + (1 - mo["IR"]) * mo["FL"]) / N
    return nL, nR


def two_site_occupations(m: TwoSiteModel, spec: QuadratureSpec = QuadratureSpec()):
    """(<n_L>, <n_R>) from the diagonal self-consistency n_r = F_r + (1 - I_r) n_rbar.

    F_r = int A_r P_r f_r, I_r = int A_r P_r, N = I_L + I_R - I_L I_R.
    """
    return _occupations(m.moments(spec))


def two_site_heat_current(m: TwoSiteModel, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Heat current into the right reservoir.

    J1_R = (2 gamma / N) [Q F_L - Qf I_L + (1 - I_L)(Q F_R - Qf I_R)]
    with Q = int (w - mu_R) A_R P_R and Qf the same with f_R inserted.
    """
    mo = m.moments(spec)
    N = _denominator(mo)
    Q, Qf = mo["Q"], mo["Qf"]
    bracket = Q * mo["FL"] - Qf * mo["IL"] + (1 - mo["IL"]) * (Q * mo["FR"] - Qf * mo["IR"])
    return float(2 * m.gamma * bracket / N)


def two_site_small_gamma(m: TwoSiteModel, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Leading order in gamma: 2 gamma int (w - mu_R) A_R [<n_L> - f_R].

    P_r -> 1 and A_R is taken at gamma = 0 (with its gamma-broadened tails the
    energy moment would diverge logarithmically); <n_L> is the occupation of
    the left level.
    """
    mo = m.moments(spec)
    nL, _ = _occupations(mo)
    return float(2 * m.gamma * (mo["Q0"] * nL - mo["Q0f"]))


def two_site_heat_from_occupation(m: TwoSiteModel, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Exact rewriting J1_R = 2 gamma int (w - mu_R) A_R P_R [<n_L> - f_R]."""
    mo = m.moments(spec)
    nL, _ = _occupations(mo)
    return float(2 * m.gamma * (mo["Q"] * nL - mo["Qf"]))


def two_site_delta_limit(m: TwoSiteModel, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Sharp-level estimate 2 gamma (eps_R - mu_R)(<n_L> - <n_R>)."""
    nL, nR = two_site_occupations(m, spec)
    return float(2 * m.gamma * (m.eps_right - m.right.mu) * (nL - nR))
