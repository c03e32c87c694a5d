"""Exact particle and heat currents with their elastic/inelastic split.

For reservoir r (and rbar the other one), with zeta = 0 (particles) or
zeta = 1 (heat), the current flowing *into* r is

    J_r = (2/pi) int (w - mu_r)^zeta (f_rbar - f_r) tr[Gamma_r G^R Gamma_rbar G^A]
        + gamma (2/pi) int (w - mu_r)^zeta tr[Gamma_r G^R O (D - f_r) O G^A].

Reservoir labels are "L"/"R" (or 0/1). Biases follow two conventions, kept
in one place here: the conductance is dJ_R/d(mu_L - mu_R), while power
curves use dmu = mu_R - mu_L so that P = dmu * J_R > 0 means work is
extracted against the bias.
"""
from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate as sp_integrate
from scipy.optimize import brentq

from . import kernels
from .errors import (
    ConsistencyError,
    InvalidParameterError,
    NoStoppingVoltageError,
    UndefinedCOPError,
)
from .greens import FrequencyKernel, reservoir_self_energy
from .model import Junction, ensure_valid
from .numerics import QuadratureSpec, integrate_matrix
from .selfconsistent import CorrelationMatrix, assemble_transfer, solve_correlation, spectral_radius

log = logging.getLogger(__name__)

CONSERVATION_TOL = 1e-9
DEFAULT_STEP = 1e-4


def _index(r):
    if r in (0, "L", "l", "left"):
        return 0
    if r in (1, "R", "r", "right"):
        return 1
    raise InvalidParameterError(f"unknown reservoir label {r!r}")


def _heat_diverges(j: Junction) -> bool:
    # a strictly flat Gamma with monitoring makes the inelastic heat integrand
    # decay like 1/w: the heat current is log-divergent
    return j.gamma > 0 and bool(np.any(j.O != 0)) and any(r.is_wide_band for r in j.reservoirs)


def _integrate(j, integrand, spec):
    return integrate_matrix(integrand, spec, breakpoints=j.quadrature_cuts(), scale=j.energy_scale())


def _current_integrand(j: Junction, D, parts, zetas):
    """Vectorized integrand for the requested (kind, r) parts and zetas.

    ``parts`` is a list of ("el"|"in", r) pairs; the output has one column
    per (part, zeta) combination, in that nesting order.
    """
    fk = FrequencyKernel(j)
    O = np.asarray(j.O)
    odo = O @ np.asarray(D) @ O if D is not None else None
    oo = O @ O
    res = j.reservoirs
    need_in = any(kind == "in" for kind, _ in parts)

    def integrand(w):
        g, gl, gr = fk(w)
        gam = (gl, gr)
        proj = (fk.p_left, fk.p_right)
        f = (np.asarray(res[0].fermi(w)), np.asarray(res[1].fermi(w)))
        cols = []
        # tr[P_r G P_rbar G^+] is not symmetric in r once monitoring breaks
        # unitarity, so each direction gets its own kernel
        el_kernel = {
            r: gl * gr * kernels.trace_sandwich(proj[r], g, proj[1 - r])
            for r in {r for kind, r in parts if kind == "el"}
        }
        in_cache = {}
        if need_in:
            for r in {r for kind, r in parts if kind == "in"}:
                a = kernels.trace_sandwich(proj[r], g, odo)
                b = kernels.trace_sandwich(proj[r], g, oo)
                in_cache[r] = j.gamma * gam[r] * (a - f[r] * b)
        for kind, r in parts:
            if kind == "el":
                base = (f[1 - r] - f[r]) * el_kernel[r]
            else:
                base = in_cache[r]
            for z in zetas:
                cols.append(base * (w - res[r].mu) ** z if z else base)
        return (2.0 / np.pi) * np.stack(cols, axis=1)

    return integrand


def _as_D(D):
    return D.D if isinstance(D, CorrelationMatrix) else np.asarray(D, dtype=complex)


def elastic_current(j: Junction, r, zeta: int, spec: QuadratureSpec = QuadratureSpec()) -> float:
    ensure_valid(j)
    r = _index(r)
    res = _integrate(j, _current_integrand(j, None, [("el", r)], [zeta]), spec)
    return float(res.value[0])


def inelastic_current(j: Junction, D, r, zeta: int, spec: QuadratureSpec = QuadratureSpec()) -> float:
    ensure_valid(j)
    r = _index(r)
    if j.gamma == 0:
        return 0.0
    if zeta == 1 and _heat_diverges(j):
        raise InvalidParameterError("inelastic heat current diverges for a strictly flat band under monitoring")
    res = _integrate(j, _current_integrand(j, _as_D(D), [("in", r)], [zeta]), spec)
    return float(res.value[0])


@dataclass(frozen=True)
class TransportResult:
    """Currents indexed as ``[r, zeta]`` with r = 0 (L), 1 (R)."""

    elastic: np.ndarray
    inelastic: np.ndarray
    D: np.ndarray
    D_residual: float
    quad_error: float
    mu: tuple
    notes: tuple = field(default=())

    @property
    def total(self):
        return self.elastic + self.inelastic

    def current(self, r, zeta):
        return float(self.total[_index(r), zeta])

    @property
    def through_current(self):
        """Particle current into the right reservoir."""
        return float(self.total[1, 0])

    def energy_current(self, r):
        i = _index(r)
        return float(self.total[i, 1] + self.mu[i] * self.total[i, 0])

    @property
    def measurement_work(self):
        """Energy injected by the monitor, -sum_r J^E_r (diagnostic only)."""
        return -(self.energy_current(0) + self.energy_current(1))

    @property
    def conservation_error(self):
        return abs(float(self.total[0, 0] + self.total[1, 0]))

    def as_row(self):
        row = {}
        for i, r in enumerate("LR"):
            for z in (0, 1):
                row[f"J{z}_{r}_elastic"] = float(self.elastic[i, z])
                row[f"J{z}_{r}_inelastic"] = float(self.inelastic[i, z])
                row[f"J{z}_{r}"] = float(self.total[i, z])
        row["D_residual"] = self.D_residual
        row["quad_error"] = self.quad_error
        return row


def transport(j: Junction, spec: QuadratureSpec = QuadratureSpec(), *, heat: bool = True) -> TransportResult:
    """Solve for D, then evaluate all currents in one shared quadrature.

    Near the strong-monitoring limit the map's spectral radius approaches 1
    and the linear solve amplifies quadrature error by 1 / (1 - rho). If
    particle conservation then misses its tolerance, the whole evaluation is
    repeated once with tolerances tightened by that factor.
    """
    ensure_valid(j)
    tt = assemble_transfer(j, spec)
    out = _transport_from(j, tt, spec, heat)
    if out.conservation_error <= _conservation_allowed(out):
        return out
    gap = max(1.0 - spectral_radius(tt), 1e-8)
    fine = dataclasses.replace(
        spec,
        rel_tol=max(spec.rel_tol * gap, 1e-15),
        abs_tol=max(spec.abs_tol * gap, 1e-20),
        max_subdivisions=max(spec.max_subdivisions, 4000),
    )
    out = _transport_from(j, assemble_transfer(j, fine), fine, heat)
    out = dataclasses.replace(out, notes=out.notes + (f"refined quadrature, map gap {gap:.2e}",))
    if out.conservation_error > _conservation_allowed(out):
        raise ConsistencyError(
            f"particle conservation violated: |J0_L + J0_R| = {out.conservation_error:.3e}"
        )
    return out


def _conservation_allowed(out):
    return 10 * CONSERVATION_TOL * max(abs(out.total[0, 0]), 1e-3)


def _transport_from(j, tt, spec, heat):
    corr = solve_correlation(tt)
    notes = []
    zetas = [0, 1] if heat else [0]
    heat_nan = heat and _heat_diverges(j)
    parts = [("el", 0), ("el", 1)]
    if j.gamma > 0:
        parts += [("in", 0), ("in", 1)]
    res = _integrate(j, _current_integrand(j, corr.D, parts, [0] if heat_nan else zetas), spec)
    vals = res.value
    elastic = np.zeros((2, 2))
    inelastic = np.zeros((2, 2))
    k = 0
    for kind, r in parts:
        for z in [0] if heat_nan else zetas:
            (elastic if kind == "el" else inelastic)[r, z] = vals[k]
            k += 1
    quad_error = res.error
    if heat_nan:
        el_heat = _integrate(j, _current_integrand(j, None, [("el", 0), ("el", 1)], [1]), spec)
        elastic[:, 1] = el_heat.value
        inelastic[:, 1] = np.nan
        quad_error += el_heat.error
        notes.append("inelastic heat current diverges for a strictly flat band; reported as NaN")
    if not heat:
        elastic[:, 1] = np.nan
        inelastic[:, 1] = np.nan
    out = TransportResult(
        elastic=elastic,
        inelastic=inelastic,
        D=corr.D,
        D_residual=corr.residual,
        quad_error=quad_error,
        mu=(j.left.mu, j.right.mu),
        notes=tuple(notes),
    )
    return out


def landauer_current(j: Junction, r, zeta: int, epsabs=1e-14, epsrel=1e-12) -> float:
    """Independent Landauer-Buttiker path: scalar QUADPACK, one linear solve per point.

    Ignores monitoring entirely; intended for gamma = 0 cross-checks.
    """
    ensure_valid(j)
    r = _index(r)
    n = j.n_sites
    res = j.reservoirs
    eye = np.eye(n)

    def integrand(w):
        sl, gl, _ = reservoir_self_energy(res[0], w, n)
        sr, gr, _ = reservoir_self_energy(res[1], w, n)
        a = w * eye - np.asarray(j.h) - sl - sr
        g = np.linalg.solve(a, eye)
        gam_r, gam_rb = (gl, gr) if r == 0 else (gr, gl)
        t = np.trace(gam_r @ g @ gam_rb @ g.conj().T).real
        df = float(res[1 - r].fermi(w)) - float(res[r].fermi(w))
        return (2.0 / np.pi) * (w - res[r].mu) ** zeta * df * t

    pts = j.breakpoints()
    if all(x.T == 0 for x in res):
        lo, hi = sorted((res[0].mu, res[1].mu))
        inner = [p for p in pts if lo < p < hi]
        edges = [lo] + inner + [hi]
        segments = list(zip(edges[:-1], edges[1:]))
        tails = []
    else:
        segments = list(zip(pts[:-1], pts[1:]))
        tails = [(-np.inf, pts[0]), (pts[-1], np.inf)]
    total = 0.0
    for a, b in segments + tails:
        if a == b:
            continue
        val, _ = sp_integrate.quad(integrand, a, b, epsabs=epsabs, epsrel=epsrel, limit=500)
        total += val
    return total


# --- derived quantities ---------------------------------------------------


def _center(j: Junction, mu):
    return 0.5 * (j.left.mu + j.right.mu) if mu is None else mu


def particle_current(j: Junction, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """J0 into the right reservoir."""
    return transport(j, spec, heat=False).through_current


def differential_conductance(
    j: Junction, mu=None, step: float = DEFAULT_STEP, spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """dJ0_R / d(mu_L - mu_R) at the centre ``mu``, by Richardson-extrapolated central differences."""
    if not step > 0:
        raise InvalidParameterError("conductance step must be positive")
    mu = _center(j, mu)

    def central(h):
        jp = particle_current(j.with_potentials(mu + h / 2, mu - h / 2), spec)
        jm = particle_current(j.with_potentials(mu - h / 2, mu + h / 2), spec)
        return (jp - jm) / (2 * h)

    coarse = central(step)
    fine = central(step / 2)
    return (4 * fine - coarse) / 3


@dataclass(frozen=True)
class PowerPoint:
    dmu: float
    current: float
    power: float
    power_linear: float


def power_curve(
    j: Junction,
    dmus: Sequence[float],
    spec: QuadratureSpec = QuadratureSpec(),
    mu=None,
    conductance: float | None = None,
):
    """Generated power P = dmu * J0_R under symmetric bias mu_{L,R} = mu -/+ dmu/2.

    Also returns the linear-response parabola dmu * J0|_0 - dmu^2 G.
    """
    mu = _center(j, mu)
    j0 = particle_current(j.with_potentials(mu, mu), spec)
    G = differential_conductance(j, mu, spec=spec) if conductance is None else conductance
    out = []
    for d in dmus:
        d = float(d)
        cur = j0 if d == 0 else particle_current(j.with_potentials(mu - d / 2, mu + d / 2), spec)
        out.append(PowerPoint(d, cur, d * cur, d * j0 - d * d * G))
    return out


def stopping_voltage(
    j: Junction, spec: QuadratureSpec = QuadratureSpec(), mu=None, max_bias: float = 100.0
) -> float:
    """Bias dmu = mu_R - mu_L at which the monitor-driven current vanishes."""
    mu = _center(j, mu)

    def cur(d):
        return particle_current(j.with_potentials(mu - d / 2, mu + d / 2), spec)

    j0 = cur(0.0)
    if abs(j0) < 1e-14:
        raise NoStoppingVoltageError("no zero-bias current: stopping voltage undefined")
    s = np.sign(j0)
    lo, x = 0.0, 0.05 * s
    while abs(x) <= max_bias:
        jx = cur(x)
        if np.sign(jx) != s:
            root = brentq(cur, min(lo, x), max(lo, x), xtol=1e-14, rtol=4 * np.finfo(float).eps)
            return float(root)
        lo, x = x, 2 * x
    raise NoStoppingVoltageError(f"current keeps its sign up to |dmu| = {max_bias}")


def cop_value(heat_right: float, heat_left: float) -> float:
    """|J1_R / (J1_R + J1_L)|."""
    den = heat_right + heat_left
    if den == 0:
        raise UndefinedCOPError("J1_R + J1_L vanishes; COP undefined")
    return abs(heat_right / den)


def cop(j: Junction, spec: QuadratureSpec = QuadratureSpec()) -> float:
    res = transport(j, spec)
    return cop_value(res.current("R", 1), res.current("L", 1))


def _cooling_point(args):
    template, el, er, gamma, spec = args
    j = aligned_two_site(template, el, er, gamma)
    return transport(j, spec).current("R", 1)


def aligned_two_site(template: Junction, eps_left, eps_right, gamma) -> Junction:
    """Copy of a two-site template with levels (and filters) at the given energies."""
    import dataclasses

    from .model import LorentzianFilter

    def align(res, eps):
        hyb = res.hybridization
        if isinstance(hyb, LorentzianFilter):
            hyb = dataclasses.replace(hyb, eps_f=eps)
        return dataclasses.replace(res, hybridization=hyb)

    h = np.array(template.h, dtype=complex)
    h[0, 0], h[1, 1] = eps_left, eps_right
    return template.replace(
        h=h, left=align(template.left, eps_left), right=align(template.right, eps_right), gamma=gamma
    )


def cooling_map(
    template: Junction,
    eps_left: Sequence[float],
    eps_right: Sequence[float],
    gammas: Sequence[float],
    spec: QuadratureSpec = QuadratureSpec(),
    workers: int = 1,
):
    """J1_R on an (eps_L, eps_R) grid for each gamma; cooling where it is negative.

    Returns ``{gamma: array of shape (len(eps_left), len(eps_right))}``.
    """
    if template.n_sites != 2:
        raise InvalidParameterError("cooling_map needs a two-site template")
    out = {}
    for g in gammas:
        tasks = [(template, float(a), float(b), float(g), spec) for a in eps_left for b in eps_right]
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                vals = list(pool.map(_cooling_point, tasks, chunksize=16))
        else:
            vals = [_cooling_point(t) for t in tasks]
        out[float(g)] = np.array(vals).reshape(len(eps_left), len(eps_right))
    return out
