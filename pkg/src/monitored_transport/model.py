"""Physical problem definition: system Hamiltonian, monitor, reservoirs.

Units: hbar = e = k_B = 1 and every energy is measured in a reference
hopping ``t`` chosen by the user. Particle currents then come out in units
of ``t`` and heat currents in units of ``t**2``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import expit, xlogy

from .errors import InvalidParameterError

HERMITIAN_ATOL = 1e-12


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def fermi(omega, mu, T):
    """Fermi-Dirac occupation, vectorized over ``omega``.

    ``T == 0`` is handled as an exact step with value 1/2 at ``omega == mu``.
    """
    if T < 0:
        raise InvalidParameterError(f"temperature must be non-negative, got {T}")
    x = np.asarray(omega, dtype=float) - mu
    if T == 0:
        out = np.where(x < 0, 1.0, np.where(x > 0, 0.0, 0.5))
    else:
        out = expit(-x / T)
    return _scalar_or_array(out)


def gamma_from_bosonic_bath(tau, mu_b, T_b):
    """Monitoring strength equivalent to a hot, strongly biased bosonic bath.

    gamma = pi tau^2 coth(|mu_b| / 2 T_b)
    """
    if tau < 0:
        raise InvalidParameterError("bath coupling tau must be non-negative")
    if mu_b == 0:
        raise InvalidParameterError("bath chemical potential must be non-zero")
    if T_b <= 0:
        raise InvalidParameterError("bath temperature must be positive")
    return float(np.pi * tau**2 / np.tanh(abs(mu_b) / (2.0 * T_b)))


# --- hybridization models -------------------------------------------------


@dataclass(frozen=True)
class LorentzianFilter:
    """Reservoir seen through a single filter level at ``eps_f``.

    Sigma^R(w) = t_c^2 / (w - eps_f + i delta)
    """

    t_c: float
    delta: float
    eps_f: float = 0.0

    def __post_init__(self):
        if not self.t_c > 0:
            raise InvalidParameterError(f"LorentzianFilter needs t_c > 0, got {self.t_c}")
        if not self.delta > 0:
            raise InvalidParameterError(f"LorentzianFilter needs delta > 0, got {self.delta}")

    def value(self, omega):
        w = np.asarray(omega, dtype=float)
        return _scalar_or_array(self.t_c**2 * self.delta / ((w - self.eps_f) ** 2 + self.delta**2))

    def retarded(self, omega):
        w = np.asarray(omega, dtype=float)
        return self.t_c**2 / (w - self.eps_f + 1j * self.delta)

    def features(self):
        return [self.eps_f], [self.delta]

    @property
    def scale(self):
        return abs(self.eps_f) + self.delta


@dataclass(frozen=True)
class FlatBand:
    """Constant coupling ``gamma0`` on ``|w| <= half_width``, zero outside.

    The real part of the self-energy is the principal-value log term. With
    ``wide_band=True`` the band is infinitely wide: Gamma is strictly
    frequency independent and Sigma^R = -i gamma0.
    """

    gamma0: float
    half_width: float = 1.0
    wide_band: bool = False

    def __post_init__(self):
        if self.gamma0 < 0:
            raise InvalidParameterError(f"FlatBand needs gamma0 >= 0, got {self.gamma0}")
        if not self.wide_band and not self.half_width > 0:
            raise InvalidParameterError(f"FlatBand needs half_width > 0, got {self.half_width}")

    def value(self, omega):
        w = np.asarray(omega, dtype=float)
        if self.wide_band:
            return _scalar_or_array(np.full_like(w, self.gamma0))
        return _scalar_or_array(np.where(np.abs(w) <= self.half_width, self.gamma0, 0.0))

    def retarded(self, omega):
        w = np.asarray(omega, dtype=float)
        if self.wide_band:
            return np.full(w.shape, -1j * self.gamma0) if w.ndim else complex(-1j * self.gamma0)
        W = self.half_width
        with np.errstate(divide="ignore"):
            re = self.gamma0 / np.pi * (np.log(np.abs(w + W)) - np.log(np.abs(w - W)))
        return re - 1j * np.where(np.abs(w) <= W, self.gamma0, 0.0)

    def features(self):
        if self.wide_band:
            return [], []
        return [-self.half_width, self.half_width], [self.half_width]

    @property
    def scale(self):
        return self.gamma0 if self.wide_band else self.half_width


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear Gamma(w) on an ascending grid, zero outside it.

    The real part of Sigma^R is the exact Hilbert transform of the
    piecewise-linear interpolant, so the self-energy stays causal.
    """

    grid: tuple
    values: tuple

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise InvalidParameterError("Tabulated needs matching 1-D grid/values with >= 2 points")
        if np.any(np.diff(g) <= 0):
            raise InvalidParameterError("Tabulated grid must be strictly ascending")
        if np.any(v < 0):
            raise InvalidParameterError("Tabulated Gamma values must be non-negative")
        object.__setattr__(self, "grid", tuple(g.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    def value(self, omega):
        return _scalar_or_array(np.interp(omega, self.grid, self.values, left=0.0, right=0.0))

    def retarded(self, omega):
        w = np.asarray(omega, dtype=float)
        x = np.asarray(self.grid)
        g = np.asarray(self.values)
        slope = np.diff(g) / np.diff(x)
        d = w[..., None] - x  # (..., N+1)
        ad = np.abs(d)
        # pi * Re Sigma = sum_j c_j(w) ln|w - x_j| - (g_N - g_0); interior c_j
        # vanish linearly at x_j so the log singularities cancel there.
        acc = xlogy(g[0], ad[..., 0]) + slope[0] * xlogy(d[..., 0], ad[..., 0])
        acc = acc - xlogy(g[-1], ad[..., -1]) - slope[-1] * xlogy(d[..., -1], ad[..., -1])
        if x.size > 2:
            kinks = np.diff(slope)
            acc = acc + np.sum(kinks * xlogy(d[..., 1:-1], ad[..., 1:-1]), axis=-1)
        re = (acc - (g[-1] - g[0])) / np.pi
        return re - 1j * np.interp(w, x, g, left=0.0, right=0.0)

    def features(self):
        x = np.asarray(self.grid)
        return list(x), [float(np.min(np.diff(x)))]

    @property
    def scale(self):
        return max(abs(self.grid[0]), abs(self.grid[-1]))


Hybridization = Union[LorentzianFilter, FlatBand, Tabulated]


def hybridization_value(hyb: Hybridization, omega):
    """Scalar Gamma(w) of a hybridization model (before site embedding)."""
    return hyb.value(omega)


# --- reservoirs and junction ---------------------------------------------


@dataclass(frozen=True)
class Reservoir:
    hybridization: Hybridization
    mu: float = 0.0
    T: float = 0.0
    # (site index, weight) pairs; Gamma_r(w) = Gamma(w) v v^dagger
    coupling: tuple = ((0, 1.0),)

    def __post_init__(self):
        object.__setattr__(
            self, "coupling", tuple((int(i), complex(w)) for i, w in self.coupling)
        )

    def vector(self, n_sites):
        v = np.zeros(n_sites, dtype=complex)
        for i, w in self.coupling:
            v[i] += w
        return v

    def projector(self, n_sites):
        v = self.vector(n_sites)
        return np.outer(v, v.conj())

    def fermi(self, omega):
        return fermi(omega, self.mu, self.T)

    @property
    def is_wide_band(self):
        return isinstance(self.hybridization, FlatBand) and self.hybridization.wide_band


def _as_matrix(a):
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class Junction:
    """Two-terminal monitored junction.

    ``h`` is the single-particle system Hamiltonian, ``O`` the Hermitian
    matrix of the monitored observable and ``gamma`` the monitoring strength.
    """

    h: np.ndarray
    O: np.ndarray
    left: Reservoir
    right: Reservoir
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "h", _as_matrix(self.h))
        object.__setattr__(self, "O", _as_matrix(self.O))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n_sites(self):
        return self.h.shape[0]

    @property
    def reservoirs(self):
        return (self.left, self.right)

    def replace(self, **changes) -> "Junction":
        return dataclasses.replace(self, **changes)

    def with_potentials(self, mu_left, mu_right) -> "Junction":
        return self.replace(
            left=dataclasses.replace(self.left, mu=mu_left),
            right=dataclasses.replace(self.right, mu=mu_right),
        )

    def with_temperatures(self, T_left, T_right) -> "Junction":
        return self.replace(
            left=dataclasses.replace(self.left, T=T_left),
            right=dataclasses.replace(self.right, T=T_right),
        )

    def breakpoints(self):
        """Frequencies where integrands have peaks, kinks or Fermi steps."""
        pts = list(np.real(np.linalg.eigvals(self.h))) if self.n_sites else []
        for res in self.reservoirs:
            feats, _ = res.hybridization.features()
            pts.extend(feats)
            pts.append(res.mu)
        return sorted(set(float(p) for p in pts if np.isfinite(p)))

    def quadrature_cuts(self):
        """Breakpoints plus shoulders at a few widths either side of each filter
        peak, so narrow features keep their own panels when the tail map is
        stretched by a large energy scale."""
        pts = set(self.breakpoints())
        for res in self.reservoirs:
            hyb = res.hybridization
            if isinstance(hyb, LorentzianFilter):
                for k in (1.0, 4.0, 16.0):
                    pts.update((hyb.eps_f - k * hyb.delta, hyb.eps_f + k * hyb.delta))
        return sorted(pts)

    def energy_scale(self):
        """Tail-mapping scale: the largest resonance position or width."""
        s = [1e-3]
        # chemical potentials only need a breakpoint; a distant mu must not
        # stretch the tail map and squash the resonances
        if self.n_sites:
            s.extend(np.abs(np.linalg.eigvals(self.h)))
        for res in self.reservoirs:
            feats, _ = res.hybridization.features()
            s.extend(abs(p) for p in feats)
        for res in self.reservoirs:
            _, widths = res.hybridization.features()
            s.extend(widths)
            s.append(res.hybridization.scale)
            s.append(res.T)
        s.append(self.gamma)
        return float(max(s))


# --- validation -----------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    index: tuple = ()


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.issues

    def __bool__(self):
        return self.ok

    def add(self, code, message, index=()):
        self.issues.append(Issue(code, message, tuple(index)))

    def __str__(self):
        if self.ok:
            return "junction valid"
        return "; ".join(
            f"{i.message}" + (f" at index {i.index}" if i.index else "") for i in self.issues
        )


def _hermiticity_issues(report, name, m, atol=HERMITIAN_ATOL):
    bad = np.argwhere(np.abs(m - m.conj().T) > atol)
    for i, j in bad:
        if i <= j:
            report.add(f"{name}-not-hermitian", f"{name} is not Hermitian", (int(i), int(j)))


def validate(j: Junction) -> ValidationReport:
    """Collect every invariant violation of a junction; never raises."""
    report = ValidationReport()
    h, O = j.h, j.O
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        report.add("h-shape", f"h must be a non-empty square matrix, got shape {h.shape}")
        return report
    n = h.shape[0]
    _hermiticity_issues(report, "h", h)
    if O.shape != (n, n):
        report.add("O-shape", f"O has shape {O.shape}, expected {(n, n)}")
    else:
        _hermiticity_issues(report, "O", O)
    if not np.isfinite(j.gamma):
        report.add("gamma-finite", "monitoring strength must be finite")
    elif j.gamma < 0:
        report.add("negative-gamma", "negative monitoring strength")
    for name, res in (("left", j.left), ("right", j.right)):
        if res.T < 0:
            report.add("negative-T", f"{name} reservoir has negative temperature")
        if not np.isfinite(res.mu):
            report.add("mu-finite", f"{name} reservoir chemical potential must be finite")
        if not res.coupling:
            report.add("no-coupling", f"{name} reservoir has no coupling sites")
        for i, _ in res.coupling:
            if not 0 <= i < n:
                report.add("coupling-index", f"{name} reservoir couples to missing site", (i,))
    return report


def ensure_valid(j: Junction) -> Junction:
    report = validate(j)
    if not report.ok:
        raise InvalidParameterError(str(report))
    return j


def single_level_junction(eps_d, left: Reservoir, right: Reservoir, gamma) -> Junction:
    """Monitored occupation of a single level, O = n."""
    return Junction(h=[[eps_d]], O=[[1.0]], left=left, right=right, gamma=gamma)


def two_site_junction(eps_left, eps_right, left: Reservoir, right: Reservoir, gamma) -> Junction:
    """Two uncoupled levels whose cross-correlation is monitored.

    The left reservoir couples to site 0 and the right one to site 1.
    """
    left = dataclasses.replace(left, coupling=((0, 1.0),))
    right = dataclasses.replace(right, coupling=((1, 1.0),))
    return Junction(
        h=np.diag([eps_left, eps_right]),
        O=[[0.0, 1.0], [1.0, 0.0]],
        left=left,
        right=right,
        gamma=gamma,
    )

