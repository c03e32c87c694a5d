"""Brute-force check with finite, locally thermalized leads.

Each reservoir becomes M discrete modes on a uniform grid, star-coupled to
the system and kept thermal by local gain kappa f(eps_k) and loss
kappa (1 - f(eps_k)). The full correlation matrix C_ij = <c_j^+ c_i> of the
quadratic Lindbladian then obeys

    dC/dt = -X C - C X^+ + 2 gamma O C O + K_in,   X = i H + K/2 + gamma O^2,

with K = kappa on lead modes and K_in = kappa diag(f). The stationary point
is found with one Schur factorization of X: the monitor only touches the
n x n system block, so its feedback reduces to an n^2 x n^2 linear system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from .errors import ConfigurationError, DegenerateDiscretizationError, InvalidParameterError
from .model import FlatBand, Junction, LorentzianFilter, Tabulated, ensure_valid, fermi

DENSE_MAX_DIM = 60
SUPPORT_WIDTHS = 10.0
THERMAL_WIDTHS = 10.0


@dataclass(frozen=True)
class DiscretizedJunction:
    H: np.ndarray  # (N, N) full single-particle Hamiltonian
    O: np.ndarray  # (N, N) monitor padded with zeros
    gamma: float
    kappa: float
    energies: np.ndarray  # (M,) mode energies, shared by both leads
    couplings: np.ndarray  # (2, M) t_{r,k}
    occupations: np.ndarray  # (2, M) f_r(eps_k)
    mu: tuple
    n_sites: int

    @property
    def M(self):
        return self.energies.size

    @property
    def dim(self):
        return self.H.shape[0]

    @property
    def spacing(self):
        return float(self.energies[1] - self.energies[0])

    def lead_slice(self, r):
        n, M = self.n_sites, self.M
        return slice(n + r * M, n + (r + 1) * M)

    def loss_rates(self):
        k = np.zeros(self.dim)
        k[self.n_sites:] = self.kappa
        return k

    def gain_rates(self):
        g = np.zeros(self.dim)
        g[self.n_sites:] = self.kappa * self.occupations.ravel()
        return g

    def hybridization(self, r, omega):
        """pi sum_k t_k^2 delta_kappa(w - eps_k), the Gamma the leads actually realize."""
        w = np.atleast_1d(np.asarray(omega, dtype=float))[:, None]
        half = 0.5 * self.kappa
        lor = half / np.pi / ((w - self.energies) ** 2 + half**2)
        return np.pi * (lor * self.couplings[r] ** 2).sum(axis=1)


def _support(hyb):
    if isinstance(hyb, LorentzianFilter):
        return hyb.eps_f - SUPPORT_WIDTHS * hyb.delta, hyb.eps_f + SUPPORT_WIDTHS * hyb.delta
    if isinstance(hyb, FlatBand):
        if hyb.wide_band:
            return None
        return -hyb.half_width, hyb.half_width
    if isinstance(hyb, Tabulated):
        return hyb.grid[0], hyb.grid[-1]
    raise InvalidParameterError(f"unsupported hybridization {type(hyb).__name__}")


def _resonances(j: Junction):
    pts = list(np.real(np.linalg.eigvals(j.h)))
    for res in j.reservoirs:
        hyb = res.hybridization
        if isinstance(hyb, LorentzianFilter):
            pts.append(hyb.eps_f)
    return pts


def auto_band(j: Junction):
    """Smallest band holding every hybridization support, level and thermal window."""
    lo, hi = [], []
    for res in j.reservoirs:
        sup = _support(res.hybridization)
        if sup is None:
            raise ConfigurationError("an infinitely wide band needs an explicit discretization band")
        lo.append(sup[0])
        hi.append(sup[1])
        lo.append(res.mu - THERMAL_WIDTHS * res.T)
        hi.append(res.mu + THERMAL_WIDTHS * res.T)
    eig = np.real(np.linalg.eigvals(j.h))
    lo.append(eig.min())
    hi.append(eig.max())
    return float(min(lo)), float(max(hi))


def discretize(j: Junction, M: int, band=None, kappa=None) -> DiscretizedJunction:
    """Replace both reservoirs by M modes each on a uniform grid.

    Modes sit at the midpoints of M equal cells of ``band``; couplings are
    t_k = sqrt(Gamma(eps_k) de / pi) and the broadening defaults to 2 de.
    """
    ensure_valid(j)
    if M < 2:
        raise InvalidParameterError("discretization needs M >= 2 modes per lead")
    if band is None:
        band = auto_band(j)
    else:
        band = (float(band[0]), float(band[1]))
        if not band[0] < band[1]:
            raise ConfigurationError("discretization band must satisfy lo < hi")
        missed = [p for p in _resonances(j) if not band[0] <= p <= band[1]]
        if missed:
            raise ConfigurationError(f"band {band} misses resonances at {missed}")
    lo, hi = band
    de = (hi - lo) / M
    eps = lo + (np.arange(M) + 0.5) * de
    kappa = 2.0 * de if kappa is None else float(kappa)
    if kappa < 0:
        raise InvalidParameterError("kappa must be non-negative")

    n = j.n_sites
    N = n + 2 * M
    H = np.zeros((N, N), dtype=complex)
    H[:n, :n] = j.h
    couplings = np.empty((2, M))
    occ = np.empty((2, M))
    for r, res in enumerate(j.reservoirs):
        t = np.sqrt(np.asarray(res.hybridization.value(eps), dtype=float) * de / np.pi)
        couplings[r] = t
        occ[r] = fermi(eps, res.mu, res.T)
        v = res.vector(n)
        sl = slice(n + r * M, n + (r + 1) * M)
        # H[d_i, c_k] = t_k v_i so that Sigma = Gamma v v^+ as in the continuum model
        H[:n, sl] = np.outer(v, t)
        H[sl, :n] = np.outer(t, v.conj())
    H[n:, n:] = np.diag(np.concatenate([eps, eps]))
    O = np.zeros((N, N), dtype=complex)
    O[:n, :n] = j.O
    return DiscretizedJunction(
        H=H, O=O, gamma=j.gamma, kappa=kappa, energies=eps, couplings=couplings,
        occupations=occ, mu=(j.left.mu, j.right.mu), n_sites=n,
    )


def _drift(dj: DiscretizedJunction):
    n = dj.n_sites
    O_s = dj.O[:n, :n]
    X = 1j * dj.H + 0.5 * np.diag(dj.loss_rates()).astype(complex)
    X[:n, :n] += dj.gamma * (O_s @ O_s)
    return X


def stationary_residual(dj: DiscretizedJunction, C) -> float:
    X = _drift(dj)
    rhs = -X @ C - C @ X.conj().T + 2 * dj.gamma * dj.O @ C @ dj.O + np.diag(dj.gain_rates())
    return float(np.max(np.abs(rhs)))


class _LyapunovSolver:
    """Solves X C + C X^+ = Q repeatedly from one Schur factorization."""

    def __init__(self, X, tol):
        T, U = linalg.schur(X, output="complex")
        lam = np.diag(T)
        # the Lyapunov operator has eigenvalues lam_i + conj(lam_j); its
        # smallest modulus is 2 min Re(lam)
        gap = 2 * float(np.min(lam.real))
        if gap <= tol:
            raise DegenerateDiscretizationError(
                f"stationary operator singular (spectral gap {gap:.3e}); "
                "a mode is not damped (kappa = 0 or a decoupled site?)"
            )
        self.T, self.U = T, U

    def solve(self, Q):
        U = self.U
        Qt = U.conj().T @ Q @ U
        Y, scale, info = lapack.ztrsyl(self.T, self.T, Qt, trana="N", tranb="C")
        if info < 0:
            raise DegenerateDiscretizationError(f"triangular Sylvester solve failed (info={info})")
        return U @ (Y / scale) @ U.conj().T


def steady_state(dj: DiscretizedJunction, method: str = "schur") -> np.ndarray:
    """Stationary full correlation matrix C."""
    if method == "dense":
        return _steady_state_dense(dj)
    if method != "schur":
        raise InvalidParameterError(f"unknown method {method!r}")
    n = dj.n_sites
    X = _drift(dj)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(X))))
    lyap = _LyapunovSolver(X, tol)
    C0 = lyap.solve(np.diag(dj.gain_rates()).astype(complex))
    O_s = dj.O[:n, :n]
    if dj.gamma == 0 or not np.any(O_s):
        C = C0
    else:
        # C = C0 + 2 gamma Y[O C_ss O]; Y[E] for each system-block unit matrix
        N = dj.dim
        Ysys = np.empty((n * n, N, N), dtype=complex)
        for a in range(n):
            for b in range(n):
                E = np.zeros((N, N), dtype=complex)
                E[a, b] = 1.0
                Ysys[a * n + b] = lyap.solve(E)
        # vec(O C_ss O) = kron(O, O^T) vec(C_ss) in row-major order
        conj_map = np.kron(O_s, O_s.T)
        B = Ysys[:, :n, :n].reshape(n * n, n * n).T @ conj_map
        A = np.eye(n * n) - 2 * dj.gamma * B
        if np.linalg.cond(A) > 1e12:
            raise DegenerateDiscretizationError("monitor feedback system is singular")
        c_ss = np.linalg.solve(A, C0[:n, :n].reshape(n * n))
        src = (conj_map @ c_ss)
        C = C0 + 2 * dj.gamma * np.tensordot(src, Ysys, axes=(0, 0))
    return _check_physical(dj, 0.5 * (C + C.conj().T))


def _steady_state_dense(dj: DiscretizedJunction) -> np.ndarray:
    """Direct solve of the flattened N^2 x N^2 stationary equation (small N only)."""
    N = dj.dim
    if N > DENSE_MAX_DIM:
        raise ConfigurationError(f"dense stationary solve limited to dimension {DENSE_MAX_DIM}, got {N}")
    X = _drift(dj)
    eye = np.eye(N)
    # row-major vec: vec(A C B) = kron(A, B^T) vec(C)
    L = -np.kron(X, eye) - np.kron(eye, X.conj()) + 2 * dj.gamma * np.kron(dj.O, dj.O.T)
    if np.linalg.cond(L) > 1e13:
        raise DegenerateDiscretizationError("stationary operator singular")
    C = np.linalg.solve(L, -np.diag(dj.gain_rates()).astype(complex).reshape(N * N)).reshape(N, N)
    return _check_physical(dj, 0.5 * (C + C.conj().T))


def _check_physical(dj, C, tol=1e-8):
    ev = np.linalg.eigvalsh(C)
    if ev[0] < -tol or ev[-1] > 1 + tol:
        raise DegenerateDiscretizationError(
            f"stationary correlation spectrum [{ev[0]:.3e}, {ev[-1]:.3e}] outside [0, 1]"
        )
    return C


@dataclass(frozen=True)
class OracleCurrents:
    """Currents into each reservoir, ``[r, zeta]``, by two independent routes."""

    tunneling: np.ndarray
    channels: np.ndarray

    @property
    def mismatch(self):
        return float(np.max(np.abs(self.tunneling - self.channels)))

    @property
    def particle_balance(self):
        return float(abs(self.channels[0, 0] + self.channels[1, 0]))

    def current(self, r, zeta):
        return float(self.tunneling[r, zeta])


def oracle_currents(dj: DiscretizedJunction, C) -> OracleCurrents:
    n = dj.n_sites
    tun = np.zeros((2, 2))
    chan = np.zeros((2, 2))
    for r in range(2):
        sl = dj.lead_slice(r)
        # particle flow into mode k from tunneling: 2 Im[sum_i H_{k i} C_{i k}]
        flow = 2 * np.imag(np.einsum("ki,ik->k", dj.H[sl, :n], C[:n, sl]))
        # at stationarity the same flow leaves through the thermalizing channels
        drain = dj.kappa * (np.real(np.diag(C)[sl]) - dj.occupations[r])
        x = dj.energies - dj.mu[r]
        for z in (0, 1):
            w = x**z
            tun[r, z] = float(np.sum(w * flow))
            chan[r, z] = float(np.sum(w * drain))
    return OracleCurrents(tunneling=tun, channels=chan)


def oracle_transport(j: Junction, M: int, band=None, kappa=None, method="schur"):
    """Discretize, solve and return (OracleCurrents, system block of C)."""
    dj = discretize(j, M, band=band, kappa=kappa)
    C = steady_state(dj, method=method)
    n = dj.n_sites
    return oracle_currents(dj, C), C[:n, :n]
