"""Reservoir self-energies and dressed retarded/advanced Green's functions.

Monitoring enters G^R only through the frequency-independent lifetime
gamma O^2:

    G^R(w) = [w - h - Sigma^R_L(w) - Sigma^R_R(w) + i gamma O^2]^-1
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import SingularGreensError
from .model import Junction, Reservoir, ensure_valid, fermi

RCOND_MIN = 1e-13


def _keldysh_factor(res: Reservoir, omega):
    # tanh((w - mu) / 2T) == 1 - 2 f(w); at T = 0 this is sign(w - mu)
    return 1.0 - 2.0 * np.asarray(fermi(omega, res.mu, res.T))


def reservoir_self_energy(res: Reservoir, omega, n_sites):
    """Retarded self-energy, hybridization matrix and Keldysh component.

    Each is an ``(n, n)`` matrix for scalar ``omega`` or a ``(K, n, n)``
    stack for an array of frequencies.
    """
    w = np.asarray(omega, dtype=float)
    p = res.projector(n_sites)
    sig = np.asarray(res.hybridization.retarded(w), dtype=complex)
    gam = np.asarray(res.hybridization.value(w), dtype=float)
    kel = -2j * gam * _keldysh_factor(res, w)
    expand = (...,) + (None, None)
    return sig[expand] * p, gam[expand] * p, kel[expand] * p


class FrequencyKernel:
    """Evaluates G^R and the scalar hybridizations on a batch of frequencies.

    Built once per junction and reused by every quadrature node.
    """

    def __init__(self, j: Junction):
        self.junction = j
        n = j.n_sites
        self.n = n
        O = np.asarray(j.O)
        self.h_eff = np.ascontiguousarray(np.asarray(j.h) - 1j * j.gamma * (O @ O))
        self.p_left = np.ascontiguousarray(j.left.projector(n))
        self.p_right = np.ascontiguousarray(j.right.projector(n))

    def __call__(self, omega):
        w = np.atleast_1d(np.asarray(omega, dtype=float))
        hl = self.junction.left.hybridization
        hr = self.junction.right.hybridization
        sig_l = np.broadcast_to(np.asarray(hl.retarded(w), dtype=complex), w.shape)
        sig_r = np.broadcast_to(np.asarray(hr.retarded(w), dtype=complex), w.shape)
        g, rcond = kernels.resolvent(
            w, self.h_eff, np.ascontiguousarray(sig_l), self.p_left,
            np.ascontiguousarray(sig_r), self.p_right,
        )
        bad = rcond < RCOND_MIN
        if np.any(bad):
            k = int(np.argmax(bad))
            raise SingularGreensError(float(w[k]), float(rcond[k]))
        gam_l = np.broadcast_to(np.asarray(hl.value(w), dtype=float), w.shape)
        gam_r = np.broadcast_to(np.asarray(hr.value(w), dtype=float), w.shape)
        return g, gam_l, gam_r


@dataclass(frozen=True)
class DressedGreens:
    ret: np.ndarray
    adv: np.ndarray


def dressed_greens(j: Junction, omega) -> DressedGreens:
    ensure_valid(j)
    g, _, _ = FrequencyKernel(j)(omega)
    if np.ndim(omega) == 0:
        g = g[0]
    return DressedGreens(ret=g, adv=np.conj(np.swapaxes(g, -1, -2)))


def spectral_function(j: Junction, omega):
    """A(w) = (i / 2 pi) (G^R - G^A), Hermitian and positive semidefinite."""
    gf = dressed_greens(j, omega)
    return (1j / (2 * np.pi)) * (gf.ret - gf.adv)


def transmission(j: Junction, omega):
    """Elastic transmission 4 tr[Gamma_L G^R Gamma_R G^A]."""
    ensure_valid(j)
    fk = FrequencyKernel(j)
    g, gl, gr = fk(omega)
    t = 4.0 * gl * gr * kernels.trace_sandwich(fk.p_left, g, fk.p_right)
    return float(t[0]) if np.ndim(omega) == 0 else t
