"""NumPy implementations of the per-frequency dense kernels.

Every function works on a stack of K small n x n complex matrices, one per
quadrature node. The compiled module ``_ckernels`` exposes the same
functions with the same signatures.
"""
import numpy as np


def resolvent(omega, h_eff, sig_l, p_l, sig_r, p_r):
    """G_k = (omega_k - h_eff - sig_l[k] p_l - sig_r[k] p_r)^-1 and 1-norm rcond."""
    omega = np.ascontiguousarray(omega, dtype=float)
    n = h_eff.shape[0]
    a = (
        omega[:, None, None] * np.eye(n)
        - h_eff[None]
        - sig_l[:, None, None] * p_l[None]
        - sig_r[:, None, None] * p_r[None]
    )
    g = np.linalg.inv(a)
    norm_a = np.abs(a).sum(axis=1).max(axis=1)
    norm_g = np.abs(g).sum(axis=1).max(axis=1)
    return g, 1.0 / (norm_a * norm_g)


def sandwich(g, x):
    """g x g^dagger for each node; x is one matrix or a stack."""
    return g @ x @ np.conj(np.swapaxes(g, -1, -2))


def trace_sandwich(a, g, b):
    """Re tr[a g b g^dagger] for each node, with a, b fixed matrices."""
    gb = g @ b
    # tr[a (g b) g^dagger] = sum_ij (a g b)_ij conj(g)_ij
    agb = np.einsum("ij,kjl->kil", a, gb)
    return np.einsum("kil,kil->k", agb, np.conj(g)).real


def superop(g):
    """Row-major superoperator of X -> g X g^dagger, i.e. kron(g, conj(g))."""
    k, n, _ = g.shape
    out = g[:, :, None, :, None] * np.conj(g)[:, None, :, None, :]
    return out.reshape(k, n * n, n * n)
