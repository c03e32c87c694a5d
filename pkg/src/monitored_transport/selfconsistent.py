"""Stationary correlation matrix D_ij = <d_j^dagger d_i>.

D solves the linear self-consistency

    D = (1/pi) int dw G^R [sum_r f_r Gamma_r + gamma O D O] G^A,

which we split as D = source + map[D]. The map is assembled once as an
n^2 x n^2 matrix acting on row-major vec(D); both it and the source come
out of one adaptive quadrature so G^R is inverted once per node.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConsistencyError, IterationLimitError, NonContractiveMapError, QuadratureError
from .greens import FrequencyKernel
from .model import Junction, ensure_valid
from .numerics import QuadratureSpec, integrate_matrix

PHYSICAL_TOL = 1e-9


@dataclass(frozen=True)
class TransferTensor:
    source: np.ndarray  # (n, n)
    map: np.ndarray  # (n^2, n^2), row-major vec convention
    error: float = 0.0
    panels: int = 0

    @property
    def n(self):
        return self.source.shape[0]

    def apply(self, X):
        n = self.n
        return (self.map @ np.asarray(X).reshape(n * n)).reshape(n, n)


@dataclass(frozen=True)
class CorrelationMatrix:
    D: np.ndarray
    residual: float
    hermitization: float = 0.0
    iterations: int = 0

    @property
    def occupations(self):
        return np.real(np.diag(self.D))

    @property
    def eigenvalues(self):
        return np.linalg.eigvalsh(self.D)


def assemble_transfer(j: Junction, spec: QuadratureSpec = QuadratureSpec(), *, drive_scale=1.0) -> TransferTensor:
    """Integrate the source term and the monitoring map.

    ``drive_scale`` multiplies the Fermi functions in the source; it exists
    only as a test hook for linearity in the drive.
    """
    ensure_valid(j)
    n = j.n_sites
    fk = FrequencyKernel(j)
    O = np.asarray(j.O)
    with_map = j.gamma > 0 and np.any(O != 0)
    oo = np.kron(O, O.T)

    def integrand(w):
        g, gl, gr = fk(w)
        fl = np.asarray(j.left.fermi(w)) * drive_scale
        fr = np.asarray(j.right.fermi(w)) * drive_scale
        drive = (fl * gl)[:, None, None] * fk.p_left + (fr * gr)[:, None, None] * fk.p_right
        src = kernels.sandwich(g, drive).reshape(w.size, n * n) / np.pi
        if not with_map:
            return src
        sup = kernels.superop(g).reshape(w.size, n**4) / np.pi
        return np.concatenate([src, sup], axis=1)

    try:
        res = integrate_matrix(integrand, spec, breakpoints=j.quadrature_cuts(), scale=j.energy_scale())
    except QuadratureError as exc:
        raise QuadratureError(f"assembling correlation transfer failed: {exc}", exc.best, exc.error, exc.panels) from exc
    source = res.value[: n * n].reshape(n, n)
    if with_map:
        S = res.value[n * n:].reshape(n * n, n * n)
        tmap = j.gamma * S @ oo
    else:
        tmap = np.zeros((n * n, n * n), dtype=complex)
    return TransferTensor(source=source, map=tmap, error=res.error, panels=res.panels)


def _finish(tt: TransferTensor, D, iterations=0) -> CorrelationMatrix:
    Dh = 0.5 * (D + D.conj().T)
    herm = float(np.max(np.abs(Dh - D)))
    residual = float(np.max(np.abs(Dh - tt.source - tt.apply(Dh))))
    ev = np.linalg.eigvalsh(Dh)
    if ev[0] < -PHYSICAL_TOL or ev[-1] > 1 + PHYSICAL_TOL:
        raise ConsistencyError(
            f"correlation matrix spectrum [{ev[0]:.3e}, {ev[-1]:.3e}] outside [0, 1]"
        )
    return CorrelationMatrix(D=Dh, residual=residual, hermitization=herm, iterations=iterations)


def spectral_radius(tt: TransferTensor) -> float:
    if not np.any(tt.map):
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(tt.map))))


def solve_correlation(tt: TransferTensor) -> CorrelationMatrix:
    """Direct dense solve of (1 - map) vec(D) = vec(source)."""
    n = tt.n
    rho = spectral_radius(tt)
    if rho >= 1 - 1e-12:
        raise NonContractiveMapError(
            f"monitoring map has spectral radius {rho:.6f} >= 1; the stationary "
            "equation has no unique solution (quadrature or model corruption)"
        )
    A = np.eye(n * n) - tt.map
    D = np.linalg.solve(A, tt.source.reshape(n * n)).reshape(n, n)
    return _finish(tt, D)


def solve_fixed_point(
    tt: TransferTensor, damping: float = 0.5, max_iter: int = 100_000, tol: float = 1e-13
) -> CorrelationMatrix:
    """Damped iteration D <- (1 - a) D + a (source + map[D]) from D = source."""
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    D = tt.source.copy()
    for it in range(1, max_iter + 1):
        new = (1 - damping) * D + damping * (tt.source + tt.apply(D))
        step = float(np.max(np.abs(new - D)))
        D = new
        if step < tol:
            return _finish(tt, D, iterations=it)
    raise IterationLimitError(f"fixed point not reached in {max_iter} iterations", residual=step)


def correlation_matrix(j: Junction, spec: QuadratureSpec = QuadratureSpec()) -> CorrelationMatrix:
    return solve_correlation(assemble_transfer(j, spec))
