"""Hamilton maps, the Hamiltonian flow of ``Im q`` and time averages of ``Re q``.

With ``sigma(X, Y) = X^T J Y`` and ``J = [[0, -I], [I, 0]]`` (so that
``sigma((x, xi), (y, eta)) = xi.y - x.eta``), the Hamilton map of ``q`` is the
matrix ``F`` with ``q(X; Y) = sigma(X, F Y)``, i.e. ``Q = J F`` and
``F = -J Q``.

The Hamilton vector field of a real quadratic form ``b(X) = X^T B X`` is
``H_b = (d_xi b, -d_x b) = -J grad b = 2 F_b X``, hence the flow
``exp(t H_b) = expm(2 t F_b)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from .errors import DomainError, QuadratureUnconverged
from .symbol import QuadraticSymbol

MAX_FLOW_NORM = 50.0


def symplectic_matrix(n: int) -> np.ndarray:
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


def sigma(X, Y) -> complex:
    """Canonical symplectic form ``xi.y - x.eta``."""
    X, Y = np.asarray(X), np.asarray(Y)
    n = X.shape[0] // 2
    return X[n:] @ Y[:n] - X[:n] @ Y[n:]


@dataclass(frozen=True)
class HamiltonMap:
    """Hamilton map ``F`` of a symbol together with its real and imaginary parts."""

    F: np.ndarray = field(repr=False)
    n: int = 0

    @property
    def F_re(self) -> np.ndarray:
        return self.F.real

    @property
    def F_im(self) -> np.ndarray:
        return self.F.imag

    @property
    def J(self) -> np.ndarray:
        return symplectic_matrix(self.n)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.F, 2))

    def defining_residual(self, sym: QuadraticSymbol) -> float:
        """``max |sigma(e_i, F e_j) - q(e_i; e_j)|`` over the canonical basis."""
        return float(np.max(np.abs(self.J @ self.F - sym.Q)))

    def skew_residual(self) -> float:
        """Deviation of ``J F`` from symmetry (F is sigma-skew iff JF is symmetric)."""
        JF = self.J @ self.F
        return float(np.max(np.abs(JF - JF.T)))


def hamilton_map(sym: QuadraticSymbol) -> HamiltonMap:
    """Hamilton map ``F = -J Q`` of ``sym``; exact, no linear solve."""
    n = sym.n
    Q = sym.Q
    # -J Q just moves blocks: top rows <- xi-rows of Q, bottom rows <- -(x-rows).
    F = np.concatenate([Q[n:], -Q[:n]], axis=0)
    return HamiltonMap(F, n)


def im_flow(hmap: HamiltonMap, t: float) -> np.ndarray:
    """Time-``t`` flow ``exp(t H_{Im q}) = expm(2 t Im F)`` of the Hamilton field of ``Im q``."""
    A = 2.0 * t * hmap.F_im
    if not np.all(np.isfinite(A)):
        raise DomainError("Im F is not finite")
    if np.linalg.norm(A, 1) > MAX_FLOW_NORM:
        raise DomainError(f"||2 t Im F|| = {np.linalg.norm(A, 1):.3g} exceeds {MAX_FLOW_NORM}")
    return expm(A)


def _average_fixed(hmap: HamiltonMap, ReQ: np.ndarray, T: float,
                   n_quad: int) -> tuple[np.ndarray, float]:
    """Quadrature of the average and the largest integrand norm (round-off scale)."""
    nodes, weights = leggauss(n_quad)
    M = np.zeros_like(ReQ)
    big = 0.0
    for s, w in zip(nodes, weights):
        Phi = im_flow(hmap, T * s)
        term = Phi.T @ ReQ @ Phi
        big = max(big, float(np.linalg.norm(term, 2)))
        M += w * term
    M *= 0.5
    return (M + M.T) / 2, big


def average_re(sym: QuadraticSymbol, T: float = 1.0, n_quad: int = 16,
               max_nodes: int = 1024, rtol: float = 1e-8) -> tuple[np.ndarray, float]:
    """Average ``Re q`` along the flow of ``H_{Im q}`` over ``[-T, T]``.

    Returns the matrix ``M_T`` of the averaged form
    ``(1/2T) int_{-T}^{T} Re q(exp(t H_{Im q}) X) dt`` and its smallest
    eigenvalue.  Gauss-Legendre nodes are doubled until the smallest
    eigenvalue is stable to ``rtol`` (or to round-off in the rotated
    integrand, whichever is larger).

    Raises
    ------
    QuadratureUnconverged
        If ``max_nodes`` is reached without stabilisation.
    """
    if T <= 0:
        raise DomainError("T must be positive")
    if n_quad < 8:
        raise DomainError("n_quad must be at least 8")
    hmap = hamilton_map(sym)
    ReQ = sym.Q.real
    floor = 1e-6 * max(float(np.linalg.norm(ReQ, 2)), np.finfo(float).tiny)
    M, big = _average_fixed(hmap, ReQ, T, n_quad)
    lo = float(np.linalg.eigvalsh(M)[0])
    while 2 * n_quad <= max_nodes:
        n_quad *= 2
        M, big = _average_fixed(hmap, ReQ, T, n_quad)
        new = float(np.linalg.eigvalsh(M)[0])
        roundoff = 1e3 * np.finfo(float).eps * big
        if abs(new - lo) <= max(rtol * max(abs(new), floor), roundoff):
            return M, new
        lo = new
    raise QuadratureUnconverged(f"min eigenvalue of <Re q>_T not stable at {n_quad} nodes")
