"""Singular space, hypoellipticity index and related structural checks.

The singular space is the real intersection of the kernels of
``Re F (Im F)^j`` for ``j = 0, ..., 2n - 1``.  Everything here works with the
real matrices ``Re F`` and ``Im F`` so the intersection with ``R^{2n}`` is
automatic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Inconclusive, RankAmbiguous, SingularSpaceNonzero
from .hamilton import HamiltonMap
from .symbol import QuadraticSymbol

TOL_RANK = 1e-9


@dataclass(frozen=True)
class SingularSpaceReport:
    """Result of :func:`singular_space`.

    Attributes
    ----------
    basis : ndarray, shape (2n, d)
        Orthonormal real basis of S.
    dim : int
        ``d = dim S``.
    k0 : int or None
        Smallest ``j`` with a trivial partial intersection; None when S != {0}.
    delta : float or None
        Subelliptic loss ``2 k0 / (2 k0 + 1)``.
    partial_kernels : list of int
        ``dim K_j`` for ``j = 0 .. 2n-1``; entries after ``k0`` are 0.
    """

    basis: np.ndarray = field(repr=False)
    dim: int
    k0: int | None
    delta: float | None
    partial_kernels: list[int]

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "k0": self.k0,
            "delta": self.delta,
            "partial_kernels": list(self.partial_kernels),
            "basis": self.basis.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> SingularSpaceReport:
        basis = np.array(data["basis"], dtype=float)
        dim = int(data["dim"])
        if basis.size == 0:
            basis = basis.reshape(len(data["partial_kernels"]), 0)
        return cls(basis, dim, data["k0"], data["delta"], [int(k) for k in data["partial_kernels"]])


def _unit(M: np.ndarray) -> np.ndarray:
    s = np.linalg.norm(M, 2)
    return M / s if s > 0 else M


def singular_space(hmap: HamiltonMap, tol_rank: float = TOL_RANK) -> SingularSpaceReport:
    """Compute ``S`` by stacking ``Re F (Im F)^j`` and taking SVD null spaces.

    Each block is normalised to unit spectral norm before stacking; kernels
    are scale free, and this keeps blocks with large powers of ``Im F`` from
    swamping the others.

    Raises
    ------
    RankAmbiguous
        If a singular value of some stack lies within a factor 10 of the
        threshold ``tol_rank * s_max``.
    """
    F_re, F_im = hmap.F_re, hmap.F_im
    d = F_re.shape[0]
    blocks = []
    P = np.eye(d)
    dims: list[int] = []
    basis = np.eye(d)
    k0 = None
    for j in range(d):
        blocks.append(_unit(F_re @ P))
        P = _unit(F_im @ P)
        stack = np.vstack(blocks)
        _, s, Vh = np.linalg.svd(stack)
        if s[0] == 0:
            dims.append(d)
            basis = np.eye(d)
            continue
        thr = tol_rank * s[0]
        if np.any((s > 0.1 * thr) & (s < 10 * thr)):
            raise RankAmbiguous(
                f"singular value near threshold {thr:.3g} at j={j}: {s[(s > 0.1 * thr) & (s < 10 * thr)]}"
            )
        rank = int(np.sum(s > thr))
        dims.append(d - rank)
        basis = Vh[rank:].T
        if rank == d:
            k0 = j
            break
    dims += [0] * (d - len(dims))
    dim = dims[-1] if k0 is None else 0
    delta = None if k0 is None else 2 * k0 / (2 * k0 + 1)
    return SingularSpaceReport(basis.copy(), dim, k0, delta, dims)


def check_no_real_eigenvalues(hmap: HamiltonMap, tol_imag: float | None = None,
                              report: SingularSpaceReport | None = None) -> bool:
    """True iff every eigenvalue of ``F`` is off the real axis by more than ``tol_imag``.

    Only meaningful when ``S = {0}``; otherwise :class:`SingularSpaceNonzero`
    is raised.
    """
    if report is None:
        report = singular_space(hmap)
    if report.dim != 0:
        raise SingularSpaceNonzero(f"S has dimension {report.dim}", report.basis)
    if tol_imag is None:
        tol_imag = 1e-7 * max(hmap.norm, 1.0)
    ev = np.linalg.eigvals(hmap.F)
    return bool(np.all(np.abs(ev.imag) > tol_imag))


def partial_ellipticity_on_S(sym: QuadraticSymbol, report: SingularSpaceReport,
                             n_theta: int = 720, tol: float = 1e-10) -> bool:
    """Decide whether ``q`` restricted to ``S`` vanishes only at the origin.

    First looks for an angle with ``cos t Re q|_S + sin t Im q|_S`` definite
    (sufficient for a trivial zero set).  If the grid finds none and ``Re q`` is
    non-negative on ``S``, a zero is certified from ``Ker Re q|_S``: there ``q``
    reduces to ``i Im q``, which vanishes on some nonzero vector unless it is
    definite.
    """
    if report.dim == 0:
        return True
    B = report.basis
    R = B.T @ sym.Q.real @ B
    I = B.T @ sym.Q.imag @ B
    R, I = (R + R.T) / 2, (I + I.T) / 2
    scale = max(np.linalg.norm(R, 2), np.linalg.norm(I, 2), np.finfo(float).tiny)
    if max(np.linalg.norm(R, 2), np.linalg.norm(I, 2)) <= tol:
        return False
    for theta in np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False):
        ev = np.linalg.eigvalsh(np.cos(theta) * R + np.sin(theta) * I)
        if ev[0] > tol * scale:
            return True
    evR, VR = np.linalg.eigh(R)
    if evR[0] >= -tol * scale:
        K = VR[:, evR <= tol * scale]
        if K.shape[1] == 0:
            return True
        evI = np.linalg.eigvalsh(K.T @ I @ K)
        if evI[0] <= tol * scale and evI[-1] >= -tol * scale:
            return False
        return True
    raise Inconclusive("no definite rotation found and Re q is not non-negative on S")
