"""Gaussian ground state from the positive Lagrangian plane.

``V+`` is the span of the generalized eigenvectors of ``F`` for eigenvalues
with ``Im > 0``.  It is a graph ``{(x, B+ x)}`` with ``Im B+`` positive
definite, and the ground state is ``u0(x) = exp(-x^T A x)`` with
``A = -(i/2) B+``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from .errors import (BasisMismatch, BlockSingular, NotPositiveDefinite, PositivityFailure,
                     SingularSpaceNonzero)
from .hamilton import HamiltonMap, hamilton_map, symplectic_matrix
from .hermite import HermiteTruncation, gaussian_coefficients
from .symbol import QuadraticSymbol

MAX_COND = 1e12
MAX_ASYMMETRY = 1e-6


@dataclass(frozen=True)
class LagrangianPlane:
    basis: np.ndarray = field(repr=False)
    Bplus: np.ndarray
    asymmetry: float = 0.0

    @property
    def n(self) -> int:
        return self.Bplus.shape[0]

    def lagrangian_defect(self) -> float:
        V = self.basis
        return float(np.max(np.abs(V.T @ symplectic_matrix(self.n) @ V)))

    def positivity_matrix(self) -> np.ndarray:
        """Hermitian matrix ``H`` with ``-i sigma(V c, conj(V c)) = d^H H d``, ``d = conj(c)``."""
        V = self.basis
        H = -1j * (V.T @ symplectic_matrix(self.n) @ V.conj())
        return (H + H.conj().T) / 2


@dataclass(frozen=True)
class GroundState:
    """``u0(x) = exp(-x^T A x)`` with eigenvalue ``mu0``."""

    A: np.ndarray
    mu0: complex
    norm_sq: float

    def to_dict(self) -> dict:
        return {
            "A_re": self.A.real.tolist(),
            "A_im": self.A.imag.tolist(),
            "mu0": [self.mu0.real, self.mu0.imag],
            "norm_sq": self.norm_sq,
        }

    @classmethod
    def from_dict(cls, data: dict) -> GroundState:
        A = np.array(data["A_re"], dtype=float) + 1j * np.array(data["A_im"], dtype=float)
        return cls(A, complex(*data["mu0"]), float(data["norm_sq"]))

    def exponent_string(self, names=None) -> str:
        """Human-readable ``-a(x)``, e.g. ``-(0.25 x1^2 + 0.25 x2^2)``."""
        n = self.A.shape[0]
        names = names or [f"x{i + 1}" for i in range(n)]
        out = ""
        for i in range(n):
            for j in range(i, n):
                c = self.A[i, j] * (1 if i == j else 2)
                if abs(c) < 1e-14:
                    continue
                var = f"{names[i]}^2" if i == j else f"{names[i]} {names[j]}"
                if abs(c.imag) < 1e-14:
                    sign = "-" if c.real < 0 else "+"
                    cs = f"{abs(c.real):.6g}"
                else:
                    sign, cs = "+", f"({c.real:.6g}{c.imag:+.6g}i)"
                out += (f" {sign} " if out else ("-" if sign == "-" else "")) + f"{cs} {var}"
        return f"-({out})" if out else "0"


def positive_lagrangian(hmap: HamiltonMap, tol: float = 1e-9) -> LagrangianPlane:
    """Extract ``V+`` by an ordered complex Schur form and write it as a graph over ``x``."""
    n = hmap.n
    T, Z, sdim = schur(hmap.F.astype(complex), output="complex", sort=lambda z: z.imag > 0)
    if sdim != n:
        raise SingularSpaceNonzero(f"{sdim} eigenvalues with Im > 0, expected {n}")
    V = Z[:, :n]
    X, Xi = V[:n], V[n:]
    if np.linalg.cond(X) > MAX_COND:
        raise BlockSingular("V+ is not a graph over the x-coordinates")
    B = np.linalg.solve(X.T, Xi.T).T
    asym = float(np.max(np.abs(B - B.T)))
    if asym > MAX_ASYMMETRY * max(1.0, float(np.max(np.abs(B)))):
        raise PositivityFailure(f"B+ far from symmetric (asymmetry {asym:.3g})")
    B = (B + B.T) / 2
    plane = LagrangianPlane(V, B, asym)
    if np.linalg.eigvalsh(plane.positivity_matrix())[0] <= tol:
        raise PositivityFailure("V+ is not a positive Lagrangian plane")
    if np.linalg.eigvalsh(B.imag)[0] <= tol:
        raise PositivityFailure("Im B+ is not positive definite")
    return plane


def ground_state(plane: LagrangianPlane, mu0: complex) -> GroundState:
    A = -0.5j * plane.Bplus
    A = (A + A.T) / 2
    ReA = A.real
    if np.linalg.eigvalsh(ReA)[0] <= 0:
        raise NotPositiveDefinite("Re A is not positive definite")
    n = A.shape[0]
    norm_sq = np.pi ** (n / 2) / np.sqrt(np.linalg.det(2 * ReA))
    return GroundState(A, complex(mu0), float(norm_sq))


def symbol_ground_state(sym: QuadraticSymbol) -> GroundState:
    """Ground state of ``q^w`` straight from the symbol (requires ``S = {0}``)."""
    from .spectrum import eigen_clusters, spectrum_report

    hmap = hamilton_map(sym)
    mu0 = spectrum_report(eigen_clusters(hmap), re_cutoff=0.0).mu0
    return ground_state(positive_lagrangian(hmap), mu0)


def projection_coefficient(u, gs: GroundState, trunc: HermiteTruncation) -> complex:
    """``c_u = (u, u0) / ||u0||^2`` for ``u`` given by Hermite coefficients.

    Both the inner product and the norm are taken in the truncated basis,
    which makes ``u -> c_u u0`` an exact idempotent there.
    """
    u = np.asarray(u)
    if u.shape != (trunc.size,) or gs.A.shape[0] != trunc.n:
        raise BasisMismatch(f"vector of shape {u.shape} does not match {trunc}")
    c0 = gaussian_coefficients(gs.A, trunc.N)
    return complex(np.vdot(c0, u) / np.vdot(c0, c0).real)


def realness_check(sym: QuadraticSymbol, tol: float = 1e-12) -> bool:
    """True iff ``q^w`` maps real functions to real functions.

    ``x_j x_k`` quantizes to a multiplication and ``xi_j xi_k`` to
    ``-d_j d_k``, both real, while ``x_j xi_k`` quantizes to ``-i`` times a
    real operator.  So the operator is real exactly when the ``xx`` and
    ``xi xi`` blocks of ``Q`` are real and the ``x xi`` block is imaginary.
    """
    n = sym.n
    Q = sym.Q
    scale = tol * max(1.0, float(np.max(np.abs(Q))))
    return bool(
        np.all(np.abs(Q[:n, :n].imag) <= scale)
        and np.all(np.abs(Q[n:, n:].imag) <= scale)
        and np.all(np.abs(Q[:n, n:].real) <= scale)
    )


def orthogonality_check(sym: QuadraticSymbol, tol: float = 1e-8) -> tuple[bool, float]:
    """Do ``q^w`` and its adjoint ``conj(q)^w`` share the ground state?

    Both ground states are normalised to ``u0(0) = 1``, so collinearity means
    equal exponent matrices.  Returns ``(passes, relative distance)``.
    """
    g = symbol_ground_state(sym)
    g_adj = symbol_ground_state(sym.conj())
    dist = float(np.linalg.norm(g.A - g_adj.A) / max(np.linalg.norm(g.A), np.finfo(float).tiny))
    return dist <= tol, dist
