"""Tensor Hermite-function basis used by the Galerkin oracle.

Axis operators live in the eigenbasis ``h_0, h_1, ...`` of the harmonic
oscillator ``x^2 + D^2`` with ``D = -i d/dx``:

    x = (a + a^T) / sqrt(2),    D = -i (a - a^T) / sqrt(2),

``a`` being the annihilation (lowering) matrix.  Multi-indices are flattened
in C order, matching ``np.kron(axis_0, axis_1, ...)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TruncationTooSmall


def lowering(N: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, N, dtype=float)), 1)


@dataclass(frozen=True)
class HermiteTruncation:
    """``N`` Hermite functions per axis in ``n`` variables (dimension ``N**n``)."""

    n: int
    N: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be positive")
        if self.N < 4:
            raise TruncationTooSmall(f"N={self.N} < 4")

    @property
    def size(self) -> int:
        return self.N ** self.n

    def axis_ops(self, pad: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """Position and derivative matrices on ``N + pad`` levels.

        Products of two of them, cropped back to ``N`` levels, equal the
        exact Galerkin projection as long as ``pad >= 1``.
        """
        a = lowering(self.N + pad)
        x = (a + a.T) / np.sqrt(2)
        d = -1j * (a - a.T) / np.sqrt(2)
        return x, d

    def commutator_defect(self) -> float:
        """``max |[D, x] + i I|`` on the first ``N - 1`` levels of the cropped matrices."""
        x, d = self.axis_ops(pad=0)
        c = d @ x - x @ d + 1j * np.eye(self.N)
        return float(np.max(np.abs(c[: self.N - 1, : self.N - 1])))


def hermite_functions(N: int, x) -> np.ndarray:
    """Values ``h_k(x)`` for ``k < N``; shape ``(N,) + x.shape``.

    Uses the three-term recurrence, which is stable for large ``k`` unlike
    evaluating physicists' polynomials and normalising afterwards.
    """
    x = np.asarray(x, dtype=float)
    h = np.zeros((N,) + x.shape)
    h[0] = np.pi ** -0.25 * np.exp(-x ** 2 / 2)
    if N > 1:
        h[1] = np.sqrt(2.0) * x * h[0]
    for k in range(1, N - 1):
        h[k + 1] = np.sqrt(2.0 / (k + 1)) * x * h[k] - np.sqrt(k / (k + 1)) * h[k - 1]
    return h


def _sqrt_det(M: np.ndarray) -> complex:
    # branch continuous from the identity; eigenvalues of M sit in Re > 0
    return complex(np.prod(np.sqrt(np.linalg.eigvals(M).astype(complex))))


def gaussian_coefficients(A, N: int) -> np.ndarray:
    """Hermite coefficients of ``exp(-x^T A x)`` for complex symmetric ``A`` with ``Re A > 0``.

    Uses the generating function
    ``sum_k h_k(x) t^k / sqrt(k!) = pi^{-1/4} exp(-x^2/2 + sqrt(2) t x - t^2/2)``:
    integrating against the Gaussian gives
    ``C exp(t^T K t / 2)`` with ``M = A + I/2``, ``K = M^{-1} - I`` and
    ``C = pi^{n/4} / sqrt(det M)``.  The Taylor coefficients, rescaled by
    ``sqrt(alpha!)``, follow the recurrence

        e[alpha] = sum_j K[i, j] sqrt(beta_j) e[beta - e_j] / sqrt(alpha_i),

    with ``beta = alpha - e_i`` for the first nonzero index ``i`` of ``alpha``.

    Returns a flat vector of length ``N**n`` in C order.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    n = A.shape[0]
    M = A + 0.5 * np.eye(n)
    K = np.linalg.inv(M) - np.eye(n)
    e = np.zeros((N,) * n, dtype=complex)
    e[(0,) * n] = 1.0
    for alpha in np.ndindex(*e.shape):
        if not any(alpha):
            continue
        i = next(k for k, v in enumerate(alpha) if v)
        beta = list(alpha)
        beta[i] -= 1
        acc = 0.0
        for j in range(n):
            if beta[j]:
                prev = list(beta)
                prev[j] -= 1
                acc += K[i, j] * np.sqrt(beta[j]) * e[tuple(prev)]
        e[alpha] = acc / np.sqrt(alpha[i])
    C = np.pi ** (n / 4) / _sqrt_det(M)
    return (C * e).ravel()


def synthesize(coeffs, N: int, n: int, grids) -> np.ndarray:
    """Evaluate a coefficient vector on the tensor grid spanned by ``grids`` (one 1-D array per axis)."""
    c = np.asarray(coeffs).reshape((N,) * n)
    out = c
    for ax in range(n):
        H = hermite_functions(N, grids[ax])  # (N, m_ax)
        out = np.tensordot(out, H, axes=([0], [0]))
    return out
