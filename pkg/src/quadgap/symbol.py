"""Complex quadratic forms on phase space.

A symbol is stored as the full complex symmetric matrix ``Q`` of size
``2n x 2n`` so that ``q(X) = X^T Q X``.  Coordinates are always ordered
``(x_1, ..., x_n, xi_1, ..., xi_n)``: positions first, then their duals.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AsymmetricSymbol, DimensionMismatch, DomainError

TOL_PSD = 1e-10


@dataclass(frozen=True)
class QuadraticSymbol:
    """Quadratic symbol ``q(X) = X^T Q X`` on ``R^{2n}``.

    Parameters
    ----------
    n : int
        Number of position variables.
    Q : ndarray, shape (2n, 2n), complex
        Symmetric coefficient matrix.
    asymmetry : float
        ``max|entries - entries^T| / 2`` of the raw input, kept for diagnostics.
    """

    n: int
    Q: np.ndarray = field(repr=False)
    asymmetry: float = 0.0

    def __post_init__(self):
        self.Q.setflags(write=False)

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.Q, 2))

    def __call__(self, X):
        return evaluate(self, X)

    def conj(self) -> QuadraticSymbol:
        """Complex conjugate symbol (symbol of the adjoint operator)."""
        return make_symbol(self.n, np.conj(self.Q))

    def scaled(self, c: float) -> QuadraticSymbol:
        return make_symbol(self.n, c * self.Q)


def make_symbol(n: int, entries) -> QuadraticSymbol:
    """Build a symbol from a (not necessarily symmetric) ``2n x 2n`` matrix.

    The stored matrix is the symmetrization ``(entries + entries^T) / 2``,
    which represents the same quadratic form.
    """
    if int(n) != n or n < 1:
        raise DimensionMismatch(f"n must be a positive integer, got {n!r}")
    n = int(n)
    E = np.array(entries, dtype=complex)
    if E.shape != (2 * n, 2 * n):
        raise DimensionMismatch(f"expected a {2 * n}x{2 * n} matrix, got shape {E.shape}")
    asym = float(np.max(np.abs(E - E.T))) / 2 if E.size else 0.0
    return QuadraticSymbol(n, (E + E.T) / 2, asym)


def _point(sym: QuadraticSymbol, X) -> np.ndarray:
    X = np.asarray(X)
    if X.shape != (sym.dim,):
        raise DimensionMismatch(f"phase point must have length {sym.dim}, got shape {X.shape}")
    return X


def evaluate(sym: QuadraticSymbol, X) -> complex:
    X = _point(sym, X)
    return complex(X @ sym.Q @ X)


def polarize(sym: QuadraticSymbol, X, Y) -> complex:
    """Polarized form ``q(X; Y) = X^T Q Y``."""
    X, Y = _point(sym, X), _point(sym, Y)
    return complex(X @ sym.Q @ Y)


def real_part(sym: QuadraticSymbol) -> QuadraticSymbol:
    return make_symbol(sym.n, sym.Q.real)


def imag_part(sym: QuadraticSymbol) -> QuadraticSymbol:
    return make_symbol(sym.n, sym.Q.imag)


def dilate(sym: QuadraticSymbol, scales) -> QuadraticSymbol:
    """Symbol ``q(S y, S^{-1} eta)`` with ``S = diag(scales)``.

    The map ``u(x) -> sqrt(det S) u(S x)`` is unitary and conjugates ``q^w``
    into the Weyl quantization of the dilated symbol, so spectra agree.  A
    Gaussian ``exp(-x.A x)`` becomes ``exp(-y.(S A S) y)``.
    """
    s = np.asarray(scales, dtype=float)
    if s.shape != (sym.n,) or np.any(s <= 0):
        raise DomainError("need one positive scale per variable")
    D = np.concatenate([s, 1 / s])
    return make_symbol(sym.n, D[:, None] * sym.Q * D[None, :])


def check_accretive(sym: QuadraticSymbol, tol_psd: float = TOL_PSD) -> tuple[bool, float]:
    """Check that ``Re q >= 0`` on real phase space.

    Returns ``(is_psd, min_eig)`` where ``min_eig`` is the smallest eigenvalue
    of ``Re Q``.  The tolerance is relative to ``||Q||`` because ``Re Q`` is
    frequently exactly singular.
    """
    min_eig = float(np.linalg.eigvalsh(sym.Q.real)[0])
    scale = max(sym.norm, 1.0)
    return min_eig >= -tol_psd * scale, min_eig


# -- symbol-spec files ---------------------------------------------------------

def symbol_to_dict(sym: QuadraticSymbol) -> dict:
    return {"n": sym.n, "Q_re": sym.Q.real.tolist(), "Q_im": sym.Q.imag.tolist()}


def symbol_from_dict(data: dict, rtol: float = 1e-12) -> QuadraticSymbol:
    try:
        n = data["n"]
        Q = np.array(data["Q_re"], dtype=float) + 1j * np.array(data["Q_im"], dtype=float)
    except KeyError as exc:
        raise DimensionMismatch(f"symbol file is missing field {exc}") from None
    if Q.shape != (2 * n, 2 * n):
        raise DimensionMismatch(f"expected {2 * n}x{2 * n} matrices for n={n}, got {Q.shape}")
    scale = max(float(np.max(np.abs(Q))), np.finfo(float).tiny)
    if np.max(np.abs(Q - Q.T)) > rtol * scale:
        raise AsymmetricSymbol("Q_re/Q_im must be symmetric")
    return make_symbol(n, Q)


def read_symbol_file(path) -> QuadraticSymbol:
    return symbol_from_dict(json.loads(Path(path).read_text()))


def write_symbol_file(sym: QuadraticSymbol, path) -> None:
    Path(path).write_text(json.dumps(symbol_to_dict(sym), indent=2) + "\n")
