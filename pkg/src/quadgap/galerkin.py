"""Hermite-Galerkin discretization of ``q^w(x, D)``.

Independent of the Hamilton-map route: the operator is assembled from
position/derivative matrices with the symmetrized Weyl ordering
``(AB + BA)/2`` and diagonalized or exponentiated directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm
from scipy.sparse.linalg import eigs, expm_multiply

from .errors import DomainError, SemigroupOverflow
from .ground_state import GroundState, projection_coefficient
from .hermite import HermiteTruncation, gaussian_coefficients
from .symbol import QuadraticSymbol

DENSE_LIMIT = 1600
REFINE_STEP = 8
REFINE_TOL = 1e-5
EDGE_LEVELS = 4
EDGE_TOL = 0.5


@dataclass(frozen=True)
class QuantizedOperator:
    matrix: sp.csr_matrix = field(repr=False)
    trunc: HermiteTruncation
    symbol: QuadraticSymbol = field(repr=False)

    @property
    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def size(self) -> int:
        return self.trunc.size


@dataclass(frozen=True)
class LowEigs:
    values: np.ndarray
    shifts: np.ndarray
    converged: np.ndarray
    tails: np.ndarray = field(default=None, repr=False)


def _kron_all(mats):
    out = sp.identity(1, dtype=complex, format="csr")
    for m in mats:
        out = sp.kron(out, m, format="csr")
    return out


def matched_scales(A) -> np.ndarray:
    """Per-axis dilation that gives ``exp(-x.A x)`` the width of ``h_0`` on the diagonal.

    With these scales the dilated exponent ``S A S`` has ``Re`` diagonal
    ``1/2``, so a ground state stretched along some axis (``KFP`` with small
    ``a``) is resolved with few Hermite functions.
    """
    return np.sqrt(0.5 / np.diag(np.asarray(A).real))


def quantize(sym: QuadraticSymbol, trunc: HermiteTruncation) -> QuantizedOperator:
    """Galerkin matrix of ``q^w`` on ``trunc`` (exact projection, no truncation pollution)."""
    if sym.n != trunc.n:
        raise DomainError(f"symbol has n={sym.n}, truncation n={trunc.n}")
    n, N = trunc.n, trunc.N
    x, d = trunc.axis_ops(pad=1)
    factors = [x] * n + [d] * n
    axis = list(range(n)) * 2
    eye = sp.identity(N, dtype=complex, format="csr")
    Q = sym.Q
    M = sp.csr_matrix((trunc.size, trunc.size), dtype=complex)
    for i in range(2 * n):
        for j in range(i, 2 * n):
            c = Q[i, j] if i == j else 2 * Q[i, j]
            if c == 0:
                continue
            A, B = factors[i], factors[j]
            mats = [eye] * n
            if axis[i] == axis[j]:
                mats[axis[i]] = sp.csr_matrix(((A @ B + B @ A) / 2)[:N, :N])
            else:
                mats[axis[i]] = sp.csr_matrix(A[:N, :N])
                mats[axis[j]] = sp.csr_matrix(B[:N, :N])
            M = M + c * _kron_all(mats)
    return QuantizedOperator(M.tocsr(), trunc, sym)


def edge_mass(trunc: HermiteTruncation, vecs: np.ndarray, levels: int = EDGE_LEVELS) -> np.ndarray:
    """Fraction of each column's squared norm on Hermite levels ``>= N - levels`` of some axis."""
    idx = np.indices((trunc.N,) * trunc.n).reshape(trunc.n, -1)
    edge = np.any(idx >= trunc.N - levels, axis=0)
    p = np.abs(vecs) ** 2
    return p[edge].sum(axis=0) / p.sum(axis=0)


def _modes(op: QuantizedOperator, k: int, sigma: complex = 0.0,
           method: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues by increasing real part with their edge masses, truncation artifacts removed.

    Strongly non-normal operators produce stable, refinement-proof
    eigenvalues whose eigenvectors live on the last Hermite levels; they
    approximate nothing in ``L^2``.  Modes with more than ``EDGE_TOL`` of
    their mass on the last ``EDGE_LEVELS`` levels are discarded.
    """
    if method is None:
        method = "dense" if op.size <= DENSE_LIMIT else "sparse"
    if method == "dense":
        w, V = np.linalg.eig(op.dense)
    else:
        k_req = min(op.size - 2, 3 * k + 12)
        w, V = eigs(op.matrix.tocsc(), k=k_req, sigma=sigma, which="LM")
    tails = edge_mass(op.trunc, V)
    keep = tails <= EDGE_TOL
    w, tails = w[keep], tails[keep]
    order = np.lexsort((w.imag, w.real))
    return w[order], tails[order]


def _nearest_mode(op: QuantizedOperator, v: complex) -> complex:
    k = min(op.size - 2, 6)
    # offset the shift: v may be an exact eigenvalue of the finer matrix
    shift = v + 1e-7 * max(1.0, abs(v)) * (1 + 1j)
    w, V = eigs(op.matrix.tocsc(), k=k, sigma=shift, which="LM")
    w = w[edge_mass(op.trunc, V) <= EDGE_TOL]
    return w[np.argmin(np.abs(w - v))] if len(w) else complex("nan")


def low_eigs(op: QuantizedOperator, count: int, sigma: complex = 0.0,
             method: str | None = None) -> LowEigs:
    """``count`` eigenvalues with smallest real part, each flagged by a refinement check.

    Dense solves are used up to dimension ``DENSE_LIMIT``, shift-invert
    Arnoldi around ``sigma`` beyond; ``method`` ("dense" or "sparse")
    overrides the choice.  Each eigenvalue is then looked up by
    shift-invert at ``N + 8`` per axis; one whose counterpart moved by more
    than ``1e-5`` is flagged as not converged.
    """
    if count > op.size:
        raise DomainError("count exceeds the basis dimension")
    vals, tails = _modes(op, count, sigma, method)
    vals, tails = vals[:count], tails[:count]
    finer = quantize(op.symbol, HermiteTruncation(op.trunc.n, op.trunc.N + REFINE_STEP))
    shifts = np.array([abs(_nearest_mode(finer, v) - v) for v in vals])
    return LowEigs(vals, shifts, shifts <= REFINE_TOL, tails)


def accretivity_defect(op: QuantizedOperator) -> float:
    """Smallest eigenvalue of the Hermitian part; ``min Re <Mu, u>`` over unit ``u``."""
    M = op.dense
    return float(np.linalg.eigvalsh((M + M.conj().T) / 2)[0])


def ground_state_residual(op: QuantizedOperator, gs: GroundState, exact_tail: bool = True) -> float:
    """Relative residual ``||P_N (q^w - mu0) u0|| / ||P_N u0||``.

    A quadratic symbol couples Hermite levels ``k`` and ``k +- 2`` only, so
    with ``exact_tail`` the operator is applied on ``N + 2`` levels and the
    result cropped: this is the exact projection of ``(q^w - mu0) u0``.
    Without it the truncated matrix acts on the truncated ``u0``, which adds
    the basis-truncation error of ``u0`` itself.
    """
    n, N = op.trunc.n, op.trunc.N
    if not exact_tail:
        c0 = gaussian_coefficients(gs.A, N)
        r = op.matrix @ c0 - gs.mu0 * c0
        return float(np.linalg.norm(r) / np.linalg.norm(c0))
    big = quantize(op.symbol, HermiteTruncation(n, N + 2))
    c = gaussian_coefficients(gs.A, N + 2)
    r = (big.matrix @ c - gs.mu0 * c).reshape((N + 2,) * n)[(slice(0, N),) * n]
    c0 = c.reshape((N + 2,) * n)[(slice(0, N),) * n]
    return float(np.linalg.norm(r) / np.linalg.norm(c0))


def fit_decay_rate(t, norms, min_points: int = 5, min_span: float = 0.5,
                   r2_slack: float = 1e-2,
                   floor: float = 1e-13) -> tuple[float, tuple[float, float], float]:
    """Exponential rate from ``log(norms)`` by least squares over the best window.

    Every contiguous window with at least ``min_points`` samples covering at
    least ``min_span`` of the sampled time span is fitted; among windows
    within ``r2_slack`` of the best ``R^2`` the longest one wins.  The span
    constraint matters for non-normal generators, whose log-norm decays in
    steps: short windows then fit a step rather than the envelope.
    Samples below ``floor * max(norms)`` are dropped as round-off.

    Returns ``(rate, (t_start, t_end), r2)``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(norms, dtype=float)
    keep = y > floor * np.max(y)
    t, y = t[keep], np.log(y[keep])
    m = len(t)
    if m < min_points:
        raise DomainError("too few samples above the noise floor")
    span = min_span * (t[-1] - t[0])
    best = []
    for i in range(m - min_points + 1):
        for j in range(i + min_points, m + 1):
            tt, yy = t[i:j], y[i:j]
            if tt[-1] - tt[0] < span - 1e-12:
                continue
            A = np.vstack([tt, np.ones_like(tt)]).T
            coef, *_ = np.linalg.lstsq(A, yy, rcond=None)
            res = yy - A @ coef
            ss = np.sum((yy - yy.mean()) ** 2)
            r2 = 1.0 - np.sum(res ** 2) / ss if ss > 0 else 1.0
            best.append((r2, j - i, -coef[0], (tt[0], tt[-1])))
    top = max(b[0] for b in best)
    cands = [b for b in best if b[0] >= top - r2_slack]
    r2, _, rate, window = max(cands, key=lambda b: (b[1], b[0]))
    return float(rate), (float(window[0]), float(window[1])), float(r2)


@dataclass(frozen=True)
class SemigroupDecay:
    t: np.ndarray
    norms: np.ndarray
    c_u: complex
    fitted_rate: float
    window: tuple


def semigroup_decay(op: QuantizedOperator, gs: GroundState, u_init, t_grid,
                    **fit_kw) -> SemigroupDecay:
    """Distance of ``exp(-t (M - mu0)) u`` from ``c_u u0`` along ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0) or np.any(np.diff(t_grid) <= 0):
        raise DomainError("t_grid must be positive and increasing")
    u = np.asarray(u_init, dtype=complex)
    c_u = projection_coefficient(u, gs, op.trunc)
    target = c_u * gaussian_coefficients(gs.A, op.trunc.N)
    dense = op.size <= DENSE_LIMIT
    if dense:
        L = op.dense - gs.mu0 * np.eye(op.size)
    else:
        L = (op.matrix - gs.mu0 * sp.identity(op.size, format="csr")).tocsr()
    steps: dict[float, np.ndarray] = {}
    norms = []
    v, t_prev = u, 0.0
    for t in t_grid:
        h = round(float(t - t_prev), 12)
        if not dense:
            v = expm_multiply(-h * L, v)
        else:
            if h not in steps:
                steps[h] = expm(-h * L)
            v = steps[h] @ v
        t_prev = t
        nv = float(np.linalg.norm(v - target))
        if not np.isfinite(nv) or nv > 1e100:
            raise SemigroupOverflow(f"norm {nv:.3g} at t={t}; is mu0 right?")
        norms.append(nv)
    norms = np.array(norms)
    if np.max(norms) <= 1e-13 * max(1.0, np.linalg.norm(u)):
        rate, window = float("inf"), (t_grid[0], t_grid[-1])
    else:
        rate, window, _ = fit_decay_rate(t_grid, norms, **fit_kw)
    return SemigroupDecay(t_grid, norms, c_u, rate, window)


def basis_vector(trunc: HermiteTruncation, index) -> np.ndarray:
    """Coefficient vector of the tensor Hermite function with multi-index ``index``."""
    u = np.zeros(trunc.size, dtype=complex)
    u[np.ravel_multi_index(tuple(index), (trunc.N,) * trunc.n)] = 1.0
    return u
