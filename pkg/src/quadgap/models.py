"""Model library: Kramers-Fokker-Planck, chains of oscillators, generalized Langevin.

Variable orderings (positions first, then duals in the same order):

* KFP: ``(x, v, xi, eta)``
* chains: ``(x1, x2, y1, y2, z1, z2, xi1, xi2, eta1, eta2, zeta1, zeta2)``
* GLE: ``(x, y, z1..zm, xi, eta, zeta1..zetam)``
"""
from __future__ import annotations

import cmath
import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterDomain, QuadgapError, TemperatureDomain, UnstableDrift, ZeroParameter
from .hamilton import hamilton_map
from .spectrum import drift_correspondence, eigen_clusters, spectrum_report
from .symbol import QuadraticSymbol, make_symbol

SWEEP_HEADER = ["alpha", "lambda", "tau0", "tau0_closed_form", "status"]


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LinearSDE:
    """``dX = B X dt + Sigma dW``.

    ``equilibrium_exponent`` is the symmetric ``E`` with stationary density
    proportional to ``exp(-X^T E X)``, when known in closed form.
    """

    drift: np.ndarray
    noise: np.ndarray
    equilibrium_exponent: np.ndarray | None = None
    names: tuple = ()

    @property
    def dim(self) -> int:
        return self.drift.shape[0]


@dataclass(frozen=True)
class Model:
    spec: ModelSpec
    symbol: QuadraticSymbol
    sde: LinearSDE | None = None
    names: tuple = ()

    @property
    def m_c(self) -> float | None:
        return self.spec.params.get("m_c")


def _add(Q, coef, u, v=None):
    """Add ``coef * (u . X)(v . X)`` to the coefficient matrix ``Q``."""
    u = np.asarray(u, dtype=float)
    v = u if v is None else np.asarray(v, dtype=float)
    Q += coef * (np.outer(u, v) + np.outer(v, u)) / 2


def _e(dim, *pairs):
    """Linear form ``sum c_i X_i`` from ``(index, c)`` pairs."""
    out = np.zeros(dim)
    for i, c in pairs:
        out[i] += c
    return out


# -- Kramers-Fokker-Planck ----------------------------------------------------

def kfp_symbol(a: float) -> QuadraticSymbol:
    """``eta^2 + v^2/4 + i(v xi - a x eta)`` in ``(x, v, xi, eta)``."""
    if a == 0:
        raise ZeroParameter("KFP requires a != 0")
    X, V, XI, ETA = range(4)
    Q = np.zeros((4, 4), dtype=complex)
    _add(Q, 1.0, _e(4, (ETA, 1)))
    _add(Q, 0.25, _e(4, (V, 1)))
    _add(Q, 1j, _e(4, (V, 1)), _e(4, (XI, 1)))
    _add(Q, -1j * a, _e(4, (X, 1)), _e(4, (ETA, 1)))
    return make_symbol(2, Q)


def kfp_sde(a: float) -> LinearSDE:
    """Langevin dynamics ``dx = v dt, dv = (-a x - v) dt + sqrt(2) dW``.

    Friction and inverse temperature are both 1, so the stationary density
    is ``exp(-(a x^2 + v^2)/2)``, which is ``u0^2`` for ``a > 0``.
    """
    B = np.array([[0.0, 1.0], [-a, -1.0]])
    S = np.array([[0.0], [np.sqrt(2.0)]])
    E = np.diag([a / 2, 0.5]) if a > 0 else None
    return LinearSDE(B, S, E, ("x", "v"))


def kfp_ground_exponent(a: float) -> np.ndarray:
    """Closed-form exponent matrix ``A`` of the KFP ground state ``exp(-(x, v) A (x, v)^T)``."""
    if a == 0:
        raise ZeroParameter("KFP requires a != 0")
    if a > 0:
        return np.diag([a / 4, 0.25])
    s = math.sqrt(1 - 4 * a)
    return np.array([[-a * s / 4, a / 2], [a / 2, s / 4]])


def kfp_model(a: float) -> Model:
    return Model(ModelSpec("kfp", {"a": a}), kfp_symbol(a), kfp_sde(a), ("x", "v"))


# -- chains of oscillators ------------------------------------------------------

def chains_constants(alpha, alpha1, alpha2) -> dict:
    beta1 = alpha1 / alpha * (2 / alpha1 - 1 / alpha)
    beta2 = alpha2 / alpha * (2 / alpha2 - 1 / alpha)
    return {"beta1": beta1, "beta2": beta2, "delta1": alpha1 / alpha - 1, "delta2": alpha2 / alpha - 1}


def morse_quantity(a, b, c) -> float:
    return (a + c - 1) * (b + c - 1) - c ** 2


def chains_symbol(a, b, c, alpha, alpha1, alpha2) -> QuadraticSymbol:
    """Two oscillators coupled to two heat baths (``h = 1``, ``gamma = 2``, ``d = 1``)."""
    if not (alpha1 > 0 and alpha2 > 0 and alpha > 0.5 * max(alpha1, alpha2)):
        raise TemperatureDomain("need alpha1, alpha2 > 0 and alpha > max(alpha1, alpha2)/2")
    k = chains_constants(alpha, alpha1, alpha2)
    x1, x2, y1, y2, z1, z2, xi1, xi2, eta1, eta2, ze1, ze2 = range(12)
    d = 12
    Q = np.zeros((d, d), dtype=complex)
    zx1 = _e(d, (z1, 1), (x1, -1))
    zx2 = _e(d, (z2, 1), (x2, -1))
    _add(Q, alpha1, _e(d, (ze1, 1)))
    _add(Q, alpha2, _e(d, (ze2, 1)))
    _add(Q, k["beta1"], zx1)
    _add(Q, k["beta2"], zx2)
    _add(Q, 2j * k["delta1"], _e(d, (ze1, 1)), zx1)
    _add(Q, 2j * k["delta2"], _e(d, (ze2, 1)), zx2)
    _add(Q, 1j, _e(d, (y1, 1)), _e(d, (xi1, 1)))
    _add(Q, 1j, _e(d, (y2, 1)), _e(d, (xi2, 1)))
    _add(Q, -1j, _e(d, (eta1, 1)), _e(d, (x1, a + c), (x2, -c), (z1, -1)))
    _add(Q, -1j, _e(d, (eta2, 1)), _e(d, (x1, -c), (x2, b + c), (z2, -1)))
    return make_symbol(6, Q)


def chains_sde(a, b, c, alpha1, alpha2) -> LinearSDE:
    """Oscillator chain dynamics with ``gamma = 2`` and temperatures ``T_j = alpha_j / 2``."""
    gamma = 2.0
    B = np.zeros((6, 6))
    B[0, 2] = B[1, 3] = 1.0
    B[2, 0], B[2, 1], B[2, 4] = -(a + c), c, 1.0
    B[3, 0], B[3, 1], B[3, 5] = c, -(b + c), 1.0
    B[4, 4], B[4, 0] = -gamma, gamma
    B[5, 5], B[5, 1] = -gamma, gamma
    S = np.zeros((6, 2))
    S[4, 0] = -math.sqrt(gamma * alpha1)
    S[5, 1] = -math.sqrt(gamma * alpha2)
    return LinearSDE(B, S, None, ("x1", "x2", "y1", "y2", "z1", "z2"))


def chains_model(a, b, c, alpha, alpha1, alpha2) -> Model:
    params = {"a": a, "b": b, "c": c, "alpha": alpha, "alpha1": alpha1, "alpha2": alpha2,
              "m_c": morse_quantity(a, b, c)}
    return Model(ModelSpec("chains", params), chains_symbol(a, b, c, alpha, alpha1, alpha2),
                 chains_sde(a, b, c, alpha1, alpha2), ("x1", "x2", "y1", "y2", "z1", "z2"))


# -- generalized Langevin equation -------------------------------------------------

def _gle_check(omega, beta, alphas, lambdas):
    alphas = [float(v) for v in np.atleast_1d(alphas)]
    lambdas = [float(v) for v in np.atleast_1d(lambdas)]
    if len(alphas) < 1 or len(alphas) != len(lambdas):
        raise ParameterDomain("need m >= 1 alphas and as many lambdas")
    if omega == 0 or beta <= 0:
        raise ParameterDomain("need omega != 0 and beta > 0")
    if any(a <= 0 for a in alphas) or any(l == 0 for l in lambdas):
        raise ParameterDomain("need alpha_j > 0 and lambda_j != 0")
    return alphas, lambdas


def gle_symbol(omega, beta, alphas, lambdas) -> QuadraticSymbol:
    """Markovian GLE with memory kernel ``sum lambda_j^2 exp(-alpha_j |t|)`` and ``V = omega^2 x^2 / 2``."""
    alphas, lambdas = _gle_check(omega, beta, alphas, lambdas)
    m = len(alphas)
    n = m + 2
    d = 2 * n
    X, Y = 0, 1
    XI, ETA = n, n + 1
    Q = np.zeros((d, d), dtype=complex)
    _add(Q, 1j, _e(d, (Y, 1)), _e(d, (XI, 1)))
    _add(Q, -1j * omega ** 2, _e(d, (X, 1)), _e(d, (ETA, 1)))
    for j, (al, lam) in enumerate(zip(alphas, lambdas)):
        z, zeta = 2 + j, n + 2 + j
        _add(Q, 1j * lam, _e(d, (z, 1)), _e(d, (ETA, 1)))
        _add(Q, -1j * lam, _e(d, (Y, 1)), _e(d, (zeta, 1)))
        _add(Q, al / beta, _e(d, (zeta, 1)))
        _add(Q, al * beta / 4, _e(d, (z, 1)))
    return make_symbol(n, Q)


def gle_sde(omega, beta, alphas, lambdas) -> LinearSDE:
    alphas, lambdas = _gle_check(omega, beta, alphas, lambdas)
    m = len(alphas)
    n = m + 2
    B = np.zeros((n, n))
    S = np.zeros((n, m))
    B[0, 1] = 1.0
    B[1, 0] = -omega ** 2
    for j, (al, lam) in enumerate(zip(alphas, lambdas)):
        B[1, 2 + j] = lam
        B[2 + j, 1] = -lam
        B[2 + j, 2 + j] = -al
        S[2 + j, j] = math.sqrt(2 * al / beta)
    E = beta / 2 * np.diag([omega ** 2] + [1.0] * (m + 1))
    names = ("x", "y") + tuple(f"z{j + 1}" for j in range(m))
    return LinearSDE(B, S, E, names)


def gle_model(omega, beta, alphas, lambdas) -> Model:
    alphas, lambdas = _gle_check(omega, beta, alphas, lambdas)
    sde = gle_sde(omega, beta, alphas, lambdas)
    params = {"omega": omega, "beta": beta, "alphas": alphas, "lambdas": lambdas}
    return Model(ModelSpec("gle", params), gle_symbol(omega, beta, alphas, lambdas), sde, sde.names)


def gle_ground_exponent(omega, beta, m) -> np.ndarray:
    """Exponent matrix of ``exp(-(beta/4)(omega^2 x^2 + y^2 + |z|^2))``."""
    return beta / 4 * np.diag([omega ** 2] + [1.0] * (m + 1))


def gle_charpoly_m1(omega, alpha, lam) -> np.ndarray:
    """Coefficients ``[1, 0, c4, 0, c2, 0, c0]`` of ``det(F - X I)`` for ``m = 1``."""
    c4 = 0.25 * (alpha ** 2 - 2 * lam ** 2 - 2 * omega ** 2)
    c2 = ((lam ** 2 + omega ** 2) ** 2 - 2 * omega ** 2 * alpha ** 2) / 16
    c0 = omega ** 4 * alpha ** 2 / 64
    return np.array([1.0, 0.0, c4, 0.0, c2, 0.0, c0])


def cubic_roots(c2, c1, c0) -> list[complex]:
    """Roots of ``Y^3 + c2 Y^2 + c1 Y + c0`` by Cardano's formula in complex arithmetic."""
    shift = c2 / 3
    p = c1 - c2 ** 2 / 3
    q = 2 * c2 ** 3 / 27 - c2 * c1 / 3 + c0
    disc = cmath.sqrt(q ** 2 / 4 + p ** 3 / 27)
    u3 = -q / 2 + disc
    if abs(u3) < abs(-q / 2 - disc):
        u3 = -q / 2 - disc
    if u3 == 0:
        return [-shift] * 3
    u = u3 ** (1 / 3)
    omega = cmath.exp(2j * math.pi / 3)
    roots = []
    for k in range(3):
        uk = u * omega ** k
        y = uk - p / (3 * uk) - shift
        # Cardano loses relative accuracy on small roots when the roots differ
        # in scale by orders of magnitude; Newton restores it
        for _ in range(4):
            f = ((y + c2) * y + c1) * y + c0
            df = (3 * y + 2 * c2) * y + c1
            if df == 0:
                break
            y = y - f / df
        roots.append(y)
    return roots


def gle_tau0_closed_form(omega, alpha, lam) -> float:
    """Gap for ``m = 1`` from the cubic in ``Y = X^2`` (independent of any eigensolver)."""
    _, _, c4, _, c2, _, c0 = gle_charpoly_m1(omega, alpha, lam)
    ims = []
    for Y in cubic_roots(c4, c2, c0):
        X = cmath.sqrt(Y)
        ims.append(abs(X.imag))
    return 2 * min(ims)


def gle_tau0(omega, beta, alpha, lam) -> float:
    sym = gle_symbol(omega, beta, [alpha], [lam])
    return spectrum_report(eigen_clusters(hamilton_map(sym)), re_cutoff=0.0).tau0


def _sweep_cell(args):
    omega, beta, alpha, lam = args
    row = {"alpha": alpha, "lambda": lam, "tau0": math.nan, "tau0_closed_form": math.nan, "status": "ok"}
    try:
        row["tau0"] = gle_tau0(omega, beta, alpha, lam)
        row["tau0_closed_form"] = gle_tau0_closed_form(omega, alpha, lam)
    except QuadgapError as exc:
        row["status"] = type(exc).__name__
    return row


def _run_cells(cells, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_cell, cells, chunksize=64))
    return [_sweep_cell(c) for c in cells]


def gle_gap_sweep(omega, beta, alpha_grid, lambda_grid, workers: int = 1) -> list[dict]:
    """``tau0`` on the grid ``alpha_grid x lambda_grid`` (``m = 1``), rows in grid order.

    Each cell carries the eigenvalue-pipeline value and the cubic-root
    value; a failing cell gets the exception name as status instead of
    aborting the sweep.
    """
    cells = [(omega, beta, float(a), float(l)) for a in alpha_grid for l in lambda_grid]
    return _run_cells(cells, workers)


def gle_fixed_gamma_sweep(omega, beta, gamma, lambda_grid, workers: int = 1) -> list[dict]:
    """``tau0`` along ``alpha = lambda^2 / gamma``."""
    cells = [(omega, beta, float(l) ** 2 / gamma, float(l)) for l in lambda_grid]
    return _run_cells(cells, workers)


def sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([repr(float(r["alpha"])), repr(float(r["lambda"])), repr(float(r["tau0"])),
                    repr(float(r["tau0_closed_form"])), r["status"]])
    return buf.getvalue()


def drift_mismatch(model: Model) -> float:
    """Distance between ``{-2 i l : Im l > 0}`` over Hamilton-map eigenvalues and minus the drift spectrum.

    Raises
    ------
    UnstableDrift
        If the drift is not stable; the two sets then differ (e.g. KFP with ``a < 0``).
    """
    ev = np.linalg.eigvals(model.sde.drift)
    if np.max(ev.real) >= 0:
        raise UnstableDrift("drift has an eigenvalue with Re >= 0")
    return drift_correspondence(hamilton_map(model.symbol), model.sde.drift)


def build_model(kind: str, **params) -> Model:
    """Construct a model by name: ``kfp``, ``chains`` or ``gle``."""
    if kind == "kfp":
        return kfp_model(params["a"])
    if kind == "chains":
        return chains_model(params["a"], params["b"], params["c"], params["alpha"],
                            params["alpha1"], params["alpha2"])
    if kind == "gle":
        return gle_model(params["omega"], params["beta"], params["alphas"], params["lambdas"])
    raise ParameterDomain(f"unknown model {kind!r}")
