"""Spectrum of ``q^w`` from the eigenvalues of the Hamilton map.

For ``S = {0}`` the spectrum is the lattice
``{ sum_l (r_l + 2 k_l)(-i l) : k_l >= 0 }`` over eigenvalues ``l`` of ``F``
with ``Im l > 0``, ``r_l`` being algebraic multiplicities.  The bottom
eigenvalue is ``mu0 = sum_l -i l r_l`` and the gap ``tau0 = 2 min Im l``.

Eigenvalues here are those of ``F`` itself (not ``2F``).  With this
convention ``{-2 i l}`` coincides with ``{-m}`` for ``m`` running over the
drift eigenvalues of the companion linear SDE, see
:func:`drift_correspondence`.
"""
from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur
from scipy.optimize import linear_sum_assignment

from .errors import EmptyCluster, PairingViolation, RealEigenvalue, ZeroParameter
from .hamilton import HamiltonMap


@dataclass(frozen=True)
class EigenCluster:
    """Group of numerically coincident eigenvalues of ``F`` with ``Im > 0``.

    ``lam`` is the mean of the members, which is far better conditioned
    than the individual members when the eigenvalue is defective.
    """

    lam: complex
    r: int
    members: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class SpectrumReport:
    clusters: list[EigenCluster]
    mu0: complex
    tau0: float
    low_lying: list[tuple[complex, tuple[int, ...]]] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "clusters": [
                {"lambda": [c.lam.real, c.lam.imag], "r": c.r} for c in self.clusters
            ],
            "mu0": [self.mu0.real, self.mu0.imag],
            "tau0": self.tau0,
            "low_lying": [
                {"value": [v.real, v.imag], "k": list(k)} for v, k in self.low_lying
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> SpectrumReport:
        clusters = [
            EigenCluster(complex(*c["lambda"]), int(c["r"]), (complex(*c["lambda"]),) * int(c["r"]))
            for c in data["clusters"]
        ]
        low = [(complex(*e["value"]), tuple(int(k) for k in e["k"])) for e in data["low_lying"]]
        return cls(clusters, complex(*data["mu0"]), float(data["tau0"]), low)

    def low_lying_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im"] + [f"k{i}" for i in range(len(self.clusters))])
        for v, k in self.low_lying:
            w.writerow([repr(v.real), repr(v.imag)] + list(k))
        return buf.getvalue()


def _merge(values: np.ndarray, tol: float) -> list[list[int]]:
    """Transitive single-linkage grouping of points closer than ``tol``."""
    parent = list(range(len(values)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(len(values)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def eigenvalues(hmap: HamiltonMap) -> np.ndarray:
    T, _ = schur(hmap.F.astype(complex), output="complex")
    return np.diag(T).copy()


def eigen_clusters(hmap: HamiltonMap, tol_cluster: float | None = None) -> list[EigenCluster]:
    """Cluster the eigenvalues of ``F`` and keep those with ``Im > 0``.

    Raises
    ------
    RealEigenvalue
        If some cluster sits on the real axis (impossible when ``S = {0}``).
    PairingViolation
        If some cluster has no mirror ``-lambda`` of equal multiplicity.
    """
    if tol_cluster is None:
        tol_cluster = 1e-7 * max(hmap.norm, np.finfo(float).tiny)
    ev = eigenvalues(hmap)
    groups = _merge(ev, tol_cluster)
    all_clusters = [EigenCluster(complex(np.mean(ev[g])), len(g), tuple(ev[g])) for g in groups]
    for c in all_clusters:
        if abs(c.lam.imag) <= tol_cluster:
            raise RealEigenvalue(f"eigenvalue {c.lam:.6g} of F is (numerically) real")
    for c in all_clusters:
        mirrors = [m for m in all_clusters if abs(m.lam + c.lam) <= tol_cluster * max(1, c.r)]
        if not mirrors or sum(m.r for m in mirrors) != c.r:
            raise PairingViolation(f"eigenvalue {c.lam:.6g} has no mirror -lambda of equal multiplicity")
    upper = [c for c in all_clusters if c.lam.imag > 0]
    upper.sort(key=lambda c: (c.lam.imag, c.lam.real))
    return upper


def lattice_value(clusters: list[EigenCluster], k) -> complex:
    return complex(sum((c.r + 2 * kk) * (-1j * c.lam) for c, kk in zip(clusters, k)))


def spectrum_report(clusters: list[EigenCluster], re_cutoff: float | None = None,
                    max_points: int = 100_000) -> SpectrumReport:
    """Bottom eigenvalue, gap and the low-lying part of the spectrum lattice.

    Enumerates index vectors best-first by real part until the real part
    exceeds ``Re mu0 + re_cutoff`` (default ``10 tau0``).
    """
    if not clusters:
        raise EmptyCluster("no eigenvalue of F with positive imaginary part")
    mu0 = complex(sum(-1j * c.lam * c.r for c in clusters))
    tau0 = 2 * min(c.lam.imag for c in clusters)
    if re_cutoff is None:
        re_cutoff = 10 * tau0
    steps = [2 * (-1j * c.lam) for c in clusters]
    start = (0,) * len(clusters)
    heap = [(mu0.real, start)]
    seen = {start}
    out = []
    while heap and len(out) < max_points:
        re, k = heapq.heappop(heap)
        if re > mu0.real + re_cutoff + 1e-12 * max(1.0, abs(mu0)):
            break
        out.append((mu0 + sum(kk * s for kk, s in zip(k, steps)), k))
        for i in range(len(k)):
            nk = k[:i] + (k[i] + 1,) + k[i + 1:]
            if nk not in seen:
                seen.add(nk)
                heapq.heappush(heap, (re + steps[i].real, nk))
    out.sort(key=lambda e: (e[0].real, e[0].imag, e[1]))
    return SpectrumReport(list(clusters), mu0, float(tau0), out)


def kfp_closed_forms(a: float) -> tuple[float, float]:
    """``(mu0, tau0)`` of the Kramers-Fokker-Planck symbol with potential ``a x^2 / 2``."""
    if a == 0:
        raise ZeroParameter("a must be nonzero")
    s = math.sqrt(1 - 4 * a) if a <= 0.25 else None
    if a < 0:
        return s / 2, (s - 1) / 2
    if a <= 0.25:
        return 0.5, (1 - s) / 2
    return 0.5, 0.5


def drift_correspondence(hmap: HamiltonMap, drift: np.ndarray) -> float:
    """Largest mismatch between ``{-2 i l : Im l > 0}`` and ``{-m : m in eig(drift)}``.

    Both sides are multisets of the same size for the model library; they
    are paired by a minimum-cost assignment and the largest paired distance
    is returned.
    """
    ev = eigenvalues(hmap)
    left = -2j * ev[ev.imag > 0]
    right = -np.linalg.eigvals(drift)
    if len(left) != len(right):
        return math.inf
    cost = np.abs(left[:, None] - right[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
