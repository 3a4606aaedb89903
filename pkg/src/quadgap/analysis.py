"""End-to-end analysis of one symbol: structure, spectrum, ground state, checks."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularSpaceNonzero
from .ground_state import (GroundState, ground_state, orthogonality_check, positive_lagrangian,
                           realness_check)
from .hamilton import hamilton_map
from .spectrum import SpectrumReport, eigen_clusters, spectrum_report
from .structure import TOL_RANK, SingularSpaceReport, check_no_real_eigenvalues, singular_space
from .symbol import QuadraticSymbol, check_accretive, symbol_from_dict, symbol_to_dict

FLAG_NAMES = ("accretive", "real", "orthogonality", "no_real_eigenvalues")


@dataclass(frozen=True)
class AnalysisBundle:
    """Everything ``analyze`` reports about one symbol.

    ``spectrum`` and ``ground_state`` are None when ``S != {0}``; the
    ``orthogonality`` flag is None when the check could not be run.
    """

    provenance: dict
    symbol: QuadraticSymbol = field(repr=False)
    singular: SingularSpaceReport
    spectrum: SpectrumReport | None
    ground_state: GroundState | None
    flags: dict
    orthogonality_distance: float | None = None

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "symbol": symbol_to_dict(self.symbol),
            "singular_space": self.singular.to_dict(),
            "spectrum": None if self.spectrum is None else self.spectrum.to_dict(),
            "ground_state": None if self.ground_state is None else self.ground_state.to_dict(),
            "flags": {k: self.flags.get(k) for k in FLAG_NAMES},
            "orthogonality_distance": self.orthogonality_distance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> AnalysisBundle:
        spec = data.get("spectrum")
        gs = data.get("ground_state")
        return cls(
            provenance=data["provenance"],
            symbol=symbol_from_dict(data["symbol"]),
            singular=SingularSpaceReport.from_dict(data["singular_space"]),
            spectrum=None if spec is None else SpectrumReport.from_dict(spec),
            ground_state=None if gs is None else GroundState.from_dict(gs),
            flags=dict(data["flags"]),
            orthogonality_distance=data.get("orthogonality_distance"),
        )

    @classmethod
    def from_json(cls, text: str) -> AnalysisBundle:
        return cls.from_dict(json.loads(text))

    def summary(self, names=None) -> str:
        lines = [f"dim S = {self.singular.dim}", f"partial kernels = {self.singular.partial_kernels}"]
        if self.singular.k0 is not None:
            lines.append(f"k0 = {self.singular.k0}  delta = {self.singular.delta:.6g}")
        if self.spectrum is not None:
            mu0 = self.spectrum.mu0
            lines.append(f"mu0 = {mu0.real:.12g}{mu0.imag:+.3g}i")
            lines.append(f"tau0 = {self.spectrum.tau0:.12g}")
            if self.flags.get("real") and abs(mu0.imag) > 1e-9 * max(1.0, abs(mu0)):
                lines.append("warning: real operator with non-real mu0")
            for c in self.spectrum.clusters:
                lines.append(f"  lambda = {c.lam.real:+.10g}{c.lam.imag:+.10g}i  r = {c.r}")
        if self.ground_state is not None:
            lines.append(f"u0 = exp({self.ground_state.exponent_string(names)})")
            A = self.ground_state.A
            A = A.real if np.all(np.abs(A.imag) < 1e-14) else A
            A = np.where(np.abs(A) < 1e-14, 0, A) + 0  # no "-0." entries
            lines.append("A =\n" + np.array2string(A, precision=10, suppress_small=True))
        lines.append("flags: " + ", ".join(f"{k}={self.flags.get(k)}" for k in FLAG_NAMES))
        return "\n".join(lines)


def analyze(sym: QuadraticSymbol, provenance: dict | None = None,
            tol_rank: float = TOL_RANK) -> AnalysisBundle:
    """Run symbol -> Hamilton map -> singular space -> spectrum -> ground state.

    Raises
    ------
    DomainError
        If the symbol is not accretive.
    SingularSpaceNonzero
        If ``S != {0}``; the exception carries the basis of ``S``.
    """
    accretive, min_eig = check_accretive(sym)
    if not accretive:
        raise DomainError(f"symbol is not accretive (min eig of Re Q = {min_eig:.3g})")
    hmap = hamilton_map(sym)
    report = singular_space(hmap, tol_rank=tol_rank)
    if report.dim > 0:
        raise SingularSpaceNonzero(f"singular space has dimension {report.dim}", report.basis)
    check_no_real_eigenvalues(hmap, report=report)
    spec = spectrum_report(eigen_clusters(hmap))
    gs = ground_state(positive_lagrangian(hmap), spec.mu0)
    passes, dist = orthogonality_check(sym)
    flags = {
        "accretive": True,
        "real": realness_check(sym),
        "orthogonality": passes,
        "no_real_eigenvalues": True,
    }
    return AnalysisBundle(provenance or {}, sym, report, spec, gs, flags, dist)
