"""Command-line interface.

Exit codes
----------
0  success
1  ``verify``: at least one check failed
2  bad arguments, unreadable input or parameter-domain error
3  the singular space is nonzero (its basis is printed)
4  numerical ambiguity (rank decision, quadrature, clustering, ...)
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import galerkin, models, sde
from .analysis import AnalysisBundle, analyze
from .errors import DomainError, NumericalAmbiguity, QuadgapError, SingularSpaceNonzero
from .hermite import HermiteTruncation
from .spectrum import kfp_closed_forms
from .ground_state import symbol_ground_state
from .structure import TOL_RANK
from .symbol import dilate, read_symbol_file

EXIT_OK, EXIT_FAIL, EXIT_DOMAIN, EXIT_SINGULAR, EXIT_AMBIGUOUS = 0, 1, 2, 3, 4
# Hermite functions per axis used by verify when --N is not given
DEFAULT_N = {2: 24, 3: 14}
AUTO_STEP = {2: 16, 3: 4}
MAX_AUTO_N = {2: 72, 3: 24}
# auto-N stops once refinement moves the lowest eigenvalue less than this
AUTO_SHIFT_TOL = 1e-7


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_model_args(p: argparse.ArgumentParser, symbol: bool = True):
    p.add_argument("--model", choices=["kfp", "chains", "gle"])
    if symbol:
        p.add_argument("--symbol", type=Path, help="JSON symbol file with fields n, Q_re, Q_im")
    g = p.add_argument_group("model parameters")
    g.add_argument("--a", type=float, help="KFP potential / chains pinning a")
    g.add_argument("--b", type=float, default=1.5, help="chains pinning b")
    g.add_argument("--c", type=float, default=0.5, help="chains coupling c")
    g.add_argument("--alpha", type=float, help="chains alpha; GLE alpha for m = 1")
    g.add_argument("--alpha1", type=float, default=1.0)
    g.add_argument("--alpha2", type=float, default=1.0)
    g.add_argument("--omega", type=float, default=1.0)
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--lam", type=float, help="GLE lambda for m = 1")
    g.add_argument("--m", type=int, default=1, help="GLE number of auxiliary variables")
    g.add_argument("--alphas", type=_floats, help="GLE alpha_j, comma separated")
    g.add_argument("--lambdas", type=_floats, help="GLE lambda_j, comma separated")


def _model_from_args(args) -> models.Model:
    if args.model == "kfp":
        return models.kfp_model(1.0 if args.a is None else args.a)
    if args.model == "chains":
        a = 2.0 if args.a is None else args.a
        alpha = 1.0 if args.alpha is None else args.alpha
        return models.chains_model(a, args.b, args.c, alpha, args.alpha1, args.alpha2)
    alphas = args.alphas or [args.alpha if args.alpha is not None else 1.0] * args.m
    lambdas = args.lambdas or [args.lam if args.lam is not None else 1.0] * len(alphas)
    return models.gle_model(args.omega, args.beta, alphas, lambdas)


def _horizon(tau0: float) -> float:
    # ceil(10 / tau0), robust to round-off in tau0
    return float(math.ceil(10 / tau0 - 1e-9))


def _write(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, newline="\n")


# -- analyze --------------------------------------------------------------------

def cmd_analyze(args) -> int:
    if (args.symbol is None) == (args.model is None):
        raise DomainError("give exactly one of --symbol and --model")
    if args.symbol is not None:
        try:
            sym = read_symbol_file(args.symbol)
        except (OSError, ValueError) as exc:
            raise DomainError(f"cannot read {args.symbol}: {exc}") from None
        prov, names = {"source": "file", "path": str(args.symbol)}, None
    else:
        model = _model_from_args(args)
        sym, names = model.symbol, list(model.names)
        prov = {"source": "model", "model": model.spec.kind, "params": model.spec.params}
    bundle = analyze(sym, prov, tol_rank=args.tol_rank)
    print(bundle.summary(names))
    if args.out is not None:
        args.out.write_text(bundle.to_json())
    return EXIT_OK


# -- sweep ----------------------------------------------------------------------

def _grid(lo, hi, n, spacing):
    return np.geomspace(lo, hi, n) if spacing == "log" else np.linspace(lo, hi, n)


def cmd_sweep(args) -> int:
    lams = _grid(args.lambda_min, args.lambda_max, args.lambda_n, args.spacing)
    if args.gamma is not None:
        rows = models.gle_fixed_gamma_sweep(args.omega, args.beta, args.gamma, lams, args.workers)
    else:
        alphas = _grid(args.alpha_min, args.alpha_max, args.alpha_n, args.spacing)
        rows = models.gle_gap_sweep(args.omega, args.beta, alphas, lams, args.workers)
    _write(models.sweep_csv(rows), args.out)
    bad = sum(r["status"] != "ok" for r in rows)
    if bad:
        print(f"{bad} of {len(rows)} cells failed", file=sys.stderr)
    return EXIT_AMBIGUOUS if bad == len(rows) else EXIT_OK


# -- oracle ---------------------------------------------------------------------

def cmd_oracle(args) -> int:
    model = _model_from_args(args)
    bundle = analyze(model.symbol)
    sym, gs = model.symbol, bundle.ground_state
    if args.dilate:
        sym = dilate(sym, galerkin.matched_scales(gs.A))
        gs = symbol_ground_state(sym)
    trunc = HermiteTruncation(sym.n, args.N)
    op = galerkin.quantize(sym, trunc)
    low = galerkin.low_eigs(op, args.count)
    analytic = np.array([v for v, _ in bundle.spectrum.low_lying])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "galerkin_re", "galerkin_im", "analytic_re", "analytic_im", "abs_err", "converged"])
    for i, (v, ok) in enumerate(zip(low.values, low.converged)):
        ref = analytic[np.argmin(np.abs(analytic - v))] if len(analytic) else complex("nan")
        w.writerow([i, repr(float(v.real)), repr(float(v.imag)), repr(float(ref.real)),
                    repr(float(ref.imag)), repr(float(abs(v - ref))), bool(ok)])
    _write(buf.getvalue(), args.out)
    res = galerkin.ground_state_residual(op, gs)
    print(f"ground-state residual {res:.3e}", file=sys.stderr)
    if args.t_grid:
        t = np.linspace(*args.t_grid[:2], int(args.t_grid[2]) if len(args.t_grid) > 2 else 21)
        u = galerkin.basis_vector(trunc, [1] + [0] * (sym.n - 1))
        dec = galerkin.semigroup_decay(op, gs, u, t)
        print(f"semigroup decay rate {dec.fitted_rate:.6g} (tau0 {bundle.spectrum.tau0:.6g}) "
              f"window [{dec.window[0]:g}, {dec.window[1]:g}]", file=sys.stderr)
    return EXIT_OK


# -- simulate -------------------------------------------------------------------

def cmd_simulate(args) -> int:
    model = _model_from_args(args)
    bundle = analyze(model.symbol)
    tau0 = bundle.spectrum.tau0
    d = model.sde.dim
    x0 = args.x0 if args.x0 else [10.0] + [0.0] * (d - 1)
    t_final = args.t_final if args.t_final else _horizon(tau0)
    cfg = sde.SimConfig(args.dt, t_final, args.paths, args.seed, args.scheme)
    stats = sde.simulate(model.sde, cfg, x0, workers=args.workers)
    est = sde.empirical_gap(stats, tau0, c_inf=sde.stationary_covariance(model.sde))
    _write(est.to_csv(), args.out)
    print(f"mean-decay rate {est.rate:.6g} CI [{est.ci[0]:.6g}, {est.ci[1]:.6g}] window [{est.window[0]:g}, {est.window[1]:g}]; "
          f"slowest-mode rate {est.mode_rate:.6g} CI [{est.mode_ci[0]:.6g}, {est.mode_ci[1]:.6g}]; "
          f"tau0 {tau0:.6g}; covariance-decay rate {est.cov_rate}", file=sys.stderr)
    return EXIT_OK


# -- verify ---------------------------------------------------------------------

class Report:
    def __init__(self):
        self.rows = []

    def add(self, name, ok, value):
        status = {True: "PASS", False: "FAIL", None: "SKIP"}.get(ok, ok)
        self.rows.append((name, status, value))
        print(f"{status:16s} {name}: {value}")

    @property
    def failed(self) -> bool:
        return any(s == "FAIL" for _, s, _ in self.rows)


def _basis_variants(bundle: AnalysisBundle, mode: str) -> list:
    """Dilations to try: matched to ``u0`` first (unless trivial), then none."""
    scales = galerkin.matched_scales(bundle.ground_state.A)
    out = []
    if mode != "off" and not np.allclose(scales, 1, rtol=1e-3):
        out.append(scales)
    if mode != "on" or not out:
        out.append(None)
    return out


def _galerkin_auto(sym, N: int, grow: bool):
    """Lowest Galerkin eigenvalue, enlarging ``N`` until refinement agrees if ``grow``."""
    step = AUTO_STEP.get(sym.n, 0) if grow else 0
    while True:
        op = galerkin.quantize(sym, HermiteTruncation(sym.n, N))
        low = galerkin.low_eigs(op, 1)
        settled = bool(low.converged[0]) and low.shifts[0] <= AUTO_SHIFT_TOL * max(1.0, abs(low.values[0]))
        if settled or not step or N + step > MAX_AUTO_N.get(sym.n, N):
            return op, low, N, settled
        N += step


def _verify_common(rep: Report, model: models.Model, bundle: AnalysisBundle, args, orth_expected: bool):
    sym = model.symbol
    ok, dist = bundle.flags["orthogonality"], bundle.orthogonality_distance
    if orth_expected is None:
        rep.add("orthogonality (adjoint shares u0)", "INFO", f"{ok}, distance {dist:.3g}")
    elif orth_expected:
        rep.add("orthogonality (adjoint shares u0)", ok, f"distance {dist:.3g}")
    else:
        rep.add("orthogonality (adjoint shares u0)", "EXPECTED-ABSENT" if not ok else False,
                f"distance {dist:.3g}")
    try:
        err = models.drift_mismatch(model)
        rep.add("drift spectrum correspondence", err <= 1e-8, f"{err:.3g}")
    except DomainError as exc:
        rep.add("drift spectrum correspondence", None, str(exc))
    N0 = args.N or DEFAULT_N.get(sym.n)
    if N0 is None:
        rep.add("galerkin lowest eigenvalue", None, f"no default truncation for n = {sym.n}")
        return
    best = None
    for scales in _basis_variants(bundle, args.dilate):
        s = sym if scales is None else dilate(sym, scales)
        # a matched dilation either works at N0 or not at all, so only the plain basis grows
        run = _galerkin_auto(s, N0, grow=not args.N and scales is None) + (scales,)
        if best is None or run[1].shifts[0] < best[1].shifts[0]:
            best = run
        if run[3] or args.N:
            break
    op, low, N, _, scales = best
    gs = bundle.ground_state if scales is None else symbol_ground_state(op.symbol)
    basis = "plain" if scales is None else "dilated " + np.array2string(scales, precision=4)
    err = abs(low.values[0] - bundle.spectrum.mu0)
    rep.add("galerkin lowest eigenvalue = mu0", err <= 1e-6,
            f"{low.values[0]:.10g} (err {err:.2e}, N = {N}, {basis} basis, "
            f"refinement shift {low.shifts[0]:.1e})")
    res = galerkin.ground_state_residual(op, gs)
    rep.add("ground-state residual", res <= 1e-6, f"{res:.2e}")
    if orth_expected and sym.n == 2:
        u = galerkin.basis_vector(op.trunc, [1, 0])
        dec = galerkin.semigroup_decay(op, gs, u, np.linspace(2, 12, 21))
        tau0 = bundle.spectrum.tau0
        rep.add("semigroup decay rate ~ tau0", abs(dec.fitted_rate - tau0) <= 0.05 * tau0,
                f"{dec.fitted_rate:.6g} vs {tau0:.6g}")


def _verify_sim(rep: Report, model: models.Model, tau0: float, args):
    try:
        C = sde.stationary_covariance(model.sde)
    except DomainError as exc:
        rep.add("SDE simulation", None, str(exc))
        return
    res = sde.lyapunov_residual(model.sde, C)
    rep.add("stationary covariance Lyapunov identity", res <= 1e-10, f"{res:.2e}")
    E = model.sde.equilibrium_exponent
    if E is not None:
        err = float(np.max(np.abs(C - np.linalg.inv(2 * E))))
        rep.add("stationary covariance = Maxwellian", err <= 1e-10, f"{err:.2e}")
    if args.no_sim:
        rep.add("empirical mean-decay rate", None, "skipped (--no-sim)")
        return
    d = model.sde.dim
    cfg = sde.SimConfig(args.dt, _horizon(tau0), args.paths, args.seed)
    stats = sde.simulate(model.sde, cfg, [10.0] + [0.0] * (d - 1))
    est = sde.empirical_gap(stats, tau0, c_inf=C)
    rep.add("empirical mean-decay rate ~ tau0 (10%)", abs(est.rate - tau0) <= 0.1 * tau0,
            f"{est.rate:.6g} CI [{est.ci[0]:.4g}, {est.ci[1]:.4g}] vs {tau0:.6g}")


def cmd_verify(args) -> int:
    model = _model_from_args(args)
    rep = Report()
    kind = model.spec.kind
    try:
        bundle = analyze(model.symbol, tol_rank=args.tol_rank)
    except SingularSpaceNonzero as exc:
        degenerate = kind == "chains" and abs(model.m_c) < 1e-12
        rep.add("singular space", "EXPECTED-NONZERO" if degenerate else False, str(exc))
        return EXIT_FAIL if rep.failed else EXIT_OK
    sp, gs, ss = bundle.spectrum, bundle.ground_state, bundle.singular
    if kind == "kfp":
        a = model.spec.params["a"]
        mu0, tau0 = kfp_closed_forms(a)
        rep.add("mu0 closed form", abs(sp.mu0 - mu0) <= 1e-9, f"{sp.mu0.real:.12g} vs {mu0:.12g}")
        rep.add("tau0 closed form", abs(sp.tau0 - tau0) <= 1e-9, f"{sp.tau0:.12g} vs {tau0:.12g}")
        err = float(np.max(np.abs(gs.A - models.kfp_ground_exponent(a))))
        rep.add("ground-state exponent", err <= 1e-8, f"{err:.2e}")
        rep.add("k0 = 1", ss.k0 == 1, ss.k0)
        _verify_common(rep, model, bundle, args, orth_expected=a > 0)
    elif kind == "gle":
        p = model.spec.params
        mu0 = 0.5 * sum(p["alphas"])
        rep.add("mu0 = sum(alpha)/2", abs(sp.mu0 - mu0) <= 1e-9, f"{sp.mu0.real:.12g} vs {mu0:.12g}")
        err = float(np.max(np.abs(gs.A - models.gle_ground_exponent(p["omega"], p["beta"], len(p["alphas"])))))
        rep.add("ground-state exponent", err <= 1e-8, f"{err:.2e}")
        rep.add("k0 = 2", ss.k0 == 2, ss.k0)
        if len(p["alphas"]) == 1:
            t_cf = models.gle_tau0_closed_form(p["omega"], p["alphas"][0], p["lambdas"][0])
            rep.add("tau0 = cubic-root oracle", abs(sp.tau0 - t_cf) <= 1e-9, f"{sp.tau0:.12g} vs {t_cf:.12g}")
        _verify_common(rep, model, bundle, args, orth_expected=True)
    else:
        rep.add("k0 = 2", ss.k0 == 2, ss.k0)
        rep.add("partial kernels [8, 4, 0]", ss.partial_kernels[:3] == [8, 4, 0], ss.partial_kernels)
        rep.add("mu0 real part > 0", sp.mu0.real > 0, f"{sp.mu0.real:.12g}")
        _verify_common(rep, model, bundle, args, orth_expected=None)
    _verify_sim(rep, model, sp.tau0, args)
    print("overall:", "FAIL" if rep.failed else "PASS")
    return EXIT_FAIL if rep.failed else EXIT_OK


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadgap", description=__doc__.split("\n")[0],
                                     formatter_class=argparse.RawDescriptionHelpFormatter,
                                     epilog=__doc__.split("\n", 2)[2])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="structure, spectrum and ground state of one symbol")
    _add_model_args(p)
    p.add_argument("--tol-rank", type=float, default=TOL_RANK)
    p.add_argument("--out", type=Path, help="write the analysis bundle as JSON")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="GLE (m = 1) gap over a parameter grid, as CSV")
    p.add_argument("--model", choices=["gle"], default="gle")
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--alpha-min", type=float, default=0.05)
    p.add_argument("--alpha-max", type=float, default=100.0)
    p.add_argument("--alpha-n", type=int, default=50)
    p.add_argument("--lambda-min", type=float, default=0.5)
    p.add_argument("--lambda-max", type=float, default=5.0)
    p.add_argument("--lambda-n", type=int, default=50)
    p.add_argument("--gamma", type=float, help="fixed gamma = lambda^2 / alpha; sweeps lambda only")
    p.add_argument("--spacing", choices=["log", "linear"], default="log")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="closed forms, Galerkin and simulation checks for a model")
    _add_model_args(p, symbol=False)
    p.add_argument("--tol-rank", type=float, default=TOL_RANK)
    p.add_argument("--N", type=int, help="Hermite functions per axis (default 24 for n = 2, 14 for n = 3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paths", type=int, default=20000)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--no-sim", action="store_true", help="skip the stochastic simulation")
    p.add_argument("--dilate", choices=["auto", "on", "off"], default="auto",
                   help="Galerkin basis dilated to the width of u0 (auto: try it first)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="simulate the model SDE, emit binned statistics as CSV")
    _add_model_args(p, symbol=False)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--t-final", type=float, help="default ceil(10 / tau0)")
    p.add_argument("--paths", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", choices=[sde.EXACT, sde.EULER], default=sde.EXACT)
    p.add_argument("--x0", type=_floats, help="initial point, comma separated (default 10 e1)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="Galerkin eigenvalues against the analytic spectrum, as CSV")
    _add_model_args(p, symbol=False)
    p.add_argument("--N", type=int, default=24)
    p.add_argument("--count", type=int, default=6)
    p.add_argument("--t-grid", type=_floats, help="t_start,t_end[,count] for a semigroup decay fit")
    p.add_argument("--dilate", action="store_true", help="dilate the Hermite basis to the width of u0")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "analyze" and getattr(args, "model", None) is None:
        parser.error("--model is required")
    try:
        return args.func(args)
    except SingularSpaceNonzero as exc:
        print(f"singular space S != {{0}}: {exc}", file=sys.stderr)
        if exc.basis is not None:
            print("basis of S (columns):")
            print(np.array2string(np.asarray(exc.basis), precision=8, suppress_small=True))
        return EXIT_SINGULAR
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalAmbiguity as exc:
        print(f"numerically ambiguous: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except QuadgapError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS


if __name__ == "__main__":
    sys.exit(main())
