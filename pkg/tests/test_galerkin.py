import numpy as np
import pytest

from quadgap import models
from quadgap.errors import DomainError
from quadgap.galerkin import (DENSE_LIMIT, accretivity_defect, basis_vector, edge_mass, fit_decay_rate,
                              ground_state_residual, low_eigs, matched_scales, quantize,
                              semigroup_decay)
from quadgap.ground_state import symbol_ground_state
from quadgap.hamilton import hamilton_map
from quadgap.hermite import HermiteTruncation, gaussian_coefficients, lowering
from quadgap.spectrum import eigen_clusters, spectrum_report
from quadgap.symbol import dilate, make_symbol
from symgen import random_accretive


def test_ho_diagonal(ho):
    M = quantize(ho, HermiteTruncation(1, 10)).dense
    # no truncation pollution: exact up to round-off
    assert np.allclose(M, np.diag(np.arange(1, 20, 2)), rtol=0, atol=1e-13)
    ev = low_eigs(quantize(ho, HermiteTruncation(1, 10)), 5)
    assert np.allclose(ev.values, [1, 3, 5, 7, 9], atol=1e-13)
    assert ev.converged.all()


def test_x_xi_quantization():
    # Weyl(x xi) = (xD + Dx)/2 = -(i/2)(a^2 - (a^T)^2)
    N = 12
    M = quantize(make_symbol(1, [[0, 1], [0, 0]]), HermiteTruncation(1, N)).dense
    a = lowering(N)
    assert np.allclose(M, -0.5j * (a @ a - a.T @ a.T), atol=1e-14)
    assert abs(np.trace(M)) < 1e-14


def test_quantize_dimension_check(ho):
    with pytest.raises(DomainError):
        quantize(ho, HermiteTruncation(2, 8))


@pytest.mark.parametrize("seed", range(5))
def test_adjoint_is_conjugate_symbol(seed):
    sym = random_accretive(np.random.default_rng(seed), 2)
    tr = HermiteTruncation(2, 10)
    M = quantize(sym, tr).dense
    Mc = quantize(sym.conj(), tr).dense
    assert np.max(np.abs(Mc - M.conj().T)) <= 1e-12 * max(1.0, np.abs(M).max())


@pytest.mark.parametrize("seed", range(5))
def test_accretivity_transfer(seed):
    sym = random_accretive(np.random.default_rng(seed), 2, "rank_one" if seed % 2 else "generic")
    for N in (6, 12):
        assert accretivity_defect(quantize(sym, HermiteTruncation(2, N))) >= -1e-12 * sym.norm * N


def test_kfp_low_lying():
    sym = models.kfp_symbol(1.0)
    ev = low_eigs(quantize(sym, HermiteTruncation(2, 24)), 6)
    rep = spectrum_report(eigen_clusters(hamilton_map(sym)), re_cutoff=1.0)
    expected = [v for v, _ in rep.low_lying]
    assert len(expected) == 6
    for v in ev.values:
        assert np.min(np.abs(np.array(expected) - v)) <= 1e-6
    assert ev.converged.all()
    assert ev.values[0] == pytest.approx(0.5, abs=1e-6)


def test_kfp_negative_filters_edge_modes():
    op = quantize(models.kfp_symbol(-2.0), HermiteTruncation(2, 48))
    ev = low_eigs(op, 2)
    assert ev.values[0] == pytest.approx(1.5, abs=1e-5)
    assert ev.converged[0]
    assert np.all(ev.values.real > 1.4)
    assert np.all(ev.tails <= 0.5)
    # the raw truncated matrix does carry a spurious mode near 1/2 on the last levels
    w, V = np.linalg.eig(quantize(models.kfp_symbol(-2.0), HermiteTruncation(2, 24)).dense)
    i = np.argmin(w.real)
    assert w[i].real < 1.0
    assert edge_mass(HermiteTruncation(2, 24), V[:, [i]])[0] > 0.5


def test_gle_lowest():
    op = quantize(models.gle_symbol(1, 1, [1], [1]), HermiteTruncation(3, 14))
    ev = low_eigs(op, 1)
    assert ev.values[0] == pytest.approx(0.5, abs=1e-5)


def test_dense_matches_sparse():
    op = quantize(models.kfp_symbol(1.0), HermiteTruncation(2, 44))
    assert op.size == 1936
    # six values close the Re = 1.5 triple, so no tie is split
    dense = low_eigs(op, 6, method="dense").values
    sparse = low_eigs(op, 6, method="sparse").values
    for v in dense:
        assert np.min(np.abs(sparse - v)) <= 1e-9


def test_low_eigs_count():
    op = quantize(make_symbol(1, np.eye(2)), HermiteTruncation(1, 4))
    with pytest.raises(DomainError):
        low_eigs(op, 5)


@pytest.mark.parametrize("a", [1.0, 0.2, -2.0])
def test_ground_state_residual(a):
    sym = models.kfp_symbol(a)
    gs = symbol_ground_state(sym)
    op = quantize(sym, HermiteTruncation(2, 24))
    assert ground_state_residual(op, gs) <= 1e-10


def test_naive_residual_decreases():
    sym = models.kfp_symbol(1.0)
    gs = symbol_ground_state(sym)
    res = [ground_state_residual(quantize(sym, HermiteTruncation(2, N)), gs, exact_tail=False)
           for N in (8, 16, 24, 32)]
    assert all(b < a for a, b in zip(res, res[1:]))
    assert res[-1] < 1e-6


def test_semigroup_ground_state_is_stationary(kfp1):
    """Starting from ``u0`` nothing moves beyond the basis-truncation error of ``u0``."""
    gs = symbol_ground_state(kfp1.symbol)
    worst = []
    for N in (16, 24, 32):
        tr = HermiteTruncation(2, N)
        out = semigroup_decay(quantize(kfp1.symbol, tr), gs, gaussian_coefficients(gs.A, N),
                              np.linspace(0.5, 5, 10))
        assert out.c_u == pytest.approx(1, abs=1e-14)
        worst.append(out.norms.max())
    assert worst[0] > worst[1] > worst[2]
    assert worst[2] < 1e-7


def test_semigroup_exact_fixed_point(ho):
    # for the oscillator the truncated u0 is an exact eigenvector
    tr = HermiteTruncation(1, 12)
    gs = symbol_ground_state(ho)
    out = semigroup_decay(quantize(ho, tr), gs, gaussian_coefficients(gs.A, 12), [1.0, 2.0, 3.0])
    assert out.norms.max() < 1e-13
    assert out.fitted_rate == np.inf


def test_semigroup_rate_kfp(kfp1):
    tr = HermiteTruncation(2, 24)
    gs = symbol_ground_state(kfp1.symbol)
    out = semigroup_decay(quantize(kfp1.symbol, tr), gs, basis_vector(tr, (1, 0)),
                          np.linspace(2, 12, 41))
    assert 0.475 <= out.fitted_rate <= 0.525


def test_semigroup_grid_validation(kfp1):
    tr = HermiteTruncation(2, 8)
    gs = symbol_ground_state(kfp1.symbol)
    op = quantize(kfp1.symbol, tr)
    with pytest.raises(DomainError):
        semigroup_decay(op, gs, basis_vector(tr, (0, 0)), [0.0, 1.0])
    with pytest.raises(DomainError):
        semigroup_decay(op, gs, basis_vector(tr, (0, 0)), [2.0, 1.0])


def test_fit_decay_rate_synthetic():
    t = np.linspace(0, 10, 51)
    y = 3 * np.exp(-0.7 * t) * (1 + 0.01 * np.sin(5 * t))
    rate, window, r2 = fit_decay_rate(t, y)
    assert rate == pytest.approx(0.7, rel=1e-2)
    assert r2 > 0.999
    assert window[1] - window[0] >= 5
    with pytest.raises(DomainError):
        fit_decay_rate(t[:3], y[:3])


def test_matched_dilation_resolves_wide_ground_state():
    sym = models.kfp_symbol(0.1)
    tr = HermiteTruncation(2, 24)
    plain = low_eigs(quantize(sym, tr), 1)
    scales = matched_scales(symbol_ground_state(sym).A)
    assert np.allclose(scales, [np.sqrt(20), np.sqrt(2)])
    d = dilate(sym, scales)
    assert np.allclose(np.diag(symbol_ground_state(d).A.real), 0.5)
    wide = low_eigs(quantize(d, tr), 1)
    assert abs(plain.values[0] - 0.5) > 1e-3
    assert wide.values[0] == pytest.approx(0.5, abs=1e-12)


def test_semigroup_sparse_path_matches_dense(kfp1):
    gs = symbol_ground_state(kfp1.symbol)
    t = np.linspace(1, 4, 7)
    tr = HermiteTruncation(2, 42)
    assert tr.size > DENSE_LIMIT
    big = semigroup_decay(quantize(kfp1.symbol, tr), gs, basis_vector(tr, (1, 0)), t)
    tr = HermiteTruncation(2, 40)
    small = semigroup_decay(quantize(kfp1.symbol, tr), gs, basis_vector(tr, (1, 0)), t)
    assert np.allclose(big.norms, small.norms, rtol=1e-6)
