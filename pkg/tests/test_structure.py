import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quadgap import models
from quadgap.errors import RankAmbiguous, SingularSpaceNonzero
from quadgap.hamilton import average_re, hamilton_map
from quadgap.structure import (SingularSpaceReport, check_no_real_eigenvalues,
                               partial_ellipticity_on_S, singular_space)
from quadgap.symbol import make_symbol
from symgen import KINDS, random_accretive


def report(sym, **kw):
    return singular_space(hamilton_map(sym), **kw)


@pytest.mark.parametrize("a", [-2.0, -0.1, 0.2, 1.0, 5.0])
def test_kfp_index(a):
    r = report(models.kfp_symbol(a))
    assert (r.dim, r.k0) == (0, 1)
    assert r.delta == pytest.approx(2 / 3)


@pytest.mark.parametrize("abc", [(2, 1.5, 0.5), (2, 2, 1), (3, 0.5, 0.2)])
def test_chains_index(abc):
    r = report(models.chains_symbol(*abc, 1, 1, 1))
    assert models.morse_quantity(*abc) != 0
    assert (r.dim, r.k0) == (0, 2)
    assert r.partial_kernels[:3] == [8, 4, 0]
    assert r.delta == pytest.approx(4 / 5)


def test_chains_degenerate():
    assert models.morse_quantity(1, 1, 1) == 0
    r = report(models.chains_symbol(1, 1, 1, 1, 1, 1))
    assert r.dim >= 1 and r.k0 is None and r.delta is None
    B = r.basis
    assert np.allclose(B.T @ B, np.eye(r.dim), atol=1e-12)
    h = hamilton_map(models.chains_symbol(1, 1, 1, 1, 1, 1))
    P = np.eye(12)
    for _ in range(12):
        assert np.abs(h.F_re @ P @ B).max() < 1e-9
        P = h.F_im @ P


@pytest.mark.parametrize("m", [1, 2, 3])
def test_gle_index(m):
    rng = np.random.default_rng(m)
    sym = models.gle_symbol(1.2, 0.8, rng.uniform(0.2, 3, m), rng.uniform(0.3, 2, m))
    r = report(sym)
    assert (r.dim, r.k0) == (0, 2)
    assert r.partial_kernels[:3] == [4, 2, 0]


def test_ho_index(ho):
    r = report(ho)
    assert (r.dim, r.k0, r.delta) == (0, 0, 0.0)
    assert r.partial_kernels == [0, 0]


def test_x_squared_has_xi_axis():
    r = report(make_symbol(1, [[1, 0], [0, 0]]))
    assert r.dim == 1
    assert abs(abs(r.basis[1, 0]) - 1) < 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from(KINDS), st.integers(1, 3))
def test_report_invariants(seed, kind, n):
    sym = random_accretive(np.random.default_rng(seed), n, kind)
    r = report(sym)
    pk = r.partial_kernels
    assert len(pk) == 2 * n
    assert all(a >= b for a, b in zip(pk, pk[1:]))
    assert r.dim == pk[-1]
    if r.dim == 0:
        assert pk[r.k0] == 0 and (r.k0 == 0 or pk[r.k0 - 1] > 0)
        assert 0 <= r.delta < 1
    else:
        assert r.k0 is None


@given(st.integers(0, 2**32 - 1), st.sampled_from(KINDS))
def test_scale_invariance(seed, kind):
    sym = random_accretive(np.random.default_rng(seed), 2, kind)
    base = report(sym)
    for c in (1e-3, 1.0, 1e3):
        r = report(sym.scaled(c))
        assert (r.dim, r.k0, r.partial_kernels) == (base.dim, base.k0, base.partial_kernels)


def test_rank_ambiguous():
    # a direction that is almost, but not quite, in the kernel of Re q
    sym = make_symbol(1, np.diag([1.0, 3e-9]))
    with pytest.raises(RankAmbiguous):
        report(sym)
    assert report(sym, tol_rank=1e-12).dim == 0


def test_report_round_trip():
    r = report(models.chains_symbol(1, 1, 1, 1, 1, 1))
    back = SingularSpaceReport.from_dict(r.to_dict())
    assert back.dim == r.dim and back.partial_kernels == r.partial_kernels
    assert np.array_equal(back.basis, r.basis)
    r0 = report(models.kfp_symbol(1.0))
    assert SingularSpaceReport.from_dict(r0.to_dict()).basis.shape == (4, 0)


def test_no_real_eigenvalues(ho):
    assert check_no_real_eigenvalues(hamilton_map(models.kfp_symbol(1.0)))
    assert check_no_real_eigenvalues(hamilton_map(ho))
    with pytest.raises(SingularSpaceNonzero):
        check_no_real_eigenvalues(hamilton_map(make_symbol(1, [[1, 0], [0, 0]])))


def test_partial_ellipticity(ho):
    xx = make_symbol(1, [[1, 0], [0, 0]])
    assert partial_ellipticity_on_S(ho, report(ho))
    assert not partial_ellipticity_on_S(xx, report(xx))
    # S = whole plane and q = i(x^2 + xi^2) is elliptic there
    iho = make_symbol(1, 1j * np.eye(2))
    assert partial_ellipticity_on_S(iho, report(iho))


def test_degenerate_direction_in_average_kernel():
    """The null vector of the averaged real part lies in S."""
    sym = models.chains_symbol(1, 1, 1, 1, 1, 1)
    r = report(sym)
    M, _ = average_re(sym)
    w, V = np.linalg.eigh(M)
    v = V[:, 0]
    assert np.linalg.norm(v - r.basis @ (r.basis.T @ v)) < 1e-6
