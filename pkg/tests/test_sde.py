import numpy as np
import pytest
from scipy.integrate import quad_vec
from scipy.linalg import expm

from quadgap import models
from quadgap.errors import DomainError, FitWindowTooShort, UnstableDrift
from quadgap.models import LinearSDE
from quadgap.sde import (EULER, SimConfig, empirical_gap, exact_transition, gaussian_noise,
                         lyapunov_residual, scheme_stationary_covariance, simulate,
                         stationary_covariance)


def noiseless(sde):
    return LinearSDE(sde.drift, np.zeros_like(sde.noise), None, sde.names)


@pytest.mark.parametrize("model", [
    models.kfp_model(1.0),
    models.kfp_model(0.2),
    models.gle_model(1.0, 1.0, [1.0], [1.0]),
    models.gle_model(1.3, 0.7, [0.5, 2.0], [1.0, -0.4]),
    models.chains_model(2, 1.5, 0.5, 1, 0.8, 1.2),
])
def test_lyapunov_identity(model):
    C = stationary_covariance(model.sde)
    assert lyapunov_residual(model.sde, C) <= 1e-10
    # the exact-Gaussian scheme has the continuous stationary law at any step
    assert np.allclose(scheme_stationary_covariance(model.sde, 0.7), C, atol=1e-10)
    E = model.sde.equilibrium_exponent
    if E is not None:
        assert np.allclose(C, np.linalg.inv(2 * E), atol=1e-10)


def test_exact_transition_against_quadrature():
    sde = models.gle_sde(1.0, 1.0, [1.0], [1.0])
    dt = 0.4
    Phi, C = exact_transition(sde, dt)
    B, SS = sde.drift, sde.noise @ sde.noise.T
    ref, _ = quad_vec(lambda s: expm(B * s) @ SS @ expm(B * s).T, 0, dt, epsabs=1e-13)
    assert np.allclose(Phi, expm(B * dt), atol=1e-14)
    assert np.allclose(C, ref, atol=1e-12)


def test_unstable_drift():
    sde = models.kfp_sde(-2.0)
    with pytest.raises(UnstableDrift):
        stationary_covariance(sde)
    with pytest.raises(UnstableDrift):
        simulate(sde, SimConfig(0.1, 1.0, 10), [1.0, 0.0])


def test_config_validation():
    with pytest.raises(DomainError):
        SimConfig(0.0, 1.0, 10)
    with pytest.raises(DomainError):
        SimConfig(2.0, 1.0, 10)
    with pytest.raises(DomainError):
        SimConfig(0.1, 1.0, 0)
    with pytest.raises(DomainError):
        SimConfig(0.1, 1.0, 10, scheme="milstein")
    assert SimConfig(0.1, 2.0, 1).n_steps == 20


def test_x0_shape():
    with pytest.raises(DomainError):
        simulate(models.kfp_sde(1.0), SimConfig(0.1, 1.0, 4), [1.0, 0.0, 0.0])


def test_noise_is_addressed_by_path():
    full = gaussian_noise(7, 3, 0, 50, 3)
    assert np.array_equal(full[10:23], gaussian_noise(7, 3, 10, 23, 3))
    assert not np.array_equal(full, gaussian_noise(7, 4, 0, 50, 3))
    assert not np.array_equal(full, gaussian_noise(8, 3, 0, 50, 3))


def test_noise_moments():
    z = gaussian_noise(1, 1, 0, 200_000, 2)
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1) < 0.01
    assert abs(np.corrcoef(z.T)[0, 1]) < 0.01


def test_reproducible_across_workers():
    sde = models.gle_sde(1.0, 1.0, [1.0], [1.0])
    cfg = SimConfig(0.1, 3.0, 5000, seed=42, chunk=700)
    a = simulate(sde, cfg, [1.0, 0.0, 0.0], workers=1)
    b = simulate(sde, cfg, [1.0, 0.0, 0.0], workers=4)
    for f in ("mean", "cov", "block_mean"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    # other chunk sizes only reorder the sums
    c = simulate(sde, SimConfig(0.1, 3.0, 5000, seed=42, chunk=1 << 16), [1.0, 0.0, 0.0])
    assert np.allclose(a.cov, c.cov, rtol=0, atol=1e-12)


def test_noiseless_exact_matches_ode():
    sde = noiseless(models.kfp_sde(1.0))
    st = simulate(sde, SimConfig(0.25, 5.0, 3, n_blocks=3), [1.0, 2.0])
    for t, m in zip(st.t, st.mean):
        assert np.allclose(m, expm(sde.drift * t) @ [1.0, 2.0], atol=1e-12)
    # second moment minus squared mean: cancellation at round-off level
    assert np.abs(st.cov).max() < 1e-14


def test_euler_first_order():
    sde = noiseless(models.kfp_sde(1.0))
    x0 = np.array([1.0, 0.0])
    ref = expm(sde.drift * 2.0) @ x0
    errs = []
    for dt in (1e-2, 5e-3, 2.5e-3):
        st = simulate(sde, SimConfig(dt, 2.0, 1, scheme=EULER, n_blocks=1), x0)
        errs.append(np.linalg.norm(st.mean[-1] - ref))
    for e1, e2 in zip(errs, errs[1:]):
        assert e1 / e2 == pytest.approx(2.0, abs=0.1)


def test_euler_dt_halving_within_ci():
    sde = models.kfp_sde(1.0)
    runs = []
    for dt in (0.02, 0.01):
        st = simulate(sde, SimConfig(dt, 6.0, 20_000, seed=5, scheme=EULER), [2.0, 0.0])
        runs.append(empirical_gap(st))
    a, b = runs
    ia = np.arange(len(a.t))
    ib = 2 * ia
    half = (a.norm_ci[ia, 1] - a.norm_ci[ia, 0] + b.norm_ci[ib, 1] - b.norm_ci[ib, 0]) / 2
    inside = np.abs(a.mean_norm[ia] - b.mean_norm[ib]) <= half
    # pointwise 95% bands: a few excursions are expected
    assert inside.mean() >= 0.9
    assert a.ci[0] <= b.ci[1] and b.ci[0] <= a.ci[1]


def test_noiseless_rate_real_slowest_mode():
    sde = models.gle_sde(1.0, 1.0, [10.0], [5.0])
    ev = np.linalg.eigvals(sde.drift)
    tau = -ev.real.max()
    assert abs(ev[np.argmax(ev.real)].imag) == 0
    st = simulate(noiseless(sde), SimConfig(0.1, np.ceil(10 / tau), 4, n_blocks=4), [1.0, 0.0, 0.0])
    est = empirical_gap(st, tau0=tau, t_burn=5.0)
    assert est.rate == pytest.approx(tau, abs=1e-6)
    assert est.mode_rate == pytest.approx(tau, abs=1e-6)


def test_noiseless_rate_oscillating_mode():
    sde = models.gle_sde(1.0, 1.0, [1.0], [1.0])
    tau = -np.linalg.eigvals(sde.drift).real.max()
    st = simulate(noiseless(sde), SimConfig(0.1, np.ceil(10 / tau), 4, n_blocks=4), [1.0, 0.0, 0.0])
    est = empirical_gap(st, tau0=tau)
    assert est.mode_rate == pytest.approx(tau, abs=1e-6)
    # the log-norm slope ripples with the oscillation
    assert abs(est.rate - tau) > 1e-4


def test_gle_draws_within_ci():
    rng = np.random.default_rng(11)
    for i in range(5):
        omega, alpha, lam = rng.uniform(0.5, 1.5), rng.uniform(0.5, 3), rng.uniform(0.5, 2)
        sde = models.gle_sde(omega, 1.0, [alpha], [lam])
        tau = -np.linalg.eigvals(sde.drift).real.max()
        st = simulate(sde, SimConfig(0.1, np.ceil(10 / tau), 20_000, seed=i), [5.0, 0.0, 0.0])
        est = empirical_gap(st, tau0=tau)
        assert est.mode_ci[0] <= tau <= est.mode_ci[1], (omega, alpha, lam, tau, est.mode_ci)


def test_fit_window_too_short():
    sde = models.kfp_sde(1.0)
    st = simulate(sde, SimConfig(0.1, 5.0, 100), [10.0, 0.0])
    with pytest.raises(FitWindowTooShort):
        empirical_gap(st, tau0=0.5)
    st = simulate(sde, SimConfig(0.1, 20.0, 100), [0.01, 0.0])
    with pytest.raises(FitWindowTooShort):
        empirical_gap(st, tau0=0.5)


def test_decay_csv():
    st = simulate(models.kfp_sde(1.0), SimConfig(0.5, 20.0, 2000, seed=3), [10.0, 0.0])
    est = empirical_gap(st, tau0=0.5, c_inf=np.eye(2))
    lines = est.to_csv().splitlines()
    assert lines[0] == "t,mean_norm,cov_err,ci_lo,ci_hi"
    assert len(lines) == len(st.t) + 1
    assert est.ratio == pytest.approx(est.rate / 0.5)
    assert est.cov_rate is not None and est.cov_rate > 0
