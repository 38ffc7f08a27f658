"""Blind mode recovery from sampled trajectories."""

import numpy as np
import pytest

import noisyqah as nq
from noisyqah.trajectory import SpinTrajectory

WEAK = nq.NoiseStrengths(0.05, 0.0, 0.01)
TYPE1 = nq.NoiseStrengths(0.1, 0.05, 0.45)
P = nq.QahParams(xi0=1.0, xi_so=0.2, mz=1.2)
P_SO = nq.QahParams(xi0=1.0, xi_so=0.2, mz=1.2)

# slow-beat momentum: the exact mode oscillates at 0.0527/ms, under one
# period inside the 30 ms window
K_SLOW = (-1.2857142857142858, -0.2571428571428571)


def _clean_traj(k, p, w, n=151, t_total=30.0):
    times = np.linspace(0.0, t_total, n)
    dec = nq.mode_decomposition(nq.build_liouvillian(k, p, w), nq.S_INIT)
    return SpinTrajectory(k, times, dec.evaluate(times)), dec


def test_round_trip_on_clean_data():
    ks = np.linspace(-1.6, 1.6, 5)
    for kx in ks:
        for ky in ks:
            traj, dec = _clean_traj((kx, ky), P, WEAK)
            fit = nq.fit_modes(traj)
            assert fit.converged
            assert fit.residual_rms < 1e-6
            got = fit.decomposition
            if np.linalg.norm(dec.s_plus) < 1e-8:
                # symmetry point: the initial state is an eigenmode, the
                # data holds no oscillation to recover; the reproduction
                # is all that is testable
                np.testing.assert_allclose(got.evaluate(traj.times),
                                           traj.polarization, atol=1e-8)
                continue
            np.testing.assert_allclose(got.s0, dec.s0, atol=1e-6)
            assert got.omega == pytest.approx(dec.omega, rel=1e-5)
            assert got.lambda0 == pytest.approx(dec.lambda0, abs=1e-5)
            assert got.lambda1 == pytest.approx(dec.lambda1, abs=1e-5)


def test_fit_recovers_oscillation_from_noisy_ensemble():
    # decay-dominated spectra: the multi-start search must not settle
    # into the near-constant local minimum
    k = (-1.35, -1.35)
    sched = nq.EvolutionSchedule(30.0, 300, 2)
    ens = nq.ensemble_average(k, P, WEAK, sched, seed=11, n_configs=300)
    fit = nq.fit_modes(ens, cfg=nq.FitConfig(residual_threshold=max(0.05, 300 ** -0.5)))
    assert fit.converged
    omega_exact = nq.oscillation_frequency(k, P, WEAK)
    assert fit.decomposition.omega == pytest.approx(omega_exact, rel=0.1)


def test_unresolvable_oscillation_reported_as_overdamped():
    # the window holds less than one period: a blind fit must report the
    # non-oscillating decay actually seen, not the hidden slow beat
    traj, dec = _clean_traj(K_SLOW, P_SO, TYPE1)
    assert 0 < dec.omega < 2 * np.pi / 30.0
    fit = nq.fit_modes(traj)
    assert fit.converged
    assert fit.decomposition.overdamped
    assert fit.residual_rms < 0.01


def test_known_modes_bypass_the_window_rule():
    # with the generating decomposition supplied, the same data fits as
    # the slow oscillation it truly is
    traj, dec = _clean_traj(K_SLOW, P_SO, TYPE1)
    fit = nq.fit_modes(traj, init_guess=dec)
    assert fit.converged
    assert not fit.decomposition.overdamped
    assert fit.decomposition.omega == pytest.approx(dec.omega, rel=1e-3)


def test_constant_trajectory_fast_path():
    times = np.linspace(0.0, 3.0, 20)
    pol = np.tile([0.1, -0.2, 0.3], (20, 1))
    fit = nq.fit_modes(SpinTrajectory((0.0, 0.0), times, pol))
    assert fit.converged and fit.n_iterations == 0
    np.testing.assert_allclose(fit.decomposition.s0, [0.1, -0.2, 0.3])
    assert fit.decomposition.omega == 0.0
    assert np.all(fit.decomposition.s_plus == 0)


def test_noise_floor_flags_degenerate_data():
    times = np.linspace(0.0, 3.0, 40)
    pol = np.tile([0.1, -0.2, 0.3], (40, 1))
    pol[:, 0] += 1e-6 * np.sin(times)
    with pytest.raises(nq.DegenerateData):
        nq.fit_modes(SpinTrajectory((0.0, 0.0), times, pol),
                     cfg=nq.FitConfig(noise_floor=1e-3))


def test_too_few_samples_rejected():
    times = np.linspace(0.0, 3.0, 8)
    pol = np.zeros((8, 3))
    pol[:, 2] = np.cos(times)
    with pytest.raises(ValueError):
        nq.fit_modes(SpinTrajectory((0.0, 0.0), times, pol))


def test_unstructured_data_diverges():
    rng = np.random.default_rng(0)
    times = np.linspace(0.0, 30.0, 151)
    pol = rng.uniform(-1, 1, size=(151, 3))
    with pytest.raises(nq.FitDiverged):
        nq.fit_modes(SpinTrajectory((0.0, 0.0), times, pol))


def test_rescale_requires_convergence():
    dec = nq.ModeDecomposition(
        s0=np.zeros(3), s_plus=np.zeros(3, dtype=complex),
        s_minus=np.zeros(3, dtype=complex), lambda0=0.0, lambda1=0.0, omega=1.0)
    bad = nq.FitResult(dec, residual_rms=1.0, converged=False, n_iterations=10)
    with pytest.raises(nq.FitDiverged):
        nq.rescale(bad, np.linspace(0, 1, 5))


def test_rescale_and_time_average():
    traj, dec = _clean_traj((1.0, -0.5), P, WEAK)
    fit = nq.fit_modes(traj)
    omega = fit.decomposition.omega
    period = 2 * np.pi / omega
    # integer number of periods, endpoint-exclusive: the sample mean of
    # the rescaled signal collapses onto the steady component
    times = np.arange(256) * (3 * period / 256)
    rt = nq.rescale(fit, times)
    assert rt.s_tilde.shape == (256, 3)
    np.testing.assert_allclose(nq.time_average(rt), fit.decomposition.s0, atol=1e-8)
    # the rescaled signal carries no decay envelope
    np.testing.assert_allclose(rt.s_tilde[0], fit.decomposition.rescaled(0.0),
                               atol=1e-9)


def test_texture_average_is_steady_component():
    _, dec = _clean_traj((1.0, -0.5), P, WEAK)
    np.testing.assert_allclose(nq.texture_average(dec), dec.s0, atol=1e-15)
    # overdamped: every real mode survives the rescaling, so all three
    # contribute to the long-window average
    dec_od = nq.mode_decomposition(
        nq.build_liouvillian((1.36, 0.0), P_SO, TYPE1), nq.S_INIT)
    assert dec_od.overdamped
    expect = dec_od.s0 + dec_od.s_plus.real + dec_od.s_minus.real
    np.testing.assert_allclose(nq.texture_average(dec_od), expect, atol=1e-12)


def test_fit_matches_oracle_through_noise():
    k = (1.2857142857142856, -1.8)
    sched = nq.EvolutionSchedule(30.0, 300, 2)
    ens = nq.ensemble_average(k, P, WEAK, sched, seed=7, n_configs=500)
    fit = nq.fit_modes(ens, cfg=nq.FitConfig(residual_threshold=max(0.05, 500 ** -0.5)))
    dec = nq.mode_decomposition(nq.build_liouvillian(k, P, WEAK), nq.S_INIT)
    assert fit.decomposition.omega == pytest.approx(dec.omega, rel=0.1)
    np.testing.assert_allclose(nq.texture_average(fit.decomposition),
                               nq.texture_average(dec), atol=0.15)
