"""Exact three-by-three evolution generator: spectra, modes, exceptional sets."""

import numpy as np
import pytest

import noisyqah as nq

WEAK = nq.NoiseStrengths(0.05, 0.0, 0.01)


def _hand_matrix(h, w):
    hx, hy, hz = h
    wx, wy, wz = w
    return 2.0 * np.array([
        [-(wy + wz), -hz, hy],
        [hz, -(wx + wz), -hx],
        [-hy, hx, -(wx + wy)],
    ])


def test_matrix_formula():
    h = np.array([0.3, -0.7, 1.1])
    w = (0.2, 0.05, 0.4)
    np.testing.assert_allclose(
        nq.liouvillian_matrix(h, nq.NoiseStrengths(*w)), _hand_matrix(h, w))


def test_build_from_momentum(weak_params):
    k = (0.9, -1.3)
    L = nq.build_liouvillian(k, weak_params, WEAK)
    h = nq.bloch_vector(k, weak_params).as_array()
    np.testing.assert_allclose(L.matrix, _hand_matrix(h, WEAK.as_array()))


def test_trace_counts_total_noise():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h = rng.normal(size=3)
        w = rng.uniform(0, 2, size=3)
        L = nq.Liouvillian(nq.liouvillian_matrix(h, nq.NoiseStrengths(*w)))
        assert L.trace == pytest.approx(-4.0 * w.sum(), rel=1e-12)


def test_noise_free_spectrum(weak_params):
    k = (0.9, -1.3)
    h = nq.bloch_vector(k, weak_params).as_array()
    hn = np.linalg.norm(h)
    es = nq.eigensystem(nq.build_liouvillian(k, weak_params, nq.NoiseStrengths(0, 0, 0)))
    assert not es.overdamped
    assert es.lambda0 == pytest.approx(0.0, abs=1e-12)
    assert es.lambda1 == pytest.approx(0.0, abs=1e-12)
    assert es.omega == pytest.approx(2.0 * hn, rel=1e-12)
    # the non-decaying mode points along the precession axis
    v = np.real(es.right[0])
    v /= np.linalg.norm(v)
    assert abs(v @ (h / hn)) == pytest.approx(1.0, abs=1e-10)
    axis = nq.Liouvillian(
        nq.liouvillian_matrix(h, nq.NoiseStrengths(0, 0, 0))).precession_axis()
    np.testing.assert_allclose(axis, h / hn, atol=1e-12)


def test_decay_rates_nonnegative():
    rng = np.random.default_rng(1)
    for _ in range(40):
        h = rng.normal(size=3) * 2
        w = nq.NoiseStrengths(*rng.uniform(0, 1.5, size=3))
        try:
            es = nq.eigensystem(nq.Liouvillian(nq.liouvillian_matrix(h, w)))
        except nq.Defective:
            continue
        assert es.lambda0 > -1e-9
        assert es.lambda1 > -1e-9


def test_biorthonormality(weak_params):
    es = nq.eigensystem(nq.build_liouvillian((0.7, 0.2), weak_params, WEAK))
    assert es.biorthonormality_residual() < 1e-9


def test_mode_reconstruction_matches_exact_evolution(weak_params):
    k = (1.0, -0.5)
    dec = nq.mode_decomposition(nq.build_liouvillian(k, weak_params, WEAK), nq.S_INIT)
    np.testing.assert_allclose(dec.evaluate(0.0), nq.S_INIT, atol=1e-10)
    times = np.linspace(0.0, 30.0, 61)
    traj = nq.exact_evolution(k, weak_params, WEAK, nq.S_INIT, times)
    np.testing.assert_allclose(dec.evaluate(times), traj.polarization, atol=1e-9)


def test_rescaled_removes_decay(weak_params):
    dec = nq.mode_decomposition(nq.build_liouvillian((1.0, -0.5), weak_params, WEAK),
                                nq.S_INIT)
    np.testing.assert_allclose(dec.rescaled(0.0),
                               dec.s0 + 2.0 * np.real(dec.s_plus), atol=1e-12)
    # rescaled signal is periodic with the mode frequency
    T = 2 * np.pi / dec.omega
    np.testing.assert_allclose(dec.rescaled(0.3), dec.rescaled(0.3 + T), atol=1e-10)


def test_exact_mean_spin_length_never_grows(weak_params):
    times = np.linspace(0.0, 30.0, 301)
    traj = nq.exact_evolution((1.0, -0.5), weak_params, WEAK, nq.S_INIT, times)
    norms = np.linalg.norm(traj.polarization, axis=1)
    assert norms[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(norms) < 1e-10)


def test_band_inversion_point_averages_to_zero(weak_params):
    # on the inversion ring hz = 0, the spin-down state is orthogonal to
    # the rotation axis: the exact unitary average over one full period
    # vanishes identically
    kc = float(np.arccos(0.6))
    h = nq.bloch_vector((kc, kc), weak_params).as_array()
    assert abs(h[2]) < 1e-12
    period = np.pi / np.linalg.norm(h)
    times = np.arange(64) * (period / 64)  # endpoint-exclusive
    traj = nq.exact_evolution((kc, kc), weak_params, nq.NoiseStrengths(0, 0, 0),
                              nq.S_INIT, times)
    np.testing.assert_allclose(traj.polarization.mean(axis=0), 0.0, atol=1e-9)


def test_origin_is_defective_for_planar_strong_noise(type2_params, type2_noise):
    with pytest.raises(nq.Defective):
        nq.mode_decomposition(
            nq.build_liouvillian((0.0, 0.0), type2_params, type2_noise), nq.S_INIT)


def test_overdamped_region_gives_real_rates(type1_params, type1_noise):
    # deep inside the degenerate lens the spectrum is purely real
    dec = nq.mode_decomposition(
        nq.build_liouvillian((1.36, 0.0), type1_params, type1_noise), nq.S_INIT)
    assert dec.overdamped
    assert dec.omega == 0.0
    times = np.linspace(0.0, 30.0, 31)
    traj = nq.exact_evolution((1.36, 0.0), type1_params, type1_noise,
                              nq.S_INIT, times)
    np.testing.assert_allclose(dec.evaluate(times), traj.polarization, atol=1e-8)


def test_exceptional_points_weak_noise_absent(weak_params):
    assert nq.find_exceptional_points(weak_params, WEAK, grid_n=101) == []


def test_exceptional_points_type1_structure(type1_params, type1_noise):
    clusters = nq.find_exceptional_points(type1_params, type1_noise, grid_n=201)
    assert clusters
    assert not any(c.charge_coincident for c in clusters)
    big = max(clusters, key=lambda c: c.n_cells)
    assert big.n_cells > 10
    assert abs(abs(big.centroid[0]) - 1.36) < 0.05
    assert abs(big.centroid[1]) < 0.05
    assert big.min_angle < 0.05  # eigenvectors coalesce on the ring


def test_exceptional_points_type2_at_charge(type2_params, type2_noise):
    clusters = nq.find_exceptional_points(type2_params, type2_noise, grid_n=201)
    assert len(clusters) == 1
    c = clusters[0]
    assert c.charge_coincident
    np.testing.assert_allclose(c.centroid, [0.0, 0.0], atol=0.05)
    assert c.distance_to((0.0, 0.0)) < 0.05


def test_omega_map_matches_pointwise(weak_params):
    kxs = np.linspace(-1.5, 1.5, 5)
    kys = np.linspace(-1.5, 1.5, 4)
    om = nq.omega_map(weak_params, WEAK, kxs, kys)
    assert om.shape == (5, 4)
    for i, kx in enumerate(kxs):
        for j, ky in enumerate(kys):
            assert om[i, j] == pytest.approx(
                nq.oscillation_frequency((kx, ky), weak_params, WEAK), rel=1e-12)


def test_oscillation_frequency_noise_free_limit(weak_params):
    k = (0.4, -0.9)
    hn = np.linalg.norm(nq.bloch_vector(k, weak_params).as_array())
    w0 = nq.NoiseStrengths(0, 0, 0)
    assert nq.oscillation_frequency(k, weak_params, w0) == pytest.approx(2 * hn, rel=1e-12)
