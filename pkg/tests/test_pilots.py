import numpy as np
import pytest

from relaylab import (ConfigurationError, EstimationScheme, default_config,
                      draw_channels, estimate_channels, estimated_large_scale,
                      ls_estimate, pilot_book, simulate_pilot_phase, unit_profile,
                      with_estimates)
from relaylab.channels import LargeScaleProfile
from relaylab.pilots import PilotBook, composite_channels


class _FixedNoise:
    """Generator stand-in that returns queued standard-normal blocks."""

    def __init__(self, blocks):
        self._blocks = list(blocks)

    def standard_normal(self, shape):
        block = np.asarray(self._blocks.pop(0), dtype=float)
        assert block.shape == tuple(shape)
        return block


def test_pilot_books_are_row_orthonormal():
    for K, tau in [(2, 4), (3, 6), (3, 9), (5, 10)]:
        cfg = default_config(K=K, N_t=8, tau=tau)
        for scheme in EstimationScheme:
            book = pilot_book(cfg, scheme)
            gram = book.Phi @ book.Phi.conj().T
            assert np.allclose(gram, np.eye(book.Phi.shape[0]), atol=1e-12)


def test_too_short_pilots_rejected():
    with pytest.raises(ConfigurationError):
        PilotBook(Phi=np.ones((4, 3)) / np.sqrt(3), scheme=EstimationScheme.ICE)


def test_noiseless_pilot_inversion():
    cfg = default_config(K=2, N_t=8, N_r=6, sigma2_nr=1e-30)
    ch = draw_channels(cfg, unit_profile(2), np.random.default_rng(0))
    est = estimate_channels(cfg, ch, EstimationScheme.ICE, np.random.default_rng(1))
    assert np.allclose(est.G_hat, ch.G, atol=1e-12)
    assert np.allclose(est.F_hat, ch.F, atol=1e-12)


def test_received_pilot_block_hand_example():
    # scalar relay, two users, identity pilots, unit pilot power, pinned noise
    cfg = default_config(K=1, N_t=1, N_r=1, P_p_dB=0.0, tau=2, sigma2_nr=2.0)
    ch = draw_channels(cfg, unit_profile(1), np.random.default_rng(0))
    ch = ch.with_(G=np.array([[1.0 + 0j, 1j]]), F=np.array([[1.0 + 0j, 1j]]))
    book = PilotBook(Phi=np.eye(2, dtype=complex), scheme=EstimationScheme.ICE)
    # sigma2_nr = 2 makes the noise scale exactly 1, so Z = [0.1, 0] below
    noise = _FixedNoise([
        np.array([[0.1, 0.0]]), np.zeros((1, 2)),    # receive block: real, imag
        np.zeros((1, 2)), np.zeros((1, 2)),          # transmit block
    ])
    Y_r, _ = simulate_pilot_phase(cfg, ch, book, noise)
    expected = np.array([[np.sqrt(2) * 1 + 0.1, np.sqrt(2) * 1j]])
    assert np.allclose(Y_r, expected)


def test_composite_pair_sum_noiseless():
    cfg = default_config(K=1, N_t=4, N_r=4, sigma2_nr=1e-30)
    ch = draw_channels(cfg, unit_profile(1), np.random.default_rng(0))
    e1 = np.zeros((4, 1), dtype=complex)
    e1[0] = 1.0
    ch = ch.with_(G=np.hstack([e1, e1]), F=np.hstack([e1, e1]))
    est = estimate_channels(cfg, ch, EstimationScheme.CCE, np.random.default_rng(1))
    assert est.G_hat.shape == (4, 1)
    assert np.allclose(est.G_hat, 2 * e1, atol=1e-12)


def test_ls_error_variance():
    # per-entry error variance sigma2_nr / (tau P_p) = 1 / 100
    cfg = default_config(K=1, N_t=2, N_r=2, tau=10, P_p_dB=10.0, sigma2_nr=1.0)
    prof = unit_profile(1)
    book = pilot_book(cfg, EstimationScheme.ICE)
    rng = np.random.default_rng(42)
    err2 = 0.0
    n = 10_000
    for _ in range(n):
        ch = draw_channels(cfg, prof, rng, with_interference_channels=False)
        Y_r, Y_t = simulate_pilot_phase(cfg, ch, book, rng)
        G_hat, _ = ls_estimate(Y_r, Y_t, book, cfg.tau, cfg.P_p)
        err2 += np.mean(np.abs(G_hat - ch.G) ** 2)
    assert err2 / n == pytest.approx(0.01, rel=0.05)


def test_estimate_error_independent_of_channel():
    # sample cross-covariance between G and the estimation error -> 0
    cfg = default_config(K=1, N_t=2, N_r=1, tau=4)
    prof = unit_profile(1)
    rng = np.random.default_rng(3)
    n = 20_000
    cross = 0.0 + 0j
    for _ in range(n):
        ch = draw_channels(cfg, prof, rng, with_interference_channels=False)
        est = estimate_channels(cfg, ch, EstimationScheme.ICE, rng)
        cross += (est.G_hat[0, 0] - ch.G[0, 0]) * np.conj(ch.G[0, 0])
    cross /= n
    # per-sample std of the product is sqrt(err_var * beta) = sqrt(1/40)
    se = np.sqrt(cfg.sigma2_nr / (cfg.tau * cfg.P_p) / n)
    assert abs(cross) < 3 * se


def test_estimated_large_scale_values():
    cfg = default_config(K=1, N_t=4, tau=10, P_p_dB=10.0, sigma2_nr=1.0)
    prof = estimated_large_scale(unit_profile(1), cfg, EstimationScheme.ICE)
    assert np.allclose(prof.beta_u_hat, 1.01)
    assert np.allclose(prof.beta_d_hat, 1.01)


def test_estimation_floor_vanishes_with_pilot_power():
    cfg = default_config(K=1, N_t=4, P_p_dB=200.0)
    prof = estimated_large_scale(unit_profile(1), cfg, EstimationScheme.ICE)
    assert np.allclose(prof.beta_u_hat, prof.beta_u, rtol=1e-12)


def test_composite_coefficients_sum_when_training_halved():
    # tau_c = tau / 2 makes the composite estimate floor match the sum of
    # the per-user estimated coefficients exactly
    cfg = default_config(K=2, N_t=8, tau=8, tau_c=4)
    prof = LargeScaleProfile(beta_u=np.array([0.3, 1.1, 0.7, 2.0]),
                             beta_d=np.array([0.4, 0.9, 1.3, 0.6]))
    prof = estimated_large_scale(prof, cfg, EstimationScheme.ICE)
    prof = estimated_large_scale(prof, cfg, EstimationScheme.CCE)
    assert np.allclose(prof.beta_uc_hat,
                       prof.beta_u_hat[0::2] + prof.beta_u_hat[1::2], rtol=1e-15)
    assert np.allclose(prof.beta_dc_hat,
                       prof.beta_d_hat[0::2] + prof.beta_d_hat[1::2], rtol=1e-15)


def test_composite_row_covariance_matches_estimated_coefficients():
    # empirical covariance of the rows of the composite estimate
    cfg = default_config(K=2, N_t=4, N_r=4)
    prof = LargeScaleProfile(beta_u=np.array([0.5, 1.5, 0.8, 1.2]),
                             beta_d=np.ones(4))
    prof = estimated_large_scale(prof, cfg, EstimationScheme.CCE)
    rng = np.random.default_rng(9)
    acc = np.zeros((2, 2), dtype=complex)
    n = 10_000
    for _ in range(n):
        ch = draw_channels(cfg, prof, rng, with_interference_channels=False)
        est = estimate_channels(cfg, ch, EstimationScheme.CCE, rng)
        acc += est.G_hat.conj().T @ est.G_hat
    cov = acc / (n * cfg.N_r)
    assert np.allclose(np.diag(cov).real, prof.beta_uc_hat, rtol=0.02)
    off = cov[0, 1]
    assert abs(off) < 0.05 * max(prof.beta_uc_hat)


def test_with_estimates_is_idempotent():
    cfg = default_config(K=2, N_t=8)
    prof = with_estimates(unit_profile(2), cfg, EstimationScheme.ICE)
    assert with_estimates(prof, cfg, EstimationScheme.ICE) is prof
