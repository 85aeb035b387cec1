import numpy as np
import pytest

from relaylab import (LargeScaleProfile, default_config, draw_channels,
                      large_scale_from_geometry, symmetric_profile, unit_profile)


def test_breakpoint_distance_halves_gain():
    prof = large_scale_from_geometry([200.0, 200.0], 0.0, d0=200.0, pathloss_exponent=3.8)
    assert np.allclose(prof.beta_u, 0.5)


def test_zero_distance_limit():
    prof = large_scale_from_geometry([0.0, 0.0], 0.0, d0=200.0, pathloss_exponent=3.8)
    assert np.allclose(prof.beta_u, 1.0)


def test_pathloss_value_matches_direct_evaluation():
    # independent evaluation: 1 / (1 + (400/200)^3.8)
    expected = 1.0 / (1.0 + 2.0 ** 3.8)
    prof = large_scale_from_geometry([400.0, 400.0], 0.0, d0=200.0, pathloss_exponent=3.8)
    assert prof.beta_u[0] == pytest.approx(expected)
    assert prof.beta_u[0] == pytest.approx(0.0670, abs=5e-4)


def test_geometry_rejects_bad_inputs():
    with pytest.raises(ValueError):
        large_scale_from_geometry([-1.0, 1.0], 0.0, 200.0, 3.8)
    with pytest.raises(ValueError):
        large_scale_from_geometry([1.0, 1.0], 0.0, 0.0, 3.8)


def test_no_shadowing_is_deterministic():
    a = large_scale_from_geometry([120.0, 300.0], 0.0, 200.0, 3.8)
    b = large_scale_from_geometry([120.0, 300.0], 0.0, 200.0, 3.8)
    assert np.array_equal(a.beta_u, b.beta_u)


def test_shadowing_requires_rng():
    with pytest.raises(ValueError):
        large_scale_from_geometry([100.0, 100.0], 8.0, 200.0, 3.8)


def test_downlink_equals_uplink():
    rng = np.random.default_rng(0)
    prof = large_scale_from_geometry(rng.uniform(1, 500, 10), 8.0, 200.0, 3.8, rng)
    assert np.array_equal(prof.beta_u, prof.beta_d)


def test_profile_validation():
    with pytest.raises(ValueError):
        LargeScaleProfile(beta_u=np.ones(3), beta_d=np.ones(3))       # odd length
    with pytest.raises(ValueError):
        LargeScaleProfile(beta_u=np.array([1.0, 0.0]), beta_d=np.ones(2))
    with pytest.raises(ValueError):
        LargeScaleProfile(beta_u=np.ones(4), beta_d=np.ones(4),
                          beta_uc_hat=np.ones(3))                     # wrong hat length


def test_draw_channel_shapes_and_zero_variance_cases():
    cfg = default_config(K=2, N_t=12, N_r=8, sigma2_LI_dB=-np.inf)    # sigma2_LI = 0
    prof = unit_profile(2)
    ch = draw_channels(cfg, prof, np.random.default_rng(1))
    assert ch.G.shape == (8, 4) and ch.F.shape == (12, 4)
    assert ch.G_RR.shape == (8, 12) and np.all(ch.G_RR == 0)
    assert ch.Omega.shape == (4, 4)
    assert ch.G_hat is None


def test_draw_channels_dimension_mismatch():
    cfg = default_config(K=2, N_t=8)
    with pytest.raises(ValueError):
        draw_channels(cfg, unit_profile(3), np.random.default_rng(0))


def test_column_norm_concentration_single_draw():
    # chi-squared concentration: ||g||^2 / N_r within 3% at N_r = 10^4
    cfg = default_config(K=1, N_t=4, N_r=10_000)
    prof = unit_profile(1)
    ch = draw_channels(cfg, prof, np.random.default_rng(7))
    norms = np.sum(np.abs(ch.G) ** 2, axis=0) / cfg.N_r
    assert np.all((norms > 0.97) & (norms < 1.03))


def test_empirical_column_variance_matches_profile():
    # mean ||g_k||^2 / N_r over many draws approaches beta_u[k] within 2%
    cfg = default_config(K=2, N_t=8, N_r=32)
    prof = LargeScaleProfile(beta_u=np.array([0.5, 1.0, 2.0, 0.2]),
                             beta_d=np.ones(4))
    rng = np.random.default_rng(5)
    acc = np.zeros(4)
    n = 10_000
    for _ in range(n):
        ch = draw_channels(cfg, prof, rng, with_interference_channels=False)
        acc += np.sum(np.abs(ch.G) ** 2, axis=0) / cfg.N_r
    assert np.allclose(acc / n, prof.beta_u, rtol=0.02)


def test_symmetric_profile_repeats_pairs():
    prof = symmetric_profile([2.0, 0.5])
    assert prof.beta_u.tolist() == [2.0, 2.0, 0.5, 0.5]
