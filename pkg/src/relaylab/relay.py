"""Relay processing: MRC/MRT weights, fixed-gain factor and received SINR."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, LargeScaleProfile, draw_channels
from .config import ConfigurationError, EstimationScheme, SystemConfig, partner_indices
from .pilots import estimate_channels, with_estimates

DEFAULT_SINR_CAP = 1e12


@dataclass(frozen=True)
class DeltaTerms:
    """Second-order statistics of the relay transmit signal.

    ``delta1`` is the mean forwarded user-signal power Tr(W G G^H W^H),
    ``delta2`` the mean weight power Tr(W W^H) and ``delta3`` the constant
    entering the user-side interference and noise terms of the closed-form
    SINR, all for the given estimation scheme.
    """

    delta1: float
    delta2: float
    delta3: float
    scheme: EstimationScheme


def mrc_mrt(G_hat: np.ndarray, F_hat: np.ndarray, scheme: EstimationScheme) -> np.ndarray:
    """Maximum-ratio combine/transmit weights from channel estimates.

    Per-user estimates: W = conj(F_hat) T conj(G_hat)^T with T the pair
    permutation, so each user's stream is beamformed towards its partner.
    Per-pair composite estimates need no permutation: W = conj(F_hat) G_hat^H.
    """
    if G_hat.shape[1] != F_hat.shape[1]:
        raise ValueError("estimate column counts differ between uplink and downlink")
    if scheme is EstimationScheme.ICE:
        if G_hat.shape[1] % 2:
            raise ValueError("per-user estimates must have an even column count")
        part = partner_indices(G_hat.shape[1])
        return F_hat[:, part].conj() @ G_hat.conj().T
    return F_hat.conj() @ G_hat.conj().T


@dataclass(frozen=True, eq=False)
class RelayWeights:
    """Processing matrix plus the statistical power-control factor."""

    W: np.ndarray
    alpha: float
    scheme: EstimationScheme


def delta_terms_closed_form(profile: LargeScaleProfile,
                            config: SystemConfig,
                            scheme: EstimationScheme,
                            power_scaling: bool = False) -> DeltaTerms:
    """Closed-form delta terms from the large-scale coefficients.

    With ``power_scaling`` the extra vanishing-power correction is kept in
    ``delta3`` (relevant when P_S and P_R shrink like 1/N).
    """
    profile = with_estimates(profile, config, scheme)
    N_r, N_t = config.N_r, config.N_t
    bu = profile.beta_u
    sum_bu = bu.sum()
    if scheme is EstimationScheme.ICE:
        part = partner_indices(profile.n_users)
        bu_hat, bd_hat = profile.beta_u_hat, profile.beta_d_hat
        d1 = N_t * np.sum(bd_hat * (N_r**2 * bu[part] ** 2 + N_r * bu_hat[part] * sum_bu))
        d2 = N_t * N_r * np.sum(bd_hat * bu_hat[part])
        pair_power = np.sum(bd_hat * bu[part] ** 2)
        cross = np.sum(bd_hat * bu_hat[part])
    else:
        bu_sq = bu[0::2] ** 2 + bu[1::2] ** 2
        buc_hat, bdc_hat = profile.beta_uc_hat, profile.beta_dc_hat
        d1 = N_t * np.sum(bdc_hat * (N_r**2 * bu_sq + N_r * buc_hat * sum_bu))
        d2 = N_t * N_r * np.sum(bdc_hat * buc_hat)
        pair_power = np.sum(bdc_hat * bu_sq)
        cross = np.sum(bdc_hat * buc_hat)
    if config.P_R > 0:
        d3 = (config.P_S / config.P_R) * pair_power
        if power_scaling:
            d3 += config.sigma2_nr / (N_r * config.P_R) * cross
    else:
        d3 = np.inf
    return DeltaTerms(delta1=float(d1), delta2=float(d2), delta3=float(d3), scheme=scheme)


def delta_terms_empirical(config: SystemConfig,
                          profile: LargeScaleProfile,
                          scheme: EstimationScheme,
                          n_trials: int,
                          rng: np.random.Generator) -> DeltaTerms:
    """Monte Carlo estimate of the delta terms over fresh channel draws.

    Each trial runs the full training phase, builds the MRC/MRT weights
    and accumulates ||W G||_F^2 and ||W||_F^2. ``delta3`` is a profile
    constant, not an expectation, and is copied from the closed form.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    d1 = 0.0
    d2 = 0.0
    for _ in range(n_trials):
        ch = draw_channels(config, profile, rng, with_interference_channels=False)
        ch = estimate_channels(config, ch, scheme, rng)
        W = mrc_mrt(ch.G_hat, ch.F_hat, scheme)
        d1 += np.sum(np.abs(W @ ch.G) ** 2)
        d2 += np.sum(np.abs(W) ** 2)
    closed = delta_terms_closed_form(profile, config, scheme)
    return DeltaTerms(delta1=d1 / n_trials, delta2=d2 / n_trials,
                      delta3=closed.delta3, scheme=scheme)


def amplification_factor(deltas: DeltaTerms, config: SystemConfig) -> float:
    """Fixed relay gain meeting the long-term power budget.

    alpha = sqrt(P_R / (P_S d1 + (P_R sigma2_LI + sigma2_nr) d2)); the
    expectation-based denominator makes the gain a statistical quantity,
    constant across realizations.
    """
    den = config.P_S * deltas.delta1 \
        + (config.P_R * config.sigma2_LI + config.sigma2_nr) * deltas.delta2
    if den <= 0:
        raise ConfigurationError("degenerate configuration: zero transmit-power denominator")
    return float(np.sqrt(config.P_R / den))


def relay_weights(channels: ChannelSet,
                  profile: LargeScaleProfile,
                  config: SystemConfig,
                  scheme: EstimationScheme) -> RelayWeights:
    """MRC/MRT weights for one realization plus the statistical gain."""
    if channels.G_hat is None or channels.F_hat is None:
        raise ValueError("channel estimates missing; run the training phase first")
    W = mrc_mrt(channels.G_hat, channels.F_hat, scheme)
    alpha = amplification_factor(delta_terms_closed_form(profile, config, scheme), config)
    return RelayWeights(W=W, alpha=alpha, scheme=scheme)


def _self_term_estimate_ice(channels: ChannelSet, part: np.ndarray) -> np.ndarray:
    """Pair-CSI approximation of the looped-back own signal f_k^T W g_k.

    Keeps the two dominant rank-one contributions, which is all a user can
    reconstruct from its own pair's estimates.
    """
    G, F = channels.G, channels.F
    G_hat, F_hat = channels.G_hat, channels.F_hat
    f_norm2 = np.sum(np.abs(F) ** 2, axis=0)
    g_norm2 = np.sum(np.abs(G) ** 2, axis=0)
    ghat_g = np.einsum("ij,ij->j", G_hat[:, part].conj(), G)
    f_fhat = np.einsum("ij,ij->j", F, F_hat[:, part].conj())
    return f_norm2 * ghat_g + f_fhat * g_norm2


def instantaneous_sinr(channels: ChannelSet,
                       weights: RelayWeights,
                       config: SystemConfig,
                       sic: bool = True,
                       profile: LargeScaleProfile | None = None,
                       cap: float = DEFAULT_SINR_CAP) -> np.ndarray:
    """Received SINR of every user for one channel realization.

    The desired, inter-pair and looped-back own-signal powers are computed
    from the realized channels; residual relay loop interference, relay
    noise and user-side interference enter through their variances, which
    matches treating them as additional Gaussian noise. With ``sic`` the
    own-signal term is cancelled with what the user can know: the pair-CSI
    reconstruction under per-user estimation, the deterministic
    large-scale mean under per-pair estimation (``profile`` required).
    Degenerate zero denominators yield the ``cap`` sentinel instead of
    infinities.
    """
    n = channels.n_users
    if n != config.n_users:
        raise ValueError("realization does not match the configuration")
    expected_cols = n if weights.scheme is EstimationScheme.ICE else n // 2
    if channels.G_hat is None or channels.G_hat.shape[1] != expected_cols:
        raise ValueError("weights were not built from this realization's estimates")
    if weights.W.shape != (config.N_t, config.N_r):
        raise ValueError("weight matrix shape does not match the relay arrays")
    part = partner_indices(n)
    users = np.arange(n)
    alpha2 = weights.alpha ** 2

    V = channels.F.T @ weights.W            # row k: f_k^T W
    C = V @ channels.G                      # C[k, j] = f_k^T W g_j
    forwarded2 = np.sum(np.abs(V) ** 2, axis=1)

    desired = alpha2 * config.P_S * np.abs(C[users, part]) ** 2
    cross = np.sum(np.abs(C) ** 2, axis=1) \
        - np.abs(C[users, part]) ** 2 - np.abs(C[users, users]) ** 2
    own = C[users, users]
    if not sic:
        self_power = np.abs(own) ** 2
    elif weights.scheme is EstimationScheme.ICE:
        self_power = np.abs(own - _self_term_estimate_ice(channels, part)) ** 2
    else:
        if profile is None:
            raise ValueError("per-pair cancellation needs the large-scale profile")
        mean_loop = config.N_t * config.N_r * profile.beta_d * profile.beta_u
        self_power = np.abs(own - mean_loop) ** 2

    den = alpha2 * config.P_S * (cross + self_power) \
        + alpha2 * (config.P_R * config.sigma2_LI + config.sigma2_nr) * forwarded2 \
        + config.P_S * config.user_interference_sums() \
        + config.sigma2_n
    with np.errstate(divide="ignore", invalid="ignore"):
        sinr = np.where(den > 0, desired / den, cap)
    return np.minimum(sinr, cap)


def mrc_mrt_moments_mc(config: SystemConfig,
                       profile: LargeScaleProfile,
                       n_trials: int,
                       rng: np.random.Generator) -> dict:
    """Monte Carlo oracle for the per-user weight statistics (per-user scheme).

    Returns per-user sample statistics of the effective pair gain
    f_k^T W g_k' (mean and variance) and of the forwarded power
    ||f_k^T W||^2 over fresh draws with full training.
    """
    n = config.n_users
    part = partner_indices(n)
    users = np.arange(n)
    gains = np.empty((n_trials, n), dtype=complex)
    forwarded = np.empty((n_trials, n))
    for t in range(n_trials):
        ch = draw_channels(config, profile, rng, with_interference_channels=False)
        ch = estimate_channels(config, ch, EstimationScheme.ICE, rng)
        W = mrc_mrt(ch.G_hat, ch.F_hat, EstimationScheme.ICE)
        V = ch.F.T @ W
        gains[t] = (V @ ch.G)[users, part]
        forwarded[t] = np.sum(np.abs(V) ** 2, axis=1)
    return {
        "gain_mean": gains.mean(axis=0),
        "gain_var": gains.var(axis=0, ddof=1),
        "forwarded_power": forwarded.mean(axis=0),
    }
