"""Rate expressions: Monte Carlo ergodic rate, the exact statistical-CSI
lower bound, the large-array closed-form approximations and the derived
scaling results (crossover coherence interval, pair-count sizing)."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channels import LargeScaleProfile, draw_channels
from .config import EstimationScheme, SolverError, SystemConfig, partner_indices
from .pilots import estimate_channels, with_estimates
from .relay import (DEFAULT_SINR_CAP, amplification_factor, delta_terms_closed_form,
                    instantaneous_sinr, mrc_mrt, RelayWeights)


@dataclass(frozen=True)
class SinrBreakdown:
    """Closed-form SINR of one user split into its denominator terms.

    ``a`` is the deviation of the instantaneous effective channel from its
    mean, ``mp`` the inter-pair interference, ``lir`` / ``nr`` the
    forwarded relay loop interference / relay noise, ``mu`` the user-side
    interference (self loop plus neighbours) and ``an`` the local additive
    noise. ``sinr = N_t / (a + mp + lir + nr + mu + an)`` and ``theta``
    is the antenna-normalised coefficient sinr / N_t.
    """

    a: float
    mp: float
    lir: float
    nr: float
    mu: float
    an: float
    sinr: float
    theta: float

    @property
    def denominator(self) -> float:
        return self.a + self.mp + self.lir + self.nr + self.mu + self.an


def _breakdown(terms, N_t) -> SinrBreakdown:
    a, mp, lir, nr, mu, an = (float(x) for x in terms)
    den = a + mp + lir + nr + mu + an
    sinr = N_t / den
    return SinrBreakdown(a=a, mp=mp, lir=lir, nr=nr, mu=mu, an=an,
                         sinr=sinr, theta=sinr / N_t)


def approx_sinr(profile: LargeScaleProfile,
                config: SystemConfig,
                scheme: EstimationScheme,
                power_scaling: bool = False) -> list[SinrBreakdown]:
    """Large-array closed-form SINR of every user under a pilot scheme.

    Keeps only the terms of leading order in the antenna counts, so it is
    accurate when the receive array is much larger than the user count
    (a warning is emitted otherwise).
    """
    if config.N_r < 2 * config.n_users:
        warnings.warn(
            f"closed-form SINR assumes N_r >> 2K; N_r={config.N_r} vs 2K={config.n_users}",
            RuntimeWarning, stacklevel=2)
    profile = with_estimates(profile, config, scheme)
    kappa = config.kappa
    n = config.n_users
    part = partner_indices(n)
    bu, bd = profile.beta_u, profile.beta_d
    mu_levels = config.user_interference_sums()
    d3 = delta_terms_closed_form(profile, config, scheme, power_scaling).delta3
    out = []
    if scheme is EstimationScheme.ICE:
        bu_hat, bd_hat = profile.beta_u_hat, profile.beta_d_hat
        for k in range(n):
            kp = part[k]
            a = kappa * bu_hat[kp] / bu[kp] + bd_hat[k] / bd[k]
            mp = 0.0
            for j in range(n):
                if j == k or j == kp:
                    continue
                mp += kappa * bu[j] * bu_hat[kp] / bu[kp] ** 2 \
                    + bd_hat[part[j]] * bu[j] ** 2 / (bd[k] * bu[kp] ** 2)
            lir = (config.P_R * config.sigma2_LI / config.P_S) * kappa * bu_hat[kp] / bu[kp] ** 2
            nr = (config.sigma2_nr / config.P_S) * kappa * bu_hat[kp] / bu[kp] ** 2
            mu = d3 * mu_levels[k] / (bd[k] ** 2 * bu[kp] ** 2)
            an = config.sigma2_n * d3 / (config.P_S * bd[k] ** 2 * bu[kp] ** 2)
            out.append(_breakdown((a, mp, lir, nr, mu, an), config.N_t))
    else:
        buc_hat, bdc_hat = profile.beta_uc_hat, profile.beta_dc_hat
        pair_sum = bu[0::2] + bu[1::2]
        pair_sq = bu[0::2] ** 2 + bu[1::2] ** 2
        for k in range(n):
            kp = part[k]
            m = k // 2
            a = kappa * buc_hat[m] / bu[kp] + bdc_hat[m] / bd[k]
            mp = 0.0
            for q in range(config.K):
                if q == m:
                    continue
                mp += kappa * buc_hat[m] * pair_sum[q] / bu[kp] ** 2 \
                    + bdc_hat[q] * pair_sq[q] / (bd[k] * bu[kp] ** 2)
            lir = (config.P_R * config.sigma2_LI / config.P_S) * kappa * buc_hat[m] / bu[kp] ** 2
            nr = (config.sigma2_nr / config.P_S) * kappa * buc_hat[m] / bu[kp] ** 2
            mu = d3 * mu_levels[k] / (bd[k] ** 2 * bu[kp] ** 2)
            an = config.sigma2_n * d3 / (config.P_S * bd[k] ** 2 * bu[kp] ** 2)
            out.append(_breakdown((a, mp, lir, nr, mu, an), config.N_t))
    return out


def approx_sinr_values(profile, config, scheme, power_scaling=False) -> np.ndarray:
    return np.array([b.sinr for b in approx_sinr(profile, config, scheme, power_scaling)])


# ---------------------------------------------------------------------------
# exact second-order statistics of the per-user pilot scheme


def effective_gain_mean(profile: LargeScaleProfile, config: SystemConfig) -> np.ndarray:
    """Mean effective pair gain E[f_k^T W g_k'] for every user."""
    part = partner_indices(config.n_users)
    return config.N_t * config.N_r * profile.beta_d * profile.beta_u[part]


def effective_gain_variance(profile: LargeScaleProfile, config: SystemConfig) -> np.ndarray:
    """Variance of the effective pair gain f_k^T W g_k'."""
    profile = with_estimates(profile, config, EstimationScheme.ICE)
    N_r, N_t = config.N_r, config.N_t
    part = partner_indices(config.n_users)
    bu, bd = profile.beta_u, profile.beta_d
    bu_hat, bd_hat = profile.beta_u_hat, profile.beta_d_hat
    cross = np.sum(bd_hat * bu_hat[part])
    return (N_t ** 2 * N_r * bd ** 2 * bu[part] * bu_hat[part]
            + N_t * N_r ** 2 * bd * bd_hat * bu[part] ** 2
            + N_t * N_r * bd * bu[part] * cross)


def inter_pair_power(profile: LargeScaleProfile, config: SystemConfig) -> np.ndarray:
    """Mean crosstalk powers E|f_k^T W g_j|^2 as a (2K, 2K) matrix.

    Entries at j == k and j == partner(k) are zero; those indices are not
    inter-pair terms.
    """
    profile = with_estimates(profile, config, EstimationScheme.ICE)
    N_r, N_t = config.N_r, config.N_t
    n = config.n_users
    part = partner_indices(n)
    bu, bd = profile.beta_u, profile.beta_d
    bu_hat, bd_hat = profile.beta_u_hat, profile.beta_d_hat
    cross = np.sum(bd_hat * bu_hat[part])
    out = np.zeros((n, n))
    for k in range(n):
        for j in range(n):
            if j == k or j == part[k]:
                continue
            out[k, j] = (N_t ** 2 * N_r * bd[k] ** 2 * bu[j] * bu_hat[part[k]]
                         + N_t * N_r ** 2 * bd[k] * bd_hat[part[j]] * bu[j] ** 2
                         + N_t * N_r * bd[k] * bu[j] * cross)
    return out


def forwarded_power(profile: LargeScaleProfile, config: SystemConfig) -> np.ndarray:
    """Mean forwarded power E||f_k^T W||^2 for every user."""
    profile = with_estimates(profile, config, EstimationScheme.ICE)
    N_r, N_t = config.N_r, config.N_t
    part = partner_indices(config.n_users)
    bd = profile.beta_d
    cross = np.sum(profile.beta_d_hat * profile.beta_u_hat[part])
    return N_t ** 2 * N_r * bd ** 2 * profile.beta_u_hat[part] + N_t * N_r * bd * cross


def lower_bound_sinr_exact(profile: LargeScaleProfile, config: SystemConfig) -> np.ndarray:
    """Exact statistical-CSI SINR of every user (per-user pilot scheme).

    Detection uses only the mean effective channel; everything else is
    worst-case Gaussian effective noise. All finite-array terms are kept,
    so rates built from these SINRs lower-bound the ergodic rate.
    """
    profile = with_estimates(profile, config, EstimationScheme.ICE)
    alpha = amplification_factor(
        delta_terms_closed_form(profile, config, EstimationScheme.ICE), config)
    mean = effective_gain_mean(profile, config)
    var = effective_gain_variance(profile, config)
    crosstalk = inter_pair_power(profile, config).sum(axis=1)
    forwarded = forwarded_power(profile, config)
    noise_lift = (config.P_S * config.user_interference_sums() + config.sigma2_n) / alpha ** 2
    den = config.P_S * var + config.P_S * crosstalk \
        + (config.P_R * config.sigma2_LI + config.sigma2_nr) * forwarded + noise_lift
    return config.P_S * np.abs(mean) ** 2 / den


def sum_rate_from_sinrs(sinrs, T_c: int, tau: int) -> float:
    """Sum rate in bits/s/Hz: payload fraction times the per-user log rates."""
    if tau >= T_c:
        raise ValueError(f"training length tau={tau} must be below T_c={T_c}")
    sinrs = np.asarray(sinrs, dtype=float)
    return float((T_c - tau) / T_c * np.sum(np.log2(1.0 + sinrs)))


# ---------------------------------------------------------------------------
# Monte Carlo ergodic rate


@dataclass(frozen=True)
class McRate:
    """Monte Carlo rate estimate with its standard error."""

    rate: float
    stderr: float
    n_trials: int


def scheme_sum_rate_samples(config: SystemConfig,
                            profile: LargeScaleProfile,
                            schemes,
                            sic: bool,
                            n_trials: int,
                            rng: np.random.Generator,
                            cap: float = DEFAULT_SINR_CAP) -> dict:
    """Per-trial instantaneous sum log-rates for one or more pilot schemes.

    All schemes share each trial's channel realization (common random
    numbers), which stabilises paired comparisons. The returned arrays
    hold sum_k log2(1 + SINR_k) per trial without the payload prefactor.
    Per-trial generators are spawned from ``rng`` so results do not depend
    on evaluation order.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    schemes = list(schemes)
    alphas = {
        s: amplification_factor(delta_terms_closed_form(profile, config, s), config)
        for s in schemes
    }
    out = {s: np.empty(n_trials) for s in schemes}
    for t, trial_rng in enumerate(rng.spawn(n_trials)):
        ch = draw_channels(config, profile, trial_rng, with_interference_channels=False)
        for s in schemes:
            est = estimate_channels(config, ch, s, trial_rng)
            weights = RelayWeights(W=mrc_mrt(est.G_hat, est.F_hat, s),
                                   alpha=alphas[s], scheme=s)
            sinr = instantaneous_sinr(est, weights, config, sic=sic,
                                      profile=profile, cap=cap)
            out[s][t] = np.sum(np.log2(1.0 + sinr))
    return out


def _prefactor(config: SystemConfig, scheme: EstimationScheme) -> float:
    tau = config.tau if scheme is EstimationScheme.ICE else config.tau_c
    return (config.T_c - tau) / config.T_c


def statistical_sinr_mc(config: SystemConfig,
                        profile: LargeScaleProfile,
                        schemes,
                        n_trials: int,
                        rng: np.random.Generator) -> dict:
    """Monte Carlo estimate of the statistical-CSI SINR of every user.

    Estimates the moments that drive detection against the mean effective
    channel (mean and variance of the pair gain, crosstalk powers,
    forwarded power) from fresh draws with full training and assembles the
    same SINR expression as the closed-form bound. Schemes share each
    trial's channel realization. This is the simulation-side counterpart
    of ``lower_bound_sinr_exact`` and works for both pilot schemes.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    schemes = list(schemes)
    n = config.n_users
    part = partner_indices(n)
    users = np.arange(n)
    gains = {s: np.empty((n_trials, n), dtype=complex) for s in schemes}
    crosstalk = {s: np.zeros(n) for s in schemes}
    forwarded = {s: np.zeros(n) for s in schemes}
    for t, trial_rng in enumerate(rng.spawn(n_trials)):
        ch = draw_channels(config, profile, trial_rng, with_interference_channels=False)
        for s in schemes:
            est = estimate_channels(config, ch, s, trial_rng)
            W = mrc_mrt(est.G_hat, est.F_hat, s)
            V = ch.F.T @ W
            C = V @ ch.G
            gains[s][t] = C[users, part]
            cross = np.abs(C) ** 2
            cross[users, users] = 0.0
            cross[users, part] = 0.0
            crosstalk[s] += cross.sum(axis=1)
            forwarded[s] += np.sum(np.abs(V) ** 2, axis=1)
    noise_side = config.P_S * config.user_interference_sums() + config.sigma2_n
    out = {}
    for s in schemes:
        alpha = amplification_factor(delta_terms_closed_form(profile, config, s), config)
        mean = gains[s].mean(axis=0)
        var = gains[s].var(axis=0, ddof=1) if n_trials > 1 else np.zeros(n)
        den = config.P_S * var + config.P_S * crosstalk[s] / n_trials \
            + (config.P_R * config.sigma2_LI + config.sigma2_nr) * forwarded[s] / n_trials \
            + noise_side / alpha ** 2
        out[s] = config.P_S * np.abs(mean) ** 2 / den
    return out


def ergodic_sum_rate_mc(config: SystemConfig,
                        profile: LargeScaleProfile,
                        scheme: EstimationScheme,
                        sic: bool = True,
                        n_trials: int = 1000,
                        rng: np.random.Generator | None = None,
                        target_rel_stderr: float | None = None,
                        max_trials: int = 200_000,
                        cap: float = DEFAULT_SINR_CAP) -> McRate:
    """Monte Carlo ergodic sum rate with its standard error.

    Each trial draws fresh channels, runs the training phase and evaluates
    the received SINRs under estimated-CSI processing. When
    ``target_rel_stderr`` is set, trials are added in doubling batches
    until the standard error falls below that fraction of the mean.
    """
    if rng is None:
        raise ValueError("an explicit rng is required for reproducibility")
    samples = scheme_sum_rate_samples(config, profile, [scheme], sic, n_trials, rng, cap)[scheme]
    while target_rel_stderr is not None and samples.size < max_trials:
        mean = samples.mean()
        se = samples.std(ddof=1) / math.sqrt(samples.size)
        if mean > 0 and se / mean < target_rel_stderr:
            break
        extra = min(samples.size, max_trials - samples.size)
        more = scheme_sum_rate_samples(config, profile, [scheme], sic, extra, rng, cap)[scheme]
        samples = np.concatenate([samples, more])
    pre = _prefactor(config, scheme)
    stderr = samples.std(ddof=1) / math.sqrt(samples.size) if samples.size > 1 else 0.0
    return McRate(rate=pre * float(samples.mean()),
                  stderr=pre * float(stderr),
                  n_trials=int(samples.size))


# ---------------------------------------------------------------------------
# scheme comparison and scaling results


def crossover_coherence_interval(gamma_ice, tau: int) -> tuple[float, float]:
    """Coherence interval at which the two pilot schemes give equal rate.

    For a symmetric system the per-pair scheme halves every SINR while
    spending half the training; with g the ratio of the two sum log-rates,
    the schemes break even at T_c = (1 + 1 / (2 (g - 1))) tau. Returns
    (crossover interval, g); the per-pair scheme wins below it.
    """
    g = np.asarray(gamma_ice, dtype=float)
    if np.any(g <= 0):
        raise ValueError("all SINRs must be positive")
    ratio = np.sum(np.log2(1.0 + g)) / np.sum(np.log2(1.0 + g / 2.0))
    return float((1.0 + 1.0 / (2.0 * (ratio - 1.0))) * tau), float(ratio)


def g_ratio_of_antennas(theta, N_t: float) -> tuple[float, float]:
    """Sum log-rate ratio between full and halved SINRs at a given N_t.

    Returns the exact ratio and its large-array expansion
    1 + 1 / (log2 N_t + mean(log2 theta) - 1), valid when theta * N_t >> 2
    for every user.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0):
        raise ValueError("theta coefficients must be positive")
    exact = float(np.sum(np.log2(1.0 + th * N_t)) / np.sum(np.log2(1.0 + th * N_t / 2.0)))
    approx = float(1.0 + 1.0 / (math.log2(N_t) + np.mean(np.log2(th)) - 1.0))
    return exact, approx


@dataclass(frozen=True)
class SpecialScenarioParams:
    """Constants of the equal-coefficient scenario.

    Under unit large-scale fading, perfect CSI, matched noise levels,
    relay power K * P_S and a square array, every user's SINR collapses to
    N_t / (a K - b). ``mu`` and ``b_coef`` are the estimated-over-true
    coefficient ratios entering the power-allocation closed form, and
    ``eta`` is the relay-power factor of the max-min optimum.
    """

    a: float
    b: float
    xi_S: float
    mu: float
    delta: float
    b_coef: float
    eta: float


def special_scenario_params(config: SystemConfig,
                            beta: float = 1.0,
                            beta_hat: float | None = None) -> SpecialScenarioParams:
    """Build the equal-coefficient scenario constants from a configuration."""
    if beta_hat is None:
        beta_hat = beta + config.sigma2_nr / (config.tau * config.P_p)
    sigma2_self = float(config.sigma2_user[0, 0])
    sigma2_cross = float(config.sigma2_user[0, 2]) if config.K > 1 else 0.0
    delta = (sigma2_self + (config.K - 1) * sigma2_cross) / config.K
    if config.sigma2_LI <= 0:
        raise ValueError("the special scenario needs a positive relay loop level")
    eta = config.K * math.sqrt(2.0 * delta / (config.sigma2_LI * config.kappa))
    return SpecialScenarioParams(
        a=3.0 * config.sigma2_LI + 4.0,
        b=2.0 - 3.0 * config.sigma2_n / config.P_S,
        xi_S=config.P_S / config.sigma2_n,
        mu=beta_hat / beta ** 2,
        delta=delta,
        b_coef=config.kappa * beta_hat / beta ** 2,
        eta=eta,
    )


def special_scenario_sinr(params: SpecialScenarioParams, K: float, N_t: float) -> float:
    """Per-user SINR N_t / (a K - b) of the equal-coefficient scenario."""
    den = params.a * K - params.b
    if den <= 0:
        raise ValueError("a K - b must be positive")
    return N_t / den


def required_antennas(K: float, params: SpecialScenarioParams) -> float:
    """Transmit antennas at which a given pair count is rate-optimal.

    Large-array form N_t = (a K - b) exp(a K / (a K - b)); strictly
    increasing in K for K >= 1.
    """
    s = params.a * K - params.b
    if s <= 0:
        raise ValueError("a K - b must be positive")
    return s * math.exp(params.a * K / s)


def required_antennas_slope(K: float, params: SpecialScenarioParams) -> float:
    """Derivative of ``required_antennas``; positive whenever a K > 2 b."""
    s = params.a * K - params.b
    return params.a * (params.a * K - 2.0 * params.b) / s * math.exp(params.a * K / s)


@dataclass(frozen=True)
class BestPairCount:
    """Continuous and rounded solutions of the pair-count sizing relation."""

    k_continuous: float
    k_best: int
    n_t: float


def best_pair_count(N_t: float,
                    params: SpecialScenarioParams,
                    T_c: int,
                    k_max: float = 512.0) -> BestPairCount:
    """Pair count at which the sum rate peaks for a given array size.

    Inverts the monotone sizing relation by bisection (residual below
    1e-9), then rounds the continuous solution to whichever neighbouring
    integer gives the better sum rate including the training overhead
    (tau = 2K out of T_c symbols).
    """
    lo, hi = 1.0, 2.0
    if required_antennas(lo, params) - N_t > 0:
        raise SolverError(f"N_t={N_t} is below the single-pair requirement "
                          f"{required_antennas(lo, params):.1f}; no root in bracket")
    while required_antennas(hi, params) - N_t < 0:
        hi *= 2.0
        if hi > k_max:
            raise SolverError(f"no root below K={k_max}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = required_antennas(mid, params) - N_t
        if abs(r) < 1e-9 or hi - lo < 4e-16 * hi:
            lo = hi = mid
            break
        if r < 0:
            lo = mid
        else:
            hi = mid
    k_cont = 0.5 * (lo + hi)
    if required_antennas_slope(k_cont, params) <= 0:
        raise SolverError("sizing relation is not increasing at the root")

    def rate(k: int) -> float:
        if k < 1 or 2 * k >= T_c:
            return -math.inf
        return (T_c - 2 * k) / T_c * 2 * k * math.log2(
            1.0 + special_scenario_sinr(params, k, N_t))

    k_lo, k_hi = int(math.floor(k_cont)), int(math.ceil(k_cont))
    k_best = k_lo if rate(k_lo) >= rate(k_hi) else k_hi
    return BestPairCount(k_continuous=k_cont, k_best=k_best, n_t=float(N_t))


def pair_count_table(params: SpecialScenarioParams, k_values) -> list[tuple[int, float]]:
    """Required array size for each candidate pair count."""
    return [(int(k), required_antennas(k, params)) for k in k_values]
