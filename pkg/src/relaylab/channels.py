"""Large-scale fading profiles and random channel realizations."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import SystemConfig


def complex_gaussian(rng: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian entries with the given variance.

    Real and imaginary parts are independent N(0, variance / 2).
    """
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True, eq=False)
class LargeScaleProfile:
    """True and estimated large-scale fading coefficients.

    ``beta_u`` / ``beta_d`` are the uplink / downlink coefficients of the
    2K users. The ``*_hat`` fields hold the coefficients of the LS channel
    estimates and stay ``None`` until filled by the pilot stage
    (``pilots.estimated_large_scale``); the ``*c_hat`` fields are the
    per-pair composite variants of length K.
    """

    beta_u: np.ndarray
    beta_d: np.ndarray
    beta_u_hat: np.ndarray | None = None
    beta_d_hat: np.ndarray | None = None
    beta_uc_hat: np.ndarray | None = None
    beta_dc_hat: np.ndarray | None = None

    def __post_init__(self):
        bu = np.asarray(self.beta_u, dtype=float)
        bd = np.asarray(self.beta_d, dtype=float)
        if bu.ndim != 1 or bu.shape != bd.shape:
            raise ValueError("beta_u and beta_d must be 1-D with equal length")
        if bu.size % 2:
            raise ValueError("profiles describe 2K users; length must be even")
        if np.any(bu <= 0) or np.any(bd <= 0):
            raise ValueError("large-scale coefficients must be strictly positive")
        object.__setattr__(self, "beta_u", bu)
        object.__setattr__(self, "beta_d", bd)
        for name, length in (("beta_u_hat", bu.size), ("beta_d_hat", bu.size),
                             ("beta_uc_hat", bu.size // 2), ("beta_dc_hat", bu.size // 2)):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.asarray(val, dtype=float)
            if arr.shape != (length,):
                raise ValueError(f"{name} must have length {length}")
            if np.any(arr <= 0):
                raise ValueError(f"{name} entries must be strictly positive")
            object.__setattr__(self, name, arr)

    @property
    def n_users(self) -> int:
        return self.beta_u.size

    @property
    def n_pairs(self) -> int:
        return self.beta_u.size // 2

    def with_(self, **changes) -> "LargeScaleProfile":
        return replace(self, **changes)


def unit_profile(K: int) -> LargeScaleProfile:
    """All large-scale coefficients normalised to one."""
    ones = np.ones(2 * K)
    return LargeScaleProfile(beta_u=ones, beta_d=ones.copy())


def symmetric_profile(pair_betas) -> LargeScaleProfile:
    """Profile where both users of a pair share the same coefficient."""
    per_user = np.repeat(np.asarray(pair_betas, dtype=float), 2)
    return LargeScaleProfile(beta_u=per_user, beta_d=per_user.copy())


def large_scale_from_geometry(distances,
                              sigma_shadow_dB: float,
                              d0: float,
                              pathloss_exponent: float,
                              rng: np.random.Generator | None = None) -> LargeScaleProfile:
    """Distance-based large-scale coefficients with log-normal shadowing.

    beta_i = 10^(w_i / 10) / (1 + (d_i / d0)^l) with w_i ~ N(0, sigma^2) in
    dB. The downlink coefficients are set equal to the uplink ones (users
    see reciprocal large-scale attenuation). With ``sigma_shadow_dB == 0``
    the result is deterministic.
    """
    d = np.asarray(distances, dtype=float)
    if np.any(d < 0):
        raise ValueError("distances must be nonnegative")
    if d0 <= 0:
        raise ValueError("breakpoint distance d0 must be positive")
    if sigma_shadow_dB < 0:
        raise ValueError("shadowing standard deviation must be nonnegative")
    if sigma_shadow_dB > 0:
        if rng is None:
            raise ValueError("rng required when shadowing is enabled")
        omega = rng.normal(0.0, sigma_shadow_dB, size=d.shape)
    else:
        omega = np.zeros_like(d)
    beta = 10.0 ** (omega / 10.0) / (1.0 + (d / d0) ** pathloss_exponent)
    return LargeScaleProfile(beta_u=beta, beta_d=beta.copy())


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One realization of every random channel in the system.

    ``G`` (N_r, 2K) holds the user-to-relay channels, ``F`` (N_t, 2K) the
    relay-to-user channels, ``G_RR`` (N_r, N_t) the residual relay
    loop-interference channel and ``Omega`` (2K, 2K) the user-side self
    loop-interference (diagonal) and inter-user coefficients. ``G_hat`` /
    ``F_hat`` are filled by the pilot stage: 2K columns for per-user
    estimation, K composite columns for per-pair estimation.
    """

    G: np.ndarray
    F: np.ndarray
    G_RR: np.ndarray | None
    Omega: np.ndarray | None
    G_hat: np.ndarray | None = None
    F_hat: np.ndarray | None = None

    @property
    def n_users(self) -> int:
        return self.G.shape[1]

    def with_(self, **changes) -> "ChannelSet":
        return replace(self, **changes)


def draw_channels(config: SystemConfig,
                  profile: LargeScaleProfile,
                  rng: np.random.Generator,
                  with_interference_channels: bool = True) -> ChannelSet:
    """Draw one realization of all channels.

    Small-scale fading is i.i.d. unit-variance complex Gaussian; column k
    of G / F is scaled by sqrt(beta_u[k]) / sqrt(beta_d[k]). Draw order is
    G, F, G_RR, Omega for reproducibility. With
    ``with_interference_channels=False`` the loop and user-side channels
    are skipped (they enter the SINR only through their variances).
    """
    if profile.n_users != config.n_users:
        raise ValueError(
            f"profile describes {profile.n_users} users, config expects {config.n_users}")
    G = complex_gaussian(rng, (config.N_r, config.n_users)) * np.sqrt(profile.beta_u)
    F = complex_gaussian(rng, (config.N_t, config.n_users)) * np.sqrt(profile.beta_d)
    if with_interference_channels:
        G_RR = complex_gaussian(rng, (config.N_r, config.N_t), config.sigma2_LI)
        Omega = complex_gaussian(rng, (config.n_users, config.n_users)) \
            * np.sqrt(config.sigma2_user)
    else:
        G_RR = None
        Omega = None
    return ChannelSet(G=G, F=F, G_RR=G_RR, Omega=Omega)
