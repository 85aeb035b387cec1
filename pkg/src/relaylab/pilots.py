"""Training phase: pilot books, received pilot signals and LS estimates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, LargeScaleProfile, complex_gaussian
from .config import ConfigurationError, EstimationScheme, SystemConfig


@dataclass(frozen=True, eq=False)
class PilotBook:
    """Deterministic pilot sequences with orthonormal rows.

    Shape (2K, tau) for per-user pilots, (K, tau_c) for per-pair pilots;
    Phi @ Phi^H equals the identity in both cases.
    """

    Phi: np.ndarray
    scheme: EstimationScheme

    def __post_init__(self):
        n, length = self.Phi.shape
        if n > length:
            raise ConfigurationError(
                f"cannot fit {n} orthogonal pilot sequences into {length} symbols")

    @property
    def length(self) -> int:
        return self.Phi.shape[1]


def pilot_book(config: SystemConfig, scheme: EstimationScheme) -> PilotBook:
    """Build the pilot matrix for a scheme from normalised DFT rows.

    Any row-orthonormal set works; DFT rows are deterministic and exist
    for every (sequence count, length) combination.
    """
    if scheme is EstimationScheme.ICE:
        n, length = 2 * config.K, config.tau
    else:
        n, length = config.K, config.tau_c
    if n > length:
        raise ConfigurationError(
            f"{scheme.value} needs at least {n} pilot symbols, got {length}")
    rows = np.arange(n)[:, None] * np.arange(length)[None, :]
    Phi = np.exp(-2j * np.pi * rows / length) / np.sqrt(length)
    return PilotBook(Phi=Phi, scheme=scheme)


def composite_channels(G: np.ndarray, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pair-sum channels: column n is the sum over the two users of pair n."""
    return G[:, 0::2] + G[:, 1::2], F[:, 0::2] + F[:, 1::2]


def simulate_pilot_phase(config: SystemConfig,
                         channels: ChannelSet,
                         pilots: PilotBook,
                         rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Received pilot blocks at the relay's receive and transmit arrays.

    Y_r = sqrt(tau * P_p) * G * Phi + Z with i.i.d. CN(0, sigma2_nr) noise;
    under per-pair pilots G is replaced by the pair-sum channels. The
    transmit-array block Y_t is formed the same way from F (its receive
    chains are only active during training).
    """
    if pilots.scheme is EstimationScheme.ICE:
        G, F = channels.G, channels.F
        if pilots.Phi.shape[0] != config.n_users:
            raise ConfigurationError("pilot book does not match the per-user scheme")
    else:
        G, F = composite_channels(channels.G, channels.F)
        if pilots.Phi.shape[0] != config.K:
            raise ConfigurationError("pilot book does not match the per-pair scheme")
    scale = np.sqrt(pilots.length * config.P_p)
    Y_r = scale * G @ pilots.Phi \
        + complex_gaussian(rng, (config.N_r, pilots.length), config.sigma2_nr)
    Y_t = scale * F @ pilots.Phi \
        + complex_gaussian(rng, (config.N_t, pilots.length), config.sigma2_nr)
    return Y_r, Y_t


def ls_estimate(Y_r: np.ndarray,
                Y_t: np.ndarray,
                pilots: PilotBook,
                tau: int,
                P_p: float) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares channel estimates from received pilot blocks.

    G_hat = Y_r Phi^H / sqrt(tau * P_p); with orthonormal pilot rows the
    per-entry estimation-error variance is sigma2_nr / (tau * P_p).
    """
    if Y_r.shape[1] != pilots.length or Y_t.shape[1] != pilots.length:
        raise ValueError("received blocks do not match the pilot length")
    scale = np.sqrt(tau * P_p)
    if scale == 0:
        raise ConfigurationError("tau * P_p must be positive for LS estimation")
    PhiH = pilots.Phi.conj().T
    return Y_r @ PhiH / scale, Y_t @ PhiH / scale


def estimate_channels(config: SystemConfig,
                      channels: ChannelSet,
                      scheme: EstimationScheme,
                      rng: np.random.Generator) -> ChannelSet:
    """Run the full training phase and attach LS estimates to the realization."""
    book = pilot_book(config, scheme)
    Y_r, Y_t = simulate_pilot_phase(config, channels, book, rng)
    G_hat, F_hat = ls_estimate(Y_r, Y_t, book, book.length, config.P_p)
    return channels.with_(G_hat=G_hat, F_hat=F_hat)


def estimated_large_scale(profile: LargeScaleProfile,
                          config: SystemConfig,
                          scheme: EstimationScheme) -> LargeScaleProfile:
    """Fill in the large-scale coefficients of the LS estimates.

    Per-user estimates add the error floor sigma2_nr / (tau * P_p) to every
    coefficient; per-pair estimates sum the two true coefficients of a pair
    before adding sigma2_nr / (tau_c * P_p).
    """
    if scheme is EstimationScheme.ICE:
        err = config.sigma2_nr / (config.tau * config.P_p)
        return profile.with_(beta_u_hat=profile.beta_u + err,
                             beta_d_hat=profile.beta_d + err)
    err = config.sigma2_nr / (config.tau_c * config.P_p)
    return profile.with_(
        beta_uc_hat=profile.beta_u[0::2] + profile.beta_u[1::2] + err,
        beta_dc_hat=profile.beta_d[0::2] + profile.beta_d[1::2] + err)


def with_estimates(profile: LargeScaleProfile,
                   config: SystemConfig,
                   scheme: EstimationScheme) -> LargeScaleProfile:
    """Return the profile with the scheme's estimated coefficients present."""
    present = (profile.beta_u_hat is not None if scheme is EstimationScheme.ICE
               else profile.beta_uc_hat is not None)
    return profile if present else estimated_large_scale(profile, config, scheme)
