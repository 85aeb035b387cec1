"""System-level configuration for the multi-pair two-way relay laboratory.

All powers and variances stored here are linear. dB values are converted
once at the configuration boundary (CLI / scenario parser / ``from_db``
helpers); every internal computation works on linear quantities.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np


class ConfigurationError(ValueError):
    """Invalid or degenerate system configuration."""


class SolverError(RuntimeError):
    """A numerical routine failed to produce a usable answer."""


class EstimationScheme(Enum):
    """Pilot strategy: per-user orthogonal pilots (ICE) or one shared
    pilot per user pair (CCE, estimating the pair-sum channel)."""

    ICE = "ice"
    CCE = "cce"


def db_to_linear(value_db):
    """Convert dB to linear scale."""
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    """Convert linear scale to dB."""
    return 10.0 * np.log10(np.asarray(value, dtype=float))


def partner_indices(n_users: int) -> np.ndarray:
    """Partner index of every user: pairs are (0,1), (2,3), ..."""
    if n_users % 2:
        raise ValueError(f"user count must be even, got {n_users}")
    return np.arange(n_users) ^ 1


def same_side_mask(n_users: int) -> np.ndarray:
    """Boolean (n, n) mask of users sharing an area.

    Users with even index live in one area, odd-index users in the other;
    a user only receives interference from transmitters on its own side.
    """
    parity = np.arange(n_users) % 2
    return parity[:, None] == parity[None, :]


def user_interference_matrix(K: int, sigma2_self: float, sigma2_cross: float) -> np.ndarray:
    """Same-side interference levels sigma2[k, i].

    The diagonal holds the self loop-interference level of each user, the
    same-side off-diagonal entries the inter-user interference level, and
    cross-side entries are zero.
    """
    if sigma2_self < 0 or sigma2_cross < 0:
        raise ConfigurationError("interference levels must be nonnegative")
    mat = np.where(same_side_mask(2 * K), float(sigma2_cross), 0.0)
    np.fill_diagonal(mat, float(sigma2_self))
    return mat


@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Scalar system parameters (linear units).

    Attributes
    ----------
    K : number of user pairs (2K users total).
    N_r, N_t : relay receive / transmit antenna counts.
    P_S : common per-user data power.
    P_R : relay power budget.
    P_p : per-symbol pilot power.
    T_c : coherence interval in symbols.
    tau, tau_c : training lengths of the per-user and per-pair pilot schemes.
    sigma2_n, sigma2_nr : user-side and relay-side noise variances.
    sigma2_LI : relay loop-interference level (variance of the residual
        loop channel entries).
    sigma2_user : (2K, 2K) same-side interference levels; entry (k, i) is
        user k's self loop-interference level for i == k and the inter-user
        level from same-side user i otherwise.
    """

    K: int
    N_r: int
    N_t: int
    P_S: float
    P_R: float
    P_p: float
    T_c: int
    tau: int
    tau_c: int
    sigma2_n: float = 1.0
    sigma2_nr: float = 1.0
    sigma2_LI: float = 0.0
    sigma2_user: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.K < 1 or self.N_r < 1 or self.N_t < 1:
            raise ConfigurationError("K, N_r and N_t must be at least 1")
        for name in ("P_S", "P_R", "P_p"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be nonnegative")
        if self.sigma2_n <= 0 or self.sigma2_nr <= 0:
            raise ConfigurationError("noise variances must be positive")
        if self.sigma2_LI < 0:
            raise ConfigurationError("sigma2_LI must be nonnegative")
        if self.tau < 2 * self.K:
            raise ConfigurationError(
                f"tau={self.tau} too short: per-user pilots need tau >= 2K={2 * self.K}")
        if self.tau_c < self.K:
            raise ConfigurationError(
                f"tau_c={self.tau_c} too short: per-pair pilots need tau_c >= K={self.K}")
        if not (self.tau < self.T_c and self.tau_c < self.T_c):
            raise ConfigurationError("training lengths must be shorter than T_c")
        if self.sigma2_user is None:
            object.__setattr__(self, "sigma2_user", np.zeros((2 * self.K, 2 * self.K)))
        else:
            mat = np.asarray(self.sigma2_user, dtype=float)
            if mat.shape != (2 * self.K, 2 * self.K):
                raise ConfigurationError(
                    f"sigma2_user must be (2K, 2K)={2 * self.K, 2 * self.K}, got {mat.shape}")
            if np.any(mat < 0):
                raise ConfigurationError("sigma2_user entries must be nonnegative")
            object.__setattr__(self, "sigma2_user", mat)

    @property
    def kappa(self) -> float:
        """Transmit/receive antenna ratio N_t / N_r."""
        return self.N_t / self.N_r

    @property
    def n_users(self) -> int:
        return 2 * self.K

    def partner(self) -> np.ndarray:
        return partner_indices(self.n_users)

    def user_interference_sums(self) -> np.ndarray:
        """Per-user total same-side interference level (self plus neighbours)."""
        return self.sigma2_user[same_side_mask(self.n_users)].reshape(self.n_users, -1).sum(axis=1)

    def with_(self, **changes) -> "SystemConfig":
        """Return a copy with the given fields replaced."""
        return replace(self, **changes)


def default_config(K: int = 5,
                   N_t: int = 200,
                   N_r: int | None = None,
                   *,
                   P_S_dB: float = 10.0,
                   P_p_dB: float = 10.0,
                   P_R: float | None = None,
                   T_c: int = 100,
                   tau: int | None = None,
                   tau_c: int | None = None,
                   sigma2_LI_dB: float = 5.0,
                   sigma2_IU: float = 1.0,
                   sigma2_n: float = 1.0,
                   sigma2_nr: float = 1.0) -> SystemConfig:
    """Configuration used by the bundled experiment presets.

    Noise is normalised to one, each user's self loop-interference level
    equals the relay loop-interference level, the inter-user level is
    ``sigma2_IU``, and the training lengths default to their minimums
    (tau = 2K, tau_c = K). ``P_R`` defaults to K * P_S.
    """
    N_r = N_t if N_r is None else N_r
    P_S = float(db_to_linear(P_S_dB))
    P_p = float(db_to_linear(P_p_dB))
    sigma2_LI = float(db_to_linear(sigma2_LI_dB))
    if P_R is None:
        P_R = K * P_S
    return SystemConfig(
        K=K, N_r=N_r, N_t=N_t,
        P_S=P_S, P_R=float(P_R), P_p=P_p,
        T_c=T_c,
        tau=2 * K if tau is None else tau,
        tau_c=K if tau_c is None else tau_c,
        sigma2_n=sigma2_n, sigma2_nr=sigma2_nr,
        sigma2_LI=sigma2_LI,
        sigma2_user=user_interference_matrix(K, sigma2_LI, sigma2_IU),
    )
