"""Power allocation: per-user-power SINR model, sum-rate maximisation via
successive monomial approximation, max-min fairness and the
equal-coefficient closed form."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import LargeScaleProfile
from .config import (EstimationScheme, SolverError, SystemConfig, partner_indices,
                     same_side_mask)
from .gp import (GeometricProgram, GpSolution, GpStatus, Monomial, Posynomial,
                 monomial, solve_gp)
from .pilots import with_estimates

POWER_FLOOR_FACTOR = 1e-8   # GP variables must stay positive
_SINR_VAR_BOUNDS = (1e-12, 1e12)


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Per-user powers plus the relay power, with their peak constraints."""

    P: np.ndarray
    P_R: float
    P_S_max: float
    P_R_max: float

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        object.__setattr__(self, "P", P)
        slack = 1e-9 * (1.0 + self.P_S_max)
        if np.any(P < -slack) or np.any(P > self.P_S_max + slack):
            raise ValueError("user powers violate the peak constraint")
        if self.P_R < -slack or self.P_R > self.P_R_max + 1e-9 * (1.0 + self.P_R_max):
            raise ValueError("relay power violates the peak constraint")


def uniform_allocation(config: SystemConfig,
                       P_S_max: float | None = None,
                       P_R_max: float | None = None) -> PowerAllocation:
    """Every user at P_S with the configured relay power."""
    P_S_max = config.P_S if P_S_max is None else P_S_max
    P_R_max = max(config.P_R, config.K * P_S_max) if P_R_max is None else P_R_max
    return PowerAllocation(P=np.full(config.n_users, config.P_S),
                           P_R=config.P_R, P_S_max=P_S_max, P_R_max=P_R_max)


@dataclass(frozen=True, eq=False)
class PowerSinrCoefficients:
    """Large-scale constants of the per-user-power SINR model.

    ``a[k, j]`` weights user j's power in user k's inter-pair interference
    (j != k), ``b[k]`` weights the relay loop interference and relay
    noise, and ``c[k, i]`` weights user i's power inside the amplification
    loss factor that lifts user-side interference and local noise.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray


def power_sinr_coefficients(profile: LargeScaleProfile,
                            config: SystemConfig) -> PowerSinrCoefficients:
    """Coefficients of the per-user-power SINR model (per-user pilots)."""
    profile = with_estimates(profile, config, EstimationScheme.ICE)
    n = config.n_users
    part = partner_indices(n)
    kappa = config.kappa
    bu, bd = profile.beta_u, profile.beta_d
    bu_hat, bd_hat = profile.beta_u_hat, profile.beta_d_hat
    a = np.zeros((n, n))
    c = np.zeros((n, n))
    b = kappa * bu_hat[part] / bu[part] ** 2
    for k in range(n):
        kp = part[k]
        for j in range(n):
            c[k, j] = bd_hat[part[j]] * bu[j] ** 2 / (bd[k] ** 2 * bu[kp] ** 2)
            if j == k:
                continue
            a[k, j] = kappa * bu[j] * bu_hat[kp] / bu[kp] ** 2 \
                + bd_hat[part[j]] * bu[j] ** 2 / (bd[k] * bu[kp] ** 2)
    return PowerSinrCoefficients(a=a, b=b, c=c)


def sinr_with_powers(coeffs: PowerSinrCoefficients,
                     alloc: PowerAllocation,
                     config: SystemConfig) -> np.ndarray:
    """Closed-form SINR of every user under individual powers.

    Reduces exactly to the uniform-power closed form when all users share
    P_S and the relay uses P_R. A silent relay (P_R == 0) yields zero
    SINR for everyone.
    """
    n = config.n_users
    part = partner_indices(n)
    P, P_R = alloc.P, alloc.P_R
    if P_R <= 0:
        return np.zeros(n)
    inter = coeffs.a @ P                       # a[k, k] == 0, so j != k
    loop = (P_R * config.sigma2_LI + config.sigma2_nr) * coeffs.b
    lift = coeffs.c @ P
    side = (config.sigma2_user * P).sum(axis=1)   # zero off-side entries
    den = inter + loop + lift * side / P_R + config.sigma2_n * lift / P_R
    with np.errstate(invalid="ignore"):
        out = np.where(den > 0, P[part] * config.N_t / den, 0.0)
    return out


# ---------------------------------------------------------------------------
# GP assembly


def _pvar(i: int) -> str:
    return f"P{i}"


def _sinr_constraint_terms(coeffs: PowerSinrCoefficients,
                           config: SystemConfig,
                           k: int) -> Posynomial:
    """f_k as a posynomial: 1 / SINR_k in the power variables."""
    n = config.n_users
    part = partner_indices(n)
    kp = part[k]
    inv = monomial(1.0 / config.N_t, **{_pvar(kp): -1})
    terms = []
    for j in range(n):
        if j != k and coeffs.a[k, j] > 0:
            terms.append(monomial(coeffs.a[k, j], **{_pvar(j): 1}) * inv)
    if config.sigma2_LI > 0:
        terms.append(monomial(config.sigma2_LI * coeffs.b[k], PR=1) * inv)
    terms.append(monomial(config.sigma2_nr * coeffs.b[k]) * inv)
    for i in range(n):
        for l in range(n):
            level = config.sigma2_user[k, l]
            if level > 0 and coeffs.c[k, i] > 0:
                terms.append(monomial(coeffs.c[k, i] * level, PR=-1)
                             * monomial(1.0, **{_pvar(i): 1})
                             * monomial(1.0, **{_pvar(l): 1}) * inv)
        if coeffs.c[k, i] > 0:
            terms.append(monomial(config.sigma2_n * coeffs.c[k, i], PR=-1,
                                  **{_pvar(i): 1}) * inv)
    return Posynomial(tuple(terms))


def _power_bounds(config: SystemConfig, P_S_max: float, P_R_max: float) -> dict:
    floor_u = POWER_FLOOR_FACTOR * P_S_max
    floor_r = POWER_FLOOR_FACTOR * P_R_max
    bounds = {_pvar(i): (floor_u, P_S_max) for i in range(config.n_users)}
    bounds["PR"] = (floor_r, P_R_max)
    return bounds


def _allocation_from(sol: GpSolution, config: SystemConfig,
                     P_S_max: float, P_R_max: float) -> PowerAllocation:
    P = np.array([min(sol.values[_pvar(i)], P_S_max) for i in range(config.n_users)])
    return PowerAllocation(P=P, P_R=min(sol.values["PR"], P_R_max),
                           P_S_max=P_S_max, P_R_max=P_R_max)


@dataclass(frozen=True)
class SumRateResult:
    """Outcome of the successive-approximation sum-rate maximisation."""

    allocation: PowerAllocation
    sinr: np.ndarray
    objective_history: tuple
    n_iterations: int
    status: str            # converged | zero_sinr | max_outer

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def maximize_sum_rate(coeffs: PowerSinrCoefficients,
                      config: SystemConfig,
                      P_S_max: float | None = None,
                      P_R_max: float | None = None,
                      eps: float = 1e-3,
                      max_outer: int = 5,
                      gp_tol: float = 1e-7) -> SumRateResult:
    """Maximise the product of (1 + SINR) over user and relay powers.

    Each outer round replaces 1 + SINR by its monomial fit at the current
    SINR guess, which turns the problem into a GP; the guess is refreshed
    with the solution until the SINRs move by less than ``eps`` or the
    iteration budget runs out. The tracked objective prod(1 + SINR) never
    decreases across rounds. A solution with a vanishing SINR stops the
    iteration and returns the last valid allocation with ``zero_sinr``.
    """
    P_S_max = config.P_S if P_S_max is None else P_S_max
    P_R_max = config.K * P_S_max if P_R_max is None else P_R_max
    alloc = PowerAllocation(P=np.full(config.n_users, P_S_max),
                            P_R=min(config.K * P_S_max, P_R_max),
                            P_S_max=P_S_max, P_R_max=P_R_max)
    gamma_hat = sinr_with_powers(coeffs, alloc, config)
    if np.any(gamma_hat <= 0):
        return SumRateResult(allocation=alloc, sinr=gamma_hat,
                             objective_history=(float(np.prod(1 + gamma_hat)),),
                             n_iterations=0, status="zero_sinr")
    f_k = [_sinr_constraint_terms(coeffs, config, k) for k in range(config.n_users)]
    bounds = _power_bounds(config, P_S_max, P_R_max)
    for k in range(config.n_users):
        bounds[f"g{k}"] = _SINR_VAR_BOUNDS
    history = [float(np.prod(1.0 + gamma_hat))]
    status = "max_outer"
    start = None
    iterations = 0
    for _ in range(max_outer):
        iterations += 1
        nu = gamma_hat / (1.0 + gamma_hat)
        objective = Monomial(1.0, {f"g{k}": -nu[k] for k in range(config.n_users)})
        constraints = [f_k[k] * monomial(1.0, **{f"g{k}": 1})
                       for k in range(config.n_users)]
        gp = GeometricProgram(objective=objective, constraints=constraints, bounds=bounds)
        sol = solve_gp(gp, tol=gp_tol, start=start)
        if sol.status is GpStatus.INFEASIBLE:
            raise SolverError(f"sum-rate GP infeasible at iteration {iterations}")
        gamma_star = np.array([sol.values[f"g{k}"] for k in range(config.n_users)])
        if np.any(gamma_star <= 10 * _SINR_VAR_BOUNDS[0]):
            status = "zero_sinr"
            break
        alloc = _allocation_from(sol, config, P_S_max, P_R_max)
        start = sol.values
        shift = float(np.max(np.abs(gamma_hat - gamma_star)))
        gamma_hat = gamma_star
        history.append(float(np.prod(1.0 + gamma_hat)))
        if shift <= eps:
            status = "converged"
            break
    return SumRateResult(allocation=alloc,
                         sinr=sinr_with_powers(coeffs, alloc, config),
                         objective_history=tuple(history),
                         n_iterations=iterations,
                         status=status)


def max_min_fairness(coeffs: PowerSinrCoefficients,
                     config: SystemConfig,
                     P_S_max: float | None = None,
                     P_R_max: float | None = None,
                     gp_tol: float = 1e-9) -> tuple[PowerAllocation, float]:
    """Maximise the worst user's SINR over user and relay powers.

    A slack variable t turns the problem into a single GP: maximise t
    subject to t / SINR_k <= 1 for every user. At the optimum all users
    achieve the same SINR. Returns the allocation and the achieved
    minimum SINR.
    """
    P_S_max = config.P_S if P_S_max is None else P_S_max
    P_R_max = config.K * P_S_max if P_R_max is None else P_R_max
    bounds = _power_bounds(config, P_S_max, P_R_max)
    bounds["t"] = _SINR_VAR_BOUNDS
    constraints = [_sinr_constraint_terms(coeffs, config, k) * monomial(1.0, t=1)
                   for k in range(config.n_users)]
    gp = GeometricProgram(objective=monomial(1.0, t=-1),
                          constraints=constraints, bounds=bounds)
    sol = solve_gp(gp, tol=gp_tol)
    if sol.status is GpStatus.INFEASIBLE:
        raise SolverError("max-min power GP reported infeasible")
    alloc = _allocation_from(sol, config, P_S_max, P_R_max)
    achieved = float(np.min(sinr_with_powers(coeffs, alloc, config)))
    return alloc, achieved


# ---------------------------------------------------------------------------
# equal-coefficient closed form


@dataclass(frozen=True)
class SpecialAllocation:
    """Closed-form max-min optimum when all large-scale coefficients match."""

    P_S: float
    P_R_exact: float
    P_R_approx: float
    eta: float


def special_scenario_allocation(config: SystemConfig,
                                profile: LargeScaleProfile | None = None,
                                P_S_max: float | None = None) -> SpecialAllocation:
    """Max-min optimal powers for the equal-coefficient scenario.

    Users transmit at the peak and the relay power grows linearly with it:
    P_R ~ eta * P_S_max with eta = K sqrt(2 delta / (sigma2_LI kappa)) and
    delta the average same-side interference level; the exact optimiser
    also carries the noise correction. The factor eta does not depend on
    the common fading coefficient. Raises when the scenario assumptions
    (equal coefficients, uniform interference levels) are violated.
    """
    P_S_max = config.P_S if P_S_max is None else P_S_max
    if profile is not None:
        if not (np.allclose(profile.beta_u, profile.beta_u[0])
                and np.allclose(profile.beta_d, profile.beta_d[0])
                and np.allclose(profile.beta_u, profile.beta_d)):
            raise ValueError("special scenario requires equal large-scale coefficients")
    diag = np.diag(config.sigma2_user)
    if not np.allclose(diag, diag[0]):
        raise ValueError("special scenario requires equal self-interference levels")
    off = config.sigma2_user[same_side_mask(config.n_users)
                             & ~np.eye(config.n_users, dtype=bool)]
    if off.size and not np.allclose(off, off[0]):
        raise ValueError("special scenario requires equal inter-user levels")
    if config.sigma2_LI <= 0:
        raise ValueError("special scenario requires a positive relay loop level")
    sigma2_self = float(diag[0])
    sigma2_cross = float(off[0]) if off.size else 0.0
    delta = (sigma2_self + (config.K - 1) * sigma2_cross) / config.K
    eta = config.K * math.sqrt(2.0 * delta / (config.sigma2_LI * config.kappa))
    # mu / b_coef = 1 / kappa, so the estimated coefficients cancel here
    p_r_exact = math.sqrt(2.0 * config.K / (config.sigma2_LI * config.kappa)
                          * P_S_max * (config.K * delta * P_S_max + config.sigma2_n))
    return SpecialAllocation(P_S=P_S_max, P_R_exact=p_r_exact,
                             P_R_approx=eta * P_S_max, eta=eta)
