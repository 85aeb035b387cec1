"""Experiment scenarios: plain-text configs, bundled presets, CSV output."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import (LargeScaleProfile, large_scale_from_geometry, symmetric_profile,
                       unit_profile)
from .config import (ConfigurationError, EstimationScheme, SystemConfig, db_to_linear,
                     default_config, linear_to_db, user_interference_matrix)
from .pilots import with_estimates
from .power import (max_min_fairness, maximize_sum_rate, power_sinr_coefficients,
                    sinr_with_powers, special_scenario_allocation, uniform_allocation)
from .rates import (approx_sinr_values, crossover_coherence_interval, ergodic_sum_rate_mc,
                    lower_bound_sinr_exact, special_scenario_params, sum_rate_from_sinrs)

CSV_COLUMNS = ("scenario", "sweep_var", "sweep_value", "metric", "value", "stderr", "seed")

# One representative symmetric drop of the distance/shadowing fading model,
# pinned so the pilot-scheme comparison results are reproducible run to run.
PINNED_SYMMETRIC_PAIR_BETAS = (11.892, 5.412, 3.382, 0.323, 0.003)

SWEEP_VARIABLES = ("none", "N_t", "K", "T_c", "P_R_dB")
PROFILE_KINDS = ("unit", "pinned_symmetric", "distances", "random", "random_symmetric")
ESTIMATOR_MODES = ("ice", "cce", "both")
POWER_MODES = ("uniform", "sumrate-opt", "maxmin-opt", "special-eta")
RELAY_POWER_MODES = ("fixed", "eta", "k_times")


@dataclass(frozen=True)
class ProfileSpec:
    """How the large-scale coefficients of a scenario are produced."""

    kind: str = "unit"
    distances: tuple = ()
    d0: float = 200.0
    pathloss_exponent: float = 3.8
    shadowing_dB: float = 8.0
    max_distance: float = 500.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ConfigurationError(f"unknown profile kind {self.kind!r}")

    @property
    def is_random(self) -> bool:
        return self.kind in ("random", "random_symmetric")

    def build(self, K: int, rng: np.random.Generator | None = None) -> LargeScaleProfile:
        if self.kind == "unit":
            return unit_profile(K)
        if self.kind == "pinned_symmetric":
            if K > len(PINNED_SYMMETRIC_PAIR_BETAS):
                raise ConfigurationError(
                    f"pinned symmetric profile supports up to {len(PINNED_SYMMETRIC_PAIR_BETAS)} pairs")
            return symmetric_profile(PINNED_SYMMETRIC_PAIR_BETAS[:K])
        if self.kind == "distances":
            if len(self.distances) != K:
                raise ConfigurationError(f"need {K} pair distances, got {len(self.distances)}")
            per_user = np.repeat(np.asarray(self.distances, dtype=float), 2)
            return large_scale_from_geometry(per_user, 0.0, self.d0, self.pathloss_exponent)
        if rng is None:
            raise ConfigurationError(f"profile kind {self.kind!r} needs an rng")
        if self.kind == "random_symmetric":
            d = np.repeat(rng.uniform(0.0, self.max_distance, K), 2)
            omega = np.repeat(rng.normal(0.0, self.shadowing_dB, K), 2)
        else:
            d = rng.uniform(0.0, self.max_distance, 2 * K)
            omega = rng.normal(0.0, self.shadowing_dB, 2 * K)
        beta = 10.0 ** (omega / 10.0) / (1.0 + (d / self.d0) ** self.pathloss_exponent)
        return LargeScaleProfile(beta_u=beta, beta_d=beta.copy())


@dataclass(frozen=True)
class Scenario:
    """A named experiment: a system, a fading model, a sweep and run knobs."""

    name: str
    config: SystemConfig
    profile: ProfileSpec = field(default_factory=ProfileSpec)
    sweep_variable: str = "none"
    sweep_values: tuple = (0,)
    estimator: str = "ice"
    power_mode: str = "uniform"
    relay_power: str = "fixed"
    n_trials: int = 200
    n_drops: int = 1
    seed: int = 1
    sic: bool = True
    mc: bool = True

    def __post_init__(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigurationError(f"unknown sweep variable {self.sweep_variable!r}")
        if self.estimator not in ESTIMATOR_MODES:
            raise ConfigurationError(f"unknown estimator mode {self.estimator!r}")
        if self.power_mode not in POWER_MODES:
            raise ConfigurationError(f"unknown power mode {self.power_mode!r}")
        if self.relay_power not in RELAY_POWER_MODES:
            raise ConfigurationError(f"unknown relay power mode {self.relay_power!r}")
        if not self.sweep_values:
            raise ConfigurationError("sweep needs at least one value")
        if self.n_trials < 0 or self.n_drops < 1:
            raise ConfigurationError("n_trials must be >= 0 and n_drops >= 1")
        if self.profile.is_random and self.n_drops < 2:
            raise ConfigurationError("random profiles need n_drops >= 2")


@dataclass(frozen=True)
class Row:
    scenario: str
    sweep_var: str
    sweep_value: object
    metric: str
    value: float
    stderr: float | None
    seed: int

    def as_csv(self) -> list:
        fmt = lambda x: "" if x is None else f"{x:.10g}"
        return [self.scenario, self.sweep_var, fmt_value(self.sweep_value),
                self.metric, fmt(self.value), fmt(self.stderr), str(self.seed)]


def fmt_value(x) -> str:
    if isinstance(x, float) and x == int(x):
        return str(int(x))
    return f"{x:.10g}" if isinstance(x, float) else str(x)


def _config_at(sc: Scenario, value) -> SystemConfig:
    cfg = sc.config
    if sc.sweep_variable == "N_t":
        n = int(value)
        cfg = cfg.with_(N_t=n, N_r=n)
    elif sc.sweep_variable == "K":
        k = int(value)
        self_level = float(cfg.sigma2_user[0, 0])
        cross = float(cfg.sigma2_user[0, 2]) if cfg.K > 1 else 0.0
        cfg = SystemConfig(
            K=k, N_r=cfg.N_r, N_t=cfg.N_t, P_S=cfg.P_S, P_R=cfg.P_R, P_p=cfg.P_p,
            T_c=cfg.T_c, tau=2 * k, tau_c=k,
            sigma2_n=cfg.sigma2_n, sigma2_nr=cfg.sigma2_nr, sigma2_LI=cfg.sigma2_LI,
            sigma2_user=user_interference_matrix(k, self_level, cross))
    elif sc.sweep_variable == "T_c":
        cfg = cfg.with_(T_c=int(value))
    elif sc.sweep_variable == "P_R_dB":
        cfg = cfg.with_(P_R=float(db_to_linear(value)))
    if sc.relay_power == "k_times":
        cfg = cfg.with_(P_R=cfg.K * cfg.P_S)
    elif sc.relay_power == "eta":
        cfg = cfg.with_(P_R=special_scenario_params(cfg).eta * cfg.P_S)
    return cfg


def _drop_metrics(sc: Scenario, cfg: SystemConfig, profile: LargeScaleProfile,
                  rng: np.random.Generator) -> dict:
    """Metric dict for one large-scale realization at one sweep point."""
    out = {}
    ice = with_estimates(profile, cfg, EstimationScheme.ICE)
    gamma_lb = lower_bound_sinr_exact(ice, cfg)
    gamma_ice = approx_sinr_values(ice, cfg, EstimationScheme.ICE)
    out["lower_bound_rate"] = (sum_rate_from_sinrs(gamma_lb, cfg.T_c, cfg.tau), None)
    out["approx_rate_ice"] = (sum_rate_from_sinrs(gamma_ice, cfg.T_c, cfg.tau), None)
    if sc.estimator in ("cce", "both"):
        cce = with_estimates(profile, cfg, EstimationScheme.CCE)
        gamma_cce = approx_sinr_values(cce, cfg, EstimationScheme.CCE)
        out["approx_rate_cce"] = (sum_rate_from_sinrs(gamma_cce, cfg.T_c, cfg.tau_c), None)
    if sc.estimator == "both":
        tce, _ = crossover_coherence_interval(gamma_ice, cfg.tau)
        out["tce"] = (tce, None)
    if sc.mc and sc.n_trials > 0:
        schemes = {"ice": [EstimationScheme.ICE], "cce": [EstimationScheme.CCE],
                   "both": [EstimationScheme.ICE, EstimationScheme.CCE]}[sc.estimator]
        for s in schemes:
            mc = ergodic_sum_rate_mc(cfg, profile, s, sic=sc.sic,
                                     n_trials=sc.n_trials, rng=rng)
            out[f"mc_rate_{s.value}"] = (mc.rate, mc.stderr)
    if sc.power_mode in ("sumrate-opt", "maxmin-opt"):
        coeffs = power_sinr_coefficients(profile, cfg)
        base = uniform_allocation(cfg)
        gamma_unif = sinr_with_powers(coeffs, base, cfg)
        if sc.power_mode == "sumrate-opt":
            out["sum_rate_uniform"] = (sum_rate_from_sinrs(gamma_unif, cfg.T_c, cfg.tau), None)
            res = maximize_sum_rate(coeffs, cfg, P_S_max=cfg.P_S, P_R_max=cfg.K * cfg.P_S)
            opt = sum_rate_from_sinrs(res.sinr, cfg.T_c, cfg.tau)
            out["sum_rate_opt"] = (opt, None)
            out["sum_rate_gain"] = (opt - out["sum_rate_uniform"][0], None)
            hist = np.array(res.objective_history)
            out["alg_objective_monotone"] = (float(np.all(np.diff(hist) >= -1e-9)), None)
        else:
            out["min_sinr_uniform_db"] = (float(linear_to_db(gamma_unif.min())), None)
            alloc, achieved = max_min_fairness(coeffs, cfg, P_S_max=cfg.P_S,
                                               P_R_max=cfg.K * cfg.P_S)
            out["min_sinr_opt_db"] = (float(linear_to_db(achieved)), None)
            out["min_sinr_gain_db"] = (out["min_sinr_opt_db"][0]
                                       - out["min_sinr_uniform_db"][0], None)
            gam = sinr_with_powers(coeffs, alloc, cfg)
            out["sinr_spread_rel"] = (float((gam.max() - gam.min()) / gam.min()), None)
    elif sc.power_mode == "special-eta":
        alloc = special_scenario_allocation(cfg, P_S_max=cfg.P_S)
        out["eta"] = (alloc.eta, None)
        out["relay_power_opt"] = (alloc.P_R_exact, None)
        out["relay_power_opt_approx"] = (alloc.P_R_approx, None)
    return out


_AGG_MAX = ("sinr_spread_rel",)
_AGG_MIN = ("alg_objective_monotone",)


def _run_point(sc: Scenario, value, seed_seq: np.random.SeedSequence) -> list[Row]:
    cfg = _config_at(sc, value)
    rng = np.random.default_rng(seed_seq)
    if sc.profile.is_random:
        per_drop = []
        for drop_rng in rng.spawn(sc.n_drops):
            profile = sc.profile.build(cfg.K, drop_rng)
            per_drop.append(_drop_metrics(sc, cfg, profile, drop_rng))
        metrics = {}
        for name in per_drop[0]:
            vals = np.array([d[name][0] for d in per_drop])
            if name in _AGG_MAX:
                metrics[name] = (float(vals.max()), None)
            elif name in _AGG_MIN:
                metrics[name] = (float(vals.min()), None)
            else:
                metrics[name] = (float(np.median(vals)), None)
    else:
        profile = sc.profile.build(cfg.K, rng)
        metrics = _drop_metrics(sc, cfg, profile, rng)
    sweep_var = sc.sweep_variable
    return [Row(sc.name, sweep_var, value, metric, val, err, sc.seed)
            for metric, (val, err) in metrics.items()]


def run_scenario(scenario: Scenario, threads: int = 1) -> list[Row]:
    """Run every sweep point of a scenario and return CSV rows.

    A zero-trial run is a dry run and produces no rows. Each sweep point
    gets a seed spawned from the scenario seed, so results are independent
    of the execution order and of ``threads``.
    """
    if scenario.n_trials == 0:
        return []
    seeds = np.random.SeedSequence(scenario.seed).spawn(len(scenario.sweep_values))
    points = list(zip(scenario.sweep_values, seeds))
    if threads > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_run_point_star,
                                   [(scenario, v, s) for v, s in points]))
    else:
        chunks = [_run_point(scenario, v, s) for v, s in points]
    return [row for chunk in chunks for row in chunk]


def _run_point_star(args):
    return _run_point(*args)


def write_csv(rows: list[Row], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.as_csv())


# ---------------------------------------------------------------------------
# plain-text scenario files


def parse_scenario_text(text: str) -> Scenario:
    """Parse the dotted key/value scenario format (see docs).

    Powers and variances are given in dB and converted to linear here.
    """
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if not key or not val:
            raise ConfigurationError(f"line {lineno}: empty key or value")
        kv[key.lower()] = val

    def take(key, default=None, cast=str):
        if key in kv:
            return cast(kv.pop(key))
        return default

    def take_bool(key, default):
        raw = take(key)
        if raw is None:
            return default
        if raw.lower() in ("on", "true", "1", "yes"):
            return True
        if raw.lower() in ("off", "false", "0", "no"):
            return False
        raise ConfigurationError(f"{key}: expected on/off, got {raw!r}")

    K = take("system.k", 5, int)
    N_t = take("system.n_t", 200, int)
    N_r = take("system.n_r", N_t, int)
    relay_power = take("system.relay_power", "k_times").lower()
    cfg = default_config(
        K=K, N_t=N_t, N_r=N_r,
        P_S_dB=take("system.p_s_db", 10.0, float),
        P_p_dB=take("system.p_p_db", 10.0, float),
        T_c=take("system.t_c", 100, int),
        tau=take("system.tau", None, int),
        tau_c=take("system.tau_c", None, int),
        sigma2_LI_dB=take("system.sigma2_li_db", 5.0, float),
        sigma2_IU=take("system.sigma2_iu", 1.0, float),
    )
    p_r_db = take("system.p_r_db", None, float)
    if relay_power == "fixed":
        if p_r_db is None:
            raise ConfigurationError("system.relay_power = fixed needs system.p_r_db")
        cfg = cfg.with_(P_R=float(db_to_linear(p_r_db)))
    elif relay_power not in RELAY_POWER_MODES:
        raise ConfigurationError(f"unknown relay power mode {relay_power!r}")

    distances = take("profile.distances", "", str)
    profile = ProfileSpec(
        kind=take("profile.kind", "unit").lower(),
        distances=tuple(float(x) for x in distances.split(",") if x.strip()),
        d0=take("profile.d0", 200.0, float),
        pathloss_exponent=take("profile.pathloss_exponent", 3.8, float),
        shadowing_dB=take("profile.shadowing_db", 8.0, float),
        max_distance=take("profile.max_distance", 500.0, float),
    )

    sweep_var = take("sweep.variable", "none")
    values_raw = take("sweep.values", "", str)
    values = tuple(float(x) for x in values_raw.split(",") if x.strip()) or (0,)

    scenario = Scenario(
        name=take("scenario.name", "scenario"),
        config=cfg,
        profile=profile,
        sweep_variable=sweep_var,
        sweep_values=values,
        estimator=take("run.estimator", "ice").lower(),
        power_mode=take("run.power", "uniform").lower(),
        relay_power=relay_power,
        n_trials=take("run.trials", 200, int),
        n_drops=take("run.drops", 1, int),
        seed=take("run.seed", 1, int),
        sic=take_bool("run.sic", True),
        mc=take_bool("run.mc", True),
    )
    if kv:
        raise ConfigurationError(f"unknown keys: {', '.join(sorted(kv))}")
    return scenario


def parse_scenario_file(path) -> Scenario:
    with open(path) as fh:
        return parse_scenario_text(fh.read())


# ---------------------------------------------------------------------------
# bundled presets (desk-scale trial counts)


def _presets() -> dict:
    fig2 = Scenario(
        name="fig2", config=default_config(K=5, N_t=50),
        sweep_variable="K", sweep_values=tuple(range(1, 11)),
        estimator="ice", relay_power="eta", n_trials=300, seed=1)
    fig3 = Scenario(
        name="fig3", config=default_config(K=5, N_t=50, sigma2_LI_dB=10.0),
        sweep_variable="N_t", sweep_values=(10, 50, 100, 200, 400),
        estimator="ice", relay_power="eta", n_trials=300, seed=1)
    fig4 = Scenario(
        name="fig4", config=default_config(K=5, N_t=50),
        profile=ProfileSpec(kind="pinned_symmetric"),
        sweep_variable="T_c", sweep_values=tuple(range(12, 41, 2)),
        estimator="both", relay_power="k_times", n_trials=200, seed=1)
    fig5_sym = Scenario(
        name="fig5_sym", config=default_config(K=5, N_t=50, T_c=15),
        profile=ProfileSpec(kind="pinned_symmetric"),
        sweep_variable="N_t", sweep_values=(50, 100, 200, 400),
        estimator="both", relay_power="k_times", n_trials=200, seed=1)
    fig5_asym = Scenario(
        name="fig5_asym", config=default_config(K=5, N_t=50, T_c=15),
        profile=ProfileSpec(kind="random"),
        sweep_variable="N_t", sweep_values=(50, 100, 200, 400),
        estimator="both", relay_power="k_times", n_trials=50, n_drops=20, seed=1)
    fig6 = Scenario(
        name="fig6", config=default_config(K=5, N_t=200),
        profile=ProfileSpec(kind="random"),
        sweep_variable="none", sweep_values=(0,),
        estimator="ice", power_mode="sumrate-opt", relay_power="k_times",
        n_trials=1, n_drops=50, seed=1, mc=False)
    fig7 = Scenario(
        name="fig7", config=default_config(K=5, N_t=200),
        profile=ProfileSpec(kind="random"),
        sweep_variable="none", sweep_values=(0,),
        estimator="ice", power_mode="maxmin-opt", relay_power="k_times",
        n_trials=1, n_drops=50, seed=1, mc=False)
    fig8 = Scenario(
        name="fig8", config=default_config(K=5, N_t=200),
        sweep_variable="P_R_dB", sweep_values=tuple(range(0, 31, 2)),
        estimator="ice", power_mode="special-eta", n_trials=1, seed=1, mc=False)
    return {
        "fig2": (fig2,), "fig3": (fig3,), "fig4": (fig4,),
        "fig5": (fig5_sym, fig5_asym), "fig6": (fig6,), "fig7": (fig7,), "fig8": (fig8,),
    }


PRESETS = _presets()


def run_preset(name: str, *, seed: int | None = None, n_trials: int | None = None,
               threads: int = 1) -> list[Row]:
    """Run a bundled preset, optionally overriding its seed or trial count."""
    if name not in PRESETS:
        raise ConfigurationError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    rows = []
    for sc in PRESETS[name]:
        if seed is not None:
            sc = replace(sc, seed=seed)
        if n_trials is not None:
            sc = replace(sc, n_trials=n_trials)
        rows.extend(run_scenario(sc, threads=threads))
    return rows
