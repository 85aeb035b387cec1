"""Numerical laboratory for multi-pair two-way full-duplex relaying with
large antenna arrays: channel and training simulation, closed-form rate
analysis cross-checked by Monte Carlo, and GP-based power allocation."""

from .channels import (ChannelSet, LargeScaleProfile, complex_gaussian, draw_channels,
                       large_scale_from_geometry, symmetric_profile, unit_profile)
from .config import (ConfigurationError, EstimationScheme, SolverError, SystemConfig,
                     db_to_linear, default_config, linear_to_db, partner_indices,
                     user_interference_matrix)
from .gp import (FeasibilityReport, GeometricProgram, GpSolution, GpStatus, Monomial,
                 Posynomial, gp_feasible, monomial, solve_gp)
from .pilots import (PilotBook, estimate_channels, estimated_large_scale, ls_estimate,
                     pilot_book, simulate_pilot_phase, with_estimates)
from .power import (PowerAllocation, PowerSinrCoefficients, SpecialAllocation,
                    SumRateResult, max_min_fairness, maximize_sum_rate,
                    power_sinr_coefficients, sinr_with_powers,
                    special_scenario_allocation, uniform_allocation)
from .rates import (BestPairCount, McRate, SinrBreakdown, SpecialScenarioParams,
                    approx_sinr, approx_sinr_values, best_pair_count,
                    crossover_coherence_interval, effective_gain_mean,
                    effective_gain_variance, ergodic_sum_rate_mc, forwarded_power,
                    g_ratio_of_antennas, inter_pair_power, lower_bound_sinr_exact,
                    pair_count_table, required_antennas, special_scenario_params,
                    special_scenario_sinr, statistical_sinr_mc, sum_rate_from_sinrs)
from .relay import (DeltaTerms, RelayWeights, amplification_factor,
                    delta_terms_closed_form, delta_terms_empirical, instantaneous_sinr,
                    mrc_mrt, mrc_mrt_moments_mc, relay_weights)
from .scenarios import (PRESETS, ProfileSpec, Row, Scenario, parse_scenario_file,
                        parse_scenario_text, run_preset, run_scenario, write_csv)

__version__ = "0.1.0"
