"""Command line entry point: run scenario files, bundled presets and the
built-in self-check report."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .config import ConfigurationError, EstimationScheme, default_config
from .gp import GeometricProgram, Posynomial, monomial, solve_gp
from .pilots import with_estimates
from .rates import (approx_sinr_values, crossover_coherence_interval, ergodic_sum_rate_mc,
                    lower_bound_sinr_exact, special_scenario_params, sum_rate_from_sinrs)
from .scenarios import (PRESETS, PINNED_SYMMETRIC_PAIR_BETAS, parse_scenario_file,
                        run_preset, run_scenario, write_csv)
from .channels import symmetric_profile, unit_profile


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--trials", type=int, default=None, help="override the trial count")
    p.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes for sweep points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relaylab",
        description="Multi-pair two-way full-duplex relay rate laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario config file")
    run_p.add_argument("config_file")
    _add_common(run_p)

    preset_p = sub.add_parser("preset", help="run a bundled preset")
    preset_p.add_argument("name", help=f"one of: {', '.join(sorted(PRESETS))}")
    _add_common(preset_p)

    report_p = sub.add_parser("report", help="quick plain-text self checks")
    report_p.add_argument("--seed", type=int, default=7)
    report_p.add_argument("--trials", type=int, default=300)
    return parser


def _emit(rows, out_path) -> None:
    if out_path:
        write_csv(rows, out_path)
    else:
        from .scenarios import CSV_COLUMNS
        print(",".join(CSV_COLUMNS))
        for row in rows:
            print(",".join(row.as_csv()))


def _cmd_run(args) -> int:
    scenario = parse_scenario_file(args.config_file)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.trials is not None:
        scenario = replace(scenario, n_trials=args.trials)
    _emit(run_scenario(scenario, threads=args.threads), args.out)
    return 0


def _cmd_preset(args) -> int:
    rows = run_preset(args.name, seed=args.seed, n_trials=args.trials,
                      threads=args.threads)
    _emit(rows, args.out)
    return 0


def _check(name: str, ok: bool, detail: str) -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def _cmd_report(args) -> int:
    """Reduced-scale sanity checks of the main analytical claims."""
    rng = np.random.default_rng(args.seed)
    ok = True

    cfg = default_config(K=5, N_t=50)
    cfg = cfg.with_(P_R=special_scenario_params(cfg).eta * cfg.P_S)
    profile = with_estimates(unit_profile(5), cfg, EstimationScheme.ICE)
    bound = sum_rate_from_sinrs(lower_bound_sinr_exact(profile, cfg), cfg.T_c, cfg.tau)
    mc = ergodic_sum_rate_mc(cfg, profile, EstimationScheme.ICE,
                             n_trials=args.trials, rng=rng)
    gap = (mc.rate - bound) / bound
    ok &= _check("bound sandwich (N=50)", mc.rate > bound - 2 * mc.stderr and gap < 0.05,
                 f"mc={mc.rate:.3f}+-{mc.stderr:.3f} bound={bound:.3f} gap={gap:.2%}")

    sym = symmetric_profile(PINNED_SYMMETRIC_PAIR_BETAS)
    cfg4 = default_config(K=5, N_t=50)
    gam = approx_sinr_values(with_estimates(sym, cfg4, EstimationScheme.ICE),
                             cfg4, EstimationScheme.ICE)
    tce, _ = crossover_coherence_interval(gam, cfg4.tau)
    ok &= _check("scheme crossover (N=50)", abs(tce - 21.2) <= 0.5, f"T_c={tce:.2f}")

    eta = special_scenario_params(default_config(K=5, N_t=200)).eta
    ok &= _check("relay power factor", abs(eta / 5 - 0.952) <= 0.005, f"eta/K={eta / 5:.4f}")

    gp = GeometricProgram(
        objective=Posynomial.of(monomial(1.0, x=1), monomial(1.0, x=-1)),
        bounds={"x": (1e-2, 1e2)})
    sol = solve_gp(gp, tol=1e-9)
    ok &= _check("gp solver", abs(sol.objective_value - 2.0) <= 1e-6,
                 f"min(x + 1/x)={sol.objective_value:.8f}")

    print("overall:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "preset":
            return _cmd_preset(args)
        return _cmd_report(args)
    except (ConfigurationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
