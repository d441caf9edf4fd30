"""
Command-line controller.

Parses arguments, loads the application config and an optional scenario
file, runs one subcommand and writes its outputs followed by ``run.log`` and
``manifest.json``.

Exit codes:

    0  success
    1  computation infeasible (participation cap too tight)
    2  usage, configuration or I/O error
    3  validation error (bad tape, undefined computation)
"""

import argparse
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from core import audit, experiments, fees, risk, strategies, valuation
from core.benchmarks import institutional_vwap, purchase_stats, realized_bogus_benchmark
from core.config import initialize_config_manager, load_scenario
from core.helper._export import OutputWriter
from core.market_model import ScenarioConfig, generate_path, read_path_csv
from core.utils.errors import EXIT_OK, EXIT_USAGE, BuybackLabError, ConfigurationError
from core.utils.event_system import EventSystem
from core.utils.logger import configure, debug, exception, log, set_log_sink

SUBCOMMANDS = ("simulate", "risk", "audit", "experiment", "nav", "report")
EXPERIMENTS = ("coin", "study", "multipliers", "collapse")
PROGRESS_EVENTS = ("mc.block_done", "study.block_done")

DEFAULT_MC_PATHS = 100_000
DEFAULT_STUDY_PATHS = 10_000
DEFAULT_STUDY_TARGET = 1e8
FIGURES_NAME = "published_figures.json"


@dataclass
class RunManifest:
    """Record of one CLI run; written last."""
    subcommand: str
    config_path: Optional[str]
    seed: Optional[int]
    output_dir: str
    app_version: Optional[str] = None
    emitted_files: list = field(default_factory=list)

    def to_dict(self):
        data = asdict(self)
        data["emitted_files"] = [
            {"name": name, "format": fmt, "rows": rows} for name, fmt, rows in self.emitted_files
        ]
        return data


def simulation_series(path, blotter):
    """Per-day price, running bogus benchmark and traded value over the execution window."""
    window = blotter.window_days
    frame = path.to_frame().iloc[:window].copy()
    count = np.arange(1, len(frame) + 1)
    frame["bogus_benchmark"] = np.cumsum(frame["vwap"].to_numpy()) / count
    traded = np.zeros(len(frame))
    shares = np.zeros(len(frame))
    for f in blotter.fills:
        traded[f.day_index] = f.value
        shares[f.day_index] = f.shares
    frame["shares"] = shares
    frame["traded_value"] = traded
    frame["cumulative_pct_value"] = np.cumsum(traded) / blotter.target_value
    frame["pct_time_elapsed"] = count / window
    return frame.reset_index(drop=True)


def simulation_summary(path, blotter, fee_terms, taxes, name=""):
    """Purchase statistics, benchmarks and costs of one strategy run."""
    summary = {
        "scenario": name,
        "config_digest": path.config_digest,
        "target_value": blotter.target_value,
        "window_days": blotter.window_days,
        "completed": blotter.completed,
        "completion_day": blotter.completion_day,
        "gross_value": blotter.gross_value,
        "shares": blotter.total_shares,
        "diagnostic": blotter.diagnostic,
    }
    if blotter.total_shares <= 0:
        summary["outperformance"] = None
        summary["diagnostic"] = blotter.diagnostic or "no shares bought"
        return summary

    benchmark = realized_bogus_benchmark(path, blotter)
    stats = purchase_stats(blotter, benchmark)
    last = blotter.fills[-1].day_index + 1
    summary.update(
        avg_price=stats.avg_price,
        benchmark=benchmark,
        institutional_vwap=institutional_vwap(zip(path.vwaps[:last], path.volumes[:last])),
        outperformance=stats.outperformance,
        costs=fees.cost_breakdown(stats.gross_value, stats.outperformance * fees.BPS,
                                  fee_terms, taxes),
    )
    return summary


def _as_text(data, indent=0):
    lines = []
    pad = " " * indent
    for key, value in data.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(_as_text(value, indent + 2))
        elif isinstance(value, float):
            lines.append(f"{pad}{key}: {value:,.6g}")
        else:
            lines.append(f"{pad}{key}: {value}")
    return "\n".join(lines)


class CliController:
    """
    Runs one subcommand.

    Library errors propagate out of ``run``; ``main`` maps them to exit codes.
    """

    def __init__(self, args, base_dir=None):
        """
        Args:
            args (argparse.Namespace): parsed command line
            base_dir (str | Path, optional): repository root holding config.json
        """
        self.args = args
        self.base_dir = Path(base_dir) if base_dir else Path(__file__).resolve().parent.parent
        self.config = initialize_config_manager(base_dir=self.base_dir)
        self.scenario = None
        self.writer = None
        self._log_lines = []

    # ------------------------------------------------------------------
    # Plumbing
    # ------------------------------------------------------------------
    def _capture(self, level, message):
        self._log_lines.append(f"[{level}] {message}")

    def _on_progress(self, index, total):
        debug(f"block {index + 1}/{total} done")

    @property
    def workers(self):
        return self.args.workers or int(self.config.get("monte_carlo.workers", 1))

    @property
    def block_size(self):
        return int(self.config.get("monte_carlo.block_size", risk.DEFAULT_BLOCK_SIZE))

    def _seed(self):
        if self.args.seed is not None:
            return self.args.seed
        return self.scenario.market.master_seed if self.scenario else 0

    def _market(self):
        """Scenario market (or the defaults) with the --seed override applied."""
        market = self.scenario.market if self.scenario else ScenarioConfig()
        return market.with_changes(master_seed=self._seed())

    def _limits(self):
        return self.scenario.limits if self.scenario else strategies.RegulatoryLimits()

    def _emit(self, name, data):
        """Write a structured result as JSON or text, depending on --format."""
        if self.args.format == "text":
            self.writer.write_text(f"{name}.txt", _as_text(data))
        else:
            self.writer.write_json(f"{name}.json", data)

    def run(self):
        if self.args.config:
            self.scenario = load_scenario(self.args.config)
        out = Path(self.args.out) if self.args.out else self.config.output_dir()
        self.writer = OutputWriter(out)

        set_log_sink(self._capture)
        for event in PROGRESS_EVENTS:
            EventSystem.subscribe(event, self._on_progress)
        try:
            log(f"{self.config.get('app_name')} {self.config.get('app_version')}: "
                f"{self.args.command}, writing to {out}")
            getattr(self, f"cmd_{self.args.command}")()
            self.writer.write_text("run.log", "\n".join(self._log_lines))
            manifest = RunManifest(
                subcommand=self.args.command,
                config_path=str(self.args.config) if self.args.config else None,
                seed=self._seed(),
                output_dir=str(out),
                app_version=self.config.get("app_version"),
                emitted_files=list(self.writer.emitted_files),
            )
            return self.writer.write_manifest(manifest.to_dict())
        finally:
            set_log_sink(None)
            for event in PROGRESS_EVENTS:
                EventSystem.unsubscribe(event, self._on_progress)

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------
    def cmd_simulate(self):
        if self.scenario is None:
            raise ConfigurationError("--config", "simulate needs a scenario file")
        params = self.scenario.strategy
        if params is None:
            raise ConfigurationError("strategy", "simulate needs a strategy section")
        limits = self._limits()
        if self.scenario.path_csv is not None:
            path = read_path_csv(self.scenario.path_csv)
        else:
            market = self._market()
            if market.horizon_days < limits.max_days:
                market = market.with_changes(horizon_days=limits.max_days)
            path = generate_path(market, self.args.path_index)

        blotter = strategies.run_strategy(path, params, limits)
        self.writer.write_csv("path.csv", path.to_frame())
        self.writer.write_csv("blotter.csv", blotter.to_frame())
        self.writer.write_csv("series.csv", simulation_series(path, blotter))
        summary = simulation_summary(path, blotter, self.scenario.fees, self.scenario.taxes,
                                     self.scenario.name)
        summary["strategy"] = params.kind.value
        self._emit("summary", summary)
        if summary["outperformance"] is not None:
            log(f"{params.kind.value}: outperformance {summary['outperformance']:.4%}")

    def cmd_risk(self):
        section = dict(self.scenario.risk) if self.scenario else {}
        market = self._market()
        if "days_per_year" in section:
            market = market.with_changes(trading_days_per_year=section["days_per_year"])
        value = float(self.args.value if self.args.value is not None else section.get("value", 1e9))
        z, percentile = section.get("z"), section.get("percentile")
        if z is None and percentile is None:
            percentile = float(self.config.get("defaults.var.percentile", 0.05))
        if z is None:
            z = risk.z_for_percentile(percentile)
        if percentile is None:
            percentile = risk.percentile_for_z(z)
        n_paths = self.args.paths or int(section.get("n_paths", DEFAULT_MC_PATHS))
        unwind_days = int(section.get("unwind_days", market.horizon_days))

        query = risk.VarQuery(value, z, market.sigma_annual, market.horizon_days,
                              market.trading_days_per_year)
        profile = risk.residual_var_profile(market, value, unwind_days, z)
        report = risk.VarReport(
            closed_form=risk.closed_form_var(query),
            mc_estimate=risk.mc_var(market, value, percentile, n_paths, self.workers,
                                    self.block_size),
            mc_paths=n_paths,
            percentile=percentile,
            residual_profile=tuple(profile),
            exact_lognormal=risk.exact_lognormal_var(market, value, percentile),
        )
        self.writer.write_csv("residual_profile.csv", risk.residual_profile_frame(profile))
        data = {k: v for k, v in asdict(report).items() if k != "residual_profile"}
        data.update(value=value, z=z, sigma_annual=market.sigma_annual,
                    horizon_days=market.horizon_days, days_per_year=market.trading_days_per_year)
        self._emit("var_report", data)
        log(f"closed-form VaR {report.closed_form:,.0f}, Monte Carlo {report.mc_estimate:,.0f}")

    def cmd_audit(self):
        section = dict(self.scenario.audit) if self.scenario else {}
        args = self.args
        if args.tape:
            tape = Path(args.tape)
        elif "tape" in section:
            tape = self.scenario.resolve(section["tape"])
        else:
            raise ConfigurationError("audit.tape", "no tape given (use --tape or an audit section)")
        allowed = args.allowed_days or section.get("total_allowed_days")
        if allowed is None:
            raise ConfigurationError("audit.total_allowed_days", "required")
        total_returned = (args.total_returned if args.total_returned is not None
                          else section.get("total_returned"))
        if args.stamp_bps is not None:
            stamp_bps = args.stamp_bps
        else:
            default_stamp = self.scenario.taxes.stamp_bps if self.scenario else 0.0
            stamp_bps = section.get("stamp_bps", default_stamp)

        records = audit.parse_tape(tape)
        report = audit.build_audit_report(
            records,
            int(allowed),
            total_returned=total_returned,
            stamp_bps=float(stamp_bps),
            reported_costs=tuple(section.get("reported_costs", ())),
            at_value_fraction=float(section.get("at_value_fraction", 0.9)),
            fees_paid_outside_capital=bool(section.get("fees_paid_outside_capital", False)),
        )
        self.writer.write_csv("completion_profile.csv", audit.completion_frame(report.completion))
        if args.format == "text":
            self.writer.write_text("audit_report.txt", report.to_text())
        else:
            self.writer.write_json("audit_report.json", report.to_dict())
        if report.implied_fee is not None:
            log(f"implied fee {report.implied_fee.fee:,.2f} ({report.implied_fee.fee_pct:.2%})")

    def _study_params(self):
        if self.scenario is not None and self.scenario.strategy is not None:
            return self.scenario.strategy
        return strategies.StrategyParams(
            kind=strategies.StrategyKind.ADAPTIVE_BROKER,
            target_value=DEFAULT_STUDY_TARGET,
            fast_mult=float(self.config.get("defaults.strategy.fast_mult", 4.0)),
            trickle_mult=float(self.config.get("defaults.strategy.trickle_mult", 0.15)),
        )

    def cmd_experiment(self):
        kind = self.args.experiment
        if kind == "coin":
            table = experiments.comparison_table(self.args.n_min, self.args.n_max,
                                                 trials=self.args.paths, seed=self._seed())
            self.writer.write_csv("coin_game.csv", table)
            exact = experiments.fixed_horizon_exact(self.args.n_min)
            self._emit("coin_game", {
                "n_min": self.args.n_min,
                "n_max": self.args.n_max,
                "fixed_horizon_exact": str(exact),
                "fixed_horizon": float(exact),
                "policies": table.to_dict("records"),
            })
            return

        params, market, limits = self._study_params(), self._market(), self._limits()
        if kind == "study":
            n_paths = self.args.paths or DEFAULT_STUDY_PATHS
            result = experiments.benchmark_beat_study(params, market, n_paths, limits,
                                                      self.workers)
            self.writer.write_csv("outperformance_histogram.csv",
                                  experiments.outperformance_histogram(result))
            self._emit("study", {k: v for k, v in asdict(result).items()
                                 if k != "outperformance"})
            log(f"study: beat the benchmark on {result.win_probability:.2%} of paths")
        elif kind == "multipliers":
            n_paths = self.args.paths or experiments.MIN_STUDY_PATHS
            table = experiments.multiplier_sensitivity(params, market, n_paths, limits,
                                                       workers=self.workers)
            self.writer.write_csv("multiplier_sensitivity.csv", table)
        else:
            n_paths = self.args.paths or experiments.MIN_STUDY_PATHS
            self._emit("volatility_collapse", experiments.volatility_collapse_comparison(
                params, market, n_paths, limits, workers=self.workers))

    def cmd_nav(self):
        args = self.args
        rows = valuation.hypo_worked_example(args.asset_value, args.shares_out, args.spend,
                                             tuple(args.price or (7.0, 11.0)))
        self.writer.write_csv("nav_table.csv", pd.DataFrame(rows))
        state = valuation.TrustState(args.asset_value, args.shares_out, rows[0]["price"])
        self._emit("nav", {
            "nav_per_share": valuation.nav_per_share(state),
            "gate_ceiling": valuation.gate_ceiling(state, args.max_premium),
            "rows": rows,
        })

    def cmd_report(self):
        """Recompute every published number into one JSON file plus plot-ready CSVs."""
        seed = self._seed()
        n_paths = self.args.paths or DEFAULT_MC_PATHS
        study_paths = max(experiments.MIN_STUDY_PATHS, n_paths // 10)
        figures = {
            "var": self._report_var(seed, n_paths),
            "fees": self._report_fees(),
            "audit": self._report_audit(),
            "experiments": self._report_experiments(seed, study_paths, n_paths * 10),
            "nav": self._report_nav(),
        }
        self.writer.write_json(FIGURES_NAME, figures)

    # ------------------------------------------------------------------
    # Report sections
    # ------------------------------------------------------------------
    def _report_var(self, seed, n_paths):
        cf = risk.closed_form_var
        single = ScenarioConfig(sigma_annual=0.35, horizon_days=125, trading_days_per_year=250,
                                master_seed=seed)
        annual = single.with_changes(trading_days_per_year=252)

        mc = risk.mc_var(annual, 1.0, 0.05, n_paths, self.workers, self.block_size)
        exact = risk.exact_lognormal_var(annual, 1.0, 0.05)
        closed = cf(risk.VarQuery(1.0, risk.z_for_percentile(0.05), 0.35, 125, 252))

        durations = risk.residual_var_durations(single, 870e6, 1.0)
        self.writer.write_csv("residual_profile.csv", risk.residual_profile_frame(
            risk.residual_var_profile(single, 870e6, 125, 1.0)))
        curves, terminal = risk.fan_chart(annual, min(n_paths, DEFAULT_STUDY_PATHS),
                                          workers=self.workers, block_size=self.block_size)
        self.writer.write_csv("fan_chart.csv", curves)
        counts, edges = np.histogram(terminal, bins=50)
        self.writer.write_csv("terminal_price_histogram.csv", pd.DataFrame(
            {"bin_low": edges[:-1], "bin_high": edges[1:], "count": counts}))

        return {
            "single_programme_z1": cf(risk.VarQuery(870e6, 1.0, 0.35, 125, 250)),
            "market_aggregate_z1": risk.market_aggregate_var(1.4e12, 0.2, 1.0, 0.35, 125),
            "market_aggregate_z2": risk.market_aggregate_var(1.4e12, 0.2, 2.0, 0.35, 125),
            "affected_280bn_z2_33": cf(risk.VarQuery(280e9, 2.33, 0.35, 125, 252)),
            "affected_280bn_z1_96": cf(risk.VarQuery(280e9, 1.96, 0.35, 125, 252)),
            "affected_1_12tn_z2_33": cf(risk.VarQuery(1.12e12, 2.33, 0.35, 125, 252)),
            "affected_1_12tn_z1_96": cf(risk.VarQuery(1.12e12, 1.96, 0.35, 125, 252)),
            "mc_per_unit_5pct": mc,
            "exact_per_unit_5pct": exact,
            "closed_form_per_unit_5pct": closed,
            "mc_paths": n_paths,
            "residual_day0_by_duration": durations,
            "residual_ratio_120_vs_30": durations[120] / durations[30],
        }

    def _report_fees(self):
        guarantee = fees.FeeTerms(fees.FeeKind.VWAP_GUARANTEE, guarantee_bps=40)
        minus = fees.FeeTerms(fees.FeeKind.VWAP_MINUS, guarantee_bps=30, share_pct=0.7)
        return {
            "guarantee_40_out_100_bps": fees.compute_fee_bps(100, guarantee),
            "minus_30_share_70_out_100_bps": fees.compute_fee_bps(100, minus),
            "guarantee_met_exactly_bps": fees.compute_fee_bps(40, guarantee),
            "retained_minus_out_100_bps": fees.retained_outperformance_bps(100, minus),
        }

    def _report_audit(self):
        example1 = audit.snapshot_from_published(0.893, 70 / 187, 0.082, -0.22, 187)
        example2 = audit.snapshot_from_published(0.897, 66 / 125, 0.01, 0.02, 125)
        fee1 = audit.implied_fee(200.8e6, 184e6, 50)
        fee2 = audit.implied_fee(445e6, 435e6, 0)
        return {
            "table_example1": audit.sensitivity_table(example1),
            "table_example2": audit.sensitivity_table(example2),
            "example1_implied_fee": fee1,
            "example1_implied_fee_range": audit.implied_fee_range(
                184e6, 50, 200.8e6, (16.6e6, 16.8e6)),
            "example2_implied_fee": fee2,
            "example1_agency_multiple": fees.agency_multiple(fee1.fee_pct * fees.BPS, 30.0),
        }

    def _report_experiments(self, seed, study_paths, coin_trials):
        table = experiments.comparison_table(100, 150, trials=coin_trials, seed=seed)
        self.writer.write_csv("coin_game.csv", table)
        exact = experiments.fixed_horizon_exact(100)

        market = ScenarioConfig(sigma_annual=0.35, trading_days_per_year=250, horizon_days=125,
                                master_seed=seed)
        limits = strategies.RegulatoryLimits(max_days=125)
        params = self._study_params()
        study = experiments.benchmark_beat_study(params, market, study_paths, limits,
                                                 self.workers)
        self.writer.write_csv("outperformance_histogram.csv",
                              experiments.outperformance_histogram(study))

        path = generate_path(market, 0)
        blotter = strategies.run_strategy(path, params, limits)
        self.writer.write_csv("adaptive_series.csv", simulation_series(path, blotter))

        flat = market.with_changes(sigma_annual=0.0, volume_sigma=0.0)
        twap = strategies.StrategyParams(strategies.StrategyKind.TWAP, params.target_value)
        flat_path = generate_path(flat, 0)
        flat_stats = purchase_stats(
            strategies.run_twap(flat_path, twap, limits), float(flat_path.vwaps.mean()))

        tie = experiments.coin_game_exact(experiments.CoinGameSpec(100, 100)).tie_probability
        return {
            "coin_fixed_horizon_exact": str(exact),
            "coin_fixed_horizon": float(exact),
            "coin_fixed_horizon_tie": tie,
            "coin_table": table.to_dict("records"),
            "coin_mc_trials": coin_trials,
            "study_paths": study_paths,
            "study_win_probability": study.win_probability,
            "study_underperformance_rate": study.underperformance_rate,
            "study_mean_outperformance": study.outperformance_distribution["mean"],
            "twap_zero_vol_outperformance": flat_stats.outperformance,
        }

    def _report_nav(self):
        rows = valuation.hypo_worked_example()
        self.writer.write_csv("nav_table.csv", pd.DataFrame(rows))
        state = valuation.TrustState(100e6, 10e6, 7.0)
        at_nav = valuation.buyback_outcome(state, 10e6, valuation.nav_per_share(state))
        return {
            "discount_at_7": valuation.discount(state),
            "rows": rows,
            "at_nav_new_nav_per_share": at_nav.new_nav_per_share,
        }


def build_parser():
    """Argument parser for every subcommand."""
    parser = argparse.ArgumentParser(
        prog="buyback-lab",
        description="Deterministic buy-back execution simulation and disclosure forensics.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file")
    common.add_argument("--seed", type=int, help="master seed (overrides the scenario)")
    common.add_argument("--paths", type=int, help="Monte Carlo path or trial count")
    common.add_argument("--out", help="output directory (default: $BUYBACK_LAB_OUT or config.json)")
    common.add_argument("--format", choices=("json", "text"), default="json",
                        help="format of structured results")
    common.add_argument("--workers", type=int, help="Monte Carlo worker threads")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="run one strategy on one path")
    simulate.add_argument("--path-index", type=int, default=0,
                          help="index of the simulated path in the seed family")

    risk_cmd = sub.add_parser("risk", parents=[common], help="closed-form and Monte Carlo VaR")
    risk_cmd.add_argument("--value", type=float, help="programme value")

    audit_cmd = sub.add_parser("audit", parents=[common], help="forensics on a disclosure tape")
    audit_cmd.add_argument("--tape", help="disclosure tape CSV")
    audit_cmd.add_argument("--allowed-days", type=int, help="trading days allowed for the programme")
    audit_cmd.add_argument("--total-returned", type=float, help="reported total returned to shareholders")
    audit_cmd.add_argument("--stamp-bps", type=float, help="stamp duty in basis points")

    experiment = sub.add_parser("experiment", parents=[common],
                                help="optional-stopping and benchmark-beat experiments")
    experiment.add_argument("experiment", nargs="?", choices=EXPERIMENTS, default="coin")
    experiment.add_argument("--n-min", type=int, default=100)
    experiment.add_argument("--n-max", type=int, default=150)

    nav = sub.add_parser("nav", parents=[common], help="trust NAV buy-back table")
    nav.add_argument("--asset-value", type=float, default=100e6)
    nav.add_argument("--shares-out", type=float, default=10e6)
    nav.add_argument("--spend", type=float, default=10e6)
    nav.add_argument("--price", type=float, action="append",
                     help="execution price (repeatable; default 7 and 11)")
    nav.add_argument("--max-premium", type=float, default=0.0,
                     help="premium to NAV allowed by a valuation gate")

    sub.add_parser("report", parents=[common],
                   help="recompute every published figure (--paths scales the simulations)")
    return parser


def main(argv=None, base_dir=None):
    """
    CLI entry point.

    Returns:
        int: process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    configure(level="DEBUG" if args.verbose else "INFO")

    try:
        CliController(args, base_dir=base_dir).run()
    except BuybackLabError as e:
        exception(e, f"{args.command} failed")
        return e.exit_code
    except OSError as e:
        exception(e, f"{args.command} failed")
        return EXIT_USAGE
    return EXIT_OK
