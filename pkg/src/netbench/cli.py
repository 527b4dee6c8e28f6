"""
Command-line interface: run benchmarks, sweep chain lengths, plan sampling.
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional, Sequence

from .channels import depolarizing_to_average
from .config import ExperimentConfig, parse_m_list
from .dataset import FlipMode, ShotModel, write_json, write_table_csv
from .errors import ConfigError, NetbenchError
from .estimate import (
    bootstrap_ci,
    fit_decay,
    fit_log_linear,
    statistics_report,
    symmetric_link_fidelity,
)
from .network import predicted_path_fidelity
from .presets import ALIASES, DESCRIPTIONS, load_preset, preset_names
from .protocol import run_protocol_path

logger = logging.getLogger(__name__)

FIT_JSON = "fit.json"
SUMMARY_TXT = "summary.txt"
SWEEP_CSV = "sweep.csv"
PLAN_CSV = "plan.csv"


def load_experiment(
    config_path: Optional[str] = None,
    preset: Optional[str] = None,
    **overrides: Any,
) -> ExperimentConfig:
    """Config from a file or a preset, with command-line overrides applied."""
    if config_path and preset:
        raise ConfigError("give either a config file or a preset, not both")
    if config_path:
        config = ExperimentConfig.load(config_path)
    elif preset:
        config = load_preset(preset)
    else:
        raise ConfigError("no experiment given: use --config or --preset")
    return config.with_overrides(**overrides)


def run_experiment(config: ExperimentConfig, out_dir: str) -> Dict[str, Any]:
    """
    Run, fit and write one experiment.

    Writes decay.csv, decay.json, fit.json and summary.txt into ``out_dir``.

    Returns:
        The contents of fit.json.
    """
    network, path = config.build_network()
    protocol = config.protocol
    config_hash = config.config_hash()
    logger.info(f"Running {config.name!r} on path {'-'.join(path)} (config {config_hash})")

    dataset = run_protocol_path(
        network,
        path,
        protocol.m_values,
        protocol.sequences,
        protocol.shots,
        shot_model=ShotModel(protocol.shot_model),
        master_seed=protocol.master_seed,
        flip_mode=FlipMode(protocol.flip_mode),
        jobs=protocol.jobs,
        config_hash=config_hash,
    )
    dataset.save(out_dir)

    fit = fit_decay(dataset, weighted=protocol.weighted)
    d = network.node(path[0]).dim
    report: Dict[str, Any] = {
        "name": config.name,
        "config_hash": config_hash,
        "master_seed": protocol.master_seed,
        "path": path,
        "fit": fit.to_dict(),
        "average_fidelity": fit.average_fidelity(d),
        "predicted_f": predicted_path_fidelity(network, path),
    }
    if len(path) == 2:
        f_link, F_link = symmetric_link_fidelity(fit.f, d)
        report["link_f"] = f_link
        report["link_average_fidelity"] = F_link
    if protocol.bootstrap:
        boot = bootstrap_ci(
            dataset, fit, resamples=protocol.bootstrap, seed=protocol.master_seed,
            jobs=protocol.jobs,
        )
        report["bootstrap"] = boot.to_dict()

    write_json(os.path.join(out_dir, FIT_JSON), report)
    summary = format_summary(report)
    with open(os.path.join(out_dir, SUMMARY_TXT), "w", encoding="utf-8") as f:
        f.write(summary + "\n")
    print(summary)
    return report


def format_summary(report: Dict[str, Any]) -> str:
    fit = report["fit"]
    lines = [
        f"experiment      {report['name']}  (config {report['config_hash']}, seed {report['master_seed']})",
        f"path            {' -> '.join(report['path'])}",
        f"f               {fit['f']:.6f}  [{fit['ci_f'][0]:.6f}, {fit['ci_f'][1]:.6f}] ({fit['ci_method']})",
        f"A               {fit['A']:.6f}  [{fit['ci_A'][0]:.6f}, {fit['ci_A'][1]:.6f}]",
        f"F_avg           {report['average_fidelity']:.6f}",
        f"predicted f     {report['predicted_f']:.6f}",
    ]
    if "link_f" in report:
        lines.append(
            f"per-link f      {report['link_f']:.6f}  (F_avg {report['link_average_fidelity']:.6f})"
        )
    if "bootstrap" in report:
        boot = report["bootstrap"]
        lines.append(f"f bootstrap-t   [{boot['ci_f'][0]:.6f}, {boot['ci_f'][1]:.6f}]")
    return "\n".join(lines)


def cmd_run(
    config_path: Optional[str] = None,
    preset: Optional[str] = None,
    **overrides: Any,
) -> int:
    """Run one experiment; returns the exit code."""
    config = load_experiment(config_path, preset, **overrides)
    run_experiment(config, config.out_dir)
    return 0


def cmd_multinode_sweep(
    config_path: Optional[str] = None,
    k_min: int = 2,
    k_max: Optional[int] = None,
    preset: Optional[str] = None,
    **overrides: Any,
) -> int:
    """Run a chain config for every length k_min..k_max; returns the exit code."""
    config = load_experiment(config_path, preset, **overrides)
    if not config.is_chain:
        raise ConfigError("a sweep needs a homogeneous 'chain' network config")
    if k_max is None:
        k_max = int(config.network["chain"].get("length", 2))
    if not 2 <= k_min <= k_max:
        raise ConfigError(f"invalid chain length range {k_min}..{k_max}")

    rows: List[Dict[str, Any]] = []
    for k in range(k_min, k_max + 1):
        sub_dir = os.path.join(config.out_dir, f"K{k}")
        report = run_experiment(config.with_chain_length(k), sub_dir)
        fit = report["fit"]
        rows.append(
            {
                "K": k,
                "f": fit["f"],
                "ci_f_low": fit["ci_f"][0],
                "ci_f_high": fit["ci_f"][1],
                "A": fit["A"],
                "predicted_f": report["predicted_f"],
                "config_hash": report["config_hash"],
            }
        )

    os.makedirs(config.out_dir, exist_ok=True)
    write_table_csv(
        os.path.join(config.out_dir, SWEEP_CSV),
        rows,
        ["K", "f", "ci_f_low", "ci_f_high", "A", "predicted_f", "config_hash"],
    )
    lines = [f"{'K':>3}  {'f':>10}  {'95% CI':>23}"]
    for row in rows:
        lines.append(
            f"{row['K']:>3}  {row['f']:>10.6f}  [{row['ci_f_low']:.6f}, {row['ci_f_high']:.6f}]"
        )
    if len(rows) >= 2:
        slope, intercept, r2 = fit_log_linear([r["K"] for r in rows], [r["f"] for r in rows])
        lines.append(f"log f vs K: slope {slope:.6f}, intercept {intercept:.6f}, R^2 {r2:.6f}")
        write_json(
            os.path.join(config.out_dir, "sweep.json"),
            {"slope": slope, "intercept": intercept, "r_squared": r2, "k_min": k_min, "k_max": k_max},
        )
    summary = "\n".join(lines)
    with open(os.path.join(config.out_dir, SUMMARY_TXT), "w", encoding="utf-8") as f:
        f.write(summary + "\n")
    print(summary)
    return 0


def cmd_plan(
    f_guess: float,
    A_guess: float = 0.5,
    out_dir: str = "results",
    m_max: Optional[int] = None,
) -> int:
    """Print the sampling plan for a guessed decay; returns the exit code."""
    if m_max is not None and m_max < 1:
        raise ConfigError(f"--m-max must be at least 1, got {m_max}")
    grid = range(1, m_max + 1) if m_max is not None else None
    report = statistics_report(f_guess, A_guess, m_grid=grid)
    os.makedirs(out_dir, exist_ok=True)
    write_table_csv(
        os.path.join(out_dir, PLAN_CSV),
        report.rows(),
        ["m", "fisher_per_sample", "fisher_per_cost"],
    )
    print(f"optimal bounce count  {report.m_star_continuous:.4f} (best grid value m = {report.m_star})")
    print(f"variance floor        {report.crb_variance_lower_bound:.6g} per transmission")
    print(f"F_avg at guess        {depolarizing_to_average(f_guess, 2):.6f}")
    print(f"{'m':>5}  {'I(f)':>12}  {'I(f)/m':>12}")
    for row in report.rows():
        print(f"{row['m']:>5}  {row['fisher_per_sample']:>12.6g}  {row['fisher_per_cost']:>12.6g}")
    return 0


def cmd_presets() -> int:
    for name in preset_names():
        print(f"{name:<16} {DESCRIPTIONS.get(name, '')}")
    for alias, name in sorted(ALIASES.items()):
        print(f"{alias:<16} same as {name}")
    return 0


def _add_experiment_arguments(p: argparse.ArgumentParser):
    p.add_argument("--config", help="experiment config (JSON)")
    p.add_argument("--preset", choices=preset_names(include_aliases=True), help="built-in experiment")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--m-list", help="bounce counts: 1:20, 1:20:2, 1,2,4 or geom:1:256:9")
    p.add_argument("--sequences", type=int, help="random sequences per bounce count")
    p.add_argument("--shots", type=int, help="measurements per sequence")
    p.add_argument("--shot-model", choices=[m.value for m in ShotModel])
    p.add_argument("--flip-mode", choices=[m.value for m in FlipMode])
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--bootstrap", type=int, help="bootstrap resamples (0 disables)")
    p.add_argument("--out-dir", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="netbench",
        description="Benchmark the links of a simulated quantum network.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    p.add_argument("-v", "--verbose", action="store_true", help="same as --log-level DEBUG")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one benchmarking experiment")
    _add_experiment_arguments(run)

    sweep = sub.add_parser("sweep", help="benchmark a chain for a range of lengths")
    _add_experiment_arguments(sweep)
    sweep.add_argument("--k-min", type=int, default=2)
    sweep.add_argument("--k-max", type=int, help="defaults to the configured chain length")

    plan = sub.add_parser("plan", help="Fisher-information sampling plan")
    plan.add_argument("--f", type=float, required=True, dest="f_guess", help="guessed decay parameter")
    plan.add_argument("--A", type=float, default=0.5, dest="A_guess", help="guessed amplitude")
    plan.add_argument("--m-max", type=int, help="largest bounce count of the curve")
    plan.add_argument("--out-dir", default="results")

    sub.add_parser("presets", help="list built-in experiments")
    return p


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "master_seed": args.seed,
        "m_values": parse_m_list(args.m_list) if args.m_list else None,
        "sequences": args.sequences,
        "shots": args.shots,
        "shot_model": args.shot_model,
        "flip_mode": args.flip_mode,
        "jobs": args.jobs,
        "bootstrap": args.bootstrap,
        "out_dir": args.out_dir,
    }


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else getattr(logging, args.log_level)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "run":
            return cmd_run(args.config, args.preset, **_overrides(args))
        if args.command == "sweep":
            return cmd_multinode_sweep(
                args.config, args.k_min, args.k_max, preset=args.preset, **_overrides(args)
            )
        if args.command == "plan":
            return cmd_plan(args.f_guess, args.A_guess, args.out_dir, args.m_max)
        return cmd_presets()
    except NetbenchError as e:
        print(f"netbench: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
