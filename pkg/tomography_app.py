#!/usr/bin/env python3
"""
Command-line driver for temporal-correlation channel estimation.

    python tomography_app.py estimate --config run.env --trials 2500
    python tomography_app.py fig2 --trials-list 400,3000 --workers 4

Configuration comes from an optional key=value file; command-line flags
override it. Exit codes: 0 success, 2 configuration error, 3 singular state,
4 reconstruction failure, 5 trial search exhausted, 1 anything else.
"""
import argparse
import logging
import sys
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence

from dotenv import dotenv_values
from pydantic import ValidationError

import experiments
from exceptions import ConfigError, TomographyError
from models import ExperimentConfig
from tomography_config import __version__, tomography_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2

# CLI flag name -> ExperimentConfig field
CONFIG_FLAGS = {
    'channel': 'channel', 'channel_param': 'channel_param', 'channel_axis': 'channel_axis',
    'channel_seed': 'channel_seed', 'state': 'state', 'beta': 'beta', 'omega': 'omega',
    'state_matrix': 'state_matrix', 'dimension': 'dimension', 'basis': 'basis', 'epsilon2': 'epsilon2',
    'trials': 'trials', 'mean_trials': 'mean_trials', 'repetitions': 'repetitions', 'seed': 'seed',
    'mode': 'mode', 'correct_systematic': 'correct_systematic', 'delta': 'delta',
    'output_dir': 'output_dir', 'workers': 'workers', 'modes': 'modes', 'squeezing': 'squeezing',
}


def _default_of(field: str) -> Any:
    info = ExperimentConfig.model_fields[field]
    if info.default_factory is not None:
        return info.default_factory()
    default = info.default
    return getattr(default, 'value', default)


def _help(field: str) -> str:
    info = ExperimentConfig.model_fields[field]
    return f"{info.description} (default: {_default_of(field)})"


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_float_list(text: str) -> List[float]:
    try:
        return [float(Fraction(item.strip())) for item in text.split(',') if item.strip()]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers or fractions, got {text!r}")


def parse_fraction(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a number or fraction, got {text!r}")


def load_experiment_config(path: Optional[str], overrides: Dict[str, Any]) -> ExperimentConfig:
    """Merge a key=value file with command-line overrides and validate"""
    values: Dict[str, Any] = {}
    if path:
        raw = dotenv_values(path)
        if not raw:
            logger.warning(f"[CLI] Config file {path} is empty or missing")
        values.update({key.strip().lower().replace('-', '_'): value for key, value in raw.items() if value is not None})
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="key=value configuration file")
    common.add_argument('--log-level', default=tomography_config.log_level, help="Logging level")
    common.add_argument('--channel', help=_help('channel'))
    common.add_argument('--channel-param', help=_help('channel_param'))
    common.add_argument('--channel-axis', help=_help('channel_axis'))
    common.add_argument('--channel-seed', type=int, help=_help('channel_seed'))
    common.add_argument('--state', help=_help('state'))
    common.add_argument('--beta', type=float, help=_help('beta'))
    common.add_argument('--omega', type=float, help=_help('omega'))
    common.add_argument('--state-matrix', help=_help('state_matrix'))
    common.add_argument('--dimension', type=int, help=_help('dimension'))
    common.add_argument('--basis', help=_help('basis'))
    common.add_argument('--epsilon2', help=_help('epsilon2'))
    common.add_argument('--trials', type=int, help=_help('trials'))
    common.add_argument('--mean-trials', type=int, help=_help('mean_trials'))
    common.add_argument('--repetitions', type=int, help=_help('repetitions'))
    common.add_argument('--seed', type=int, help=_help('seed'))
    common.add_argument('--mode', help=_help('mode'))
    common.add_argument('--correct-systematic', action='store_const', const=True, help=_help('correct_systematic'))
    common.add_argument('--delta', type=float, help=_help('delta'))
    common.add_argument('--output-dir', help=_help('output_dir'))
    common.add_argument('--workers', type=int, help=_help('workers'))

    parser = argparse.ArgumentParser(description="Channel estimation from temporal correlations")
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    verbs = parser.add_subparsers(dest='verb', required=True)

    verbs.add_parser('estimate', parents=[common], help="Reconstruct one channel")

    fig1 = verbs.add_parser('fig1', parents=[common], help="Running M estimates against N")
    fig1.add_argument('--checkpoints', type=parse_int_list, default=list(experiments.CHECKPOINTS))

    fig2 = verbs.add_parser('fig2', parents=[common], help="Histograms of M entries over repetitions")
    fig2.add_argument('--trials-list', type=parse_int_list, default=list(experiments.FIG2_TRIALS))

    fig3 = verbs.add_parser('fig3', parents=[common], help="ΔM against N for several couplings")
    fig3.add_argument('--couplings', type=parse_float_list, default=list(experiments.FIG3_COUPLINGS))
    fig3.add_argument('--seeds', type=int, default=experiments.FIG3_SEEDS)
    fig3.add_argument('--checkpoints', type=parse_int_list, default=list(experiments.CHECKPOINTS))

    compare = verbs.add_parser('compare-standard', parents=[common],
                               help="Measurement totals against prepare-and-measure tomography")
    compare.add_argument('--deltas', type=parse_float_list, default=list(experiments.COMPARE_DELTAS))

    gaussian = verbs.add_parser('gaussian-demo', parents=[common], help="Gaussian channel recovery")
    gaussian.add_argument('--modes', type=int, help=_help('modes'))
    gaussian.add_argument('--squeezing', type=float, help=_help('squeezing'))
    gaussian.add_argument('--trials-list', type=parse_int_list, default=list(experiments.GAUSSIAN_TRIALS))

    budget = verbs.add_parser('budget', parents=[common], help="Trial counts and couplings for target errors")
    budget.add_argument('--deltas', type=parse_float_list, default=list(experiments.BUDGET_DELTAS))
    budget.add_argument('--f-abs', type=parse_fraction,
                        help="|f| to budget for (default: worst correlation of the run)")

    laws = verbs.add_parser('pointer-laws', parents=[common], help="Pointer expansion exponents on random runs")
    laws.add_argument('--runs', type=int, default=experiments.POINTER_LAW_RUNS)
    return parser


# Handlers

def handle_estimate(config: ExperimentConfig, args: argparse.Namespace) -> None:
    logger.info("estimate command triggered.")
    record = experiments.run_estimate(config)
    print(f"ΔM = {record.delta_m_spectral:.6f} (max entry {record.delta_m_max:.6f}), "
          f"{record.entries_within_delta} entries within δ = {config.delta}")


def handle_fig1(config: ExperimentConfig, args: argparse.Namespace) -> None:
    logger.info("fig1 command triggered.")
    rows = experiments.run_fig1(config, args.checkpoints)
    print(f"Wrote {len(rows)} checkpoints to {config.output_dir}/fig1.csv")


def handle_fig2(config: ExperimentConfig, args: argparse.Namespace) -> None:
    logger.info("fig2 command triggered.")
    summary = experiments.run_fig2(config, args.trials_list)
    for trials, entries in summary.items():
        stats = ", ".join(f"{label}={mean:.3f}±{std:.3f}" for label, (mean, std) in entries.items())
        print(f"N={trials}: {stats}")


def handle_fig3(config: ExperimentConfig, args: argparse.Namespace) -> None:
    logger.info("fig3 command triggered.")
    curves = experiments.run_fig3(config, args.couplings, args.seeds, args.checkpoints)
    for epsilon2, curve in curves.items():
        print(f"ε²={epsilon2:.4f}: first ΔM={curve['delta_m_spectral'][0]:.4f}, "
              f"last ΔM={curve['delta_m_spectral'][-1]:.4f}, plateau={curve['plateau'][0]:.4f}")


def handle_compare_standard(config: ExperimentConfig, args: argparse.Namespace) -> None:
    logger.info("compare-standard command triggered.")
    result = experiments.run_compare_standard(config, args.deltas)
    print(f"temporal total {result['temporal_total']:.0f}, standard total {result['standard_total']:.0f}, "
          f"exponents {result['temporal_exponent']:.2f} / {result['standard_exponent']:.2f}")


def handle_gaussian_demo(config: ExperimentConfig, args: argparse.Namespace) -> None:
    logger.info("gaussian-demo command triggered.")
    summary = experiments.run_gaussian_demo(config, args.trials_list)
    print(f"exact error {summary['exact_error']:.2e}, noisy slope {summary['noisy_slope']:.3f}")


def handle_budget(config: ExperimentConfig, args: argparse.Namespace) -> None:
    logger.info("budget command triggered.")
    for requirement in experiments.run_budget(config, args.deltas, args.f_abs):
        print(f"δ={requirement.delta}: N={requirement.trials}, bound {requirement.bound_trials}")


def handle_pointer_laws(config: ExperimentConfig, args: argparse.Namespace) -> None:
    logger.info("pointer-laws command triggered.")
    summary = experiments.run_pointer_laws(config, args.runs)
    print(f"two-pointer exponent {summary['two_pointer_exponent']:.2f}, single-pointer exponent "
          f"{summary['single_pointer_exponent']:.2f}, max |f| {summary['max_abs_f']:.4f}")


HANDLERS: Dict[str, Callable[[ExperimentConfig, argparse.Namespace], None]] = {
    'estimate': handle_estimate,
    'fig1': handle_fig1,
    'fig2': handle_fig2,
    'fig3': handle_fig3,
    'compare-standard': handle_compare_standard,
    'gaussian-demo': handle_gaussian_demo,
    'budget': handle_budget,
    'pointer-laws': handle_pointer_laws,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format='%(asctime)s - %(levelname)s - %(message)s')

    overrides = {field: getattr(args, flag, None) for flag, field in CONFIG_FLAGS.items()}
    try:
        config = load_experiment_config(args.config, overrides)
        logger.info(f"[CLI] {args.verb} with config hash {config.config_hash()}")
        HANDLERS[args.verb](config, args)
        return EXIT_OK
    except TomographyError as e:
        logger.error(f"[CLI] {type(e).__name__}: {e}")
        return e.exit_code
    except (ValidationError, ValueError) as e:
        logger.error(f"[CLI] Invalid input: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.exception(f"[CLI] Unexpected error: {e}")
        return EXIT_UNEXPECTED


if __name__ == '__main__':
    sys.exit(main())
