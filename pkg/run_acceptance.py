#!/usr/bin/env python3
"""
Script to run the numerical acceptance checks for the tomography toolkit.
Every check drives the command-line driver and reads back the artifacts it
writes; the script exits non-zero if any check fails.

    python run_acceptance.py                 # every check
    python run_acceptance.py --only 4 5 6    # a subset
"""

import argparse
import logging
import os
import sys
import time
from typing import Callable, Dict, List, Tuple

import numpy as np

# Add the current directory to Python path to import our modules
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import tomography_app
from artifact_repository import ArtifactRepository
from models import ExperimentConfig

# Configure logging; library loggers stay at WARNING while the checks run
logging.basicConfig(level=logging.WARNING, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)
logger.setLevel(logging.INFO)

CheckResult = Tuple[bool, str]

FIGURE_FLAGS = ['--channel', 'phase-damping', '--channel-param', '0.5', '--state', 'maximally-mixed',
                '--epsilon2', '4/9', '--trials', '2500', '--seed', '20240601']
FIG1_REPETITIONS = 50
FIG2_TARGETS = {
    400: {'M_12': (0.00, 0.15), 'M_11': (0.47, 0.15), 'M_33': (0.90, 0.14)},
    3000: {'M_12': (0.00, 0.07), 'M_11': (0.48, 0.07), 'M_33': (0.92, 0.07)},
}
MEAN_TOLERANCE = 0.03
TOTAL_TEMPORAL_TARGET = 22500
RANDOM_RUNS = 100


def run_verb(verb: str, output_dir: str, workers: int, *flags: str) -> int:
    """Run one CLI verb into output_dir and return its exit code"""
    return tomography_app.main([verb, *flags, '--output-dir', output_dir, '--workers', str(workers)])


def require_verb(verb: str, output_dir: str, workers: int, *flags: str) -> None:
    code = run_verb(verb, output_dir, workers, *flags)
    if code != tomography_app.EXIT_OK:
        raise RuntimeError(f"{verb} {' '.join(flags)} exited with {code}")


def read_table(output_dir: str, name: str) -> List[Dict[str, str]]:
    """Rows of a CSV artifact keyed by its header"""
    repository = ArtifactRepository(output_dir, ExperimentConfig(output_dir=output_dir))
    _, header, rows = repository.read_csv(name)
    return [dict(zip(header, row)) for row in rows]


def read_metrics(output_dir: str, name: str) -> Dict[str, str]:
    return {row['metric']: row['value'] for row in read_table(output_dir, name)}


# Checks

def check_fig1(output_dir: str, workers: int) -> CheckResult:
    require_verb('estimate', output_dir, workers, *FIGURE_FLAGS, '--repetitions', str(FIG1_REPETITIONS))
    repository = ArtifactRepository(output_dir, ExperimentConfig(output_dir=output_dir))
    theory = np.array(repository.read_json('run_record.json')['m_theory'], dtype=float).reshape(-1)
    _, header, rows = repository.read_csv('m_repetitions.csv')
    estimates = np.array([[float(value) for value in row[2:]] for row in rows])
    counts = np.sum(np.abs(estimates - theory) < 0.1, axis=1)
    median = float(np.median(counts))
    require_verb('fig1', output_dir, workers, *FIGURE_FLAGS)
    return median >= 8, f"median entries within 0.1: {median} of {len(header) - 2} over {len(rows)} repetitions"


def check_fig2(output_dir: str, workers: int) -> CheckResult:
    trials_list = ','.join(str(n) for n in FIG2_TARGETS)
    require_verb('fig2', output_dir, workers, *FIGURE_FLAGS, '--repetitions', '1000', '--trials-list', trials_list)
    summary = {(int(row['N']), row['entry']): row for row in read_table(output_dir, 'fig2_summary.csv')}
    failures = []
    for trials, targets in FIG2_TARGETS.items():
        for label, (mean, std) in targets.items():
            row = summary[(trials, label)]
            got_mean, got_std, model_std = float(row['mean']), float(row['std']), float(row['model_std'])
            if abs(got_mean - mean) > MEAN_TOLERANCE:
                failures.append(f"N={trials} {label} mean {got_mean:.3f} vs {mean:.2f}")
            if abs(got_std - std) > MEAN_TOLERANCE:
                failures.append(f"N={trials} {label} std {got_std:.3f} vs {std:.2f} (readout model {model_std:.3f})")
    ratios = [float(summary[(400, label)]['std']) / float(summary[(3000, label)]['std'])
              for label in FIG2_TARGETS[400]]
    expected = np.sqrt(3000 / 400)
    if any(abs(r - expected) > 0.4 for r in ratios):
        failures.append(f"std ratios {np.round(ratios, 2).tolist()} vs {expected:.2f}")
    detail = f"means and stds within ±{MEAN_TOLERANCE}, std ratios {np.round(ratios, 2).tolist()}"
    return not failures, "; ".join(failures) or detail


def check_fig3(output_dir: str, workers: int) -> CheckResult:
    require_verb('fig3', output_dir, workers, *FIGURE_FLAGS)
    curves: Dict[float, List[Tuple[int, float]]] = {}
    for row in read_table(output_dir, 'fig3.csv'):
        curves.setdefault(float(row['epsilon2']), []).append((int(row['N']), float(row['delta_m_spectral'])))
    plateaus = {float(row['epsilon2']): float(row['delta_m_spectral'])
                for row in read_table(output_dir, 'fig3_plateau.csv')}
    weak, strong = min(curves), max(curves)
    weak_first, strong_first = min(curves[weak])[1], min(curves[strong])[1]
    faster = strong_first < weak_first
    higher = plateaus[strong] > plateaus[weak]
    return faster and higher, (f"early ΔM {strong_first:.3f} < {weak_first:.3f}: {faster}; "
                               f"plateau {plateaus[strong]:.3f} > {plateaus[weak]:.3f}: {higher}")


def check_systematic_law(output_dir: str, workers: int) -> CheckResult:
    require_verb('pointer-laws', output_dir, workers, '--runs', str(RANDOM_RUNS), '--seed', '4')
    summary = read_metrics(output_dir, 'pointer_laws_summary.csv')
    slope, worst_f = float(summary['two_pointer_exponent']), float(summary['max_abs_f'])
    passed = abs(slope - 6.0) <= 0.5 and worst_f <= 1.0 / 12.0 + 1e-6
    return passed, f"median residual exponent {slope:.2f}, max |f| {worst_f:.4f} (bound {1 / 12:.4f})"


def check_budget_formulas(output_dir: str, workers: int) -> CheckResult:
    require_verb('budget', output_dir, workers, '--deltas', '0.1,0.01', '--f-abs', '1/12')
    rows = {float(row['delta']): row for row in read_table(output_dir, 'budget.csv')}
    trials, bound = int(rows[0.1]['trials']), int(rows[0.1]['bound_trials'])
    epsilon = float(rows[0.01]['optimal_epsilon'])
    passed = trials == 278 and bound == 278 and abs(epsilon - np.sqrt(0.12)) < 1e-6
    return passed, f"required_trials={trials}, bound={bound}, optimal ε={epsilon:.6f}"


def check_round_trip(output_dir: str, workers: int) -> CheckResult:
    runs = [('2', k) for k in range(RANDOM_RUNS)] + [('3', RANDOM_RUNS + k) for k in range(5)]
    worst_action, worst_defect = 0.0, 0.0
    for dimension, seed in runs:
        require_verb('estimate', output_dir, workers, '--mode', 'exact', '--channel', 'random', '--state', 'random',
                     '--dimension', dimension, '--channel-seed', str(seed))
        metrics = read_metrics(output_dir, 'diagnostics.csv')
        worst_action = max(worst_action, float(metrics['action_error']))
        worst_defect = max(worst_defect, float(metrics['completeness_defect']))
    passed = worst_action < 1e-8 and worst_defect <= 1e-8
    return passed, (f"worst action error {worst_action:.2e}, worst completeness defect {worst_defect:.2e} "
                    f"over {len(runs)} runs")


def check_invertibility_biconditional(output_dir: str, workers: int) -> CheckResult:
    agreements = 0
    for k in range(200):
        dimension = '2' if k % 4 < 2 else '3'
        singular = k % 2 == 1
        code = run_verb('estimate', output_dir, workers, '--mode', 'exact', '--channel', 'identity',
                        '--dimension', dimension, '--state', 'random-singular' if singular else 'random',
                        '--channel-seed', str(k))
        expected = 3 if singular else tomography_app.EXIT_OK
        agreements += int(code == expected)
    return agreements == 200, f"{agreements}/200 runs exit 3 exactly when the state is singular"


def check_single_pointer(output_dir: str, workers: int) -> CheckResult:
    require_verb('pointer-laws', output_dir, workers, '--runs', '50', '--seed', '8')
    slope = float(read_metrics(output_dir, 'pointer_laws_summary.csv')['single_pointer_exponent'])
    return abs(slope - 4.0) <= 0.5, f"median error exponent {slope:.2f} over 50 runs"


def check_gaussian(output_dir: str, workers: int) -> CheckResult:
    worst = 0.0
    for k in range(RANDOM_RUNS):
        flags = ['--channel', 'random', '--channel-seed', str(k), '--modes', str(1 + k % 3),
                 '--trials-list', '100,400', '--repetitions', '2']
        if k == 0:
            flags += ['--beta', '60']
        elif k % 2:
            flags += ['--beta', f"{0.5 + 0.25 * (k % 7):.2f}"]
        else:
            flags += ['--beta', f"{1.0 + 0.5 * (k % 5):.2f}", '--squeezing', f"{0.1 + 0.2 * (k % 5):.2f}"]
        require_verb('gaussian-demo', output_dir, workers, *flags)
        worst = max(worst, float(read_metrics(output_dir, 'gaussian_summary.csv')['exact_error']))
    require_verb('gaussian-demo', output_dir, workers, '--modes', '2', '--squeezing', '0.5')
    slope = float(read_metrics(output_dir, 'gaussian_summary.csv')['noisy_slope'])
    passed = worst < 1e-10 and abs(slope + 0.5) <= 0.1
    return passed, f"worst exact error {worst:.2e}, noisy slope {slope:.3f}"


def check_budget_comparison(output_dir: str, workers: int) -> CheckResult:
    require_verb('compare-standard', output_dir, workers, *FIGURE_FLAGS)
    rows = read_table(output_dir, 'compare_standard.csv')
    exponents = {row['method']: float(row['exponent']) for row in read_table(output_dir, 'compare_scaling.csv')}
    temporal = next((float(row['total']) for row in rows if row['method'] == 'temporal-search'), float('nan'))
    standard = next(float(row['total']) for row in rows
                    if row['method'] == 'standard' and abs(float(row['delta']) - 0.1) < 1e-9)
    passed = (
        TOTAL_TEMPORAL_TARGET / 2 <= temporal <= TOTAL_TEMPORAL_TARGET * 2
        and 500 <= standard <= 2000
        and abs(exponents['temporal'] + 4.0) <= 0.5
        and abs(exponents['standard'] + 2.0) <= 0.5
    )
    return passed, (f"temporal {temporal:.0f}, standard {standard:.0f}, exponents "
                    f"{exponents['temporal']:.2f} / {exponents['standard']:.2f}")


CHECKS: Dict[int, Tuple[str, Callable[[str, int], CheckResult]]] = {
    1: ("Running estimates at N=2500", check_fig1),
    2: ("Histogram statistics over 1000 repetitions", check_fig2),
    3: ("Coupling-strength orderings", check_fig3),
    4: ("Systematic-error law", check_systematic_law),
    5: ("Budget formulas", check_budget_formulas),
    6: ("Exact round trip", check_round_trip),
    7: ("Invertibility iff nonsingular state", check_invertibility_biconditional),
    8: ("Single-pointer equivalence", check_single_pointer),
    9: ("Gaussian recovery", check_gaussian),
    10: ("Budget comparison with standard tomography", check_budget_comparison),
}


def run_checks(selected: List[int], output_dir: str, workers: int) -> bool:
    """Run the selected checks and log a summary"""
    logger.info(f"🚀 Running {len(selected)} acceptance check(s)...")
    passed_count, failed, errors = 0, [], []
    for number in selected:
        title, check = CHECKS[number]
        started = time.perf_counter()
        try:
            logger.info(f"🧪 [{number}] {title}...")
            passed, detail = check(os.path.join(output_dir, f"check_{number:02d}"), workers)
            elapsed = time.perf_counter() - started
            if passed:
                logger.info(f"✅ [{number}] {detail} ({elapsed:.1f}s)")
                passed_count += 1
            else:
                logger.error(f"❌ [{number}] {detail} ({elapsed:.1f}s)")
                failed.append(number)
        except Exception as e:
            logger.error(f"💥 [{number}] {title} raised {type(e).__name__}: {e}")
            errors.append(number)

    logger.info("\n🎉 Acceptance run complete!")
    logger.info("=" * 50)
    logger.info(f"📊 Checks run: {len(selected)}")
    logger.info(f"📊 Passed: {passed_count}")
    logger.info(f"📊 Failed: {failed or 'none'}")
    logger.info(f"📊 Errors: {errors or 'none'}")
    return not failed and not errors


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Run the numerical acceptance checks")
    parser.add_argument('--only', type=int, nargs='+', choices=sorted(CHECKS), help="Check numbers to run")
    parser.add_argument('--output-dir', default=os.path.join('results', 'acceptance'))
    parser.add_argument('--workers', type=int, default=1)
    args = parser.parse_args()

    print("🔬 Temporal-correlation tomography acceptance checks")
    print("=" * 50)
    success = run_checks(args.only or sorted(CHECKS), args.output_dir, args.workers)
    if success:
        print("\n🎉 All checks passed.")
    else:
        print("\n💥 Some checks failed. Check the logs above for details.")
        sys.exit(1)
