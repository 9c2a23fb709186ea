#!/usr/bin/env python
"""
Run a Monte Carlo power experiment and save its artifacts.

This script:
1. Loads an experiment configuration (JSON, see configs/)
2. Runs every grid point under H0 and H1 with the calibrated or asymptotic threshold
3. Writes the sweep CSV and a per-point summary table
4. Saves the full report and a plain-text metrics file to the artifacts directory
"""
import argparse
import os
import sys
import joblib
from pathlib import Path
from datetime import datetime

# Add the parent directory to the Python path
parent_dir = Path(__file__).parent.parent.absolute()
sys.path.append(str(parent_dir))

from src.harness import report_frame, run_experiment, sweep_to_csv
from utils.models import ExperimentConfig

# Create artifact directory if it doesn't exist
ARTIFACT_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "artifacts")
os.makedirs(ARTIFACT_DIR, exist_ok=True)

DEFAULT_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs", "power_gaussian_n7.json")


def load_config(path):
    """Load and validate the experiment configuration"""
    print(f"Loading experiment config from {path}...")
    config = ExperimentConfig.from_json_file(path)
    print(
        f"Model {config.model.model}: n={config.model.n}, m={config.model.m}, "
        f"{config.trials} trials per hypothesis, {config.statistic.method} statistic, "
        f"{config.threshold.kind} threshold"
    )
    return config


def summary_table(report):
    """Per-point summary with the statistic moments and the TV lower bound"""
    frame = report_frame(report)
    frame["correlation"] = [p.correlation for p in report.points]
    frame["threshold"] = [p.threshold for p in report.points]
    frame["asymptotic_threshold"] = [p.asymptotic_threshold for p in report.points]
    frame["mean_h0"] = [p.mean_h0 for p in report.points]
    frame["mean_h1"] = [p.mean_h1 for p in report.points]
    frame["tv_lower_bound"] = [p.tv_lower_bound for p in report.points]
    return frame


def save_results(report, name):
    """Save the sweep CSV, the report and the metrics summary"""
    print("Saving sweep and metrics...")

    csv_path = os.path.join(ARTIFACT_DIR, f"{name}_sweep.csv")
    sweep_to_csv(report, csv_path)

    report_path = os.path.join(ARTIFACT_DIR, f"{name}_report.joblib")
    joblib.dump(report.model_dump(mode="json"), report_path)

    live = [p for p in report.points if not p.skipped]
    metrics_path = os.path.join(ARTIFACT_DIR, f"{name}_metrics.txt")
    with open(metrics_path, 'w') as f:
        f.write(f"Experiment run on: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
        f.write(f"Master seed: {report.config.master_seed}\n")
        f.write(f"Grid points: {len(report.points)} ({len(report.points) - len(live)} skipped)\n")
        for p in live:
            f.write(
                f"rho_or_s={p.rho_or_s:.4f} c={p.c:.4f}: H0 rate {p.reject_rate_h0:.3f}, "
                f"H1 rate {p.reject_rate_h1:.3f} [{p.ci_h1[0]:.3f}, {p.ci_h1[1]:.3f}], "
                f"TV >= {p.tv_lower_bound:.3f}{' (degenerate threshold)' if p.degenerate else ''}\n"
            )
        f.write(f"Runtime: {report.runtime_seconds:.1f}s\n")

    print(f"Sweep saved to {csv_path}")
    print(f"Report saved to {report_path}")
    print(f"Metrics saved to {metrics_path}")


def get_args():
    parser = argparse.ArgumentParser(description="Run a power experiment and save its artifacts")
    parser.add_argument("--config", default=DEFAULT_CONFIG, help="experiment config JSON")
    parser.add_argument("--workers", type=int, help="override the configured worker count")
    return parser.parse_args()


def main():
    args = get_args()
    print(f"Starting power experiment at {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}...")

    try:
        config = load_config(args.config)
        if args.workers is not None:
            config = config.model_copy(update={"workers": args.workers})

        report = run_experiment(config)

        print("\nPower by grid point:")
        print(summary_table(report).to_string(index=False))

        save_results(report, Path(args.config).stem)

        print(f"Experiment completed at {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")

    except Exception as e:
        print(f"Error during experiment: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
