#!/usr/bin/env python
"""
Tabulate the exact second moment of the likelihood ratio around the Gaussian
detection threshold.

This script:
1. Evaluates second_moment_gaussian at fractions of the threshold rho^2 for each n
2. Adds the fixed-orbit moments and the higher-orbit bound for comparison
3. Checks the Poisson comparison of cycle counts on the functional library
4. Saves the tables and a metrics file to the artifacts directory
"""
import os
import sys
import pandas as pd
from pathlib import Path
from datetime import datetime

# Add the parent directory to the Python path
parent_dir = Path(__file__).parent.parent.absolute()
sys.path.append(str(parent_dir))

from src.bounds import gaussian_rho2_threshold
from src.second_moment import (
    fixed_orbit_exponential_moment,
    fixed_orbit_factor_moment,
    higher_orbit_factor_bound,
    poisson_cycle_comparison,
    second_moment_gaussian,
)
from utils.config import get_enumeration_cap

ARTIFACT_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "artifacts")
os.makedirs(ARTIFACT_DIR, exist_ok=True)

M = 4
FRACTIONS = [0.1, 0.3, 0.5, 0.7, 0.9]


def trend_table():
    """Second moment at rho^2 = fraction * threshold(n) for every enumerable n"""
    rows = []
    for n in range(M + 2, get_enumeration_cap() + 1):
        threshold = gaussian_rho2_threshold(n, M)
        for fraction in FRACTIONS:
            rho2 = fraction * threshold
            if rho2 >= 1.0:
                print(f"Skipping n={n}, fraction={fraction}: rho^2 = {rho2:.3f} >= 1")
                continue
            rho = rho2 ** 0.5
            rows.append({
                "n": n,
                "m": M,
                "fraction": fraction,
                "rho": rho,
                "second_moment": second_moment_gaussian(n, M, rho).value,
                "fixed_orbit_factor": fixed_orbit_factor_moment(n, M, rho).value,
                "fixed_orbit_exponential": fixed_orbit_exponential_moment(n, M, rho).value,
                "higher_orbit_bound": higher_orbit_factor_bound(n, M, rho),
            })
        print(f"n={n}: threshold rho^2 = {threshold:.6f}")
    return pd.DataFrame(rows)


def comparison_table(n=6):
    """Poisson comparison over the functional library"""
    rows = []
    for L in (1, 2, 3):
        for a in (0.0, 0.05):
            for b in (0.0, 0.05):
                result = poisson_cycle_comparison(n, L, {"kind": "exp_poly", "a": a, "b": b, "m": 3})
                rows.append({"L": L, "effective_L": result.effective_L, "a": a, "b": b,
                             "lhs": result.lhs, "rhs": result.rhs, "holds": result.holds})
    result = poisson_cycle_comparison(n, 1, {"kind": "indicator_all_fixed"})
    rows.append({"L": 1, "effective_L": 1, "a": None, "b": None,
                 "lhs": result.lhs, "rhs": result.rhs, "holds": result.holds})
    return pd.DataFrame(rows)


def main():
    print(f"Starting second-moment tabulation at {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}...")

    try:
        trend = trend_table()
        comparison = comparison_table()

        trend_path = os.path.join(ARTIFACT_DIR, "second_moment_trend.csv")
        comparison_path = os.path.join(ARTIFACT_DIR, "poisson_comparison.csv")
        trend.to_csv(trend_path, index=False, lineterminator="\n")
        comparison.to_csv(comparison_path, index=False, lineterminator="\n")

        print("\nSecond moment by threshold fraction:")
        print(trend.pivot(index="fraction", columns="n", values="second_moment"))
        print("\nPoisson comparison:")
        print(comparison)

        increasing = all(
            group["second_moment"].is_monotonic_increasing for _, group in trend.groupby("n")
        )
        metrics_path = os.path.join(ARTIFACT_DIR, "second_moment_metrics.txt")
        with open(metrics_path, 'w') as f:
            f.write(f"Tabulated on: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
            f.write(f"Second moment increasing in rho for every n: {increasing}\n")
            f.write(f"Largest value below half the threshold: "
                    f"{trend.loc[trend['fraction'] <= 0.5, 'second_moment'].max():.6g}\n")
            f.write(f"Poisson comparison holds on all {len(comparison)} functionals: {bool(comparison['holds'].all())}\n")

        print(f"Tables saved to {trend_path} and {comparison_path}")
        print(f"Metrics saved to {metrics_path}")

    except Exception as e:
        print(f"Error during tabulation: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
