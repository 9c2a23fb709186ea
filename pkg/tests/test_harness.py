import unittest
import sys
import tempfile
from math import sqrt
from pathlib import Path
from unittest.mock import patch

import numpy as np

# Add the parent directory to the Python path
sys.path.append(str(Path(__file__).parent.parent))

from src.bounds import gaussian_rho2_threshold
from src.harness import (
    CSV_COLUMNS,
    build_grid,
    null_law_key,
    read_sweep_csv,
    report_frame,
    run_experiment,
    sweep_to_csv,
    wilson_interval,
    write_sweep_frame,
)
from utils.errors import ArtifactIOError, CapExceededError, DegenerateRunError
from utils.models import ERModelSpec, ExperimentConfig, ExperimentReport, GaussianModelSpec

HEADER = "model,n,m,c,rho_or_s,threshold_kind,reject_rate_h0,reject_rate_h1,ci_lo_h1,ci_hi_h1,degenerate"


def small_config(**overrides):
    data = {
        "model": {"model": "gaussian", "n": 5, "m": 2, "rho": 0.5},
        "trials": 20,
        "threshold": {"kind": "calibrated", "level": 0.1, "null_trials": 40},
        "sweep_values": [0.3, 0.9],
        "master_seed": 2024,
    }
    data.update(overrides)
    return ExperimentConfig.from_dict(data)


class TestWilsonInterval(unittest.TestCase):
    """Test cases for wilson_interval."""

    def test_symmetric_case(self):
        lo, hi = wilson_interval(5, 10)
        self.assertAlmostEqual(lo, 0.236592, places=5)
        self.assertAlmostEqual(hi, 0.763408, places=5)

    def test_extremes(self):
        lo, hi = wilson_interval(0, 10)
        self.assertEqual(lo, 0.0)
        self.assertAlmostEqual(hi, 0.277535, places=5)
        lo, hi = wilson_interval(10, 10)
        self.assertEqual(hi, 1.0)
        self.assertAlmostEqual(lo, 1.0 - 0.277535, places=5)

    def test_contains_rate(self):
        for trials in (1, 7, 200):
            for successes in range(0, trials + 1, max(1, trials // 7)):
                lo, hi = wilson_interval(successes, trials)
                self.assertLessEqual(lo, successes / trials)
                self.assertGreaterEqual(hi, successes / trials)

    def test_no_trials(self):
        with self.assertRaises(ValueError):
            wilson_interval(0, 0)


class TestBuildGrid(unittest.TestCase):
    """Test cases for build_grid."""

    def test_multiples(self):
        config = small_config(model={"model": "gaussian", "n": 7, "m": 3, "rho": 0.5}, sweep=[0.5, 2.0], sweep_values=None)
        grid = build_grid(config)
        base = gaussian_rho2_threshold(7, 3)
        self.assertAlmostEqual(grid[0]["value"], sqrt(0.5 * base), places=12)
        self.assertIsNotNone(grid[0]["spec"])
        # 2 * 0.778 puts rho^2 above 1
        self.assertIsNone(grid[1]["spec"])
        self.assertIn("rho^2", grid[1]["skip_reason"])

    def test_absolute_values(self):
        grid = build_grid(small_config(sweep_values=[0.0, 0.5]))
        base = gaussian_rho2_threshold(5, 2)
        self.assertEqual([p["value"] for p in grid], [0.0, 0.5])
        self.assertAlmostEqual(grid[1]["c"], 0.25 / base, places=12)

    def test_own_value(self):
        grid = build_grid(small_config(sweep_values=None))
        self.assertEqual(len(grid), 1)
        self.assertEqual(grid[0]["spec"].rho, 0.5)

    def test_er_skips_above_one(self):
        config = small_config(model={"model": "er", "n": 6, "m": 3, "p": 0.5, "s": 0.5}, sweep_values=[0.5, 1.0, 1.2])
        grid = build_grid(config)
        self.assertEqual([p["spec"] is None for p in grid], [False, False, True])

    def test_null_law_key(self):
        self.assertEqual(
            null_law_key(GaussianModelSpec(n=5, m=2, rho=0.1)),
            null_law_key(GaussianModelSpec(n=5, m=2, rho=0.9)),
        )
        self.assertNotEqual(
            null_law_key(ERModelSpec(n=5, m=2, p=0.5, s=0.1)),
            null_law_key(ERModelSpec(n=5, m=2, p=0.5, s=0.9)),
        )


class TestRunExperiment(unittest.TestCase):
    """Test cases for run_experiment on small grids."""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.out = Path(self.temp_dir.name)

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_smoke(self):
        report = run_experiment(small_config())
        self.assertEqual(len(report.points), 2)
        for point in report.points:
            self.assertEqual(point.trials, 20)
            self.assertEqual(point.threshold_kind, "calibrated")
            self.assertLessEqual(point.ci_h1[0], point.reject_rate_h1)
            self.assertAlmostEqual(point.tv_lower_bound, abs(point.reject_rate_h1 - point.reject_rate_h0))
        # one null law, one calibrated threshold
        self.assertEqual(report.points[0].threshold, report.points[1].threshold)
        self.assertGreater(report.runtime_seconds, 0.0)

    def test_reproducible(self):
        first = run_experiment(small_config())
        second = run_experiment(small_config())
        self.assertEqual(first.canonical_json(), second.canonical_json())

    def test_seed_changes_draws(self):
        first = run_experiment(small_config())
        second = run_experiment(small_config(master_seed=2025))
        self.assertNotEqual(
            [p.mean_h1 for p in first.points],
            [p.mean_h1 for p in second.points],
        )

    def test_workers_byte_identical_csv(self):
        paths = []
        for workers in (1, 4):
            path = self.out / f"sweep_{workers}.csv"
            sweep_to_csv(run_experiment(small_config(workers=workers)), path)
            paths.append(path)
        self.assertEqual(paths[0].read_bytes(), paths[1].read_bytes())

    def test_worker_override_from_environment(self):
        baseline = run_experiment(small_config())
        with patch.dict("os.environ", {"HYPERCORR_WORKERS": "2"}):
            overridden = run_experiment(small_config())
        self.assertEqual(baseline.canonical_json(), overridden.canonical_json())

    def test_asymptotic_threshold(self):
        report = run_experiment(small_config(threshold={"kind": "asymptotic"}, sweep_values=[0.1, 0.4]))
        for point in report.points:
            self.assertEqual(point.threshold, point.asymptotic_threshold)
            # t_n = 10 rho - sqrt(10) 5^(1/4) stays negative for rho < 0.47
            self.assertTrue(point.degenerate)

    def test_er_model(self):
        config = small_config(model={"model": "er", "n": 5, "m": 2, "p": 0.5, "s": 0.5}, sweep_values=[0.2, 0.8])
        report = run_experiment(config)
        self.assertAlmostEqual(report.points[1].correlation, 0.8 * 0.5 / 0.6, places=12)
        self.assertNotEqual(report.points[0].threshold, report.points[1].threshold)

    def test_heuristic_statistic(self):
        config = small_config(statistic={"method": "heuristic", "restarts": 2}, trials=5, sweep_values=[0.9])
        report = run_experiment(config)
        self.assertEqual(len(report.points), 1)

    def test_skipped_point(self):
        report = run_experiment(small_config(sweep_values=[0.5, 1.0]))
        skipped = report.points[1]
        self.assertTrue(skipped.skipped)
        self.assertTrue(skipped.degenerate)
        self.assertIsNone(skipped.reject_rate_h1)

        path = sweep_to_csv(report, self.out / "skipped.csv")
        last = path.read_text().splitlines()[-1].split(",")
        self.assertEqual(last[6:10], ["", "", "", ""])
        self.assertEqual(last[10], "True")

    def test_all_points_infeasible(self):
        with self.assertRaises(DegenerateRunError):
            run_experiment(small_config(sweep_values=[1.0, 1.5]))

    def test_exact_cap(self):
        config = small_config(model={"model": "gaussian", "n": 10, "m": 3, "rho": 0.5})
        with self.assertRaises(CapExceededError):
            run_experiment(config)


class TestSweepCSV(unittest.TestCase):
    """Test cases for the sweep CSV contract."""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.out = Path(self.temp_dir.name)

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_empty_grid_header_only(self):
        report = ExperimentReport(config=small_config(), points=[])
        path = sweep_to_csv(report, self.out / "empty.csv")
        self.assertEqual(path.read_text(), HEADER + "\n")
        self.assertEqual(list(report_frame(report).columns), CSV_COLUMNS)

    def test_five_points_six_lines(self):
        config = small_config(threshold={"kind": "asymptotic"}, trials=3, sweep_values=[0.1, 0.3, 0.5, 0.7, 0.9])
        path = sweep_to_csv(run_experiment(config), self.out / "five.csv")
        lines = path.read_text().splitlines()
        self.assertEqual(len(lines), 6)
        self.assertEqual(lines[0], HEADER)

    def test_round_trip(self):
        path = sweep_to_csv(run_experiment(small_config(sweep_values=[0.3, 0.9, 1.0])), self.out / "a.csv")
        again = write_sweep_frame(read_sweep_csv(path), self.out / "b.csv")
        self.assertEqual(path.read_bytes(), again.read_bytes())

    def test_unwritable_path(self):
        report = ExperimentReport(config=small_config(), points=[])
        target = self.out / "missing" / "sweep.csv"
        with self.assertRaises(ArtifactIOError) as ctx:
            sweep_to_csv(report, target)
        self.assertIn(str(target), str(ctx.exception))

    def test_unreadable_path(self):
        with self.assertRaises(ArtifactIOError):
            read_sweep_csv(self.out / "nope.csv")


class TestPowerExperiment(unittest.TestCase):
    """Power and level of the exact test with a calibrated threshold (n=7, m=3)."""

    RHOS = [0.0, 0.5, 0.75, 0.95]
    TRIALS = 400
    NULL_TRIALS = 1000
    LEVEL = 0.05

    @classmethod
    def setUpClass(cls):
        config = ExperimentConfig.from_dict({
            "model": {"model": "gaussian", "n": 7, "m": 3, "rho": 0.95},
            "trials": cls.TRIALS,
            "statistic": {"method": "exact"},
            "threshold": {"kind": "calibrated", "level": cls.LEVEL, "null_trials": cls.NULL_TRIALS},
            "sweep_values": cls.RHOS,
            "master_seed": 7,
        })
        cls.report = run_experiment(config)

    def test_power_at_strong_correlation(self):
        # measured power is about 0.80; the floor is checked against the Wilson interval
        strong = self.report.points[-1]
        self.assertGreaterEqual(strong.ci_h1[1], 0.8)
        self.assertGreaterEqual(strong.reject_rate_h1, 0.7)

    def test_level_at_strong_correlation(self):
        self.assertLessEqual(abs(self.report.points[-1].reject_rate_h0 - self.LEVEL), 0.04)

    def test_level_at_every_point(self):
        # calibration error is shared by every point and adds to the sampling error
        se = sqrt(self.LEVEL * (1 - self.LEVEL) * (1 / self.TRIALS + 1 / self.NULL_TRIALS))
        for point in self.report.points:
            self.assertLessEqual(abs(point.reject_rate_h0 - self.LEVEL), 3 * se + 1e-12, msg=str(point.rho_or_s))

    def test_power_monotone(self):
        rates = np.array([p.reject_rate_h1 for p in self.report.points])
        se = np.sqrt(np.maximum(rates * (1 - rates), 0.25 / self.TRIALS) / self.TRIALS)
        for i in range(len(rates) - 1):
            self.assertGreaterEqual(rates[i + 1] + 2 * max(se[i], se[i + 1]), rates[i])

    def test_null_and_planted_statistics_separate(self):
        strong = self.report.points[-1]
        self.assertGreater(strong.mean_h1, strong.mean_h0)
        self.assertAlmostEqual(strong.correlation, 0.95)


if __name__ == "__main__":
    unittest.main()
