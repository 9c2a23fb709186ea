import unittest
import sys
import io
import json
import tempfile
from pathlib import Path
from unittest.mock import patch

# Add the parent directory to the Python path
sys.path.append(str(Path(__file__).parent.parent))

from src.cli import main, parse_kv_args
from utils.errors import EXIT_DEGENERATE, EXIT_IO, EXIT_OK, EXIT_PARAMETER, ParameterError


def run_cli(*argv):
    """Run the CLI and return (exit code, parsed stdout JSON or None)."""
    with patch("sys.stdout", new_callable=io.StringIO) as stdout:
        code = main([str(a) for a in argv])
    text = stdout.getvalue().strip()
    return code, (json.loads(text) if text else None)


class TestParseKvArgs(unittest.TestCase):
    """Test cases for parse_kv_args."""

    def test_pairs(self):
        self.assertEqual(parse_kv_args("mu=30, delta=0.5"), {"mu": "30", "delta": "0.5"})
        self.assertEqual(parse_kv_args(""), {})

    def test_malformed(self):
        with self.assertRaises(ParameterError):
            parse_kv_args("mu")
        with self.assertRaises(ParameterError):
            parse_kv_args("=3")


class TestOrbitsCommand(unittest.TestCase):
    """Test cases for the orbits subcommand."""

    def test_transposition(self):
        code, record = run_cli("orbits", "--n", 4, "--m", 2, "--perm", "(1 2)")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(record["orbit_profile"], {"1": 2, "2": 2})
        self.assertEqual(record["cycle_type"], {"1": 2, "2": 1})
        self.assertEqual(record["edges"], 6)
        self.assertEqual(record["perm"], "(1 2)")

    def test_identity_default(self):
        code, record = run_cli("orbits", "--n", 5, "--m", 3)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(record["orbit_profile"], {"1": 10})

    def test_bad_permutation(self):
        code, record = run_cli("orbits", "--n", 4, "--m", 2, "--perm", "(1 5)")
        self.assertEqual(code, EXIT_PARAMETER)
        self.assertIsNone(record)

    def test_missing_argument(self):
        with patch("sys.stderr", new_callable=io.StringIO):
            with self.assertRaises(SystemExit) as ctx:
                main(["orbits", "--m", "2"])
        self.assertEqual(ctx.exception.code, 2)


class TestBoundsCommand(unittest.TestCase):
    """Test cases for the bounds subcommand."""

    def test_chernoff(self):
        code, record = run_cli("bounds", "--name", "chernoff-upper", "--args", "mu=30,delta=0.5")
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(record["value"], 0.038932, places=6)
        self.assertEqual(record["name"], "chernoff-upper")

    def test_hanson_wright_constant_from_environment(self):
        with patch.dict("os.environ", {"HYPERCORR_HW_CONSTANT": "2.0"}):
            code, record = run_cli("bounds", "--name", "hanson-wright", "--args", "d=100,delta=0.01")
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(record["value"], 2 * 26.065, places=2)

    def test_domain_error(self):
        code, _ = run_cli("bounds", "--name", "lambert-w", "--args", "x=-1")
        self.assertEqual(code, EXIT_PARAMETER)

    def test_unknown_argument(self):
        code, _ = run_cli("bounds", "--name", "zeta", "--args", "k=3,n=10,m=3,p=0.5,s=0.5,z=1")
        self.assertEqual(code, EXIT_PARAMETER)


class TestSampleAndTestCommands(unittest.TestCase):
    """Test cases for sample followed by test on the written files."""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.out = Path(self.temp_dir.name)

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_round_trip(self):
        code, record = run_cli(
            "sample", "--model", "gaussian", "--n", 5, "--m", 2, "--rho", 0.9,
            "--hypothesis", "h1", "--seed", 3, "--out", self.out / "pair.csv",
        )
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(record["edges"], 10)
        self.assertEqual(set(record["files"]), {"a1", "a2", "planted"})

        code, outcome = run_cli("test", "--a1", record["files"]["a1"], "--a2", record["files"]["a2"])
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(outcome["method"], "exact")
        self.assertEqual(outcome["permutations_evaluated"], 120)
        self.assertEqual(sorted(outcome["argmax"]), [1, 2, 3, 4, 5])
        # threshold from the header: 9 - sqrt(10) 5^(1/4)
        self.assertAlmostEqual(outcome["threshold"], 9 - 10 ** 0.5 * 5 ** 0.25, places=10)
        self.assertEqual(outcome["reject_h0"], outcome["statistic"] >= outcome["threshold"])

    def test_er_binary_files(self):
        code, record = run_cli(
            "sample", "--model", "er", "--n", 6, "--m", 3, "--p", 0.5, "--s", 0.8,
            "--hypothesis", "h0", "--seed", 1, "--out", self.out / "er.bin",
        )
        self.assertEqual(code, EXIT_OK)
        self.assertNotIn("planted", record["files"])
        code, outcome = run_cli(
            "test", "--a1", record["files"]["a1"], "--a2", record["files"]["a2"],
            "--method", "heuristic", "--restarts", 3,
        )
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(outcome["method"], "heuristic")

    def test_missing_model_parameter(self):
        code, _ = run_cli(
            "sample", "--model", "er", "--n", 6, "--m", 3, "--p", 0.5,
            "--hypothesis", "h0", "--out", self.out / "x.csv",
        )
        self.assertEqual(code, EXIT_PARAMETER)

    def test_invalid_spec(self):
        code, _ = run_cli(
            "sample", "--model", "gaussian", "--n", 3, "--m", 4, "--rho", 0.5,
            "--hypothesis", "h0", "--out", self.out / "x.csv",
        )
        self.assertEqual(code, EXIT_PARAMETER)

    def test_missing_tensor_file(self):
        code, _ = run_cli("test", "--a1", self.out / "a.csv", "--a2", self.out / "b.csv")
        self.assertEqual(code, EXIT_IO)


class TestSecondMomentCommand(unittest.TestCase):
    """Test cases for the second-moment subcommand."""

    def test_golden(self):
        code, record = run_cli("second-moment", "--model", "gaussian", "--n", 3, "--m", 2, "--rho", 0.5)
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(record["value"], 1.444797, delta=1e-6)
        self.assertEqual(record["permutations_enumerated"], 6)

    def test_fixed_orbit_quantity(self):
        code, record = run_cli(
            "second-moment", "--model", "gaussian", "--n", 3, "--m", 2, "--rho", 0.5,
            "--quantity", "fixed-orbit-exp", "--method", "traversal",
        )
        self.assertEqual(code, EXIT_OK)
        self.assertAlmostEqual(record["value"], 1.484187, delta=1e-6)
        self.assertEqual(record["quantity"], "fixed_orbit_exponential")

    def test_quantity_needs_gaussian(self):
        code, _ = run_cli(
            "second-moment", "--model", "er", "--n", 3, "--m", 2, "--rho", 0.5, "--quantity", "fixed-orbit-factor",
        )
        self.assertEqual(code, EXIT_PARAMETER)

    def test_cap(self):
        code, _ = run_cli("second-moment", "--model", "er", "--n", 12, "--m", 2, "--rho", 0.5)
        self.assertEqual(code, EXIT_PARAMETER)


class TestSweepCommand(unittest.TestCase):
    """Test cases for the sweep subcommand."""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.out = Path(self.temp_dir.name)

    def tearDown(self):
        self.temp_dir.cleanup()

    def write_config(self, **overrides):
        data = {
            "model": {"model": "gaussian", "n": 5, "m": 2, "rho": 0.5},
            "trials": 10,
            "threshold": {"kind": "calibrated", "null_trials": 20},
            "sweep_values": [0.2, 0.8],
            "master_seed": 5,
        }
        data.update(overrides)
        path = self.out / "config.json"
        path.write_text(json.dumps(data))
        return path

    def test_sweep(self):
        csv_path = self.out / "sweep.csv"
        code, record = run_cli("sweep", "--config", self.write_config(), "--out", csv_path, "--workers", 1)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(record["points"], 2)
        self.assertEqual(record["skipped"], 0)
        self.assertEqual(len(csv_path.read_text().splitlines()), 3)

    def test_workers_from_environment(self):
        first, second = self.out / "one.csv", self.out / "two.csv"
        config = self.write_config()
        run_cli("sweep", "--config", config, "--out", first)
        with patch.dict("os.environ", {"HYPERCORR_WORKERS": "2"}):
            code, _ = run_cli("sweep", "--config", config, "--out", second)
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_all_points_infeasible(self):
        code, _ = run_cli("sweep", "--config", self.write_config(sweep_values=[1.0, 2.0]), "--out", self.out / "x.csv")
        self.assertEqual(code, EXIT_DEGENERATE)

    def test_invalid_config(self):
        code, _ = run_cli("sweep", "--config", self.write_config(trials=0), "--out", self.out / "x.csv")
        self.assertEqual(code, EXIT_PARAMETER)
        bad = self.out / "bad.json"
        bad.write_text("{not json")
        code, _ = run_cli("sweep", "--config", bad, "--out", self.out / "x.csv")
        self.assertEqual(code, EXIT_PARAMETER)

    def test_missing_config(self):
        code, _ = run_cli("sweep", "--config", self.out / "absent.json", "--out", self.out / "x.csv")
        self.assertEqual(code, EXIT_IO)

    def test_unwritable_output(self):
        code, _ = run_cli("sweep", "--config", self.write_config(), "--out", self.out / "no" / "x.csv")
        self.assertEqual(code, EXIT_IO)


if __name__ == "__main__":
    unittest.main()
