import unittest
import sys
import json
import tempfile
from pathlib import Path

import numpy as np

# Add the parent directory to the Python path
sys.path.append(str(Path(__file__).parent.parent))

from src.sampling import AdjacencyTensor, sample_pair
from src.tensor_io import FORMAT_VERSION, pair_paths, read_tensor, write_sample_pair, write_tensor
from utils.errors import ArtifactIOError, ParameterError
from utils.models import ERModelSpec, GaussianModelSpec
from utils.rng import stream


class TestTensorFiles(unittest.TestCase):
    """Test cases for write_tensor / read_tensor."""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.out = Path(self.temp_dir.name)
        self.pair = sample_pair(GaussianModelSpec(n=6, m=3, rho=0.4), "h1", stream(11))

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_csv_preserves_values(self):
        path = write_tensor(self.pair.a1, self.out / "a.csv", {"model": "gaussian", "seed": 11})
        tensor, header = read_tensor(path)
        self.assertEqual(tensor, self.pair.a1)
        self.assertEqual(header["format_version"], FORMAT_VERSION)
        self.assertEqual(header["seed"], 11)
        self.assertEqual((header["n"], header["m"], header["kind"]), (6, 3, "real"))

    def test_csv_layout(self):
        path = write_tensor(self.pair.a1, self.out / "a.csv")
        lines = path.read_text().splitlines()
        self.assertTrue(lines[0].startswith("# {"))
        self.assertEqual(lines[1], "rank,value")
        self.assertEqual(len(lines), 2 + 20)

    def test_binary_preserves_values(self):
        path = write_tensor(self.pair.a2, self.out / "a.bin")
        tensor, header = read_tensor(path)
        self.assertEqual(tensor, self.pair.a2)
        first_line = path.read_bytes().split(b"\n", 1)[0]
        self.assertEqual(json.loads(first_line)["n"], 6)
        self.assertEqual(path.stat().st_size, len(first_line) + 1 + 20 * 8)

    def test_binary_kind(self):
        pair = sample_pair(ERModelSpec(n=6, m=3, p=0.5, s=0.5), "h0", stream(2))
        tensor, _ = read_tensor(write_tensor(pair.a1, self.out / "er.bin"))
        self.assertEqual(tensor.kind, "binary")
        self.assertEqual(tensor, pair.a1)

    def test_header_cannot_override_shape(self):
        path = write_tensor(self.pair.a1, self.out / "a.csv", {"n": 99, "kind": "binary"})
        _, header = read_tensor(path)
        self.assertEqual(header["n"], 6)
        self.assertEqual(header["kind"], "real")

    def test_missing_file(self):
        with self.assertRaises(ArtifactIOError):
            read_tensor(self.out / "missing.csv")

    def test_unwritable(self):
        with self.assertRaises(ArtifactIOError):
            write_tensor(self.pair.a1, self.out / "no" / "such" / "a.csv")

    def test_missing_header_line(self):
        path = self.out / "bad.csv"
        path.write_text("rank,value\n0,1.0\n")
        with self.assertRaises(ParameterError):
            read_tensor(path)

    def test_wrong_length(self):
        path = self.out / "short.csv"
        path.write_text('# {"n": 4, "m": 2}\nrank,value\n0,1.0\n1,2.0\n')
        with self.assertRaises(ParameterError):
            read_tensor(path)

    def test_unsorted_ranks_accepted(self):
        path = self.out / "shuffled.csv"
        path.write_text('# {"n": 3, "m": 2}\nrank,value\n2,0.3\n0,0.1\n1,0.2\n')
        tensor, _ = read_tensor(path)
        np.testing.assert_array_equal(tensor.values, [0.1, 0.2, 0.3])


class TestSamplePairFiles(unittest.TestCase):
    """Test cases for write_sample_pair."""

    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.out = Path(self.temp_dir.name)

    def tearDown(self):
        self.temp_dir.cleanup()

    def test_pair_paths(self):
        paths = pair_paths(self.out / "draw.bin")
        self.assertEqual(paths["a1"].name, "draw_a1.bin")
        self.assertEqual(paths["a2"].name, "draw_a2.bin")
        self.assertEqual(paths["planted"].name, "draw_planted.json")
        self.assertEqual(pair_paths(self.out / "draw")["a1"].name, "draw_a1.csv")

    def test_planted_written_separately(self):
        pair = sample_pair(GaussianModelSpec(n=5, m=2, rho=0.7), "h1", stream(3))
        written = write_sample_pair(pair, self.out / "h1.csv", {"model": "gaussian"})
        record = json.loads(written["planted"].read_text())
        self.assertEqual(record["planted"], pair.planted.one_based())
        self.assertEqual(record["cycles"], pair.planted.to_cycle_string())
        _, header = read_tensor(written["a1"])
        self.assertEqual(header["hypothesis"], "h1")
        self.assertNotIn("planted", header)

    def test_null_pair_has_no_planted_file(self):
        pair = sample_pair(GaussianModelSpec(n=5, m=2, rho=0.7), "h0", stream(3))
        written = write_sample_pair(pair, self.out / "h0.csv")
        self.assertNotIn("planted", written)
        self.assertFalse(pair_paths(self.out / "h0.csv")["planted"].exists())


class TestAdjacencyTensorEquality(unittest.TestCase):
    """Test cases for tensor comparison used by the file checks."""

    def test_equal_values(self):
        a = AdjacencyTensor(4, 2, np.arange(6.0))
        self.assertEqual(a, AdjacencyTensor(4, 2, np.arange(6.0)))
        self.assertNotEqual(a, AdjacencyTensor(4, 2, np.arange(6.0) + 1))


if __name__ == "__main__":
    unittest.main()
