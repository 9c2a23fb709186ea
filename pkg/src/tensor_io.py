"""
Adjacency tensor serialization.

Two stable formats share one JSON header
{format_version, n, m, model, hypothesis, seed, params, kind}:

- CSV (any suffix other than .bin): the first line is `# ` followed by the
  header JSON, then a `rank,value` table with one row per hyperedge in rank order.
- Binary (.bin): the header JSON on its own line, then C(n,m) little-endian
  float64 values in rank order.
"""
import json
from pathlib import Path

import numpy as np
import pandas as pd

from src.sampling import AdjacencyTensor
from utils.errors import ArtifactIOError, ParameterError
from utils.logger import get_logger

# Initialize logger
logger = get_logger(__name__)

FORMAT_VERSION = 1
HEADER_KEYS = ("format_version", "n", "m", "model", "hypothesis", "seed", "params", "kind")


def make_header(tensor, model=None, hypothesis=None, seed=None, params=None):
    return {
        "format_version": FORMAT_VERSION,
        "n": tensor.n,
        "m": tensor.m,
        "model": model,
        "hypothesis": hypothesis,
        "seed": seed,
        "params": params or {},
        "kind": tensor.kind,
    }


def _is_binary(path):
    return Path(path).suffix.lower() == ".bin"


def write_tensor(tensor, path, header=None):
    """
    Write a tensor with its header.

    Parameters:
        tensor (AdjacencyTensor): Tensor to persist
        path (str | Path): Target file; `.bin` selects the binary format
        header (dict): Header fields; n, m and kind are always taken from the tensor

    Returns:
        Path: The written path
    """
    path = Path(path)
    full_header = make_header(tensor)
    full_header.update(header or {})
    full_header.update(n=tensor.n, m=tensor.m, kind=tensor.kind, format_version=FORMAT_VERSION)
    header_line = json.dumps(full_header, sort_keys=True)

    try:
        if _is_binary(path):
            with open(path, "wb") as f:
                f.write(header_line.encode("utf-8") + b"\n")
                f.write(tensor.values.astype("<f8").tobytes())
        else:
            frame = pd.DataFrame({"rank": np.arange(len(tensor.values)), "value": tensor.values})
            with open(path, "w", newline="") as f:
                f.write(f"# {header_line}\n")
                frame.to_csv(f, index=False)
    except OSError as e:
        logger.error(f"Error writing tensor to {path}: {e}", exc_info=True)
        raise ArtifactIOError(f"cannot write tensor file {path}: {e}") from e

    logger.debug(f"Wrote tensor n={tensor.n}, m={tensor.m} to {path}")
    return path


def _parse_header(line, path):
    try:
        header = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParameterError(f"{path} has a malformed header: {e}") from e
    missing = [k for k in ("n", "m") if k not in header]
    if missing:
        raise ParameterError(f"{path} header lacks {missing}")
    return header


def read_tensor(path):
    """
    Read a tensor written by `write_tensor`.

    Returns:
        tuple: (AdjacencyTensor, header dict)
    """
    path = Path(path)
    try:
        if _is_binary(path):
            with open(path, "rb") as f:
                header = _parse_header(f.readline().decode("utf-8"), path)
                values = np.frombuffer(f.read(), dtype="<f8").astype(np.float64)
        else:
            with open(path) as f:
                first = f.readline()
                if not first.startswith("#"):
                    raise ParameterError(f"{path} does not start with a '# {{header}}' line")
                header = _parse_header(first[1:].strip(), path)
            frame = pd.read_csv(path, skiprows=1, float_precision="round_trip")
            if list(frame.columns) != ["rank", "value"]:
                raise ParameterError(f"{path} must have columns rank,value")
            frame = frame.sort_values("rank")
            if not np.array_equal(frame["rank"].to_numpy(), np.arange(len(frame))):
                raise ParameterError(f"{path} ranks are not a dense 0..C(n,m)-1 range")
            values = frame["value"].to_numpy(dtype=np.float64)
    except OSError as e:
        logger.error(f"Error reading tensor from {path}: {e}", exc_info=True)
        raise ArtifactIOError(f"cannot read tensor file {path}: {e}") from e

    tensor = AdjacencyTensor(int(header["n"]), int(header["m"]), values, kind=header.get("kind", "real"))
    return tensor, header


def pair_paths(out):
    """File names used for a sample pair written to `out`."""
    out = Path(out)
    suffix = out.suffix or ".csv"
    stem = out.with_suffix("")
    return {
        "a1": stem.with_name(f"{stem.name}_a1{suffix}"),
        "a2": stem.with_name(f"{stem.name}_a2{suffix}"),
        "planted": stem.with_name(f"{stem.name}_planted.json"),
    }


def write_sample_pair(pair, out, header=None):
    """
    Write both tensors of a SamplePair and, under H1, the planted permutation
    to a separate JSON file so that a test run never reads it by accident.

    Returns:
        dict: Written paths keyed by a1, a2 and (under H1) planted
    """
    paths = pair_paths(out)
    header = dict(header or {})
    header.setdefault("hypothesis", pair.hypothesis)
    written = {
        "a1": write_tensor(pair.a1, paths["a1"], header),
        "a2": write_tensor(pair.a2, paths["a2"], header),
    }
    if pair.planted is not None:
        record = {
            "n": pair.planted.n,
            "planted": pair.planted.one_based(),
            "cycles": pair.planted.to_cycle_string(),
        }
        try:
            paths["planted"].write_text(json.dumps(record, sort_keys=True) + "\n")
        except OSError as e:
            logger.error(f"Error writing planted permutation to {paths['planted']}: {e}", exc_info=True)
            raise ArtifactIOError(f"cannot write {paths['planted']}: {e}") from e
        written["planted"] = paths["planted"]
    logger.info(f"Wrote {pair.hypothesis} sample pair to {', '.join(str(p) for p in written.values())}")
    return written
