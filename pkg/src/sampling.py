"""
Samplers for (A1, A2) pairs under the null and the planted alternative,
for the Gaussian-Wigner and the correlated Erdos-Renyi scenarios.

Stream discipline: under H1 the planted permutation is drawn first, then
every A1 entry in rank order, then the A2 draws in rank order.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.combinatorics import Permutation, edge_count, edge_permutation, uniform_random_permutation
from utils.errors import DomainError, ParameterError
from utils.logger import get_logger
from utils.models import ERModelSpec, GaussianModelSpec
from utils.rng import as_generator

# Initialize logger
logger = get_logger(__name__)

HYPOTHESES = ("h0", "h1")


@dataclass(frozen=True, eq=False)
class AdjacencyTensor:
    """
    Symmetric m-uniform edge-value map stored densely by hyperedge rank.

    Values are kept as float64 for both kinds so products and sums never
    overflow an integer dtype.
    """
    n: int
    m: int
    values: np.ndarray
    kind: str = "real"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        expected = edge_count(self.n, self.m)
        if values.shape != (expected,):
            raise ParameterError(f"tensor for n={self.n}, m={self.m} needs {expected} values, got shape {values.shape}")
        if self.kind not in ("real", "binary"):
            raise ParameterError(f"unknown tensor kind {self.kind!r}")
        if self.kind == "binary" and not np.isin(values, (0.0, 1.0)).all():
            raise ParameterError("binary tensor values must be 0 or 1")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __eq__(self, other):
        if not isinstance(other, AdjacencyTensor):
            return NotImplemented
        return (self.n, self.m, self.kind) == (other.n, other.m, other.kind) and np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class SamplePair:
    a1: AdjacencyTensor
    a2: AdjacencyTensor
    planted: Optional[Permutation] = None

    def __post_init__(self):
        if (self.a1.n, self.a1.m) != (self.a2.n, self.a2.m):
            raise ParameterError("a1 and a2 must share (n, m)")
        if self.planted is not None and self.planted.n != self.a1.n:
            raise ParameterError("planted permutation acts on the wrong vertex count")

    @property
    def hypothesis(self):
        return "h0" if self.planted is None else "h1"


def _check_hypothesis(hypothesis):
    hypothesis = str(hypothesis).lower()
    if hypothesis not in HYPOTHESES:
        raise ParameterError(f"hypothesis must be one of {HYPOTHESES}, got {hypothesis!r}")
    return hypothesis


def er_correlation(p, s):
    """
    Pearson correlation of an aligned ER edge pair, s(1-p)/(1-ps).

    Parameters:
        p (float): Parent edge probability in (0, 1]
        s (float): Subsampling probability in [0, 1]

    Returns:
        float: The coupling correlation rho
    """
    if not 0.0 < p <= 1.0 or not 0.0 <= s <= 1.0:
        raise DomainError(f"need 0 < p <= 1 and 0 <= s <= 1, got p={p}, s={s}")
    if p * s == 1.0:
        raise DomainError("er_correlation is undefined at ps = 1")
    return s * (1.0 - p) / (1.0 - p * s)


def sample_gaussian(spec, hypothesis, rng=None):
    """
    Draw a Gaussian-Wigner pair.

    Under H1, A2[pi(e)] = rho * A1[e] + sqrt(1 - rho^2) * Z[e] with Z independent
    standard normal, so every aligned pair is bivariate normal with correlation rho.
    """
    if not isinstance(spec, GaussianModelSpec):
        spec = GaussianModelSpec.from_dict(spec)
    hypothesis = _check_hypothesis(hypothesis)
    rng = as_generator(rng)
    size = edge_count(spec.n, spec.m)

    if hypothesis == "h0":
        a1 = rng.standard_normal(size)
        a2 = rng.standard_normal(size)
        planted = None
    else:
        planted = uniform_random_permutation(spec.n, rng)
        a1 = rng.standard_normal(size)
        z = rng.standard_normal(size)
        a2 = np.empty(size)
        a2[edge_permutation(planted, spec.m)] = spec.rho * a1 + np.sqrt(1.0 - spec.rho ** 2) * z

    logger.debug(f"Sampled gaussian {hypothesis} pair n={spec.n}, m={spec.m}, rho={spec.rho}")
    return SamplePair(AdjacencyTensor(spec.n, spec.m, a1), AdjacencyTensor(spec.n, spec.m, a2), planted)


def sample_er(spec, hypothesis, rng=None):
    """
    Draw a correlated Erdos-Renyi pair from the conditional form of the coupling:
    A1[e] ~ Bern(ps); given A1[e], A2[pi(e)] ~ Bern(s) if A1[e] = 1 else Bern(eta),
    eta = ps(1-s)/(1-ps). Marginals of both tensors are exactly Bern(ps).
    """
    if not isinstance(spec, ERModelSpec):
        spec = ERModelSpec.from_dict(spec)
    hypothesis = _check_hypothesis(hypothesis)
    rng = as_generator(rng)
    size = edge_count(spec.n, spec.m)
    ps = spec.edge_probability

    if hypothesis == "h0":
        a1 = rng.random(size) < ps
        a2 = rng.random(size) < ps
        planted = None
    else:
        planted = uniform_random_permutation(spec.n, rng)
        a1 = rng.random(size) < ps
        u = rng.random(size)
        a2 = np.empty(size, dtype=bool)
        a2[edge_permutation(planted, spec.m)] = u < np.where(a1, spec.s, spec.eta)

    logger.debug(f"Sampled er {hypothesis} pair n={spec.n}, m={spec.m}, p={spec.p}, s={spec.s}")
    return SamplePair(
        AdjacencyTensor(spec.n, spec.m, a1, kind="binary"),
        AdjacencyTensor(spec.n, spec.m, a2, kind="binary"),
        planted,
    )


def sample_pair(spec, hypothesis, rng=None):
    """Dispatch on the model spec's scenario."""
    if isinstance(spec, GaussianModelSpec):
        return sample_gaussian(spec, hypothesis, rng)
    if isinstance(spec, ERModelSpec):
        return sample_er(spec, hypothesis, rng)
    raise ParameterError(f"unknown model spec {type(spec).__name__}")


def relabel(tensor, tau):
    """Vertex relabeling: (tau . A)[tau(e)] = A[e]."""
    if tau.n != tensor.n:
        raise ParameterError(f"relabeling permutation acts on {tau.n} vertices, tensor has {tensor.n}")
    values = np.empty_like(tensor.values)
    values[edge_permutation(tau, tensor.m)] = tensor.values
    return AdjacencyTensor(tensor.n, tensor.m, values, kind=tensor.kind)


def aligned_pairs(pair, permutation=None):
    """
    (A1[e], A2[pi(e)]) columns aligned by `permutation` (the planted one by default).
    """
    pi = permutation if permutation is not None else pair.planted
    if pi is None:
        pi = Permutation.identity(pair.a1.n)
    return pair.a1.values, pair.a2.values[edge_permutation(pi, pair.a1.m)]
