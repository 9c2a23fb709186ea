"""
Hyperedge indexing, permutation algebra and hyperedge-orbit counting.

Vertices are 0-based inside this module's arrays and 1-based on every
external surface (HyperedgeIndex, cycle notation, JSON). Hyperedges are
stored as sorted vertex tuples; their dense lexicographic rank is the
storage index used by every adjacency tensor.
"""
import re
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, islice, permutations
from math import comb, factorial, prod

import numpy as np

from utils.errors import ParameterError
from utils.logger import get_logger
from utils.rng import as_generator

# Initialize logger
logger = get_logger(__name__)

# Largest n whose full permutation table is kept in memory.
PERMUTATION_TABLE_LIMIT = 8


@dataclass(frozen=True)
class HyperedgeIndex:
    """A hyperedge as a strictly increasing tuple of 1-based vertex labels."""
    vertices: tuple

    def __post_init__(self):
        verts = tuple(int(v) for v in self.vertices)
        if not verts:
            raise ParameterError("a hyperedge needs at least one vertex")
        if verts[0] < 1 or any(a >= b for a, b in zip(verts, verts[1:])):
            raise ParameterError(f"hyperedge {verts} must be strictly increasing labels >= 1")
        object.__setattr__(self, "vertices", verts)

    @property
    def m(self):
        return len(self.vertices)

    def zero_based(self):
        return tuple(v - 1 for v in self.vertices)

    @classmethod
    def from_zero_based(cls, vertices):
        return cls(tuple(int(v) + 1 for v in vertices))

    def check_within(self, n):
        if self.vertices[-1] > n:
            raise ParameterError(f"hyperedge {self.vertices} has a vertex outside [1..{n}]")


@dataclass(frozen=True)
class Permutation:
    """
    Bijection on n vertices. `image[i]` is the 0-based image of vertex i;
    use `from_one_based` / `one_based` at the edges of the system.
    """
    image: tuple

    def __post_init__(self):
        image = tuple(int(v) for v in self.image)
        if sorted(image) != list(range(len(image))):
            raise ParameterError(f"{[v + 1 for v in image]} is not a permutation of 1..{len(image)}")
        object.__setattr__(self, "image", image)

    @property
    def n(self):
        return len(self.image)

    def __len__(self):
        return len(self.image)

    def __call__(self, vertex):
        return self.image[vertex]

    def as_array(self):
        return np.asarray(self.image, dtype=np.int64)

    def one_based(self):
        return [v + 1 for v in self.image]

    def is_identity(self):
        return all(i == v for i, v in enumerate(self.image))

    @classmethod
    def identity(cls, n):
        return cls(tuple(range(n)))

    @classmethod
    def from_one_based(cls, image):
        return cls(tuple(int(v) - 1 for v in image))

    @classmethod
    def from_cycles(cls, text, n):
        """Parse 1-based cycle notation such as "(1 2)(3 4 5)"; unlisted vertices are fixed."""
        image = list(range(n))
        seen = set()
        body = text.strip()
        if re.sub(r"\(\s*[\d\s,]*\)", "", body).strip():
            raise ParameterError(f"cannot parse cycle notation {text!r}")
        for group in re.findall(r"\(([^)]*)\)", body):
            cycle = [int(tok) for tok in re.split(r"[\s,]+", group.strip()) if tok]
            for v in cycle:
                if not 1 <= v <= n:
                    raise ParameterError(f"vertex {v} in {text!r} is outside [1..{n}]")
                if v in seen:
                    raise ParameterError(f"vertex {v} appears twice in {text!r}")
                seen.add(v)
            for a, b in zip(cycle, cycle[1:] + cycle[:1]):
                image[a - 1] = b - 1
        return cls(tuple(image))

    def to_cycle_string(self):
        cycles, _ = cycle_decomposition(self)
        moved = [c for c in cycles if len(c) > 1]
        if not moved:
            return "()"
        return "".join("(" + " ".join(str(v) for v in c) + ")" for c in moved)


class _LengthCounts:
    """Shared behaviour of CycleType and OrbitProfile: sparse length -> count maps."""

    counts: tuple

    def __post_init__(self):
        items = self.counts.items() if isinstance(self.counts, dict) else self.counts
        cleaned = []
        for k, c in items:
            k, c = int(k), int(c)
            if k < 1 or c < 0:
                raise ParameterError(f"invalid length/count pair ({k}, {c})")
            if c:
                cleaned.append((k, c))
        object.__setattr__(self, "counts", tuple(sorted(cleaned)))

    def count(self, k):
        for length, c in self.counts:
            if length == k:
                return c
        return 0

    def as_dict(self):
        return dict(self.counts)

    @property
    def weighted_total(self):
        return sum(k * c for k, c in self.counts)


@dataclass(frozen=True)
class CycleType(_LengthCounts):
    """Cycle-length counts n_k of a node permutation."""
    counts: tuple

    @property
    def n(self):
        return self.weighted_total

    def class_size(self):
        """Number of permutations in S_n with this cycle type."""
        return factorial(self.n) // prod(k ** c * factorial(c) for k, c in self.counts)

    def representative(self):
        """A permutation of this cycle type built from consecutive vertex blocks."""
        image = []
        start = 0
        for k, c in sorted(self.counts, reverse=True):
            for _ in range(c):
                block = list(range(start, start + k))
                image.extend(block[1:] + block[:1])
                start += k
        return Permutation(tuple(image))


@dataclass(frozen=True)
class OrbitProfile(_LengthCounts):
    """Counts N_k of hyperedge orbits of each length under the induced hyperedge permutation."""
    counts: tuple

    @property
    def edge_count(self):
        return self.weighted_total


# --- Hyperedge indexing -------------------------------------------------------

def _check_uniformity(n, m):
    if m < 1 or m > n:
        raise ParameterError(f"uniformity m={m} must satisfy 1 <= m <= n={n}")


@lru_cache(maxsize=None)
def _binomial_table(n, m):
    table = np.zeros((n + 1, m + 1), dtype=np.int64)
    for a in range(n + 1):
        for k in range(m + 1):
            table[a, k] = comb(a, k)
    return table


@lru_cache(maxsize=64)
def edge_array(n, m):
    """Read-only (C(n,m), m) array of 0-based sorted m-subsets in lexicographic order."""
    _check_uniformity(n, m)
    edges = np.array(list(combinations(range(n), m)), dtype=np.int64).reshape(-1, m)
    edges.setflags(write=False)
    logger.debug(f"Built hyperedge table for n={n}, m={m}: {len(edges)} edges")
    return edges


def edge_count(n, m):
    _check_uniformity(n, m)
    return comb(n, m)


def rank_edges(sorted_vertices, n):
    """
    Lexicographic ranks of sorted 0-based m-subsets (any leading batch shape).

    Uses the reflected colexicographic number system:
    rank(c) = C(n,m) - 1 - sum_i C(n-1-c_{m-1-i}, i+1).
    """
    arr = np.asarray(sorted_vertices, dtype=np.int64)
    m = arr.shape[-1]
    table = _binomial_table(n, m)
    reflected = (n - 1) - arr[..., ::-1]
    colex = np.zeros(arr.shape[:-1], dtype=np.int64)
    for i in range(m):
        colex += table[reflected[..., i], i + 1]
    return comb(n, m) - 1 - colex


def enumerate_hyperedges(n, m):
    """All C(n,m) hyperedges of the complete m-uniform hypergraph, in lexicographic order."""
    return [HyperedgeIndex.from_zero_based(row) for row in edge_array(n, m).tolist()]


def rank(edge, n):
    """Dense index of a hyperedge in [0, C(n,m))."""
    edge.check_within(n)
    _check_uniformity(n, edge.m)
    return int(rank_edges(np.asarray(edge.zero_based()), n))


def unrank(index, n, m):
    """Inverse of `rank`."""
    total = edge_count(n, m)
    if not 0 <= index < total:
        raise ParameterError(f"rank {index} outside [0, {total})")
    return HyperedgeIndex.from_zero_based(edge_array(n, m)[index])


# --- Permutation algebra ------------------------------------------------------

def _same_size(pi, sigma):
    if pi.n != sigma.n:
        raise ParameterError(f"permutations act on different vertex sets ({pi.n} vs {sigma.n})")


def compose(pi, sigma):
    """(pi o sigma)(i) = pi(sigma(i))."""
    _same_size(pi, sigma)
    return Permutation(tuple(pi.image[s] for s in sigma.image))


def invert(pi):
    inverse = [0] * pi.n
    for i, v in enumerate(pi.image):
        inverse[v] = i
    return Permutation(tuple(inverse))


def conjugate(tau, pi):
    """tau o pi o tau^-1."""
    return compose(compose(tau, pi), invert(tau))


def apply_to_edge(pi, edge):
    """Image of a hyperedge under the induced hyperedge permutation, in canonical sorted form."""
    edge.check_within(pi.n)
    return HyperedgeIndex(tuple(sorted(pi.image[v - 1] + 1 for v in edge.vertices)))


def edge_permutation(pi, m):
    """Dense array r -> rank(pi(e_r)), the hyperedge permutation on ranks."""
    edges = edge_array(pi.n, m)
    images = np.sort(pi.as_array()[edges], axis=1)
    return rank_edges(images, pi.n)


def batch_edge_permutations(perm_rows, m):
    """Hyperedge permutations for a (B, n) array of 0-based permutation images; returns (B, C(n,m))."""
    perm_rows = np.asarray(perm_rows, dtype=np.int64)
    n = perm_rows.shape[1]
    edges = edge_array(n, m)
    images = np.sort(perm_rows[:, edges], axis=-1)
    return rank_edges(images, n)


# --- Cycles and orbits --------------------------------------------------------

def _cycles_of_mapping(mapping):
    """Cycles of a 0-based mapping list, each starting at its smallest element."""
    visited = bytearray(len(mapping))
    cycles = []
    for start in range(len(mapping)):
        if visited[start]:
            continue
        cycle = []
        j = start
        while not visited[j]:
            visited[j] = 1
            cycle.append(j)
            j = mapping[j]
        cycles.append(cycle)
    return cycles


def _cycle_length_counts(mapping):
    visited = bytearray(len(mapping))
    lengths = Counter()
    for start in range(len(mapping)):
        if visited[start]:
            continue
        length = 0
        j = start
        while not visited[j]:
            visited[j] = 1
            j = mapping[j]
            length += 1
        lengths[length] += 1
    return lengths


def cycle_decomposition(pi):
    """Disjoint cycles (1-based tuples, fixed points included) and the cycle type."""
    cycles = [tuple(v + 1 for v in c) for c in _cycles_of_mapping(list(pi.image))]
    cycle_type = CycleType(dict(Counter(len(c) for c in cycles)))
    return cycles, cycle_type


def orbit_profile(pi, m):
    """
    Hyperedge orbit counts N_k by explicit traversal of the induced hyperedge
    permutation with a visited bitmap over dense edge ranks.
    """
    _check_uniformity(pi.n, m)
    lengths = _cycle_length_counts(edge_permutation(pi, m).tolist())
    return OrbitProfile(dict(lengths))


def orbit_profiles_from_edge_permutations(edge_perms):
    """Orbit profiles for each row of a batch of hyperedge permutations."""
    return [OrbitProfile(dict(_cycle_length_counts(row))) for row in np.asarray(edge_perms).tolist()]


def integer_partitions(total, largest=None):
    """Partitions of `total` as non-increasing tuples, largest parts first."""
    largest = total if largest is None else largest
    if total == 0:
        yield ()
        return
    for part in range(min(total, largest), 0, -1):
        for rest in integer_partitions(total - part, part):
            yield (part,) + rest


def fixed_edge_count_closed_form(cycle_type, m):
    """
    N_1 from the cycle type: a fixed hyperedge is a union of whole node cycles
    of total size m, so N_1 = sum over partitions j of m of prod_k C(n_k, j_k).
    """
    if cycle_type.n < m:
        raise ParameterError(f"cycle type on n={cycle_type.n} vertices cannot hold m={m}")
    total = 0
    for parts in integer_partitions(m):
        total += prod(comb(cycle_type.count(k), j) for k, j in Counter(parts).items())
    return total


def uniform_random_permutation(n, rng=None):
    """Uniform permutation of n vertices by the Fisher-Yates shuffle."""
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = as_generator(rng)
    image = list(range(n))
    if n > 1:
        # j_i uniform on [0, i] for i = n-1, ..., 1
        picks = rng.integers(0, np.arange(n, 1, -1)).tolist()
        for i, j in zip(range(n - 1, 0, -1), picks):
            image[i], image[j] = image[j], image[i]
    return Permutation(tuple(image))


# --- Enumeration of S_n -------------------------------------------------------

@lru_cache(maxsize=PERMUTATION_TABLE_LIMIT + 1)
def all_permutations(n):
    """Read-only (n!, n) array of S_n in lexicographic order (n <= PERMUTATION_TABLE_LIMIT)."""
    if n > PERMUTATION_TABLE_LIMIT:
        raise ParameterError(f"refusing to materialise S_{n}; iterate permutation_blocks instead")
    table = np.array(list(permutations(range(n))), dtype=np.int64).reshape(-1, n)
    table.setflags(write=False)
    return table


def permutation_blocks(n, block_size=5040):
    """Yield S_n in lexicographic order as (<= block_size, n) arrays."""
    if n <= PERMUTATION_TABLE_LIMIT:
        table = all_permutations(n)
        for start in range(0, len(table), block_size):
            yield table[start:start + block_size]
        return
    source = permutations(range(n))
    while True:
        chunk = list(islice(source, block_size))
        if not chunk:
            return
        yield np.array(chunk, dtype=np.int64)
