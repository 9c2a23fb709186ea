"""
The alignment statistic T(pi) = sum_e A1[e] * A2[pi(e)], its maximum over
permutations (exact enumeration or transposition local search), the
asymptotic and calibrated thresholds, and the accept/reject decision.
"""
from functools import lru_cache
from math import comb, log, log1p, sqrt

import numpy as np

from src.combinatorics import (
    PERMUTATION_TABLE_LIMIT,
    Permutation,
    all_permutations,
    batch_edge_permutations,
    edge_permutation,
    permutation_blocks,
    uniform_random_permutation,
)
from src.sampling import sample_pair
from utils.config import get_exact_cap
from utils.errors import CapExceededError, DomainError, ParameterError
from utils.logger import get_logger
from utils.models import ERModelSpec, GaussianModelSpec, TestOutcome, ThresholdResult
from utils.rng import as_generator

# Initialize logger
logger = get_logger(__name__)

# Local search accepts a swap only if it gains more than this.
IMPROVEMENT_TOLERANCE = 1e-12
MIN_CALIBRATION_TRIALS = 20
_BLOCK_SIZE = 5040


def _check_pair(a1, a2, pi=None):
    if (a1.n, a1.m) != (a2.n, a2.m):
        raise ParameterError(f"tensor shapes differ: (n={a1.n}, m={a1.m}) vs (n={a2.n}, m={a2.m})")
    if pi is not None and pi.n != a1.n:
        raise ParameterError(f"permutation acts on {pi.n} vertices, tensors have n={a1.n}")


def t_of_pi(a1, a2, pi):
    """
    Alignment statistic for one permutation.

    Parameters:
        a1 (AdjacencyTensor): First tensor
        a2 (AdjacencyTensor): Second tensor, same (n, m)
        pi (Permutation): Candidate vertex alignment

    Returns:
        float: sum over hyperedges e of A1[e] * A2[pi(e)]
    """
    _check_pair(a1, a2, pi)
    return float(np.dot(a1.values, a2.values[edge_permutation(pi, a1.m)]))


@lru_cache(maxsize=16)
def _edge_permutation_table(n, m):
    """Hyperedge permutations of all of S_n in lexicographic order, for n <= PERMUTATION_TABLE_LIMIT."""
    table = batch_edge_permutations(all_permutations(n), m)
    table.setflags(write=False)
    logger.debug(f"Cached hyperedge permutation table for n={n}, m={m}: shape {table.shape}")
    return table


def _exact_blocks(n, m):
    if n <= PERMUTATION_TABLE_LIMIT:
        yield all_permutations(n), _edge_permutation_table(n, m)
        return
    for block in permutation_blocks(n, _BLOCK_SIZE):
        yield block, batch_edge_permutations(block, m)


def max_statistic_exact(a1, a2, limit=None):
    """
    Exact T_n = max over all n! permutations of T(pi).

    Ties resolve to the lexicographically smallest argmax image: permutations
    are scanned in lexicographic order and a later one replaces the incumbent
    only on a strict improvement.

    Parameters:
        a1, a2 (AdjacencyTensor): Tensors sharing (n, m)
        limit (int): Largest n to enumerate; defaults to HYPERCORR_EXACT_CAP

    Returns:
        TestOutcome: statistic, argmax and method "exact" (no threshold yet)
    """
    _check_pair(a1, a2)
    n, m = a1.n, a1.m
    limit = get_exact_cap() if limit is None else int(limit)
    if n > limit:
        raise CapExceededError(
            f"exact maximization over S_{n} refused (cap n <= {limit}); use max_statistic_heuristic instead"
        )

    best_value = -np.inf
    best_row = None
    evaluated = 0
    for perms, edge_perms in _exact_blocks(n, m):
        values = a2.values[edge_perms] @ a1.values
        idx = int(np.argmax(values))
        if values[idx] > best_value:
            best_value = values[idx]
            best_row = perms[idx]
        evaluated += len(perms)

    argmax = Permutation(tuple(best_row.tolist()))
    return TestOutcome(
        n=n,
        m=m,
        statistic=t_of_pi(a1, a2, argmax),
        argmax=argmax.one_based(),
        method="exact",
        permutations_evaluated=evaluated,
    )


@lru_cache(maxsize=32)
def _transpositions(n):
    return np.array([(i, j) for i in range(n) for j in range(i + 1, n)], dtype=np.int64).reshape(-1, 2)


def _climb(a1, a2, start):
    """Steepest-ascent over the transposition neighbourhood from `start` (0-based image array)."""
    m = a1.m
    swaps = _transpositions(len(start))
    current = np.array(start, dtype=np.int64)
    current_value = float(a2.values[edge_permutation(Permutation(tuple(current.tolist())), m)] @ a1.values)
    evaluated = 1
    if len(swaps) == 0:
        return current, current_value, evaluated

    rows = np.arange(len(swaps))
    while True:
        candidates = np.repeat(current[None, :], len(swaps), axis=0)
        candidates[rows, swaps[:, 0]] = current[swaps[:, 1]]
        candidates[rows, swaps[:, 1]] = current[swaps[:, 0]]
        values = a2.values[batch_edge_permutations(candidates, m)] @ a1.values
        evaluated += len(candidates)
        idx = int(np.argmax(values))
        if values[idx] <= current_value + IMPROVEMENT_TOLERANCE:
            return current, current_value, evaluated
        current = candidates[idx]
        current_value = float(values[idx])


def max_statistic_heuristic(a1, a2, restarts=10, rng=None):
    """
    Restarted transposition hill-climbing for T_n.

    The identity is always the first start, followed by `restarts` uniform
    random starts drawn from `rng`. The returned value is T of a concrete
    permutation, so it never exceeds the exact maximum.

    Parameters:
        a1, a2 (AdjacencyTensor): Tensors sharing (n, m)
        restarts (int): Number of random starts in addition to the identity
        rng (Generator | int | None): Random state for the starts

    Returns:
        TestOutcome: best value found, its permutation and method "heuristic"
    """
    _check_pair(a1, a2)
    if restarts < 0:
        raise ParameterError(f"restarts must be >= 0, got {restarts}")
    rng = as_generator(rng)
    n = a1.n

    starts = [np.arange(n)]
    starts.extend(uniform_random_permutation(n, rng).as_array() for _ in range(restarts))

    best_value = -np.inf
    best_perm = None
    evaluated = 0
    for start in starts:
        perm, value, count = _climb(a1, a2, start)
        evaluated += count
        if value > best_value:
            best_value, best_perm = value, perm

    argmax = Permutation(tuple(best_perm.tolist()))
    logger.debug(f"Heuristic search n={n}, restarts={restarts}: best {best_value:.6g} after {evaluated} evaluations")
    return TestOutcome(
        n=n,
        m=a1.m,
        statistic=t_of_pi(a1, a2, argmax),
        argmax=argmax.one_based(),
        method="heuristic",
        permutations_evaluated=evaluated,
    )


def max_statistic(a1, a2, method="exact", restarts=10, rng=None, limit=None):
    if method == "exact":
        return max_statistic_exact(a1, a2, limit=limit)
    if method == "heuristic":
        return max_statistic_heuristic(a1, a2, restarts=restarts, rng=rng)
    raise ParameterError(f"unknown statistic method {method!r}")


# --- Thresholds ---------------------------------------------------------------

def gaussian_threshold(n, m, rho):
    """t_n = rho * C(n,m) - sqrt(C(n,m)) * n^(1/4); degenerate when t_n <= 0."""
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    if not 1 <= m <= n:
        raise ParameterError(f"need 1 <= m <= n, got n={n}, m={m}")
    edges = comb(n, m)
    value = rho * edges - sqrt(edges) * n ** 0.25
    degenerate = value <= 0
    if degenerate:
        logger.warning(f"Gaussian threshold t_n={value:.6g} is non-positive at n={n}, m={m}, rho={rho}")
    return ThresholdResult(value=value, kind="asymptotic", degenerate=degenerate)


def er_threshold(n, m, p, s):
    """
    t_n = mu * (1 - tau_n) with mu = C(n,m) p s^2 and tau_n = log(n) / sqrt(mu).

    tau_n is clamped below 1; the result is flagged degenerate when mu = 0 or
    the unclamped tau_n >= 1, in which case t_n = 0.
    """
    if not 0.0 < p < 1.0 or not 0.0 <= s <= 1.0:
        raise DomainError(f"need 0 < p < 1 and 0 <= s <= 1, got p={p}, s={s}")
    if not 1 <= m <= n:
        raise ParameterError(f"need 1 <= m <= n, got n={n}, m={m}")
    mu = comb(n, m) * p * s * s
    if mu <= 0:
        logger.warning(f"ER threshold degenerate: no signal at n={n}, m={m}, p={p}, s={s}")
        return ThresholdResult(value=0.0, kind="asymptotic", degenerate=True)
    tau = log(n) / sqrt(mu)
    if tau >= 1.0:
        logger.warning(f"ER threshold degenerate: tau_n={tau:.6g} >= 1 at n={n}, m={m}, p={p}, s={s}")
        return ThresholdResult(value=0.0, kind="asymptotic", degenerate=True)
    return ThresholdResult(value=mu * (1.0 - tau), kind="asymptotic", degenerate=False)


def asymptotic_threshold(spec):
    if isinstance(spec, GaussianModelSpec):
        return gaussian_threshold(spec.n, spec.m, spec.rho)
    if isinstance(spec, ERModelSpec):
        return er_threshold(spec.n, spec.m, spec.p, spec.s)
    raise ParameterError(f"unknown model spec {type(spec).__name__}")


def threshold_from_null_statistics(values, level):
    """Empirical (1 - level) quantile of null statistics (inverted-CDF definition)."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) < MIN_CALIBRATION_TRIALS:
        raise ParameterError(f"calibration needs >= {MIN_CALIBRATION_TRIALS} null trials, got {len(values)}")
    if not 0.0 < level <= 1.0:
        raise ParameterError(f"level must lie in (0, 1], got {level}")
    value = float(np.quantile(values, 1.0 - level, method="inverted_cdf"))
    return ThresholdResult(value=value, kind="calibrated", degenerate=bool(np.all(values == values[0])))


def calibrated_threshold(spec, level, trials, method="exact", restarts=10, rng=None):
    """
    Desk-scale threshold: the empirical (1 - level) quantile of the maximized
    statistic over `trials` fresh H0 draws.

    Parameters:
        spec (GaussianModelSpec | ERModelSpec): Model whose null law is sampled
        level (float): Test level alpha in (0, 1]
        trials (int): Number of null draws, at least 20
        method (str): "exact" or "heuristic"
        restarts (int): Heuristic restarts
        rng (Generator | int | None): Random state; the same seed reproduces the threshold

    Returns:
        ThresholdResult: kind "calibrated"
    """
    if trials < MIN_CALIBRATION_TRIALS:
        raise ParameterError(f"calibration needs >= {MIN_CALIBRATION_TRIALS} null trials, got {trials}")
    rng = as_generator(rng)
    values = []
    for _ in range(trials):
        pair = sample_pair(spec, "h0", rng)
        values.append(max_statistic(pair.a1, pair.a2, method=method, restarts=restarts, rng=rng).statistic)
    result = threshold_from_null_statistics(values, level)
    logger.info(f"Calibrated threshold {result.value:.6g} at level {level} from {trials} null draws")
    return result


def decide(outcome, threshold):
    """Attach a threshold to a TestOutcome: reject H0 iff statistic >= threshold."""
    return TestOutcome(
        **outcome.model_dump(exclude={"threshold", "reject_h0", "threshold_kind", "degenerate"}),
        threshold=threshold.value,
        reject_h0=bool(outcome.statistic >= threshold.value),
        threshold_kind=threshold.kind,
        degenerate=threshold.degenerate,
    )


# --- Likelihood ---------------------------------------------------------------

def _weighted_log_terms(counts, ratios):
    total = 0.0
    for count, ratio in zip(counts, ratios):
        if count == 0:
            continue
        if ratio == 0.0:
            return -np.inf
        total += count * log(ratio)
    return total


def log_likelihood_ratio(a1, a2, pi, spec):
    """
    log of the H1 density (given the planted alignment pi) over the H0 density.

    It is an increasing affine function of T(pi) for fixed (A1, A2), so the
    permutation maximizing T also maximizes the likelihood.
    """
    _check_pair(a1, a2, pi)
    if (spec.n, spec.m) != (a1.n, a1.m):
        raise ParameterError("model spec does not match the tensors' (n, m)")
    x = a1.values
    y = a2.values[edge_permutation(pi, a1.m)]
    t = float(np.dot(x, y))
    edges = len(x)

    if isinstance(spec, GaussianModelSpec):
        r2 = spec.rho ** 2
        return (
            -0.5 * edges * log1p(-r2)
            - r2 / (2.0 * (1.0 - r2)) * float(np.dot(x, x) + np.dot(y, y))
            + spec.rho / (1.0 - r2) * t
        )

    if isinstance(spec, ERModelSpec):
        if not set(np.unique(np.concatenate([x, y])).tolist()) <= {0.0, 1.0}:
            raise ParameterError("ER likelihood needs binary tensors")
        p, s = spec.p, spec.s
        ps = p * s
        n11 = t
        n10 = float(x.sum()) - t
        n01 = float(y.sum()) - t
        n00 = edges - n11 - n10 - n01
        if ps == 0.0:
            return 0.0 if n00 == edges else -np.inf
        ratios = (
            1.0 / p,
            (1.0 - s) / (1.0 - ps),
            (1.0 - s) / (1.0 - ps),
            (1.0 - 2.0 * ps + ps * s) / (1.0 - ps) ** 2,
        )
        return _weighted_log_terms((n11, n10, n01, n00), ratios)

    raise ParameterError(f"unknown model spec {type(spec).__name__}")


def likelihood_slope(spec):
    """d log L / d T for fixed (A1, A2)."""
    if isinstance(spec, GaussianModelSpec):
        return spec.rho / (1.0 - spec.rho ** 2)
    ps = spec.p * spec.s
    if spec.s == 1.0:
        return np.inf
    return log((1.0 - 2.0 * ps + ps * spec.s) / (spec.p * (1.0 - spec.s) ** 2))
