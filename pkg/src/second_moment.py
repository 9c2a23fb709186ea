"""
Exact second moments of the likelihood ratio under H0, computed by
enumerating S_n, plus the comparison of cycle-count expectations with
independent Poisson variables.

The integrand depends on the pair of planted permutations only through
sigma = pi^-1 o pi', which is uniform on S_n, so every expectation here is
an average over sigma in S_n. Two evaluation paths are provided:

- "cycle_type": one representative per conjugacy class, weighted by the
  class size n! / prod(k^n_k n_k!) (fast path).
- "traversal": every permutation, orbit profiles by explicit traversal (oracle).
"""
from collections import Counter
from dataclasses import dataclass, field
from math import comb, exp, factorial, fsum, inf, log, log1p
from typing import NamedTuple

from scipy import stats
from scipy.special import logsumexp

from src.combinatorics import (
    CycleType,
    batch_edge_permutations,
    integer_partitions,
    orbit_profile,
    orbit_profiles_from_edge_permutations,
    permutation_blocks,
)
from utils.config import get_enumeration_cap
from utils.errors import CapExceededError, ConvergenceError, DomainError, ParameterError
from utils.logger import get_logger
from utils.models import CycleComparisonResult, SecondMomentResult

# Initialize logger
logger = get_logger(__name__)

METHODS = ("cycle_type", "traversal")
SERIES_TAIL_TOLERANCE = 1e-12
SERIES_MAX_TERMS = 2000
COMPARISON_SLACK = 1e-9


class CycleClass(NamedTuple):
    cycle_type: CycleType
    size: int
    representative: object


def cycle_type_classes(n):
    """
    Conjugacy classes of S_n: every partition of n with its class size and a
    representative permutation. Sizes sum to n!.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    classes = []
    for parts in integer_partitions(n):
        cycle_type = CycleType(dict(Counter(parts)))
        classes.append(CycleClass(cycle_type, cycle_type.class_size(), cycle_type.representative()))
    return classes


def _check_enumeration(n, m):
    if not 1 <= m <= n:
        raise ParameterError(f"need 1 <= m <= n, got n={n}, m={m}")
    cap = get_enumeration_cap()
    if n > cap:
        raise CapExceededError(f"enumerating S_{n} refused (cap n <= {cap})")


def weighted_orbit_profiles(n, m, method="cycle_type"):
    """
    Distinct orbit profiles over S_n with their multiplicities.

    Returns:
        list[tuple[int, OrbitProfile]]: (number of permutations, profile), deterministic order
    """
    _check_enumeration(n, m)
    if method == "cycle_type":
        return [(cls.size, orbit_profile(cls.representative, m)) for cls in cycle_type_classes(n)]
    if method == "traversal":
        counts = Counter()
        for block in permutation_blocks(n):
            counts.update(orbit_profiles_from_edge_permutations(batch_edge_permutations(block, m)))
        return sorted(((w, p) for p, w in counts.items()), key=lambda item: item[1].counts)
    raise ParameterError(f"method must be one of {METHODS}, got {method!r}")


def _log_average(weighted_logs, n):
    """(1/n!) * sum w * exp(l), accumulated with a common shift; exact 1 when every l is 0."""
    shift = max(l for _, l in weighted_logs)
    if shift == inf:
        return inf
    total = fsum(w * exp(l - shift) for w, l in weighted_logs)
    try:
        return total * exp(shift) / factorial(n)
    except OverflowError:
        return inf


def gaussian_log_factor(profile, rho, min_length=1):
    """log prod_{k >= min_length} (1 - rho^(2k))^(-N_k)."""
    return fsum(-count * log1p(-rho ** (2 * k)) for k, count in profile.counts if k >= min_length)


def er_log_factor(profile, rho):
    """log prod_k (1 + rho^(2k))^(N_k)."""
    return fsum(count * log1p(rho ** (2 * k)) for k, count in profile.counts)


def _result(value, n, m, rho, model, method, quantity):
    logger.info(f"{quantity} ({model}) n={n}, m={m}, rho={rho}: {value:.10g} via {method}")
    return SecondMomentResult(
        value=value,
        n=n,
        m=m,
        rho=rho,
        model=model,
        permutations_enumerated=factorial(n),
        method=method,
        quantity=quantity,
    )


def _check_gaussian_rho(rho):
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")


def second_moment_gaussian(n, m, rho, method="cycle_type"):
    """
    E_H0[(Q/P)^2] for the Gaussian model:
    (1/n!) sum_sigma prod_k (1 - rho^(2k))^(-N_k(sigma)).
    """
    _check_gaussian_rho(rho)
    profiles = weighted_orbit_profiles(n, m, method)
    value = _log_average([(w, gaussian_log_factor(p, rho)) for w, p in profiles], n)
    return _result(value, n, m, rho, "gaussian", method, "second_moment")


def second_moment_er(n, m, rho, method="cycle_type"):
    """
    E_H0[(Q/P)^2] for the ER model: (1/n!) sum_sigma prod_k (1 + rho^(2k))^(N_k(sigma)).
    """
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho must lie in [0, 1], got {rho}")
    profiles = weighted_orbit_profiles(n, m, method)
    value = _log_average([(w, er_log_factor(p, rho)) for w, p in profiles], n)
    return _result(value, n, m, rho, "er", method, "second_moment")


def fixed_orbit_exponential_moment(n, m, rho, method="cycle_type"):
    """(1/n!) sum_sigma exp(N_1(sigma) rho^2 / (1 - rho^2))."""
    _check_gaussian_rho(rho)
    x = rho * rho / (1.0 - rho * rho)
    profiles = weighted_orbit_profiles(n, m, method)
    value = _log_average([(w, p.count(1) * x) for w, p in profiles], n)
    return _result(value, n, m, rho, "gaussian", method, "fixed_orbit_exponential")


def fixed_orbit_factor_moment(n, m, rho, method="cycle_type"):
    """
    (1/n!) sum_sigma (1 - rho^2)^(-N_1(sigma)), the fixed-orbit factor of the
    Gaussian second moment. Never exceeds fixed_orbit_exponential_moment since
    -log(1 - y) <= y / (1 - y).
    """
    _check_gaussian_rho(rho)
    profiles = weighted_orbit_profiles(n, m, method)
    value = _log_average([(w, -p.count(1) * log1p(-rho * rho)) for w, p in profiles], n)
    return _result(value, n, m, rho, "gaussian", method, "fixed_orbit_factor")


def higher_orbit_factor_bound(n, m, rho):
    """(1 - rho^4)^(-C(n,m)), dominating prod_{k >= 2} (1 - rho^(2k))^(-N_k) for every sigma."""
    _check_gaussian_rho(rho)
    if not 1 <= m <= n:
        raise ParameterError(f"need 1 <= m <= n, got n={n}, m={m}")
    try:
        return exp(-comb(n, m) * log1p(-rho ** 4))
    except OverflowError:
        return inf


# --- Cycle counts against independent Poisson variables -----------------------

@dataclass(frozen=True)
class CycleFunctional:
    """
    Non-negative functional g of the cycle counts (z_1, z_2, ...), restricted to
    log g = A(z_1) + c(z_1) * z_2:

    - "constant": g = 1
    - "exp_poly": g = exp(a C(z_1, m) + b z_2 C(z_1, m - 2)), a, b >= 0
    - "indicator_all_fixed": g = 1{z_1 = n}
    """
    kind: str = "constant"
    a: float = 0.0
    b: float = 0.0
    m: int = 3
    n: int = field(default=0)

    def __post_init__(self):
        if self.kind not in ("constant", "exp_poly", "indicator_all_fixed"):
            raise ParameterError(f"unknown cycle functional {self.kind!r}")
        if self.a < 0 or self.b < 0:
            raise ParameterError(f"coefficients must be >= 0, got a={self.a}, b={self.b}")
        if self.kind == "exp_poly" and self.m < 1:
            raise ParameterError(f"m must be >= 1, got {self.m}")

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def as_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b, "m": self.m}

    @property
    def uses_two_cycles(self):
        return self.kind == "exp_poly" and self.b > 0

    def log_base(self, z1):
        if self.kind == "exp_poly":
            return self.a * comb(z1, self.m)
        if self.kind == "indicator_all_fixed":
            return 0.0 if z1 == self.n else -inf
        return 0.0

    def two_cycle_coefficient(self, z1):
        if self.kind == "exp_poly" and self.m >= 2:
            return self.b * comb(z1, self.m - 2)
        return 0.0

    def log_value(self, z1, z2):
        base = self.log_base(z1)
        if base == -inf:
            return -inf
        return base + self.two_cycle_coefficient(z1) * z2


def _bounded_count_vectors(L, budget):
    """All (z_1, ..., z_L) with sum t * z_t <= budget."""
    if L == 0:
        yield ()
        return
    for zL in range(budget // L + 1):
        for head in _bounded_count_vectors(L - 1, budget - L * zL):
            yield head + (zL,)


def _truncated_poisson_expectation(g, L, n):
    """E[g(Z) 1{sum t Z_t <= n}] with Z_t ~ Poisson(1/t) independent, as a log value."""
    logs = []
    for z in _bounded_count_vectors(L, n):
        z1 = z[0]
        z2 = z[1] if L >= 2 else 0
        log_g = g.log_value(z1, z2)
        if log_g == -inf:
            continue
        log_p = fsum(stats.poisson.logpmf(zt, 1.0 / t) for t, zt in enumerate(z, start=1))
        logs.append(log_g + log_p)
    return logsumexp(logs) if logs else -inf


def _series_poisson_expectation(g, n):
    """
    E[g(Z_1, Z_2)] summed over z_1 with the Z_2 expectation in closed form
    (the Poisson(1/2) moment generating function).

    exp(a C(z_1, m)) with m >= 2, or exp(b z_2 C(z_1, m - 2)) with m >= 3,
    outgrows the Poisson(1) tail and is refused with ConvergenceError.
    """
    if g.kind == "exp_poly" and ((g.a > 0 and g.m >= 2) or (g.b > 0 and g.m >= 3)):
        raise ConvergenceError(
            f"E g(Z) diverges for {g.as_dict()}: the exponent grows faster than log z_1!; use truncate=True"
        )
    if g.kind == "indicator_all_fixed":
        return float(stats.poisson.logpmf(n, 1.0))

    logs = []
    for z1 in range(SERIES_MAX_TERMS):
        inner = 0.5 * (exp(g.two_cycle_coefficient(z1)) - 1.0)
        logs.append(g.log_base(z1) + inner + float(stats.poisson.logpmf(z1, 1.0)))
        if z1 > n:
            step = logs[-1] - logs[-2]
            # ratio of consecutive terms is decreasing, so a ratio below 1/2 bounds the tail by the last term
            if step < log(0.5) and logs[-1] < logsumexp(logs) + log(SERIES_TAIL_TOLERANCE):
                return float(logsumexp(logs))
    raise ConvergenceError(f"Poisson series for {g.as_dict()} did not converge in {SERIES_MAX_TERMS} terms")


def poisson_cycle_comparison(n, L, g, truncate=True):
    """
    Compare E g(C_1, ..., C_L) over uniform S_n with e^(H_L) E g(Z_1, ..., Z_L),
    Z_t ~ Poisson(1/t) independent, H_L the L-th harmonic number.

    With `truncate` (default) g is multiplied by 1{sum t z_t <= n}, which leaves
    the left side unchanged and makes the right side a finite sum. Without it
    the right side is a series that must converge.

    Parameters:
        n (int): Permutation size, at most the enumeration cap
        L (int): Number of leading cycle counts, 1 <= L <= n
        g (CycleFunctional | dict): Functional from the library

    Returns:
        CycleComparisonResult: lhs, rhs and holds = lhs <= rhs (1 + 1e-9)
    """
    if not isinstance(g, CycleFunctional):
        g = CycleFunctional.from_dict(g)
    if g.kind == "indicator_all_fixed" and g.n != n:
        g = CycleFunctional(kind=g.kind, a=g.a, b=g.b, m=g.m, n=n)
    _check_enumeration(n, 1)
    if not 1 <= L <= n:
        raise ParameterError(f"L must satisfy 1 <= L <= n={n}, got {L}")

    effective_L = L
    if g.uses_two_cycles and L < 2:
        effective_L = 2
        logger.warning(f"g depends on the 2-cycle count; comparing with L=2 instead of L={L}")
    if effective_L > n:
        raise ParameterError(f"g needs L >= 2 but n={n}")

    lhs = fsum(
        cls.size * exp(g.log_value(cls.cycle_type.count(1), cls.cycle_type.count(2)))
        for cls in cycle_type_classes(n)
    ) / factorial(n)

    if truncate:
        log_expectation = _truncated_poisson_expectation(g, effective_L, n)
    else:
        log_expectation = _series_poisson_expectation(g, n)
    harmonic = fsum(1.0 / t for t in range(1, effective_L + 1))
    rhs = exp(harmonic + log_expectation) if log_expectation > -inf else 0.0

    holds = bool(lhs <= rhs * (1.0 + COMPARISON_SLACK))
    logger.info(f"Cycle comparison n={n}, L={effective_L}, g={g.as_dict()}: lhs={lhs:.10g}, rhs={rhs:.10g}, holds={holds}")
    return CycleComparisonResult(
        n=n,
        L=L,
        effective_L=effective_L,
        g=g.as_dict(),
        lhs=lhs,
        rhs=rhs,
        holds=holds,
        truncated=truncate,
    )
