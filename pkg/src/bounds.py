"""
Numeric evaluators for the tail inequalities, special functions and
closed-form threshold curves used by the detection analysis.

All logarithms are natural.
"""
from math import ceil, comb, e, exp, floor, isfinite, lgamma, log, log1p, sqrt

from scipy import stats

from src.statistic import er_threshold, gaussian_threshold
from utils.config import get_hanson_wright_constant
from utils.errors import ConvergenceError, DomainError, ParameterError
from utils.logger import get_logger
from utils.models import TailBoundReport

# Initialize logger
logger = get_logger(__name__)

BRANCH_POINT = -1.0 / e
# Inputs this far below -1/e are treated as rounding noise on the branch point.
BRANCH_POINT_SLACK = 1e-15
_HALLEY_MAX_ITER = 100
# Guards ceil/floor against (1 + delta) * mu landing a hair off an integer.
_INTEGER_SNAP = 1e-9


def gaussian_rho2_threshold(n, m):
    """rho^2 = 2 n log n / C(n,m); values >= 1 mean no feasible rho at this n."""
    if not 1 <= m < n:
        raise ParameterError(f"need n > m >= 1, got n={n}, m={m}")
    return 2.0 * n * log(n) / comb(n, m)


def alpha_p(p):
    """(log(1/p) - 1 + p) * p; non-negative on (0, 1] and zero only at p = 1."""
    if p <= 0 or p > 1:
        raise DomainError(f"alpha_p needs 0 < p <= 1, got {p}")
    return (-log(p) - 1.0 + p) * p


def er_s2_threshold(n, m, p):
    """s^2 = n log n / (C(n,m) * alpha_p); infinite (degenerate) at p = 1."""
    if not 1 <= m < n:
        raise ParameterError(f"need n > m >= 1, got n={n}, m={m}")
    alpha = alpha_p(p)
    if alpha == 0.0:
        logger.warning("er_s2_threshold diverges at p = 1")
        return float("inf")
    return n * log(n) / (comb(n, m) * alpha)


# --- Chernoff -----------------------------------------------------------------

def chernoff_upper(mu, delta):
    """P(X >= (1 + delta) mu) <= exp(-mu [(1 + delta) log(1 + delta) - delta])."""
    if mu <= 0 or delta <= 0:
        raise DomainError(f"chernoff_upper needs mu > 0 and delta > 0, got mu={mu}, delta={delta}")
    return exp(-mu * ((1.0 + delta) * log1p(delta) - delta))


def chernoff_lower(mu, delta):
    """P(X <= (1 - delta) mu) <= exp(-delta^2 mu / 2)."""
    if mu <= 0 or not 0 < delta <= 1:
        raise DomainError(f"chernoff_lower needs mu > 0 and 0 < delta <= 1, got mu={mu}, delta={delta}")
    return exp(-delta * delta * mu / 2.0)


def binomial_upper_tail(trials, p, x):
    """Exact P(Bin(trials, p) >= x)."""
    k = ceil(x - _INTEGER_SNAP)
    return float(stats.binom.sf(k - 1, trials, p))


def binomial_lower_tail(trials, p, x):
    """Exact P(Bin(trials, p) <= x)."""
    return float(stats.binom.cdf(floor(x + _INTEGER_SNAP), trials, p))


def poisson_upper_tail(mu, x):
    """Exact P(Poisson(mu) >= x)."""
    return float(stats.poisson.sf(ceil(x - _INTEGER_SNAP) - 1, mu))


def chernoff_report(mu, delta, side="upper", trials=None):
    """
    Chernoff bound with, when `trials` is given, the exact Bin(trials, mu/trials)
    tail as an oracle.

    Returns:
        TailBoundReport: the report validates exact <= bound
    """
    if side == "upper":
        bound = chernoff_upper(mu, delta)
    elif side == "lower":
        bound = chernoff_lower(mu, delta)
    else:
        raise ParameterError(f"side must be 'upper' or 'lower', got {side!r}")

    exact = None
    if trials is not None:
        if trials < mu:
            raise ParameterError(f"trials={trials} cannot have mean {mu}")
        p = mu / trials
        if side == "upper":
            exact = binomial_upper_tail(trials, p, (1.0 + delta) * mu)
        else:
            exact = binomial_lower_tail(trials, p, (1.0 - delta) * mu)
    return TailBoundReport(mu=mu, deviation=delta, side=side, bound=bound, exact=exact, trials=trials)


# --- Lambert W ----------------------------------------------------------------

def _halley(x, w):
    for _ in range(_HALLEY_MAX_ITER):
        c1 = exp(w)
        c2 = w * c1 - x
        w1 = w + 1.0 if w != -1.0 else w
        dw = c2 / (c1 * w1 - (w + 2.0) * c2 / (2.0 * w1))
        w -= dw
        if abs(dw) < 0.7e-16 * (2.0 + abs(w)):
            return w
    # Near the branch point the step can stall at rounding level without meeting the step test.
    if abs(w * exp(w) - x) <= 1e-12 * max(1.0, abs(x)):
        return w
    raise ConvergenceError(f"Halley iteration for W({x}) did not converge")


def lambert_w(x, branch="principal"):
    """
    Real Lambert W: the solution w of w * exp(w) = x.

    Parameters:
        x (float): Argument; x >= -1/e on the principal branch, -1/e <= x < 0 on the lower one
        branch (str): "principal" (W_0, w >= -1) or "lower" (W_-1, w <= -1)

    Returns:
        float: w
    """
    x = float(x)
    if branch not in ("principal", "lower"):
        raise ParameterError(f"branch must be 'principal' or 'lower', got {branch!r}")
    if x < BRANCH_POINT - BRANCH_POINT_SLACK:
        raise DomainError(f"Lambert W is not real for x={x} < -1/e")
    if x <= BRANCH_POINT:
        return -1.0
    if branch == "lower" and x >= 0:
        raise DomainError(f"the lower branch needs -1/e <= x < 0, got {x}")
    if x == 0.0:
        return 0.0

    # distance from the branch point in the local series variable
    p = sqrt(2.0 * (e * x + 1.0))
    if branch == "principal":
        if abs(x - BRANCH_POINT) <= 1.5:
            w = p - 1.0
        else:
            lx = log(x)
            w = lx - log(lx)
    else:
        if x < -0.25:
            w = -1.0 - p
        else:
            lx = log(-x)
            w = lx - log(-lx)
    return _halley(x, w)


def poissonization_tail_threshold(mu, t):
    """
    tau = mu * exp(1 + W_0((t - mu) / (e mu))), a level with P(X >= tau) <= e^-t
    for X binomial or Poisson with mean mu, when t >= mu.
    """
    if mu <= 0:
        raise DomainError(f"mu must be > 0, got {mu}")
    if t < mu:
        raise DomainError(f"poissonization needs t >= mu, got t={t}, mu={mu}")
    return mu * exp(1.0 + lambert_w((t - mu) / (e * mu)))


def poissonization_report(mu, t, trials=None):
    """The e^-t bound at level tau with the exact Poisson (or Bin(trials, mu/trials)) tail."""
    tau = poissonization_tail_threshold(mu, t)
    if trials is None:
        exact = poisson_upper_tail(mu, tau)
    else:
        exact = binomial_upper_tail(trials, mu / trials, tau)
    return TailBoundReport(mu=mu, deviation=t, deviation_kind="t", side="upper", bound=exp(-t), exact=exact, trials=trials)


# --- zeta / gamma -------------------------------------------------------------

def _check_zeta_inputs(k, n, m, p, s):
    if not 1 <= m <= k <= n:
        raise ParameterError(f"need m <= k <= n, got k={k}, n={n}, m={m}")
    if p * s * s <= 0:
        raise DomainError(f"need p s^2 > 0, got p={p}, s={s}")


def gamma(k, n, m, p, s):
    """k log(2en/k) / (C(k,m) p s^2)."""
    _check_zeta_inputs(k, n, m, p, s)
    return k * log(2.0 * e * n / k) / (comb(k, m) * p * s * s)


def zeta(k, n, m, p, s):
    """C(k,m) p s^2 * exp(1 + W_0((gamma - 1) / e))."""
    g = gamma(k, n, m, p, s)
    arg = (g - 1.0) / e
    assert arg >= BRANCH_POINT, "gamma >= 0 keeps the W argument above -1/e"
    return comb(k, m) * p * s * s * exp(1.0 + lambert_w(arg))


# --- Hanson-Wright ------------------------------------------------------------

def hanson_wright_bound(d, delta_conf, constant=None):
    """C * (sqrt(d log(1/delta)) + log(1/delta)); C defaults to HYPERCORR_HW_CONSTANT."""
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if not 0 < delta_conf < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta_conf}")
    constant = get_hanson_wright_constant() if constant is None else constant
    level = -log(delta_conf)
    return constant * (sqrt(d * level) + level)


# --- Union bounds on the null maximum -----------------------------------------

def gaussian_null_log_union_bound(n, m, rho):
    """
    log of n! * exp(-lambda t_n) * (1 - lambda^2)^(-C/2) with lambda = t_n / C(n,m),
    an upper bound on log P_H0(T_n >= t_n). Returns 0 when t_n <= 0.
    """
    threshold = gaussian_threshold(n, m, rho)
    edges = comb(n, m)
    lam = threshold.value / edges
    if not 0.0 < lam < 1.0:
        return 0.0
    return lgamma(n + 1) - lam * threshold.value - 0.5 * edges * log1p(-lam * lam)


def er_null_log_union_bound(n, m, p, s):
    """
    log of n! * exp(-mu [x log x + 1 - x]) with mu = C(n,m) p^2 s^2 and
    x = (1 - tau_n) / p, an upper bound on log P_H0(T_n >= t_n). Returns 0 when x <= 1.
    """
    threshold = er_threshold(n, m, p, s)
    if threshold.degenerate:
        return 0.0
    mu = comb(n, m) * (p * s) ** 2
    x = threshold.value / mu
    if x <= 1.0:
        return 0.0
    return lgamma(n + 1) - mu * (x * log(x) + 1.0 - x)


# --- Named evaluation for the CLI ---------------------------------------------

def _threshold_flags(value):
    return ["infeasible"] if not isfinite(value) or value >= 1.0 else []


def _vacuous(value):
    return ["vacuous"] if value >= 0.0 else []


def _threshold_record(result):
    return result.value, (["degenerate"] if result.degenerate else [])


EVALUATORS = {
    "chernoff-upper": (("mu", float), ("delta", float)),
    "chernoff-lower": (("mu", float), ("delta", float)),
    "lambert-w": (("x", float), ("branch", str)),
    "zeta": (("k", int), ("n", int), ("m", int), ("p", float), ("s", float)),
    "gamma": (("k", int), ("n", int), ("m", int), ("p", float), ("s", float)),
    "alpha-p": (("p", float),),
    "gauss-threshold": (("n", int), ("m", int)),
    "er-threshold": (("n", int), ("m", int), ("p", float)),
    "poissonization": (("mu", float), ("t", float)),
    "hanson-wright": (("d", float), ("delta", float)),
    "gauss-tn": (("n", int), ("m", int), ("rho", float)),
    "er-tn": (("n", int), ("m", int), ("p", float), ("s", float)),
    "gauss-null-union": (("n", int), ("m", int), ("rho", float)),
    "er-null-union": (("n", int), ("m", int), ("p", float), ("s", float)),
}

_OPTIONAL = {
    "lambert-w": {"branch": "principal"},
    "chernoff-upper": {"trials": None},
    "chernoff-lower": {"trials": None},
    "poissonization": {"trials": None},
}


def _coerce(name, args):
    params = dict(EVALUATORS[name])
    optional = _OPTIONAL.get(name, {})
    unknown = set(args) - set(params) - set(optional)
    if unknown:
        raise ParameterError(f"{name} does not take {sorted(unknown)}")
    inputs = {}
    for key, cast in params.items():
        if key in args:
            raw = args[key]
        elif key in optional:
            raw = optional[key]
        else:
            raise ParameterError(f"{name} needs argument {key!r}")
        try:
            inputs[key] = cast(raw)
        except (TypeError, ValueError) as e:
            raise ParameterError(f"{name}: cannot read {key}={raw!r} as {cast.__name__}") from e
    if "trials" in optional and args.get("trials") is not None:
        inputs["trials"] = int(args["trials"])
    return inputs


def evaluate(name, **args):
    """
    Evaluate a named bound for the `bounds` CLI subcommand.

    Returns:
        dict: {name, inputs, value, flags} plus `exact` when an oracle tail was requested
    """
    if name not in EVALUATORS:
        raise ParameterError(f"unknown bound {name!r}; choose from {sorted(EVALUATORS)}")
    inputs = _coerce(name, args)
    flags = []
    record = {"name": name, "inputs": inputs}

    if name in ("chernoff-upper", "chernoff-lower"):
        report = chernoff_report(inputs["mu"], inputs["delta"], side=name.split("-")[1], trials=inputs.get("trials"))
        value = report.bound
        if report.exact is not None:
            record["exact"] = report.exact
    elif name == "lambert-w":
        value = lambert_w(inputs["x"], inputs["branch"])
    elif name == "zeta":
        value = zeta(**inputs)
    elif name == "gamma":
        value = gamma(**inputs)
    elif name == "alpha-p":
        value = alpha_p(inputs["p"])
    elif name == "gauss-threshold":
        value = gaussian_rho2_threshold(inputs["n"], inputs["m"])
        flags = _threshold_flags(value)
    elif name == "er-threshold":
        value = er_s2_threshold(inputs["n"], inputs["m"], inputs["p"])
        flags = _threshold_flags(value)
    elif name == "poissonization":
        value = poissonization_tail_threshold(inputs["mu"], inputs["t"])
        if inputs.get("trials") is not None:
            record["exact"] = poissonization_report(inputs["mu"], inputs["t"], inputs["trials"]).exact
    elif name == "hanson-wright":
        value = hanson_wright_bound(inputs["d"], inputs["delta"])
    elif name == "gauss-tn":
        value, flags = _threshold_record(gaussian_threshold(**inputs))
    elif name == "er-tn":
        value, flags = _threshold_record(er_threshold(**inputs))
    elif name == "gauss-null-union":
        value = gaussian_null_log_union_bound(**inputs)
        flags = _vacuous(value)
    else:
        value = er_null_log_union_bound(**inputs)
        flags = _vacuous(value)

    record["value"] = value
    record["flags"] = flags
    return record
