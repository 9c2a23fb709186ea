"""
Reproducible Monte Carlo power experiments.

Every trial draws from its own stream keyed by
(master_seed, grid or calibration index, domain, trial index), so a report
depends only on the configuration and never on the worker count or the
order in which joblib schedules the tasks.
"""
import time
from math import sqrt
from pathlib import Path

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import stats

from src.bounds import er_s2_threshold, gaussian_rho2_threshold
from src.sampling import er_correlation, sample_pair
from src.statistic import asymptotic_threshold, max_statistic, threshold_from_null_statistics
from utils.config import get_exact_cap, resolve_workers
from utils.errors import ArtifactIOError, CapExceededError, DegenerateRunError
from utils.logger import get_logger
from utils.models import ERModelSpec, ExperimentReport, GaussianModelSpec, GridPointReport
from utils.rng import DOMAIN_CALIBRATION, DOMAIN_H0, DOMAIN_H1, trial_stream

# Initialize logger
logger = get_logger(__name__)

CSV_COLUMNS = [
    "model", "n", "m", "c", "rho_or_s", "threshold_kind",
    "reject_rate_h0", "reject_rate_h1", "ci_lo_h1", "ci_hi_h1", "degenerate",
]
WILSON_CONFIDENCE = 0.95


def wilson_interval(successes, trials, confidence=WILSON_CONFIDENCE):
    """
    Wilson score interval for a binomial proportion.

    Returns:
        tuple[float, float]: (lo, hi), always containing successes / trials
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = float(stats.norm.ppf(0.5 + confidence / 2.0))
    rate = successes / trials
    denom = 1.0 + z * z / trials
    center = (rate + z * z / (2.0 * trials)) / denom
    half = z / denom * sqrt(rate * (1.0 - rate) / trials + z * z / (4.0 * trials * trials))
    lo = min(max(0.0, center - half), rate)
    hi = max(min(1.0, center + half), rate)
    return lo, hi


def _spec_at(model, value):
    if isinstance(model, GaussianModelSpec):
        return GaussianModelSpec(n=model.n, m=model.m, rho=value)
    return ERModelSpec(n=model.n, m=model.m, p=model.p, s=value)


def build_grid(config):
    """
    Grid points of an experiment as dicts with keys index, value (rho or s), c,
    spec (None when skipped) and skip_reason.
    """
    model = config.model
    gaussian = isinstance(model, GaussianModelSpec)
    if gaussian:
        base = gaussian_rho2_threshold(model.n, model.m)
        own_value = model.rho
    else:
        base = er_s2_threshold(model.n, model.m, model.p)
        own_value = model.s

    if config.sweep is not None:
        entries = [(c, sqrt(c * base)) for c in config.sweep]
    elif config.sweep_values is not None:
        entries = [(v * v / base, v) for v in config.sweep_values]
    else:
        entries = [(own_value * own_value / base, own_value)]

    grid = []
    for index, (c, value) in enumerate(entries):
        reason = None
        if gaussian and value >= 1.0:
            reason = f"rho^2 = {value * value:.6g} >= 1"
        elif not gaussian and value > 1.0:
            reason = f"s^2 = {value * value:.6g} > 1"
        if reason:
            logger.warning(f"Skipping grid point {index} (c={c:.6g}): {reason}")
        grid.append({
            "index": index,
            "c": c,
            "value": value,
            "spec": None if reason else _spec_at(model, value),
            "skip_reason": reason,
        })
    return grid


def null_law_key(spec):
    """Grid points sharing this key share one H0 law, hence one calibration."""
    if isinstance(spec, GaussianModelSpec):
        return ("gaussian", spec.n, spec.m)
    return ("er", spec.n, spec.m, spec.p, spec.s)


def run_trial(spec, hypothesis, master_seed, slot, domain, trial, method, restarts):
    """One Monte Carlo draw: sample a pair and maximize the statistic. Returns a sortable record."""
    rng = trial_stream(master_seed, slot, domain, trial)
    pair = sample_pair(spec, hypothesis, rng)
    outcome = max_statistic(pair.a1, pair.a2, method=method, restarts=restarts, rng=rng)
    return (slot, domain, trial, outcome.statistic)


def _summarize(values, threshold):
    values = np.asarray(values, dtype=np.float64)
    rejections = int(np.count_nonzero(values >= threshold))
    rate = rejections / len(values)
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return rate, wilson_interval(rejections, len(values)), float(np.mean(values)), sd


def run_experiment(config):
    """
    Run every grid point of an experiment.

    Parameters:
        config (ExperimentConfig): Validated experiment configuration

    Returns:
        ExperimentReport: per-point rejection rates, Wilson intervals, statistic
        moments and threshold flags, plus the wall-clock runtime
    """
    started = time.perf_counter()
    model = config.model
    method = config.statistic.method
    restarts = config.statistic.restarts
    if method == "exact" and model.n > get_exact_cap():
        raise CapExceededError(
            f"exact statistic needs n <= {get_exact_cap()}, config has n={model.n}; use method 'heuristic'"
        )
    workers = resolve_workers(config.workers)
    logger.info(
        f"Running {model.model} experiment n={model.n}, m={model.m}, trials={config.trials}, "
        f"method={method}, threshold={config.threshold.kind}, workers={workers}"
    )

    grid = build_grid(config)
    live = [point for point in grid if point["spec"] is not None]
    if not live:
        raise DegenerateRunError(f"all {len(grid)} grid points are infeasible")

    calibration_slots = {}
    if config.threshold.kind == "calibrated":
        for point in live:
            calibration_slots.setdefault(null_law_key(point["spec"]), (len(calibration_slots), point["spec"]))

    tasks = []
    for slot, spec in calibration_slots.values():
        for trial in range(config.threshold.null_trials):
            tasks.append((spec, "h0", slot, DOMAIN_CALIBRATION, trial))
    for point in live:
        for trial in range(config.trials):
            tasks.append((point["spec"], "h0", point["index"], DOMAIN_H0, trial))
            tasks.append((point["spec"], "h1", point["index"], DOMAIN_H1, trial))

    records = Parallel(n_jobs=workers)(
        delayed(run_trial)(spec, hyp, config.master_seed, slot, domain, trial, method, restarts)
        for spec, hyp, slot, domain, trial in tasks
    )
    if config.deterministic_order:
        records = sorted(records, key=lambda r: (r[0], r[1], r[2]))

    by_key = {}
    for slot, domain, _, statistic in records:
        by_key.setdefault((slot, domain), []).append(statistic)

    points = []
    for point in grid:
        spec = point["spec"]
        common = {
            "index": point["index"],
            "model": model.model,
            "n": model.n,
            "m": model.m,
            "c": point["c"],
            "rho_or_s": point["value"],
            "threshold_kind": config.threshold.kind,
        }
        if spec is None:
            correlation = point["value"] if isinstance(model, GaussianModelSpec) else float("nan")
            points.append(GridPointReport(
                **common, correlation=correlation, skipped=True, skip_reason=point["skip_reason"], degenerate=True,
            ))
            continue

        asymptotic = asymptotic_threshold(spec)
        if config.threshold.kind == "calibrated":
            slot, _ = calibration_slots[null_law_key(spec)]
            threshold = threshold_from_null_statistics(by_key[(slot, DOMAIN_CALIBRATION)], config.threshold.level)
        else:
            threshold = asymptotic

        rate0, ci0, mean0, sd0 = _summarize(by_key[(point["index"], DOMAIN_H0)], threshold.value)
        rate1, ci1, mean1, sd1 = _summarize(by_key[(point["index"], DOMAIN_H1)], threshold.value)
        correlation = spec.rho if isinstance(spec, GaussianModelSpec) else er_correlation(spec.p, spec.s)
        points.append(GridPointReport(
            **common,
            correlation=correlation,
            threshold=threshold.value,
            asymptotic_threshold=asymptotic.value,
            degenerate=threshold.degenerate,
            trials=config.trials,
            reject_rate_h0=rate0,
            reject_rate_h1=rate1,
            ci_h0=ci0,
            ci_h1=ci1,
            mean_h0=mean0,
            sd_h0=sd0,
            mean_h1=mean1,
            sd_h1=sd1,
            tv_lower_bound=abs(rate1 - rate0),
        ))
        logger.info(
            f"Grid point {point['index']} c={point['c']:.4g} value={point['value']:.4g}: "
            f"H0 rate {rate0:.3f}, H1 rate {rate1:.3f}, threshold {threshold.value:.6g}"
        )

    runtime = time.perf_counter() - started
    logger.info(f"Experiment finished in {runtime:.2f}s over {len(records)} trials")
    return ExperimentReport(config=config, points=points, runtime_seconds=runtime)


def report_frame(report):
    """The sweep table as a DataFrame with the stable column order."""
    rows = []
    for point in report.points:
        rows.append({
            "model": point.model,
            "n": point.n,
            "m": point.m,
            "c": point.c,
            "rho_or_s": point.rho_or_s,
            "threshold_kind": point.threshold_kind,
            "reject_rate_h0": point.reject_rate_h0,
            "reject_rate_h1": point.reject_rate_h1,
            "ci_lo_h1": point.ci_h1[0] if point.ci_h1 else None,
            "ci_hi_h1": point.ci_h1[1] if point.ci_h1 else None,
            "degenerate": point.degenerate,
        })
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_sweep_frame(frame, path):
    path = Path(path)
    try:
        frame.to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        logger.error(f"Error writing sweep CSV to {path}: {e}", exc_info=True)
        raise ArtifactIOError(f"cannot write sweep CSV {path}: {e}") from e
    return path


def sweep_to_csv(report, path):
    """
    Write one row per grid point under the fixed header
    model,n,m,c,rho_or_s,threshold_kind,reject_rate_h0,reject_rate_h1,ci_lo_h1,ci_hi_h1,degenerate.
    Skipped points have empty rates and degenerate=True.
    """
    path = write_sweep_frame(report_frame(report), path)
    logger.info(f"Wrote {len(report.points)} grid points to {path}")
    return path


def read_sweep_csv(path):
    path = Path(path)
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except OSError as e:
        logger.error(f"Error reading sweep CSV from {path}: {e}", exc_info=True)
        raise ArtifactIOError(f"cannot read sweep CSV {path}: {e}") from e
