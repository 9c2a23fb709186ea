"""
Command-line entry point: `python -m src.cli <subcommand> ...`.

Every subcommand prints one JSON document (sorted keys) on stdout; logs go
to stderr. Exit codes: 0 success, 2 parameter error, 3 degenerate-only run,
4 I/O error.
"""
import argparse
import json
import sys

from src import bounds, harness, second_moment, statistic, tensor_io
from src.combinatorics import Permutation, cycle_decomposition, edge_count, orbit_profile
from src.sampling import sample_pair
from utils.errors import EXIT_OK, ParameterError, exit_code_for
from utils.logger import get_logger
from utils.models import ERModelSpec, ExperimentConfig, GaussianModelSpec
from utils.rng import stream

# Initialize logger
logger = get_logger(__name__)


def _emit(record):
    print(json.dumps(record, sort_keys=True))


def _model_spec(args):
    if args.model == "gaussian":
        if args.rho is None:
            raise ParameterError("--rho is required for the gaussian model")
        return GaussianModelSpec(n=args.n, m=args.m, rho=args.rho)
    if args.p is None or args.s is None:
        raise ParameterError("--p and --s are required for the er model")
    return ERModelSpec(n=args.n, m=args.m, p=args.p, s=args.s)


def parse_kv_args(text):
    """Parse `k=v,k2=v2` into a dict of strings."""
    args = {}
    if not text:
        return args
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ParameterError(f"cannot parse {item!r}; expected key=value")
        args[key.strip()] = value.strip()
    return args


def cmd_sample(args):
    spec = _model_spec(args)
    pair = sample_pair(spec, args.hypothesis, stream(args.seed))
    params = spec.model_dump(exclude={"model", "n", "m"})
    header = {"model": spec.model, "hypothesis": args.hypothesis, "seed": args.seed, "params": params}
    written = tensor_io.write_sample_pair(pair, args.out, header)
    return {
        "model": spec.model,
        "n": spec.n,
        "m": spec.m,
        "hypothesis": args.hypothesis,
        "seed": args.seed,
        "edges": edge_count(spec.n, spec.m),
        "files": {k: str(v) for k, v in written.items()},
    }


def cmd_orbits(args):
    pi = Permutation.from_cycles(args.perm, args.n)
    profile = orbit_profile(pi, args.m)
    _, cycle_type = cycle_decomposition(pi)
    return {
        "n": args.n,
        "m": args.m,
        "perm": pi.to_cycle_string(),
        "cycle_type": {str(k): v for k, v in cycle_type.counts},
        "orbit_profile": {str(k): v for k, v in profile.counts},
        "edges": profile.edge_count,
    }


def _threshold_from_header(header):
    """Asymptotic threshold for the model recorded in a tensor header, if any."""
    model = header.get("model")
    params = header.get("params") or {}
    try:
        if model == "gaussian":
            return statistic.gaussian_threshold(header["n"], header["m"], params["rho"])
        if model == "er":
            return statistic.er_threshold(header["n"], header["m"], params["p"], params["s"])
    except KeyError:
        return None
    return None


def cmd_test(args):
    a1, header = tensor_io.read_tensor(args.a1)
    a2, _ = tensor_io.read_tensor(args.a2)
    outcome = statistic.max_statistic(a1, a2, method=args.method, restarts=args.restarts, rng=stream(args.seed))
    threshold = _threshold_from_header(header)
    if threshold is not None:
        outcome = statistic.decide(outcome, threshold)
    return outcome.model_dump(mode="json")


def cmd_second_moment(args):
    if args.quantity == "second-moment":
        evaluator = second_moment.second_moment_gaussian if args.model == "gaussian" else second_moment.second_moment_er
    elif args.model != "gaussian":
        raise ParameterError(f"{args.quantity} is defined for the gaussian model only")
    elif args.quantity == "fixed-orbit-exp":
        evaluator = second_moment.fixed_orbit_exponential_moment
    else:
        evaluator = second_moment.fixed_orbit_factor_moment
    result = evaluator(args.n, args.m, args.rho, method=args.method)
    return result.model_dump(mode="json")


def cmd_bounds(args):
    return bounds.evaluate(args.name, **parse_kv_args(args.args))


def cmd_sweep(args):
    config = ExperimentConfig.from_json_file(args.config)
    if args.workers is not None:
        config = config.model_copy(update={"workers": args.workers})
    report = harness.run_experiment(config)
    harness.sweep_to_csv(report, args.out)
    return {
        "out": str(args.out),
        "points": len(report.points),
        "skipped": sum(p.skipped for p in report.points),
        "runtime_seconds": round(report.runtime_seconds, 3),
    }


def get_args(argv=None):
    parser = argparse.ArgumentParser(prog="hypercorr", description="Hypergraph correlation detection lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw an (A1, A2) pair and write it to disk")
    p.add_argument("--model", choices=["gaussian", "er"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rho", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--hypothesis", choices=["h0", "h1"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("orbits", help="hyperedge orbit profile of a permutation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--perm", default="()", help='cycle notation, e.g. "(1 2)(3 4 5)"')
    p.set_defaults(handler=cmd_orbits)

    p = sub.add_parser("test", help="maximize T over permutations for two tensor files")
    p.add_argument("--a1", required=True)
    p.add_argument("--a2", required=True)
    p.add_argument("--method", choices=["exact", "heuristic"], default="exact")
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_test)

    p = sub.add_parser("second-moment", help="exact second moment of the likelihood ratio")
    p.add_argument("--model", choices=["gaussian", "er"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--method", choices=list(second_moment.METHODS), default="cycle_type")
    p.add_argument(
        "--quantity",
        choices=["second-moment", "fixed-orbit-exp", "fixed-orbit-factor"],
        default="second-moment",
    )
    p.set_defaults(handler=cmd_second_moment)

    p = sub.add_parser("bounds", help="evaluate a named bound or threshold")
    p.add_argument("--name", choices=sorted(bounds.EVALUATORS), required=True)
    p.add_argument("--args", default="", help="comma-separated key=value pairs")
    p.set_defaults(handler=cmd_bounds)

    p = sub.add_parser("sweep", help="run an experiment config and write the sweep CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.set_defaults(handler=cmd_sweep)

    return parser.parse_args(argv)


def main(argv=None):
    args = get_args(argv)
    try:
        _emit(args.handler(args))
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} failed (exit {code}): {e}", exc_info=True)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
