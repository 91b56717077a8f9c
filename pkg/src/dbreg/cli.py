"""``dbreg`` command-line interface.

Subcommands: ``test`` (one association test), ``simulate`` (size/power
tables from a scenario file) and ``bench`` (bootstrap vs permutation
timing). Exit status is 0 on success, 2 for invalid input and 3 for
numerical failure; errors are printed to stderr as a JSON object.
"""

import argparse
import itertools
import json
import sys
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import _parallel
from .dataio import SCHEMA, ResultDocument, ingest
from .errors import DbregError, InvalidInput
from .kernels import gram_gaussian, gram_linear
from .permutation import timing_benchmark
from .pipeline import ROUTES, association_test
from .simulation import ScenarioSpec, run_table


def _kernel(value):
    if value == "linear":
        return ("linear", None)
    name, _, bw = value.partition(":")
    if name == "gaussian" and bw:
        try:
            h = float(bw)
        except ValueError:
            pass
        else:
            if h > 0:
                return ("gaussian", h)
    raise argparse.ArgumentTypeError(f"expected 'linear' or 'gaussian:<bandwidth>', got {value!r}")


def _routes(value):
    routes = [r.strip() for r in value.split(",") if r.strip()]
    bad = [r for r in routes if r not in ROUTES]
    if bad or not routes:
        raise argparse.ArgumentTypeError(f"p-value routes must be a subset of {','.join(ROUTES)}")
    return routes


def _threads(value):
    return None if value == "auto" else int(value)


def build_parser():
    parser = argparse.ArgumentParser(prog="dbreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run the pseudo-F and/or square-root F test")
    t.add_argument("--x", required=True, help="design matrix (n x m)")
    src = t.add_mutually_exclusive_group(required=True)
    src.add_argument("--y", help="response matrix (n x k)")
    src.add_argument("--similarity", help="precomputed similarity matrix (n x n)")
    src.add_argument("--distance", help="precomputed distance matrix (n x n)")
    t.add_argument("--kernel", type=_kernel, default=("linear", None))
    t.add_argument("--method", choices=("pseudo", "sqrt", "both"), default="both")
    t.add_argument("--pvalue", type=_routes, default=["bootstrap"])
    t.add_argument("--B", type=int, default=2000)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--factor", type=float, default=None,
                   help="override the plug-in noncentrality factor (1 for centred designs)")
    t.add_argument("--add-intercept", action="store_true")
    t.add_argument("--threads", type=_threads, default=None)
    t.add_argument("--timings", action="store_true", help="include wall-clock timings")
    t.add_argument("--out")
    t.add_argument("--format", choices=("json", "tsv"))

    s = sub.add_parser("simulate", help="size/power table from a scenario file")
    s.add_argument("--scenario", required=True)
    s.add_argument("--threads", type=_threads, default=None)
    s.add_argument("--out")
    s.add_argument("--format", choices=("json", "tsv"))

    b = sub.add_parser("bench", help="time parametric bootstrap against permutation")
    b.add_argument("--n", type=int, default=500)
    b.add_argument("--B", type=int, default=1000)
    b.add_argument("--kernel", default="linear")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out")
    b.add_argument("--format", choices=("json", "tsv"))
    return parser


def _format(args, default):
    if args.format:
        return args.format
    if args.out and args.out.endswith((".tsv", ".txt")):
        return "tsv"
    if args.out and args.out.endswith(".json"):
        return "json"
    return default


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_test(args):
    if not 0 < args.alpha < 1:
        raise InvalidInput(f"alpha must lie in (0, 1), got {args.alpha}")
    if args.y is None and args.kernel != ("linear", None):
        raise InvalidInput("--kernel applies only to --y response input")
    source, X, kind = ingest(args.x, args.y, args.similarity, args.distance, args.add_intercept)
    if kind == "responses":
        name, bw = args.kernel
        S = gram_linear(source) if name == "linear" else gram_gaussian(source, bw)
    else:
        S = source
    methods = ("pseudo", "sqrt") if args.method == "both" else (args.method,)
    seed = args.seed if args.seed is not None else _parallel.fresh_seed()
    result = association_test(S, X, methods, args.pvalue, args.B, seed, args.factor, args.threads)
    config = {
        "command": "test",
        "input_kind": kind,
        "paths": {"x": args.x, "y": args.y, "similarity": args.similarity, "distance": args.distance},
        "kernel": args.kernel[0] if args.kernel[1] is None else f"gaussian:{args.kernel[1]:g}",
        "method": args.method,
        "pvalue_routes": list(args.pvalue),
        "B": args.B,
        "seed": seed,
        "alpha": args.alpha,
        "add_intercept": args.add_intercept,
        "factor": args.factor,
    }
    doc = ResultDocument.from_result(result, config, args.alpha, args.timings)
    _emit(doc.to_tsv() if _format(args, "json") == "tsv" else doc.to_json(), args.out)
    return doc


SCENARIO_KEYS = set(ScenarioSpec.__dataclass_fields__) - {"beta"}


def load_scenarios(path):
    """Expand a TOML scenario file into :class:`ScenarioSpec` cells.

    Top-level keys are defaults; each ``[[cell]]`` table overrides them and
    list-valued entries expand into one cell per combination.
    """
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror or exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    cells = doc.pop("cell", [{}])
    defaults = doc
    specs = []
    for cell in cells:
        merged = {**defaults, **cell}
        unknown = set(merged) - SCENARIO_KEYS
        if unknown:
            raise InvalidInput(f"{path}: unknown scenario keys {sorted(unknown)}")
        keys = list(merged)
        grids = [v if isinstance(v, list) else [v] for v in merged.values()]
        for combo in itertools.product(*grids):
            try:
                specs.append(ScenarioSpec(**dict(zip(keys, combo))))
            except TypeError as exc:
                raise InvalidInput(f"{path}: {exc}") from None
    return specs


def cmd_simulate(args):
    report = run_table(load_scenarios(args.scenario), args.threads)
    if _format(args, "tsv") == "tsv":
        text = report.to_tsv()
    else:
        text = json.dumps({"schema": SCHEMA, "rows": report.records()}, indent=2) + "\n"
    _emit(text, args.out)
    return report


def cmd_bench(args):
    res = timing_benchmark(args.n, args.B, args.kernel, args.seed)
    d = res.as_dict()
    if _format(args, "json") == "tsv":
        text = "\t".join(d) + "\n" + "\t".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in d.values()) + "\n"
    else:
        text = json.dumps({"schema": SCHEMA, **d}, indent=2) + "\n"
    _emit(text, args.out)
    return res


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "bench": cmd_bench}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except DbregError as exc:
        err = {"schema": SCHEMA, "error": {"type": type(exc).__name__, "message": str(exc)}}
        sys.stderr.write(json.dumps(err) + "\n")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
