"""``ktriangle`` command line: generate, sample, discover, estimate, evaluate, experiment.

Exit status: 0 success, 1 usage error, 2 runtime failure.  Every command
writes ``<out>.meta.json`` with its resolved arguments.  ``TC_LOG`` sets the
log level (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__, io as kio
from .citest import DataCI, TestSchedule
from .discovery import classify_error, vcsgs
from .estimation import conditional_probability_distance, edge_estimation
from .harness import ExperimentConfig, psi_classify, run_experiment, summarize
from .scm import ModelConstraints, random_model, validate_model

log = logging.getLogger("ktriangle")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _version() -> str:
    return __version__


def _meta(args, **extra) -> dict:
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    return {"command": args.command, "args": resolved, "version": _version(), **extra}


def _write_meta(out, args, **extra) -> None:
    kio.write_json(kio.sidecar_path(out), _meta(args, **extra))


# ---------------------------------------------------------------- commands


def cmd_generate(args) -> int:
    cons = ModelConstraints(k=args.k, L=args.L, T=args.T, n_vars=args.vars, max_degree=args.max_degree,
                            edge_prob=args.edge_prob, cardinality=args.cardinality)
    m, info = random_model(args.family, cons, seed=args.seed, return_info=True)
    kio.save_model(args.out, m)
    failed = validate_model(kio.load_model(args.out), cons)
    if failed:
        raise RuntimeError(f"reloaded model fails the {failed} validator")
    _write_meta(args.out, args, attempts=info.attempts)
    return 0


def cmd_sample(args) -> int:
    m = kio.load_model(args.model)
    data = m.sample(args.n, args.seed)
    kio.save_dataset(args.out, data, {"command": "sample", "args": _meta(args)["args"], "version": _version()})
    return 0


def cmd_discover(args) -> int:
    data = kio.load_dataset(args.data)
    schedule = TestSchedule(args.schedule_c) if args.schedule_c is not None else None
    ci = DataCI(data, schedule)
    out = vcsgs(ci, data.names, max_vars=args.max_vars)
    kio.save_graph(args.out, out.graph)
    if args.trace:
        kio.write_json(args.trace, out.trace)
    _write_meta(args.out, args, resolved_schedule_c=ci.schedule.c, step5_passed=out.step5_passed)
    return 0


def cmd_estimate(args) -> int:
    data = kio.load_dataset(args.data)
    graph = kio.load_graph(args.graph)
    est = edge_estimation(graph, data, args.L, args.T)
    kio.save_estimate(args.out, est)
    _write_meta(args.out, args, aborted=est.aborted)
    return 0


def cmd_evaluate(args) -> int:
    m = kio.load_model(args.model)
    result = {}
    if args.estimate:
        est = kio.load_estimate(args.estimate)
        result["distance"] = conditional_probability_distance(est, m, strict=args.strict)
        result["exceeded"] = bool(result["distance"] > args.delta)
    if args.graph:
        g = kio.load_graph(args.graph)
        err = classify_error(g, m.dag)
        result["error_kind"] = err.kind.value
        result["witness"] = err.witness
        result["psi_class"] = psi_classify(g, m.dag)
    if not result:
        raise UsageError("evaluate: give --estimate and/or --graph")
    text = json.dumps(result, indent=1)
    if args.out:
        kio.atomic_write(args.out, text + "\n")
        _write_meta(args.out, args)
    else:
        print(text)
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_dict(kio.read_json(args.config)) if args.config else ExperimentConfig()
    report = run_experiment(cfg, jobs=args.jobs)
    kio.atomic_write(args.out, report.to_csv())
    failures = [{"model_id": r.model_id, "n": r.n, "replicate": r.replicate, "failure": r.failure}
                for r in report.rows if r.failure]
    _write_meta(args.out, args, config=cfg.to_dict(), seeds=report.seeds(), failures=failures)
    for key, s in summarize(report, ("n",)).items():
        log.info("n=%d error=%.3f exceed=%.3f", key[0], s.error_rate, s.exceed_rate)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ktriangle", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=_version())
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="draw a random model satisfying the validators")
    g.add_argument("--family", choices=("discrete", "continuous", "gaussian"), default="discrete")
    g.add_argument("--vars", type=int, default=5)
    g.add_argument("--max-degree", type=int, default=2)
    g.add_argument("--edge-prob", type=float, default=0.5)
    g.add_argument("--cardinality", type=int, default=2)
    g.add_argument("--k", type=float, default=0.3)
    g.add_argument("--L", type=float, default=1.0)
    g.add_argument("--T", type=float, default=0.05)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("sample", help="draw an i.i.d. dataset from a model file")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    d = sub.add_parser("discover", help="run VCSGS on a dataset")
    d.add_argument("--data", required=True)
    d.add_argument("--schedule-c", type=float, default=None,
                   help="threshold multiplier (default: 0.115 on discrete data, 0.5 otherwise)")
    d.add_argument("--max-vars", type=int, default=12)
    d.add_argument("--out", required=True)
    d.add_argument("--trace")
    d.set_defaults(func=cmd_discover)

    e = sub.add_parser("estimate", help="estimate parent conditionals for oriented vertices")
    e.add_argument("--data", required=True)
    e.add_argument("--graph", required=True)
    e.add_argument("--L", type=float, default=1.0)
    e.add_argument("--T", type=float, default=0.05)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser("evaluate", help="distance and error kind against a true model")
    v.add_argument("--model", required=True)
    v.add_argument("--estimate")
    v.add_argument("--graph")
    v.add_argument("--delta", type=float, default=0.1)
    v.add_argument("--strict", action="store_true", help="require estimated parents to equal the true parents")
    v.add_argument("--out")
    v.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="Monte-Carlo sweep to a CSV report")
    x.add_argument("--config", help="JSON file of ExperimentConfig fields (defaults otherwise)")
    x.add_argument("--out", required=True)
    x.add_argument("--jobs", type=int, default=1)
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    level = os.environ.get("TC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"ktriangle {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
