"""Command-line entry point.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 malformed config,
4 config validation failure, 5 training diverged, 6 I/O failure.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import harness
from .cond_layer import ConditionalLayer, CreditStrategy
from .config import RunConfig, parse_config, validate
from .errors import ConfigError, DivergenceError, ModelFormatError, ValidationError
from .model_io import save_model
from .optimizer import OptimizerConfig
from .prefix_weights import count_parameters

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_VALIDATION = 4
EXIT_DIVERGENCE = 5
EXIT_IO = 6

log = logging.getLogger("ccnet")


def _load_config(args):
    cfg = parse_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return validate(cfg)


def _emit(text, out):
    if out and out != "-":
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build(cfg):
    task = harness.gen_region_task(cfg.p, cfg.q, cfg.k, m=cfg.gate_length,
                                   n_samples=cfg.n_samples, noise_sigma=cfg.noise_sigma,
                                   seed=cfg.seed, input_low=cfg.input_low)
    layer = ConditionalLayer.create(cfg.p, cfg.q, cfg.k, np.random.default_rng(cfg.seed + 1),
                                    m=cfg.gate_length, mode=cfg.gating, tau=cfg.tau,
                                    selector=cfg.selector, activation=cfg.activation,
                                    eval_policy=cfg.eval_policy)
    strategy = CreditStrategy(cfg.strategy, cfg.st_temperature)
    opt = OptimizerConfig(cfg.epsilon, cfg.lam, cfg.reg_kind, cfg.baseline_decay)
    return task, layer, strategy, opt


def cmd_train(args):
    cfg = _load_config(args)
    task, layer, strategy, opt = _build(cfg)
    metrics = harness.train(layer, task, strategy, opt, cfg.epochs, cfg.seed)
    _emit(metrics.to_csv(), args.out or cfg.metrics_out)
    save_model(layer, args.model_out or cfg.model_out)
    log.info("final mse %.6g in %.2fs", metrics.final_mse, metrics.wall_time)
    return EXIT_OK


def cmd_compare(args):
    cfg = _load_config(args)
    task, _, strategy, opt = _build(cfg)
    cond, dense = harness.baseline_comparison(task, strategy, opt, cfg.epochs, cfg.seed)
    _emit(harness.comparison_csv(cond, dense), args.out)
    return EXIT_OK


def cmd_gradcheck(args):
    report = harness.gradcheck_suite(seed=args.seed or 0, n_configs=args.configs)
    _emit(report.to_text(), args.out)
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_params(args):
    report = count_parameters(args.p, args.q, args.k)
    _emit(json.dumps(report.as_dict(), indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_bench(args):
    rows = harness.cost_report(args.p, args.q, args.k_values, seed=args.seed or 0)
    cols = ["k", "params_exact", "params_nominal", "fwd_madds", "fwd_adds", "fwd_lookups",
            "ratio_gain"]
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(format(row[c], ".17g") if isinstance(row[c], float) else str(row[c])
                              for c in cols))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_oracle_check(args):
    seed = args.seed or 0
    results = [harness.traversal_oracle_suite(seed)] + harness.decay_equivalence_suite(seed)
    lines = ["suite,max_error,tolerance,status"]
    for r in results:
        lines.append(f"{r.name},{r.max_error:.3e},{r.tol:g},{'ok' if r.passed else 'FAIL'}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def build_parser():
    parser = argparse.ArgumentParser(prog="ccnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, config=False):
        if config:
            sp.add_argument("--config", metavar="PATH", help="JSON run configuration")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        return sp

    sp = common(sub.add_parser("train", help="train on a synthetic region task"), config=True)
    sp.add_argument("--model-out", metavar="PATH", help="model file (default: config model_out)")
    sp.set_defaults(func=cmd_train)

    sp = common(sub.add_parser("compare", help="conditional vs equal-cost dense layer"),
                config=True)
    sp.set_defaults(func=cmd_compare)

    sp = common(sub.add_parser("gradcheck", help="finite-difference gradient checks"))
    sp.add_argument("--configs", type=int, default=50)
    sp.set_defaults(func=cmd_gradcheck)

    sp = common(sub.add_parser("params", help="parameter counts as JSON"))
    for name in ("p", "q", "k"):
        sp.add_argument(f"--{name}", type=int, required=True)
    sp.set_defaults(func=cmd_params)

    sp = common(sub.add_parser("bench", help="measured forward cost per depth as CSV"))
    sp.add_argument("--p", type=int, default=8)
    sp.add_argument("--q", type=int, default=8)
    sp.add_argument("--k-values", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6, 7, 8])
    sp.set_defaults(func=cmd_bench)

    sp = common(sub.add_parser("oracle-check", help="traversal and lazy-decay oracle suites"))
    sp.set_defaults(func=cmd_oracle_check)
    return parser


def run_command(argv):
    if os.environ.get("CCNET_LOG", "").lower() == "debug":
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"ccnet: invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConfigError, ModelFormatError) as exc:
        print(f"ccnet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"ccnet: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as exc:
        print(f"ccnet: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main():
    sys.exit(run_command(sys.argv[1:]))
